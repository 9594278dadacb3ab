use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wnv_fronts::commands::{
    command_mu_star, command_run, command_sweep, command_thresholds, output_dir, CommandError,
    MuStarValue,
};
use wnv_fronts::config::{from_raw, parse_override, parse_raw, preset_text, InitialSpec, RunConfig, Value};
use wnv_fronts::dynamics::SweepSpec;

#[derive(Parser)]
#[command(name = "wnv-fronts", version, about = "Free-boundary West Nile virus simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate and write fronts.csv, profile_<t>.csv and summary.json.
    Run(Common),
    /// Write thresholds.json without simulating.
    Thresholds(Common),
    /// Bisect for the critical expansion capability and write mu_star.json.
    MuStar {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mu_lo: Option<f64>,
        #[arg(long)]
        mu_hi: Option<f64>,
        #[arg(long)]
        tol_mu: Option<f64>,
    },
    /// Run one simulation per parameter value and write sweep.csv.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// name=lo:hi:step
        #[arg(long)]
        vary: Option<String>,
    },
}

#[derive(Args)]
struct Common {
    /// Config file (TOML, or JSON).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Shipped preset: fig1, fig2, r0-subcritical or barrier-demo.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override any config key, e.g. --set beta_b=0.08. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    m: Option<i64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
}

fn load(common: &Common, extra: &[(&str, Option<f64>)]) -> Result<RunConfig, CommandError> {
    let (text, base) = match (&common.config, &common.preset) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CommandError::Invalid(format!("{}: {e}", path.display())))?;
            (text, path.parent().map(Path::to_path_buf))
        }
        (None, Some(name)) => {
            let text = preset_text(name)
                .ok_or_else(|| CommandError::Invalid(format!("unknown preset {name:?}")))?;
            (text.to_string(), None)
        }
        (None, None) => {
            return Err(CommandError::Invalid("give --config FILE or --preset NAME".into()))
        }
    };
    let mut raw = parse_raw(&text)?;
    for spec in &common.set {
        let (k, v) = parse_override(spec)?;
        raw.insert(k, v);
    }
    let numeric = [("t_max", common.t_max), ("dt", common.dt), ("mu", common.mu)];
    for (k, v) in numeric.iter().chain(extra) {
        if let Some(x) = v {
            raw.insert(k.to_string(), Value::Number(*x));
        }
    }
    // A shorter --t-max drops the file's later snapshots instead of failing on them.
    if let (Some(t_max), Some(Value::List(times))) = (common.t_max, raw.get_mut("snapshot_times")) {
        let before = times.len();
        times.retain(|&t| t <= t_max);
        if times.len() < before {
            eprintln!("note: dropped {} snapshot time(s) beyond t_max = {t_max}", before - times.len());
        }
    }
    if let Some(m) = common.m {
        raw.insert("m".into(), Value::Integer(m));
    }
    let mut config = from_raw(&raw)?;
    if let (InitialSpec::Profile { path }, Some(base)) = (&mut config.initial, base) {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
    Ok(config)
}

fn execute(cli: Cli) -> Result<(), CommandError> {
    match cli.command {
        Command::Run(common) => {
            let config = load(&common, &[])?;
            let out = output_dir(common.out.as_deref(), &config);
            let summary = command_run(&config, &out)?;
            println!(
                "{}: verdict {}, r0 = {}, {} steps",
                out.display(),
                summary.classification.verdict,
                summary.thresholds.r0,
                summary.numerics.meta.steps
            );
        }
        Command::Thresholds(common) => {
            let config = load(&common, &[])?;
            let out = output_dir(common.out.as_deref(), &config);
            let t = command_thresholds(&config, &out)?;
            println!(
                "{}: r0 = {}, r0f_initial = {}",
                out.join("thresholds.json").display(),
                t.report.r0,
                t.report.r0f_initial
            );
        }
        Command::MuStar {
            common,
            mu_lo,
            mu_hi,
            tol_mu,
        } => {
            let config = load(&common, &[("mu_lo", mu_lo), ("mu_hi", mu_hi), ("tol_mu", tol_mu)])?;
            let out = output_dir(common.out.as_deref(), &config);
            let file = command_mu_star(&config, &out)?;
            match (&file.mu_star, &file.bracket) {
                (_, Some(b)) => println!("mu* in [{}, {}]", b.mu_lo, b.mu_hi),
                (MuStarValue::Finite(x), None) => println!("mu* = {x}"),
                (MuStarValue::Sentinel(s), None) => println!("mu* = {s}"),
            }
            if let Some(note) = &file.note {
                println!("{note}");
            }
        }
        Command::Sweep { common, vary } => {
            let config = load(&common, &[])?;
            let spec: SweepSpec = match vary {
                Some(s) => s
                    .parse()
                    .map_err(|e: wnv_fronts::dynamics::SweepSpecError| CommandError::Invalid(e.to_string()))?,
                None => config
                    .vary
                    .ok_or_else(|| CommandError::Invalid("give --vary name=lo:hi:step".into()))?,
            };
            let out = output_dir(common.out.as_deref(), &config);
            let rows = command_sweep(&config, &spec, &out)?;
            println!("{}: {} rows", out.join("sweep.csv").display(), rows.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
