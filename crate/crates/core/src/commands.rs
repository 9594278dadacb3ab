//! The four command-line verbs, as library functions writing into an output
//! directory.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, InitialSpec, RunConfig};
use crate::dynamics::{
    classify, degenerate_mu_star, find_mu_star, sweep, Classification, MuStarError,
    MuStarIteration, MuStarOutcome, MuStarSettings, SweepSpec, Tolerances, Verdict,
    MAX_BISECTIONS,
};
use crate::output::{
    profile_file_name, read_profile_csv, write_fronts_csv, write_json, write_profile_csv,
    write_sweep_csv, DirLock, OutputError, SweepRow,
};
use crate::params::ParamValues;
use crate::solver::{run, InitialData, Numerics, RunMeta, SolverError};
use crate::thresholds::ThresholdReport;

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error("solver failed: {0}")]
    Solver(SolverError),
    #[error("threshold search failed: {0}")]
    Search(MuStarError),
}

impl CommandError {
    /// 1 for anything the user can fix in the input, 2 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Config(_) | CommandError::Invalid(_) | CommandError::Output(_) => 1,
            CommandError::Solver(_) => 2,
            CommandError::Search(e) => match e {
                MuStarError::InvalidBracket(_) | MuStarError::Param(_) => 1,
                MuStarError::BudgetExhausted(_) => 2,
                MuStarError::Solver { source, .. } => solver_exit_code(source),
            },
        }
    }
}

fn solver_exit_code(e: &SolverError) -> i32 {
    match e {
        SolverError::InvalidNumerics(_) | SolverError::InvalidInitialData(_) => 1,
        SolverError::EmptyInterval { .. } | SolverError::StepRejected { .. } => 2,
    }
}

impl From<SolverError> for CommandError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::InvalidNumerics(m) => CommandError::Invalid(format!("invalid numerics: {m}")),
            SolverError::InvalidInitialData(m) => {
                CommandError::Invalid(format!("invalid initial data: {m}"))
            }
            other => CommandError::Solver(other),
        }
    }
}

/// Turn the configured initial-data choice into solver input.
pub fn resolve_initial(config: &RunConfig) -> Result<InitialData, CommandError> {
    Ok(match &config.initial {
        InitialSpec::Default => InitialData::default_cosine(&config.params),
        InitialSpec::Cosine { c_b, c_m } => InitialData::Cosine {
            c_b: *c_b,
            c_m: *c_m,
        },
        InitialSpec::Profile { path } => {
            let profile = read_profile_csv(path)?;
            InitialData::Sampled {
                i_b: profile.i_b,
                i_m: profile.i_m,
            }
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumericsSummary {
    pub requested: Numerics,
    pub tolerances: Tolerances,
    pub meta: RunMeta,
    pub runtime_s: f64,
}

/// Contents of `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub params: ParamValues,
    pub initial: InitialSpec,
    pub thresholds: ThresholdReport,
    pub classification: Classification,
    pub numerics: NumericsSummary,
    pub files: Vec<String>,
}

pub fn command_run(config: &RunConfig, out: &Path) -> Result<RunSummary, CommandError> {
    let init = resolve_initial(config)?;
    let _lock = DirLock::acquire(out)?;
    let start = Instant::now();
    let record = run(&config.params, &init, &config.numerics)?;
    let runtime_s = start.elapsed().as_secs_f64();
    let classification = classify(&record, &config.params, &config.tolerances);

    let mut files = vec!["fronts.csv".to_string()];
    write_fronts_csv(&out.join("fronts.csv"), &record.samples)?;
    for snap in &record.snapshots {
        let name = profile_file_name(snap.t);
        write_profile_csv(&out.join(&name), snap)?;
        files.push(name);
    }
    files.push("summary.json".to_string());
    let summary = RunSummary {
        params: config.params.values(),
        initial: config.initial.clone(),
        thresholds: ThresholdReport::compute(&config.params),
        classification,
        numerics: NumericsSummary {
            requested: config.numerics.clone(),
            tolerances: config.tolerances,
            meta: record.meta.clone(),
            runtime_s,
        },
        files,
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

/// Contents of `thresholds.json`; absent quantities are `null`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdsFile {
    pub params: ParamValues,
    #[serde(flatten)]
    pub report: ThresholdReport,
}

pub fn command_thresholds(config: &RunConfig, out: &Path) -> Result<ThresholdsFile, CommandError> {
    let _lock = DirLock::acquire(out)?;
    let file = ThresholdsFile {
        params: config.params.values(),
        report: ThresholdReport::compute(&config.params),
    };
    write_json(&out.join("thresholds.json"), &file)?;
    Ok(file)
}

/// `mu_star` is a number, or the string `"infinity"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MuStarValue {
    Finite(f64),
    Sentinel(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BracketSummary {
    pub mu_lo: f64,
    pub mu_hi: f64,
    pub width: f64,
    pub tol_mu: f64,
    pub verdict_lo: Verdict,
    pub verdict_hi: Verdict,
    pub lo_flagged: bool,
    pub iterations: u32,
}

/// Contents of `mu_star.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuStarFile {
    pub mu_star: MuStarValue,
    pub note: Option<String>,
    pub bracket: Option<BracketSummary>,
    pub log: Vec<MuStarIteration>,
    pub thresholds: ThresholdReport,
}

pub fn command_mu_star(config: &RunConfig, out: &Path) -> Result<MuStarFile, CommandError> {
    let thresholds = ThresholdReport::compute(&config.params);
    let outcome = match degenerate_mu_star(&config.params) {
        Some(o) => o,
        None => {
            let (Some(mu_lo), Some(mu_hi)) = (config.mu_lo, config.mu_hi) else {
                return Err(CommandError::Invalid(
                    "mu_lo and mu_hi are required to search for the threshold".into(),
                ));
            };
            let settings = MuStarSettings {
                mu_lo,
                mu_hi,
                tol_mu: config.tol_mu,
                max_bisections: MAX_BISECTIONS,
            };
            let init = resolve_initial(config)?;
            find_mu_star(&config.params, &init, &config.numerics, &config.tolerances, &settings)
                .map_err(CommandError::Search)?
        }
    };
    let _lock = DirLock::acquire(out)?;
    let file = match outcome {
        MuStarOutcome::Zero { note } => MuStarFile {
            mu_star: MuStarValue::Finite(0.0),
            note: Some(note),
            bracket: None,
            log: Vec::new(),
            thresholds,
        },
        MuStarOutcome::Infinite { note } => MuStarFile {
            mu_star: MuStarValue::Sentinel("infinity".into()),
            note: Some(note),
            bracket: None,
            log: Vec::new(),
            thresholds,
        },
        MuStarOutcome::Bracket(b) => MuStarFile {
            mu_star: MuStarValue::Finite(b.estimate()),
            note: b.lo_flagged.then(|| {
                "the low end stayed undetermined after doubling t_max and was counted as vanishing"
                    .to_string()
            }),
            bracket: Some(BracketSummary {
                mu_lo: b.mu_lo,
                mu_hi: b.mu_hi,
                width: b.width(),
                tol_mu: MuStarSettings {
                    mu_lo: config.mu_lo.unwrap_or(0.0),
                    mu_hi: config.mu_hi.unwrap_or(0.0),
                    tol_mu: config.tol_mu,
                    max_bisections: MAX_BISECTIONS,
                }
                .effective_tol(),
                verdict_lo: b.verdict_lo,
                verdict_hi: b.verdict_hi,
                lo_flagged: b.lo_flagged,
                iterations: b.iterations,
            }),
            log: b.log,
            thresholds,
        },
    };
    write_json(&out.join("mu_star.json"), &file)?;
    Ok(file)
}

pub fn command_sweep(
    config: &RunConfig,
    spec: &SweepSpec,
    out: &Path,
) -> Result<Vec<SweepRow>, CommandError> {
    let init = resolve_initial(config)?;
    let _lock = DirLock::acquire(out)?;
    let entries = sweep(&config.params, &init, &config.numerics, &config.tolerances, spec);
    for e in &entries {
        if let Err(msg) = &e.outcome {
            eprintln!("warning: {}={}: {msg}", spec.name, e.value);
        }
    }
    let rows: Vec<SweepRow> = entries.iter().map(SweepRow::from_entry).collect();
    write_sweep_csv(&out.join("sweep.csv"), &rows)?;
    Ok(rows)
}

/// Output directory: the command-line value, then the config's `out`, then `out`.
pub fn output_dir(flag: Option<&Path>, config: &RunConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}
