use proptest::prelude::*;

use wnv_fronts::config::{
    parse_config, preset, serialize_config, InitialSpec, PopulationForm, RunConfig, PRESETS,
};
use wnv_fronts::dynamics::{SweepSpec, Tolerances};
use wnv_fronts::solver::{FrontIntegrator, Numerics, StepOptions};
use wnv_fronts::{ModelParams, ParamName, ParamValues};

const FIG1_TEXT: &str = r#"
d1 = 4.0
alpha_b = 0.88
alpha_m = 0.16
beta_b = 0.09
gamma_b = 0.6
d_m = 0.029
am_over_nb = 20.0
mu = 0.1
h0 = 4
t_max = 200
"#;

#[test]
fn all_presets_parse() {
    for p in PRESETS {
        let c = parse_config(p.text).unwrap_or_else(|e| panic!("{}: {e}", p.name));
        assert!(matches!(c.initial, InitialSpec::Cosine { .. }), "{} must state its amplitudes", p.name);
    }
}

#[test]
fn fig1_preset_is_the_fig1_parameter_set() {
    let c = preset("fig1").unwrap();
    assert_eq!(c.params, ModelParams::fig1());
    assert_eq!(c.population_form, PopulationForm::Ratio);
    assert_eq!(preset("fig2").unwrap().params, ModelParams::fig2());
}

#[test]
fn minimal_text_uses_defaults() {
    let c = parse_config(FIG1_TEXT).unwrap();
    assert_eq!(c.params, ModelParams::fig1());
    assert_eq!(c.initial, InitialSpec::Default);
    assert_eq!(c.numerics.m, 199);
    assert_eq!(c.tolerances, Tolerances::default());
    assert_eq!(c.numerics.t_max, 200.0);
}

#[test]
fn json_is_an_alternative_encoding() {
    let json = r#"{"d1": 4.0, "alpha_b": 0.88, "alpha_m": 0.16, "beta_b": 0.09,
        "gamma_b": 0.6, "d_m": 0.029, "a_m": 20.0, "n_b": 1.0, "mu": 0.1, "h0": 4.0,
        "t_max": 200.0, "m": 99, "snapshot_times": [0, 100]}"#;
    let c = parse_config(json).unwrap();
    assert_eq!(c.params, ModelParams::fig1());
    assert_eq!(c.numerics.m, 99);
    assert_eq!(c.numerics.snapshot_times, vec![0.0, 100.0]);
    assert_eq!(c.population_form, PopulationForm::Explicit);
}

#[test]
fn empty_text_lists_every_required_key() {
    let err = parse_config("").unwrap_err();
    for key in [
        "d1", "alpha_b", "alpha_m", "beta_b", "gamma_b", "d_m", "mu", "h0", "t_max", "a_m", "n_b",
    ] {
        assert!(err.mentions(key), "missing {key} in {err}");
    }
}

#[test]
fn population_forms_are_exclusive() {
    let text = format!("{FIG1_TEXT}a_m = 20.0\nn_b = 1.0\n");
    let err = parse_config(&text).unwrap_err();
    assert!(err.mentions("am_over_nb"), "{err}");
}

#[test]
fn every_violation_is_reported() {
    let text = FIG1_TEXT
        .replace("d1 = 4.0", "d1 = -4.0")
        .replace("alpha_b = 0.88", "alpha_b = 1.5")
        .replace("t_max = 200", "t_max = -1\nm = 3\nbogus = 1\ndt = 0");
    let err = parse_config(&text).unwrap_err();
    for key in ["d1", "alpha_b", "t_max", "m", "bogus", "dt"] {
        assert!(err.mentions(key), "missing {key} in {err}");
    }
    assert_eq!(err.violations.len(), 6, "{err}");
}

#[test]
fn amplitude_and_snapshot_checks() {
    let text = format!("{FIG1_TEXT}c_b = 2.0\nc_m = 5.0\nsnapshot_times = [0.0, 300.0]\n");
    let err = parse_config(&text).unwrap_err();
    assert!(err.mentions("c_b") && err.mentions("snapshot_times"), "{err}");
    let err = parse_config(&format!("{FIG1_TEXT}c_b = 0.5\n")).unwrap_err();
    assert!(err.mentions("c_m"));
    let err = parse_config(&format!("{FIG1_TEXT}c_b = 0.5\nc_m = 1.0\nprofile = \"x.csv\"\n")).unwrap_err();
    assert!(err.mentions("profile"));
}

#[test]
fn malformed_text_is_a_violation() {
    assert!(parse_config("d1 = = 3").is_err());
    assert!(parse_config("{ not json").is_err());
    assert!(parse_config(&format!("{FIG1_TEXT}front_integrator = \"rk4\"\n")).is_err());
    assert!(parse_config(&format!("{FIG1_TEXT}vary = \"mu=1:2\"\n")).is_err());
}

fn arb_config() -> impl Strategy<Value = RunConfig> {
    let params = (
        (1e-3f64..10.0, 0.01f64..=1.0, 0.01f64..=1.0, 1e-3f64..5.0),
        (1e-3f64..2.0, 1e-3f64..1.0, 0.1f64..10.0, 0.1f64..100.0),
        (1e-4f64..5.0, 0.1f64..20.0),
        any::<bool>(),
    )
        .prop_map(|((d1, alpha_b, alpha_m, beta_b), (gamma_b, d_m, n_b, a_m), (mu, h0), ratio)| {
            let values = ParamValues {
                d1,
                alpha_b,
                alpha_m,
                beta_b,
                gamma_b,
                d_m,
                n_b: if ratio { 1.0 } else { n_b },
                a_m,
                mu,
                h0,
            };
            let form = if ratio {
                PopulationForm::Ratio
            } else {
                PopulationForm::Explicit
            };
            (ModelParams::new(values).unwrap(), form)
        });
    let numerics = (
        16usize..400,
        proptest::option::of(1e-4f64..1.0),
        0.0f64..1000.0,
        proptest::option::of(1e-3f64..10.0),
        proptest::collection::vec(0.0f64..1.0, 0..4),
        any::<bool>(),
        1e-3f64..0.5,
    )
        .prop_map(|(m, dt, t_max, sample_interval, fractions, heun, gain)| Numerics {
            m,
            dt,
            t_max,
            sample_interval,
            snapshot_times: fractions.iter().map(|f| f * t_max).collect(),
            step: StepOptions {
                front_integrator: if heun {
                    FrontIntegrator::Heun
                } else {
                    FrontIntegrator::Euler
                },
                reaction_gain: gain,
            },
        });
    let extras = (
        0u8..3,
        0.01f64..=1.0,
        0.01f64..=1.0,
        (1e-8f64..1.0, 1e-8f64..1.0),
        proptest::option::of((1e-3f64..1.0, 1.0f64..2.0)),
        proptest::option::of(1e-6f64..1.0),
        any::<bool>(),
    );
    (params, numerics, extras).prop_map(
        |((params, population_form), numerics, (init_kind, fb, fm, (eps_norm, eps_speed), bracket, tol_mu, with_vary))| {
            let initial = match init_kind {
                0 => InitialSpec::Default,
                1 => InitialSpec::Cosine {
                    c_b: fb * params.n_b(),
                    c_m: fm * params.a_m(),
                },
                _ => InitialSpec::Profile {
                    path: "start profile.csv".into(),
                },
            };
            RunConfig {
                params,
                population_form,
                initial,
                numerics,
                tolerances: Tolerances { eps_norm, eps_speed },
                mu_lo: bracket.map(|b| b.0),
                mu_hi: bracket.map(|b| b.0 * b.1 + 1e-3),
                tol_mu,
                vary: with_vary.then(|| SweepSpec::new(ParamName::BetaB, 0.05, 0.1, 0.01).unwrap()),
                out: with_vary.then(|| "runs/out dir".into()),
            }
        },
    )
}

proptest! {
    #[test]
    fn serialize_then_parse_is_identity(c in arb_config()) {
        let text = serialize_config(&c);
        let back = parse_config(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(back, c);
    }
}
