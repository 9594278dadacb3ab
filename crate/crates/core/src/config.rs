//! Run configuration: a flat table of named scalars plus the
//! `snapshot_times` list, written as TOML or as a JSON object.
//!
//! ```toml
//! d1 = 4.0
//! alpha_b = 0.88
//! alpha_m = 0.16
//! beta_b = 0.09
//! gamma_b = 0.6
//! d_m = 0.029
//! am_over_nb = 20.0      # or both a_m and n_b
//! mu = 0.1
//! h0 = 4.0
//! c_b = 0.5              # or profile = "start.csv"
//! c_m = 10.0
//! t_max = 200.0
//! snapshot_times = [0.0, 100.0, 200.0]
//! ```
//!
//! Optional keys: `m`, `dt`, `sample_interval`, `front_integrator`
//! (`"euler"` or `"heun"`), `reaction_gain`, `eps_norm`, `eps_speed`,
//! `mu_lo`, `mu_hi`, `tol_mu`, `vary`, `out`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{SweepSpec, Tolerances, DEFAULT_EPS_NORM, DEFAULT_EPS_SPEED};
use crate::params::{ModelParams, ParamName, ParamValues};
use crate::solver::{FrontIntegrator, Numerics, StepOptions, DEFAULT_REACTION_GAIN, MIN_INTERIOR_NODES};

/// A single problem with a config key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub key: String,
    pub reason: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.reason)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub struct ConfigError {
    pub violations: Vec<Violation>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration")?;
        for v in &self.violations {
            write!(f, "\n  {v}")?;
        }
        Ok(())
    }
}

impl ConfigError {
    fn single(key: &str, reason: impl Into<String>) -> Self {
        ConfigError {
            violations: vec![Violation {
                key: key.to_string(),
                reason: reason.into(),
            }],
        }
    }

    pub fn mentions(&self, key: &str) -> bool {
        self.violations.iter().any(|v| v.key == key)
    }
}

/// Scalar or list value of one key, independent of the text encoding.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Number(f64),
    Integer(i64),
    Text(String),
    List(Vec<f64>),
}

/// Key-value table prior to validation. Command-line overrides are applied
/// at this level so that they are checked like any other entry.
pub type RawConfig = BTreeMap<String, Value>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialSpec {
    /// Cosine bumps at half the populations.
    Default,
    Cosine { c_b: f64, c_m: f64 },
    /// A profile CSV (`x,i_b,i_m`) sampled on the grid nodes.
    Profile { path: PathBuf },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PopulationForm {
    /// `a_m` and `n_b` given separately.
    Explicit,
    /// Only `am_over_nb` given, with `n_b = 1`.
    Ratio,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub params: ModelParams,
    pub population_form: PopulationForm,
    pub initial: InitialSpec,
    pub numerics: Numerics,
    pub tolerances: Tolerances,
    pub mu_lo: Option<f64>,
    pub mu_hi: Option<f64>,
    pub tol_mu: Option<f64>,
    pub vary: Option<SweepSpec>,
    pub out: Option<PathBuf>,
}

const BIOLOGICAL: [ParamName; 7] = [
    ParamName::D1,
    ParamName::AlphaB,
    ParamName::AlphaM,
    ParamName::BetaB,
    ParamName::GammaB,
    ParamName::DM,
    ParamName::Mu,
];

const OPTIONAL_KEYS: [&str; 17] = [
    "a_m",
    "n_b",
    "am_over_nb",
    "c_b",
    "c_m",
    "profile",
    "m",
    "dt",
    "sample_interval",
    "snapshot_times",
    "front_integrator",
    "reaction_gain",
    "eps_norm",
    "eps_speed",
    "mu_lo",
    "mu_hi",
    "tol_mu",
];

const TRAILING_KEYS: [&str; 2] = ["vary", "out"];

/// Every key the parser understands.
pub fn known_keys() -> Vec<&'static str> {
    let mut keys: Vec<&'static str> = BIOLOGICAL.iter().map(|p| p.as_str()).collect();
    keys.extend(["h0", "t_max"]);
    keys.extend(OPTIONAL_KEYS);
    keys.extend(TRAILING_KEYS);
    keys
}

/// Parse TOML, or JSON when the text starts with `{`, into a raw table.
pub fn parse_raw(text: &str) -> Result<RawConfig, ConfigError> {
    if text.trim_start().starts_with('{') {
        let map: serde_json::Map<String, serde_json::Value> = serde_json::from_str(text)
            .map_err(|e| ConfigError::single("<json>", e.to_string()))?;
        let mut raw = RawConfig::new();
        let mut bad = Vec::new();
        for (k, v) in map {
            match json_value(&v) {
                Some(value) => {
                    raw.insert(k, value);
                }
                None => bad.push(Violation {
                    key: k,
                    reason: "expected a number, a string or a list of numbers".into(),
                }),
            }
        }
        if bad.is_empty() {
            Ok(raw)
        } else {
            Err(ConfigError { violations: bad })
        }
    } else {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::single("<toml>", e.to_string()))?;
        let mut raw = RawConfig::new();
        let mut bad = Vec::new();
        for (k, v) in table {
            match toml_value(&v) {
                Some(value) => {
                    raw.insert(k, value);
                }
                None => bad.push(Violation {
                    key: k,
                    reason: "expected a number, a string or a list of numbers".into(),
                }),
            }
        }
        if bad.is_empty() {
            Ok(raw)
        } else {
            Err(ConfigError { violations: bad })
        }
    }
}

fn json_value(v: &serde_json::Value) -> Option<Value> {
    use serde_json::Value as J;
    match v {
        J::Number(n) => match n.as_i64() {
            Some(i) if !n.is_f64() => Some(Value::Integer(i)),
            _ => n.as_f64().map(Value::Number),
        },
        J::String(s) => Some(Value::Text(s.clone())),
        J::Array(items) => items
            .iter()
            .map(|x| x.as_f64())
            .collect::<Option<Vec<f64>>>()
            .map(Value::List),
        _ => None,
    }
}

fn toml_value(v: &toml::Value) -> Option<Value> {
    use toml::Value as T;
    match v {
        T::Float(x) => Some(Value::Number(*x)),
        T::Integer(i) => Some(Value::Integer(*i)),
        T::String(s) => Some(Value::Text(s.clone())),
        T::Array(items) => items
            .iter()
            .map(|x| match x {
                T::Float(f) => Some(*f),
                T::Integer(i) => Some(*i as f64),
                _ => None,
            })
            .collect::<Option<Vec<f64>>>()
            .map(Value::List),
        _ => None,
    }
}

/// Parse and validate configuration text, reporting every violation.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    from_raw(&parse_raw(text)?)
}

/// Parse a `key=value` override. The value is read as a number when it
/// looks like one, as a comma-separated list for `snapshot_times`, and as
/// text otherwise.
pub fn parse_override(spec: &str) -> Result<(String, Value), ConfigError> {
    let (key, value) = spec
        .split_once('=')
        .ok_or_else(|| ConfigError::single(spec, "override must look like key=value"))?;
    let key = key.trim().to_string();
    let value = value.trim();
    if key == "snapshot_times" {
        let list = value
            .trim_matches(|c| c == '[' || c == ']')
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|_| ConfigError::single(&key, format!("{value:?} is not a list of numbers")))?;
        return Ok((key, Value::List(list)));
    }
    if let Ok(i) = value.parse::<i64>() {
        return Ok((key, Value::Integer(i)));
    }
    if let Ok(x) = value.parse::<f64>() {
        return Ok((key, Value::Number(x)));
    }
    Ok((key, Value::Text(value.to_string())))
}

struct Reader<'a> {
    raw: &'a RawConfig,
    violations: Vec<Violation>,
}

impl Reader<'_> {
    fn fail(&mut self, key: &str, reason: impl Into<String>) {
        self.violations.push(Violation {
            key: key.to_string(),
            reason: reason.into(),
        });
    }

    fn number(&mut self, key: &str) -> Option<f64> {
        match self.raw.get(key)? {
            Value::Number(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            _ => {
                self.fail(key, "expected a number");
                None
            }
        }
    }

    fn required_number(&mut self, key: &str) -> Option<f64> {
        if !self.raw.contains_key(key) {
            self.fail(key, "missing required key");
            return None;
        }
        self.number(key)
    }

    fn text(&mut self, key: &str) -> Option<String> {
        match self.raw.get(key)? {
            Value::Text(s) => Some(s.clone()),
            _ => {
                self.fail(key, "expected a string");
                None
            }
        }
    }

    fn positive(&mut self, key: &str) -> Option<f64> {
        let x = self.number(key)?;
        if x > 0.0 && x.is_finite() {
            Some(x)
        } else {
            self.fail(key, format!("must be positive and finite, got {x}"));
            None
        }
    }
}

/// Validate a raw table.
pub fn from_raw(raw: &RawConfig) -> Result<RunConfig, ConfigError> {
    let known = known_keys();
    let mut r = Reader {
        raw,
        violations: Vec::new(),
    };
    for key in raw.keys() {
        if !known.contains(&key.as_str()) {
            r.fail(key, "unknown key");
        }
    }

    // Unset values stay at 1.0 so that the remaining checks can still run.
    let mut values = ParamValues {
        d1: 1.0,
        alpha_b: 1.0,
        alpha_m: 1.0,
        beta_b: 1.0,
        gamma_b: 1.0,
        d_m: 1.0,
        n_b: 1.0,
        a_m: 1.0,
        mu: 1.0,
        h0: 1.0,
    };
    let mut params_complete = true;
    for name in BIOLOGICAL.into_iter().chain([ParamName::H0]) {
        match r.required_number(name.as_str()) {
            Some(x) => values.set(name, x),
            None => params_complete = false,
        }
    }

    let has_pair = raw.contains_key("a_m") || raw.contains_key("n_b");
    let has_ratio = raw.contains_key("am_over_nb");
    let population_form = match (has_pair, has_ratio) {
        (true, true) => {
            r.fail(
                "am_over_nb",
                "give either a_m and n_b, or am_over_nb, not both",
            );
            params_complete = false;
            PopulationForm::Explicit
        }
        (false, false) => {
            r.fail("a_m", "missing required key (or give am_over_nb)");
            r.fail("n_b", "missing required key (or give am_over_nb)");
            params_complete = false;
            PopulationForm::Explicit
        }
        (true, false) => {
            for name in [ParamName::AM, ParamName::NB] {
                match r.required_number(name.as_str()) {
                    Some(x) => values.set(name, x),
                    None => params_complete = false,
                }
            }
            PopulationForm::Explicit
        }
        (false, true) => {
            match r.number("am_over_nb") {
                Some(x) => values.a_m = x,
                None => params_complete = false,
            }
            values.n_b = 1.0;
            PopulationForm::Ratio
        }
    };

    for v in values.violations() {
        if let crate::params::ParamError::Invalid { name, value, reason } = v {
            let key = if population_form == PopulationForm::Ratio && name == ParamName::AM {
                "am_over_nb"
            } else {
                name.as_str()
            };
            if raw.contains_key(key) {
                r.fail(key, format!("{reason}, got {value}"));
            }
            params_complete = false;
        }
    }

    let t_max = r.required_number("t_max");
    if let Some(t) = t_max {
        if !(t >= 0.0 && t.is_finite()) {
            r.fail("t_max", format!("must be finite and >= 0, got {t}"));
        }
    }
    let t_max = t_max.unwrap_or(0.0);

    let mut numerics = Numerics::new(t_max);
    match raw.get("m") {
        None => {}
        Some(Value::Integer(i)) if *i >= MIN_INTERIOR_NODES as i64 => numerics.m = *i as usize,
        Some(Value::Integer(i)) => r.fail("m", format!("need at least {MIN_INTERIOR_NODES} interior nodes, got {i}")),
        Some(_) => r.fail("m", "expected an integer"),
    }
    numerics.dt = r.positive("dt");
    numerics.sample_interval = r.positive("sample_interval");
    match raw.get("snapshot_times") {
        None => {}
        Some(Value::List(ts)) => {
            for &t in ts {
                if !(t >= 0.0 && t <= t_max) {
                    r.fail("snapshot_times", format!("{t} lies outside [0, t_max = {t_max}]"));
                }
            }
            numerics.snapshot_times = ts.clone();
        }
        Some(_) => r.fail("snapshot_times", "expected a list of numbers"),
    }
    let mut step = StepOptions::default();
    if let Some(name) = r.text("front_integrator") {
        match name.as_str() {
            "euler" => step.front_integrator = FrontIntegrator::Euler,
            "heun" => step.front_integrator = FrontIntegrator::Heun,
            other => r.fail("front_integrator", format!("expected \"euler\" or \"heun\", got {other:?}")),
        }
    }
    step.reaction_gain = r.positive("reaction_gain").unwrap_or(DEFAULT_REACTION_GAIN);
    numerics.step = step;

    let tolerances = Tolerances {
        eps_norm: r.positive("eps_norm").unwrap_or(DEFAULT_EPS_NORM),
        eps_speed: r.positive("eps_speed").unwrap_or(DEFAULT_EPS_SPEED),
    };

    let cosine = (raw.contains_key("c_b"), raw.contains_key("c_m"));
    let initial = match (raw.contains_key("profile"), cosine) {
        (true, (false, false)) => r
            .text("profile")
            .map(|p| InitialSpec::Profile { path: p.into() })
            .unwrap_or(InitialSpec::Default),
        (true, _) => {
            r.fail("profile", "give either a profile file or cosine amplitudes, not both");
            InitialSpec::Default
        }
        (false, (false, false)) => InitialSpec::Default,
        (false, (true, true)) => {
            let c_b = r.number("c_b");
            let c_m = r.number("c_m");
            if let Some(c) = c_b {
                if !(c > 0.0 && c <= values.n_b) {
                    r.fail("c_b", format!("must lie in (0, n_b = {}], got {c}", values.n_b));
                }
            }
            if let Some(c) = c_m {
                if !(c > 0.0 && c <= values.a_m) {
                    r.fail("c_m", format!("must lie in (0, a_m = {}], got {c}", values.a_m));
                }
            }
            InitialSpec::Cosine {
                c_b: c_b.unwrap_or(0.0),
                c_m: c_m.unwrap_or(0.0),
            }
        }
        (false, (b, _)) => {
            let missing = if b { "c_m" } else { "c_b" };
            r.fail(missing, "c_b and c_m must be given together");
            InitialSpec::Default
        }
    };

    let mu_lo = r.positive("mu_lo");
    let mu_hi = r.positive("mu_hi");
    if let (Some(lo), Some(hi)) = (mu_lo, mu_hi) {
        if lo >= hi {
            r.fail("mu_hi", format!("must exceed mu_lo = {lo}, got {hi}"));
        }
    }
    let tol_mu = r.positive("tol_mu");
    let vary = r.text("vary").and_then(|s| match s.parse::<SweepSpec>() {
        Ok(spec) => Some(spec),
        Err(e) => {
            r.fail("vary", e.to_string());
            None
        }
    });
    let out = r.text("out").map(PathBuf::from);

    if !r.violations.is_empty() || !params_complete {
        if r.violations.is_empty() {
            r.fail("<params>", "incomplete parameter set");
        }
        return Err(ConfigError {
            violations: r.violations,
        });
    }
    let params = ModelParams::new(values).expect("parameter violations were reported above");
    Ok(RunConfig {
        params,
        population_form,
        initial,
        numerics,
        tolerances,
        mu_lo,
        mu_hi,
        tol_mu,
        vary,
        out,
    })
}

fn float(x: f64) -> String {
    let s = crate::output::format_float(x);
    // TOML has its own spelling for non-finite values; validated configs
    // never contain them, but the serializer should not emit garbage.
    match s.as_str() {
        "NaN" => "nan".into(),
        "inf" => "inf".into(),
        "-inf" => "-inf".into(),
        _ => s,
    }
}

fn quoted(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

/// Render a config as TOML that [`parse_config`] maps back to the same value.
pub fn serialize_config(c: &RunConfig) -> String {
    let mut lines = Vec::new();
    let p = &c.params;
    for name in BIOLOGICAL.into_iter().chain([ParamName::H0]) {
        lines.push(format!("{} = {}", name.as_str(), float(p.get(name))));
    }
    match c.population_form {
        PopulationForm::Explicit => {
            lines.push(format!("a_m = {}", float(p.a_m())));
            lines.push(format!("n_b = {}", float(p.n_b())));
        }
        PopulationForm::Ratio => lines.push(format!("am_over_nb = {}", float(p.a_m()))),
    }
    match &c.initial {
        InitialSpec::Default => {}
        InitialSpec::Cosine { c_b, c_m } => {
            lines.push(format!("c_b = {}", float(*c_b)));
            lines.push(format!("c_m = {}", float(*c_m)));
        }
        InitialSpec::Profile { path } => {
            lines.push(format!("profile = {}", quoted(&path.to_string_lossy())))
        }
    }
    let n = &c.numerics;
    lines.push(format!("t_max = {}", float(n.t_max)));
    lines.push(format!("m = {}", n.m));
    if let Some(dt) = n.dt {
        lines.push(format!("dt = {}", float(dt)));
    }
    if let Some(s) = n.sample_interval {
        lines.push(format!("sample_interval = {}", float(s)));
    }
    if !n.snapshot_times.is_empty() {
        let ts: Vec<String> = n.snapshot_times.iter().map(|&t| float(t)).collect();
        lines.push(format!("snapshot_times = [{}]", ts.join(", ")));
    }
    let integrator = match n.step.front_integrator {
        FrontIntegrator::Euler => "euler",
        FrontIntegrator::Heun => "heun",
    };
    lines.push(format!("front_integrator = {}", quoted(integrator)));
    lines.push(format!("reaction_gain = {}", float(n.step.reaction_gain)));
    lines.push(format!("eps_norm = {}", float(c.tolerances.eps_norm)));
    lines.push(format!("eps_speed = {}", float(c.tolerances.eps_speed)));
    for (key, v) in [("mu_lo", c.mu_lo), ("mu_hi", c.mu_hi), ("tol_mu", c.tol_mu)] {
        if let Some(x) = v {
            lines.push(format!("{key} = {}", float(x)));
        }
    }
    if let Some(v) = &c.vary {
        let spec = format!("{}={}:{}:{}", v.name, float(v.lo), float(v.hi), float(v.step));
        lines.push(format!("vary = {}", quoted(&spec)));
    }
    if let Some(out) = &c.out {
        lines.push(format!("out = {}", quoted(&out.to_string_lossy())));
    }
    lines.push(String::new());
    lines.join("\n")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Preset {
    pub name: &'static str,
    pub text: &'static str,
}

pub const PRESETS: [Preset; 4] = [
    Preset {
        name: "fig1",
        text: include_str!("../presets/fig1.toml"),
    },
    Preset {
        name: "fig2",
        text: include_str!("../presets/fig2.toml"),
    },
    Preset {
        name: "r0-subcritical",
        text: include_str!("../presets/r0-subcritical.toml"),
    },
    Preset {
        name: "barrier-demo",
        text: include_str!("../presets/barrier-demo.toml"),
    },
];

pub fn preset_text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|p| p.name == name).map(|p| p.text)
}

/// Parsed shipped preset. Panics only if a shipped file is itself invalid,
/// which the test suite rules out.
pub fn preset(name: &str) -> Option<RunConfig> {
    preset_text(name).map(|t| parse_config(t).unwrap_or_else(|e| panic!("preset {name}: {e}")))
}
