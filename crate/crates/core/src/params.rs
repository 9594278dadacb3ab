//! Epidemiological and free-boundary constants of the bird/mosquito model.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Names of the model constants, used for sweeps and error reporting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamName {
    D1,
    AlphaB,
    AlphaM,
    BetaB,
    GammaB,
    DM,
    NB,
    AM,
    Mu,
    H0,
}

impl ParamName {
    pub const ALL: [ParamName; 10] = [
        ParamName::D1,
        ParamName::AlphaB,
        ParamName::AlphaM,
        ParamName::BetaB,
        ParamName::GammaB,
        ParamName::DM,
        ParamName::NB,
        ParamName::AM,
        ParamName::Mu,
        ParamName::H0,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ParamName::D1 => "d1",
            ParamName::AlphaB => "alpha_b",
            ParamName::AlphaM => "alpha_m",
            ParamName::BetaB => "beta_b",
            ParamName::GammaB => "gamma_b",
            ParamName::DM => "d_m",
            ParamName::NB => "n_b",
            ParamName::AM => "a_m",
            ParamName::Mu => "mu",
            ParamName::H0 => "h0",
        }
    }

    fn is_probability(self) -> bool {
        matches!(self, ParamName::AlphaB | ParamName::AlphaM)
    }
}

impl fmt::Display for ParamName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ParamName {
    type Err = ParamError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ParamName::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| ParamError::UnknownName(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("parameter `{name}` = {value}: {reason}")]
    Invalid {
        name: ParamName,
        value: f64,
        reason: &'static str,
    },
    #[error("unknown parameter name `{0}`")]
    UnknownName(String),
}

/// Unchecked parameter values. Turn into [`ModelParams`] with [`ModelParams::new`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamValues {
    pub d1: f64,
    pub alpha_b: f64,
    pub alpha_m: f64,
    pub beta_b: f64,
    pub gamma_b: f64,
    pub d_m: f64,
    pub n_b: f64,
    pub a_m: f64,
    pub mu: f64,
    pub h0: f64,
}

impl ParamValues {
    pub fn get(&self, name: ParamName) -> f64 {
        match name {
            ParamName::D1 => self.d1,
            ParamName::AlphaB => self.alpha_b,
            ParamName::AlphaM => self.alpha_m,
            ParamName::BetaB => self.beta_b,
            ParamName::GammaB => self.gamma_b,
            ParamName::DM => self.d_m,
            ParamName::NB => self.n_b,
            ParamName::AM => self.a_m,
            ParamName::Mu => self.mu,
            ParamName::H0 => self.h0,
        }
    }

    pub fn set(&mut self, name: ParamName, value: f64) {
        let slot = match name {
            ParamName::D1 => &mut self.d1,
            ParamName::AlphaB => &mut self.alpha_b,
            ParamName::AlphaM => &mut self.alpha_m,
            ParamName::BetaB => &mut self.beta_b,
            ParamName::GammaB => &mut self.gamma_b,
            ParamName::DM => &mut self.d_m,
            ParamName::NB => &mut self.n_b,
            ParamName::AM => &mut self.a_m,
            ParamName::Mu => &mut self.mu,
            ParamName::H0 => &mut self.h0,
        };
        *slot = value;
    }

    /// Every violated invariant, not just the first.
    pub fn violations(&self) -> Vec<ParamError> {
        ParamName::ALL
            .into_iter()
            .filter_map(|name| check_value(name, self.get(name)).err())
            .collect()
    }
}

fn check_value(name: ParamName, value: f64) -> Result<(), ParamError> {
    let reason = if !value.is_finite() {
        Some("must be finite")
    } else if value <= 0.0 {
        Some("must be strictly positive")
    } else if name.is_probability() && value > 1.0 {
        Some("transmission probability must not exceed 1")
    } else {
        None
    };
    match reason {
        Some(reason) => Err(ParamError::Invalid {
            name,
            value,
            reason,
        }),
        None => Ok(()),
    }
}

/// Validated model constants. Every field is finite and strictly positive and
/// both transmission probabilities lie in (0, 1].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamValues", into = "ParamValues")]
pub struct ModelParams {
    values: ParamValues,
}

impl ModelParams {
    pub fn new(values: ParamValues) -> Result<Self, ParamError> {
        match values.violations().into_iter().next() {
            Some(err) => Err(err),
            None => Ok(Self { values }),
        }
    }

    /// Shared constants of both figure scenarios with the population ratio
    /// A_m / N_b = 20 and N_b = 1.
    fn shared(d1: f64, beta_b: f64, gamma_b: f64, mu: f64) -> Self {
        Self {
            values: ParamValues {
                d1,
                alpha_b: 0.88,
                alpha_m: 0.16,
                beta_b,
                gamma_b,
                d_m: 0.029,
                n_b: 1.0,
                a_m: 20.0,
                mu,
                h0: 4.0,
            },
        }
    }

    /// Vanishing scenario: D1 = 4, beta_b = 0.09, gamma_b = 0.6, mu = 0.1, h0 = 4.
    pub fn fig1() -> Self {
        Self::shared(4.0, 0.09, 0.6, 0.1)
    }

    /// Spreading scenario: D1 = 0.001, beta_b = 0.3, gamma_b = 0.001, mu = 0.001, h0 = 4.
    pub fn fig2() -> Self {
        Self::shared(0.001, 0.3, 0.001, 0.001)
    }

    pub fn values(&self) -> ParamValues {
        self.values
    }

    pub fn get(&self, name: ParamName) -> f64 {
        self.values.get(name)
    }

    /// Copy with one constant replaced, re-validated.
    pub fn with(&self, name: ParamName, value: f64) -> Result<Self, ParamError> {
        let mut values = self.values;
        values.set(name, value);
        Self::new(values)
    }

    pub fn d1(&self) -> f64 {
        self.values.d1
    }
    pub fn alpha_b(&self) -> f64 {
        self.values.alpha_b
    }
    pub fn alpha_m(&self) -> f64 {
        self.values.alpha_m
    }
    pub fn beta_b(&self) -> f64 {
        self.values.beta_b
    }
    pub fn gamma_b(&self) -> f64 {
        self.values.gamma_b
    }
    pub fn d_m(&self) -> f64 {
        self.values.d_m
    }
    pub fn n_b(&self) -> f64 {
        self.values.n_b
    }
    pub fn a_m(&self) -> f64 {
        self.values.a_m
    }
    pub fn mu(&self) -> f64 {
        self.values.mu
    }
    pub fn h0(&self) -> f64 {
        self.values.h0
    }

    /// alpha_m alpha_b beta_b^2 A_m / (N_b d_m), the bird-to-bird gain through
    /// one mosquito generation. Appears in every threshold formula.
    pub(crate) fn cross_gain(&self) -> f64 {
        let v = &self.values;
        v.alpha_m * v.alpha_b * v.beta_b * v.beta_b * v.a_m / (v.n_b * v.d_m)
    }
}

impl TryFrom<ParamValues> for ModelParams {
    type Error = ParamError;

    fn try_from(values: ParamValues) -> Result<Self, Self::Error> {
        ModelParams::new(values)
    }
}

impl From<ModelParams> for ParamValues {
    fn from(p: ModelParams) -> Self {
        p.values
    }
}
