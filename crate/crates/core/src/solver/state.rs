use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::{Grid, SolverError};
use crate::params::ModelParams;

/// Fronts, time and the two infection profiles on the transformed grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionState {
    pub t: f64,
    pub g: f64,
    pub h: f64,
    /// Infected birds, `u(y, t) = I_b(x, t)`.
    pub u: Vec<f64>,
    /// Infected mosquitoes, `v(y, t) = I_m(x, t)`.
    pub v: Vec<f64>,
}

impl SolutionState {
    pub fn span(&self) -> f64 {
        self.h - self.g
    }

    pub fn sup_u(&self) -> f64 {
        sup(&self.u)
    }

    pub fn sup_v(&self) -> f64 {
        sup(&self.v)
    }
}

fn sup(values: &[f64]) -> f64 {
    values.iter().fold(0.0_f64, |acc, &x| acc.max(x.abs()))
}

/// Initial infection profiles on `[-h0, h0]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialData {
    /// `c_b cos(pi x / (2 h0))` and `c_m cos(pi x / (2 h0))`.
    Cosine { c_b: f64, c_m: f64 },
    /// Explicit values on every grid node, walls included.
    Sampled { i_b: Vec<f64>, i_m: Vec<f64> },
}

impl InitialData {
    /// Cosine bumps at half the total populations.
    pub fn default_cosine(p: &ModelParams) -> Self {
        InitialData::Cosine {
            c_b: 0.5 * p.n_b(),
            c_m: 0.5 * p.a_m(),
        }
    }

    /// Sample onto `grid` and check compatibility: zero on both walls,
    /// strictly positive inside, bounded by `N_b` and `A_m`.
    pub fn to_state(&self, grid: &Grid, p: &ModelParams) -> Result<SolutionState, SolverError> {
        let (u, v) = match self {
            InitialData::Cosine { c_b, c_m } => {
                check_amplitude("c_b", *c_b, p.n_b())?;
                check_amplitude("c_m", *c_m, p.a_m())?;
                let shape: Vec<f64> = grid
                    .nodes()
                    .iter()
                    .enumerate()
                    .map(|(i, &y)| {
                        if i == 0 || i == grid.len() - 1 {
                            0.0
                        } else {
                            (FRAC_PI_2 * y / grid.h0()).cos()
                        }
                    })
                    .collect();
                (
                    shape.iter().map(|s| c_b * s).collect(),
                    shape.iter().map(|s| c_m * s).collect(),
                )
            }
            InitialData::Sampled { i_b, i_m } => {
                check_profile("i_b", i_b, grid, p.n_b())?;
                check_profile("i_m", i_m, grid, p.a_m())?;
                (i_b.clone(), i_m.clone())
            }
        };
        Ok(SolutionState {
            t: 0.0,
            g: -p.h0(),
            h: p.h0(),
            u,
            v,
        })
    }

    /// True when the profiles are mirror images of themselves about `x = 0`.
    pub fn is_even(&self) -> bool {
        match self {
            InitialData::Cosine { .. } => true,
            InitialData::Sampled { i_b, i_m } => {
                i_b.iter().eq(i_b.iter().rev()) && i_m.iter().eq(i_m.iter().rev())
            }
        }
    }
}

fn check_amplitude(name: &str, c: f64, cap: f64) -> Result<(), SolverError> {
    if c.is_finite() && c > 0.0 && c <= cap {
        Ok(())
    } else {
        Err(SolverError::InvalidInitialData(format!(
            "amplitude {name} = {c} must lie in (0, {cap}]"
        )))
    }
}

fn check_profile(name: &str, values: &[f64], grid: &Grid, cap: f64) -> Result<(), SolverError> {
    let bad = |msg: String| Err(SolverError::InvalidInitialData(format!("{name}: {msg}")));
    if values.len() != grid.len() {
        return bad(format!(
            "expected {} samples (grid nodes incl. walls), got {}",
            grid.len(),
            values.len()
        ));
    }
    let last = values.len() - 1;
    if values[0] != 0.0 || values[last] != 0.0 {
        return bad("profile must vanish at both walls".into());
    }
    for (i, &x) in values[1..last].iter().enumerate() {
        if !(x > 0.0 && x <= cap) {
            return bad(format!("interior node {} = {x} outside (0, {cap}]", i + 1));
        }
    }
    Ok(())
}
