//! Closed-form threshold quantities: basic reproduction number, Dirichlet
//! index on an interval, risk index, principal eigenvalue, spreading barrier
//! and endemic equilibrium.
//!
//! Intervals are one-dimensional, so the principal Dirichlet eigenvalue of
//! `-d^2/dx^2` on an interval of length `L` is `(pi / L)^2`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::ModelParams;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThresholdError {
    #[error("interval must have positive length, got {0}")]
    NonPositiveLength(f64),
    #[error("interval ({g}, {h}) is empty: need h > g")]
    EmptyInterval { g: f64, h: f64 },
    #[error("no spreading barrier exists for R0 = {r0} <= 1: vanishing is unconditional")]
    NoBarrier { r0: f64 },
}

/// `R0 = alpha_m alpha_b beta_b^2 A_m / (d_m gamma_b N_b)`.
pub fn basic_reproduction_number(p: &ModelParams) -> f64 {
    p.cross_gain() / p.gamma_b()
}

/// Dirichlet threshold on an interval of the given length.
pub fn dirichlet_index(p: &ModelParams, interval_length: f64) -> Result<f64, ThresholdError> {
    if !(interval_length > 0.0) {
        return Err(ThresholdError::NonPositiveLength(interval_length));
    }
    Ok(p.cross_gain() / dirichlet_loss(p, interval_length))
}

/// `gamma_b + D1 (pi / L)^2`: recovery plus diffusive loss through the walls.
fn dirichlet_loss(p: &ModelParams, interval_length: f64) -> f64 {
    let k = PI / interval_length;
    p.gamma_b() + p.d1() * k * k
}

fn span(g: f64, h: f64) -> Result<f64, ThresholdError> {
    if h > g {
        Ok(h - g)
    } else {
        Err(ThresholdError::EmptyInterval { g, h })
    }
}

/// Risk index of the infected interval `(g, h)`.
pub fn risk_index(p: &ModelParams, g: f64, h: f64) -> Result<f64, ThresholdError> {
    dirichlet_index(p, span(g, h)?)
}

/// Principal eigenvalue of the linearised scalar problem on `(g, h)`; its sign
/// is the sign of `1 - risk_index`.
pub fn principal_eigenvalue(p: &ModelParams, g: f64, h: f64) -> Result<f64, ThresholdError> {
    let loss = dirichlet_loss(p, span(g, h)?);
    Ok(loss - p.cross_gain())
}

/// Critical interval length `l* = pi sqrt(D1 / (gamma_b (R0 - 1)))`.
pub fn spreading_barrier(p: &ModelParams) -> Result<f64, ThresholdError> {
    let r0 = basic_reproduction_number(p);
    if r0 <= 1.0 {
        return Err(ThresholdError::NoBarrier { r0 });
    }
    // gamma_b (R0 - 1) = cross_gain - gamma_b, evaluated without forming R0
    // first so that R0 close to 1 keeps its relative precision.
    let excess = p.cross_gain() - p.gamma_b();
    Ok(PI * (p.d1() / excess).sqrt())
}

/// Unique positive steady state `(I_b*, I_m*)` of the non-spatial system, or
/// `None` when `R0 <= 1`.
///
/// Clearing denominators in the steady-state equations leaves a linear
/// equation for `I_b*`.
pub fn endemic_equilibrium(p: &ModelParams) -> Option<(f64, f64)> {
    if basic_reproduction_number(p) <= 1.0 {
        return None;
    }
    let nb = p.n_b();
    let k = p.alpha_m() * p.alpha_b() * p.beta_b() * p.beta_b() * p.a_m();
    let am_beta = p.alpha_m() * p.beta_b();
    let ib = nb * (k - p.gamma_b() * nb * p.d_m()) / (p.gamma_b() * nb * am_beta + k);
    let im = am_beta * p.a_m() * ib / (nb * p.d_m() + am_beta * ib);
    if ib > 0.0 && ib < nb && im > 0.0 && im < p.a_m() {
        Some((ib, im))
    } else {
        // reachable only through rounding when R0 is within an ulp of 1
        None
    }
}

/// Right-hand sides of the non-spatial system at `(ib, im)`.
pub fn nonspatial_rhs(p: &ModelParams, ib: f64, im: f64) -> (f64, f64) {
    let dib = -p.gamma_b() * ib + p.alpha_b() * p.beta_b() * (p.n_b() - ib) / p.n_b() * im;
    let dim = -p.d_m() * im + p.alpha_m() * p.beta_b() * (p.a_m() - im) / p.n_b() * ib;
    (dib, dim)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub i_b_star: f64,
    pub i_m_star: f64,
}

/// All closed-form thresholds for a parameter set on its initial interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub r0: f64,
    pub r0f_initial: f64,
    pub lambda0_initial: f64,
    pub l_star: Option<f64>,
    pub equilibrium: Option<Equilibrium>,
}

impl ThresholdReport {
    pub fn compute(p: &ModelParams) -> Self {
        let h0 = p.h0();
        let equilibrium = endemic_equilibrium(p).map(|(i_b_star, i_m_star)| Equilibrium {
            i_b_star,
            i_m_star,
        });
        // h0 > 0 is a construction invariant, so the initial interval is never empty
        ThresholdReport {
            r0: basic_reproduction_number(p),
            r0f_initial: risk_index(p, -h0, h0).expect("h0 > 0"),
            lambda0_initial: principal_eigenvalue(p, -h0, h0).expect("h0 > 0"),
            l_star: spreading_barrier(p).ok(),
            equilibrium,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ParamName;

    // 40-digit reference values evaluated with mpmath, independent of this code.
    const FIG1_R0: f64 = 1.310_896_551_724_137_9;
    const FIG1_RD8: f64 = 0.646_371_987_704_464_8;
    const FIG1_LAMBDA8: f64 = 0.430_312_344_033_602_2;
    const FIG1_LSTAR: f64 = 14.547_765_456_010_125;
    const FIG2_R0: f64 = 8739.310_344_827_586;
    const FIG2_LAMBDA8: f64 = -8.738_156_132_258_819;
    const FIG2_EQ: (f64, f64) = (0.999_696_238_086_221_04, 12.466_105_863_833_137);

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn r0_matches_reference() {
        let r0 = basic_reproduction_number(&ModelParams::fig1());
        assert!((r0 - 1.31).abs() < 0.005);
        assert!(rel(r0, FIG1_R0) < 1e-14);
        assert!(rel(basic_reproduction_number(&ModelParams::fig2()), FIG2_R0) < 1e-14);
    }

    #[test]
    fn r0_vanishes_with_biting_rate() {
        let p = ModelParams::fig1().with(ParamName::BetaB, 1e-200).unwrap();
        assert_eq!(basic_reproduction_number(&p), 0.0);
    }

    #[test]
    fn dirichlet_index_values() {
        let p = ModelParams::fig1();
        assert!(rel(dirichlet_index(&p, 8.0).unwrap(), FIG1_RD8) < 1e-14);
        let huge = 1e8 * (p.d1() / p.gamma_b()).sqrt();
        let r0 = basic_reproduction_number(&p);
        assert!((dirichlet_index(&p, huge).unwrap() - r0).abs() < 1e-6);
        assert!(dirichlet_index(&p, 0.0).is_err());
        assert!(dirichlet_index(&p, -3.0).is_err());
        assert!(dirichlet_index(&p, f64::NAN).is_err());
    }

    #[test]
    fn barrier_inverts_dirichlet_index() {
        let p = ModelParams::fig1();
        let l = spreading_barrier(&p).unwrap();
        assert!(rel(l, FIG1_LSTAR) < 1e-13);
        assert!((dirichlet_index(&p, l).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn barrier_absent_when_subcritical() {
        let p = ModelParams::fig1().with(ParamName::BetaB, 0.07).unwrap();
        assert!(matches!(
            spreading_barrier(&p),
            Err(ThresholdError::NoBarrier { .. })
        ));
        assert!(endemic_equilibrium(&p).is_none());
    }

    #[test]
    fn barrier_near_critical_stays_finite() {
        // choose gamma_b so that R0 = 1 + 1e-9
        let p = ModelParams::fig1();
        let gamma = p.cross_gain() / (1.0 + 1e-9);
        let p = p.with(ParamName::GammaB, gamma).unwrap();
        let l = spreading_barrier(&p).unwrap();
        assert!(l.is_finite() && l > 1e4, "l* = {l}");
    }

    #[test]
    fn eigenvalue_sign_and_values() {
        let p1 = ModelParams::fig1();
        let p2 = ModelParams::fig2();
        assert!(rel(principal_eigenvalue(&p1, -4.0, 4.0).unwrap(), FIG1_LAMBDA8) < 1e-13);
        assert!(rel(principal_eigenvalue(&p2, -4.0, 4.0).unwrap(), FIG2_LAMBDA8) < 1e-13);
        assert!(principal_eigenvalue(&p1, 1.0, 1.0).is_err());
        let l = spreading_barrier(&p1).unwrap();
        assert!(principal_eigenvalue(&p1, -l / 2.0, l / 2.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn risk_index_requires_ordered_interval() {
        let p = ModelParams::fig1();
        assert!(risk_index(&p, 2.0, 1.0).is_err());
        let a = risk_index(&p, -4.0, 4.0).unwrap();
        let b = risk_index(&p, -4.0, 4.0 + 1e-6).unwrap();
        assert!(b > a);
    }

    #[test]
    fn equilibrium_matches_reference() {
        let p = ModelParams::fig2();
        let (ib, im) = endemic_equilibrium(&p).unwrap();
        assert!(rel(ib, FIG2_EQ.0) < 1e-13);
        assert!(rel(im, FIG2_EQ.1) < 1e-13);
        let (fb, fm) = nonspatial_rhs(&p, ib, im);
        let scale = (p.gamma_b() * p.n_b()).max(p.d_m() * p.a_m());
        assert!(fb.abs() < 1e-10 * scale && fm.abs() < 1e-10 * scale);
    }

    #[test]
    fn report_fields() {
        let r = ThresholdReport::compute(&ModelParams::fig1());
        assert!(r.r0f_initial < 1.0);
        assert!(r.lambda0_initial > 0.0);
        assert!(r.l_star.is_some() && r.equilibrium.is_some());
        let r2 = ThresholdReport::compute(&ModelParams::fig2());
        assert!(r2.r0f_initial > 1.0 && r2.lambda0_initial < 0.0);
    }
}
