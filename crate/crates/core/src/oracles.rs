//! Small independent reference computations used to cross-check the solver.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::ModelParams;
use crate::solver::SolutionState;
use crate::thresholds::nonspatial_rhs;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("initial value {name} = {value} outside [0, {cap}]")]
    InitialOutOfRange { name: &'static str, value: f64, cap: f64 },
    #[error("invalid integration setting: {0}")]
    InvalidSetting(String),
    #[error("trajectory became non-finite at t = {0}")]
    NonFinite(f64),
}

/// Samples of the spatially homogeneous system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdeTrajectory {
    pub t: Vec<f64>,
    pub i_b: Vec<f64>,
    pub i_m: Vec<f64>,
}

impl OdeTrajectory {
    pub fn last(&self) -> (f64, f64) {
        (*self.i_b.last().unwrap(), *self.i_m.last().unwrap())
    }
}

fn rk4(p: &ModelParams, (ib, im): (f64, f64), dt: f64) -> (f64, f64) {
    let f = |b, m| nonspatial_rhs(p, b, m);
    let k1 = f(ib, im);
    let k2 = f(ib + 0.5 * dt * k1.0, im + 0.5 * dt * k1.1);
    let k3 = f(ib + 0.5 * dt * k2.0, im + 0.5 * dt * k2.1);
    let k4 = f(ib + dt * k3.0, im + dt * k3.1);
    (
        ib + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        im + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    )
}

fn check_start(p: &ModelParams, ib0: f64, im0: f64) -> Result<(), OracleError> {
    for (name, value, cap) in [("ib0", ib0, p.n_b()), ("im0", im0, p.a_m())] {
        if !(value >= 0.0 && value <= cap) {
            return Err(OracleError::InitialOutOfRange { name, value, cap });
        }
    }
    Ok(())
}

/// Classical fourth-order integration on a uniform grid of steps no longer
/// than `dt`, recording every step.
pub fn solve_nonspatial(
    p: &ModelParams,
    ib0: f64,
    im0: f64,
    t_max: f64,
    dt: f64,
) -> Result<OdeTrajectory, OracleError> {
    check_start(p, ib0, im0)?;
    if !(t_max >= 0.0 && t_max.is_finite()) || !(dt > 0.0) {
        return Err(OracleError::InvalidSetting(format!(
            "need t_max >= 0 and dt > 0, got t_max = {t_max}, dt = {dt}"
        )));
    }
    let n = (t_max / dt).ceil().max(0.0) as usize;
    let h = if n == 0 { 0.0 } else { t_max / n as f64 };
    let mut traj = OdeTrajectory {
        t: vec![0.0],
        i_b: vec![ib0],
        i_m: vec![im0],
    };
    let mut y = (ib0, im0);
    for k in 1..=n {
        y = rk4(p, y, h);
        let t = k as f64 * h;
        if !(y.0.is_finite() && y.1.is_finite()) {
            return Err(OracleError::NonFinite(t));
        }
        traj.t.push(t);
        traj.i_b.push(y.0);
        traj.i_m.push(y.1);
    }
    Ok(traj)
}

/// The same integration, reported exactly at the requested increasing `times`.
pub fn solve_nonspatial_at(
    p: &ModelParams,
    ib0: f64,
    im0: f64,
    times: &[f64],
    dt: f64,
) -> Result<OdeTrajectory, OracleError> {
    check_start(p, ib0, im0)?;
    if !(dt > 0.0) {
        return Err(OracleError::InvalidSetting(format!("dt must be positive, got {dt}")));
    }
    let mut traj = OdeTrajectory {
        t: Vec::with_capacity(times.len()),
        i_b: Vec::with_capacity(times.len()),
        i_m: Vec::with_capacity(times.len()),
    };
    let (mut t, mut y) = (0.0, (ib0, im0));
    for &target in times {
        if !(target >= t && target.is_finite()) {
            return Err(OracleError::InvalidSetting(format!(
                "times must be finite, nonnegative and increasing; got {target} after {t}"
            )));
        }
        let n = ((target - t) / dt).ceil() as usize;
        let h = if n == 0 { 0.0 } else { (target - t) / n as f64 };
        for _ in 0..n {
            y = rk4(p, y, h);
        }
        t = target;
        if !(y.0.is_finite() && y.1.is_finite()) {
            return Err(OracleError::NonFinite(t));
        }
        traj.t.push(t);
        traj.i_b.push(y.0);
        traj.i_m.push(y.1);
    }
    Ok(traj)
}

/// Lyapunov-type functional
/// `E = int (I_b + (alpha_b beta_b / d_m) I_m) dx + (D1 / mu)(h - g)`,
/// by the trapezoidal rule on the transformed grid.
pub fn energy_functional(state: &SolutionState, p: &ModelParams) -> f64 {
    let weight = p.alpha_b() * p.beta_b() / p.d_m();
    let n = state.u.len();
    let mut sum = 0.0;
    for i in 0..n {
        let f = state.u[i] + weight * state.v[i];
        sum += if i == 0 || i == n - 1 { 0.5 * f } else { f };
    }
    let dy = 2.0 * p.h0() / (n - 1) as f64;
    let jacobian = state.span() / (2.0 * p.h0());
    sum * dy * jacobian + p.d1() / p.mu() * state.span()
}

/// Rebuild `I_m(t)` at a fixed point from a history of `I_b` there, using
/// `I_m = e^{-w} (v0 + int c e^{w} I_b)` with
/// `w(t) = d_m t + int (alpha_m beta_b / N_b) I_b`. Both integrals use the
/// trapezoidal rule on the supplied times.
pub fn reconstruct_mosquitoes(p: &ModelParams, times: &[f64], i_b: &[f64], v0: f64) -> Vec<f64> {
    assert_eq!(times.len(), i_b.len(), "history length mismatch");
    let uptake = p.alpha_m() * p.beta_b() / p.n_b();
    let source = uptake * p.a_m();
    let mut out = Vec::with_capacity(times.len());
    if times.is_empty() {
        return out;
    }
    let mut w = 0.0;
    let mut acc = 0.0;
    let mut prev = source * i_b[0];
    out.push(v0);
    for k in 1..times.len() {
        let dt = times[k] - times[k - 1];
        w += p.d_m() * dt + 0.5 * uptake * (i_b[k] + i_b[k - 1]) * dt;
        let next = source * w.exp() * i_b[k];
        acc += 0.5 * (prev + next) * dt;
        prev = next;
        out.push((-w).exp() * (v0 + acc));
    }
    out
}

/// Positive equilibrium of the homogeneous system found by bisection on the
/// bird nullcline, independent of the closed form.
pub fn equilibrium_by_bisection(p: &ModelParams) -> Option<(f64, f64)> {
    let (a_m, n_b) = (p.a_m(), p.n_b());
    let beta = p.beta_b();
    let mosquitoes = |ib: f64| p.alpha_m() * beta * a_m * ib / (n_b * p.d_m() + p.alpha_m() * beta * ib);
    // Growth rate per infected bird along the mosquito nullcline, decreasing in ib.
    let rate = |ib: f64| {
        -p.gamma_b()
            + p.alpha_b() * beta * (n_b - ib) / n_b * p.alpha_m() * beta * a_m
                / (n_b * p.d_m() + p.alpha_m() * beta * ib)
    };
    if rate(0.0) <= 0.0 {
        return None;
    }
    let (mut lo, mut hi) = (0.0, n_b);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if rate(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let ib = 0.5 * (lo + hi);
    Some((ib, mosquitoes(ib)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thresholds::endemic_equilibrium;

    fn zero_state(p: &ModelParams, n: usize) -> SolutionState {
        SolutionState {
            t: 0.0,
            g: -p.h0(),
            h: p.h0(),
            u: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    #[test]
    fn ode_zero_start_stays_zero() {
        let p = ModelParams::fig1();
        let traj = solve_nonspatial(&p, 0.0, 0.0, 50.0, 0.1).unwrap();
        assert!(traj.i_b.iter().chain(&traj.i_m).all(|&x| x == 0.0));
    }

    #[test]
    fn ode_equilibrium_is_stationary() {
        let p = ModelParams::fig1();
        let (ib, im) = endemic_equilibrium(&p).unwrap();
        let (b, m) = solve_nonspatial(&p, ib, im, 100.0, 0.05).unwrap().last();
        assert!((b - ib).abs() < 1e-12 && (m - im).abs() < 1e-11);
    }

    #[test]
    fn fig2_trajectory_converges_to_equilibrium() {
        let p = ModelParams::fig2();
        let (b, m) = solve_nonspatial(&p, 0.3, 5.0, 600.0, 0.002).unwrap().last();
        assert!((b / 0.999696238086221 - 1.0).abs() < 1e-3);
        assert!((m / 12.466105863833137 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn ode_rejects_inadmissible_start() {
        let p = ModelParams::fig1();
        assert!(solve_nonspatial(&p, 1.5, 0.0, 1.0, 0.1).is_err());
        assert!(solve_nonspatial(&p, 0.5, -1.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn sampled_integration_matches_dense_run() {
        let p = ModelParams::fig1();
        let dense = solve_nonspatial(&p, 0.5, 10.0, 4.0, 0.01).unwrap();
        let at = solve_nonspatial_at(&p, 0.5, 10.0, &[0.0, 1.0, 4.0], 0.01).unwrap();
        assert_eq!(at.t, vec![0.0, 1.0, 4.0]);
        assert!((at.last().0 - dense.last().0).abs() < 1e-13);
    }

    #[test]
    fn energy_of_empty_state_is_front_term() {
        let p = ModelParams::fig1();
        let e = energy_functional(&zero_state(&p, 33), &p);
        assert!((e - p.d1() / p.mu() * 2.0 * p.h0()).abs() < 1e-12);
        let doubled = p.with(crate::params::ParamName::Mu, 2.0 * p.mu()).unwrap();
        assert!((energy_functional(&zero_state(&p, 33), &doubled) - 0.5 * e).abs() < 1e-12);
    }

    #[test]
    fn energy_integrates_constant_exactly() {
        let p = ModelParams::fig1();
        let mut s = zero_state(&p, 21);
        s.g = -6.0;
        s.h = 2.0;
        s.u.iter_mut().for_each(|x| *x = 0.25);
        let e = energy_functional(&s, &p);
        assert!((e - (0.25 * 8.0 + p.d1() / p.mu() * 8.0)).abs() < 1e-12);
    }

    #[test]
    fn reconstruction_matches_constant_forcing() {
        // With I_b constant the mosquito equation is linear with constant coefficients.
        let p = ModelParams::fig1();
        let ib = 0.3;
        let times: Vec<f64> = (0..=2000).map(|k| k as f64 * 0.005).collect();
        let v = reconstruct_mosquitoes(&p, &times, &vec![ib; times.len()], 2.0);
        let rate = p.d_m() + p.alpha_m() * p.beta_b() * ib / p.n_b();
        let fixed = p.alpha_m() * p.beta_b() * p.a_m() * ib / p.n_b() / rate;
        let exact = fixed + (2.0 - fixed) * (-rate * 10.0).exp();
        assert!((v.last().unwrap() - exact).abs() < 1e-6);
    }

    #[test]
    fn bisection_agrees_with_closed_form() {
        for p in [ModelParams::fig1(), ModelParams::fig2()] {
            let a = equilibrium_by_bisection(&p).unwrap();
            let b = endemic_equilibrium(&p).unwrap();
            assert!((a.0 / b.0 - 1.0).abs() < 1e-12 && (a.1 / b.1 - 1.0).abs() < 1e-12);
        }
        let sub = ModelParams::fig1()
            .with(crate::params::ParamName::BetaB, 0.07)
            .unwrap();
        assert!(equilibrium_by_bisection(&sub).is_none());
    }
}
