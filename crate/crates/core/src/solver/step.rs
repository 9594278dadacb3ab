//! One IMEX step of the transformed fixed-domain system.
//!
//! With `L = h - g` and `y` in `[-h0, h0]` the bird equation reads
//! `u_t = A u_y + B u_yy - gamma_b u + alpha_b beta_b (N_b - u) / N_b * v`
//! where
//!
//! ```text
//! A = y (h' - g') / L + h0 (h' + g') / L
//! B = 4 h0^2 D1 / L^2
//! ```
//!
//! and the mosquito field is carried on the same grid with the advection
//! correction `A v_y`. The fronts obey `h' = -(2 h0 mu / L) u_y(h0)` and
//! `g' = -(2 h0 mu / L) u_y(-h0)`.
//!
//! A step is split into transport (explicit upwind advection of both fields,
//! backward-Euler diffusion of `u`) followed by the pointwise reaction. The
//! reaction is integrated with Strang-composed exact exponential sub-flows:
//! with `v` frozen the bird equation is linear in `u`, and with `u` frozen the
//! mosquito equation is linear in `v`. Each sub-flow maps
//! `[0, N_b] x [0, A_m]` into itself and is order preserving, so the whole
//! step inherits both properties whenever the advective CFL number is at most 1.

use serde::{Deserialize, Serialize};

use super::{Grid, SolutionState, SolverError};
use crate::params::ModelParams;

/// Relative size of negative undershoot that is silently clamped to zero.
pub const UNDERSHOOT_TOL: f64 = 1e-10;

/// Relative size of a front retreat that is treated as a stationary front.
const RETREAT_TOL: f64 = 1e-10;

/// Upper bound on `rate * dt` for one reaction sub-step.
pub const DEFAULT_REACTION_GAIN: f64 = 0.02;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrontIntegrator {
    #[default]
    Euler,
    Heun,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepOptions {
    pub front_integrator: FrontIntegrator,
    pub reaction_gain: f64,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self {
            front_integrator: FrontIntegrator::Euler,
            reaction_gain: DEFAULT_REACTION_GAIN,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Birds,
    Mosquitoes,
}

/// Why a step was refused.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Rejection {
    Undershoot { field: Field, node: usize, value: f64 },
    Overshoot { field: Field, node: usize, value: f64 },
    NonFinite { field: Field, node: usize },
    FrontRetreat { side: Side, speed: f64 },
    NonFiniteFront,
}

impl std::fmt::Display for Rejection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Rejection::Undershoot { field, node, value } => {
                write!(f, "{field:?} undershoot {value:e} at node {node}")
            }
            Rejection::Overshoot { field, node, value } => {
                write!(f, "{field:?} exceeds its population bound ({value}) at node {node}")
            }
            Rejection::NonFinite { field, node } => {
                write!(f, "{field:?} became non-finite at node {node}")
            }
            Rejection::FrontRetreat { side, speed } => {
                write!(f, "{side:?} front retreats with speed {speed:e}")
            }
            Rejection::NonFiniteFront => f.write_str("front position became non-finite"),
        }
    }
}

/// Fronts and their velocities at one instant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontMotion {
    pub g: f64,
    pub h: f64,
    pub g_dot: f64,
    pub h_dot: f64,
}

/// `(A, B)` at transformed coordinate `y`.
pub fn transport_coefficients(
    motion: &FrontMotion,
    h0: f64,
    d1: f64,
    y: f64,
) -> Result<(f64, f64), SolverError> {
    let len = motion.h - motion.g;
    if !(len > 0.0) {
        return Err(SolverError::EmptyInterval {
            g: motion.g,
            h: motion.h,
        });
    }
    let a = y * (motion.h_dot - motion.g_dot) / len + h0 * (motion.h_dot + motion.g_dot) / len;
    let b = 4.0 * h0 * h0 * d1 / (len * len);
    Ok((a, b))
}

/// One-sided three-point estimate of `du/dy` at a wall. Needs at least three nodes.
///
/// The two sides are written so that mirrored profiles give exactly negated
/// values.
pub fn boundary_derivative(u: &[f64], dy: f64, side: Side) -> f64 {
    let n = u.len();
    assert!(n >= 3, "boundary derivative needs three nodes");
    match side {
        Side::Left => ((4.0 * u[1] - 3.0 * u[0]) - u[2]) / (2.0 * dy),
        Side::Right => -((4.0 * u[n - 2] - 3.0 * u[n - 1]) - u[n - 3]) / (2.0 * dy),
    }
}

/// Advances [`SolutionState`] values for one fixed grid and parameter set.
#[derive(Clone, Debug)]
pub struct Stepper {
    grid: Grid,
    params: ModelParams,
    options: StepOptions,
    adv: Vec<f64>,
    u_star: Vec<f64>,
    v_star: Vec<f64>,
    sweep: Vec<f64>,
}

impl Stepper {
    pub fn new(grid: Grid, params: ModelParams, options: StepOptions) -> Self {
        let n = grid.len();
        Self {
            grid,
            params,
            options,
            adv: vec![0.0; n],
            u_star: vec![0.0; n],
            v_star: vec![0.0; n],
            sweep: vec![0.0; n],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn options(&self) -> &StepOptions {
        &self.options
    }

    /// Front velocities from the Stefan laws applied to `u` on `(g, h)`.
    /// Retreats below `RETREAT_TOL` times the natural speed scale count as zero.
    pub fn front_velocities(&self, u: &[f64], g: f64, h: f64) -> Result<(f64, f64), Rejection> {
        let p = &self.params;
        let dy = self.grid.dy();
        let gain = 2.0 * self.grid.h0() * p.mu() / (h - g);
        let h_dot = -gain * boundary_derivative(u, dy, Side::Right);
        let g_dot = -gain * boundary_derivative(u, dy, Side::Left);
        let tol = RETREAT_TOL * p.mu() * p.n_b() / self.grid.h0();
        let h_dot = match h_dot {
            s if s >= 0.0 => s,
            s if s > -tol => 0.0,
            s => {
                return Err(Rejection::FrontRetreat {
                    side: Side::Right,
                    speed: s,
                })
            }
        };
        let g_dot = match g_dot {
            s if s <= 0.0 => s,
            s if s < tol => 0.0,
            s => {
                return Err(Rejection::FrontRetreat {
                    side: Side::Left,
                    speed: s,
                })
            }
        };
        Ok((g_dot, h_dot))
    }

    pub fn motion(&self, state: &SolutionState) -> Result<FrontMotion, Rejection> {
        let (g_dot, h_dot) = self.front_velocities(&state.u, state.g, state.h)?;
        Ok(FrontMotion {
            g: state.g,
            h: state.h,
            g_dot,
            h_dot,
        })
    }

    /// Default step: advective CFL number 0.5 and reaction gain 0.1.
    pub fn suggested_dt(&self, state: &SolutionState) -> f64 {
        let p = &self.params;
        let reaction_rate = p.gamma_b() + p.alpha_b() * p.beta_b() * p.a_m() / p.n_b();
        let mut dt = 0.1 / reaction_rate;
        if let Ok(motion) = self.motion(state) {
            let h0 = self.grid.h0();
            let max_a = [-h0, h0]
                .into_iter()
                .filter_map(|y| transport_coefficients(&motion, h0, p.d1(), y).ok())
                .map(|(a, _)| a.abs())
                .fold(0.0, f64::max);
            if max_a > 0.0 {
                dt = dt.min(0.5 * self.grid.dy() / max_a);
            }
        }
        dt
    }

    /// Advance `state` by `dt`.
    pub fn step(&mut self, state: &SolutionState, dt: f64) -> Result<SolutionState, Rejection> {
        let n = self.grid.len();
        let m = self.grid.m();
        let h0 = self.grid.h0();
        let dy = self.grid.dy();
        let p = self.params;

        let motion = self.motion(state)?;
        let len = state.h - state.g;

        // advection, first-order upwind
        for (i, &y) in self.grid.nodes().iter().enumerate() {
            self.adv[i] = y * (motion.h_dot - motion.g_dot) / len
                + h0 * (motion.h_dot + motion.g_dot) / len;
        }
        self.u_star[0] = 0.0;
        self.v_star[0] = 0.0;
        self.u_star[n - 1] = 0.0;
        self.v_star[n - 1] = 0.0;
        for i in 1..=m {
            let c = self.adv[i] * dt / dy;
            let (du, dv) = if c > 0.0 {
                (state.u[i + 1] - state.u[i], state.v[i + 1] - state.v[i])
            } else {
                (state.u[i] - state.u[i - 1], state.v[i] - state.v[i - 1])
            };
            self.u_star[i] = state.u[i] + c * du;
            self.v_star[i] = state.v[i] + c * dv;
        }

        // backward-Euler diffusion of u with homogeneous Dirichlet walls;
        // constant-coefficient Thomas sweep on nodes 1..=m
        let b = 4.0 * h0 * h0 * p.d1() / (len * len);
        let r = dt * b / (dy * dy);
        let diag = 1.0 + 2.0 * r;
        let mut u_new = vec![0.0; n];
        {
            let cp = &mut self.sweep;
            let rhs = &mut self.u_star;
            cp[1] = -r / diag;
            rhs[1] /= diag;
            for i in 2..=m {
                let denom = diag + r * cp[i - 1];
                cp[i] = -r / denom;
                rhs[i] = (rhs[i] + r * rhs[i - 1]) / denom;
            }
            u_new[m] = rhs[m];
            for i in (1..m).rev() {
                u_new[i] = rhs[i] - cp[i] * u_new[i + 1];
            }
        }
        let mut v_new = self.v_star.clone();
        v_new[0] = 0.0;
        v_new[n - 1] = 0.0;

        // pointwise reaction
        let reaction = Reaction::new(&p);
        let substeps = ((dt * reaction.max_rate / self.options.reaction_gain).ceil() as usize).max(1);
        let tau = dt / substeps as f64;
        for i in 1..=m {
            let (ui, vi) = reaction.advance(u_new[i], v_new[i], tau, substeps);
            u_new[i] = ui;
            v_new[i] = vi;
        }

        enforce_bounds(&mut u_new, Field::Birds, p.n_b())?;
        enforce_bounds(&mut v_new, Field::Mosquitoes, p.a_m())?;

        // fronts
        let (mut g_new, mut h_new) = (
            state.g + dt * motion.g_dot,
            state.h + dt * motion.h_dot,
        );
        if self.options.front_integrator == FrontIntegrator::Heun {
            let (g_dot_end, h_dot_end) = self.front_velocities(&u_new, g_new, h_new)?;
            g_new = state.g + 0.5 * dt * (motion.g_dot + g_dot_end);
            h_new = state.h + 0.5 * dt * (motion.h_dot + h_dot_end);
        }
        if !(g_new.is_finite() && h_new.is_finite()) {
            return Err(Rejection::NonFiniteFront);
        }

        Ok(SolutionState {
            t: state.t + dt,
            g: g_new,
            h: h_new,
            u: u_new,
            v: v_new,
        })
    }
}

/// Strang-split exact exponential integrator for the local reaction system.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Reaction {
    gamma_b: f64,
    d_m: f64,
    birds_gain: f64,
    mosq_gain: f64,
    inv_nb: f64,
    a_m: f64,
    max_rate: f64,
}

impl Reaction {
    pub(crate) fn new(p: &ModelParams) -> Self {
        let birds_gain = p.alpha_b() * p.beta_b();
        let mosq_gain = p.alpha_m() * p.beta_b();
        // bounds of the two linear rates over [0, N_b] x [0, A_m]
        let max_rate = (p.gamma_b() + birds_gain * p.a_m() / p.n_b())
            .max(p.d_m() + mosq_gain);
        Self {
            gamma_b: p.gamma_b(),
            d_m: p.d_m(),
            birds_gain,
            mosq_gain,
            inv_nb: 1.0 / p.n_b(),
            a_m: p.a_m(),
            max_rate,
        }
    }

    #[inline]
    fn birds(&self, u: f64, v: f64, tau: f64) -> f64 {
        let k = self.gamma_b + self.birds_gain * v * self.inv_nb;
        let eq = self.birds_gain * v / k;
        u + (eq - u) * -(-k * tau).exp_m1()
    }

    #[inline]
    fn mosquitoes(&self, u: f64, v: f64, tau: f64) -> f64 {
        let k = self.d_m + self.mosq_gain * u * self.inv_nb;
        let eq = self.mosq_gain * self.a_m * u * self.inv_nb / k;
        v + (eq - v) * -(-k * tau).exp_m1()
    }

    #[inline]
    pub(crate) fn advance(&self, mut u: f64, mut v: f64, tau: f64, substeps: usize) -> (f64, f64) {
        let half = 0.5 * tau;
        for _ in 0..substeps {
            v = self.mosquitoes(u, v, half);
            u = self.birds(u, v, tau);
            v = self.mosquitoes(u, v, half);
        }
        (u, v)
    }
}

fn enforce_bounds(values: &mut [f64], field: Field, cap: f64) -> Result<(), Rejection> {
    let floor = -UNDERSHOOT_TOL * cap;
    let ceiling = cap * (1.0 + UNDERSHOOT_TOL);
    for (node, x) in values.iter_mut().enumerate() {
        if !x.is_finite() {
            return Err(Rejection::NonFinite { field, node });
        }
        if *x < 0.0 {
            if *x < floor {
                return Err(Rejection::Undershoot { field, node, value: *x });
            }
            *x = 0.0;
        } else if *x > ceiling {
            return Err(Rejection::Overshoot { field, node, value: *x });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ParamName;
    use crate::solver::InitialData;
    use std::f64::consts::PI;

    #[test]
    fn stationary_fronts_give_zero_advection() {
        let motion = FrontMotion { g: -3.0, h: 5.0, g_dot: 0.0, h_dot: 0.0 };
        for y in [-4.0, -1.0, 0.0, 2.5, 4.0] {
            let (a, _) = transport_coefficients(&motion, 4.0, 2.0, y).unwrap();
            assert_eq!(a, 0.0);
        }
    }

    #[test]
    fn initial_interval_has_unit_diffusion_scaling() {
        let motion = FrontMotion { g: -4.0, h: 4.0, g_dot: -0.3, h_dot: 0.7 };
        let (_, b) = transport_coefficients(&motion, 4.0, 2.5, 1.0).unwrap();
        assert!((b - 2.5).abs() < 1e-15);
    }

    #[test]
    fn symmetric_motion_gives_odd_advection() {
        let motion = FrontMotion { g: -6.0, h: 6.0, g_dot: -0.25, h_dot: 0.25 };
        for y in [0.5, 1.0, 3.0] {
            let (a_pos, _) = transport_coefficients(&motion, 4.0, 1.0, y).unwrap();
            let (a_neg, _) = transport_coefficients(&motion, 4.0, 1.0, -y).unwrap();
            assert!((a_pos - y * 2.0 * 0.25 / 12.0).abs() < 1e-15);
            assert_eq!(a_pos, -a_neg);
        }
    }

    #[test]
    fn transport_rejects_empty_interval() {
        let motion = FrontMotion { g: 1.0, h: 1.0, g_dot: 0.0, h_dot: 0.0 };
        assert!(transport_coefficients(&motion, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn boundary_derivative_of_sine_is_second_order() {
        let h0 = 2.0;
        let mut errors = Vec::new();
        for m in [31, 63, 127, 255] {
            let grid = Grid::new(m, h0).unwrap();
            let u: Vec<f64> = grid
                .nodes()
                .iter()
                .map(|&y| (PI * (y + h0) / (2.0 * h0)).sin())
                .collect();
            let d = boundary_derivative(&u, grid.dy(), Side::Right);
            errors.push((d + PI / (2.0 * h0)).abs());
        }
        for w in errors.windows(2) {
            let ratio = w[0] / w[1];
            assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
        }
    }

    #[test]
    fn boundary_derivative_zero_and_mirror() {
        assert_eq!(boundary_derivative(&[0.0; 20], 0.1, Side::Left), 0.0);
        let grid = Grid::new(40, 1.0).unwrap();
        let u: Vec<f64> = grid.nodes().iter().map(|&y| 1.0 - y * y).collect();
        let l = boundary_derivative(&u, grid.dy(), Side::Left);
        let r = boundary_derivative(&u, grid.dy(), Side::Right);
        assert!(l > 0.0 && r < 0.0);
        assert!((l + r).abs() < 1e-12);
    }

    fn stepper(p: ModelParams, m: usize) -> (Stepper, SolutionState) {
        let grid = Grid::new(m, p.h0()).unwrap();
        let s0 = InitialData::default_cosine(&p).to_state(&grid, &p).unwrap();
        (Stepper::new(grid, p, StepOptions::default()), s0)
    }

    #[test]
    fn zero_state_is_a_fixed_point() {
        let p = ModelParams::fig1();
        let (mut st, mut s) = stepper(p, 31);
        s.u.iter_mut().for_each(|x| *x = 0.0);
        s.v.iter_mut().for_each(|x| *x = 0.0);
        let next = st.step(&s, 0.05).unwrap();
        assert_eq!(next.u, s.u);
        assert_eq!(next.v, s.v);
        assert_eq!((next.g, next.h), (s.g, s.h));
    }

    #[test]
    fn tiny_mu_freezes_fronts() {
        let p = ModelParams::fig1().with(ParamName::Mu, 1e-300).unwrap();
        let (mut st, mut s) = stepper(p, 63);
        for _ in 0..100 {
            s = st.step(&s, 0.02).unwrap();
        }
        assert_eq!((s.g, s.h), (-4.0, 4.0));
    }

    #[test]
    fn fronts_move_outward_and_state_stays_bounded() {
        let p = ModelParams::fig2();
        let (mut st, mut s) = stepper(p, 63);
        let mut prev = s.clone();
        for _ in 0..200 {
            s = st.step(&prev, st.suggested_dt(&prev)).unwrap();
            assert!(s.h > prev.h && s.g < prev.g);
            assert!(s.u.iter().all(|&x| (0.0..=p.n_b()).contains(&x)));
            assert!(s.v.iter().all(|&x| (0.0..=p.a_m()).contains(&x)));
            assert_eq!((s.u[0], *s.u.last().unwrap()), (0.0, 0.0));
            prev = s.clone();
        }
    }

    #[test]
    fn reaction_preserves_equilibrium() {
        let p = ModelParams::fig2();
        let (ib, im) = crate::thresholds::endemic_equilibrium(&p).unwrap();
        let r = Reaction::new(&p);
        let (u, v) = r.advance(ib, im, 0.01, 50);
        assert!((u - ib).abs() < 1e-12 * ib && (v - im).abs() < 1e-12 * im);
    }

    #[test]
    fn large_cfl_step_is_rejected() {
        // huge mu drives |A| dt / dy far above 1 next to the walls
        let p = ModelParams::fig1().with(ParamName::Mu, 1e4).unwrap();
        let (mut st, s) = stepper(p, 31);
        assert!(st.step(&s, 1.0).is_err());
        assert!(st.step(&s, st.suggested_dt(&s)).is_ok());
    }
}
