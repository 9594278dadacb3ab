use serde::{Deserialize, Serialize};

use super::{FrontIntegrator, Grid, InitialData, SolutionState, SolverError, StepOptions, Stepper};
use crate::oracles::energy_functional;
use crate::params::ModelParams;
use crate::thresholds::risk_index;

pub const DEFAULT_INTERIOR_NODES: usize = 199;
pub const DEFAULT_SAMPLES: usize = 500;
pub const MAX_HALVINGS: u32 = 20;

/// Discretisation and output controls for one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Numerics {
    /// Interior grid nodes.
    pub m: usize,
    /// Fixed time step; `None` picks the step adaptively from the CFL and
    /// reaction limits.
    pub dt: Option<f64>,
    pub t_max: f64,
    /// Spacing of the recorded time series; defaults to `t_max / 500`.
    pub sample_interval: Option<f64>,
    pub snapshot_times: Vec<f64>,
    pub step: StepOptions,
}

impl Numerics {
    pub fn new(t_max: f64) -> Self {
        Self {
            m: DEFAULT_INTERIOR_NODES,
            dt: None,
            t_max,
            sample_interval: None,
            snapshot_times: Vec::new(),
            step: StepOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |msg: String| Err(SolverError::InvalidNumerics(msg));
        if !(self.t_max >= 0.0 && self.t_max.is_finite()) {
            return bad(format!("t_max must be finite and >= 0, got {}", self.t_max));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad(format!("dt must be positive, got {dt}"));
            }
        }
        if let Some(s) = self.sample_interval {
            if !(s > 0.0 && s.is_finite()) {
                return bad(format!("sample_interval must be positive, got {s}"));
            }
        }
        if let Some(t) = self
            .snapshot_times
            .iter()
            .find(|t| !(**t >= 0.0 && **t <= self.t_max))
        {
            return bad(format!("snapshot time {t} outside [0, t_max]"));
        }
        if !(self.step.reaction_gain > 0.0 && self.step.reaction_gain.is_finite()) {
            return bad(format!(
                "reaction_gain must be positive, got {}",
                self.step.reaction_gain
            ));
        }
        Ok(())
    }

    pub fn effective_sample_interval(&self) -> f64 {
        self.sample_interval
            .unwrap_or(self.t_max / DEFAULT_SAMPLES as f64)
    }
}

/// One row of the recorded time series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub g: f64,
    pub h: f64,
    pub span: f64,
    pub sup_u: f64,
    pub sup_v: f64,
    pub energy: f64,
    pub r0f: f64,
    pub g_dot: f64,
    pub h_dot: f64,
}

impl Sample {
    pub fn front_speed(&self) -> f64 {
        self.h_dot.abs().max(self.g_dot.abs())
    }
}

/// Profiles in physical coordinates at one instant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub x: Vec<f64>,
    pub i_b: Vec<f64>,
    pub i_m: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Completed,
    Observer,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub m: usize,
    pub dy: f64,
    pub dt_fixed: Option<f64>,
    pub dt_min: f64,
    pub dt_max: f64,
    pub steps: u64,
    pub rejections: u64,
    pub front_integrator: FrontIntegrator,
    pub reaction_gain: f64,
    pub t_max: f64,
    pub t_end: f64,
    pub stop: StopReason,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub samples: Vec<Sample>,
    pub snapshots: Vec<Snapshot>,
    pub meta: RunMeta,
    pub final_state: SolutionState,
}

impl RunRecord {
    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("a record always holds the initial sample")
    }
}

/// Returned by the per-step observer of [`run_with`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

struct Event {
    t: f64,
    sample: bool,
    snapshot: bool,
}

fn schedule(numerics: &Numerics) -> Vec<Event> {
    let t_max = numerics.t_max;
    let mut events = Vec::new();
    if t_max <= 0.0 {
        return events;
    }
    let interval = numerics.effective_sample_interval();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * t_max.max(1.0);
    let mut k = 1u64;
    loop {
        let t = k as f64 * interval;
        if t > t_max || close(t, t_max) {
            break;
        }
        events.push(Event { t, sample: true, snapshot: false });
        k += 1;
    }
    events.push(Event { t: t_max, sample: true, snapshot: false });
    for &ts in &numerics.snapshot_times {
        if ts <= 0.0 {
            continue;
        }
        match events.iter_mut().find(|e| close(e.t, ts)) {
            Some(e) => e.snapshot = true,
            None => events.push(Event { t: ts, sample: false, snapshot: true }),
        }
    }
    events.sort_by(|a, b| a.t.total_cmp(&b.t));
    events
}

/// Integrate from `t = 0` to `numerics.t_max`.
pub fn run(
    p: &ModelParams,
    init: &InitialData,
    numerics: &Numerics,
) -> Result<RunRecord, SolverError> {
    run_with(p, init, numerics, |_| Control::Continue)
}

/// As [`run`], calling `observer` after every accepted step; returning
/// [`Control::Stop`] ends the run early with a final sample.
pub fn run_with<F>(
    p: &ModelParams,
    init: &InitialData,
    numerics: &Numerics,
    mut observer: F,
) -> Result<RunRecord, SolverError>
where
    F: FnMut(&SolutionState) -> Control,
{
    numerics.validate()?;
    let grid = Grid::new(numerics.m, p.h0())?;
    let mut state = init.to_state(&grid, p)?;
    let mut stepper = Stepper::new(grid, *p, numerics.step);

    let mut samples = vec![sample_of(&stepper, &state)];
    let mut snapshots = Vec::new();
    if numerics.snapshot_times.iter().any(|&t| t <= 0.0) {
        snapshots.push(snapshot_of(stepper.grid(), &state));
    }

    let mut meta = RunMeta {
        m: numerics.m,
        dy: stepper.grid().dy(),
        dt_fixed: numerics.dt,
        dt_min: f64::INFINITY,
        dt_max: 0.0,
        steps: 0,
        rejections: 0,
        front_integrator: numerics.step.front_integrator,
        reaction_gain: numerics.step.reaction_gain,
        t_max: numerics.t_max,
        t_end: 0.0,
        stop: StopReason::Completed,
    };

    'events: for event in schedule(numerics) {
        while state.t < event.t {
            let remaining = event.t - state.t;
            let nominal = numerics.dt.unwrap_or_else(|| stepper.suggested_dt(&state));
            let mut dt = nominal.min(remaining);
            let mut lands = nominal >= remaining;
            let mut halvings = 0;
            let next = loop {
                match stepper.step(&state, dt) {
                    Ok(mut next) => {
                        if lands {
                            next.t = event.t;
                        }
                        break next;
                    }
                    Err(reason) => {
                        meta.rejections += 1;
                        halvings += 1;
                        if halvings > MAX_HALVINGS {
                            return Err(SolverError::StepRejected {
                                t: state.t,
                                reason,
                                suggested_dt: 0.5 * dt,
                            });
                        }
                        dt *= 0.5;
                        lands = false;
                    }
                }
            };
            meta.steps += 1;
            meta.dt_min = meta.dt_min.min(dt);
            meta.dt_max = meta.dt_max.max(dt);
            state = next;
            if observer(&state) == Control::Stop {
                meta.stop = StopReason::Observer;
                samples.push(sample_of(&stepper, &state));
                break 'events;
            }
        }
        if event.sample {
            samples.push(sample_of(&stepper, &state));
        }
        if event.snapshot {
            snapshots.push(snapshot_of(stepper.grid(), &state));
        }
    }

    if meta.steps == 0 {
        meta.dt_min = 0.0;
    }
    meta.t_end = state.t;
    Ok(RunRecord {
        samples,
        snapshots,
        meta,
        final_state: state,
    })
}

fn sample_of(stepper: &Stepper, state: &SolutionState) -> Sample {
    let p = stepper.params();
    let (g_dot, h_dot) = stepper
        .front_velocities(&state.u, state.g, state.h)
        .unwrap_or((f64::NAN, f64::NAN));
    Sample {
        t: state.t,
        g: state.g,
        h: state.h,
        span: state.span(),
        sup_u: state.sup_u(),
        sup_v: state.sup_v(),
        energy: energy_functional(state, p),
        r0f: risk_index(p, state.g, state.h).unwrap_or(f64::NAN),
        g_dot,
        h_dot,
    }
}

fn snapshot_of(grid: &Grid, state: &SolutionState) -> Snapshot {
    Snapshot {
        t: state.t,
        x: grid.physical(state.g, state.h),
        i_b: state.u.clone(),
        i_m: state.v.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_horizon_records_initial_sample_only() {
        let p = ModelParams::fig1();
        let mut numerics = Numerics::new(0.0);
        numerics.snapshot_times = vec![0.0];
        let rec = run(&p, &InitialData::default_cosine(&p), &numerics).unwrap();
        assert_eq!(rec.samples.len(), 1);
        assert_eq!(rec.snapshots.len(), 1);
        assert_eq!(rec.meta.steps, 0);
        assert_eq!(rec.first().span, 8.0);
    }

    #[test]
    fn samples_land_on_schedule() {
        let p = ModelParams::fig1();
        let mut numerics = Numerics::new(2.0);
        numerics.m = 31;
        numerics.sample_interval = Some(0.25);
        numerics.snapshot_times = vec![0.3, 1.0];
        let rec = run(&p, &InitialData::default_cosine(&p), &numerics).unwrap();
        let times: Vec<f64> = rec.samples.iter().map(|s| s.t).collect();
        let expected: Vec<f64> = (0..=8).map(|k| k as f64 * 0.25).collect();
        assert_eq!(times, expected);
        let snap_times: Vec<f64> = rec.snapshots.iter().map(|s| s.t).collect();
        assert_eq!(snap_times, vec![0.3, 1.0]);
        assert_eq!(rec.meta.t_end, 2.0);
        for w in rec.samples.windows(2) {
            assert!(w[1].h > w[0].h && w[1].g < w[0].g);
            assert!(w[1].r0f > w[0].r0f);
        }
    }

    #[test]
    fn observer_can_stop_the_run() {
        let p = ModelParams::fig1();
        let mut numerics = Numerics::new(10.0);
        numerics.m = 31;
        let rec = run_with(&p, &InitialData::default_cosine(&p), &numerics, |s| {
            if s.t > 1.0 {
                Control::Stop
            } else {
                Control::Continue
            }
        })
        .unwrap();
        assert_eq!(rec.meta.stop, StopReason::Observer);
        assert!(rec.last().t > 1.0 && rec.last().t < 10.0);
    }

    #[test]
    fn rejects_bad_numerics() {
        let p = ModelParams::fig1();
        let init = InitialData::default_cosine(&p);
        let mut n = Numerics::new(1.0);
        n.dt = Some(-1.0);
        assert!(run(&p, &init, &n).is_err());
        let mut n = Numerics::new(1.0);
        n.snapshot_times = vec![2.0];
        assert!(run(&p, &init, &n).is_err());
        let mut n = Numerics::new(1.0);
        n.m = 8;
        assert!(run(&p, &init, &n).is_err());
        assert!(run(&p, &init, &Numerics::new(f64::NAN)).is_err());
    }
}
