//! Front-tracking solver for the free-boundary system on the fixed
//! transformed interval `[-h0, h0]`.

mod grid;
mod run;
mod state;
mod step;

pub use grid::{Grid, MIN_INTERIOR_NODES};
pub use run::{run, run_with, Control, Numerics, RunMeta, RunRecord, Sample, Snapshot, StopReason};
pub use state::{InitialData, SolutionState};
pub use step::{
    boundary_derivative, transport_coefficients, Field, FrontIntegrator, FrontMotion, Rejection,
    Side, StepOptions, Stepper, DEFAULT_REACTION_GAIN, UNDERSHOOT_TOL,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("invalid numerics: {0}")]
    InvalidNumerics(String),
    #[error("invalid initial data: {0}")]
    InvalidInitialData(String),
    #[error("interval ({g}, {h}) is empty")]
    EmptyInterval { g: f64, h: f64 },
    #[error("step rejected at t = {t} ({reason}); retry with dt <= {suggested_dt:e}")]
    StepRejected {
        t: f64,
        reason: Rejection,
        suggested_dt: f64,
    },
}
