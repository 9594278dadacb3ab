//! Spreading/vanishing verdicts for finished runs, bisection for the critical
//! expansion capability, and parameter sweeps.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::{ModelParams, ParamName};
use crate::solver::{run_with, Control, InitialData, Numerics, RunRecord, SolverError};
use crate::thresholds::{basic_reproduction_number, risk_index, spreading_barrier, ThresholdReport};

pub const DEFAULT_EPS_NORM: f64 = 1e-5;
pub const DEFAULT_EPS_SPEED: f64 = 1e-6;
pub const DEFAULT_TOL_MU_FRACTION: f64 = 1e-3;
pub const MAX_BISECTIONS: u32 = 40;

/// Thresholds for calling a finite-horizon run vanishing.
///
/// Both are relative: `eps_norm` multiplies each field's population scale
/// (`N_b` for birds, `A_m` for mosquitoes) and `eps_speed` multiplies
/// `h0 / t_max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub eps_norm: f64,
    pub eps_speed: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eps_norm: DEFAULT_EPS_NORM,
            eps_speed: DEFAULT_EPS_SPEED,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Spreading,
    Vanishing,
    Undetermined,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Spreading => "spreading",
            Verdict::Vanishing => "vanishing",
            Verdict::Undetermined => "undetermined",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpreadingTrigger {
    /// The initial interval already has risk index at least one.
    #[serde(rename = "r0f_initial >= 1")]
    InitialRiskIndex,
    /// The risk index reached one at a later sample.
    RiskIndexCrossed,
}

/// Terminal quantities of a run together with the absolute thresholds they
/// were compared against.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Terminal {
    pub t: f64,
    pub sup_u: f64,
    pub sup_v: f64,
    pub span: f64,
    pub front_speed: f64,
    pub eps_u: f64,
    pub eps_v: f64,
    pub eps_speed: f64,
    pub l_star: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    Spreading {
        trigger: SpreadingTrigger,
        t0: f64,
        span_at_trigger: f64,
        r0f_at_trigger: f64,
    },
    /// Finite-horizon criterion; always flagged heuristic.
    Vanishing { terminal: Terminal, heuristic: bool },
    Undetermined {
        t_reached: f64,
        terminal: Terminal,
        unmet: Vec<String>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub verdict: Verdict,
    pub evidence: Evidence,
}

/// Decide the fate of a recorded run.
///
/// Spreading is declared as soon as any sample has risk index at least one,
/// which is a sufficient condition. Vanishing needs small sup-norms, slow
/// fronts and a span below the barrier at the end of the full horizon.
pub fn classify(record: &RunRecord, p: &ModelParams, tol: &Tolerances) -> Classification {
    let first = record.first();
    if let Some(s) = record.samples.iter().find(|s| s.r0f >= 1.0) {
        let trigger = if s.t == first.t {
            SpreadingTrigger::InitialRiskIndex
        } else {
            SpreadingTrigger::RiskIndexCrossed
        };
        return Classification {
            verdict: Verdict::Spreading,
            evidence: Evidence::Spreading {
                trigger,
                t0: s.t,
                span_at_trigger: s.span,
                r0f_at_trigger: s.r0f,
            },
        };
    }

    let last = record.last();
    let t_max = record.meta.t_max;
    let l_star = spreading_barrier(p).ok();
    let terminal = Terminal {
        t: last.t,
        sup_u: last.sup_u,
        sup_v: last.sup_v,
        span: last.span,
        front_speed: last.front_speed(),
        eps_u: tol.eps_norm * p.n_b(),
        eps_v: tol.eps_norm * p.a_m(),
        eps_speed: if t_max > 0.0 {
            tol.eps_speed * p.h0() / t_max
        } else {
            0.0
        },
        l_star,
    };

    let mut unmet = Vec::new();
    if !(last.t > 0.0 && last.t >= t_max) {
        unmet.push(format!("horizon t_max = {t_max} not reached (stopped at {})", last.t));
    }
    if !(terminal.sup_u < terminal.eps_u) {
        unmet.push(format!("sup_u = {:e} >= {:e}", terminal.sup_u, terminal.eps_u));
    }
    if !(terminal.sup_v < terminal.eps_v) {
        unmet.push(format!("sup_v = {:e} >= {:e}", terminal.sup_v, terminal.eps_v));
    }
    if !(terminal.front_speed < terminal.eps_speed) {
        unmet.push(format!(
            "front speed = {:e} >= {:e}",
            terminal.front_speed, terminal.eps_speed
        ));
    }
    if let Some(l) = l_star {
        if !(terminal.span < l) {
            unmet.push(format!("span = {} >= l* = {l}", terminal.span));
        }
    }

    if unmet.is_empty() {
        Classification {
            verdict: Verdict::Vanishing,
            evidence: Evidence::Vanishing {
                terminal,
                heuristic: true,
            },
        }
    } else {
        Classification {
            verdict: Verdict::Undetermined,
            evidence: Evidence::Undetermined {
                t_reached: last.t,
                terminal,
                unmet,
            },
        }
    }
}

/// Run until `t_max`, stopping early once the risk index reaches one since
/// the verdict is then settled.
pub fn simulate_for_verdict(
    p: &ModelParams,
    init: &InitialData,
    numerics: &Numerics,
) -> Result<RunRecord, SolverError> {
    run_with(p, init, numerics, |s| {
        match risk_index(p, s.g, s.h) {
            Ok(r) if r >= 1.0 => Control::Stop,
            _ => Control::Continue,
        }
    })
}

pub fn simulate_and_classify(
    p: &ModelParams,
    init: &InitialData,
    numerics: &Numerics,
    tol: &Tolerances,
) -> Result<(RunRecord, Classification), SolverError> {
    let record = simulate_for_verdict(p, init, numerics)?;
    let class = classify(&record, p, tol);
    Ok((record, class))
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MuStarError {
    #[error("invalid bracket: {0}")]
    InvalidBracket(String),
    #[error("bisection budget of {0} iterations exhausted before reaching the tolerance")]
    BudgetExhausted(u32),
    #[error("run at mu = {mu} failed: {source}")]
    Solver {
        mu: f64,
        #[source]
        source: SolverError,
    },
    #[error(transparent)]
    Param(#[from] crate::params::ParamError),
}

/// One classified run made during the search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuStarIteration {
    pub mu: f64,
    pub verdict: Verdict,
    pub t_max: f64,
    /// Undetermined even after doubling the horizon, and counted as vanishing.
    pub flagged: bool,
    pub runtime_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuStarResult {
    pub mu_lo: f64,
    pub mu_hi: f64,
    pub verdict_lo: Verdict,
    pub verdict_hi: Verdict,
    /// True when the low end was only assigned to the vanishing side.
    pub lo_flagged: bool,
    pub iterations: u32,
    pub log: Vec<MuStarIteration>,
}

impl MuStarResult {
    pub fn width(&self) -> f64 {
        self.mu_hi - self.mu_lo
    }

    pub fn estimate(&self) -> f64 {
        0.5 * (self.mu_lo + self.mu_hi)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MuStarOutcome {
    /// The initial interval already forces spreading for every expansion rate.
    Zero { note: String },
    /// No expansion rate produces spreading.
    Infinite { note: String },
    Bracket(MuStarResult),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuStarSettings {
    pub mu_lo: f64,
    pub mu_hi: f64,
    /// Target bracket width; `None` uses a thousandth of the initial width.
    pub tol_mu: Option<f64>,
    pub max_bisections: u32,
}

impl MuStarSettings {
    pub fn new(mu_lo: f64, mu_hi: f64) -> Self {
        Self {
            mu_lo,
            mu_hi,
            tol_mu: None,
            max_bisections: MAX_BISECTIONS,
        }
    }

    pub fn effective_tol(&self) -> f64 {
        self.tol_mu
            .unwrap_or(DEFAULT_TOL_MU_FRACTION * (self.mu_hi - self.mu_lo))
    }
}

struct Probe {
    verdict: Verdict,
    flagged: bool,
}

fn probe(
    p_base: &ModelParams,
    init: &InitialData,
    numerics: &Numerics,
    tol: &Tolerances,
    mu: f64,
    log: &mut Vec<MuStarIteration>,
) -> Result<Probe, MuStarError> {
    let p = p_base.with(ParamName::Mu, mu)?;
    let mut horizon = numerics.clone();
    for attempt in 0..2 {
        let start = Instant::now();
        let (_, class) = simulate_and_classify(&p, init, &horizon, tol)
            .map_err(|source| MuStarError::Solver { mu, source })?;
        let verdict = class.verdict;
        let flagged = verdict == Verdict::Undetermined && attempt == 1;
        log.push(MuStarIteration {
            mu,
            verdict,
            t_max: horizon.t_max,
            flagged,
            runtime_s: start.elapsed().as_secs_f64(),
        });
        if verdict != Verdict::Undetermined {
            return Ok(Probe { verdict, flagged: false });
        }
        horizon.t_max *= 2.0;
    }
    Ok(Probe {
        verdict: Verdict::Vanishing,
        flagged: true,
    })
}

/// The regimes where the threshold is known without simulation: `R0 <= 1`
/// (never spreads) and an initial risk index of at least one (always spreads).
pub fn degenerate_mu_star(p: &ModelParams) -> Option<MuStarOutcome> {
    let report = ThresholdReport::compute(p);
    if report.r0 <= 1.0 {
        return Some(MuStarOutcome::Infinite {
            note: format!(
                "R0 = {} <= 1: the infection vanishes for every expansion capability",
                report.r0
            ),
        });
    }
    if report.r0f_initial >= 1.0 {
        return Some(MuStarOutcome::Zero {
            note: format!(
                "initial risk index {} >= 1: the infection spreads for every expansion capability",
                report.r0f_initial
            ),
        });
    }
    None
}

/// Locate the critical expansion capability by bisection on `mu`.
///
/// The two degenerate regimes are reported without any simulation. Otherwise
/// the bracket ends must classify vanishing and spreading respectively, and
/// each midpoint is settled by a full run. A midpoint that stays undetermined
/// after one doubling of the horizon is counted as vanishing and flagged.
pub fn find_mu_star(
    p_base: &ModelParams,
    init: &InitialData,
    numerics: &Numerics,
    tol: &Tolerances,
    settings: &MuStarSettings,
) -> Result<MuStarOutcome, MuStarError> {
    if let Some(outcome) = degenerate_mu_star(p_base) {
        return Ok(outcome);
    }

    let (mut lo, mut hi) = (settings.mu_lo, settings.mu_hi);
    let tol_mu = settings.effective_tol();
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(MuStarError::InvalidBracket(format!(
            "need 0 < mu_lo < mu_hi, got ({lo}, {hi})"
        )));
    }
    if !(tol_mu > 0.0 && tol_mu.is_finite()) {
        return Err(MuStarError::InvalidBracket(format!(
            "tol_mu must be positive, got {tol_mu}"
        )));
    }

    let mut log = Vec::new();
    let at_lo = probe(p_base, init, numerics, tol, lo, &mut log)?;
    let at_hi = probe(p_base, init, numerics, tol, hi, &mut log)?;
    if at_lo.flagged || at_lo.verdict != Verdict::Vanishing || at_hi.verdict != Verdict::Spreading
    {
        let shown = |p: &Probe| {
            if p.flagged {
                "undetermined".to_string()
            } else {
                p.verdict.to_string()
            }
        };
        return Err(MuStarError::InvalidBracket(format!(
            "expected vanishing at mu_lo = {lo} and spreading at mu_hi = {hi}, got {} and {}",
            shown(&at_lo),
            shown(&at_hi)
        )));
    }

    let mut lo_flagged = false;
    let mut iterations = 0;
    while hi - lo > tol_mu {
        if iterations == settings.max_bisections {
            return Err(MuStarError::BudgetExhausted(settings.max_bisections));
        }
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let res = probe(p_base, init, numerics, tol, mid, &mut log)?;
        if res.verdict == Verdict::Spreading {
            hi = mid;
        } else {
            lo = mid;
            lo_flagged = res.flagged;
        }
    }

    Ok(MuStarOutcome::Bracket(MuStarResult {
        mu_lo: lo,
        mu_hi: hi,
        verdict_lo: Verdict::Vanishing,
        verdict_hi: Verdict::Spreading,
        lo_flagged,
        iterations,
        log,
    }))
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepSpecError {
    #[error("sweep spec must look like name=lo:hi:step, got {0:?}")]
    Malformed(String),
    #[error("unknown parameter {0:?}")]
    UnknownName(String),
    #[error("sweep bound {0:?} is not a finite number")]
    BadNumber(String),
    #[error("sweep step must be positive, got {0}")]
    BadStep(f64),
}

/// A parameter and the arithmetic range it is swept over.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub name: ParamName,
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl SweepSpec {
    pub fn new(name: ParamName, lo: f64, hi: f64, step: f64) -> Result<Self, SweepSpecError> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(SweepSpecError::BadStep(step));
        }
        Ok(Self { name, lo, hi, step })
    }

    /// `lo, lo + step, ...` up to `hi`, allowing for rounding at the top end.
    /// Empty when `lo > hi`.
    pub fn values(&self) -> Vec<f64> {
        if self.lo > self.hi {
            return Vec::new();
        }
        let count = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|k| self.lo + k as f64 * self.step).collect()
    }
}

impl FromStr for SweepSpec {
    type Err = SweepSpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = || SweepSpecError::Malformed(s.to_string());
        let (name, range) = s.split_once('=').ok_or_else(malformed)?;
        let name: ParamName = name
            .trim()
            .parse()
            .map_err(|_| SweepSpecError::UnknownName(name.trim().to_string()))?;
        let parts: Vec<&str> = range.split(':').collect();
        if parts.len() != 3 {
            return Err(malformed());
        }
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| SweepSpecError::BadNumber(t.trim().to_string()))
        };
        SweepSpec::new(name, num(parts[0])?, num(parts[1])?, num(parts[2])?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub report: ThresholdReport,
    pub classification: Classification,
    pub h_end: f64,
    pub g_end: f64,
    pub sup_u_end: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub value: f64,
    pub outcome: Result<SweepOutcome, String>,
}

/// Independent runs over the values of `spec`, in parallel, ordered by value.
/// Runs go to the full horizon so terminal fronts are comparable across rows.
/// A failing row records its error without affecting the others.
pub fn sweep(
    p_base: &ModelParams,
    init: &InitialData,
    numerics: &Numerics,
    tol: &Tolerances,
    spec: &SweepSpec,
) -> Vec<SweepEntry> {
    spec.values()
        .into_par_iter()
        .map(|value| {
            let outcome = p_base
                .with(spec.name, value)
                .map_err(|e| e.to_string())
                .and_then(|p| {
                    let record = crate::solver::run(&p, init, numerics).map_err(|e| e.to_string())?;
                    let last = record.last();
                    Ok(SweepOutcome {
                        report: ThresholdReport::compute(&p),
                        classification: classify(&record, &p, tol),
                        h_end: last.h,
                        g_end: last.g,
                        sup_u_end: last.sup_u,
                    })
                });
            SweepEntry { value, outcome }
        })
        .collect()
}

/// The value of `beta_b` at which R0 equals one, other parameters fixed.
pub fn critical_biting_rate(p: &ModelParams) -> f64 {
    p.beta_b() / basic_reproduction_number(p).sqrt()
}
