//! Verification suites. Each produces named checks; [`run_suite`] drives the selection.

mod algebra;
mod converge;
mod descent;
mod potentials;

use std::collections::BTreeSet;
use std::time::Instant;

use aktorus::elliptic::SolverConfig;
use aktorus::{build_structure, FormField, GridSpec, Structure64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{ScenarioConfig, Suite};
use crate::error::Result;
use crate::report::{Check, VerificationReport};

pub use converge::run_convergence;
pub use descent::run_descent;
pub use potentials::{direction_for, sample_potentials, PotentialCase};

/// Sampler streams; every random draw in a run comes from one of these.
#[derive(Debug, Clone, Copy)]
#[repr(u64)]
pub enum Stream {
    Calculus = 1,
    Star = 2,
    Splitting = 3,
    Potentials = 4,
    Directions = 5,
    Structure = 6,
    Descent = 7,
}

pub fn stream(seed: u64, s: Stream) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(s as u64);
    r
}

/// A built structure with its configuration.
pub struct Scenario {
    pub cfg: ScenarioConfig,
    pub grid: GridSpec,
    pub st: Structure64,
    pub solver: SolverConfig,
}

impl Scenario {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = cfg.grid()?;
        let st = build_structure(grid, cfg.recipe())?;
        Ok(Self { cfg: cfg.clone(), grid, st, solver: cfg.solver() })
    }

    /// Same configuration on an `n`-point grid.
    pub fn resized(&self, n: usize) -> Result<Self> {
        let mut cfg = self.cfg.clone();
        cfg.n = n;
        Self::new(&cfg)
    }

    pub fn tol(&self) -> &crate::config::Tolerances {
        &self.cfg.tolerances
    }
}

/// Collects checks, stamping wall time when enabled.
pub struct Recorder {
    pub checks: Vec<Check>,
    timings: bool,
}

impl Recorder {
    pub fn new(timings: bool) -> Self {
        Self { checks: Vec::new(), timings }
    }

    /// Run `f`; every check it returns gets the elapsed time of the whole call.
    pub fn timed(&mut self, f: impl FnOnce() -> Vec<Check>) {
        let t0 = Instant::now();
        let mut out = f();
        let secs = if self.timings { t0.elapsed().as_secs_f64() } else { 0.0 };
        for c in out.iter_mut() {
            c.seconds = secs;
        }
        self.checks.extend(out);
    }

    pub fn push_all(&mut self, checks: Vec<Check>, secs: f64) {
        let secs = if self.timings { secs } else { 0.0 };
        self.checks.extend(checks.into_iter().map(|mut c| {
            c.seconds = secs;
            c
        }));
    }
}

/// `max|a − b| / max(max|b|, floor)`.
pub(crate) fn rel_diff(a: &FormField<f64>, b: &FormField<f64>) -> f64 {
    a.sub(b).max_abs() / b.max_abs().max(1e-300)
}

/// `max|a| / max(scale, floor)`.
pub(crate) fn rel(a: &FormField<f64>, scale: f64) -> f64 {
    a.max_abs() / scale.max(1e-300)
}

/// Execute the selected suites for one scenario.
pub fn run_suite(cfg: &ScenarioConfig) -> Result<VerificationReport> {
    let sc = Scenario::new(cfg)?;
    let mut report = VerificationReport::new(cfg);
    let mut rec = Recorder::new(cfg.timings);
    let selected: BTreeSet<Suite> = cfg.suites.iter().copied().collect();
    for suite in &selected {
        match suite {
            Suite::Structure => rec.timed(|| algebra::structure_checks(&sc)),
            Suite::Calculus => rec.timed(|| algebra::calculus_checks(&sc)),
            Suite::Star => rec.timed(|| algebra::star_checks(&sc)),
            Suite::Splitting => rec.timed(|| algebra::splitting_checks(&sc)),
            _ => {}
        }
    }
    if selected.iter().any(|s| potentials::SUITES.contains(s)) {
        potentials::sweep(&sc, &selected, &mut rec, &mut report);
    }
    if selected.contains(&Suite::Descent) {
        let t0 = Instant::now();
        let (checks, record) = descent::descent_checks(&sc);
        rec.push_all(checks, t0.elapsed().as_secs_f64());
        report.descent = record;
    }
    report.checks = rec.checks;
    Ok(report)
}
