//! Explicit gradient descent on the twisted functional.

use aktorus::Error;

use super::{stream, Scenario, Stream};
use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::report::{Bound, Check, DescentRecord, VerificationReport};

const TAYLOR: &str = "descent.taylor";
const MONOTONE: &str = "descent.monotone";
const MEMBERSHIP: &str = "descent.membership";

fn failed_all(sc: &Scenario, why: String) -> Vec<Check> {
    let t = sc.tol();
    vec![
        Check::failed(TAYLOR, sc.cfg.descent.taylor_tolerance, Bound::Upper, why.clone()),
        Check::failed(MONOTONE, t.descent_increase, Bound::Upper, why.clone()),
        Check::failed(MEMBERSHIP, 0.0, Bound::Lower, why),
    ]
}

pub(crate) fn descent_checks(sc: &Scenario) -> (Vec<Check>, Option<DescentRecord>) {
    let mut rng = stream(sc.cfg.seed, Stream::Descent);
    let sampled = match sc.cfg.potentials.sampler().sample(&sc.st, &sc.solver, &mut rng) {
        Ok(s) => s,
        Err(e) => return (failed_all(sc, format!("initial potential: {e}")), None),
    };
    let phi0 = sampled.state.phi.f.clone();
    drop(sampled);
    let d = &sc.cfg.descent;
    let (rate, ratio) = match sc.st.taylor_rate(&phi0, d.initial_rate, d.taylor_tolerance, &sc.solver) {
        Ok(x) => x,
        Err(Error::NotConverged { residual, .. }) => {
            return (failed_all(sc, format!("no admissible rate down to {residual:e}")), None);
        }
        Err(e) => return (failed_all(sc, e.to_string()), None),
    };
    let traj = match sc.st.gradient_descent(&phi0, d.steps, rate, &sc.solver) {
        Ok(t) => t,
        Err(e) => return (failed_all(sc, e.to_string()), None),
    };
    let scale = traj.steps.iter().map(|s| s.twisted_donaldson.abs()).fold(0.0, f64::max).max(1e-300);
    let margin = traj.steps.iter().map(|s| s.positivity_margin).fold(f64::INFINITY, f64::min);
    let mut membership = Check::lower(MEMBERSHIP, margin, 0.0);
    if let Some(n) = &traj.diagnostic {
        membership = membership.with_note(n.clone());
    }
    let checks = vec![
        Check::upper(TAYLOR, (ratio - 1.0).abs(), d.taylor_tolerance).with_note(format!("rate {rate:e}")),
        Check::upper(MONOTONE, traj.max_increase() / scale, sc.tol().descent_increase)
            .with_note(format!("{} steps", traj.steps.len().saturating_sub(1))),
        membership,
    ];
    let record = DescentRecord { rate, taylor_ratio: ratio, steps: traj.steps, diagnostic: traj.diagnostic };
    (checks, Some(record))
}

/// Run only the descent suite.
pub fn run_descent(cfg: &ScenarioConfig) -> Result<VerificationReport> {
    let sc = Scenario::new(cfg)?;
    let mut report = VerificationReport::new(cfg);
    let (checks, record) = descent_checks(&sc);
    report.checks = checks;
    report.descent = record;
    Ok(report)
}
