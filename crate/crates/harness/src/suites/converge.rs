//! Grid refinement: identity residuals and functional values against the finest grid.

use aktorus::functionals::PotentialState;
use aktorus::sampler::TrigPolynomial;

use super::algebra::{splitting_residuals, star_residuals, SPLITTING_FORMS};
use super::{stream, Scenario, Stream};
use crate::config::ScenarioConfig;
use crate::error::{HarnessError, Result};
use crate::report::{Check, ConvergenceTable, VerificationReport};

/// `max_i r_{i+1} / max(r_i, floor)`; at most 1 when the residuals do not grow.
fn growth(residuals: &[f64], floor: f64) -> f64 {
    residuals.windows(2).map(|w| w[1] / w[0].max(floor)).fold(0.0, f64::max)
}

fn functionals_at(sc: &Scenario, poly: &TrigPolynomial<f64>) -> Result<[f64; 3]> {
    let f = poly.sample(sc.grid);
    let state: PotentialState<f64> = sc.st.potential_state(&f, &sc.solver)?;
    let terms = state.terms_with(&sc.st);
    Ok([terms.aubin_i(), terms.aubin_j(), state.twisted_donaldson()])
}

/// Residual tables over `cfg.sizes` with a non-growth check per quantity.
pub fn run_convergence(cfg: &ScenarioConfig) -> Result<VerificationReport> {
    let mut sizes = cfg.sizes.clone();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 2 {
        return Err(HarnessError::Config("convergence needs at least two grid sizes".into()));
    }
    let floor = cfg.tolerances.convergence_floor;
    let mut report = VerificationReport::new(cfg);
    let finest = {
        let mut c = cfg.clone();
        c.n = *sizes.last().unwrap();
        Scenario::new(&c)?
    };
    let mut rng = stream(cfg.seed, Stream::Potentials);
    let poly = cfg.potentials.sampler().sample(&finest.st, &finest.solver, &mut rng)?.poly;
    let reference = functionals_at(&finest, &poly)?;
    drop(finest);
    let mut star = Vec::new();
    let mut split = Vec::new();
    let mut values: [Vec<f64>; 3] = Default::default();
    for &n in &sizes {
        let mut c = cfg.clone();
        c.n = n;
        let sc = Scenario::new(&c)?;
        let s = star_residuals(&sc.st, cfg.forms, cfg.seed);
        star.push(s.weil.max(s.identity).max(s.primitive));
        let p = splitting_residuals(&sc.st, SPLITTING_FORMS, cfg.seed);
        split.push(p.split.max(p.plus_primitive).max(p.codifferential).max(p.decomposition));
        if n != *sizes.last().unwrap() {
            let v = functionals_at(&sc, &poly)?;
            for q in 0..3 {
                values[q].push((v[q] - reference[q]).abs() / reference[q].abs().max(1e-300));
            }
        }
    }
    let coarse = sizes[..sizes.len() - 1].to_vec();
    let tables = [
        ("star", sizes.clone(), star),
        ("splitting", sizes.clone(), split),
        ("aubin_i", coarse.clone(), values[0].clone()),
        ("aubin_j", coarse.clone(), values[1].clone()),
        ("twisted_donaldson", coarse, values[2].clone()),
    ];
    for (q, s, r) in tables {
        let check = if r.len() < 2 {
            Check::upper(format!("convergence.{q}"), 0.0, 1.0).with_note("single refinement level")
        } else {
            Check::upper(format!("convergence.{q}"), growth(&r, floor), 1.0).with_note(format!("floor {floor:e}"))
        };
        report.checks.push(check);
        report.convergence.push(ConvergenceTable { quantity: q.to_string(), sizes: s, residuals: r });
    }
    Ok(report)
}
