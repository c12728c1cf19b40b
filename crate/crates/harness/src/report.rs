//! Verification reports and their JSON/CSV encodings.

use std::collections::BTreeMap;
use std::path::Path;

use aktorus::functionals::{DescentStep, FunctionalReport};
use serde::{Deserialize, Serialize};

use crate::config::{Format, ScenarioConfig};
use crate::error::{HarnessError, Result};

/// Which side of the tolerance passes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    /// `residual <= tolerance`
    Upper,
    /// `residual >= tolerance`
    Lower,
}

impl Bound {
    pub fn as_str(self) -> &'static str {
        match self {
            Bound::Upper => "upper",
            Bound::Lower => "lower",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub seconds: f64,
    pub bound: Bound,
    /// Diagnostics are reported but do not decide the exit status.
    pub gate: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

impl Check {
    pub fn upper(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self::new(name, residual, tolerance, Bound::Upper)
    }

    pub fn lower(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self::new(name, residual, tolerance, Bound::Lower)
    }

    fn new(name: impl Into<String>, residual: f64, tolerance: f64, bound: Bound) -> Self {
        let pass = match bound {
            Bound::Upper => residual <= tolerance,
            Bound::Lower => residual >= tolerance,
        };
        Self { name: name.into(), residual, tolerance, pass, seconds: 0.0, bound, gate: true, note: None }
    }

    /// A check that could not be evaluated.
    pub fn failed(name: impl Into<String>, tolerance: f64, bound: Bound, why: impl Into<String>) -> Self {
        let residual = match bound {
            Bound::Upper => f64::INFINITY,
            Bound::Lower => f64::NEG_INFINITY,
        };
        Self { name: name.into(), residual, tolerance, pass: false, seconds: 0.0, bound, gate: true, note: Some(why.into()) }
    }

    pub fn diagnostic(mut self) -> Self {
        self.gate = false;
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn suite(&self) -> &str {
        self.name.split('.').next().unwrap_or("")
    }

    /// Passing, or a diagnostic.
    pub fn ok(&self) -> bool {
        self.pass || !self.gate
    }
}

/// Running maximum (or minimum, for lower bounds) of one residual over many evaluations.
#[derive(Debug, Clone)]
pub struct Aggregate {
    pub name: String,
    pub tolerance: f64,
    pub bound: Bound,
    pub gate: bool,
    worst: Option<f64>,
    failure: Option<String>,
    samples: usize,
}

impl Aggregate {
    pub fn upper(name: impl Into<String>, tolerance: f64) -> Self {
        Self { name: name.into(), tolerance, bound: Bound::Upper, gate: true, worst: None, failure: None, samples: 0 }
    }

    pub fn lower(name: impl Into<String>, tolerance: f64) -> Self {
        Self { bound: Bound::Lower, ..Self::upper(name, tolerance) }
    }

    pub fn diagnostic(mut self) -> Self {
        self.gate = false;
        self
    }

    pub fn push(&mut self, r: f64) {
        self.samples += 1;
        let worse = |a: f64, b: f64| match self.bound {
            // NaN counts as the worst value.
            Bound::Upper => if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) },
            Bound::Lower => if a.is_nan() || b.is_nan() { f64::NAN } else { a.min(b) },
        };
        self.worst = Some(match self.worst {
            None => r,
            Some(w) => worse(w, r),
        });
    }

    pub fn fail(&mut self, why: impl Into<String>) {
        if self.failure.is_none() {
            self.failure = Some(why.into());
        }
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn finish(&self) -> Check {
        let mut c = match (self.worst, &self.failure) {
            (_, Some(why)) => Check::failed(&self.name, self.tolerance, self.bound, why.clone()),
            (None, None) => Check::failed(&self.name, self.tolerance, self.bound, "no samples"),
            (Some(w), None) => Check::new(&self.name, w, self.tolerance, self.bound).with_note(format!("worst of {}", self.samples)),
        };
        if let (Some(w), Some(_)) = (self.worst, &self.failure) {
            c.residual = w;
        }
        c.gate = self.gate;
        c
    }
}

/// Residuals of one quantity across grid sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub quantity: String,
    pub sizes: Vec<usize>,
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub m: usize,
    pub n: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub structure_seed: u64,
    pub versions: BTreeMap<String, String>,
}

impl Meta {
    pub fn of(cfg: &ScenarioConfig) -> Self {
        let mut versions = BTreeMap::new();
        versions.insert("aktorus-harness".to_string(), env!("CARGO_PKG_VERSION").to_string());
        versions.insert("report-schema".to_string(), "1".to_string());
        Self { m: cfg.m, n: cfg.n, epsilon: cfg.structure.epsilon, seed: cfg.seed, structure_seed: cfg.structure.seed, versions }
    }
}

/// One sampled potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialEntry {
    pub index: usize,
    pub scale: f64,
    pub critical_scale: f64,
    pub sigma_iterations: usize,
    pub report: FunctionalReport,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Functionals {
    pub potentials: Vec<PotentialEntry>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub constant: Option<FunctionalReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescentRecord {
    pub rate: f64,
    pub taylor_ratio: f64,
    pub steps: Vec<DescentStep>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub meta: Meta,
    pub checks: Vec<Check>,
    pub functionals: Functionals,
    pub convergence: Vec<ConvergenceTable>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub descent: Option<DescentRecord>,
}

impl VerificationReport {
    pub fn new(cfg: &ScenarioConfig) -> Self {
        Self { meta: Meta::of(cfg), checks: Vec::new(), functionals: Functionals::default(), convergence: Vec::new(), descent: None }
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(Check::ok)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.ok())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["name", "residual", "tolerance", "pass", "seconds", "bound", "gate", "note"]).expect("in-memory write");
        for c in &self.checks {
            w.write_record([
                c.name.clone(),
                format!("{:e}", c.residual),
                format!("{:e}", c.tolerance),
                c.pass.to_string(),
                format!("{:e}", c.seconds),
                c.bound.as_str().to_string(),
                c.gate.to_string(),
                c.note.clone().unwrap_or_default(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }

    pub fn encode(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
        }
    }

    pub fn emit(&self, path: &Path, format: Format) -> Result<()> {
        std::fs::write(path, self.encode(format)).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))
    }

    /// One line per check.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let tag = match (c.pass, c.gate) {
                (true, _) => "PASS",
                (false, true) => "FAIL",
                (false, false) => "INFO",
            };
            let op = match c.bound {
                Bound::Upper => "<=",
                Bound::Lower => ">=",
            };
            s.push_str(&format!("{tag} {:<48} {:>12.3e} {op} {:.1e}", c.name, c.residual, c.tolerance));
            if let Some(n) = &c.note {
                s.push_str(&format!("  ({n})"));
            }
            s.push('\n');
        }
        s
    }
}

/// Parse the check table of a CSV report.
pub fn checks_from_csv(text: &str) -> Result<Vec<(String, f64, f64, bool)>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| HarnessError::Io(e.to_string()))?;
        let num = |i: usize| -> Result<f64> {
            let v = &rec[i];
            match v {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                _ => v.parse().map_err(|e| HarnessError::Io(format!("{v}: {e}"))),
            }
        };
        out.push((rec[0].to_string(), num(1)?, num(2)?, &rec[3] == "true"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> VerificationReport {
        let mut r = VerificationReport::new(&ScenarioConfig::default());
        r.checks.push(Check::upper("structure.j_squared", 1.5e-16, 1e-12));
        r.checks.push(Check::lower("inequalities.gap_fraction", 0.25, 1e-3));
        r.checks.push(Check::upper("elliptic.decomposition", 3e-4, 1e-7).diagnostic());
        r.checks.push(Check::failed("sigma.constraint", 1e-10, Bound::Upper, "did not converge"));
        r
    }

    #[test]
    fn bounds_and_gates() {
        let r = sample();
        assert!(r.checks[0].pass && r.checks[1].pass);
        assert!(!r.checks[2].pass && r.checks[2].ok());
        assert!(!r.checks[3].ok());
        assert!(!r.all_pass());
        assert_eq!(r.failures().count(), 1);
    }

    #[test]
    fn empty_report_has_header_only() {
        let r = VerificationReport::new(&ScenarioConfig::default());
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 1);
        assert!(csv.starts_with("name,residual,tolerance,pass"));
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["checks"].as_array().unwrap().len(), 0);
        assert!(r.all_pass());
    }

    #[test]
    fn json_and_csv_carry_the_same_checks() {
        let r = sample();
        let from_csv = checks_from_csv(&r.to_csv()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        let js = v["checks"].as_array().unwrap();
        assert_eq!(js.len(), from_csv.len());
        for (j, (name, res, tol, pass)) in js.iter().zip(&from_csv) {
            assert_eq!(j["name"].as_str().unwrap(), name);
            assert_eq!(j["pass"].as_bool().unwrap(), *pass);
            assert_eq!(j["tolerance"].as_f64().unwrap(), *tol);
            if res.is_finite() {
                assert_eq!(j["residual"].as_f64().unwrap(), *res);
            }
        }
    }

    #[test]
    fn full_precision_numbers() {
        let mut r = VerificationReport::new(&ScenarioConfig::default());
        let x = 0.1f64 + 0.2;
        r.checks.push(Check::upper("a", x, 1.0));
        let back: VerificationReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back.checks[0].residual, x);
        assert_eq!(checks_from_csv(&r.to_csv()).unwrap()[0].1, x);
    }

    #[test]
    fn aggregate_tracks_worst() {
        let mut a = Aggregate::upper("x", 1.0);
        a.push(0.2);
        a.push(0.5);
        a.push(0.1);
        assert_eq!(a.finish().residual, 0.5);
        let mut b = Aggregate::lower("y", 0.0);
        b.push(0.2);
        b.push(-0.1);
        assert!(!b.finish().pass);
        let mut c = Aggregate::upper("z", 1.0);
        c.push(0.1);
        c.fail("solver");
        assert!(!c.finish().pass);
        assert!(!Aggregate::upper("w", 1.0).finish().pass);
    }
}
