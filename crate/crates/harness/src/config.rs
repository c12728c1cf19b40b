//! Scenario configuration: a TOML file plus `--key value` overrides.

use std::path::{Path, PathBuf};

use aktorus::elliptic::SolverConfig;
use aktorus::functionals::PotentialSampler;
use aktorus::{GridSpec, StructureRecipe};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    /// J² = −1, compatibility, symmetry of g, the weight operator on 1-forms and anti-invariant 2-forms.
    Structure,
    /// d∘d, adjointness of d and d*, Leibniz rule.
    Calculus,
    /// `*_g = 𝒥∘*_ω` and the symplectic star on primitive forms.
    Star,
    /// `dα = ∂₊α + L∂₋α` and the codifferential of anti-invariant forms.
    Splitting,
    /// σ solver, 𝒟⁺ invariants and the four-dimensional 𝒲 operator.
    Sigma,
    /// φ₀, `a(φ₀)` and their equations.
    Elliptic,
    /// The cross-term pairing split and its symmetry.
    Pairing,
    /// The I′/J′ inequality chain, the gradient-form integrals and the sum/difference identities.
    Inequalities,
    /// τ′ against finite differences and its Riesz density.
    Derivative,
    /// ε = 0 reductions and the direct quadrature oracle.
    Integrable,
    /// Gradient descent on II′.
    Descent,
}

impl Suite {
    pub const ALL: [Suite; 11] = [
        Suite::Structure,
        Suite::Calculus,
        Suite::Star,
        Suite::Splitting,
        Suite::Sigma,
        Suite::Elliptic,
        Suite::Pairing,
        Suite::Inequalities,
        Suite::Derivative,
        Suite::Integrable,
        Suite::Descent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Structure => "structure",
            Suite::Calculus => "calculus",
            Suite::Star => "star",
            Suite::Splitting => "splitting",
            Suite::Sigma => "sigma",
            Suite::Elliptic => "elliptic",
            Suite::Pairing => "pairing",
            Suite::Inequalities => "inequalities",
            Suite::Derivative => "derivative",
            Suite::Integrable => "integrable",
            Suite::Descent => "descent",
        }
    }

    pub fn parse(s: &str) -> Result<Suite> {
        Suite::ALL
            .iter()
            .copied()
            .find(|x| x.name() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown suite `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StructureSection {
    pub epsilon: f64,
    pub band_limit: usize,
    pub modes: usize,
    pub seed: u64,
}

impl Default for StructureSection {
    fn default() -> Self {
        let r = StructureRecipe::default();
        Self { epsilon: r.epsilon, band_limit: r.band_limit, modes: r.modes, seed: r.seed }
    }
}

impl From<StructureSection> for StructureRecipe {
    fn from(s: StructureSection) -> Self {
        StructureRecipe { epsilon: s.epsilon, band_limit: s.band_limit, modes: s.modes, seed: s.seed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialSection {
    /// Potentials sampled for the cheap per-potential checks.
    pub count: usize,
    /// Of those, how many also get the expensive checks (finite differences, pairings, φ₀).
    pub detailed: usize,
    pub band: usize,
    pub margin_fraction: f64,
    pub min_fraction: f64,
    pub max_fraction: f64,
    /// Value of the constant potential used for the zero-gap check.
    pub constant: f64,
}

impl Default for PotentialSection {
    fn default() -> Self {
        let s = PotentialSampler::default();
        Self {
            count: 20,
            detailed: 2,
            band: s.band,
            margin_fraction: s.margin_fraction,
            min_fraction: s.min_fraction,
            max_fraction: s.max_fraction,
            constant: 0.7,
        }
    }
}

impl PotentialSection {
    pub fn sampler(&self) -> PotentialSampler {
        PotentialSampler {
            band: self.band,
            margin_fraction: self.margin_fraction,
            min_fraction: self.min_fraction,
            max_fraction: self.max_fraction,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub tol: f64,
    pub max_iter: usize,
    pub dealias: bool,
    pub precondition: bool,
    /// Tolerance of the second σ run in the iteration-budget check.
    pub comparison_tol: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self { tol: 1e-11, max_iter: 2000, dealias: true, precondition: true, comparison_tol: 1e-12 }
    }
}

impl SolverSection {
    pub fn solver(&self) -> SolverConfig {
        SolverConfig { tol: self.tol, max_iter: self.max_iter, dealias: self.dealias, precondition: self.precondition }
    }
}

/// Pass thresholds. Relative ones are noted per field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Pointwise max of the structure residuals.
    pub structure: f64,
    /// J acting on forms against the (p,q) weight operator.
    pub weight_operator: f64,
    /// Relative: d∘d, adjointness, Leibniz.
    pub calculus: f64,
    /// Relative: metric star against weighted symplectic star, and the symplectic star identities.
    pub star: f64,
    /// Below this a residual counts as round-off in the convergence tables.
    pub convergence_floor: f64,
    /// Relative: the ∂± split and the anti-invariant codifferential.
    pub splitting: f64,
    /// Relative constraint residual of σ, and ‖σ‖ at ε = 0.
    pub sigma: f64,
    /// Relative: `⟨Pσ, σ⟩ = ‖d*σ‖²`.
    pub energy: f64,
    /// Relative: 𝒟⁺ is J-invariant.
    pub dplus_invariant: f64,
    /// Relative: 𝒟⁺ is closed, and `∫ω^{m−1}∧𝒟⁺φ = 0`.
    pub dplus_exact: f64,
    /// Relative: linearity of 𝒟⁺.
    pub linearity: f64,
    /// Relative: the 𝒲 identities in dimension four.
    pub w_operator: f64,
    /// Relative: φ₀ equation and the mean of its right-hand side.
    pub phi0_equation: f64,
    /// Relative: `∂₋(Jdφ₀)` against the Laplacian, and `∂₋a`.
    pub example_identities: f64,
    /// Relative: the equations of the system for `a`.
    pub system: f64,
    /// Per scale: the pairing split and symmetry.
    pub pairing: f64,
    /// Per scale: lower bound on the `u = v` cross term.
    pub pairing_nonnegative: f64,
    /// Per scale: lower bound on the inequality slack.
    pub inequality_slack: f64,
    /// Both gaps must exceed this fraction of I′.
    pub gap_fraction: f64,
    /// Gaps are only required positive when I′ exceeds this.
    pub gap_threshold: f64,
    /// Absolute: functionals and gaps of a constant potential.
    pub constant: f64,
    /// Relative: Richardson finite difference against τ′.
    pub finite_difference: f64,
    /// First and halved step of the finite difference.
    pub fd_step: f64,
    /// Per scale: τ′ against its integrable-case display, and against the Riesz density.
    pub tau_reduction: f64,
    /// Per scale: the two gradient-form integrals, and the sum/difference identities.
    pub identities: f64,
    /// Per scale: upper bound on the gradient-form integrals.
    pub gradient_sign: f64,
    /// Absolute: twisted functionals against their integrable-case displays.
    pub integrable: f64,
    /// Relative: I′, J′ against the direct quadrature.
    pub quadrature: f64,
    /// Relative: closed four-dimensional formulas against the general sums.
    pub closed_forms: f64,
    /// Relative increase of II′ allowed per descent step.
    pub descent_increase: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            structure: 1e-12,
            weight_operator: 1e-10,
            calculus: 1e-10,
            star: 1e-9,
            convergence_floor: 1e-12,
            splitting: 1e-9,
            sigma: 1e-10,
            energy: 1e-9,
            dplus_invariant: 1e-9,
            dplus_exact: 1e-10,
            linearity: 1e-9,
            w_operator: 1e-8,
            phi0_equation: 1e-9,
            example_identities: 1e-8,
            system: 1e-7,
            pairing: 1e-8,
            pairing_nonnegative: 1e-9,
            inequality_slack: 1e-8,
            gap_fraction: 1e-3,
            gap_threshold: 1e-4,
            constant: 1e-12,
            finite_difference: 1e-6,
            fd_step: 1e-3,
            tau_reduction: 1e-9,
            identities: 1e-8,
            gradient_sign: 1e-9,
            integrable: 1e-9,
            quadrature: 1e-8,
            closed_forms: 1e-10,
            descent_increase: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DescentSection {
    pub steps: usize,
    pub initial_rate: f64,
    /// Relative agreement of one step's decrease with the first-order prediction.
    pub taylor_tolerance: f64,
}

impl Default for DescentSection {
    fn default() -> Self {
        Self { steps: 50, initial_rate: 1.0, taylor_tolerance: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub m: usize,
    pub n: usize,
    /// Global seed; every sampler stream is derived from it.
    pub seed: u64,
    pub structure: StructureSection,
    pub potentials: PotentialSection,
    pub solver: SolverSection,
    pub tolerances: Tolerances,
    pub descent: DescentSection,
    /// Grid sizes of the `converge` sweep.
    pub sizes: Vec<usize>,
    pub suites: Vec<Suite>,
    /// Random forms per degree in the calculus, star and splitting suites.
    pub forms: usize,
    pub output: Option<PathBuf>,
    pub format: Format,
    /// Record wall-clock seconds; off keeps reports byte-identical across runs.
    pub timings: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            m: 2,
            n: 16,
            seed: 1,
            structure: StructureSection::default(),
            potentials: PotentialSection::default(),
            solver: SolverSection::default(),
            tolerances: Tolerances::default(),
            descent: DescentSection::default(),
            sizes: vec![8, 12, 16],
            suites: Suite::ALL.iter().copied().filter(|s| *s != Suite::Descent).collect(),
            forms: 3,
            output: None,
            format: Format::Json,
            timings: false,
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.m, self.n).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn recipe(&self) -> StructureRecipe {
        self.structure.into()
    }

    pub fn solver(&self) -> SolverConfig {
        self.solver.solver()
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        for &n in &self.sizes {
            GridSpec::new(self.m, n).map_err(|e| HarnessError::Config(format!("sizes: {e}")))?;
        }
        if !(self.structure.epsilon >= 0.0 && self.structure.epsilon.is_finite()) {
            return Err(HarnessError::Config("structure.epsilon must be finite and non-negative".into()));
        }
        let p = &self.potentials;
        if p.detailed > p.count {
            return Err(HarnessError::Config("potentials.detailed exceeds potentials.count".into()));
        }
        if !(0.0 < p.min_fraction && p.min_fraction <= p.max_fraction && p.max_fraction <= 1.0) {
            return Err(HarnessError::Config("potential fractions must satisfy 0 < min <= max <= 1".into()));
        }
        if 2 * p.band >= self.n {
            return Err(HarnessError::Config("potentials.band too large for the grid".into()));
        }
        if !(self.solver.tol > 0.0) || self.solver.max_iter == 0 {
            return Err(HarnessError::Config("solver.tol and solver.max_iter must be positive".into()));
        }
        Ok(())
    }

    /// Apply `--key value` pairs; keys are dotted paths into the config (`structure.epsilon`),
    /// top-level keys may be given bare (`epsilon` is accepted for `structure.epsilon`).
    pub fn apply_overrides(&mut self, pairs: &[(String, String)]) -> Result<()> {
        let mut doc: toml::Value = toml::Value::try_from(&*self).map_err(|e| HarnessError::Config(e.to_string()))?;
        for (key, raw) in pairs {
            let path = resolve_key(&doc, key)?;
            let slot = lookup_mut(&mut doc, &path).ok_or_else(|| HarnessError::Config(format!("unknown key `{key}`")))?;
            *slot = parse_like(slot, raw).map_err(|e| HarnessError::Config(format!("--{key}: {e}")))?;
        }
        let cfg: Self = doc.try_into().map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        *self = cfg;
        Ok(())
    }
}

const SECTIONS: [&str; 5] = ["structure", "potentials", "solver", "tolerances", "descent"];

fn resolve_key(doc: &toml::Value, key: &str) -> Result<Vec<String>> {
    let key = key.replace('-', "_");
    if key.contains('.') {
        return Ok(key.split('.').map(str::to_string).collect());
    }
    if key == "output" || doc.get(&key).is_some() {
        return Ok(vec![key]);
    }
    let hits: Vec<&str> = SECTIONS.iter().copied().filter(|s| doc.get(s).and_then(|t| t.get(&key)).is_some()).collect();
    match hits.as_slice() {
        [one] => Ok(vec![one.to_string(), key]),
        [] => Err(HarnessError::Config(format!("unknown key `{key}`"))),
        _ => Err(HarnessError::Config(format!("ambiguous key `{key}`; use one of {}", hits.iter().map(|h| format!("{h}.{key}")).collect::<Vec<_>>().join(", ")))),
    }
}

fn lookup_mut<'a>(doc: &'a mut toml::Value, path: &[String]) -> Option<&'a mut toml::Value> {
    let mut cur = doc;
    for (i, part) in path.iter().enumerate() {
        let table = cur.as_table_mut()?;
        if i + 1 == path.len() && part == "output" && !table.contains_key(part) {
            table.insert(part.clone(), toml::Value::String(String::new()));
        }
        cur = table.get_mut(part)?;
    }
    Some(cur)
}

fn parse_like(old: &toml::Value, raw: &str) -> std::result::Result<toml::Value, String> {
    use toml::Value as V;
    Ok(match old {
        V::Integer(_) => V::Integer(raw.parse().map_err(|e| format!("{e}"))?),
        V::Float(_) => V::Float(raw.parse().map_err(|e| format!("{e}"))?),
        V::Boolean(_) => V::Boolean(raw.parse().map_err(|e| format!("{e}"))?),
        V::String(_) => V::String(raw.to_string()),
        V::Array(_) => {
            let items: Vec<&str> = raw.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
            V::Array(
                items
                    .iter()
                    .map(|s| match s.parse::<i64>() {
                        Ok(i) => V::Integer(i),
                        Err(_) => V::String(s.to_string()),
                    })
                    .collect(),
            )
        }
        _ => return Err("cannot override this key".into()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_roundtrip_through_toml() {
        let cfg = ScenarioConfig::default();
        let back = ScenarioConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg = ScenarioConfig::from_toml("m = 3\nn = 8\n[structure]\nepsilon = 0.05\n").unwrap();
        assert_eq!((cfg.m, cfg.n), (3, 8));
        assert_eq!(cfg.structure.epsilon, 0.05);
        assert_eq!(cfg.structure.seed, StructureSection::default().seed);
        assert_eq!(cfg.tolerances, Tolerances::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ScenarioConfig::from_toml("bogus = 1\n").is_err());
        assert!(ScenarioConfig::from_toml("[solver]\ntoll = 1e-3\n").is_err());
    }

    #[test]
    fn overrides_bare_and_dotted() {
        let mut cfg = ScenarioConfig::default();
        let pairs = [
            ("epsilon", "0.05"),
            ("tolerances.star", "1e-8"),
            ("n", "12"),
            ("suites", "structure,star"),
            ("dealias", "false"),
            ("output", "out.json"),
        ];
        cfg.apply_overrides(&pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect::<Vec<_>>()).unwrap();
        assert_eq!(cfg.structure.epsilon, 0.05);
        assert_eq!(cfg.tolerances.star, 1e-8);
        assert_eq!(cfg.n, 12);
        assert_eq!(cfg.suites, vec![Suite::Structure, Suite::Star]);
        assert!(!cfg.solver.dealias);
        assert_eq!(cfg.output, Some(PathBuf::from("out.json")));
    }

    #[test]
    fn bad_overrides_fail() {
        let mut cfg = ScenarioConfig::default();
        assert!(cfg.apply_overrides(&[("nope".into(), "1".into())]).is_err());
        assert!(cfg.apply_overrides(&[("n".into(), "7".into())]).is_err());
        assert!(cfg.apply_overrides(&[("seed".into(), "abc".into())]).is_err());
        assert!(cfg.apply_overrides(&[("suites".into(), "structure,wrong".into())]).is_err());
    }
}
