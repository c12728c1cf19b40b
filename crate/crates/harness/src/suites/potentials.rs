//! Checks that need sampled potentials. Potentials are drawn and checked one at a time
//! so only one potential's forms are alive at once.

use std::collections::BTreeSet;
use std::time::Instant;

use aktorus::elliptic::{power_of_omega, trace_against_omega, SolveStats};
use aktorus::exterior::{exterior_derivative, wedge, FormField};
use aktorus::functionals::{density_norm_sq, FunctionalReport, FunctionalTerms, PotentialState, SampledPotential, SigmaData};
use aktorus::multi_index::factorial;
use aktorus::sampler::TrigPolynomial;
use aktorus::symplectic::partial_minus;
use aktorus::{Error, ScalarField};
use rand_chacha::ChaCha8Rng;

use super::{rel_diff, stream, Recorder, Scenario, Stream};
use crate::config::Suite;
use crate::quadrature::{finer, kahler_quadrature};
use crate::report::{Aggregate, Check, PotentialEntry, VerificationReport};

pub(crate) const SUITES: [Suite; 6] = [Suite::Sigma, Suite::Elliptic, Suite::Pairing, Suite::Inequalities, Suite::Derivative, Suite::Integrable];

const CONSTANT: &str = "inequalities.constant_potential";

/// Quadrature on all potentials when the fine grid has at most this many points.
const QUADRATURE_POINTS: usize = 2_000_000;

/// One sampled potential.
pub struct PotentialCase {
    pub index: usize,
    pub sampled: SampledPotential<f64>,
}

/// The stream of sampled potentials of a scenario.
pub fn sample_potentials(sc: &Scenario) -> impl Iterator<Item = aktorus::Result<PotentialCase>> + '_ {
    let mut rng = stream(sc.cfg.seed, Stream::Potentials);
    let sampler = sc.cfg.potentials.sampler();
    (0..sc.cfg.potentials.count).map(move |index| sampler.sample(&sc.st, &sc.solver, &mut rng).map(|sampled| PotentialCase { index, sampled }))
}

/// A mean-zero test direction with the amplitude of `phi`.
pub fn direction_for(sc: &Scenario, phi: &ScalarField<f64>, rng: &mut ChaCha8Rng) -> ScalarField<f64> {
    let f = TrigPolynomial::<f64>::random(sc.grid.dim(), sc.cfg.potentials.band, true, rng).sample(sc.grid);
    f.scale(phi.max_abs() / f.max_abs().max(1e-300))
}

/// Named aggregates in insertion order.
struct Aggs {
    list: Vec<(Suite, Aggregate)>,
}

impl Aggs {
    fn add(&mut self, suite: Suite, a: Aggregate) {
        self.list.push((suite, a));
    }

    fn get(&mut self, name: &str) -> &mut Aggregate {
        let i = self.list.iter().position(|(_, a)| a.name == name).unwrap_or_else(|| panic!("no aggregate {name}"));
        &mut self.list[i].1
    }

    fn push(&mut self, name: &str, r: f64) {
        self.get(name).push(r)
    }

    fn has(&self, name: &str) -> bool {
        self.list.iter().any(|(_, a)| a.name == name)
    }

    fn fail_suite(&mut self, suite: Suite, why: &str) {
        for (s, a) in self.list.iter_mut() {
            if *s == suite {
                a.fail(why);
            }
        }
    }

    /// Fail every aggregate that needs sampled potentials.
    fn fail_sampled(&mut self, why: &str) {
        for (_, a) in self.list.iter_mut() {
            if a.name != CONSTANT {
                a.fail(why);
            }
        }
    }
}

fn describe(e: &Error) -> String {
    match e {
        Error::NotConverged { iterations, residual, .. } => format!("solver stopped after {iterations} iterations at relative residual {residual:.3e}"),
        other => other.to_string(),
    }
}

/// `|∫ ω^{m−1} ∧ β| / ∫ |ω^{m−1} ∧ β|`.
fn solvability(beta: &FormField<f64>) -> f64 {
    let m = beta.grid.m;
    let top = wedge(&power_of_omega(beta.grid, m - 1), beta, false).scalar_part();
    let abs = top.map(f64::abs).integrate();
    if abs == 0.0 {
        0.0
    } else {
        top.integrate().abs() / abs
    }
}

fn functional_report(state: &PotentialState<f64>, terms: &FunctionalTerms, ii: f64) -> FunctionalReport {
    let (lower_gap, upper_gap) = terms.inequality_gaps();
    FunctionalReport {
        volume: terms.volume,
        donaldson_gauge: terms.donaldson_gauge(),
        twisted_donaldson: ii,
        aubin_i: terms.aubin_i(),
        aubin_j: terms.aubin_j(),
        lower_gap,
        upper_gap,
        sum_identity_residual: terms.sum_identity_residual(ii),
        difference_identity_residual_displayed: terms.difference_identity_residual_displayed(ii),
        difference_identity_residual_matched: terms.difference_identity_residual_matched(ii),
        gradient_pairings: terms.phi_djd.iter().copied().zip(terms.gradient_form.iter().copied()).collect(),
        pairings: Vec::new(),
        positivity_margin: state.result.positivity_margin,
        scale: terms.scale(),
    }
}

fn build_aggregates(sc: &Scenario, on: &dyn Fn(Suite) -> bool) -> Aggs {
    let t = sc.tol();
    let m = sc.grid.m;
    let flat = sc.cfg.structure.epsilon == 0.0;
    let mut a = Aggs { list: Vec::new() };
    if on(Suite::Sigma) {
        let s = Suite::Sigma;
        a.add(s, Aggregate::upper("sigma.constraint", t.sigma));
        a.add(s, Aggregate::upper("sigma.anti_invariant", t.sigma));
        if flat {
            a.add(s, Aggregate::upper("sigma.vanishes_when_integrable", t.sigma));
        }
        a.add(s, Aggregate::upper("sigma.energy_identity", t.energy));
        a.add(s, Aggregate::upper("sigma.dplus_invariant", t.dplus_invariant));
        a.add(s, Aggregate::upper("sigma.dplus_closed", t.dplus_exact));
        a.add(s, Aggregate::upper("sigma.dplus_solvability", t.dplus_exact));
        a.add(s, Aggregate::upper("sigma.iteration_budget", 10.0 * t.sigma));
        a.add(s, Aggregate::upper("sigma.linearity", t.linearity));
        if m == 2 {
            a.add(s, Aggregate::upper("sigma.w_exact", t.w_operator));
            a.add(s, Aggregate::upper("sigma.w_anti_invariant", t.w_operator));
            a.add(s, Aggregate::upper("sigma.w_exact_plus_f_omega", t.w_operator).diagnostic());
            a.add(s, Aggregate::upper("sigma.w_anti_invariant_plus_f_omega", t.w_operator).diagnostic());
        }
    }
    if on(Suite::Elliptic) {
        let s = Suite::Elliptic;
        a.add(s, Aggregate::upper("elliptic.phi0_solvability", t.phi0_equation));
        a.add(s, Aggregate::upper("elliptic.phi0_equation", t.phi0_equation));
        if flat {
            a.add(s, Aggregate::upper("elliptic.phi0_equals_potential_when_integrable", t.phi0_equation));
            a.add(s, Aggregate::upper("elliptic.a_vanishes_when_integrable", t.sigma));
        }
        a.add(s, Aggregate::upper("elliptic.minus_of_j_dphi0", t.example_identities));
        a.add(s, Aggregate::upper("elliptic.minus_of_j_dphi0_opposite_sign", t.example_identities).diagnostic());
        a.add(s, Aggregate::upper("elliptic.minus_of_a", t.example_identities));
        a.add(s, Aggregate::upper("elliptic.a_coclosed", t.system));
        a.add(s, Aggregate::upper("elliptic.a_minus_equation", t.system));
        a.add(s, Aggregate::upper("elliptic.a_trace_equation", t.system));
        a.add(s, Aggregate::upper("elliptic.dplus_decomposition", t.system).diagnostic());
    }
    if on(Suite::Pairing) {
        let s = Suite::Pairing;
        a.add(s, Aggregate::upper("pairing.split", t.pairing));
        a.add(s, Aggregate::upper("pairing.symmetry", t.pairing));
        a.add(s, Aggregate::lower("pairing.diagonal_nonnegative", -t.pairing_nonnegative));
        a.add(s, Aggregate::upper("pairing.split_reversed_beta_sign", t.pairing).diagnostic());
        a.add(s, Aggregate::upper("pairing.symmetry_reversed_beta_sign", t.pairing).diagnostic());
    }
    if on(Suite::Inequalities) {
        let s = Suite::Inequalities;
        a.add(s, Aggregate::lower("inequalities.slack", -t.inequality_slack));
        a.add(s, Aggregate::lower("inequalities.gap_fraction", t.gap_fraction));
        a.add(s, Aggregate::upper(CONSTANT, t.constant));
        a.add(s, Aggregate::upper("inequalities.gradient_forms_agree", t.identities));
        a.add(s, Aggregate::upper("inequalities.gradient_form_nonpositive", t.gradient_sign));
        a.add(s, Aggregate::upper("inequalities.sum_identity", t.identities));
        a.add(s, Aggregate::upper("inequalities.difference_identity", t.identities));
        a.add(s, Aggregate::upper("inequalities.difference_identity_extended_sum", t.identities).diagnostic());
        a.add(s, Aggregate::upper("inequalities.termwise_assembly", t.identities));
        if m == 2 {
            a.add(s, Aggregate::upper("inequalities.closed_forms_dimension_four", t.closed_forms));
        }
    }
    if on(Suite::Derivative) {
        let s = Suite::Derivative;
        a.add(s, Aggregate::upper("derivative.finite_difference", t.finite_difference));
        a.add(s, Aggregate::upper("derivative.riesz_density", t.tau_reduction));
        if flat {
            a.add(s, Aggregate::upper("derivative.integrable_reduction", t.tau_reduction));
        }
    }
    if on(Suite::Integrable) && flat {
        let s = Suite::Integrable;
        a.add(s, Aggregate::upper("integrable.twisted_donaldson_display", t.integrable));
        a.add(s, Aggregate::upper("integrable.donaldson_display", t.integrable));
        a.add(s, Aggregate::upper("integrable.aubin_i_display", t.integrable));
        a.add(s, Aggregate::upper("integrable.aubin_j_display", t.integrable));
        a.add(s, Aggregate::upper("integrable.quadrature_aubin_i", t.quadrature));
        a.add(s, Aggregate::upper("integrable.quadrature_aubin_j", t.quadrature));
        a.add(s, Aggregate::upper("integrable.quadrature_donaldson", t.quadrature));
    }
    a
}

/// Cheap checks on every potential.
fn cheap(sc: &Scenario, aggs: &mut Aggs, state: &PotentialState<f64>, terms: &FunctionalTerms, ii: f64) {
    let st = &sc.st;
    let t = sc.tol();
    let data = &state.phi;
    let scale = terms.scale().max(1e-300);
    if aggs.has("sigma.constraint") {
        let rhs = st.minus_part(&data.djd);
        let lhs = st.minus_part(&exterior_derivative(&st.codifferential(&data.sigma)));
        // relative to P⁻dJdf, or to dJdf when the projection is round-off (integrable J)
        let (rn, dn) = (st.l2_norm(&rhs), st.l2_norm(&data.djd));
        let denom = if rn > 1e-12 * dn { rn } else { dn.max(1e-300) };
        aggs.push("sigma.constraint", st.l2_norm(&lhs.add(&rhs)) / denom);
        let sn = st.l2_norm(&data.sigma);
        aggs.push("sigma.anti_invariant", if sn == 0.0 { 0.0 } else { st.l2_norm(&st.plus_part(&data.sigma)) / sn });
        if aggs.has("sigma.vanishes_when_integrable") {
            aggs.push("sigma.vanishes_when_integrable", sn / st.l2_norm(&data.djd).max(1e-300));
        }
        let ds = st.codifferential(&data.sigma);
        let e = st.l2_inner(&ds, &ds);
        let p = st.l2_inner(&st.minus_part(&exterior_derivative(&ds)), &data.sigma);
        aggs.push("sigma.energy_identity", if e == 0.0 && p == 0.0 { 0.0 } else { (p - e).abs() / e.max(1e-300) });
        aggs.push("sigma.dplus_invariant", state.result.residuals.anti_invariant_part);
        aggs.push("sigma.dplus_closed", state.result.residuals.closedness);
        aggs.push("sigma.dplus_solvability", solvability(&state.result.djplus));
    }
    if aggs.has("inequalities.slack") {
        let (lo, hi) = terms.inequality_gaps();
        aggs.push("inequalities.slack", lo.min(hi) / scale);
        let i = terms.aubin_i();
        if i > t.gap_threshold {
            aggs.push("inequalities.gap_fraction", lo.min(hi) / i);
        }
        let m = terms.m;
        let agree = (0..m).map(|k| (terms.phi_djd[k] - terms.gradient_form[k]).abs()).fold(0.0, f64::max);
        aggs.push("inequalities.gradient_forms_agree", agree / scale);
        let sign = (0..m).map(|k| terms.phi_djd[k].max(terms.gradient_form[k])).fold(f64::NEG_INFINITY, f64::max);
        aggs.push("inequalities.gradient_form_nonpositive", sign / scale);
        aggs.push("inequalities.sum_identity", terms.sum_identity_residual(ii) / scale);
        aggs.push("inequalities.difference_identity", terms.difference_identity_residual_matched(ii) / scale);
        aggs.push("inequalities.difference_identity_extended_sum", terms.difference_identity_residual_displayed(ii) / scale);
        aggs.push("inequalities.termwise_assembly", (terms.twisted_donaldson() - ii).abs() / scale);
        if let Some((ii4, i4, j4)) = state.dimension_four_closed_forms() {
            let r = [(ii4, ii), (i4, terms.aubin_i()), (j4, terms.aubin_j())].iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            aggs.push("inequalities.closed_forms_dimension_four", r / scale);
        }
    }
    if aggs.has("integrable.twisted_donaldson_display") {
        aggs.push("integrable.twisted_donaldson_display", (ii - terms.twisted_donaldson_kahler()).abs());
        aggs.push("integrable.donaldson_display", (terms.donaldson_gauge() - terms.donaldson_gauge_kahler()).abs());
        aggs.push("integrable.aubin_i_display", (terms.aubin_i() - terms.aubin_i_kahler()).abs());
        aggs.push("integrable.aubin_j_display", (terms.aubin_j() - terms.aubin_j_kahler()).abs());
    }
}

fn quadrature(sc: &Scenario, aggs: &mut Aggs, poly: &TrigPolynomial<f64>, terms: &FunctionalTerms) {
    let q = kahler_quadrature(poly, sc.grid.m, finer(sc.grid.n));
    let r = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
    aggs.push("integrable.quadrature_aubin_i", r(terms.aubin_i(), q.aubin_i));
    aggs.push("integrable.quadrature_aubin_j", r(terms.aubin_j(), q.aubin_j));
    aggs.push("integrable.quadrature_donaldson", r(terms.donaldson_gauge(), q.donaldson));
}

fn sigma_detailed(sc: &Scenario, aggs: &mut Aggs, state: &PotentialState<f64>, dir: &SigmaData<f64>, first: bool) {
    let st = &sc.st;
    let mut cfg = sc.solver;
    cfg.tol = sc.cfg.solver.comparison_tol;
    match st.sigma_data(&state.phi.f, &cfg) {
        Ok(other) => {
            let a = state.result.djplus.clone();
            aggs.push("sigma.iteration_budget", rel_diff(&other.djplus(), &a));
        }
        Err(e) => aggs.get("sigma.iteration_budget").fail(describe(&e)),
    }
    if !first {
        return;
    }
    // 𝒟⁺(2φ − 3f) against 2𝒟⁺φ − 3𝒟⁺f
    let mut g = state.phi.f.scale(2.0);
    g.axpy(-3.0, &dir.f);
    match st.sigma_data(&g, &sc.solver) {
        Ok(gd) => {
            let expect = SigmaData::combine(2.0, &state.phi, -3.0, dir).djplus();
            aggs.push("sigma.linearity", rel_diff(&gd.djplus(), &expect));
        }
        Err(e) => aggs.get("sigma.linearity").fail(describe(&e)),
    }
    if aggs.has("sigma.w_exact") {
        match st.w_j(&dir.f, &sc.solver) {
            Ok(w) => {
                aggs.push("sigma.w_exact", w.flipped_exactness);
                aggs.push("sigma.w_anti_invariant", w.flipped_anti_invariance);
                aggs.push("sigma.w_exact_plus_f_omega", w.exactness);
                aggs.push("sigma.w_anti_invariant_plus_f_omega", w.anti_invariance);
            }
            Err(e) => {
                for n in ["sigma.w_exact", "sigma.w_anti_invariant", "sigma.w_exact_plus_f_omega", "sigma.w_anti_invariant_plus_f_omega"] {
                    aggs.get(n).fail(describe(&e));
                }
            }
        }
    }
}

fn elliptic_detailed(sc: &Scenario, aggs: &mut Aggs, state: &PotentialState<f64>) -> Result<(), Error> {
    let st = &sc.st;
    let m = sc.grid.m as f64;
    let dplus = &state.result.djplus;
    let rho = trace_against_omega(dplus);
    aggs.push("elliptic.phi0_solvability", rho.mean().abs() / rho.max_abs().max(1e-300));
    let (phi0, _) = st.solve_phi0(dplus, &sc.solver)?;
    let lap = st.laplacian_positive(&phi0);
    let lhs = lap.scale(-1.0 / m);
    let mut res = lhs.clone();
    res.axpy(-1.0, &rho.centered());
    aggs.push("elliptic.phi0_equation", res.max_abs() / rho.max_abs().max(1e-300));
    if aggs.has("elliptic.phi0_equals_potential_when_integrable") {
        let phi = state.phi.f.centered();
        let mut d = phi0.clone();
        d.axpy(-1.0, &phi);
        aggs.push("elliptic.phi0_equals_potential_when_integrable", d.max_abs() / phi.max_abs().max(1e-300));
    }
    let jdphi0 = st.act_j(&exterior_derivative(&FormField::from_scalar(&phi0)));
    let pm = partial_minus(&jdphi0).scalar_part();
    let lap_m = lap.scale(1.0 / m);
    let denom = lap_m.max_abs().max(1e-300);
    let mut plus = pm.clone();
    plus.axpy(1.0, &lap_m);
    let mut minus = pm;
    minus.axpy(-1.0, &lap_m);
    aggs.push("elliptic.minus_of_j_dphi0", plus.max_abs() / denom);
    aggs.push("elliptic.minus_of_j_dphi0_opposite_sign", minus.max_abs() / denom);
    let a = st.solve_a(dplus, &phi0, &sc.solver)?;
    let r = a.residuals;
    aggs.push("elliptic.minus_of_a", r.partial_minus);
    aggs.push("elliptic.a_coclosed", r.codifferential);
    aggs.push("elliptic.a_minus_equation", r.minus_equation);
    aggs.push("elliptic.a_trace_equation", r.trace_equation);
    aggs.push("elliptic.dplus_decomposition", r.first_equation);
    if aggs.has("elliptic.a_vanishes_when_integrable") {
        let n = st.l2_norm(&exterior_derivative(&jdphi0)).max(1e-300);
        aggs.push("elliptic.a_vanishes_when_integrable", st.l2_norm(&a.a) / n);
    }
    Ok(())
}

fn pairing_detailed(sc: &Scenario, aggs: &mut Aggs, state: &PotentialState<f64>, dir: &SigmaData<f64>, entry: &mut FunctionalReport) -> Result<(), Error> {
    let st = &sc.st;
    let m = sc.grid.m;
    for k in 0..=m - 2 {
        let p = state.pairing_terms(st, &state.phi, dir, k)?;
        let s = p.scale().max(1e-300);
        aggs.push("pairing.split", p.split_residual() / s);
        aggs.push("pairing.split", (p.lhs_swapped - p.a_vu - p.b_vu).abs() / s);
        aggs.push("pairing.symmetry", p.symmetry_residual() / s);
        aggs.push("pairing.split_reversed_beta_sign", p.split_residual_reversed() / s);
        aggs.push("pairing.symmetry_reversed_beta_sign", p.symmetry_residual_reversed() / s);
        let d = state.pairing_terms(st, &state.phi, &state.phi, k)?;
        let ds = d.scale();
        aggs.push("pairing.diagonal_nonnegative", if ds == 0.0 { 0.0 } else { d.lhs / ds });
        aggs.push("pairing.split", d.split_residual() / ds.max(1e-300));
        entry.pairings.push(d);
    }
    Ok(())
}

fn derivative_detailed(sc: &Scenario, aggs: &mut Aggs, state: &PotentialState<f64>, dir: &SigmaData<f64>) -> Result<(), Error> {
    let st = &sc.st;
    let tau = state.tau_prime(dir);
    let total = tau.total();
    let denom = total.abs().max(1e-300);
    let h = sc.tol().fd_step;
    let value = |t: f64| -> Result<f64, Error> {
        let moved = PotentialState::new(st, SigmaData::combine(1.0, &state.phi, t, dir), state.dealias);
        moved.require_admissible()?;
        Ok(moved.twisted_donaldson())
    };
    let central = |t: f64| -> Result<f64, Error> { Ok((value(t)? - value(-t)?) / (2.0 * t)) };
    let (d1, d2) = (central(h)?, central(h / 2.0)?);
    let richardson = (4.0 * d2 - d1) / 3.0;
    aggs.push("derivative.finite_difference", (richardson - total).abs() / denom);
    if aggs.has("derivative.integrable_reduction") {
        aggs.push("derivative.integrable_reduction", (total - tau.volume_term).abs() / denom);
    }
    let r = state.gradient_density(st, &sc.solver)?;
    let paired = r.multiply(&dir.f, false).integrate() * factorial(sc.grid.m);
    aggs.push("derivative.riesz_density", (paired - total).abs() / denom);
    let _ = density_norm_sq(&r);
    Ok(())
}

/// Draw the potentials and run every selected potential-based suite on each.
pub(crate) fn sweep(sc: &Scenario, selected: &BTreeSet<Suite>, rec: &mut Recorder, report: &mut VerificationReport) {
    let on = |s: Suite| selected.contains(&s);
    let mut aggs = build_aggregates(sc, &on);
    let mut secs = [0.0f64; 6];
    let slot = |s: Suite| SUITES.iter().position(|x| *x == s).unwrap();
    let detailed = sc.cfg.potentials.detailed;
    let quad_all = finer(sc.grid.n).pow(sc.grid.dim() as u32) <= QUADRATURE_POINTS;
    let mut dir_rng = stream(sc.cfg.seed, Stream::Directions);
    let mut stopped: Option<String> = None;
    let mut sampling = 0.0;
    let mut cases = sample_potentials(sc);
    loop {
        let t0 = Instant::now();
        let Some(case) = cases.next() else { break };
        sampling += t0.elapsed().as_secs_f64();
        let case = match case {
            Ok(c) => c,
            Err(e) => {
                let why = format!("potential sampling failed: {}", describe(&e));
                if let Error::NotConverged { residual, .. } = &e {
                    if aggs.has("sigma.constraint") {
                        aggs.push("sigma.constraint", *residual);
                    }
                }
                aggs.fail_sampled(&why);
                stopped = Some(why);
                break;
            }
        };
        let state = &case.sampled.state;
        let t0 = Instant::now();
        let terms = state.terms_with(&sc.st);
        let ii = state.twisted_donaldson();
        let base = t0.elapsed().as_secs_f64();
        let t0 = Instant::now();
        cheap(sc, &mut aggs, state, &terms, ii);
        secs[slot(Suite::Inequalities)] += base + t0.elapsed().as_secs_f64();
        let mut entry = functional_report(state, &terms, ii);
        if aggs.has("integrable.quadrature_aubin_i") && (quad_all || case.index < detailed) {
            let t0 = Instant::now();
            quadrature(sc, &mut aggs, &case.sampled.poly, &terms);
            secs[slot(Suite::Integrable)] += t0.elapsed().as_secs_f64();
        }
        if case.index < detailed {
            let f = direction_for(sc, &state.phi.f, &mut dir_rng);
            let dir = match sc.st.sigma_data(&f, &sc.solver) {
                Ok(d) => Some(d),
                Err(e) => {
                    let why = format!("direction solve failed: {}", describe(&e));
                    for s in [Suite::Sigma, Suite::Pairing, Suite::Derivative] {
                        aggs.fail_suite(s, &why);
                    }
                    None
                }
            };
            if let Some(dir) = &dir {
                if on(Suite::Sigma) {
                    let t0 = Instant::now();
                    sigma_detailed(sc, &mut aggs, state, dir, case.index == 0);
                    secs[slot(Suite::Sigma)] += t0.elapsed().as_secs_f64();
                }
                if on(Suite::Pairing) {
                    let t0 = Instant::now();
                    if let Err(e) = pairing_detailed(sc, &mut aggs, state, dir, &mut entry) {
                        aggs.fail_suite(Suite::Pairing, &describe(&e));
                    }
                    secs[slot(Suite::Pairing)] += t0.elapsed().as_secs_f64();
                }
                if on(Suite::Derivative) {
                    let t0 = Instant::now();
                    if let Err(e) = derivative_detailed(sc, &mut aggs, state, dir) {
                        aggs.fail_suite(Suite::Derivative, &describe(&e));
                    }
                    secs[slot(Suite::Derivative)] += t0.elapsed().as_secs_f64();
                }
            }
            if on(Suite::Elliptic) {
                let t0 = Instant::now();
                if let Err(e) = elliptic_detailed(sc, &mut aggs, state) {
                    aggs.fail_suite(Suite::Elliptic, &describe(&e));
                }
                secs[slot(Suite::Elliptic)] += t0.elapsed().as_secs_f64();
            }
        }
        report.functionals.potentials.push(PotentialEntry {
            index: case.index,
            scale: case.sampled.scale,
            critical_scale: case.sampled.critical_scale,
            sigma_iterations: state.phi.stats.iterations,
            report: entry,
        });
    }
    secs[slot(Suite::Sigma)] += sampling;
    if on(Suite::Inequalities) {
        constant_potential(sc, &mut aggs, report);
    }
    let mut by_suite: Vec<Vec<Check>> = vec![Vec::new(); SUITES.len()];
    for (s, a) in &aggs.list {
        let mut c = a.finish();
        if a.name == "inequalities.gap_fraction" && a.samples() == 0 && stopped.is_none() {
            c = Check::lower(&a.name, f64::INFINITY, a.tolerance).with_note("no potential with I′ above the threshold");
        }
        by_suite[slot(*s)].push(c);
    }
    for (i, checks) in by_suite.into_iter().enumerate() {
        rec.push_all(checks, secs[i]);
    }
}

fn constant_potential(sc: &Scenario, aggs: &mut Aggs, report: &mut VerificationReport) {
    let c = ScalarField::constant(sc.grid, sc.cfg.potentials.constant);
    let data = sc.st.sigma_data_from(&c, FormField::zeros(sc.grid, 2), SolveStats { iterations: 0, relative_residual: 0.0, converged: true });
    let state = PotentialState::new(&sc.st, data, sc.solver.dealias);
    let terms = state.terms_with(&sc.st);
    let ii = state.twisted_donaldson();
    let (lo, hi) = terms.inequality_gaps();
    let worst = [lo, hi, terms.aubin_i(), terms.aubin_j()].iter().fold(0.0f64, |s, v| s.max(v.abs()));
    aggs.push(CONSTANT, worst);
    report.functionals.constant = Some(functional_report(&state, &terms, ii));
}
