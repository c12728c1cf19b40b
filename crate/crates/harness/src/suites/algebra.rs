//! Pointwise and linear identities: structure, calculus, stars, symplectic splitting.

use aktorus::exterior::{exterior_derivative, pointwise_apply, wedge, FormField};
use aktorus::linalg::{inverse, MatrixField};
use aktorus::multi_index::{factorial, wedge_sign, Basis};
use aktorus::sampler::random_form;
use aktorus::structure::standard_omega_matrix;
use aktorus::symplectic::{dual_lefschetz, lefschetz, partial_minus, primitive_decompose, symplectic_derivatives, symplectic_star};
use aktorus::Structure64;

use super::{rel, rel_diff, stream, Scenario, Stream};
use crate::report::{Aggregate, Check};

pub(crate) fn structure_checks(sc: &Scenario) -> Vec<Check> {
    let st = &sc.st;
    let t = sc.tol();
    let r = st.residuals();
    let mut out = vec![
        Check::upper("structure.j_squared", r.j_squared, t.structure),
        Check::upper("structure.compatibility", r.compatibility, t.structure),
        Check::upper("structure.metric_symmetry", r.g_symmetry, t.structure),
        Check::upper("structure.j_orthogonal", r.j_orthogonal, t.structure),
        Check::upper("structure.unit_volume", r.det_g, t.structure),
        Check::lower("structure.tamedness_margin", r.tamedness_margin, 0.0),
    ];
    // J on forms against the (p,q) weight operator: all 1-forms, anti-invariant 2-forms.
    let mut rng = stream(sc.cfg.seed, Stream::Structure);
    let mut one = Aggregate::upper("structure.j_matches_weight_operator_one_forms", t.weight_operator).diagnostic();
    let mut one_neg = Aggregate::upper("structure.j_matches_minus_weight_operator_one_forms", t.weight_operator);
    let mut two = Aggregate::upper("structure.j_matches_weight_operator_anti_invariant", t.weight_operator);
    for _ in 0..sc.cfg.forms {
        let a = random_form::<f64, _>(sc.grid, 1, 2, &mut rng);
        let w = st.mathcal_j(&a);
        one.push(rel_diff(&st.act_j(&a), &w));
        one_neg.push(rel_diff(&st.act_j(&a), &w.scale(-1.0)));
        let b = st.minus_part(&random_form::<f64, _>(sc.grid, 2, 2, &mut rng));
        two.push(rel_diff(&st.act_j(&b), &st.mathcal_j(&b)));
    }
    out.push(one.finish().with_note("Jα = 𝒥α"));
    out.push(one_neg.finish().with_note("Jα = −𝒥α, the sign under the J convention in use"));
    out.push(two.finish());
    out
}

pub(crate) fn calculus_checks(sc: &Scenario) -> Vec<Check> {
    let st = &sc.st;
    let t = sc.tol();
    let d = sc.grid.dim();
    let mut rng = stream(sc.cfg.seed, Stream::Calculus);
    let band = 2.min(sc.grid.n / 2 - 1);
    let mut dd = Aggregate::upper("calculus.d_squared", t.calculus);
    let mut adj = Aggregate::upper("calculus.adjointness", t.calculus);
    let mut printed = Aggregate::upper("calculus.alternate_sign_adjointness", t.calculus).diagnostic();
    let mut leib = Aggregate::upper("calculus.leibniz", t.calculus);
    let mut printed_ok = Vec::new();
    for k in 0..d {
        let mut worst_printed = 0.0f64;
        for _ in 0..sc.cfg.forms {
            let a = random_form::<f64, _>(sc.grid, k, band, &mut rng);
            let da = exterior_derivative(&a);
            if k + 2 <= d {
                dd.push(rel(&exterior_derivative(&da), da.max_abs()));
            }
            let b = random_form::<f64, _>(sc.grid, k + 1, band, &mut rng);
            let lhs = st.l2_inner(&da, &b);
            let rhs = st.l2_inner(&a, &st.codifferential(&b));
            let norm = st.l2_norm(&da) * st.l2_norm(&b);
            adj.push((lhs - rhs).abs() / norm.max(1e-300));
            // (−1)^{j+1} *d* on j-forms, j = k+1
            let j = k + 1;
            let alt = st.hodge_star(&exterior_derivative(&st.hodge_star(&b))).scale(if j % 2 == 1 { 1.0 } else { -1.0 });
            let r = (lhs - st.l2_inner(&a, &alt)).abs() / norm.max(1e-300);
            worst_printed = worst_printed.max(r);
            printed.push(r);
        }
        if worst_printed <= t.calculus {
            printed_ok.push(k + 1);
        }
    }
    // Leibniz on band-1 forms: products have band 2 and are resolved on every allowed grid.
    let dealias = sc.solver.dealias;
    for k in 0..d {
        for l in 0..d - k {
            let a = random_form::<f64, _>(sc.grid, k, 1, &mut rng);
            let b = random_form::<f64, _>(sc.grid, l, 1, &mut rng);
            let lhs = exterior_derivative(&wedge(&a, &b, dealias));
            let mut rhs = wedge(&exterior_derivative(&a), &b, dealias);
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            rhs.axpy(sign, &wedge(&a, &exterior_derivative(&b), dealias));
            if rhs.max_abs() > 0.0 {
                leib.push(rel_diff(&lhs, &rhs));
            }
        }
    }
    let note = format!("(-1)^(k+1)*d* is the adjoint on degrees {printed_ok:?}; -*d* is used on all degrees");
    vec![dd.finish(), adj.finish(), printed.finish().with_note(note), leib.finish()]
}

/// `(Cβ)_{I^c} = sign(I, I^c) β_I`.
fn complement(a: &FormField<f64>) -> FormField<f64> {
    let d = a.grid.dim();
    let bi = a.basis();
    let bo = Basis::new(d, d - a.degree);
    let full = bi.full_mask();
    let mut out = FormField::zeros(a.grid, d - a.degree);
    for (c, mi) in bi.masks.iter().enumerate() {
        let mc = full & !mi;
        let s = wedge_sign(*mi, mc) as f64;
        out.comps[bo.position(mc).unwrap()] = a.comps[c].iter().map(|v| v * s).collect();
    }
    out
}

/// Symplectic star from the Poisson bivector: `α ∧ *_ω β = Λ^k(Ω⁻¹)(α, β) ω^m/m!`.
pub(crate) fn bivector_star(a: &FormField<f64>) -> FormField<f64> {
    let m = a.grid.m;
    let pi = inverse(&standard_omega_matrix::<f64>(m), 2 * m).expect("Ω is invertible");
    complement(&pointwise_apply(a, &MatrixField::constant(a.grid, &pi)))
}

fn power(a: &FormField<f64>, r: usize) -> FormField<f64> {
    (0..r).fold(a.clone(), |x, _| lefschetz(&x))
}

/// Worst residuals of the metric/symplectic star identities over random forms.
pub(crate) struct StarResiduals {
    pub weil: f64,
    pub primitive: f64,
    pub identity: f64,
    pub bivector: f64,
}

pub(crate) fn star_residuals(st: &Structure64, forms: usize, seed: u64) -> StarResiduals {
    let grid = st.grid;
    let m = grid.m;
    let mut rng = stream(seed, Stream::Star);
    let mut r = StarResiduals { weil: 0.0, primitive: 0.0, identity: 0.0, bivector: 0.0 };
    for k in 0..=2 * m {
        for _ in 0..forms {
            let a = random_form::<f64, _>(grid, k, 2.min(grid.n / 2 - 1), &mut rng);
            r.weil = r.weil.max(rel_diff(&st.mathcal_j(&symplectic_star(&a)), &st.hodge_star(&a)));
            if k > m {
                continue;
            }
            let b = primitive_decompose(&a).swap_remove(0);
            r.primitive = r.primitive.max(rel(&power(&b, m - k + 1), a.max_abs()));
            for rr in 0..=(m - k) {
                let e = m - rr - k;
                let x = power(&b, rr).scale(1.0 / factorial(rr));
                let sign = if (k * (k + 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
                let expect = power(&b, e).scale(sign / factorial(e));
                let s = symplectic_star(&x);
                if expect.max_abs() > 0.0 {
                    r.identity = r.identity.max(rel_diff(&s, &expect));
                    r.bivector = r.bivector.max(rel_diff(&bivector_star(&x), &expect));
                }
            }
        }
    }
    r
}

pub(crate) fn star_checks(sc: &Scenario) -> Vec<Check> {
    let t = sc.tol();
    let r = star_residuals(&sc.st, sc.cfg.forms, sc.cfg.seed);
    vec![
        Check::upper("star.metric_equals_weighted_symplectic", r.weil, t.star),
        Check::upper("star.primitive_parts", r.primitive, t.star),
        Check::upper("star.symplectic_on_primitive", r.identity, t.star),
        Check::upper("star.bivector_pairing", r.bivector, t.star),
    ]
}

/// Number of anti-invariant forms in the splitting suite.
pub const SPLITTING_FORMS: usize = 50;

pub(crate) struct SplittingResiduals {
    pub split: f64,
    pub plus_primitive: f64,
    pub codifferential: f64,
    pub codifferential_printed: f64,
    pub decomposition: f64,
}

pub(crate) fn splitting_residuals(st: &Structure64, count: usize, seed: u64) -> SplittingResiduals {
    let grid = st.grid;
    let m = grid.m;
    let mut rng = stream(seed, Stream::Splitting);
    let mut r = SplittingResiduals { split: 0.0, plus_primitive: 0.0, codifferential: 0.0, codifferential_printed: 0.0, decomposition: 0.0 };
    for _ in 0..count {
        let a = st.minus_part(&random_form::<f64, _>(grid, 2, 1, &mut rng));
        let da = exterior_derivative(&a);
        let (plus, minus) = symplectic_derivatives(&a).expect("degree 2 <= m");
        let mut rebuilt = plus.clone();
        rebuilt.axpy(1.0, &lefschetz(&minus));
        r.split = r.split.max(rel_diff(&rebuilt, &da));
        // primitive of degree 3: L^{m-2} kills it (at m = 2 it vanishes)
        r.plus_primitive = r.plus_primitive.max(rel(&power(&plus, m - 2), da.max_abs()));
        let ds = st.codifferential(&a);
        let jm = st.act_j(&partial_minus(&a)).scale((m - 1) as f64);
        let mut corrected = ds.clone();
        corrected.axpy(1.0, &jm);
        r.codifferential = r.codifferential.max(rel(&corrected, ds.max_abs()));
        r.codifferential_printed = r.codifferential_printed.max(rel_diff(&jm, &ds));
    }
    for _ in 0..3 {
        let a = random_form::<f64, _>(grid, 2, 1, &mut rng);
        let parts = primitive_decompose(&a);
        let rebuilt = aktorus::symplectic::reconstruct(&parts, 2, grid);
        let lam = dual_lefschetz(&parts[0]);
        r.decomposition = r.decomposition.max(rel_diff(&rebuilt, &a)).max(rel(&lam, a.max_abs()));
    }
    r
}

pub(crate) fn splitting_checks(sc: &Scenario) -> Vec<Check> {
    let t = sc.tol();
    let r = splitting_residuals(&sc.st, SPLITTING_FORMS, sc.cfg.seed);
    vec![
        Check::upper("splitting.d_equals_plus_and_lefschetz_minus", r.split, t.splitting),
        Check::upper("splitting.plus_part_primitive", r.plus_primitive, t.splitting),
        Check::upper("splitting.lefschetz_decomposition", r.decomposition, t.splitting),
        Check::upper("splitting.anti_invariant_codifferential", r.codifferential, t.splitting)
            .with_note("d*α = −(m−1)J∂₋α"),
        Check::upper("splitting.anti_invariant_codifferential_opposite_sign", r.codifferential_printed, t.splitting)
            .diagnostic()
            .with_note("d*α = +(m−1)J∂₋α"),
    ]
}
