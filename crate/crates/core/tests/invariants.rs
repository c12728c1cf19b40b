//! Structural invariants over random fields, structures and degrees.

use aktorus::elliptic::SolverConfig;
use aktorus::sampler::{random_field, random_form, TrigPolynomial};
use aktorus::symplectic::{primitive_decompose, reconstruct, symplectic_star};
use aktorus::{build_structure, exterior_derivative, wedge, FormField, GridSpec, StructureRecipe, Structure64};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn structure(epsilon: f64, seed: u64) -> Structure64 {
    build_structure(GridSpec::new(2, 8).unwrap(), StructureRecipe { epsilon, seed, ..Default::default() }).unwrap()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn rel(a: &FormField<f64>, b: &FormField<f64>) -> f64 {
    a.sub(b).max_abs() / a.max_abs().max(b.max_abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn d_squared_vanishes(seed in any::<u64>(), k in 0usize..3) {
        let g = GridSpec::new(2, 8).unwrap();
        let a = random_form::<f64, _>(g, k, 2, &mut rng(seed));
        let dda = exterior_derivative(&exterior_derivative(&a));
        prop_assert!(dda.max_abs() < 1e-10 * a.max_abs());
    }

    #[test]
    fn wedge_is_graded_commutative(seed in any::<u64>(), k in 0usize..3, l in 0usize..3) {
        let g = GridSpec::new(2, 8).unwrap();
        let mut r = rng(seed);
        let a = random_form::<f64, _>(g, k, 1, &mut r);
        let b = random_form::<f64, _>(g, l, 1, &mut r);
        let sign = if (k * l) % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!(rel(&wedge(&a, &b, true), &wedge(&b, &a, true).scale(sign)) < 1e-12);
    }

    #[test]
    fn leibniz_rule(seed in any::<u64>(), k in 0usize..2, l in 0usize..3) {
        let g = GridSpec::new(2, 8).unwrap();
        let mut r = rng(seed);
        let a = random_form::<f64, _>(g, k, 1, &mut r);
        let b = random_form::<f64, _>(g, l, 1, &mut r);
        let lhs = exterior_derivative(&wedge(&a, &b, true));
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let rhs = wedge(&exterior_derivative(&a), &b, true).add(&wedge(&a, &exterior_derivative(&b), true).scale(sign));
        prop_assert!(rel(&lhs, &rhs) < 1e-10);
    }

    #[test]
    fn codifferential_is_adjoint(seed in any::<u64>(), eps in 0.0f64..0.15, k in 0usize..4) {
        let st = structure(eps, seed);
        let mut r = rng(seed ^ 1);
        let a = random_form::<f64, _>(st.grid, k, 1, &mut r);
        let b = random_form::<f64, _>(st.grid, k + 1, 1, &mut r);
        let lhs = st.l2_inner(&exterior_derivative(&a), &b);
        let rhs = st.l2_inner(&a, &st.codifferential(&b));
        prop_assert!((lhs - rhs).abs() < 1e-9 * (lhs.abs() + rhs.abs() + 1e-12), "{} {}", lhs, rhs);
    }

    #[test]
    fn j_squares_to_sign_and_splits_two_forms(seed in any::<u64>(), eps in 0.0f64..0.15) {
        let st = structure(eps, seed);
        let a = random_form::<f64, _>(st.grid, 2, 1, &mut rng(seed ^ 2));
        let (plus, minus) = st.project_pm(&a);
        prop_assert!(rel(&plus.add(&minus), &a) < 1e-12);
        prop_assert!(rel(&st.act_j(&plus), &plus) < 1e-10);
        prop_assert!(rel(&st.act_j(&minus), &minus.scale(-1.0)) < 1e-10);
    }

    #[test]
    fn primitive_decomposition_reconstructs(seed in any::<u64>(), k in 0usize..5) {
        let g = GridSpec::new(2, 8).unwrap();
        let a = random_form::<f64, _>(g, k, 1, &mut rng(seed));
        let parts = primitive_decompose(&a);
        prop_assert!(rel(&reconstruct(&parts, k, g), &a) < 1e-12);
    }

    #[test]
    fn symplectic_star_is_an_involution(seed in any::<u64>(), k in 0usize..5) {
        let g = GridSpec::new(2, 8).unwrap();
        let a = random_form::<f64, _>(g, k, 1, &mut rng(seed));
        prop_assert!(rel(&symplectic_star(&symplectic_star(&a)), &a) < 1e-12);
    }

    #[test]
    fn metric_star_squares_to_sign(seed in any::<u64>(), eps in 0.0f64..0.15, k in 0usize..5) {
        let st = structure(eps, seed);
        let a = random_form::<f64, _>(st.grid, k, 1, &mut rng(seed ^ 3));
        let sign = if (k * (4 - k)) % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!(rel(&st.hodge_star(&st.hodge_star(&a)), &a.scale(sign)) < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn dplus_is_closed_and_invariant(seed in any::<u64>(), eps in 0.0f64..0.12) {
        let st = structure(eps, seed);
        let f = TrigPolynomial::<f64>::random(st.dim(), 1, true, &mut rng(seed ^ 4)).sample(st.grid);
        let cfg = SolverConfig { tol: 1e-11, dealias: false, ..Default::default() };
        let r = st.d_j_plus(&f, &cfg).unwrap();
        prop_assert!(r.residuals.anti_invariant_part < 1e-8);
        prop_assert!(r.residuals.closedness < 1e-8);
    }

    #[test]
    fn twisted_aubin_chain(seed in any::<u64>(), eps in 0.0f64..0.12) {
        let st = structure(eps, seed);
        let cfg = SolverConfig { tol: 1e-11, dealias: false, ..Default::default() };
        let f = random_field::<f64, _>(st.grid, 1, &mut rng(seed ^ 5)).centered();
        let dir = st.d_j_plus(&f, &cfg).unwrap().djplus;
        let s = st.critical_scale(&dir, 0.0).min(10.0);
        let phi = f.scale(0.5 * s);
        let state = st.potential_state(&phi, &cfg).unwrap();
        let t = state.terms_with(&st);
        let (lo, hi) = t.inequality_gaps();
        prop_assert!(lo >= -1e-10 * t.scale() && hi >= -1e-10 * t.scale(), "{} {}", lo, hi);
        prop_assert!(t.difference_identity_residual_matched(state.twisted_donaldson()) < 1e-9);
    }
}
