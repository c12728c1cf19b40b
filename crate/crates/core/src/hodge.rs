//! Metric Hodge star, codifferential and L² pairings for a structure's metric g.

use crate::exterior::{exterior_derivative, pointwise_apply, FormField};
use crate::multi_index::{wedge_sign, Basis};
use crate::scalar::Real;
use crate::spectral::ScalarField;
use crate::structure::AlmostHermitianStructure;

/// `(Cβ)_{I^c} = sign(I, I^c) β_I`: k-forms to (2m-k)-forms.
fn complement<T: Real>(a: &FormField<T>) -> FormField<T> {
    let d = a.grid.dim();
    let bi = a.basis();
    let bo = Basis::new(d, d - a.degree);
    let full = bi.full_mask();
    let mut out = FormField::zeros(a.grid, d - a.degree);
    for (c, mi) in bi.masks.iter().enumerate() {
        let mc = full & !mi;
        let s = T::lit(wedge_sign(*mi, mc) as f64);
        out.comps[bo.position(mc).unwrap()] = a.comps[c].iter().map(|v| *v * s).collect();
    }
    out
}

/// Inverse of [`complement`]: (2m-k)-forms to k-forms.
fn complement_inv<T: Real>(a: &FormField<T>, k: usize) -> FormField<T> {
    let d = a.grid.dim();
    let bo = Basis::new(d, k);
    let bi = a.basis();
    let full = bo.full_mask();
    let mut out = FormField::zeros(a.grid, k);
    for (c, mo) in bo.masks.iter().enumerate() {
        let mc = full & !mo;
        let s = T::lit(wedge_sign(*mo, mc) as f64);
        out.comps[c] = a.comps[bi.position(mc).unwrap()].iter().map(|v| *v * s).collect();
    }
    out
}

fn scale_pointwise<T: Real>(a: &FormField<T>, s: &[T], invert: bool) -> FormField<T> {
    let mut r = a.clone();
    for c in r.comps.iter_mut() {
        for (v, w) in c.iter_mut().zip(s) {
            *v = if invert { *v / *w } else { *v * *w };
        }
    }
    r
}

impl<T: Real> AlmostHermitianStructure<T> {
    /// Hodge star of g with orientation `dx^1 ∧ .. ∧ dx^{2m}`: `β ∧ *α = ⟨β, α⟩ vol_g`.
    pub fn hodge_star(&self, a: &FormField<T>) -> FormField<T> {
        let d = self.dim();
        let k = a.degree;
        if k <= self.grid.m {
            let raised = pointwise_apply(a, &self.ginv);
            complement(&scale_pointwise(&raised, &self.sqrt_det_g, false))
        } else {
            // * on degree k is (-1)^{k(d-k)} times the inverse of * on degree d-k
            let j = d - k;
            let back = complement_inv(a, j);
            let lowered = pointwise_apply(&back, &self.g);
            let r = scale_pointwise(&lowered, &self.sqrt_det_g, true);
            if (k * j) % 2 == 1 {
                r.scale(-T::one())
            } else {
                r
            }
        }
    }

    /// `d* = -*d*`, the L²-adjoint of d in even dimension.
    pub fn codifferential(&self, a: &FormField<T>) -> FormField<T> {
        if a.degree == 0 {
            return FormField::zeros(a.grid, 0);
        }
        self.hodge_star(&exterior_derivative(&self.hodge_star(a))).scale(-T::one())
    }

    /// Pointwise ⟨α, β⟩_g.
    pub fn pointwise_inner(&self, a: &FormField<T>, b: &FormField<T>) -> ScalarField<T> {
        assert_eq!(a.degree, b.degree, "degree mismatch");
        let rb = pointwise_apply(b, &self.ginv);
        let mut out = vec![T::zero(); self.grid.len()];
        for (x, y) in a.comps.iter().zip(&rb.comps) {
            for (o, (u, v)) in out.iter_mut().zip(x.iter().zip(y)) {
                *o = *o + *u * *v;
            }
        }
        ScalarField { grid: self.grid, data: out }
    }

    /// `∫ ⟨α, β⟩_g vol_g`.
    pub fn l2_inner(&self, a: &FormField<T>, b: &FormField<T>) -> T {
        let mut f = self.pointwise_inner(a, b);
        for (v, s) in f.data.iter_mut().zip(&self.sqrt_det_g) {
            *v = *v * *s;
        }
        f.integrate()
    }

    pub fn l2_norm(&self, a: &FormField<T>) -> T {
        self.l2_inner(a, a).max(T::zero()).sqrt()
    }

    /// Positive Laplacian `d*d` on functions.
    pub fn laplacian_positive(&self, f: &ScalarField<T>) -> ScalarField<T> {
        self.codifferential(&exterior_derivative(&FormField::from_scalar(f))).scalar_part()
    }
}

/// Whether the sign `(-1)^{k+1}` in front of `*d*` gives the adjoint of d on k-forms.
pub fn alternate_codifferential_sign_is_adjoint(k: usize) -> bool {
    k % 2 == 0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::wedge;
    use crate::grid::GridSpec;
    use crate::sampler::random_form;
    use crate::structure::{build_structure, StructureRecipe};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn structure(m: usize, eps: f64) -> AlmostHermitianStructure<f64> {
        build_structure(GridSpec::new(m, 8).unwrap(), StructureRecipe { epsilon: eps, ..Default::default() }).unwrap()
    }

    #[test]
    fn flat_star_of_dx1() {
        let st = structure(2, 0.0);
        let mut a = FormField::zeros(st.grid, 1);
        a.comps[0] = vec![1.0; st.grid.len()];
        let s = st.hodge_star(&a);
        assert!(s.component(&[1, 2, 3]).iter().all(|v| (*v - 1.0).abs() < 1e-15));
        let top = st.hodge_star(&FormField::from_scalar(&ScalarField::constant(st.grid, 1.0)));
        assert!(top.comps[0].iter().all(|v| (*v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn star_squared_and_pairing() {
        for m in [2usize, 3] {
            let st = structure(m, 0.1);
            let d = 2 * m;
            let mut rng = ChaCha8Rng::seed_from_u64(21);
            for k in 0..=d {
                let a = random_form::<f64, _>(st.grid, k, 1, &mut rng);
                let b = random_form::<f64, _>(st.grid, k, 1, &mut rng);
                let ss = st.hodge_star(&st.hodge_star(&a));
                let sign = if (k * (d - k)) % 2 == 0 { 1.0 } else { -1.0 };
                assert!(ss.sub(&a.scale(sign)).max_abs() < 1e-11, "m={m} k={k}");
                // β ∧ *α = ⟨β, α⟩ vol
                let lhs = wedge(&b, &st.hodge_star(&a), false).scalar_part();
                let mut rhs = st.pointwise_inner(&b, &a);
                for (v, s) in rhs.data.iter_mut().zip(&st.sqrt_det_g) {
                    *v *= s;
                }
                assert!((&lhs - &rhs).max_abs() < 1e-11, "m={m} k={k}");
            }
        }
    }

    #[test]
    fn codifferential_is_adjoint() {
        let st = structure(2, 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for k in 1..=4 {
            let a = random_form::<f64, _>(st.grid, k - 1, 2, &mut rng);
            let b = random_form::<f64, _>(st.grid, k, 2, &mut rng);
            let lhs = st.l2_inner(&crate::exterior::exterior_derivative(&a), &b);
            let rhs = st.l2_inner(&a, &st.codifferential(&b));
            assert!((lhs - rhs).abs() < 1e-11 * lhs.abs().max(1.0), "k={k}: {lhs} vs {rhs}");
        }
        assert!(alternate_codifferential_sign_is_adjoint(2));
        assert!(!alternate_codifferential_sign_is_adjoint(1));
    }

    #[test]
    fn flat_laplacian() {
        let st = structure(2, 0.0);
        let f = ScalarField::<f64>::from_fn(st.grid, |x| (x[0] + 2.0 * x[2]).cos());
        let l = st.laplacian_positive(&f);
        assert!((&l - &f.scale(5.0)).max_abs() < 1e-12);
    }
}
