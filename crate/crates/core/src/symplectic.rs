//! Lefschetz operators, primitive decomposition and the symplectic splitting of d
//! for the constant form `ω = Σ dx_{2j} ∧ dx_{2j+1}`.

use crate::error::{Error, Result};
use crate::exterior::{derivative_terms, exterior_derivative, first_order, wedge, FormField};
use crate::multi_index::{factorial, wedge_sign, Basis};
use crate::scalar::Real;
use crate::structure::AlmostHermitianStructure;

/// `L α = ω ∧ α`.
pub fn lefschetz<T: Real>(a: &FormField<T>) -> FormField<T> {
    wedge(&FormField::standard_symplectic(a.grid), a, false)
}

/// Interior product with the coordinate vector `e_i`.
pub fn contract<T: Real>(a: &FormField<T>, i: usize) -> FormField<T> {
    if a.degree == 0 {
        return FormField::zeros(a.grid, 0);
    }
    let bi = a.basis();
    let bo = Basis::new(a.grid.dim(), a.degree - 1);
    let mut out = FormField::zeros(a.grid, a.degree - 1);
    for (c, mi) in bi.masks.iter().enumerate() {
        if mi & (1 << i) == 0 {
            continue;
        }
        let rest = mi & !(1 << i);
        let s = T::lit(wedge_sign(1 << i, rest) as f64);
        let o = bo.position(rest).unwrap();
        for (v, w) in out.comps[o].iter_mut().zip(&a.comps[c]) {
            *v = *v + s * *w;
        }
    }
    out
}

/// Contraction with the Poisson bivector; `Λ ω = m` and `[Λ, L] = (m - k)` on k-forms.
pub fn dual_lefschetz<T: Real>(a: &FormField<T>) -> FormField<T> {
    if a.degree < 2 {
        return FormField::zeros(a.grid, 0);
    }
    let mut out = FormField::zeros(a.grid, a.degree - 2);
    for j in 0..a.grid.m {
        let t = contract(&contract(a, 2 * j), 2 * j + 1);
        out.axpy(T::one(), &t);
    }
    out
}

/// `(out, in, sign)` with `(Λα)_out = Σ sign α_in` on `degree`-forms.
pub(crate) fn dual_lefschetz_terms(m: usize, degree: usize) -> Vec<(usize, usize, f64)> {
    let dim = 2 * m;
    let bi = Basis::new(dim, degree);
    let bo = Basis::new(dim, degree - 2);
    let mut terms = Vec::new();
    for (c, mi) in bi.masks.iter().enumerate() {
        for j in 0..m {
            let (a, b) = (1u32 << (2 * j), 1u32 << (2 * j + 1));
            if mi & a == 0 || mi & b == 0 {
                continue;
            }
            let r1 = mi & !a;
            let r2 = r1 & !b;
            let s = wedge_sign(a, r1) * wedge_sign(b, r2);
            terms.push((bo.position(r2).unwrap(), c, s as f64));
        }
    }
    terms
}

/// `Λ dα` as one spectral operator.
pub fn dual_lefschetz_d<T: Real>(a: &FormField<T>) -> FormField<T> {
    let m = a.grid.m;
    let k = a.degree;
    if k + 1 < 2 || k + 1 > 2 * m {
        return FormField::zeros(a.grid, (k + 1).saturating_sub(2));
    }
    let lam = dual_lefschetz_terms(m, k + 1);
    let der = derivative_terms(2 * m, k);
    let mut terms: Vec<(usize, usize, usize, f64)> = Vec::new();
    for (o, mid, sl) in &lam {
        for (mo, i, axis, sd) in &der {
            if mo == mid {
                match terms.iter_mut().find(|t| t.0 == *o && t.1 == *i && t.2 == *axis) {
                    Some(t) => t.3 += sl * sd,
                    None => terms.push((*o, *i, *axis, sl * sd)),
                }
            }
        }
    }
    terms.retain(|t| t.3 != 0.0);
    first_order(a, k - 1, &terms)
}

fn power<T: Real>(a: &FormField<T>, r: usize, op: fn(&FormField<T>) -> FormField<T>) -> FormField<T> {
    let mut x = a.clone();
    for _ in 0..r {
        x = op(&x);
    }
    x
}

/// `α = Σ_r L^r B_{k-2r}` with each `B` primitive; entry `r` holds `B_{k-2r}`.
pub fn primitive_decompose<T: Real>(a: &FormField<T>) -> Vec<FormField<T>> {
    let m = a.grid.m;
    let k = a.degree;
    let smax = k / 2;
    let mut parts: Vec<FormField<T>> = (0..=smax).map(|r| FormField::zeros(a.grid, k - 2 * r)).collect();
    let mut rest = a.clone();
    let lowest = k.saturating_sub(m);
    for r in (lowest..=smax).rev() {
        let j = k - 2 * r;
        // Λ^r L^r B_j = c_r B_j for primitive B_j
        let c: f64 = (1..=r).map(|t| (t * (m + 1 - j - t)) as f64).product();
        let b = power(&rest, r, dual_lefschetz).scale(T::lit(1.0 / c));
        rest.axpy(-T::one(), &power(&b, r, lefschetz));
        parts[r] = b;
    }
    parts
}

pub fn reconstruct<T: Real>(parts: &[FormField<T>], degree: usize, grid: crate::grid::GridSpec) -> FormField<T> {
    let mut out = FormField::zeros(grid, degree);
    for (r, b) in parts.iter().enumerate() {
        out.axpy(T::one(), &power(b, r, lefschetz));
    }
    out
}

/// `(∂₊B, ∂₋B)` for a primitive k-form `B`: `dB = ∂₊B + L ∂₋B` with both parts primitive.
pub fn symplectic_derivatives<T: Real>(b: &FormField<T>) -> Result<(FormField<T>, FormField<T>)> {
    let m = b.grid.m;
    let k = b.degree;
    if k > m {
        return Err(Error::InvalidArgument(format!("primitive forms have degree <= {m}, got {k}")));
    }
    let db = exterior_derivative(b);
    let minus = dual_lefschetz(&db).scale(T::lit(1.0 / (m + 1 - k) as f64));
    let plus = db.sub(&lefschetz(&minus));
    Ok((plus, minus))
}

/// `∂₋` of a primitive form.
pub fn partial_minus<T: Real>(b: &FormField<T>) -> FormField<T> {
    symplectic_derivatives(b).expect("primitive degree").1
}

/// Symplectic star: `*_ω (L^r/r! B_k) = (-1)^{k(k+1)/2} L^{m-r-k}/(m-r-k)! B_k`.
pub fn symplectic_star<T: Real>(a: &FormField<T>) -> FormField<T> {
    let m = a.grid.m;
    let d = a.grid.dim();
    let parts = primitive_decompose(a);
    let mut out = FormField::zeros(a.grid, d - a.degree);
    for (r, b) in parts.iter().enumerate() {
        let k = b.degree;
        if k > m || r + k > m {
            continue;
        }
        let e = m - r - k;
        let sign = if (k * (k + 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
        let coef = sign * factorial(r) / factorial(e);
        out.axpy(T::lit(coef), &power(b, e, lefschetz));
    }
    out
}

impl<T: Real> AlmostHermitianStructure<T> {
    /// Real part of the (2,1)+(1,2) component of `∂₊α`, for 2-forms α.
    pub fn beta0(&self, a: &FormField<T>) -> Result<FormField<T>> {
        if a.degree != 2 {
            return Err(Error::DegreeMismatch { expected: 2, got: a.degree });
        }
        let primitive = &primitive_decompose(a)[0];
        let (plus, _) = symplectic_derivatives(primitive)?;
        let mut out = FormField::zeros(a.grid, 3);
        for (p, q) in [(2usize, 1usize), (1, 2)] {
            if self.bidegrees(3).contains(&(p, q)) {
                out.axpy(T::one(), &self.project_pq(&plus, p, q).re());
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::sampler::random_form;
    use crate::structure::{build_structure, StructureRecipe};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn structure(m: usize, eps: f64) -> AlmostHermitianStructure<f64> {
        build_structure(GridSpec::new(m, 8).unwrap(), StructureRecipe { epsilon: eps, ..Default::default() }).unwrap()
    }

    #[test]
    fn lambda_omega_and_commutator() {
        for m in [2usize, 3] {
            let grid = GridSpec::new(m, 8).unwrap();
            let om = FormField::<f64>::standard_symplectic(grid);
            assert!(dual_lefschetz(&om).comps[0].iter().all(|v| (*v - m as f64).abs() < 1e-15));
            let mut rng = ChaCha8Rng::seed_from_u64(31);
            for k in 0..=2 * m {
                let a = random_form::<f64, _>(grid, k, 1, &mut rng);
                let lhs = if k >= 2 {
                    dual_lefschetz(&lefschetz(&a)).sub(&lefschetz(&dual_lefschetz(&a)))
                } else {
                    dual_lefschetz(&lefschetz(&a))
                };
                if k + 2 > 2 * m && k >= 2 {
                    continue;
                }
                let expect = a.scale(m as f64 - k as f64);
                assert!(lhs.sub(&expect).max_abs() < 1e-12, "m={m} k={k}");
            }
        }
    }

    #[test]
    fn decomposition_reconstructs_with_primitive_parts() {
        for m in [2usize, 3] {
            let grid = GridSpec::new(m, 8).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(32);
            for k in 0..=2 * m {
                let a = random_form::<f64, _>(grid, k, 1, &mut rng);
                let parts = primitive_decompose(&a);
                for b in &parts {
                    if b.degree >= 2 {
                        assert!(dual_lefschetz(b).max_abs() < 1e-12);
                    }
                }
                assert!(reconstruct(&parts, k, grid).sub(&a).max_abs() < 1e-12, "m={m} k={k}");
            }
        }
    }

    #[test]
    fn symplectic_derivatives_split_d() {
        let grid = GridSpec::new(3, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for k in 1..=3 {
            let b = primitive_decompose(&random_form::<f64, _>(grid, k, 1, &mut rng)).swap_remove(0);
            let (p, mm) = symplectic_derivatives(&b).unwrap();
            let db = exterior_derivative(&b);
            assert!(p.add(&lefschetz(&mm)).sub(&db).max_abs() < 1e-12);
            if k + 1 >= 2 && k < 3 {
                assert!(dual_lefschetz(&p).max_abs() < 1e-11);
            }
            if mm.degree >= 2 {
                assert!(dual_lefschetz(&mm).max_abs() < 1e-11);
            }
        }
    }

    #[test]
    fn symplectic_star_involution_and_powers() {
        let grid = GridSpec::new(3, 8).unwrap();
        let om = FormField::<f64>::standard_symplectic(grid);
        let om2 = lefschetz(&om).scale(0.5);
        // *_ω ω = ω²/2 for m = 3
        assert!(symplectic_star(&om).sub(&om2).max_abs() < 1e-13);
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        for k in 0..=6 {
            let a = random_form::<f64, _>(grid, k, 1, &mut rng);
            assert!(symplectic_star(&symplectic_star(&a)).sub(&a).max_abs() < 1e-11, "k={k}");
        }
    }

    #[test]
    fn weil_identity_all_degrees() {
        for m in [2usize, 3] {
            let st = structure(m, 0.1);
            let mut rng = ChaCha8Rng::seed_from_u64(35);
            for k in 0..=2 * m {
                let a = random_form::<f64, _>(st.grid, k, 1, &mut rng);
                let lhs = st.hodge_star(&a);
                let rhs = st.mathcal_j(&symplectic_star(&a));
                assert!(lhs.sub(&rhs).max_abs() < 1e-10 * a.max_abs().max(1.0), "m={m} k={k}");
            }
        }
    }

    #[test]
    fn codifferential_of_anti_invariant_forms() {
        for m in [2usize, 3] {
            let st = structure(m, 0.1);
            let mut rng = ChaCha8Rng::seed_from_u64(36);
            let s = st.minus_part(&random_form::<f64, _>(st.grid, 2, 1, &mut rng));
            let dstar = st.codifferential(&s);
            let jpm = st.act_j(&partial_minus(&s)).scale((m - 1) as f64);
            // d*σ = -(m-1) J ∂₋σ
            assert!(dstar.add(&jpm).max_abs() < 1e-10 * dstar.max_abs(), "m={m}");
            assert!(dstar.sub(&jpm).max_abs() > 1e-3 * dstar.max_abs());
        }
    }

    #[test]
    fn beta0_vanishes_or_is_primitive() {
        let st2 = structure(2, 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let s2 = st2.minus_part(&random_form::<f64, _>(st2.grid, 2, 1, &mut rng));
        assert!(st2.beta0(&s2).unwrap().max_abs() < 1e-11);
        let st3 = structure(3, 0.1);
        let s3 = st3.minus_part(&random_form::<f64, _>(st3.grid, 2, 1, &mut rng));
        let b = st3.beta0(&s3).unwrap();
        assert!(b.max_abs() > 1e-4);
        assert!(lefschetz(&b).max_abs() < 1e-11);
    }
}
