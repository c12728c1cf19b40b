//! Almost-Hermitian structures compatible with the standard symplectic form,
//! and the induced actions on forms.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior::{pointwise_apply, FormField};
use crate::grid::GridSpec;
use crate::linalg::{det, expm, identity, inverse, matmul, symmetric_eigenvalues, transpose, MatrixField};
use crate::multi_index::{indices_of, wedge_sign, Basis};
use crate::scalar::Real;
use crate::spectral::ScalarField;

/// Recipe for a random J: `J = S J0 S^{-1}` with `S = exp(ε A)`, `A = -Ω H`,
/// and `H` a random symmetric matrix field with `max |H| <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructureRecipe {
    pub epsilon: f64,
    /// Largest wavenumber per axis in the generator.
    pub band_limit: usize,
    /// Number of random wavevectors in the generator.
    pub modes: usize,
    pub seed: u64,
}

impl Default for StructureRecipe {
    fn default() -> Self {
        Self { epsilon: 0.0, band_limit: 1, modes: 3, seed: 7 }
    }
}

/// Smallest accepted tamedness margin.
pub const TAMEDNESS_THRESHOLD: f64 = 1e-6;

/// `(J, g, ω)` on a grid. `g(X, Y) = ω(X, J Y)` and `ω(X, Y) = g(J X, Y)`.
#[derive(Debug, Clone)]
pub struct AlmostHermitianStructure<T: Real> {
    pub grid: GridSpec,
    pub recipe: StructureRecipe,
    /// Constant matrix of ω: `ω(X, Y) = Xᵀ Ω Y`.
    pub omega_mat: Vec<T>,
    pub omega: FormField<T>,
    pub j: MatrixField<T>,
    pub jt: MatrixField<T>,
    pub g: MatrixField<T>,
    pub ginv: MatrixField<T>,
    pub sqrt_det_g: Vec<T>,
    /// `Sᵀ`, pulling forms back to the standard structure.
    pub s_t: MatrixField<T>,
    /// `S⁻ᵀ`, pushing standard forms forward.
    pub s_inv_t: MatrixField<T>,
    pub tamedness_margin: T,
}

/// Pointwise residuals of the defining identities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructureResiduals {
    pub j_squared: f64,
    pub compatibility: f64,
    pub g_symmetry: f64,
    pub j_orthogonal: f64,
    pub det_g: f64,
    pub tamedness_margin: f64,
}

pub fn standard_omega_matrix<T: Real>(m: usize) -> Vec<T> {
    let d = 2 * m;
    let mut o = vec![T::zero(); d * d];
    for j in 0..m {
        o[(2 * j) * d + 2 * j + 1] = T::one();
        o[(2 * j + 1) * d + 2 * j] = -T::one();
    }
    o
}

fn random_symmetric<R: Rng>(d: usize, rng: &mut R) -> Vec<f64> {
    let mut h = vec![0.0; d * d];
    for i in 0..d {
        for j in i..d {
            let v = rng.gen_range(-1.0..1.0);
            h[i * d + j] = v;
            h[j * d + i] = v;
        }
    }
    h
}

fn frobenius(h: &[f64]) -> f64 {
    h.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Build J, g and their inverses from the recipe; rejects untamed results.
pub fn build_structure<T: Real>(grid: GridSpec, recipe: StructureRecipe) -> Result<AlmostHermitianStructure<T>> {
    if !(recipe.epsilon.is_finite()) || recipe.epsilon < 0.0 {
        return Err(Error::InvalidArgument(format!("epsilon {} must be finite and nonnegative", recipe.epsilon)));
    }
    let d = grid.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(recipe.seed);
    let b = recipe.band_limit as i64;
    let mut gens: Vec<(Vec<i64>, Vec<f64>, Vec<f64>)> = Vec::new();
    for _ in 0..recipe.modes.max(1) {
        let k: Vec<i64> = if b == 0 {
            vec![0; d]
        } else {
            loop {
                let k: Vec<i64> = (0..d).map(|_| rng.gen_range(-b..=b)).collect();
                if k.iter().any(|v| *v != 0) {
                    break k;
                }
            }
        };
        gens.push((k, random_symmetric(d, &mut rng), random_symmetric(d, &mut rng)));
    }
    let total: f64 = gens.iter().map(|(_, c, s)| frobenius(c) + frobenius(s)).sum();
    let omega_mat = standard_omega_matrix::<T>(grid.m);
    let j0: Vec<T> = omega_mat.iter().map(|v| -*v).collect();
    let eps = recipe.epsilon / total;
    let mut j = Vec::with_capacity(grid.len() * d * d);
    let mut g = Vec::with_capacity(grid.len() * d * d);
    let mut ginv = Vec::with_capacity(grid.len() * d * d);
    let mut sqrt_det_g = Vec::with_capacity(grid.len());
    let mut s_t = Vec::with_capacity(grid.len() * d * d);
    let mut s_inv_t = Vec::with_capacity(grid.len() * d * d);
    let mut x = vec![0.0f64; d];
    for p in 0..grid.len() {
        for (a, xa) in x.iter_mut().enumerate() {
            *xa = grid.coord::<f64>(p, a);
        }
        let (s, sinv) = if recipe.epsilon == 0.0 {
            (identity::<T>(d), identity::<T>(d))
        } else {
            let mut h = vec![0.0f64; d * d];
            for (k, c, sn) in &gens {
                let ph: f64 = k.iter().zip(&x).map(|(ka, xa)| *ka as f64 * xa).sum();
                for i in 0..d * d {
                    h[i] += c[i] * ph.cos() + sn[i] * ph.sin();
                }
            }
            // A = -Ω H, scaled
            let ht: Vec<T> = h.iter().map(|v| T::lit(v * eps)).collect();
            let a: Vec<T> = matmul(&omega_mat, &ht, d).iter().map(|v| -*v).collect();
            let s = expm(&a, d);
            let sinv = inverse(&s, d).ok_or_else(|| Error::InvalidArgument("singular generator".into()))?;
            (s, sinv)
        };
        j.extend(matmul(&matmul(&s, &j0, d), &sinv, d));
        let st = transpose(&sinv, d);
        g.extend(matmul(&st, &sinv, d));
        ginv.extend(matmul(&s, &transpose(&s, d), d));
        sqrt_det_g.push(T::one() / det(&s, d).abs());
        s_t.extend(transpose(&s, d));
        s_inv_t.extend(st);
    }
    let j = MatrixField { grid, dim: d, data: j };
    let jt = j.transpose();
    let mut st = AlmostHermitianStructure {
        grid,
        recipe,
        omega: FormField::standard_symplectic(grid),
        omega_mat,
        j,
        jt,
        g: MatrixField { grid, dim: d, data: g },
        ginv: MatrixField { grid, dim: d, data: ginv },
        sqrt_det_g,
        s_t: MatrixField { grid, dim: d, data: s_t },
        s_inv_t: MatrixField { grid, dim: d, data: s_inv_t },
        tamedness_margin: T::zero(),
    };
    let margin = st.compute_tamedness_margin();
    if margin.to_f64().unwrap() < TAMEDNESS_THRESHOLD {
        return Err(Error::NotTamed { margin: margin.to_f64().unwrap(), threshold: TAMEDNESS_THRESHOLD });
    }
    st.tamedness_margin = margin;
    Ok(st)
}

impl<T: Real> AlmostHermitianStructure<T> {
    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    /// `min_x λ_min(sym(Ω J))`, the smallest value of `ω(X, JX)` on unit vectors.
    fn compute_tamedness_margin(&self) -> T {
        let d = self.dim();
        let mut worst = T::infinity();
        for p in 0..self.grid.len() {
            let q = matmul(&self.omega_mat, self.j.at(p), d);
            let sym: Vec<T> = (0..d * d).map(|i| (q[i] + q[(i % d) * d + i / d]) * T::lit(0.5)).collect();
            worst = worst.min(symmetric_eigenvalues(&sym, d)[0]);
        }
        worst
    }

    /// Max over points of the defining identities' residuals.
    pub fn residuals(&self) -> StructureResiduals {
        let d = self.dim();
        let id = identity::<T>(d);
        let mut r = [T::zero(); 5];
        for p in 0..self.grid.len() {
            let j = self.j.at(p);
            let g = self.g.at(p);
            let j2 = matmul(j, j, d);
            for i in 0..d * d {
                r[0] = r[0].max((j2[i] + id[i]).abs());
            }
            // Ω = Jᵀ G
            let jtg = matmul(&transpose(j, d), g, d);
            for i in 0..d * d {
                r[1] = r[1].max((jtg[i] - self.omega_mat[i]).abs());
                r[2] = r[2].max((g[i] - g[(i % d) * d + i / d]).abs());
            }
            let jgj = matmul(&transpose(j, d), &matmul(g, j, d), d);
            for i in 0..d * d {
                r[3] = r[3].max((jgj[i] - g[i]).abs());
            }
            r[4] = r[4].max((det(g, d) - T::one()).abs());
        }
        let f = |v: T| v.to_f64().unwrap();
        StructureResiduals {
            j_squared: f(r[0]),
            compatibility: f(r[1]),
            g_symmetry: f(r[2]),
            j_orthogonal: f(r[3]),
            det_g: f(r[4]),
            tamedness_margin: f(self.tamedness_margin),
        }
    }

    /// `(Jα)(X_1..X_k) = (-1)^k α(J X_1, .., J X_k)`.
    pub fn act_j(&self, a: &FormField<T>) -> FormField<T> {
        let r = pointwise_apply(a, &self.jt);
        if a.degree % 2 == 1 {
            r.scale(-T::one())
        } else {
            r
        }
    }

    /// J-invariant and J-anti-invariant parts of a 2-form.
    pub fn project_pm(&self, a: &FormField<T>) -> (FormField<T>, FormField<T>) {
        assert_eq!(a.degree, 2, "project_pm takes 2-forms");
        let ja = self.act_j(a);
        let half = T::lit(0.5);
        (a.add(&ja).scale(half), a.sub(&ja).scale(half))
    }

    pub fn minus_part(&self, a: &FormField<T>) -> FormField<T> {
        self.project_pm(a).1
    }

    pub fn plus_part(&self, a: &FormField<T>) -> FormField<T> {
        self.project_pm(a).0
    }

    /// Types `(p, q)` present in degree `k`.
    pub fn bidegrees(&self, k: usize) -> Vec<(usize, usize)> {
        let m = self.grid.m;
        (0..=k).filter(|p| *p <= m && k - p <= m).map(|p| (p, k - p)).collect()
    }

    /// Derivation extension of `Jᵀ` on k-covectors, as sparse `(row, col, s, i, sign)`.
    fn derivation_pattern(&self, k: usize) -> Vec<(usize, usize, usize, usize, i32)> {
        let d = self.dim();
        let b = Basis::new(d, k);
        let mut out = Vec::new();
        for (c, mc) in b.masks.iter().enumerate() {
            for s in indices_of(*mc) {
                let rest = mc & !(1 << s);
                let e1 = wedge_sign(1 << s, rest);
                for i in 0..d {
                    if rest & (1 << i) != 0 {
                        continue;
                    }
                    let e2 = wedge_sign(1 << i, rest);
                    let r = b.position(rest | (1 << i)).unwrap();
                    out.push((r, c, s, i, e1 * e2));
                }
            }
        }
        out
    }

    /// Complex (p,q) component. `(1,0)`-covectors θ satisfy `θ∘J = iθ`,
    /// i.e. they span the `-i` eigenspace of the J action on 1-forms.
    pub fn project_pq(&self, a: &FormField<T>, p: usize, q: usize) -> ComplexForm<T> {
        let k = a.degree;
        assert_eq!(p + q, k, "bidegree does not match the form degree");
        let types = self.bidegrees(k);
        let d = self.dim();
        let pattern = self.derivation_pattern(k);
        let c = a.comps.len();
        let mut out = vec![vec![Complex::new(T::zero(), T::zero()); self.grid.len()]; c];
        if !types.contains(&(p, q)) {
            return ComplexForm { grid: self.grid, degree: k, comps: out };
        }
        let lam = |pp: usize, qq: usize| T::lit(pp as f64 - qq as f64);
        let target = lam(p, q);
        let mut v = vec![Complex::new(T::zero(), T::zero()); c];
        let mut w = vec![Complex::new(T::zero(), T::zero()); c];
        for pt in 0..self.grid.len() {
            let j = self.j.at(pt);
            for (ci, vi) in v.iter_mut().enumerate() {
                *vi = Complex::new(a.comps[ci][pt], T::zero());
            }
            for &(pp, qq) in types.iter().filter(|t| **t != (p, q)) {
                // v <- (D - i λ') v / (i λ - i λ')
                let l2 = lam(pp, qq);
                w.iter_mut().for_each(|x| *x = Complex::new(T::zero(), T::zero()));
                for &(r, col, s, i, sg) in &pattern {
                    w[r] = w[r] + v[col] * (j[s * d + i] * T::lit(sg as f64));
                }
                let denom = Complex::new(T::zero(), target - l2);
                for ci in 0..c {
                    v[ci] = (w[ci] - v[ci] * Complex::new(T::zero(), l2)) / denom;
                }
            }
            for ci in 0..c {
                out[ci][pt] = v[ci];
            }
        }
        ComplexForm { grid: self.grid, degree: k, comps: out }
    }

    /// `Σ_{p,q} i^{p-q} Π^{p,q} α`; real for real input.
    pub fn mathcal_j(&self, a: &FormField<T>) -> FormField<T> {
        let mut acc = ComplexForm::zeros(self.grid, a.degree);
        for (p, q) in self.bidegrees(a.degree) {
            let part = self.project_pq(a, p, q);
            let e = (p as i64 - q as i64).rem_euclid(4);
            let f = match e {
                0 => Complex::new(T::one(), T::zero()),
                1 => Complex::new(T::zero(), T::one()),
                2 => Complex::new(-T::one(), T::zero()),
                _ => Complex::new(T::zero(), -T::one()),
            };
            acc.axpy(f, &part);
        }
        acc.re()
    }

    /// Max pointwise Frobenius norm of the Nijenhuis tensor.
    pub fn nijenhuis_max_norm(&self) -> T {
        let d = self.dim();
        let len = self.grid.len();
        // dj[(i * d + r) * d + c] = ∂_i J_rc
        let mut dj: Vec<Vec<T>> = vec![Vec::new(); d * d * d];
        for r in 0..d {
            for c in 0..d {
                let e = ScalarField { grid: self.grid, data: self.j.entry(r, c) };
                for (i, gi) in e.gradient().into_iter().enumerate() {
                    dj[(i * d + r) * d + c] = gi.data;
                }
            }
        }
        let mut worst = T::zero();
        for p in 0..len {
            let jm = self.j.at(p);
            let dd = |i: usize, r: usize, c: usize| dj[(i * d + r) * d + c][p];
            let mut s = T::zero();
            for a in 0..d {
                for b in 0..d {
                    for jj in 0..d {
                        let mut v = T::zero();
                        for i in 0..d {
                            v = v + jm[i * d + a] * dd(i, jj, b) - jm[i * d + b] * dd(i, jj, a);
                        }
                        for l in 0..d {
                            v = v + jm[jj * d + l] * (dd(b, l, a) - dd(a, l, b));
                        }
                        s = s + v * v;
                    }
                }
            }
            worst = worst.max(s.sqrt());
        }
        worst
    }
}

/// Complex-valued form, used for (p,q) components.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexForm<T: Real> {
    pub grid: GridSpec,
    pub degree: usize,
    pub comps: Vec<Vec<Complex<T>>>,
}

impl<T: Real> ComplexForm<T> {
    pub fn zeros(grid: GridSpec, degree: usize) -> Self {
        let c = Basis::new(grid.dim(), degree).len();
        Self { grid, degree, comps: vec![vec![Complex::new(T::zero(), T::zero()); grid.len()]; c] }
    }

    pub fn axpy(&mut self, a: Complex<T>, x: &Self) {
        for (y, v) in self.comps.iter_mut().zip(&x.comps) {
            for (yi, vi) in y.iter_mut().zip(v) {
                *yi = *yi + a * *vi;
            }
        }
    }

    pub fn re(&self) -> FormField<T> {
        FormField { grid: self.grid, degree: self.degree, comps: self.comps.iter().map(|v| v.iter().map(|c| c.re).collect()).collect() }
    }

    pub fn im(&self) -> FormField<T> {
        FormField { grid: self.grid, degree: self.degree, comps: self.comps.iter().map(|v| v.iter().map(|c| c.im).collect()).collect() }
    }

    pub fn conj(&self) -> Self {
        Self { grid: self.grid, degree: self.degree, comps: self.comps.iter().map(|v| v.iter().map(|c| c.conj()).collect()).collect() }
    }

    pub fn max_abs(&self) -> T {
        self.comps.iter().flatten().fold(T::zero(), |m, c| m.max(c.norm()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::wedge;
    use crate::sampler::random_form;

    fn structure(m: usize, eps: f64) -> AlmostHermitianStructure<f64> {
        let grid = GridSpec::new(m, 8).unwrap();
        build_structure(grid, StructureRecipe { epsilon: eps, ..Default::default() }).unwrap()
    }

    #[test]
    fn flat_structure_is_standard() {
        let st = structure(2, 0.0);
        let r = st.residuals();
        assert_eq!(r.j_squared, 0.0);
        assert!((r.tamedness_margin - 1.0).abs() < 1e-14);
        // J dx_1 = dx_2 in one-based axes
        let mut a = FormField::zeros(st.grid, 1);
        a.comps[0] = vec![1.0; st.grid.len()];
        let ja = st.act_j(&a);
        assert!(ja.comps[1].iter().all(|v| (*v - 1.0).abs() < 1e-15));
        assert!(ja.comps[0].iter().all(|v| v.abs() < 1e-15));
        assert!(st.nijenhuis_max_norm() < 1e-13);
    }

    #[test]
    fn perturbed_structure_residuals() {
        let st = structure(2, 0.1);
        let r = st.residuals();
        assert!(r.j_squared < 1e-12 && r.compatibility < 1e-12 && r.g_symmetry < 1e-12, "{r:?}");
        assert!(r.j_orthogonal < 1e-12 && r.det_g < 1e-12, "{r:?}");
        assert!(r.tamedness_margin > 0.5);
        assert!(st.nijenhuis_max_norm() > 1e-3);
    }

    #[test]
    fn constant_structure_is_integrable() {
        let grid = GridSpec::new(2, 8).unwrap();
        let st = build_structure::<f64>(grid, StructureRecipe { epsilon: 0.3, band_limit: 0, modes: 1, seed: 3 }).unwrap();
        assert!(st.residuals().j_squared < 1e-12);
        assert!(st.nijenhuis_max_norm() < 1e-12);
    }

    #[test]
    fn untamed_is_rejected() {
        let grid = GridSpec::new(2, 8).unwrap();
        let r = build_structure::<f64>(grid, StructureRecipe { epsilon: 40.0, ..Default::default() });
        assert!(matches!(r, Err(Error::NotTamed { .. })));
        let r = build_structure::<f64>(grid, StructureRecipe { epsilon: -1.0, ..Default::default() });
        assert!(r.is_err());
    }

    #[test]
    fn j_action_algebra() {
        let st = structure(2, 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in 0..=4 {
            let a = random_form::<f64, _>(st.grid, k, 1, &mut rng);
            let jja = st.act_j(&st.act_j(&a));
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            assert!(jja.sub(&a.scale(sign)).max_abs() < 1e-12 * a.max_abs().max(1.0));
        }
        let a = random_form::<f64, _>(st.grid, 1, 1, &mut rng);
        let b = random_form::<f64, _>(st.grid, 2, 1, &mut rng);
        let lhs = st.act_j(&wedge(&a, &b, false));
        let rhs = wedge(&st.act_j(&a), &st.act_j(&b), false);
        assert!(lhs.sub(&rhs).max_abs() < 1e-12);
        // ω is J-invariant
        assert!(st.act_j(&st.omega).sub(&st.omega).max_abs() < 1e-12);
    }

    #[test]
    fn pm_projections() {
        let st = structure(2, 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let a = random_form::<f64, _>(st.grid, 2, 1, &mut rng);
        let (p, mm) = st.project_pm(&a);
        assert!(p.add(&mm).sub(&a).max_abs() < 1e-13);
        assert!(st.minus_part(&mm).sub(&mm).max_abs() < 1e-12);
        assert!(st.plus_part(&mm).max_abs() < 1e-12);
    }

    #[test]
    fn pq_projections_partition_and_conjugate() {
        for m in [2usize, 3] {
            let st = structure(m, 0.1);
            let mut rng = ChaCha8Rng::seed_from_u64(13);
            for k in [1usize, 2, 3] {
                let a = random_form::<f64, _>(st.grid, k, 1, &mut rng);
                let mut sum = ComplexForm::zeros(st.grid, k);
                for (p, q) in st.bidegrees(k) {
                    let part = st.project_pq(&a, p, q);
                    let other = st.project_pq(&a, q, p);
                    assert!(part.conj().re().sub(&other.re()).max_abs() < 1e-11);
                    assert!(part.conj().im().sub(&other.im()).max_abs() < 1e-11);
                    // idempotent
                    let again_re = st.project_pq(&part.re(), p, q);
                    let again_im = st.project_pq(&part.im(), p, q);
                    let mut again = again_re.clone();
                    again.axpy(Complex::new(0.0, 1.0), &again_im);
                    assert!(again.re().sub(&part.re()).max_abs() < 1e-10);
                    sum.axpy(Complex::new(1.0, 0.0), &part);
                }
                assert!(sum.re().sub(&a).max_abs() < 1e-11 && sum.im().max_abs() < 1e-11);
            }
        }
    }

    #[test]
    fn mathcal_j_against_j_action() {
        let st = structure(2, 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        // on 2-forms they agree, on 1-forms they differ by sign
        let a2 = random_form::<f64, _>(st.grid, 2, 1, &mut rng);
        assert!(st.mathcal_j(&a2).sub(&st.act_j(&a2)).max_abs() < 1e-11);
        let a1 = random_form::<f64, _>(st.grid, 1, 1, &mut rng);
        assert!(st.mathcal_j(&a1).add(&st.act_j(&a1)).max_abs() < 1e-11);
        // (1,0)-forms are the -i eigenspace of the J action
        let p10 = st.project_pq(&a1, 1, 0);
        let (re, im) = (p10.re(), p10.im());
        // J(re + i im) = -i (re + i im) => J re = im, J im = -re
        assert!(st.act_j(&re).sub(&im).max_abs() < 1e-11);
        for k in 0..=4 {
            let a = random_form::<f64, _>(st.grid, k, 1, &mut rng);
            let jj = st.mathcal_j(&st.mathcal_j(&a));
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            assert!(jj.sub(&a.scale(sign)).max_abs() < 1e-10);
        }
    }
}
