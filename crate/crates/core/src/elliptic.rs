//! Krylov solvers: the anti-invariant potential σ(f), the twisted potential φ₀ and the
//! 1-form `a = d*σ(φ₀)`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior::{congruence2, exterior_derivative, map_fields, pairs_of, wedge, FormField};
use crate::grid::derivative_wavenumber;
use crate::multi_index::{wedge_sign, Basis};
use crate::grid::GridSpec;
use crate::scalar::Real;
use crate::spectral::{forward_batch, inverse_batch, k2_derivative_table, ScalarField};
use crate::structure::{standard_omega_matrix, AlmostHermitianStructure};
use crate::symplectic::{dual_lefschetz_d, dual_lefschetz_terms, lefschetz, partial_minus};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Relative residual target.
    pub tol: f64,
    pub max_iter: usize,
    /// 3/2-rule products in wedge-based integrands.
    pub dealias: bool,
    /// Flat-Laplacian preconditioning for the σ solve.
    pub precondition: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 10_000, dealias: true, precondition: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    /// Final residual relative to the right-hand side.
    pub relative_residual: f64,
    pub converged: bool,
}

/// Weight of `|ξ|²` added on the flat kernel of the σ operator.
const KERNEL_LIFT: f64 = 0.01;
/// Constant shift of the σ preconditioner.
const FLAT_SHIFT: f64 = 0.125;

/// Vector operations used by [`pcg`].
trait Krylov<T>: Clone {
    fn zeros_like(&self) -> Self;
    fn axpy(&mut self, a: T, x: &Self);
}

impl<T: Real> Krylov<T> for FormField<T> {
    fn zeros_like(&self) -> Self {
        FormField::zeros(self.grid, self.degree)
    }
    fn axpy(&mut self, a: T, x: &Self) {
        FormField::axpy(self, a, x)
    }
}

/// Coefficients in the orthonormal frame of Ω⁻.
#[derive(Debug, Clone)]
struct Coords<T>(Vec<Vec<T>>);

impl<T: Real> Krylov<T> for Coords<T> {
    fn zeros_like(&self) -> Self {
        Coords(self.0.iter().map(|v| vec![T::zero(); v.len()]).collect())
    }
    fn axpy(&mut self, a: T, x: &Self) {
        for (u, v) in self.0.iter_mut().zip(&x.0) {
            for (p, q) in u.iter_mut().zip(v) {
                *p = *p + a * *q;
            }
        }
    }
}

/// Preconditioned CG for an operator self-adjoint in `inner`.
/// Stops at `‖r‖ <= tol·‖b‖` or `‖r‖ <= floor`.
fn pcg<T: Real, V: Krylov<T>>(
    b: &V,
    apply: impl Fn(&V) -> V,
    precond: impl Fn(&V) -> V,
    inner: impl Fn(&V, &V) -> T,
    tol: T,
    floor: T,
    max_iter: usize,
) -> (V, SolveStats, Vec<f64>) {
    let mut x = b.zeros_like();
    let mut history = Vec::new();
    let bnorm = inner(b, b).max(T::zero()).sqrt();
    let target = (tol * bnorm).max(floor);
    let stats = |it: usize, r: T, ok: bool| SolveStats {
        iterations: it,
        relative_residual: if bnorm > T::zero() { (r / bnorm).to_f64().unwrap() } else { 0.0 },
        converged: ok,
    };
    if bnorm <= target {
        return (x, stats(0, bnorm, true), history);
    }
    let mut r = b.clone();
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = inner(&r, &z);
    let mut rnorm = bnorm;
    for it in 1..=max_iter {
        let ap = apply(&p);
        let pap = inner(&p, &ap);
        if pap <= T::zero() {
            return (x, stats(it, rnorm, false), history);
        }
        let alpha = rz / pap;
        x.axpy(alpha, &p);
        r.axpy(-alpha, &ap);
        rnorm = inner(&r, &r).max(T::zero()).sqrt();
        history.push((rnorm / bnorm).to_f64().unwrap());
        if rnorm <= target {
            return (x, stats(it, rnorm, true), history);
        }
        z = precond(&r);
        let rz_new = inner(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        let mut np = z.clone();
        np.axpy(beta, &p);
        p = np;
    }
    (x, stats(max_iter, rnorm, false), history)
}

/// Orthonormal basis of the anti-invariant 2-forms of the standard structure,
/// as component vectors.
fn standard_anti_basis(m: usize) -> Vec<Vec<f64>> {
    let d = 2 * m;
    let basis = Basis::new(d, 2);
    let pairs = pairs_of(&basis);
    // J₀ = -Ω, so J₀ᵀ = Ω
    let j0t = standard_omega_matrix::<f64>(m);
    let mut out: Vec<Vec<f64>> = Vec::new();
    for c in 0..basis.len() {
        let mut e = vec![0.0; basis.len()];
        e[c] = 1.0;
        let mut je = vec![0.0; basis.len()];
        congruence2(&j0t, d, &pairs, &e, &mut je);
        let mut v: Vec<f64> = e.iter().zip(&je).map(|(x, y)| 0.5 * (x - y)).collect();
        for u in &out {
            let dot: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(x, y)| *x -= dot * y);
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-8 {
            out.push(v.iter().map(|x| x / n).collect());
        }
    }
    out
}

/// Componentwise `(shift - Δ)^{-1}` with the flat Laplacian of the spectral derivative
/// (Nyquist wavenumbers dropped); modes with zero denominator are zeroed.
fn flat_resolvent<T: Real>(a: &FormField<T>, shift: T) -> FormField<T> {
    let grid: GridSpec = a.grid;
    let refs: Vec<&[T]> = a.comps.iter().map(|v| v.as_slice()).collect();
    let mut specs = forward_batch(&grid, &refs);
    let k2 = k2_derivative_table(&grid);
    for s in specs.iter_mut() {
        for (c, k) in s.iter_mut().zip(k2.iter()) {
            let den = shift + T::lit(*k);
            *c = if den == T::zero() { Complex::new(T::zero(), T::zero()) } else { *c / den };
        }
    }
    FormField { grid, degree: a.degree, comps: inverse_batch(&grid, specs) }
}

/// `e_a ∧ v` on component vectors of `degree`-forms.
fn wedge_axis(dim: usize, a: usize, v: &[f64], degree: usize) -> Vec<f64> {
    let bi = Basis::new(dim, degree);
    let bo = Basis::new(dim, degree + 1);
    let mut out = vec![0.0; bo.len()];
    for (c, mk) in bi.masks.iter().enumerate() {
        let s = wedge_sign(1 << a, *mk);
        if s != 0 {
            out[bo.position(mk | (1 << a)).unwrap()] += s as f64 * v[c];
        }
    }
    out
}

/// Flat symbol of the σ operator in frame coordinates: `P₀(ξ) = Σ ξ_a ξ_b B_ab`,
/// stored as `B[(a·dim + b)·r² + i·r + j]`, `r = m(m-1)`.
fn flat_anti_symbol(m: usize) -> Vec<f64> {
    let dim = 2 * m;
    let frame = standard_anti_basis(m);
    let r = frame.len();
    let omega = standard_omega_matrix::<f64>(m);
    let lam = dual_lefschetz_terms(m, 3);
    let mut out = vec![0.0; dim * dim * r * r];
    for a in 0..dim {
        for b in 0..dim {
            for (j, e) in frame.iter().enumerate() {
                let w3 = wedge_axis(dim, b, e, 2);
                let mut l1 = vec![0.0; dim];
                for (o, i, sg) in &lam {
                    l1[*o] += sg * w3[*i];
                }
                // J acts on 1-forms by -Jᵀ = -Ω
                let j1: Vec<f64> = (0..dim).map(|i| -(0..dim).map(|q| omega[i * dim + q] * l1[q]).sum::<f64>()).collect();
                let w2 = wedge_axis(dim, a, &j1, 1);
                for (i, f) in frame.iter().enumerate() {
                    let v: f64 = f.iter().zip(&w2).map(|(x, y)| x * y).sum();
                    out[(a * dim + b) * r * r + i * r + j] += 0.5 * v;
                    out[(b * dim + a) * r * r + i * r + j] += 0.5 * v;
                }
            }
        }
    }
    out
}

/// Solve `M y = x` in place for symmetric positive definite `M` of size `r`.
fn spd_solve(mat: &mut [f64], r: usize, x: &mut [Complex<f64>]) {
    for j in 0..r {
        let mut d = mat[j * r + j];
        for k in 0..j {
            d -= mat[j * r + k] * mat[j * r + k];
        }
        let d = d.max(f64::MIN_POSITIVE).sqrt();
        mat[j * r + j] = d;
        for i in j + 1..r {
            let mut v = mat[i * r + j];
            for k in 0..j {
                v -= mat[i * r + k] * mat[j * r + k];
            }
            mat[i * r + j] = v / d;
        }
    }
    for i in 0..r {
        let mut v = x[i];
        for k in 0..i {
            v -= x[k] * mat[i * r + k];
        }
        x[i] = v / mat[i * r + i];
    }
    for i in (0..r).rev() {
        let mut v = x[i];
        for k in i + 1..r {
            v -= x[k] * mat[k * r + i];
        }
        x[i] = v / mat[i * r + i];
    }
}

impl<T: Real> AlmostHermitianStructure<T> {
    /// `P ψ = P⁻ d d* ψ` on anti-invariant 2-forms.
    pub fn anti_operator_apply(&self, psi: &FormField<T>) -> FormField<T> {
        self.minus_part(&exterior_derivative(&self.anti_codifferential(psi)))
    }

    /// `d* ψ = -J Λ dψ`, valid for anti-invariant 2-forms ψ.
    pub fn anti_codifferential(&self, psi: &FormField<T>) -> FormField<T> {
        self.act_j(&dual_lefschetz_d(psi)).scale(-T::one())
    }

    /// `d⁻ J d f`, the data of the σ equation.
    pub fn anti_data(&self, f: &ScalarField<T>) -> FormField<T> {
        self.minus_part(&self.d_j_d(f))
    }

    /// `d J d f`.
    pub fn d_j_d(&self, f: &ScalarField<T>) -> FormField<T> {
        exterior_derivative(&self.act_j(&exterior_derivative(&FormField::from_scalar(f))))
    }

    /// Frame coefficients `c_i = ⟨α, E_i⟩_g` of a 2-form; the J-invariant part drops out.
    fn anti_coords(&self, a: &FormField<T>) -> Coords<T> {
        let d = self.dim();
        let basis = a.basis();
        let pairs = pairs_of(&basis);
        let frame: Vec<Vec<T>> = standard_anti_basis(self.grid.m).iter().map(|v| v.iter().map(|x| T::lit(*x)).collect()).collect();
        let refs: Vec<&[T]> = a.comps.iter().map(|v| v.as_slice()).collect();
        let nb = basis.len();
        Coords(map_fields(self.grid.len(), &refs, frame.len(), |p, inp, out| {
            let mut y = [T::zero(); 28];
            congruence2(self.s_t.at(p), d, &pairs, inp, &mut y[..nb]);
            for (o, e) in out.iter_mut().zip(&frame) {
                *o = e.iter().zip(&y[..nb]).fold(T::zero(), |s, (u, v)| s + *u * *v);
            }
        }))
    }

    /// `Σ c_i E_i` with `E_i = Λ²(S⁻ᵀ) ê_i` g-orthonormal in Ω⁻.
    fn from_anti_coords(&self, c: &Coords<T>) -> FormField<T> {
        let d = self.dim();
        let basis = Basis::new(d, 2);
        let pairs = pairs_of(&basis);
        let frame: Vec<Vec<T>> = standard_anti_basis(self.grid.m).iter().map(|v| v.iter().map(|x| T::lit(*x)).collect()).collect();
        let refs: Vec<&[T]> = c.0.iter().map(|v| v.as_slice()).collect();
        let nb = basis.len();
        let comps = map_fields(self.grid.len(), &refs, nb, |p, inp, out| {
            let mut y = [T::zero(); 28];
            for (ci, e) in inp.iter().zip(&frame) {
                for (yy, ee) in y[..nb].iter_mut().zip(e) {
                    *yy = *yy + *ci * *ee;
                }
            }
            congruence2(self.s_inv_t.at(p), d, &pairs, &y[..nb], out);
        });
        FormField { grid: self.grid, degree: 2, comps }
    }

    fn coords_inner(&self, x: &Coords<T>, y: &Coords<T>) -> T {
        let mut s = T::zero();
        for (u, v) in x.0.iter().zip(&y.0) {
            for ((a, b), w) in u.iter().zip(v).zip(&self.sqrt_det_g) {
                s = s + *a * *b * *w;
            }
        }
        s / T::lit(self.grid.len() as f64) * self.grid.torus_volume::<T>()
    }

    /// `(P₀(ξ) + δ|ξ|² + s₀)^{-1}` mode by mode on frame coefficients, divided by √det g.
    /// The `δ` term lifts the flat kernel of P, which the perturbation turns into small eigenvalues.
    fn coords_preconditioner(&self, r: &Coords<T>) -> Coords<T> {
        let grid = self.grid;
        let dim = grid.dim();
        let nm = r.0.len();
        let sym = flat_anti_symbol(grid.m);
        let delta = KERNEL_LIFT;
        let refs: Vec<&[T]> = r.0.iter().map(|v| v.as_slice()).collect();
        let mut specs = forward_batch(&grid, &refs);
        let wave: Vec<Vec<f64>> = (0..grid.n).map(|j| vec![derivative_wavenumber(j, grid.n) as f64]).collect();
        let len = grid.len();
        let mut mat = vec![0.0; nm * nm];
        let mut x = vec![Complex::new(0.0, 0.0); nm];
        for p in 0..len {
            let xi: Vec<f64> = (0..dim).map(|a| wave[grid.axis_index(p, a)][0]).collect();
            let k2: f64 = xi.iter().map(|v| v * v).sum();
            mat.iter_mut().for_each(|v| *v = 0.0);
            for a in 0..dim {
                for b in 0..dim {
                    let w = xi[a] * xi[b];
                    if w != 0.0 {
                        let blk = &sym[(a * dim + b) * nm * nm..(a * dim + b + 1) * nm * nm];
                        mat.iter_mut().zip(blk).for_each(|(u, v)| *u += w * v);
                    }
                }
            }
            for i in 0..nm {
                mat[i * nm + i] += delta * k2 + FLAT_SHIFT;
                let c = specs[i][p];
                x[i] = Complex::new(c.re.to_f64().unwrap(), c.im.to_f64().unwrap());
            }
            spd_solve(&mut mat, nm, &mut x);
            for i in 0..nm {
                specs[i][p] = Complex::new(T::lit(x[i].re), T::lit(x[i].im));
            }
        }
        let mut z = inverse_batch(&grid, specs);
        for c in z.iter_mut() {
            for (v, s) in c.iter_mut().zip(&self.sqrt_det_g) {
                *v = *v / *s;
            }
        }
        Coords(z)
    }

    /// Solve `P σ = -d⁻ J d f` for σ ∈ Ω⁻ with f centred. Returns σ and solver stats.
    /// Without preconditioning the iterate stays in the range of P (minimal norm);
    /// with it, σ is fixed up to the kernel of P, which d and d* annihilate.
    pub fn solve_sigma(&self, f: &ScalarField<T>, cfg: &SolverConfig) -> Result<(FormField<T>, SolveStats)> {
        let data = self.d_j_d(&f.centered());
        let b = self.minus_part(&data).scale(-T::one());
        let scale = self.l2_norm(&data);
        self.solve_anti(&b, scale, cfg)
    }

    /// Solve `P ψ = b` for anti-invariant `b` orthogonal to the kernel of P.
    /// `scale` sets the absolute residual floor `1e-3·tol·scale`.
    pub fn solve_anti(&self, b: &FormField<T>, scale: T, cfg: &SolverConfig) -> Result<(FormField<T>, SolveStats)> {
        let floor = T::lit(1e-3 * cfg.tol) * scale + T::min_positive_value();
        let bc = self.anti_coords(b);
        let apply = |c: &Coords<T>| self.anti_coords(&exterior_derivative(&self.anti_codifferential(&self.from_anti_coords(c))));
        let inner = |x: &Coords<T>, y: &Coords<T>| self.coords_inner(x, y);
        let (x, stats, history) = if cfg.precondition {
            pcg(&bc, apply, |r| self.coords_preconditioner(r), inner, T::lit(cfg.tol), floor, cfg.max_iter)
        } else {
            pcg(&bc, apply, |r| r.clone(), inner, T::lit(cfg.tol), floor, cfg.max_iter)
        };
        if !stats.converged {
            return Err(Error::NotConverged { iterations: stats.iterations, residual: stats.relative_residual, history });
        }
        Ok((self.from_anti_coords(&x), stats))
    }

    /// `-(1/m) Δ_g φ₀ = ω^{m-1} ∧ 𝒟⁺φ / ω^m` with `Δ_g = d*d`, mean-zero φ₀.
    pub fn solve_phi0(&self, dplus: &FormField<T>, cfg: &SolverConfig) -> Result<(ScalarField<T>, SolveStats)> {
        let m = self.grid.m;
        let rho = trace_against_omega(dplus);
        let rhs = rho.scale(-T::lit(m as f64)).centered();
        let b = FormField::from_scalar(&rhs);
        let sd = &self.sqrt_det_g;
        let inner = |x: &FormField<T>, y: &FormField<T>| {
            let s: T = x.comps[0].iter().zip(&y.comps[0]).zip(sd).map(|((u, v), w)| *u * *v * *w).sum();
            s / T::lit(x.grid.len() as f64) * x.grid.torus_volume::<T>()
        };
        let apply = |u: &FormField<T>| FormField::from_scalar(&self.laplacian_positive(&u.scalar_part()));
        let precond = |r: &FormField<T>| {
            let mut z = flat_resolvent(r, T::zero());
            for (v, w) in z.comps[0].iter_mut().zip(sd) {
                *v = *v / *w;
            }
            FormField::from_scalar(&z.scalar_part().centered())
        };
        let scale = inner(&b, &b).sqrt();
        let floor = T::lit(1e-3 * cfg.tol) * scale + T::min_positive_value();
        let (phi0, stats, history) = pcg(&b, apply, precond, inner, T::lit(cfg.tol), floor, cfg.max_iter);
        if !stats.converged {
            return Err(Error::NotConverged { iterations: stats.iterations, residual: stats.relative_residual, history });
        }
        Ok((phi0.scalar_part().centered(), stats))
    }

    /// `a = d* σ(φ₀)` and the residuals of the system it is meant to satisfy.
    pub fn solve_a(&self, dplus: &FormField<T>, phi0: &ScalarField<T>, cfg: &SolverConfig) -> Result<AResult<T>> {
        let (sigma0, stats) = self.solve_sigma(phi0, cfg)?;
        let a = self.codifferential(&sigma0);
        let jdphi0 = self.act_j(&exterior_derivative(&FormField::from_scalar(phi0)));
        let da = exterior_derivative(&a);
        let data_norm = self.l2_norm(&exterior_derivative(&jdphi0)).max(T::min_positive_value());
        let rel = |x: T| (x / data_norm).to_f64().unwrap();
        let minus_eq = self.minus_part(&da).add(&self.minus_part(&exterior_derivative(&jdphi0)));
        let trace = trace_against_omega(&da);
        let system = dplus.sub(&exterior_derivative(&jdphi0)).sub(&da);
        let pm_a = partial_minus(&a);
        let residuals = AResiduals {
            codifferential: rel(self.l2_norm(&self.codifferential(&a))),
            minus_equation: rel(self.l2_norm(&minus_eq)),
            trace_equation: rel(self.l2_norm(&FormField::from_scalar(&trace))),
            partial_minus: rel(self.l2_norm(&pm_a)),
            first_equation: rel(self.l2_norm(&system)),
        };
        Ok(AResult { a, sigma_phi0: sigma0, stats, residuals })
    }
}

/// `ω^{m-1} ∧ β / ω^m` for a 2-form β, as a function.
pub fn trace_against_omega<T: Real>(beta: &FormField<T>) -> ScalarField<T> {
    let m = beta.grid.m;
    let top = wedge(&power_of_omega(beta.grid, m - 1), beta, false).scalar_part();
    top.scale(T::one() / T::lit(crate::multi_index::factorial(m)))
}

/// `ω^k` (not divided by k!).
pub fn power_of_omega<T: Real>(grid: GridSpec, k: usize) -> FormField<T> {
    let mut x = FormField::from_scalar(&ScalarField::constant(grid, T::one()));
    for _ in 0..k {
        x = lefschetz(&x);
    }
    x
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AResiduals {
    /// `‖d* a‖`
    pub codifferential: f64,
    /// `‖d⁻a + d⁻ J dφ₀‖`
    pub minus_equation: f64,
    /// `‖ω^{m-1} ∧ da / ω^m‖`
    pub trace_equation: f64,
    /// `‖∂₋ a‖`
    pub partial_minus: f64,
    /// `‖𝒟⁺φ - dJdφ₀ - da‖`
    pub first_equation: f64,
}

#[derive(Debug, Clone)]
pub struct AResult<T: Real> {
    pub a: FormField<T>,
    pub sigma_phi0: FormField<T>,
    pub stats: SolveStats,
    /// All relative to `‖d J dφ₀‖`.
    pub residuals: AResiduals,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::TrigPolynomial;
    use crate::structure::{build_structure, StructureRecipe};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn structure(eps: f64) -> AlmostHermitianStructure<f64> {
        build_structure(GridSpec::new(2, 8).unwrap(), StructureRecipe { epsilon: eps, ..Default::default() }).unwrap()
    }

    fn potential(st: &AlmostHermitianStructure<f64>, seed: u64) -> ScalarField<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        TrigPolynomial::random(st.dim(), 1, true, &mut rng).sample(st.grid)
    }

    fn cfg() -> SolverConfig {
        SolverConfig { tol: 1e-11, dealias: false, ..Default::default() }
    }

    #[test]
    fn trace_of_omega_is_one() {
        let grid = GridSpec::new(3, 8).unwrap();
        let t = trace_against_omega(&power_of_omega::<f64>(grid, 1));
        assert!(t.data.iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn sigma_vanishes_on_flat_structure() {
        let st = structure(0.0);
        let (sigma, _) = st.solve_sigma(&potential(&st, 1), &cfg()).unwrap();
        assert!(sigma.max_abs() < 1e-12);
    }

    #[test]
    fn sigma_satisfies_its_equation() {
        let st = structure(0.1);
        let f = potential(&st, 2);
        let (sigma, stats) = st.solve_sigma(&f, &cfg()).unwrap();
        assert!(stats.converged);
        assert!(st.minus_part(&sigma).sub(&sigma).max_abs() < 1e-12);
        let lhs = st.minus_part(&exterior_derivative(&st.anti_codifferential(&sigma)));
        let rhs = st.minus_part(&st.d_j_d(&f)).scale(-1.0);
        assert!(st.l2_norm(&lhs.sub(&rhs)) <= 1e-9 * st.l2_norm(&st.d_j_d(&f)));
    }

    #[test]
    fn unpreconditioned_solve_agrees_after_d() {
        let st = structure(0.05);
        let f = potential(&st, 3);
        let (a, _) = st.solve_sigma(&f, &cfg()).unwrap();
        let (b, _) = st.solve_sigma(&f, &SolverConfig { precondition: false, ..cfg() }).unwrap();
        let da = exterior_derivative(&st.anti_codifferential(&a));
        let db = exterior_derivative(&st.anti_codifferential(&b));
        assert!(da.sub(&db).max_abs() < 1e-8 * da.max_abs().max(1e-300));
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let st = structure(0.1);
        let r = st.solve_sigma(&potential(&st, 4), &SolverConfig { max_iter: 1, ..cfg() });
        assert!(matches!(r, Err(Error::NotConverged { iterations: 1, .. })));
    }

    #[test]
    fn phi0_recovers_potential_when_integrable() {
        let st = structure(0.0);
        let f = potential(&st, 5);
        let (phi0, _) = st.solve_phi0(&st.d_j_d(&f), &cfg()).unwrap();
        let mut diff = phi0.clone();
        diff.axpy(-1.0, &f.centered());
        assert!(diff.max_abs() < 1e-9 * f.max_abs());
    }
}
