//! `𝒟⁺_J`, almost-Kähler potentials and the energy functionals of a potential.
//!
//! A potential φ is carried by a [`PotentialState`]: σ(φ), the forms derived from it and the
//! powers of `ω₁ = ω + 𝒟⁺_J φ`. Every functional is assembled from top-degree integrals over
//! these pieces. Wedge exponents are chosen so that each integrand has top degree.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elliptic::{power_of_omega, SolveStats, SolverConfig};
use crate::error::{Error, Result};
use crate::exterior::{exterior_derivative, wedge, FormField};
use crate::linalg::{generalized_min_eigenvalue, matmul, symmetric_eigenvalues};
use crate::multi_index::{factorial, indices_of, Basis};
use crate::sampler::TrigPolynomial;
use crate::scalar::Real;
use crate::spectral::ScalarField;
use crate::structure::AlmostHermitianStructure;
use crate::symplectic::partial_minus;

/// `V = ∫ ω^m = m! (2π)^{2m}`.
pub fn total_volume(m: usize) -> f64 {
    factorial(m) * (2.0 * std::f64::consts::PI).powi(2 * m as i32)
}

/// σ(f) and the forms built from it. Every field is linear in `f`.
#[derive(Debug, Clone)]
pub struct SigmaData<T: Real> {
    pub f: ScalarField<T>,
    pub sigma: FormField<T>,
    /// `d J d f`
    pub djd: FormField<T>,
    /// `d d* σ(f)`
    pub ddsigma: FormField<T>,
    /// `∂₋ σ(f)`
    pub partial_sigma: FormField<T>,
    /// `J ∂₋ σ(f)`
    pub j_partial_sigma: FormField<T>,
    pub stats: SolveStats,
}

impl<T: Real> SigmaData<T> {
    /// `𝒟⁺_J f = dJdf + dd*σ(f)`.
    pub fn djplus(&self) -> FormField<T> {
        self.djd.add(&self.ddsigma)
    }

    /// `a·x + b·y`, using linearity of σ.
    pub fn combine(a: T, x: &Self, b: T, y: &Self) -> Self {
        let lin = |u: &FormField<T>, v: &FormField<T>| {
            let mut out = u.scale(a);
            out.axpy(b, v);
            out
        };
        let mut f = x.f.scale(a);
        f.axpy(b, &y.f);
        Self {
            f,
            sigma: lin(&x.sigma, &y.sigma),
            djd: lin(&x.djd, &y.djd),
            ddsigma: lin(&x.ddsigma, &y.ddsigma),
            partial_sigma: lin(&x.partial_sigma, &y.partial_sigma),
            j_partial_sigma: lin(&x.j_partial_sigma, &y.j_partial_sigma),
            stats: x.stats,
        }
    }

    pub fn scaled(&self, s: T) -> Self {
        Self::combine(s, self, T::zero(), self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialResiduals {
    /// `max |P⁻ 𝒟⁺φ| / max |dJdφ|`
    pub anti_invariant_part: f64,
    /// `max |d 𝒟⁺φ| / max |dJdφ|`
    pub closedness: f64,
    pub sigma_iterations: usize,
    pub sigma_relative_residual: f64,
}

/// `𝒟⁺_J φ`, `ω₁` and the positivity margin of `g₁(X, Y) = ω₁(X, J Y)`.
#[derive(Debug, Clone)]
pub struct PotentialSolveResult<T: Real> {
    pub phi: ScalarField<T>,
    pub sigma: FormField<T>,
    pub djplus: FormField<T>,
    pub omega1: FormField<T>,
    pub positivity_margin: f64,
    pub residuals: PotentialResiduals,
}

impl<T: Real> PotentialSolveResult<T> {
    pub fn is_admissible(&self) -> bool {
        self.positivity_margin > 0.0
    }
}

/// `𝒲_J f = d*(fω + σ(f))` and the residuals of `d𝒲 = 𝒟⁺f`, `d⁻𝒲 = 0`,
/// also for the variant `d*(σ(f) - fω)`.
#[derive(Debug, Clone)]
pub struct WjResult<T: Real> {
    pub w: FormField<T>,
    /// `‖d𝒲 - 𝒟⁺f‖ / ‖dJdf‖`
    pub exactness: f64,
    /// `‖P⁻ d𝒲‖ / ‖dJdf‖`
    pub anti_invariance: f64,
    pub flipped_exactness: f64,
    pub flipped_anti_invariance: f64,
}

fn two_form_matrix<T: Real>(masks: &[u32], comps: &[T], d: usize) -> Vec<T> {
    let mut w = vec![T::zero(); d * d];
    for (mask, c) in masks.iter().zip(comps) {
        let ix = indices_of(*mask);
        w[ix[0] * d + ix[1]] = *c;
        w[ix[1] * d + ix[0]] = -*c;
    }
    w
}

fn symmetric_part<T: Real>(q: &[T], d: usize) -> Vec<T> {
    (0..d * d).map(|i| (q[i] + q[(i % d) * d + i / d]) * T::lit(0.5)).collect()
}

fn point_comps<T: Real>(a: &FormField<T>, p: usize) -> Vec<T> {
    a.comps.iter().map(|c| c[p]).collect()
}

impl<T: Real> AlmostHermitianStructure<T> {
    /// σ(f) and its derived forms.
    pub fn sigma_data(&self, f: &ScalarField<T>, cfg: &SolverConfig) -> Result<SigmaData<T>> {
        let (sigma, stats) = self.solve_sigma(f, cfg)?;
        Ok(self.sigma_data_from(f, sigma, stats))
    }

    /// Derived forms for a given σ.
    pub fn sigma_data_from(&self, f: &ScalarField<T>, sigma: FormField<T>, stats: SolveStats) -> SigmaData<T> {
        let djd = self.d_j_d(f);
        let ddsigma = exterior_derivative(&self.anti_codifferential(&sigma));
        let partial_sigma = partial_minus(&sigma);
        let j_partial_sigma = self.act_j(&partial_sigma);
        SigmaData { f: f.clone(), sigma, djd, ddsigma, partial_sigma, j_partial_sigma, stats }
    }

    /// `min_x λ_min(sym(W₁ J))`, where `W₁` is the matrix of the 2-form `ω₁`.
    pub fn positivity_margin(&self, omega1: &FormField<T>) -> T {
        let d = self.dim();
        let masks = Basis::new(d, 2).masks;
        (0..self.grid.len())
            .into_par_iter()
            .map(|p| {
                let w = two_form_matrix(&masks, &point_comps(omega1, p), d);
                symmetric_eigenvalues(&symmetric_part(&matmul(&w, self.j.at(p), d), d), d)[0]
            })
            .reduce(T::infinity, |a, b| a.min(b))
    }

    /// Largest `s` with `positivity_margin(ω + s·dir) >= target`, from the pencil
    /// `sym(ΩJ) - target + s·sym(W J)` at each point. Infinite when no point limits it.
    pub fn critical_scale(&self, dir: &FormField<T>, target: T) -> T {
        let d = self.dim();
        let masks = Basis::new(d, 2).masks;
        (0..self.grid.len())
            .into_par_iter()
            .map(|p| {
                let j = self.j.at(p);
                let mut a = symmetric_part(&matmul(&self.omega_mat, j, d), d);
                for i in 0..d {
                    a[i * d + i] = a[i * d + i] - target;
                }
                let b = symmetric_part(&matmul(&two_form_matrix(&masks, &point_comps(dir, p), d), j, d), d);
                match generalized_min_eigenvalue(&a, &b, d) {
                    None => T::zero(),
                    Some(mu) if mu < T::zero() => -T::one() / mu,
                    Some(_) => T::infinity(),
                }
            })
            .reduce(T::infinity, |a, b| a.min(b))
    }

    /// Same threshold as [`Self::critical_scale`] located by bisection on `[0, hi]`.
    pub fn bisect_scale(&self, dir: &FormField<T>, target: T, hi: T, iterations: usize) -> T {
        let ok = |s: T| {
            let mut w = self.omega.clone();
            w.axpy(s, dir);
            self.positivity_margin(&w) >= target
        };
        let (mut lo, mut hi) = (T::zero(), hi);
        if ok(hi) {
            return hi;
        }
        for _ in 0..iterations {
            let mid = (lo + hi) * T::lit(0.5);
            if ok(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    fn solve_result(&self, data: &SigmaData<T>) -> PotentialSolveResult<T> {
        let djplus = data.djplus();
        let mut omega1 = self.omega.clone();
        omega1.axpy(T::one(), &djplus);
        let norm = data.djd.max_abs().max(T::min_positive_value());
        let rel = |x: T| (x / norm).to_f64().unwrap();
        let residuals = PotentialResiduals {
            anti_invariant_part: rel(self.minus_part(&djplus).max_abs()),
            closedness: rel(exterior_derivative(&djplus).max_abs()),
            sigma_iterations: data.stats.iterations,
            sigma_relative_residual: data.stats.relative_residual,
        };
        PotentialSolveResult {
            phi: data.f.clone(),
            sigma: data.sigma.clone(),
            positivity_margin: self.positivity_margin(&omega1).to_f64().unwrap(),
            djplus,
            omega1,
            residuals,
        }
    }

    /// `𝒟⁺_J f = dJdf + dd*σ(f)` with diagnostics.
    pub fn d_j_plus(&self, f: &ScalarField<T>, cfg: &SolverConfig) -> Result<PotentialSolveResult<T>> {
        Ok(self.solve_result(&self.sigma_data(f, cfg)?))
    }

    /// Membership in the potential space and the positivity margin.
    pub fn is_kahler_potential(&self, phi: &ScalarField<T>, cfg: &SolverConfig) -> Result<(bool, f64)> {
        let r = self.d_j_plus(phi, cfg)?;
        Ok((r.is_admissible(), r.positivity_margin))
    }

    /// `𝒲_J f = d*(fω + σ(f))` in real dimension four.
    pub fn w_j(&self, f: &ScalarField<T>, cfg: &SolverConfig) -> Result<WjResult<T>> {
        if self.grid.m != 2 {
            return Err(Error::Unsupported(format!("W_J is defined for m = 2, got m = {}", self.grid.m)));
        }
        let fc = f.centered();
        let data = self.sigma_data(&fc, cfg)?;
        let f_omega = self.omega.mul_scalar(&fc, false);
        let dplus = data.djplus();
        let norm = self.l2_norm(&data.djd).max(T::min_positive_value());
        let measure = |w: &FormField<T>| {
            let dw = exterior_derivative(w);
            let ex = (self.l2_norm(&dw.sub(&dplus)) / norm).to_f64().unwrap();
            let anti = (self.l2_norm(&self.minus_part(&dw)) / norm).to_f64().unwrap();
            (ex, anti)
        };
        let w = self.codifferential(&f_omega.add(&data.sigma));
        let flipped = self.codifferential(&data.sigma.sub(&f_omega));
        let (exactness, anti_invariance) = measure(&w);
        let (flipped_exactness, flipped_anti_invariance) = measure(&flipped);
        Ok(WjResult { w, exactness, anti_invariance, flipped_exactness, flipped_anti_invariance })
    }

    /// Potential state for φ; fails when `ω + 𝒟⁺φ` is not positive.
    pub fn potential_state(&self, phi: &ScalarField<T>, cfg: &SolverConfig) -> Result<PotentialState<T>> {
        let data = self.sigma_data(phi, cfg)?;
        let state = PotentialState::new(self, data, cfg.dealias);
        state.require_admissible()?;
        Ok(state)
    }

    /// Hermitian Donaldson gauge functional `II`.
    pub fn donaldson_gauge(&self, phi: &ScalarField<T>, cfg: &SolverConfig) -> Result<f64> {
        Ok({ let s = self.potential_state(phi, cfg)?; s.terms_with(self) }.donaldson_gauge())
    }

    /// Twisted Donaldson gauge functional `II′`.
    pub fn twisted_donaldson(&self, phi: &ScalarField<T>, cfg: &SolverConfig) -> Result<f64> {
        Ok(self.potential_state(phi, cfg)?.twisted_donaldson())
    }

    /// Twisted Aubin functional `I′`.
    pub fn aubin_i(&self, phi: &ScalarField<T>, cfg: &SolverConfig) -> Result<f64> {
        Ok({ let s = self.potential_state(phi, cfg)?; s.terms_with(self) }.aubin_i())
    }

    /// Twisted Aubin functional `J′`.
    pub fn aubin_j(&self, phi: &ScalarField<T>, cfg: &SolverConfig) -> Result<f64> {
        Ok({ let s = self.potential_state(phi, cfg)?; s.terms_with(self) }.aubin_j())
    }

    /// Derivative `τ′_φ(f)` of `II′`.
    pub fn tau_prime(&self, phi: &ScalarField<T>, f: &ScalarField<T>, cfg: &SolverConfig) -> Result<f64> {
        let state = self.potential_state(phi, cfg)?;
        let dir = self.sigma_data(f, cfg)?;
        Ok(state.tau_prime(&dir).total())
    }
}

/// Per-k top-degree integrals from which every functional is assembled.
/// `P_k = ω₁^k ∧ ω^{m-1-k}`, `X = dJdφ`, `D = dd*σ(φ)`, `K = J∂₋σ(φ) ∧ ∂₋σ(φ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalTerms {
    pub m: usize,
    pub volume: f64,
    /// `∫ φ ω₁^k ∧ ω^{m-k}`, k = 0..=m.
    pub phi_mixed: Vec<f64>,
    /// `∫ φ X ∧ P_k`, k = 0..m.
    pub phi_djd: Vec<f64>,
    /// `-∫ dφ ∧ Jdφ ∧ P_k`, k = 0..m.
    pub gradient_form: Vec<f64>,
    /// `∫ φ D ∧ P_k`, k = 0..m.
    pub phi_ddsigma: Vec<f64>,
    /// `∫ K ∧ P_k`, k = 0..m.
    pub sigma_square: Vec<f64>,
}

impl FunctionalTerms {
    fn coef(&self, k: usize) -> f64 {
        (self.m - k) as f64 / (self.m + 1) as f64
    }

    fn sq(&self) -> f64 {
        ((self.m - 1) * (self.m - 1)) as f64
    }

    /// `II`, with both sums taken verbatim.
    pub fn donaldson_gauge(&self) -> f64 {
        let s: f64 = self.phi_mixed.iter().sum();
        (s - self.phi_ddsigma[0]) / ((self.m + 1) as f64 * self.volume)
    }

    /// `II` with the σ correction dropped (the integrable-case display).
    pub fn donaldson_gauge_kahler(&self) -> f64 {
        self.phi_mixed.iter().sum::<f64>() / ((self.m + 1) as f64 * self.volume)
    }

    /// `II′` summed termwise.
    pub fn twisted_donaldson(&self) -> f64 {
        let m = self.m;
        let a: f64 = (0..m).map(|k| self.coef(k) * self.phi_djd[k]).sum();
        let b: f64 = (0..m - 1).map(|k| self.coef(k) * self.sigma_square[k]).sum();
        (self.phi_mixed[0] + a + self.sq() * b) / self.volume
    }

    /// `II′` without the σ term.
    pub fn twisted_donaldson_kahler(&self) -> f64 {
        let a: f64 = (0..self.m).map(|k| self.coef(k) * self.phi_djd[k]).sum();
        (self.phi_mixed[0] + a) / self.volume
    }

    pub fn aubin_i(&self) -> f64 {
        let m = self.m;
        let a: f64 = self.phi_djd.iter().sum();
        let b: f64 = self.sigma_square[..m - 1].iter().sum();
        -(a + self.sq() * b) / self.volume
    }

    pub fn aubin_i_kahler(&self) -> f64 {
        -self.phi_djd.iter().sum::<f64>() / self.volume
    }

    pub fn aubin_j(&self) -> f64 {
        let m = self.m;
        let a: f64 = (0..m).map(|k| self.coef(k) * self.phi_djd[k]).sum();
        let b: f64 = (0..m - 1).map(|k| self.coef(k) * self.sigma_square[k]).sum();
        -(a + self.sq() * b) / self.volume
    }

    pub fn aubin_j_kahler(&self) -> f64 {
        -(0..self.m).map(|k| self.coef(k) * self.phi_djd[k]).sum::<f64>() / self.volume
    }

    /// `|J′ + II′ - (1/V)∫φω^m|`.
    pub fn sum_identity_residual(&self, twisted_donaldson: f64) -> f64 {
        (self.aubin_j() + twisted_donaldson - self.phi_mixed[0] / self.volume).abs()
    }

    /// `|I′ - J′ - II′ - RHS|` where the σ-square sum on the right runs to `upper` inclusive.
    fn difference_identity_residual(&self, twisted_donaldson: f64, upper: usize) -> f64 {
        let m = self.m;
        let lhs = self.aubin_i() - self.aubin_j() - twisted_donaldson;
        let d: f64 = self.phi_ddsigma.iter().sum();
        let b: f64 = self.sigma_square[..=upper].iter().sum();
        let rhs = (-self.phi_mixed[m] + d - self.sq() * b) / self.volume;
        (lhs - rhs).abs()
    }

    /// Difference identity with the σ-square sum over `k = 0..m-1`, as displayed.
    pub fn difference_identity_residual_displayed(&self, twisted_donaldson: f64) -> f64 {
        self.difference_identity_residual(twisted_donaldson, self.m - 1)
    }

    /// Difference identity with the σ-square sum over `k = 0..m-2`, matching the definitions.
    pub fn difference_identity_residual_matched(&self, twisted_donaldson: f64) -> f64 {
        self.difference_identity_residual(twisted_donaldson, self.m - 2)
    }

    /// `J′ - I′/(m+1)` and `m I′/(m+1) - J′`.
    pub fn inequality_gaps(&self) -> (f64, f64) {
        let (i, j) = (self.aubin_i(), self.aubin_j());
        let m1 = (self.m + 1) as f64;
        (j - i / m1, self.m as f64 * i / m1 - j)
    }

    /// Magnitude used to scale identity tolerances.
    pub fn scale(&self) -> f64 {
        let all = self
            .phi_mixed
            .iter()
            .chain(&self.phi_djd)
            .chain(&self.gradient_form)
            .chain(&self.phi_ddsigma)
            .chain(&self.sigma_square);
        all.fold(0.0f64, |s, v| s.max(v.abs())) / self.volume
    }
}

/// The six integrals of `τ′_φ(f)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauTerms {
    /// `(1/V)∫ f ω₁^m`
    pub volume_term: f64,
    /// `(1/V)∫ f dJdφ ∧ Σ (m-2k-1)/(m+1) P_k`
    pub djd_term: f64,
    /// `-(1/V)∫ f dd*σ(φ) ∧ Σ P_k`
    pub ddsigma_term: f64,
    /// `(1/V)∫ φ dJdφ ∧ Σ (k+1)(m-k-1)/(m+1) ω₁^k ω^{m-k-2} ∧ 𝒟⁺f`
    pub potential_term: f64,
    /// `(2(m-1)²/V)∫ J∂₋σ(f) ∧ ∂₋σ(φ) ∧ Σ (m-k)/(m+1) P_k`
    pub cross_term: f64,
    /// `((m-1)²/V)∫ K ∧ Σ (k+1)(m-k-1)/(m+1) ω₁^k ω^{m-k-2} ∧ 𝒟⁺f`, k <= m-3
    pub sigma_square_term: f64,
}

impl TauTerms {
    pub fn total(&self) -> f64 {
        self.volume_term + self.djd_term + self.ddsigma_term + self.potential_term + self.cross_term + self.sigma_square_term
    }
}

/// `(A)_{u,v}`, `(B)_{u,v}`, both orders, and `-(m-1)²∫J∂₋σ(u)∧∂₋σ(v)∧ω^{m-1-k}∧ω₁^k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairingTerms {
    pub k: usize,
    pub a_uv: f64,
    pub b_uv: f64,
    pub a_vu: f64,
    pub b_vu: f64,
    pub lhs: f64,
    pub lhs_swapped: f64,
    /// `(A)` with the sign of the `dJβ₀` term reversed.
    pub a_uv_reversed: f64,
    pub a_vu_reversed: f64,
}

impl PairingTerms {
    pub fn scale(&self) -> f64 {
        [self.a_uv, self.b_uv, self.a_vu, self.b_vu, self.lhs, self.lhs_swapped]
            .iter()
            .fold(0.0f64, |s, v| s.max(v.abs()))
    }

    /// `|LHS - A_uv - B_uv|`
    pub fn split_residual(&self) -> f64 {
        (self.lhs - self.a_uv - self.b_uv).abs()
    }

    /// `|A_uv + B_uv - A_vu - B_vu|`
    pub fn symmetry_residual(&self) -> f64 {
        (self.a_uv + self.b_uv - self.a_vu - self.b_vu).abs()
    }

    pub fn split_residual_reversed(&self) -> f64 {
        (self.lhs - self.a_uv_reversed - self.b_uv).abs()
    }

    pub fn symmetry_residual_reversed(&self) -> f64 {
        (self.a_uv_reversed + self.b_uv - self.a_vu_reversed - self.b_vu).abs()
    }
}

/// A potential with cached powers of `ω₁`.
#[derive(Debug, Clone)]
pub struct PotentialState<T: Real> {
    pub phi: SigmaData<T>,
    pub result: PotentialSolveResult<T>,
    /// `ω₁^k`, k = 0..=m.
    pub omega1_powers: Vec<FormField<T>>,
    pub dealias: bool,
}

impl<T: Real> PotentialState<T> {
    pub fn new(st: &AlmostHermitianStructure<T>, phi: SigmaData<T>, dealias: bool) -> Self {
        let result = st.solve_result(&phi);
        let m = st.grid.m;
        let mut omega1_powers = vec![FormField::from_scalar(&ScalarField::constant(st.grid, T::one())), result.omega1.clone()];
        for k in 2..=m {
            let next = wedge(&omega1_powers[k - 1], &result.omega1, dealias);
            omega1_powers.push(next);
        }
        Self { phi, result, omega1_powers, dealias }
    }

    pub fn require_admissible(&self) -> Result<()> {
        if self.result.is_admissible() {
            Ok(())
        } else {
            Err(Error::NotAdmissible { margin: self.result.positivity_margin })
        }
    }

    fn m(&self) -> usize {
        self.phi.f.grid.m
    }

    fn volume(&self) -> T {
        T::lit(total_volume(self.m()))
    }

    fn w(&self, a: &FormField<T>, b: &FormField<T>) -> FormField<T> {
        wedge(a, b, self.dealias)
    }

    /// `ω₁^k ∧ ω^e`.
    pub fn mixed(&self, k: usize, e: usize) -> FormField<T> {
        wedge(&self.omega1_powers[k], &power_of_omega(self.phi.f.grid, e), false)
    }

    /// `Σ_k c_k ω₁^k ∧ ω^{total-k}` over the given `(k, c_k)`.
    pub fn mixed_sum(&self, total: usize, coefs: &[(usize, f64)]) -> FormField<T> {
        let grid = self.phi.f.grid;
        let mut out = FormField::zeros(grid, 2 * total);
        for (k, c) in coefs {
            out.axpy(T::lit(*c), &self.mixed(*k, total - k));
        }
        out
    }

    /// `∫ u · (a ∧ b)`; `u = None` means 1.
    fn integral(&self, u: Option<&ScalarField<T>>, a: &FormField<T>, b: &FormField<T>) -> T {
        let top = self.w(a, b);
        match u {
            None => top.integrate_top(),
            Some(u) => top.mul_scalar(u, false).integrate_top(),
        }
    }

    fn f64(x: T) -> f64 {
        x.to_f64().unwrap()
    }

    /// `K = J∂₋σ(φ) ∧ ∂₋σ(φ)`.
    pub fn sigma_square(&self) -> FormField<T> {
        self.w(&self.phi.j_partial_sigma, &self.phi.partial_sigma)
    }

    /// `dφ ∧ J dφ`.
    pub fn gradient_square(&self, st: &AlmostHermitianStructure<T>) -> FormField<T> {
        let dphi = exterior_derivative(&FormField::from_scalar(&self.phi.f));
        self.w(&dphi, &st.act_j(&dphi))
    }

    pub fn terms_with(&self, st: &AlmostHermitianStructure<T>) -> FunctionalTerms {
        let m = self.m();
        let phi = &self.phi.f;
        let k_form = self.sigma_square();
        let grad = self.gradient_square(st);
        let p: Vec<FormField<T>> = (0..m).map(|k| self.mixed(k, m - 1 - k)).collect();
        let f = Self::f64;
        FunctionalTerms {
            m,
            volume: total_volume(m),
            phi_mixed: (0..=m).map(|k| f(self.mixed(k, m - k).mul_scalar(phi, false).integrate_top())).collect(),
            phi_djd: p.iter().map(|pk| f(self.integral(Some(phi), &self.phi.djd, pk))).collect(),
            gradient_form: p.iter().map(|pk| -f(self.integral(None, &grad, pk))).collect(),
            phi_ddsigma: p.iter().map(|pk| f(self.integral(Some(phi), &self.phi.ddsigma, pk))).collect(),
            sigma_square: p.iter().map(|pk| f(self.integral(None, &k_form, pk))).collect(),
        }
    }

    /// `II′` from the assembled weighted sums (one integral per display line).
    pub fn twisted_donaldson(&self) -> f64 {
        let m = self.m();
        let phi = &self.phi.f;
        let c = |k: usize| (m - k) as f64 / (m + 1) as f64;
        let s1 = self.mixed_sum(m - 1, &(0..m).map(|k| (k, c(k))).collect::<Vec<_>>());
        let s2 = self.mixed_sum(m - 1, &(0..m - 1).map(|k| (k, c(k))).collect::<Vec<_>>());
        let first = self.mixed(0, m).mul_scalar(phi, false).integrate_top();
        let second = self.integral(Some(phi), &self.phi.djd, &s1);
        let third = self.integral(None, &self.sigma_square(), &s2);
        let sq = T::lit(((m - 1) * (m - 1)) as f64);
        Self::f64((first + second + sq * third) / self.volume())
    }

    /// In real dimension four: `II′`, `I′`, `J′` written with `∫φ dd*σ(φ)∧ω` in place of the σ-square term.
    pub fn dimension_four_closed_forms(&self) -> Option<(f64, f64, f64)> {
        if self.m() != 2 {
            return None;
        }
        let phi = &self.phi.f;
        let grid = phi.grid;
        let omega = power_of_omega::<T>(grid, 1);
        let mut combo = self.result.omega1.clone();
        combo.axpy(T::lit(2.0), &omega);
        let mut pair = self.result.omega1.clone();
        pair.axpy(T::one(), &omega);
        let v = self.volume();
        let first = self.mixed(0, 2).mul_scalar(phi, false).integrate_top() / v;
        let x_combo = self.integral(Some(phi), &self.phi.djd, &combo) / v;
        let x_pair = self.integral(Some(phi), &self.phi.djd, &pair) / v;
        let dd = self.integral(Some(phi), &self.phi.ddsigma, &omega) / v;
        let third = T::lit(1.0 / 3.0);
        let two_thirds = T::lit(2.0 / 3.0);
        let ii = first + third * x_combo - two_thirds * dd;
        let i = -x_pair + dd;
        let j = -third * x_combo + two_thirds * dd;
        Some((Self::f64(ii), Self::f64(i), Self::f64(j)))
    }

    /// `τ′_φ(f)` for the direction `dir = σ-data(f)`.
    pub fn tau_prime(&self, dir: &SigmaData<T>) -> TauTerms {
        let m = self.m();
        let v = self.volume();
        let phi = &self.phi.f;
        let f = &dir.f;
        let mf = m as f64;
        let sq = T::lit(((m - 1) * (m - 1)) as f64);
        let dplus_f = dir.djplus();
        let s_djd = self.mixed_sum(m - 1, &(0..m).map(|k| (k, (mf - 2.0 * k as f64 - 1.0) / (mf + 1.0))).collect::<Vec<_>>());
        let s_all = self.mixed_sum(m - 1, &(0..m).map(|k| (k, 1.0)).collect::<Vec<_>>());
        let s_cross = self.mixed_sum(m - 1, &(0..m - 1).map(|k| (k, (mf - k as f64) / (mf + 1.0))).collect::<Vec<_>>());
        let tail = |upper: usize| -> FormField<T> {
            // Σ_{k<=upper} (k+1)(m-k-1)/(m+1) ω₁^k ω^{m-2-k}
            let coefs: Vec<(usize, f64)> = (0..=upper).map(|k| (k, ((k + 1) * (m - k - 1)) as f64 / (mf + 1.0))).collect();
            self.mixed_sum(m - 2, &coefs)
        };
        let volume_term = self.omega1_powers[m].mul_scalar(f, false).integrate_top() / v;
        let djd_term = self.integral(Some(f), &self.phi.djd, &s_djd) / v;
        let ddsigma_term = -self.integral(Some(f), &self.phi.ddsigma, &s_all) / v;
        let inner = self.w(&self.phi.djd, &tail(m - 2));
        let potential_term = self.integral(Some(phi), &inner, &dplus_f) / v;
        let cross = self.w(&dir.j_partial_sigma, &self.phi.partial_sigma);
        let cross_term = T::lit(2.0) * sq * self.integral(None, &cross, &s_cross) / v;
        let sigma_square_term = if m >= 3 {
            let t = tail(m - 3);
            let inner = self.w(&self.sigma_square(), &t);
            sq * self.integral(None, &inner, &dplus_f) / v
        } else {
            T::zero()
        };
        let f64 = Self::f64;
        TauTerms {
            volume_term: f64(volume_term),
            djd_term: f64(djd_term),
            ddsigma_term: f64(ddsigma_term),
            potential_term: f64(potential_term),
            cross_term: f64(cross_term),
            sigma_square_term: f64(sigma_square_term),
        }
    }

    /// `∫ φ dJdφ ∧ ω^{m-1-k} ∧ ω₁^k` and `-∫ dφ ∧ Jdφ ∧ ω^{m-1-k} ∧ ω₁^k`.
    pub fn gradient_pairing(&self, st: &AlmostHermitianStructure<T>, k: usize) -> Result<(f64, f64)> {
        let m = self.m();
        if k >= m {
            return Err(Error::InvalidArgument(format!("k must be below m = {m}, got {k}")));
        }
        let p = self.mixed(k, m - 1 - k);
        let stokes = self.integral(Some(&self.phi.f), &self.phi.djd, &p);
        let grad = -self.integral(None, &self.gradient_square(st), &p);
        Ok((Self::f64(stokes), Self::f64(grad)))
    }

    /// The pairing integrals for `u`, `v` against `ω₁` of this potential, `0 <= k <= m-2`.
    pub fn pairing_terms(&self, st: &AlmostHermitianStructure<T>, u: &SigmaData<T>, v: &SigmaData<T>, k: usize) -> Result<PairingTerms> {
        let m = self.m();
        if m < 2 || k + 2 > m {
            return Err(Error::InvalidArgument(format!("k must satisfy 0 <= k <= m-2 = {}, got {k}", m - 2)));
        }
        let vol_lo = self.mixed(k, m - 2 - k);
        let vol_hi = self.mixed(k, m - 1 - k);
        let sq = T::lit(((m - 1) * (m - 1)) as f64);
        let m1 = T::lit((m - 1) as f64);
        let beta_u = st.beta0(&u.sigma)?;
        let beta_v = st.beta0(&v.sigma)?;
        let a_parts = |x: &SigmaData<T>, y: &SigmaData<T>, beta_y: &FormField<T>| {
            let dd = self.integral(Some(&x.f), &y.ddsigma, &vol_hi);
            let djb = exterior_derivative(&st.act_j(beta_y));
            let b0 = self.integral(Some(&x.f), &djb, &vol_lo);
            (dd, m1 * b0)
        };
        let b_term = |x: &SigmaData<T>, beta_y: &FormField<T>| {
            let w = self.w(&x.j_partial_sigma, beta_y);
            sq * self.integral(None, &w, &vol_lo)
        };
        let (a1, a2) = a_parts(u, v, &beta_v);
        let (c1, c2) = a_parts(v, u, &beta_u);
        let lhs = -sq * self.integral(None, &self.w(&u.j_partial_sigma, &v.partial_sigma), &vol_hi);
        let lhs_swapped = -sq * self.integral(None, &self.w(&v.j_partial_sigma, &u.partial_sigma), &vol_hi);
        let f = Self::f64;
        Ok(PairingTerms {
            k,
            a_uv: f(a1 + a2),
            b_uv: f(b_term(u, &beta_v)),
            a_vu: f(c1 + c2),
            b_vu: f(b_term(v, &beta_u)),
            lhs: f(lhs),
            lhs_swapped: f(lhs_swapped),
            a_uv_reversed: f(a1 - a2),
            a_vu_reversed: f(c1 - c2),
        })
    }

    /// Density `r` with `τ′_φ(f) = ∫ f r ω^m` for all `f`.
    pub fn gradient_density(&self, st: &AlmostHermitianStructure<T>, cfg: &SolverConfig) -> Result<ScalarField<T>> {
        let m = self.m();
        let mf = m as f64;
        let v = self.volume();
        let sq = T::lit(((m - 1) * (m - 1)) as f64);
        // Pointwise part: the first three terms.
        let s_djd = self.mixed_sum(m - 1, &(0..m).map(|k| (k, (mf - 2.0 * k as f64 - 1.0) / (mf + 1.0))).collect::<Vec<_>>());
        let s_all = self.mixed_sum(m - 1, &(0..m).map(|k| (k, 1.0)).collect::<Vec<_>>());
        let mut density = self.omega1_powers[m].clone();
        density.axpy(T::one(), &self.w(&self.phi.djd, &s_djd));
        density.axpy(-T::one(), &self.w(&self.phi.ddsigma, &s_all));
        // Terms paired with 𝒟⁺f: ∫ 𝒟⁺f ∧ Γ.
        let coefs = |upper: usize| (0..=upper).map(|k| (k, ((k + 1) * (m - k - 1)) as f64 / (mf + 1.0))).collect::<Vec<_>>();
        let mut gamma = self.w(&self.phi.djd, &self.mixed_sum(m - 2, &coefs(m - 2))).mul_scalar(&self.phi.f, self.dealias);
        if m >= 3 {
            gamma.axpy(sq, &self.w(&self.sigma_square(), &self.mixed_sum(m - 2, &coefs(m - 3))));
        }
        // Cross term: ∫ J∂₋σ(f) ∧ Ξ.
        let s_cross = self.mixed_sum(m - 1, &(0..m - 1).map(|k| (k, (mf - k as f64) / (mf + 1.0))).collect::<Vec<_>>());
        let xi = self.w(&self.phi.partial_sigma, &s_cross).scale(T::lit(2.0) * sq);
        // ∫ dJdf∧Γ = ∫ f d(J dΓ); ∫ dd*σ(f)∧Γ + ∫J∂₋σ(f)∧Ξ = ∫ d*σ(f) ∧ Ψ with J∂₋σ = -d*σ/(m-1).
        let dgamma = exterior_derivative(&gamma);
        density.axpy(T::one(), &exterior_derivative(&st.act_j(&dgamma)));
        let mut psi_form = dgamma;
        psi_form.axpy(-T::one() / T::lit(mf - 1.0), &xi);
        // ∫ α ∧ Ψ = ⟨α, β⟩ with β = -*Ψ; ⟨d*σ(f), β⟩ = ⟨σ(f), P⁻dβ⟩ = -⟨dJdf, ψ⟩ where Pψ = P⁻dβ.
        let beta = st.hodge_star(&psi_form).scale(-T::one());
        let rhs = st.minus_part(&exterior_derivative(&beta));
        let scale = st.l2_norm(&exterior_derivative(&beta)).max(T::min_positive_value());
        let (psi, _) = st.solve_anti(&rhs, scale, cfg)?;
        let star_psi = st.hodge_star(&psi);
        density.axpy(-T::one(), &exterior_derivative(&st.act_j(&exterior_derivative(&star_psi))));
        Ok(density.scalar_part().scale(T::one() / (v * T::lit(factorial(m)))))
    }
}

/// Band-limited random potentials scaled into the potential space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialSampler {
    pub band: usize,
    /// Required margin as a fraction of the base metric's.
    pub margin_fraction: f64,
    /// The scale is drawn uniformly from `[min_fraction, max_fraction]` of the critical one.
    pub min_fraction: f64,
    pub max_fraction: f64,
}

impl Default for PotentialSampler {
    fn default() -> Self {
        Self { band: 1, margin_fraction: 0.2, min_fraction: 0.25, max_fraction: 1.0 }
    }
}

/// A sampled potential with its analytic form.
#[derive(Debug, Clone)]
pub struct SampledPotential<T: Real> {
    pub poly: TrigPolynomial<T>,
    pub scale: f64,
    pub critical_scale: f64,
    pub state: PotentialState<T>,
}

impl PotentialSampler {
    pub fn sample<T: Real, R: Rng>(&self, st: &AlmostHermitianStructure<T>, cfg: &SolverConfig, rng: &mut R) -> Result<SampledPotential<T>> {
        let dir = TrigPolynomial::<T>::random(st.dim(), self.band, true, rng);
        let field = dir.sample(st.grid);
        let data = st.sigma_data(&field, cfg)?;
        let target = st.tamedness_margin * T::lit(self.margin_fraction);
        let crit = st.critical_scale(&data.djplus(), target);
        let crit = if crit.is_finite() { crit } else { T::one() };
        let u = rng.gen_range(self.min_fraction..=self.max_fraction);
        let s = crit * T::lit(u);
        let state = PotentialState::new(st, data.scaled(s), cfg.dealias);
        state.require_admissible()?;
        Ok(SampledPotential { poly: dir.scaled(s), scale: s.to_f64().unwrap(), critical_scale: crit.to_f64().unwrap(), state })
    }
}

/// One point of a descent trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescentStep {
    pub step: usize,
    pub twisted_donaldson: f64,
    pub aubin_i: f64,
    pub aubin_j: f64,
    pub positivity_margin: f64,
    /// `∫ r² ω^m` for the gradient density at this step.
    pub gradient_norm_sq: f64,
}

#[derive(Debug, Clone)]
pub struct DescentTrajectory<T: Real> {
    pub rate: f64,
    pub steps: Vec<DescentStep>,
    pub final_phi: ScalarField<T>,
    /// Set when a step left the potential space.
    pub diagnostic: Option<String>,
}

impl<T: Real> DescentTrajectory<T> {
    /// Largest increase of `II′` between consecutive steps (non-positive when monotone).
    pub fn max_increase(&self) -> f64 {
        self.steps.windows(2).map(|w| w[1].twisted_donaldson - w[0].twisted_donaldson).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `∫ r² ω^m`.
pub fn density_norm_sq<T: Real>(r: &ScalarField<T>) -> f64 {
    let m = r.grid.m;
    (r.multiply(r, false).integrate() * T::lit(factorial(m))).to_f64().unwrap()
}

impl<T: Real> AlmostHermitianStructure<T> {
    /// Explicit Euler steps `φ ← φ - rate·r(φ)` on `II′`, with `r` the density of `τ′_φ`
    /// with respect to `ω^m`. Stops early, keeping the trajectory, if a step leaves the potential space.
    pub fn gradient_descent(&self, phi0: &ScalarField<T>, steps: usize, rate: f64, cfg: &SolverConfig) -> Result<DescentTrajectory<T>> {
        let mut state = self.potential_state(phi0, cfg)?;
        let mut out = Vec::with_capacity(steps + 1);
        let mut diagnostic = None;
        for step in 0..=steps {
            let terms = state.terms_with(self);
            let r = state.gradient_density(self, cfg)?;
            out.push(DescentStep {
                step,
                twisted_donaldson: state.twisted_donaldson(),
                aubin_i: terms.aubin_i(),
                aubin_j: terms.aubin_j(),
                positivity_margin: state.result.positivity_margin,
                gradient_norm_sq: density_norm_sq(&r),
            });
            if step == steps {
                break;
            }
            let mut next = state.phi.f.clone();
            next.axpy(-T::lit(rate), &r);
            let data = self.sigma_data(&next, cfg)?;
            let candidate = PotentialState::new(self, data, cfg.dealias);
            if !candidate.result.is_admissible() {
                diagnostic = Some(format!(
                    "step {} leaves the potential space (margin {:e})",
                    step + 1,
                    candidate.result.positivity_margin
                ));
                break;
            }
            state = candidate;
        }
        Ok(DescentTrajectory { rate, steps: out, final_phi: state.phi.f.clone(), diagnostic })
    }

    /// Halve `rate` from `initial` until one step's decrease of `II′` is within `tolerance`
    /// (relative) of the first-order prediction `rate·∫r²ω^m` and the step stays admissible.
    pub fn taylor_rate(&self, phi0: &ScalarField<T>, initial: f64, tolerance: f64, cfg: &SolverConfig) -> Result<(f64, f64)> {
        let state = self.potential_state(phi0, cfg)?;
        let base = state.twisted_donaldson();
        let r = state.gradient_density(self, cfg)?;
        let norm = density_norm_sq(&r);
        let dir = self.sigma_data(&r, cfg)?;
        let mut rate = initial;
        for _ in 0..60 {
            let moved = SigmaData::combine(T::one(), &state.phi, -T::lit(rate), &dir);
            let cand = PotentialState::new(self, moved, cfg.dealias);
            if cand.result.is_admissible() && norm > 0.0 {
                let ratio = (base - cand.twisted_donaldson()) / (rate * norm);
                if (ratio - 1.0).abs() <= tolerance {
                    return Ok((rate, ratio));
                }
            }
            rate *= 0.5;
        }
        Err(Error::NotConverged { iterations: 60, residual: rate, history: Vec::new() })
    }
}

/// Everything reported for one potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub volume: f64,
    pub donaldson_gauge: f64,
    pub twisted_donaldson: f64,
    pub aubin_i: f64,
    pub aubin_j: f64,
    /// `J′ - I′/(m+1)`
    pub lower_gap: f64,
    /// `m I′/(m+1) - J′`
    pub upper_gap: f64,
    pub sum_identity_residual: f64,
    pub difference_identity_residual_displayed: f64,
    pub difference_identity_residual_matched: f64,
    /// Per k: `(∫φ dJdφ ∧ P_k, -∫dφ∧Jdφ∧P_k)`.
    pub gradient_pairings: Vec<(f64, f64)>,
    /// Per admissible k with `u = v = φ`.
    pub pairings: Vec<PairingTerms>,
    pub positivity_margin: f64,
    pub scale: f64,
}

impl FunctionalReport {
    pub fn all_finite(&self) -> bool {
        let scalars = [
            self.volume,
            self.donaldson_gauge,
            self.twisted_donaldson,
            self.aubin_i,
            self.aubin_j,
            self.lower_gap,
            self.upper_gap,
            self.sum_identity_residual,
            self.difference_identity_residual_displayed,
            self.difference_identity_residual_matched,
            self.positivity_margin,
            self.scale,
        ];
        scalars.iter().all(|v| v.is_finite())
            && self.gradient_pairings.iter().all(|(a, b)| a.is_finite() && b.is_finite())
            && self.pairings.iter().all(|p| [p.a_uv, p.b_uv, p.a_vu, p.b_vu, p.lhs, p.lhs_swapped].iter().all(|v| v.is_finite()))
    }
}

impl<T: Real> PotentialState<T> {
    pub fn report(&self, st: &AlmostHermitianStructure<T>) -> Result<FunctionalReport> {
        let m = self.m();
        let terms = self.terms_with(st);
        let ii = self.twisted_donaldson();
        let (lower_gap, upper_gap) = terms.inequality_gaps();
        let pairings = (0..=m - 2).map(|k| self.pairing_terms(st, &self.phi, &self.phi, k)).collect::<Result<Vec<_>>>()?;
        Ok(FunctionalReport {
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
            pairings,
            positivity_margin: self.result.positivity_margin,
            scale: terms.scale(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::sampler::TrigPolynomial;
    use crate::structure::{build_structure, StructureRecipe};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn structure(eps: f64) -> AlmostHermitianStructure<f64> {
        build_structure(GridSpec::new(2, 8).unwrap(), StructureRecipe { epsilon: eps, ..Default::default() }).unwrap()
    }

    fn cfg() -> SolverConfig {
        SolverConfig { tol: 1e-11, dealias: false, ..Default::default() }
    }

    /// Band-1 mean-zero potential scaled to sup norm `amp`.
    fn potential(st: &AlmostHermitianStructure<f64>, seed: u64, amp: f64) -> ScalarField<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = TrigPolynomial::random(st.dim(), 1, true, &mut rng).sample(st.grid);
        let s = amp / f.max_abs();
        f.scale(s)
    }

    #[test]
    fn volume_of_standard_torus() {
        let tau = 2.0 * std::f64::consts::PI;
        assert!((total_volume(2) - 2.0 * tau.powi(4)).abs() < 1e-9);
        assert!((total_volume(3) - 6.0 * tau.powi(6)).abs() < 1e-6);
    }

    #[test]
    fn constant_potential_is_neutral() {
        let st = structure(0.1);
        let c = ScalarField::constant(st.grid, 0.7);
        let state = st.potential_state(&c, &cfg()).unwrap();
        let t = state.terms_with(&st);
        for v in [t.aubin_i(), t.aubin_j(), t.inequality_gaps().0, t.inequality_gaps().1] {
            assert!(v.abs() < 1e-12, "{v}");
        }
    }

    #[test]
    fn sigma_data_is_linear() {
        let st = structure(0.1);
        let u = st.sigma_data(&potential(&st, 1, 0.1), &cfg()).unwrap();
        let v = st.sigma_data(&potential(&st, 2, 0.1), &cfg()).unwrap();
        let mut f = u.f.scale(2.0);
        f.axpy(-0.5, &v.f);
        let direct = st.sigma_data(&f, &cfg()).unwrap();
        let comb = SigmaData::combine(2.0, &u, -0.5, &v);
        assert!(direct.djplus().sub(&comb.djplus()).max_abs() < 1e-8 * comb.djplus().max_abs());
    }

    #[test]
    fn dplus_is_invariant_and_closed() {
        let st = structure(0.1);
        let r = st.d_j_plus(&potential(&st, 3, 0.1), &cfg()).unwrap();
        assert!(r.residuals.anti_invariant_part < 1e-8, "{:?}", r.residuals);
        assert!(r.residuals.closedness < 1e-8, "{:?}", r.residuals);
        assert!(r.is_admissible());
    }

    #[test]
    fn critical_scale_matches_bisection() {
        let st = structure(0.1);
        let dir = st.d_j_plus(&potential(&st, 4, 1.0), &cfg()).unwrap().djplus;
        let s = st.critical_scale(&dir, 0.0);
        let b = st.bisect_scale(&dir, 0.0, 4.0 * s, 60);
        assert!((s - b).abs() < 1e-9 * s, "{s} {b}");
        let mut w = st.omega.clone();
        w.axpy(0.99 * s, &dir);
        assert!(st.positivity_margin(&w) > 0.0);
        w.axpy(0.02 * s, &dir);
        assert!(st.positivity_margin(&w) < 0.0);
    }

    #[test]
    fn large_potential_is_rejected() {
        let st = structure(0.0);
        let dir = st.d_j_plus(&potential(&st, 5, 1.0), &cfg()).unwrap().djplus;
        let s = st.critical_scale(&dir, 0.0);
        let phi = potential(&st, 5, 2.0 * s);
        assert!(matches!(st.potential_state(&phi, &cfg()), Err(Error::NotAdmissible { .. })));
    }

    #[test]
    fn twisted_reduces_to_kahler_forms_when_integrable() {
        let st = structure(0.0);
        let state = st.potential_state(&potential(&st, 6, 0.1), &cfg()).unwrap();
        let t = state.terms_with(&st);
        let scale = t.scale();
        assert!((state.twisted_donaldson() - t.twisted_donaldson_kahler()).abs() < 1e-12 * scale);
        assert!((t.aubin_i() - t.aubin_i_kahler()).abs() < 1e-12 * scale);
        assert!((t.aubin_j() - t.aubin_j_kahler()).abs() < 1e-12 * scale);
    }

    #[test]
    fn aubin_chain_holds() {
        let st = structure(0.1);
        let state = st.potential_state(&potential(&st, 7, 0.1), &cfg()).unwrap();
        let t = state.terms_with(&st);
        let (lo, hi) = t.inequality_gaps();
        assert!(lo > 0.0 && hi > 0.0, "{lo} {hi}");
        assert!(t.sum_identity_residual(state.twisted_donaldson()) < 1e-10);
        assert!(t.difference_identity_residual_matched(state.twisted_donaldson()) < 1e-10);
    }

    #[test]
    fn tau_prime_matches_finite_difference() {
        let st = structure(0.1);
        let phi = potential(&st, 8, 0.1);
        let f = potential(&st, 9, 0.05);
        let at = |h: f64| {
            let mut p = phi.clone();
            p.axpy(h, &f);
            st.twisted_donaldson(&p, &cfg()).unwrap()
        };
        let h = 1e-3;
        let fd = (at(-2.0 * h) - 8.0 * at(-h) + 8.0 * at(h) - at(2.0 * h)) / (12.0 * h);
        let tau = st.tau_prime(&phi, &f, &cfg()).unwrap();
        assert!((fd - tau).abs() < 1e-7 * tau.abs().max(1e-12), "{fd} {tau}");
    }
}
