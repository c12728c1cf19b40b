//! Random band-limited trigonometric polynomials, fields and forms.

use num_complex::Complex;
use rand::Rng;

use crate::exterior::FormField;
use crate::grid::GridSpec;
use crate::multi_index::Basis;
use crate::scalar::Real;
use crate::spectral::ScalarField;

/// Real trigonometric polynomial `Σ c_k e^{i k·x}` stored with Hermitian partners.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPolynomial<T: Real> {
    pub dim: usize,
    pub terms: Vec<(Vec<i64>, Complex<T>)>,
}

impl<T: Real> TrigPolynomial<T> {
    /// Random coefficients on the cube `|k|_∞ <= band`, damped like `1/(1+|k|^2)`.
    /// The constant mode is skipped when `mean_zero` is set.
    pub fn random<R: Rng>(dim: usize, band: usize, mean_zero: bool, rng: &mut R) -> Self {
        let b = band as i64;
        let side = (2 * b + 1) as usize;
        let total = side.pow(dim as u32);
        let mut terms = Vec::new();
        for flat in 0..total {
            let k: Vec<i64> = (0..dim).map(|a| ((flat / side.pow((dim - 1 - a) as u32)) % side) as i64 - b).collect();
            // keep one representative of each ±k pair: first nonzero entry positive
            let first = k.iter().find(|v| **v != 0).copied();
            match first {
                None if mean_zero => continue,
                None => {
                    let c = T::lit(rng.gen_range(-1.0..1.0));
                    terms.push((k, Complex::new(c, T::zero())));
                }
                Some(f) if f > 0 => {
                    let k2: i64 = k.iter().map(|v| v * v).sum();
                    let damp = 1.0 / (1.0 + k2 as f64);
                    let c = Complex::new(T::lit(rng.gen_range(-1.0..1.0) * damp), T::lit(rng.gen_range(-1.0..1.0) * damp));
                    let neg: Vec<i64> = k.iter().map(|v| -v).collect();
                    terms.push((k, c));
                    terms.push((neg, c.conj()));
                }
                _ => {}
            }
        }
        Self { dim, terms }
    }

    pub fn band(&self) -> i64 {
        self.terms.iter().flat_map(|(k, _)| k.iter().map(|v| v.abs())).max().unwrap_or(0)
    }

    pub fn scaled(&self, s: T) -> Self {
        Self { dim: self.dim, terms: self.terms.iter().map(|(k, c)| (k.clone(), *c * s)).collect() }
    }

    /// Samples on `grid`; exact as long as `2·band < n`.
    pub fn sample(&self, grid: GridSpec) -> ScalarField<T> {
        assert_eq!(grid.dim(), self.dim);
        assert!(2 * self.band() < grid.n as i64, "grid too coarse for this polynomial");
        let mut spec = vec![Complex::new(T::zero(), T::zero()); grid.len()];
        for (k, c) in &self.terms {
            let mut idx = 0;
            for (a, ka) in k.iter().enumerate() {
                let j = ka.rem_euclid(grid.n as i64) as usize;
                idx += j * grid.stride(a);
            }
            spec[idx] = spec[idx] + *c;
        }
        ScalarField::from_spectrum(grid, &spec)
    }

    pub fn eval(&self, x: &[T]) -> T {
        self.terms
            .iter()
            .map(|(k, c)| {
                let ph = k.iter().zip(x).fold(T::zero(), |s, (ka, xa)| s + T::lit(*ka as f64) * *xa);
                c.re * ph.cos() - c.im * ph.sin()
            })
            .sum()
    }

    /// Second derivatives at `x`, row-major `dim × dim`.
    pub fn hessian(&self, x: &[T]) -> Vec<T> {
        let d = self.dim;
        let mut h = vec![T::zero(); d * d];
        for (k, c) in &self.terms {
            let ph = k.iter().zip(x).fold(T::zero(), |s, (ka, xa)| s + T::lit(*ka as f64) * *xa);
            let v = c.re * ph.cos() - c.im * ph.sin();
            for i in 0..d {
                for j in 0..d {
                    h[i * d + j] = h[i * d + j] - T::lit((k[i] * k[j]) as f64) * v;
                }
            }
        }
        h
    }
}

pub fn random_field<T: Real, R: Rng>(grid: GridSpec, band: usize, rng: &mut R) -> ScalarField<T> {
    TrigPolynomial::<T>::random(grid.dim(), band, false, rng).sample(grid)
}

pub fn random_form<T: Real, R: Rng>(grid: GridSpec, degree: usize, band: usize, rng: &mut R) -> FormField<T> {
    let c = Basis::new(grid.dim(), degree).len();
    let comps = (0..c).map(|_| random_field::<T, R>(grid, band, rng).data).collect();
    FormField { grid, degree, comps }
}
