//! Scalar fields on the grid and their Fourier-side operations.

use std::any::{Any, TypeId};
use std::cell::RefCell;
use std::collections::HashMap;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{derivative_wavenumber, wavenumber, GridSpec};
use crate::scalar::Real;

thread_local! {
    static PLANS: RefCell<HashMap<(TypeId, usize, bool), Box<dyn Any>>> = RefCell::new(HashMap::new());
    static NEGATED: RefCell<HashMap<(usize, usize), Arc<Vec<usize>>>> = RefCell::new(HashMap::new());
    static K2: RefCell<HashMap<(usize, usize, bool), Arc<Vec<f64>>>> = RefCell::new(HashMap::new());
}

fn plan<T: Real>(n: usize, inverse: bool) -> Arc<dyn Fft<T>> {
    PLANS.with(|cell| {
        let mut plans = cell.borrow_mut();
        let entry = plans.entry((TypeId::of::<T>(), n, inverse)).or_insert_with(|| {
            let dir = if inverse { FftDirection::Inverse } else { FftDirection::Forward };
            let fft: Arc<dyn Fft<T>> = FftPlanner::<T>::new().plan_fft(n, dir);
            Box::new(fft)
        });
        entry.downcast_ref::<Arc<dyn Fft<T>>>().expect("plan type").clone()
    })
}

/// Flat index of `-k` for every flat index `k`.
fn negated_table(grid: &GridSpec) -> Arc<Vec<usize>> {
    NEGATED.with(|cell| {
        cell.borrow_mut()
            .entry((grid.n, grid.dim()))
            .or_insert_with(|| Arc::new((0..grid.len()).map(|i| grid.negated(i)).collect()))
            .clone()
    })
}

/// In-place multidimensional FFT of a `d`-dimensional cube with `n` points per side.
/// The inverse is normalised by the total point count.
pub(crate) fn fft_nd<T: Real>(n: usize, d: usize, data: &mut [Complex<T>], inverse: bool) {
    let total = data.len();
    debug_assert_eq!(total, n.pow(d as u32));
    let fft = plan::<T>(n, inverse);
    let mut scratch = vec![Complex::new(T::zero(), T::zero()); fft.get_inplace_scratch_len()];
    fft.process_with_scratch(data, &mut scratch);
    if d > 1 {
        let mut buf = vec![Complex::new(T::zero(), T::zero()); total];
        for a in 0..d - 1 {
            let s = n.pow((d - 1 - a) as u32);
            let outer = total / (s * n);
            for o in 0..outer {
                let base = o * s * n;
                for j in 0..n {
                    let src = &data[base + j * s..base + j * s + s];
                    for (i, v) in src.iter().enumerate() {
                        buf[(o * s + i) * n + j] = *v;
                    }
                }
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for o in 0..outer {
                let base = o * s * n;
                for j in 0..n {
                    let dst = &mut data[base + j * s..base + j * s + s];
                    for (i, v) in dst.iter_mut().enumerate() {
                        *v = buf[(o * s + i) * n + j];
                    }
                }
            }
        }
    }
    if inverse {
        let scale = T::one() / T::lit(total as f64);
        for v in data.iter_mut() {
            *v = *v * scale;
        }
    }
}

/// Unnormalised forward transforms of several real arrays, two per complex FFT.
pub(crate) fn forward_batch<T: Real>(grid: &GridSpec, fields: &[&[T]]) -> Vec<Vec<Complex<T>>> {
    let len = grid.len();
    let neg = negated_table(grid);
    let half = T::lit(0.5);
    let mut out = Vec::with_capacity(fields.len());
    for pair in fields.chunks(2) {
        let mut z: Vec<Complex<T>> = match pair {
            [f, g] => f.iter().zip(g.iter()).map(|(a, b)| Complex::new(*a, *b)).collect(),
            [f] => f.iter().map(|a| Complex::new(*a, T::zero())).collect(),
            _ => unreachable!(),
        };
        fft_nd(grid.n, grid.dim(), &mut z, false);
        if pair.len() == 1 {
            out.push(z);
            continue;
        }
        let mut a = vec![Complex::new(T::zero(), T::zero()); len];
        let mut b = vec![Complex::new(T::zero(), T::zero()); len];
        for k in 0..len {
            let zc = z[neg[k]].conj();
            a[k] = (z[k] + zc) * half;
            let diff = (z[k] - zc) * half;
            // divide by i
            b[k] = Complex::new(diff.im, -diff.re);
        }
        out.push(a);
        out.push(b);
    }
    out
}

/// Inverse of [`forward_batch`] for Hermitian spectra; returns real arrays.
pub(crate) fn inverse_batch<T: Real>(grid: &GridSpec, specs: Vec<Vec<Complex<T>>>) -> Vec<Vec<T>> {
    let mut out = Vec::with_capacity(specs.len());
    let mut it = specs.into_iter();
    loop {
        let Some(a) = it.next() else { break };
        match it.next() {
            Some(b) => {
                let mut z: Vec<Complex<T>> = a
                    .iter()
                    .zip(b.iter())
                    .map(|(x, y)| Complex::new(x.re - y.im, x.im + y.re))
                    .collect();
                fft_nd(grid.n, grid.dim(), &mut z, true);
                out.push(z.iter().map(|c| c.re).collect());
                out.push(z.iter().map(|c| c.im).collect());
            }
            None => {
                let mut z = a;
                fft_nd(grid.n, grid.dim(), &mut z, true);
                out.push(z.iter().map(|c| c.re).collect());
            }
        }
    }
    out
}

/// Multiply a spectrum by the derivative symbol `i k_a` (Nyquist zeroed).
pub(crate) fn apply_derivative_symbol<T: Real>(grid: &GridSpec, spec: &[Complex<T>], a: usize, out: &mut [Complex<T>], coef: T) {
    let s = grid.stride(a);
    let n = grid.n;
    for (ob, cb) in out.chunks_mut(s * n).zip(spec.chunks(s * n)) {
        for j in 0..n {
            let k = derivative_wavenumber(j, n);
            if k == 0 {
                continue;
            }
            let f = coef * T::lit(k as f64);
            for (o, c) in ob[j * s..(j + 1) * s].iter_mut().zip(&cb[j * s..(j + 1) * s]) {
                *o = *o + Complex::new(-c.im * f, c.re * f);
            }
        }
    }
}

/// Padded length used by the 3/2 rule.
pub fn padded_points(n: usize) -> usize {
    3 * n / 2
}

/// Map per-axis bin `j` of an `n`-grid onto bins of an `mm`-grid (`mm >= n`), with weights.
fn pad_targets(j: usize, n: usize, mm: usize) -> [(usize, f64); 2] {
    if j == n / 2 {
        let h = n / 2;
        [(h, 0.5), (mm - h, 0.5)]
    } else {
        let k = wavenumber(j, n);
        let t = if k >= 0 { k as usize } else { (mm as i64 + k) as usize };
        [(t, 1.0), (usize::MAX, 0.0)]
    }
}

/// Values on the padded grid of the trigonometric interpolant of each array.
pub(crate) fn upsample_batch<T: Real>(grid: &GridSpec, fields: &[&[T]]) -> Vec<Vec<T>> {
    let mm = padded_points(grid.n);
    let fine = grid.with_n(mm);
    let d = grid.dim();
    let ratio = T::lit(fine.len() as f64 / grid.len() as f64);
    let specs = forward_batch(grid, fields);
    // per-source-index list of (target flat, weight)
    let mut targets: Vec<Vec<(usize, f64)>> = Vec::with_capacity(grid.len());
    for idx in 0..grid.len() {
        let mut acc = vec![(0usize, 1.0f64)];
        for a in 0..d {
            let opts = pad_targets(grid.axis_index(idx, a), grid.n, mm);
            let mut next = Vec::with_capacity(acc.len() * 2);
            for &(base, w) in &acc {
                for &(t, wt) in opts.iter() {
                    if t != usize::MAX {
                        next.push((base + t * fine.stride(a), w * wt));
                    }
                }
            }
            acc = next;
        }
        targets.push(acc);
    }
    let padded: Vec<Vec<Complex<T>>> = specs
        .iter()
        .map(|s| {
            let mut p = vec![Complex::new(T::zero(), T::zero()); fine.len()];
            for (idx, c) in s.iter().enumerate() {
                for &(t, w) in &targets[idx] {
                    p[t] = p[t] + *c * (ratio * T::lit(w));
                }
            }
            p
        })
        .collect();
    inverse_batch(&fine, padded)
}

/// Project arrays on the padded grid back to the coarse grid, keeping modes below Nyquist.
pub(crate) fn truncate_batch<T: Real>(grid: &GridSpec, fine_fields: &[&[T]]) -> Vec<Vec<T>> {
    let mm = padded_points(grid.n);
    let fine = grid.with_n(mm);
    let d = grid.dim();
    let ratio = T::lit(grid.len() as f64 / fine.len() as f64);
    let specs = forward_batch(&fine, fine_fields);
    let mut map: Vec<Option<usize>> = Vec::with_capacity(grid.len());
    for idx in 0..grid.len() {
        let mut src = 0usize;
        let mut keep = true;
        for a in 0..d {
            let j = grid.axis_index(idx, a);
            if j == grid.n / 2 {
                keep = false;
                break;
            }
            let k = wavenumber(j, grid.n);
            let t = if k >= 0 { k as usize } else { (mm as i64 + k) as usize };
            src += t * fine.stride(a);
        }
        map.push(if keep { Some(src) } else { None });
    }
    let coarse: Vec<Vec<Complex<T>>> = specs
        .iter()
        .map(|s| {
            map.iter()
                .map(|m| match m {
                    Some(src) => s[*src] * ratio,
                    None => Complex::new(T::zero(), T::zero()),
                })
                .collect()
        })
        .collect();
    inverse_batch(grid, coarse)
}

/// Real scalar field sampled on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<T: Real> {
    pub grid: GridSpec,
    pub data: Vec<T>,
}

impl<T: Real> ScalarField<T> {
    pub fn zeros(grid: GridSpec) -> Self {
        Self { grid, data: vec![T::zero(); grid.len()] }
    }

    pub fn constant(grid: GridSpec, c: T) -> Self {
        Self { grid, data: vec![c; grid.len()] }
    }

    pub fn from_vec(grid: GridSpec, data: Vec<T>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} values for {} points", data.len(), grid.len())));
        }
        Ok(Self { grid, data })
    }

    /// Sample `f(x)` at every grid point.
    pub fn from_fn(grid: GridSpec, f: impl Fn(&[T]) -> T) -> Self {
        let d = grid.dim();
        let mut x = vec![T::zero(); d];
        let data = (0..grid.len())
            .map(|i| {
                for (a, xa) in x.iter_mut().enumerate() {
                    *xa = grid.coord(i, a);
                }
                f(&x)
            })
            .collect();
        Self { grid, data }
    }

    /// Normalised Fourier coefficients: `f(x) = Σ c_k e^{i k·x}`.
    pub fn spectrum(&self) -> Vec<Complex<T>> {
        let mut z: Vec<Complex<T>> = self.data.iter().map(|v| Complex::new(*v, T::zero())).collect();
        fft_nd(self.grid.n, self.grid.dim(), &mut z, false);
        let s = T::one() / T::lit(self.grid.len() as f64);
        z.iter().map(|c| *c * s).collect()
    }

    /// Real part of the field with the given normalised coefficients.
    pub fn from_spectrum(grid: GridSpec, coeffs: &[Complex<T>]) -> Self {
        let s = T::lit(grid.len() as f64);
        let mut z: Vec<Complex<T>> = coeffs.iter().map(|c| *c * s).collect();
        fft_nd(grid.n, grid.dim(), &mut z, true);
        Self { grid, data: z.iter().map(|c| c.re).collect() }
    }

    pub fn mean(&self) -> T {
        self.data.iter().copied().sum::<T>() / T::lit(self.data.len() as f64)
    }

    /// Integral over the torus: (2π)^{2m} times the grid mean.
    pub fn integrate(&self) -> T {
        self.mean() * self.grid.torus_volume::<T>()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Root-mean-square value.
    pub fn rms(&self) -> T {
        (self.data.iter().map(|v| *v * *v).sum::<T>() / T::lit(self.data.len() as f64)).sqrt()
    }

    pub fn min(&self) -> T {
        self.data.iter().fold(T::infinity(), |m, v| m.min(*v))
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { grid: self.grid, data: self.data.iter().map(|v| f(*v)).collect() }
    }

    pub fn scale(&self, c: T) -> Self {
        self.map(|v| v * c)
    }

    pub fn axpy(&mut self, a: T, x: &Self) {
        for (y, v) in self.data.iter_mut().zip(&x.data) {
            *y = *y + a * *v;
        }
    }

    /// Spectral ∂/∂x_a with the Nyquist mode dropped.
    pub fn partial_derivative(&self, a: usize) -> Self {
        let g = &self.grid;
        let spec = forward_batch(g, &[&self.data]).pop().unwrap();
        let mut out = vec![Complex::new(T::zero(), T::zero()); g.len()];
        apply_derivative_symbol(g, &spec, a, &mut out, T::one());
        Self { grid: *g, data: inverse_batch(g, vec![out]).pop().unwrap() }
    }

    /// All first partials, sharing one forward transform.
    pub fn gradient(&self) -> Vec<Self> {
        let g = &self.grid;
        let spec = forward_batch(g, &[&self.data]).pop().unwrap();
        let outs: Vec<Vec<Complex<T>>> = (0..g.dim())
            .map(|a| {
                let mut o = vec![Complex::new(T::zero(), T::zero()); g.len()];
                apply_derivative_symbol(g, &spec, a, &mut o, T::one());
                o
            })
            .collect();
        inverse_batch(g, outs).into_iter().map(|data| Self { grid: *g, data }).collect()
    }

    /// Pointwise product; with `dealias` the 3/2 rule is used.
    pub fn multiply(&self, other: &Self, dealias: bool) -> Self {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        if !dealias {
            let data = self.data.iter().zip(&other.data).map(|(a, b)| *a * *b).collect();
            return Self { grid: self.grid, data };
        }
        let up = upsample_batch(&self.grid, &[&self.data, &other.data]);
        let prod: Vec<T> = up[0].iter().zip(&up[1]).map(|(a, b)| *a * *b).collect();
        let data = truncate_batch(&self.grid, &[&prod]).pop().unwrap();
        Self { grid: self.grid, data }
    }

    /// Spectral Laplacian with symbol `-|k|^2` (Nyquist included).
    pub fn laplacian(&self) -> Self {
        let g = self.grid;
        let mut spec = forward_batch(&g, &[&self.data]).pop().unwrap();
        for (c, k2) in spec.iter_mut().zip(k2_table(&g).iter()) {
            *c = *c * -T::lit(*k2);
        }
        Self { grid: g, data: inverse_batch(&g, vec![spec]).pop().unwrap() }
    }

    /// `u` with `-Δu = f - mean(f)` and zero mean.
    pub fn solve_constant_coefficient_poisson(&self) -> Self {
        let g = self.grid;
        let mut spec = forward_batch(&g, &[&self.data]).pop().unwrap();
        for (idx, (c, k2)) in spec.iter_mut().zip(k2_table(&g).iter()).enumerate() {
            *c = if idx == 0 { Complex::new(T::zero(), T::zero()) } else { *c / T::lit(*k2) };
        }
        Self { grid: g, data: inverse_batch(&g, vec![spec]).pop().unwrap() }
    }

    /// Remove the mean.
    pub fn centered(&self) -> Self {
        let mu = self.mean();
        self.map(|v| v - mu)
    }

    /// Flat L² inner product (integral of the product).
    pub fn dot(&self, other: &Self) -> T {
        let s: T = self.data.iter().zip(&other.data).map(|(a, b)| *a * *b).sum();
        s / T::lit(self.data.len() as f64) * self.grid.torus_volume::<T>()
    }
}

/// `|k|²` for every flat spectral index (Nyquist bins count as `n/2`).
pub(crate) fn k2_table(g: &GridSpec) -> Arc<Vec<f64>> {
    k2_cached(g, false)
}

/// `|k|²` of the derivative symbol: Nyquist bins count as zero, so this matches `d* d` exactly.
pub(crate) fn k2_derivative_table(g: &GridSpec) -> Arc<Vec<f64>> {
    k2_cached(g, true)
}

fn k2_cached(g: &GridSpec, derivative: bool) -> Arc<Vec<f64>> {
    let wave = move |j: usize, n: usize| if derivative { derivative_wavenumber(j, n) } else { wavenumber(j, n) };
    K2.with(|cell| {
        cell.borrow_mut()
            .entry((g.n, g.dim(), derivative))
            .or_insert_with(|| {
                Arc::new(
                    (0..g.len())
                        .map(|idx| (0..g.dim()).map(|a| wave(g.axis_index(idx, a), g.n).pow(2)).sum::<i64>() as f64)
                        .collect(),
                )
            })
            .clone()
    })
}

impl<T: Real> Add for &ScalarField<T> {
    type Output = ScalarField<T>;
    fn add(self, rhs: Self) -> ScalarField<T> {
        assert_eq!(self.grid, rhs.grid);
        ScalarField { grid: self.grid, data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a + *b).collect() }
    }
}

impl<T: Real> Sub for &ScalarField<T> {
    type Output = ScalarField<T>;
    fn sub(self, rhs: Self) -> ScalarField<T> {
        assert_eq!(self.grid, rhs.grid);
        ScalarField { grid: self.grid, data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a - *b).collect() }
    }
}

impl<T: Real> Mul<T> for &ScalarField<T> {
    type Output = ScalarField<T>;
    fn mul(self, rhs: T) -> ScalarField<T> {
        self.scale(rhs)
    }
}

impl<T: Real> Neg for &ScalarField<T> {
    type Output = ScalarField<T>;
    fn neg(self) -> ScalarField<T> {
        self.map(|v| -v)
    }
}

impl<T: Real> AddAssign<&ScalarField<T>> for ScalarField<T> {
    fn add_assign(&mut self, rhs: &ScalarField<T>) {
        self.axpy(T::one(), rhs);
    }
}

impl<T: Real> SubAssign<&ScalarField<T>> for ScalarField<T> {
    fn sub_assign(&mut self, rhs: &ScalarField<T>) {
        self.axpy(-T::one(), rhs);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid2(n: usize) -> GridSpec {
        GridSpec::new(2, n).unwrap()
    }

    #[test]
    fn derivative_of_trig_is_exact() {
        let g = grid2(16);
        let f = ScalarField::<f64>::from_fn(g, |x| (3.0 * x[1]).sin() * x[2].cos() + (x[0] - 2.0 * x[3]).cos());
        let df = f.partial_derivative(1);
        let exact = ScalarField::<f64>::from_fn(g, |x| 3.0 * (3.0 * x[1]).cos() * x[2].cos());
        assert!((&df - &exact).max_abs() < 1e-12);
        let grads = f.gradient();
        let e3 = ScalarField::<f64>::from_fn(g, |x| 2.0 * (x[0] - 2.0 * x[3]).sin());
        assert!((&grads[3] - &e3).max_abs() < 1e-12);
        assert!((&grads[1] - &exact).max_abs() < 1e-12);
    }

    #[test]
    fn nyquist_is_dropped() {
        let g = grid2(8);
        let f = ScalarField::<f64>::from_fn(g, |x| (4.0 * x[0]).cos());
        assert!(f.partial_derivative(0).max_abs() < 1e-13);
    }

    #[test]
    fn derivative_matches_finite_difference_on_smooth_field() {
        // eighth-order central differences on a finer grid as the reference
        let g = grid2(16);
        let fun = |x: &[f64]| (x[0].sin() + 0.5 * x[3].cos()).exp() * (0.3 * (x[1] + x[2]).sin()).cos();
        let f = ScalarField::from_fn(g, fun);
        let df = f.partial_derivative(0);
        let h = 1e-2;
        let w = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
        let mut worst = 0.0f64;
        for i in (0..g.len()).step_by(37) {
            let x: Vec<f64> = (0..4).map(|a| g.coord(i, a)).collect();
            let mut fd = 0.0;
            for (s, ws) in w.iter().enumerate() {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[0] += (s + 1) as f64 * h;
                xm[0] -= (s + 1) as f64 * h;
                fd += ws * (fun(&xp) - fun(&xm)) / h;
            }
            worst = worst.max((fd - df.data[i]).abs());
        }
        assert!(worst < 1e-6, "worst {worst}");
    }

    #[test]
    fn derivative_in_f32() {
        let g = grid2(8);
        let f = ScalarField::<f32>::from_fn(g, |x| (2.0 * x[2]).sin());
        let d = f.partial_derivative(2);
        let e = ScalarField::<f32>::from_fn(g, |x| 2.0 * (2.0 * x[2]).cos());
        assert!((&d - &e).max_abs() < 1e-4);
    }

    #[test]
    fn spectrum_roundtrip_and_symmetry() {
        let g = grid2(8);
        let f = ScalarField::<f64>::from_fn(g, |x| (x[0] + 2.0 * x[1]).sin() + 0.25 * (3.0 * x[3]).cos());
        let s = f.spectrum();
        for i in 0..g.len() {
            let c = s[g.negated(i)].conj();
            assert_abs_diff_eq!(s[i].re, c.re, epsilon = 1e-13);
            assert_abs_diff_eq!(s[i].im, c.im, epsilon = 1e-13);
        }
        let back = ScalarField::from_spectrum(g, &s);
        assert!((&back - &f).max_abs() < 1e-13);
    }

    #[test]
    fn batch_transforms_agree_with_single() {
        let g = grid2(8);
        let a = ScalarField::<f64>::from_fn(g, |x| (x[0] + x[1]).cos());
        let b = ScalarField::<f64>::from_fn(g, |x| (2.0 * x[2] - x[3]).sin() + x[0].cos());
        let c = ScalarField::<f64>::from_fn(g, |x| (x[3]).sin());
        let specs = forward_batch(&g, &[&a.data, &b.data, &c.data]);
        let n = g.len() as f64;
        for (sp, f) in specs.iter().zip([&a, &b, &c]) {
            let single = f.spectrum();
            for (u, v) in sp.iter().zip(&single) {
                assert!((*u / n - *v).norm() < 1e-13);
            }
        }
        let back = inverse_batch(&g, specs);
        assert!(back[1].iter().zip(&b.data).all(|(u, v)| (u - v).abs() < 1e-13));
        assert!(back[2].iter().zip(&c.data).all(|(u, v)| (u - v).abs() < 1e-13));
    }

    #[test]
    fn dealiased_product_exact_for_low_band() {
        let g = grid2(12);
        // both factors band-limited to n/3; the exact product has modes 1 and 7
        let f = ScalarField::<f64>::from_fn(g, |x| (3.0 * x[0]).cos() * (2.0 * x[1] - x[3]).cos());
        let h = ScalarField::<f64>::from_fn(g, |x| (4.0 * x[0]).sin());
        let p = f.multiply(&h, true);
        let projected = ScalarField::<f64>::from_fn(g, |x| 0.5 * x[0].sin() * (2.0 * x[1] - x[3]).cos());
        assert!((&p - &projected).max_abs() < 1e-13);
        let lo = ScalarField::<f64>::from_fn(g, |x| (2.0 * x[0]).sin() + x[2].cos());
        assert!((&f.multiply(&lo, true) - &f.multiply(&lo, false)).max_abs() < 1e-13);
    }

    #[test]
    fn dealiasing_removes_aliased_modes() {
        let g = grid2(8);
        let f = ScalarField::<f64>::from_fn(g, |x| (3.0 * x[0]).cos());
        let p = f.multiply(&f, true);
        // cos^2(3x) = 1/2 + cos(6x)/2; the cos(6x) part is unresolved and dropped
        assert!((&p - &ScalarField::constant(g, 0.5)).max_abs() < 1e-13);
        let q = f.multiply(&f, false);
        assert!((q.mean() - 0.5).abs() < 1e-13);
        assert!((&q - &ScalarField::constant(g, 0.5)).max_abs() > 0.4);
    }

    #[test]
    fn integral_and_poisson() {
        let g = grid2(8);
        let f = ScalarField::<f64>::from_fn(g, |x| 2.0 + (x[0] + x[1]).cos() + (3.0 * x[3]).sin());
        let vol = (2.0 * std::f64::consts::PI).powi(4);
        assert_abs_diff_eq!(f.integrate(), 2.0 * vol, epsilon = 1e-9);
        let u = f.solve_constant_coefficient_poisson();
        assert!(u.mean().abs() < 1e-14);
        let lhs = -&u.laplacian();
        let rhs = f.centered();
        assert!((&lhs - &rhs).max_abs() < 1e-12);
    }
}
