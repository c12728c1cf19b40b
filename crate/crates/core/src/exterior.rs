//! Differential forms with constant-basis components on the grid.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::linalg::MatrixField;
use crate::multi_index::{indices_of, wedge_sign, Basis};
use crate::scalar::Real;
use crate::spectral::{apply_derivative_symbol, forward_batch, inverse_batch, truncate_batch, upsample_batch, ScalarField};

/// A k-form: one array per increasing multi-index, lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct FormField<T: Real> {
    pub grid: GridSpec,
    pub degree: usize,
    pub comps: Vec<Vec<T>>,
}

impl<T: Real> FormField<T> {
    pub fn zeros(grid: GridSpec, degree: usize) -> Self {
        let c = Basis::new(grid.dim(), degree).len();
        Self { grid, degree, comps: vec![vec![T::zero(); grid.len()]; c] }
    }

    pub fn basis(&self) -> Basis {
        Basis::new(self.grid.dim(), self.degree)
    }

    pub fn from_components(grid: GridSpec, degree: usize, comps: Vec<Vec<T>>) -> Result<Self> {
        let c = Basis::new(grid.dim(), degree).len();
        if comps.len() != c || comps.iter().any(|v| v.len() != grid.len()) {
            return Err(Error::GridMismatch(format!("expected {c} components of {} points", grid.len())));
        }
        Ok(Self { grid, degree, comps })
    }

    /// Constant coefficients, one per basis element.
    pub fn constant(grid: GridSpec, degree: usize, coeffs: &[T]) -> Self {
        let mut f = Self::zeros(grid, degree);
        for (c, v) in f.comps.iter_mut().zip(coeffs) {
            c.iter_mut().for_each(|x| *x = *v);
        }
        f
    }

    /// `Σ_j dx_{2j} ∧ dx_{2j+1}` (0-based axes).
    pub fn standard_symplectic(grid: GridSpec) -> Self {
        let mut f = Self::zeros(grid, 2);
        let b = f.basis();
        for j in 0..grid.m {
            let p = b.position((1 << (2 * j)) | (1 << (2 * j + 1))).unwrap();
            f.comps[p].iter_mut().for_each(|x| *x = T::one());
        }
        f
    }

    pub fn from_scalar(f: &ScalarField<T>) -> Self {
        Self { grid: f.grid, degree: 0, comps: vec![f.data.clone()] }
    }

    /// Scalar field times the top-degree basis form.
    pub fn top_from_scalar(f: &ScalarField<T>) -> Self {
        Self { grid: f.grid, degree: f.grid.dim(), comps: vec![f.data.clone()] }
    }

    /// Coefficient of a 0-form or a top-degree form.
    pub fn scalar_part(&self) -> ScalarField<T> {
        assert!(self.degree == 0 || self.degree == self.grid.dim(), "not a scalar-like form");
        ScalarField { grid: self.grid, data: self.comps[0].clone() }
    }

    /// Component along `dx^{indices}` (any order), with the permutation sign applied.
    pub fn component(&self, indices: &[usize]) -> Vec<T> {
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        let sign = crate::multi_index::sort_sign(indices);
        let b = self.basis();
        match (sign, b.position(crate::multi_index::mask_of(&sorted))) {
            (Some(s), Some(p)) => self.comps[p].iter().map(|v| *v * T::lit(s as f64)).collect(),
            _ => vec![T::zero(); self.grid.len()],
        }
    }

    pub fn scale(&self, c: T) -> Self {
        Self { grid: self.grid, degree: self.degree, comps: self.comps.iter().map(|v| v.iter().map(|x| *x * c).collect()).collect() }
    }

    pub fn axpy(&mut self, a: T, x: &Self) {
        assert_eq!(self.degree, x.degree, "degree mismatch");
        for (y, v) in self.comps.iter_mut().zip(&x.comps) {
            for (yi, vi) in y.iter_mut().zip(v) {
                *yi = *yi + a * *vi;
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut r = self.clone();
        r.axpy(T::one(), other);
        r
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut r = self.clone();
        r.axpy(-T::one(), other);
        r
    }

    pub fn max_abs(&self) -> T {
        self.comps.iter().flatten().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Root mean square over points of the Euclidean coefficient norm.
    pub fn rms(&self) -> T {
        let s: T = self.comps.iter().flatten().map(|v| *v * *v).sum();
        (s / T::lit(self.grid.len() as f64)).sqrt()
    }

    /// Multiply every component by a scalar field.
    pub fn mul_scalar(&self, f: &ScalarField<T>, dealias: bool) -> Self {
        wedge(&Self::from_scalar(f), self, dealias)
    }

    /// Integral of a top-degree form with respect to the coordinate orientation.
    pub fn integrate_top(&self) -> T {
        assert_eq!(self.degree, self.grid.dim(), "integrand must have top degree");
        self.scalar_part().integrate()
    }

    /// Apply a pointwise map point by point: `f(point, input, output)`.
    pub fn map_points(&self, out_degree: usize, f: impl Fn(usize, &[T], &mut [T]) + Sync) -> Self {
        let refs: Vec<&[T]> = self.comps.iter().map(|v| v.as_slice()).collect();
        let cout = Basis::new(self.grid.dim(), out_degree).len();
        Self { grid: self.grid, degree: out_degree, comps: map_fields(self.grid.len(), &refs, cout, f) }
    }
}

/// Pointwise map from `inputs.len()` fields to `cout` fields of length `len`.
pub(crate) fn map_fields<T: Real>(len: usize, inputs: &[&[T]], cout: usize, f: impl Fn(usize, &[T], &mut [T]) + Sync) -> Vec<Vec<T>> {
    map_fields_with(len, inputs, cout, 0, |p, inp, out, _| f(p, inp, out))
}

/// [`map_fields`] with a per-worker scratch buffer of `scratch` entries.
pub(crate) fn map_fields_with<T: Real>(
    len: usize,
    inputs: &[&[T]],
    cout: usize,
    scratch: usize,
    f: impl Fn(usize, &[T], &mut [T], &mut [T]) + Sync,
) -> Vec<Vec<T>> {
    let cin = inputs.len();
    let chunk = 4096.min(len).max(1);
    let pieces: Vec<Vec<T>> = (0..len.div_ceil(chunk))
        .into_par_iter()
        .map(|ci| {
            let start = ci * chunk;
            let end = (start + chunk).min(len);
            let mut inp = vec![T::zero(); cin];
            let mut out = vec![T::zero(); cout];
            let mut work = vec![T::zero(); scratch];
            let mut res = vec![T::zero(); (end - start) * cout];
            for p in start..end {
                for (c, v) in inp.iter_mut().enumerate() {
                    *v = inputs[c][p];
                }
                out.iter_mut().for_each(|v| *v = T::zero());
                f(p, &inp, &mut out, &mut work);
                res[(p - start) * cout..(p - start + 1) * cout].copy_from_slice(&out);
            }
            res
        })
        .collect();
    let mut comps = vec![vec![T::zero(); len]; cout];
    for (ci, piece) in pieces.iter().enumerate() {
        let start = ci * chunk;
        for (q, row) in piece.chunks(cout.max(1)).enumerate() {
            for (c, v) in row.iter().enumerate() {
                comps[c][start + q] = *v;
            }
        }
    }
    comps
}

/// Exterior product; with `dealias` every coefficient product uses the 3/2 rule.
pub fn wedge<T: Real>(a: &FormField<T>, b: &FormField<T>, dealias: bool) -> FormField<T> {
    assert_eq!(a.grid, b.grid, "grid mismatch");
    let grid = a.grid;
    let dim = grid.dim();
    let deg = a.degree + b.degree;
    if deg > dim {
        return FormField { grid, degree: deg, comps: Vec::new() };
    }
    let ba = a.basis();
    let bb = b.basis();
    let bo = Basis::new(dim, deg);
    let mut terms: Vec<(usize, usize, usize, T)> = Vec::new();
    for (i, ma) in ba.masks.iter().enumerate() {
        for (j, mb) in bb.masks.iter().enumerate() {
            let s = wedge_sign(*ma, *mb);
            if s != 0 {
                terms.push((i, j, bo.position(ma | mb).unwrap(), T::lit(s as f64)));
            }
        }
    }
    let constant = |v: &Vec<T>| v.iter().all(|x| *x == v[0]);
    let any_const = a.comps.iter().all(constant) || b.comps.iter().all(constant);
    if !dealias || any_const {
        let mut comps = vec![vec![T::zero(); grid.len()]; bo.len()];
        for (i, j, o, s) in terms {
            let (x, y) = (&a.comps[i], &b.comps[j]);
            for (p, out) in comps[o].iter_mut().enumerate() {
                *out = *out + s * x[p] * y[p];
            }
        }
        return FormField { grid, degree: deg, comps };
    }
    let refs: Vec<&[T]> = a.comps.iter().chain(b.comps.iter()).map(|v| v.as_slice()).collect();
    let up = upsample_batch(&grid, &refs);
    let na = a.comps.len();
    let flen = up[0].len();
    let mut fine = vec![vec![T::zero(); flen]; bo.len()];
    for (i, j, o, s) in terms {
        let (x, y) = (&up[i], &up[na + j]);
        for (p, out) in fine[o].iter_mut().enumerate() {
            *out = *out + s * x[p] * y[p];
        }
    }
    let frefs: Vec<&[T]> = fine.iter().map(|v| v.as_slice()).collect();
    FormField { grid, degree: deg, comps: truncate_batch(&grid, &frefs) }
}

/// Exterior derivative, spectrally.
pub fn exterior_derivative<T: Real>(a: &FormField<T>) -> FormField<T> {
    let dim = a.grid.dim();
    if a.degree >= dim {
        return FormField { grid: a.grid, degree: a.degree + 1, comps: Vec::new() };
    }
    let terms = derivative_terms(dim, a.degree);
    first_order(a, a.degree + 1, &terms)
}

/// `(out, in, axis, sign)` with `(dα)_out = Σ sign ∂_axis α_in`.
pub(crate) fn derivative_terms(dim: usize, degree: usize) -> Vec<(usize, usize, usize, f64)> {
    let ba = Basis::new(dim, degree);
    let bo = Basis::new(dim, degree + 1);
    let mut terms = Vec::new();
    for (o, mo) in bo.masks.iter().enumerate() {
        for i in indices_of(*mo) {
            let rest = mo & !(1 << i);
            terms.push((o, ba.position(rest).unwrap(), i, wedge_sign(1 << i, rest) as f64));
        }
    }
    terms
}

/// Constant-coefficient first-order operator `out_o = Σ c ∂_axis in_i`, spectrally,
/// over `(o, i, axis, c)` terms.
pub(crate) fn first_order<T: Real>(a: &FormField<T>, out_degree: usize, terms: &[(usize, usize, usize, f64)]) -> FormField<T> {
    let grid = a.grid;
    let nout = Basis::new(grid.dim(), out_degree).len();
    let used: Vec<usize> = {
        let mut u: Vec<usize> = terms.iter().map(|t| t.1).collect();
        u.sort_unstable();
        u.dedup();
        u
    };
    let refs: Vec<&[T]> = used.iter().map(|i| a.comps[*i].as_slice()).collect();
    let specs = forward_batch(&grid, &refs);
    let outs: Vec<Vec<Complex<T>>> = (0..nout)
        .into_par_iter()
        .map(|o| {
            let mut acc = vec![Complex::new(T::zero(), T::zero()); grid.len()];
            for (_, i, axis, c) in terms.iter().filter(|t| t.0 == o) {
                let src = used.binary_search(i).unwrap();
                apply_derivative_symbol(&grid, &specs[src], *axis, &mut acc, T::lit(*c));
            }
            acc
        })
        .collect();
    FormField { grid, degree: out_degree, comps: inverse_batch(&grid, outs) }
}

/// `T F Tᵀ` for the antisymmetric `F` with upper entries `inp` on `pairs`.
#[inline]
pub(crate) fn congruence2<T: Real>(m: &[T], d: usize, pairs: &[(usize, usize)], inp: &[T], out: &mut [T]) {
    let mut f = [T::zero(); 64];
    for (c, (i, j)) in pairs.iter().enumerate() {
        f[i * d + j] = inp[c];
        f[j * d + i] = -inp[c];
    }
    let mut tf = [T::zero(); 64];
    for i in 0..d {
        for q in 0..d {
            let t = m[i * d + q];
            if t != T::zero() {
                for l in 0..d {
                    tf[i * d + l] = tf[i * d + l] + t * f[q * d + l];
                }
            }
        }
    }
    for (c, (i, j)) in pairs.iter().enumerate() {
        let mut s = T::zero();
        for l in 0..d {
            s = s + tf[i * d + l] * m[j * d + l];
        }
        out[c] = s;
    }
}

pub(crate) fn pairs_of(basis: &Basis) -> Vec<(usize, usize)> {
    basis
        .masks
        .iter()
        .map(|mk| {
            let ix = indices_of(*mk);
            (ix[0], ix[1])
        })
        .collect()
}

/// Λ^k(T) applied at each point, `T` acting on covectors: `(Tα)_i = Σ_j T_ij α_j`.
pub fn pointwise_apply<T: Real>(a: &FormField<T>, t: &MatrixField<T>) -> FormField<T> {
    assert_eq!(a.grid, t.grid, "grid mismatch");
    let d = t.dim;
    let k = a.degree;
    let basis = a.basis();
    match k {
        0 => a.clone(),
        1 => a.map_points(1, |p, inp, out| {
            let m = t.at(p);
            for i in 0..d {
                out[i] = (0..d).fold(T::zero(), |s, j| s + m[i * d + j] * inp[j]);
            }
        }),
        2 => {
            let pairs = pairs_of(&basis);
            a.map_points(2, |p, inp, out| congruence2(t.at(p), d, &pairs, inp, out))
        }
        _ => {
            let plan = CompoundPlan::<T>::new(d, k);
            let refs: Vec<&[T]> = a.comps.iter().map(|v| v.as_slice()).collect();
            let comps = map_fields_with(a.grid.len(), &refs, basis.len(), plan.scratch(), |p, inp, out, work| plan.apply(t.at(p), inp, out, work));
            FormField { grid: a.grid, degree: k, comps }
        }
    }
}

/// Index tables for the compound matrices `Λ^j(T)`, j = 2..=k, by Laplace expansion along
/// the first row: `det T[R, C] = Σ_t (−1)^t T[r₀, c_t] det T[R∖r₀, C∖c_t]`.
struct CompoundPlan<T> {
    d: usize,
    levels: Vec<CompoundLevel<T>>,
}

struct CompoundLevel<T> {
    size: usize,
    prev_size: usize,
    /// Per row multi-index: its first index and the position of the rest one degree down.
    rows: Vec<(usize, usize)>,
    /// `j` terms per column multi-index: `(c_t, (−1)^t, position of C∖c_t)`.
    terms: Vec<(usize, T, usize)>,
    j: usize,
}

impl<T: Real> CompoundPlan<T> {
    fn new(d: usize, k: usize) -> Self {
        let mut levels = Vec::new();
        for j in 2..=k {
            let cur = Basis::new(d, j);
            let prev = Basis::new(d, j - 1);
            let rows = cur
                .masks
                .iter()
                .map(|mk| {
                    let r0 = mk.trailing_zeros() as usize;
                    (r0, prev.position(mk & !(1 << r0)).expect("subset is a basis element"))
                })
                .collect();
            let terms = cur
                .masks
                .iter()
                .flat_map(|mk| {
                    let prev = &prev;
                    indices_of(*mk).into_iter().enumerate().map(move |(t, c)| {
                        let sign = if t % 2 == 1 { -T::one() } else { T::one() };
                        (c, sign, prev.position(mk & !(1 << c)).expect("subset is a basis element"))
                    })
                })
                .collect();
            levels.push(CompoundLevel { size: cur.len(), prev_size: prev.len(), rows, terms, j });
        }
        Self { d, levels }
    }

    fn scratch(&self) -> usize {
        2 * self.levels.iter().map(|l| l.size * l.size).max().unwrap_or(0).max(self.d * self.d)
    }

    fn apply(&self, m: &[T], inp: &[T], out: &mut [T], work: &mut [T]) {
        let d = self.d;
        let half = work.len() / 2;
        let (mut prev, mut cur) = work.split_at_mut(half);
        prev[..d * d].copy_from_slice(&m[..d * d]);
        for lv in &self.levels {
            for (r, &(r0, rp)) in lv.rows.iter().enumerate() {
                let trow = &m[r0 * d..(r0 + 1) * d];
                let prow = &prev[rp * lv.prev_size..(rp + 1) * lv.prev_size];
                let dst = &mut cur[r * lv.size..(r + 1) * lv.size];
                for (c, slot) in dst.iter_mut().enumerate() {
                    let mut s = T::zero();
                    for &(ct, sign, cp) in &lv.terms[c * lv.j..(c + 1) * lv.j] {
                        s = s + sign * trow[ct] * prow[cp];
                    }
                    *slot = s;
                }
            }
            std::mem::swap(&mut prev, &mut cur);
        }
        let n = out.len();
        for (r, o) in out.iter_mut().enumerate() {
            let row = &prev[r * n..(r + 1) * n];
            *o = row.iter().zip(inp).fold(T::zero(), |s, (a, b)| s + *a * *b);
        }
    }
}
