//! Small dense matrices (row-major slices) and per-point matrix fields.

use crate::grid::GridSpec;
use crate::scalar::Real;

pub fn identity<T: Real>(d: usize) -> Vec<T> {
    let mut m = vec![T::zero(); d * d];
    for i in 0..d {
        m[i * d + i] = T::one();
    }
    m
}

pub fn matmul<T: Real>(a: &[T], b: &[T], d: usize) -> Vec<T> {
    let mut c = vec![T::zero(); d * d];
    for i in 0..d {
        for k in 0..d {
            let aik = a[i * d + k];
            if aik == T::zero() {
                continue;
            }
            for j in 0..d {
                c[i * d + j] = c[i * d + j] + aik * b[k * d + j];
            }
        }
    }
    c
}

pub fn transpose<T: Real>(a: &[T], d: usize) -> Vec<T> {
    let mut t = vec![T::zero(); d * d];
    for i in 0..d {
        for j in 0..d {
            t[j * d + i] = a[i * d + j];
        }
    }
    t
}

pub fn max_abs_diff<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |m, (x, y)| m.max((*x - *y).abs()))
}

fn norm_inf<T: Real>(a: &[T], d: usize) -> T {
    (0..d).fold(T::zero(), |m, i| m.max(a[i * d..i * d + d].iter().fold(T::zero(), |s, v| s + v.abs())))
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn inverse<T: Real>(a: &[T], d: usize) -> Option<Vec<T>> {
    let mut m = a.to_vec();
    let mut inv = identity::<T>(d);
    for c in 0..d {
        let p = (c..d).max_by(|&i, &j| m[i * d + c].abs().partial_cmp(&m[j * d + c].abs()).unwrap())?;
        if m[p * d + c].abs() <= T::min_positive_value() {
            return None;
        }
        if p != c {
            for j in 0..d {
                m.swap(p * d + j, c * d + j);
                inv.swap(p * d + j, c * d + j);
            }
        }
        let piv = T::one() / m[c * d + c];
        for j in 0..d {
            m[c * d + j] = m[c * d + j] * piv;
            inv[c * d + j] = inv[c * d + j] * piv;
        }
        for r in 0..d {
            if r == c {
                continue;
            }
            let f = m[r * d + c];
            if f == T::zero() {
                continue;
            }
            for j in 0..d {
                m[r * d + j] = m[r * d + j] - f * m[c * d + j];
                inv[r * d + j] = inv[r * d + j] - f * inv[c * d + j];
            }
        }
    }
    Some(inv)
}

/// Determinant by elimination; `a` is k×k.
pub fn det<T: Real>(a: &[T], k: usize) -> T {
    match k {
        0 => T::one(),
        1 => a[0],
        2 => a[0] * a[3] - a[1] * a[2],
        3 => {
            a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) + a[2] * (a[3] * a[7] - a[4] * a[6])
        }
        _ => {
            let mut m = a.to_vec();
            let mut s = T::one();
            for c in 0..k {
                let mut p = c;
                for r in c + 1..k {
                    if m[r * k + c].abs() > m[p * k + c].abs() {
                        p = r;
                    }
                }
                if m[p * k + c] == T::zero() {
                    return T::zero();
                }
                if p != c {
                    for j in 0..k {
                        m.swap(p * k + j, c * k + j);
                    }
                    s = -s;
                }
                s = s * m[c * k + c];
                for r in c + 1..k {
                    let f = m[r * k + c] / m[c * k + c];
                    for j in c..k {
                        m[r * k + j] = m[r * k + j] - f * m[c * k + j];
                    }
                }
            }
            s
        }
    }
}

/// Determinant of the submatrix of the d×d matrix `a` on the given rows and columns.
pub fn minor<T: Real>(a: &[T], d: usize, rows: &[usize], cols: &[usize]) -> T {
    let k = rows.len();
    let mut sub = [T::zero(); 64];
    for (i, r) in rows.iter().enumerate() {
        for (j, c) in cols.iter().enumerate() {
            sub[i * k + j] = a[r * d + c];
        }
    }
    det(&sub[..k * k], k)
}

/// exp(A) by scaling and squaring with a diagonal Padé approximant of degree 8.
pub fn expm<T: Real>(a: &[T], d: usize) -> Vec<T> {
    let nrm = norm_inf(a, d);
    let mut s = 0i32;
    let half = T::lit(0.5);
    while nrm * half.powi(s) > half {
        s += 1;
    }
    let scale = half.powi(s);
    let x: Vec<T> = a.iter().map(|v| *v * scale).collect();
    // Padé(8,8) coefficients c_j = (16-j)! 8! / (16! j! (8-j)!)
    let q = 8usize;
    let mut c = vec![1.0f64; q + 1];
    for j in 1..=q {
        c[j] = c[j - 1] * ((q + 1 - j) as f64) / ((j * (2 * q + 1 - j)) as f64);
    }
    let mut num = identity::<T>(d);
    let mut den = identity::<T>(d);
    let mut pw = identity::<T>(d);
    for (j, cj) in c.iter().enumerate().skip(1) {
        pw = matmul(&pw, &x, d);
        let sign = if j % 2 == 0 { T::one() } else { -T::one() };
        for i in 0..d * d {
            num[i] = num[i] + T::lit(*cj) * pw[i];
            den[i] = den[i] + sign * T::lit(*cj) * pw[i];
        }
    }
    let mut r = matmul(&inverse(&den, d).expect("Padé denominator singular"), &num, d);
    for _ in 0..s {
        r = matmul(&r, &r, d);
    }
    r
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues<T: Real>(a: &[T], d: usize) -> Vec<T> {
    let mut m = a.to_vec();
    for _sweep in 0..50 {
        let mut off = T::zero();
        for i in 0..d {
            for j in i + 1..d {
                off = off + m[i * d + j] * m[i * d + j];
            }
        }
        let diag = (0..d).fold(T::zero(), |s, i| s + m[i * d + i] * m[i * d + i]);
        if off <= T::epsilon() * T::epsilon() * diag * T::lit(1e-2) || off == T::zero() {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                let apq = m[p * d + q];
                if apq == T::zero() {
                    continue;
                }
                let theta = (m[q * d + q] - m[p * d + p]) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let t = if theta == T::zero() { T::one() } else { t };
                let cs = T::one() / (t * t + T::one()).sqrt();
                let sn = t * cs;
                for k in 0..d {
                    let mkp = m[k * d + p];
                    let mkq = m[k * d + q];
                    m[k * d + p] = cs * mkp - sn * mkq;
                    m[k * d + q] = sn * mkp + cs * mkq;
                }
                for k in 0..d {
                    let mpk = m[p * d + k];
                    let mqk = m[q * d + k];
                    m[p * d + k] = cs * mpk - sn * mqk;
                    m[q * d + k] = sn * mpk + cs * mqk;
                }
            }
        }
    }
    let mut ev: Vec<T> = (0..d).map(|i| m[i * d + i]).collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky<T: Real>(a: &[T], d: usize) -> Option<Vec<T>> {
    let mut l = vec![T::zero(); d * d];
    for i in 0..d {
        for j in 0..=i {
            let s = (0..j).fold(a[i * d + j], |s, k| s - l[i * d + k] * l[j * d + k]);
            if i == j {
                if s <= T::zero() {
                    return None;
                }
                l[i * d + i] = s.sqrt();
            } else {
                l[i * d + j] = s / l[j * d + j];
            }
        }
    }
    Some(l)
}

/// Smallest μ with `B v = μ A v`, for symmetric `B` and positive definite `A`.
pub fn generalized_min_eigenvalue<T: Real>(a: &[T], b: &[T], d: usize) -> Option<T> {
    let l = cholesky(a, d)?;
    let linv = inverse(&l, d)?;
    let c = matmul(&matmul(&linv, b, d), &transpose(&linv, d), d);
    let sym: Vec<T> = (0..d * d).map(|i| (c[i] + c[(i % d) * d + i / d]) * T::lit(0.5)).collect();
    Some(symmetric_eigenvalues(&sym, d)[0])
}

/// Pfaffian of an antisymmetric matrix of even size, by expansion along the first row.
pub fn pfaffian<T: Real>(a: &[T], d: usize) -> T {
    fn rec<T: Real>(a: &[T], d: usize, idx: &[usize]) -> T {
        if idx.is_empty() {
            return T::one();
        }
        let i0 = idx[0];
        let mut s = T::zero();
        for j in 1..idx.len() {
            let rest: Vec<usize> = idx.iter().enumerate().filter(|(p, _)| *p != 0 && *p != j).map(|(_, v)| *v).collect();
            let sign = if j % 2 == 1 { T::one() } else { -T::one() };
            s = s + sign * a[i0 * d + idx[j]] * rec(a, d, &rest);
        }
        s
    }
    let idx: Vec<usize> = (0..d).collect();
    rec(a, d, &idx)
}

/// A d×d matrix at every grid point, point-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixField<T: Real> {
    pub grid: GridSpec,
    pub dim: usize,
    pub data: Vec<T>,
}

impl<T: Real> MatrixField<T> {
    pub fn from_fn(grid: GridSpec, dim: usize, f: impl Fn(usize) -> Vec<T>) -> Self {
        let mut data = Vec::with_capacity(grid.len() * dim * dim);
        for p in 0..grid.len() {
            let m = f(p);
            debug_assert_eq!(m.len(), dim * dim);
            data.extend_from_slice(&m);
        }
        Self { grid, dim, data }
    }

    pub fn constant(grid: GridSpec, m: &[T]) -> Self {
        let dim = (m.len() as f64).sqrt() as usize;
        Self::from_fn(grid, dim, |_| m.to_vec())
    }

    pub fn at(&self, p: usize) -> &[T] {
        let s = self.dim * self.dim;
        &self.data[p * s..(p + 1) * s]
    }

    /// Entry (i, j) as a flat array over grid points.
    pub fn entry(&self, i: usize, j: usize) -> Vec<T> {
        let s = self.dim * self.dim;
        (0..self.grid.len()).map(|p| self.data[p * s + i * self.dim + j]).collect()
    }

    pub fn map(&self, f: impl Fn(&[T]) -> Vec<T>) -> Self {
        Self::from_fn(self.grid, self.dim, |p| f(self.at(p)))
    }

    pub fn transpose(&self) -> Self {
        self.map(|m| transpose(m, self.dim))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generalized_eigenvalue_of_diagonal_pencil() {
        let a = vec![2.0, 0.0, 0.0, 4.0f64];
        let b = vec![-1.0, 0.0, 0.0, 1.0f64];
        let mu = generalized_min_eigenvalue(&a, &b, 2).unwrap();
        assert!((mu + 0.5).abs() < 1e-14);
        let l = cholesky(&a, 2).unwrap();
        assert!(max_abs_diff(&matmul(&l, &transpose(&l, 2), 2), &a) < 1e-14);
        assert!(cholesky(&b, 2).is_none());
    }

    #[test]
    fn inverse_and_det() {
        let a = vec![4.0, 1.0, 2.0, 0.5, 3.0, 1.0, 2.0, -1.0, 5.0f64];
        let inv = inverse(&a, 3).unwrap();
        assert!(max_abs_diff(&matmul(&a, &inv, 3), &identity(3)) < 1e-14);
        let d3 = det(&a, 3);
        let mut big = identity::<f64>(5);
        big[0] = 2.0;
        big[1] = 1.0;
        big[5] = 1.0;
        big[24] = 3.0;
        assert!((det(&big, 5) - 3.0 * (2.0 - 1.0)).abs() < 1e-13);
        assert!((d3 - (4.0 * (15.0 + 1.0) - 1.0 * (2.5 - 2.0) + 2.0 * (-0.5 - 6.0))).abs() < 1e-12);
    }

    #[test]
    fn expm_rotation() {
        let t = 0.7f64;
        let a = vec![0.0, -t, t, 0.0];
        let e = expm(&a, 2);
        let expect = vec![t.cos(), -t.sin(), t.sin(), t.cos()];
        assert!(max_abs_diff(&e, &expect) < 1e-15);
        // large norm exercises squaring
        let b = vec![0.0, -9.0, 9.0, 0.0];
        let e = expm(&b, 2);
        assert!((e[0] - 9.0f64.cos()).abs() < 1e-12);
    }

    #[test]
    fn expm_matches_series() {
        let a = vec![0.1, 0.3, -0.2, 0.05, -0.1, 0.2, 0.15, 0.0, 0.02];
        let mut sum = identity::<f64>(3);
        let mut term = identity::<f64>(3);
        for k in 1..30 {
            term = matmul(&term, &a, 3).iter().map(|v| v / k as f64).collect();
            for i in 0..9 {
                sum[i] += term[i];
            }
        }
        assert!(max_abs_diff(&expm(&a, 3), &sum) < 1e-15);
    }

    #[test]
    fn jacobi_eigenvalues() {
        let a = vec![2.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 5.0f64];
        let ev = symmetric_eigenvalues(&a, 3);
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14 && (ev[2] - 5.0).abs() < 1e-14);
    }

    #[test]
    fn pfaffian_squares_to_det() {
        let mut a = vec![0.0f64; 36];
        let vals = [0.3, -1.2, 0.7, 2.0, 0.1, 0.5, -0.4, 1.1, 0.9, -0.6, 0.25, 1.7, -0.8, 0.35, 0.6];
        let mut c = 0;
        for i in 0..6 {
            for j in i + 1..6 {
                a[i * 6 + j] = vals[c];
                a[j * 6 + i] = -vals[c];
                c += 1;
            }
        }
        let pf = pfaffian(&a, 6);
        assert!((pf * pf - det(&a, 6)).abs() < 1e-12);
        let std = vec![0.0, 1.0, -1.0, 0.0];
        assert_eq!(pfaffian(&std, 2), 1.0);
    }
}
