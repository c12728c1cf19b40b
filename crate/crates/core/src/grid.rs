//! Uniform periodic grids on the torus of period 2π.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// `n` points per axis on `2m` axes. Flat index is row-major, axis 0 slowest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    pub m: usize,
    pub n: usize,
}

impl GridSpec {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidGrid(format!("half-dimension m={m} must be >= 2")));
        }
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!("points per axis n={n} must be even and >= 8")));
        }
        if m > 4 {
            return Err(Error::InvalidGrid(format!("m={m} too large for dense grids")));
        }
        Ok(Self { m, n })
    }

    /// Same shape with a different resolution; no validation of `n`.
    pub(crate) fn with_n(&self, n: usize) -> Self {
        Self { m: self.m, n }
    }

    pub fn dim(&self) -> usize {
        2 * self.m
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing<T: Real>(&self) -> T {
        T::TAU() / T::lit(self.n as f64)
    }

    /// Stride of axis `a` in the flat layout.
    pub fn stride(&self, a: usize) -> usize {
        self.n.pow((self.dim() - 1 - a) as u32)
    }

    pub fn axis_index(&self, flat: usize, a: usize) -> usize {
        (flat / self.stride(a)) % self.n
    }

    pub fn coord<T: Real>(&self, flat: usize, a: usize) -> T {
        T::lit(self.axis_index(flat, a) as f64) * self.spacing::<T>()
    }

    /// (2π)^{2m}
    pub fn torus_volume<T: Real>(&self) -> T {
        T::TAU().powi(self.dim() as i32)
    }

    /// Flat index of the mode `-k` for the mode stored at `flat`.
    pub fn negated(&self, flat: usize) -> usize {
        let mut out = 0;
        for a in 0..self.dim() {
            let j = self.axis_index(flat, a);
            out += ((self.n - j) % self.n) * self.stride(a);
        }
        out
    }
}

/// Signed wavenumber of FFT bin `j` on an axis of `n` points; the Nyquist bin maps to `n/2`.
pub fn wavenumber(j: usize, n: usize) -> i64 {
    if j <= n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Wavenumber used by the first derivative: zero at Nyquist.
pub fn derivative_wavenumber(j: usize, n: usize) -> i64 {
    if n % 2 == 0 && j == n / 2 {
        0
    } else {
        wavenumber(j, n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(GridSpec::new(1, 16).is_err());
        assert!(GridSpec::new(2, 7).is_err());
        assert!(GridSpec::new(2, 6).is_err());
        assert!(GridSpec::new(2, 16).is_ok());
    }

    #[test]
    fn layout() {
        let g = GridSpec::new(2, 8).unwrap();
        assert_eq!(g.len(), 4096);
        let flat = 3 * 512 + 5 * 64 + 7 * 8 + 1;
        assert_eq!(g.axis_index(flat, 0), 3);
        assert_eq!(g.axis_index(flat, 2), 7);
        let neg = g.negated(flat);
        assert_eq!(g.axis_index(neg, 0), 5);
        assert_eq!(g.axis_index(neg, 3), 7);
        assert_eq!(g.negated(0), 0);
    }

    #[test]
    fn wavenumbers() {
        let ks: Vec<i64> = (0..8).map(|j| wavenumber(j, 8)).collect();
        assert_eq!(ks, vec![0, 1, 2, 3, 4, -3, -2, -1]);
        assert_eq!(derivative_wavenumber(4, 8), 0);
    }
}
