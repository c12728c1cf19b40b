//! Direct evaluation of the integrable-case functionals from the analytic potential.
//!
//! For the flat structure, `dJdφ` has the constant-coefficient matrix
//! `X = −(H J₀ + J₀ H)` with `H` the Hessian. The top forms `X^j ∧ ω^{m−j}` are the
//! coefficients of `m!·Pf(Ω + tX)` in `t`, recovered by a Vandermonde solve; nothing
//! here touches the exterior algebra of the core crate.

use aktorus::functionals::total_volume;
use aktorus::linalg::pfaffian;
use aktorus::multi_index::{binomial, factorial};
use aktorus::sampler::TrigPolynomial;
use aktorus::structure::standard_omega_matrix;
use aktorus::{GridSpec, ScalarField};
use num_complex::Complex;
use rayon::prelude::*;

/// Even size at least 1.5 times `n`.
pub fn finer(n: usize) -> usize {
    let f = (3 * n).div_ceil(2);
    f + f % 2
}

#[derive(Debug, Clone, PartialEq)]
pub struct KahlerQuadrature {
    pub n: usize,
    /// `∫ φ ω₁^k ∧ ω^{m−k}`, k = 0..=m.
    pub mixed: Vec<f64>,
    pub aubin_i: f64,
    pub aubin_j: f64,
    /// `(1/((m+1)V)) Σ_k ∫ φ ω₁^k ∧ ω^{m−k}`
    pub donaldson: f64,
}

/// Field of `Σ_k w(k) c_k e^{ik·x}` on `grid`.
fn synthesize(poly: &TrigPolynomial<f64>, grid: GridSpec, w: impl Fn(&[i64]) -> f64) -> Vec<f64> {
    let mut spec = vec![Complex::new(0.0, 0.0); grid.len()];
    for (k, c) in &poly.terms {
        let idx: usize = k.iter().enumerate().map(|(a, ka)| ka.rem_euclid(grid.n as i64) as usize * grid.stride(a)).sum();
        spec[idx] += *c * w(k);
    }
    ScalarField::from_spectrum(grid, &spec).data
}

/// Nodes in [-1, 1] and the inverse of their Vandermonde matrix (row j gives coefficient j).
fn vandermonde_inverse(m: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let p = m + 1;
    let t: Vec<f64> = (0..p).map(|i| -1.0 + 2.0 * i as f64 / m as f64).collect();
    let mut a: Vec<Vec<f64>> = t.iter().map(|ti| (0..p).map(|j| ti.powi(j as i32)).collect()).collect();
    let mut inv: Vec<Vec<f64>> = (0..p).map(|i| (0..p).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for col in 0..p {
        let piv = (col..p).max_by(|x, y| a[*x][col].abs().total_cmp(&a[*y][col].abs())).unwrap();
        a.swap(col, piv);
        inv.swap(col, piv);
        let d = a[col][col];
        for j in 0..p {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for r in 0..p {
            if r != col {
                let f = a[r][col];
                for j in 0..p {
                    a[r][j] -= f * a[col][j];
                    inv[r][j] -= f * inv[col][j];
                }
            }
        }
    }
    (t, inv)
}

/// I′, J′ and the mixed integrals of `φ = poly` for the flat structure, on an `n`-point grid.
/// Exact when `(m+1)·band < n`.
pub fn kahler_quadrature(poly: &TrigPolynomial<f64>, m: usize, n: usize) -> KahlerQuadrature {
    let grid = GridSpec::new(m, n).expect("valid grid");
    let d = 2 * m;
    let omega: Vec<f64> = standard_omega_matrix(m);
    let j0: Vec<f64> = omega.iter().map(|v| -v).collect();
    let phi = synthesize(poly, grid, |_| 1.0);
    let mut hess = vec![Vec::new(); d * d];
    for i in 0..d {
        for j in i..d {
            let h = synthesize(poly, grid, |k| -((k[i] * k[j]) as f64));
            if i != j {
                hess[j * d + i] = h.clone();
            }
            hess[i * d + j] = h;
        }
    }
    let (nodes, vinv) = vandermonde_inverse(m);
    let mf = factorial(m);
    // Σ_p φ(p)·c_j(p) with c_j the t^j coefficient of m!·Pf(Ω + tX).
    let sums = (0..grid.len())
        .into_par_iter()
        .map(|p| {
            let h: Vec<f64> = hess.iter().map(|c| c[p]).collect();
            let mut x = vec![0.0; d * d];
            for a in 0..d {
                for b in 0..d {
                    let mut s = 0.0;
                    for c in 0..d {
                        s += h[a * d + c] * j0[c * d + b] + j0[a * d + c] * h[c * d + b];
                    }
                    x[a * d + b] = -s;
                }
            }
            let vals: Vec<f64> = nodes
                .iter()
                .map(|t| {
                    let w: Vec<f64> = omega.iter().zip(&x).map(|(o, xx)| o + t * xx).collect();
                    mf * pfaffian(&w, d)
                })
                .collect();
            (0..=m).map(|j| phi[p] * vinv[j].iter().zip(&vals).map(|(a, v)| a * v).sum::<f64>()).collect::<Vec<f64>>()
        })
        .reduce(|| vec![0.0; m + 1], |a, b| a.iter().zip(&b).map(|(u, v)| u + v).collect());
    let cell = (2.0 * std::f64::consts::PI / n as f64).powi(d as i32);
    // c_j = C(m,j) · X^j ω^{m−j} / vol
    let xj: Vec<f64> = (0..=m).map(|j| sums[j] * cell / binomial(m, j) as f64).collect();
    let mixed: Vec<f64> = (0..=m).map(|k| (0..=k).map(|j| binomial(k, j) as f64 * xj[j]).sum()).collect();
    let v = total_volume(m);
    let aubin_i = -(mixed[m] - mixed[0]) / v;
    let aubin_j = -(0..m).map(|k| (m - k) as f64 / (m + 1) as f64 * (mixed[k + 1] - mixed[k])).sum::<f64>() / v;
    let donaldson = mixed.iter().sum::<f64>() / ((m + 1) as f64 * v);
    KahlerQuadrature { n, mixed, aubin_i, aubin_j, donaldson }
}

#[cfg(test)]
mod tests {
    use super::*;
    use aktorus::elliptic::SolverConfig;
    use aktorus::exterior::FormField;
    use aktorus::multi_index::Basis;
    use aktorus::{build_structure, Structure64, StructureRecipe};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn finer_sizes() {
        assert_eq!(finer(8), 12);
        assert_eq!(finer(16), 24);
        assert_eq!(finer(10), 16);
    }

    #[test]
    fn vandermonde_recovers_coefficients() {
        for m in [2usize, 3] {
            let (t, inv) = vandermonde_inverse(m);
            let coef: Vec<f64> = (0..=m).map(|j| 1.0 + j as f64).collect();
            let vals: Vec<f64> = t.iter().map(|x| coef.iter().enumerate().map(|(j, c)| c * x.powi(j as i32)).sum()).collect();
            for j in 0..=m {
                let c: f64 = inv[j].iter().zip(&vals).map(|(a, v)| a * v).sum();
                assert!((c - coef[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn matrix_of_djd_matches_spectral_form() {
        let grid = GridSpec::new(2, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let poly = TrigPolynomial::<f64>::random(4, 1, true, &mut rng);
        let st: Structure64 = build_structure(grid, StructureRecipe { epsilon: 0.0, ..Default::default() }).unwrap();
        let djd: FormField<f64> = st.d_j_d(&poly.sample(grid));
        let omega: Vec<f64> = standard_omega_matrix(2);
        let j0: Vec<f64> = omega.iter().map(|v| -v).collect();
        let basis = Basis::new(4, 2);
        for p in [0usize, 17, 301] {
            let x: Vec<f64> = (0..4).map(|a| grid.coord(p, a)).collect();
            let h = poly.hessian(&x);
            for (c, mask) in basis.masks.iter().enumerate() {
                let ix = aktorus::multi_index::indices_of(*mask);
                let (a, b) = (ix[0], ix[1]);
                let s: f64 = (0..4).map(|c| h[a * 4 + c] * j0[c * 4 + b] + j0[a * 4 + c] * h[c * 4 + b]).sum();
                assert!((djd.comps[c][p] + s).abs() < 1e-12, "p={p} comp={c}");
            }
        }
    }

    #[test]
    fn agrees_with_wedge_assembly() {
        let grid = GridSpec::new(2, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let poly = TrigPolynomial::<f64>::random(4, 1, true, &mut rng).scaled(0.01);
        let st: Structure64 = build_structure(grid, StructureRecipe { epsilon: 0.0, ..Default::default() }).unwrap();
        let state = st.potential_state(&poly.sample(grid), &SolverConfig::default()).unwrap();
        let terms = state.terms_with(&st);
        let q = kahler_quadrature(&poly, 2, finer(8));
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
        assert!(rel(q.aubin_i, terms.aubin_i()) < 1e-10, "{} {}", q.aubin_i, terms.aubin_i());
        assert!(rel(q.aubin_j, terms.aubin_j()) < 1e-10);
        for k in 0..=2 {
            assert!((q.mixed[k] - terms.phi_mixed[k]).abs() < 1e-10 * terms.volume);
        }
    }
}
