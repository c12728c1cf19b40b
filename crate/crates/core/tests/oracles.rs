//! Closed-form values the discrete operators must reproduce.

use aktorus::functionals::total_volume;
use aktorus::multi_index::{mask_of, Basis};
use aktorus::symplectic::{lefschetz, partial_minus};
use aktorus::{build_structure, exterior_derivative, wedge, FormField, GridSpec, ScalarField, StructureRecipe, Structure64};

fn flat(m: usize) -> Structure64 {
    build_structure(GridSpec::new(m, 8).unwrap(), StructureRecipe { epsilon: 0.0, ..Default::default() }).unwrap()
}

fn two_form(grid: GridSpec, terms: &[(&[usize], &ScalarField<f64>)]) -> FormField<f64> {
    let basis = Basis::new(grid.dim(), 2);
    let mut comps = vec![vec![0.0; grid.len()]; basis.len()];
    for (ix, f) in terms {
        comps[basis.position(mask_of(ix)).unwrap()] = f.data.clone();
    }
    FormField::from_components(grid, 2, comps).unwrap()
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

#[test]
fn derivative_of_trig_monomial() {
    let grid = GridSpec::new(2, 8).unwrap();
    let f = ScalarField::<f64>::from_fn(grid, |x| (2.0 * x[1]).sin() * x[3].cos());
    let want = ScalarField::<f64>::from_fn(grid, |x| 2.0 * (2.0 * x[1]).cos() * x[3].cos());
    assert!(close(&f.partial_derivative(1).data, &want.data, 1e-12));
    let lap = ScalarField::<f64>::from_fn(grid, |x| -5.0 * (2.0 * x[1]).sin() * x[3].cos());
    assert!(close(&f.laplacian().data, &lap.data, 1e-11));
}

#[test]
fn integral_of_constant_is_torus_volume() {
    let grid = GridSpec::new(2, 8).unwrap();
    let one = ScalarField::<f64>::constant(grid, 1.0);
    let tau = 2.0 * std::f64::consts::PI;
    assert!((one.integrate() - tau.powi(4)).abs() < 1e-9);
}

#[test]
fn top_power_of_omega_integrates_to_volume() {
    for m in [2, 3] {
        let grid = GridSpec::new(m, 8).unwrap();
        let mut w = FormField::<f64>::from_scalar(&ScalarField::constant(grid, 1.0));
        for _ in 0..m {
            w = lefschetz(&w);
        }
        assert!((w.integrate_top() - total_volume(m)).abs() < 1e-8 * total_volume(m));
    }
}

#[test]
fn wedge_of_coordinate_one_forms() {
    let grid = GridSpec::new(2, 8).unwrap();
    let e = |i: usize| {
        let mut a = FormField::<f64>::zeros(grid, 1);
        a.comps[i] = vec![1.0; grid.len()];
        a
    };
    let w = wedge(&e(2), &e(0), false);
    assert!(w.component(&[0, 2]).iter().all(|v| (*v + 1.0).abs() < 1e-15));
}

#[test]
fn codifferential_of_anti_invariant_hand_example() {
    // σ = sin x0 (dx0∧dx2 − dx1∧dx3) on the flat torus: d*σ = −cos x0 dx2
    let st = flat(2);
    let grid = st.grid;
    let s = ScalarField::<f64>::from_fn(grid, |x| x[0].sin());
    let sigma = two_form(grid, &[(&[0, 2], &s), (&[1, 3], &s.scale(-1.0))]);
    assert!(st.minus_part(&sigma).sub(&sigma).max_abs() < 1e-14);
    let ds = st.codifferential(&sigma);
    let want = ScalarField::<f64>::from_fn(grid, |x| -x[0].cos());
    assert!(close(&ds.comps[2], &want.data, 1e-12));
    for i in [0, 1, 3] {
        assert!(ds.comps[i].iter().all(|v| v.abs() < 1e-12));
    }
    // the same form through −(m−1)J∂₋σ
    let alt = st.act_j(&partial_minus(&sigma)).scale(-1.0);
    assert!(alt.sub(&ds).max_abs() < 1e-12);
}

#[test]
fn flat_djd_traces_to_the_laplacian() {
    // flat torus: ω^{m-1} ∧ dJdf / ω^m = (1/m) Σ ∂²f
    let st = flat(2);
    let f = ScalarField::<f64>::from_fn(st.grid, |x| (x[0] + 2.0 * x[3]).cos());
    let trace = aktorus::elliptic::trace_against_omega(&st.d_j_d(&f));
    let lap = f.laplacian();
    assert!(close(&trace.data, &lap.scale(0.5).data, 1e-11), "{:?} {:?}", &trace.data[..3], &lap.data[..3]);
}

#[test]
fn exterior_derivative_of_exact_form() {
    let grid = GridSpec::new(2, 8).unwrap();
    let f = ScalarField::<f64>::from_fn(grid, |x| (x[0] - x[2]).sin());
    let df = exterior_derivative(&FormField::from_scalar(&f));
    let c = ScalarField::<f64>::from_fn(grid, |x| (x[0] - x[2]).cos());
    assert!(close(&df.comps[0], &c.data, 1e-12));
    assert!(close(&df.comps[2], &c.scale(-1.0).data, 1e-12));
    assert!(exterior_derivative(&df).max_abs() < 1e-12);
}

#[test]
fn single_precision_matches_double() {
    let g = GridSpec::new(2, 8).unwrap();
    let f64f = ScalarField::<f64>::from_fn(g, |x| x[0].sin() * x[1].cos());
    let f32f = ScalarField::<f32>::from_fn(g, |x| x[0].sin() * x[1].cos());
    let a = f64f.laplacian();
    let b = f32f.laplacian();
    assert!(a.data.iter().zip(&b.data).all(|(x, y)| (x - *y as f64).abs() < 1e-5));
}
