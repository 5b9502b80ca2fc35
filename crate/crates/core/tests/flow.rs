mod common;

use common::OdeOracle;
use proptest::prelude::*;
use roughflow::flow::{action, boundary_momentum, chapman_residual, lipschitz_probe, solve_flow};
use roughflow::hamiltonians::TimeFn;
use roughflow::linalg::{max_abs, Mat, Vector};
use roughflow::paths::{make_brownian, mollify};
use roughflow::{FlowOptions, Hamiltonian64, Noise64, TimeGrid64};

fn grid(n: usize) -> TimeGrid64 {
    TimeGrid64::new(0.0, 1.0, n).unwrap()
}

fn forced_harmonic() -> Hamiltonian64 {
    Hamiltonian64::harmonic(1)
        .with_linear(TimeFn::Const(Vector::from_vec(vec![0.3])), TimeFn::Const(Vector::from_vec(vec![-0.2])))
        .with_scalar(TimeFn::Const(0.1))
}

fn vmax(v: &Vector<f64>) -> f64 {
    v.amax()
}

#[test]
fn brownian_flow_matches_piecewise_ode() {
    let beta = make_brownian(11, grid(129), 1.0);
    let h = forced_harmonic();
    let k = Noise64::scalar_potential(1, 0.8).with_linear(Vector::from_vec(vec![0.25, 0.0])).unwrap();
    let (t, s) = (0.7, -0.55);
    let flow = solve_flow(&h, &k, &beta, t, s, &FlowOptions::default()).unwrap();
    let oracle = OdeOracle { h: &h, k: &k, beta: &beta };
    let (f, v) = oracle.flow(t, s, 40);
    assert!(max_abs(&(&flow.f - f)) < 1e-9, "F mismatch");
    assert!(vmax(&(&flow.v - v)) < 1e-9, "v mismatch");
    let z = Vector::from_vec(vec![0.4, -1.1]);
    let (_, act) = oracle.run(&z, t, s, 40);
    assert!((flow.action_from(&z) - act).abs() < 1e-9, "action {} vs {}", flow.action_from(&z), act);
}

#[test]
fn mollified_flow_matches_ode_in_two_dimensions() {
    let beta = mollify(&make_brownian(3, grid(65), 1.0), 0.01).unwrap();
    let h = Hamiltonian64::rotating_trap(2, 0.7).unwrap();
    let k = Noise64::rotation(2, 0.5, 0.3).unwrap();
    let (t, s) = (0.4, -0.3);
    let flow = solve_flow(&h, &k, &beta, t, s, &FlowOptions::default()).unwrap();
    let (f, v) = OdeOracle { h: &h, k: &k, beta: &beta }.flow(t, s, 40);
    assert!(max_abs(&(&flow.f - f)) < 1e-8);
    assert!(vmax(&(&flow.v - v)) < 1e-10);
}

#[test]
fn boundary_momentum_round_trip_and_action() {
    let beta = make_brownian(5, grid(257), 1.0);
    let h = forced_harmonic();
    let k = Noise64::scalar_potential(1, 1.0);
    let (t, s) = (0.5, -0.2);
    let flow = solve_flow(&h, &k, &beta, t, s, &FlowOptions::default()).unwrap();
    let (x, y) = (Vector::from_vec(vec![0.9]), Vector::from_vec(vec![-0.3]));
    let p = boundary_momentum(&flow, &x, &y).unwrap();
    let end = flow.apply(&Vector::from_vec(vec![y[0], p[0]]));
    assert!((end[0] - x[0]).abs() < 1e-9);
    let (_, act) = OdeOracle { h: &h, k: &k, beta: &beta }.run(&Vector::from_vec(vec![y[0], p[0]]), t, s, 20);
    assert!((action(&flow, &x, &y).unwrap() - act).abs() < 1e-9);
}

#[test]
fn harmonic_boundary_momentum_and_classical_action() {
    let beta = roughflow::DriverPath64::zero(grid(33));
    let h = Hamiltonian64::harmonic(1);
    let flow = solve_flow(&h, &Noise64::zero(1), &beta, 0.9, 0.0, &FlowOptions::default()).unwrap();
    let (x, y) = (0.7, -0.4);
    let dl: f64 = 0.9;
    let p = boundary_momentum(&flow, &Vector::from_vec(vec![x]), &Vector::from_vec(vec![y])).unwrap();
    assert!((p[0] - (x - y * dl.cos()) / dl.sin()).abs() < 1e-10);
    let s = action(&flow, &Vector::from_vec(vec![x]), &Vector::from_vec(vec![y])).unwrap();
    let exact = ((x * x + y * y) * dl.cos() - 2.0 * x * y) / (2.0 * dl.sin());
    assert!((s - exact).abs() < 1e-10);
}

#[test]
fn chapman_kolmogorov_holds_on_brownian_path() {
    let beta = make_brownian(21, grid(257), 1.0);
    let h = forced_harmonic();
    let k = Noise64::scalar_potential(1, 1.0);
    let r = chapman_residual(&h, &k, &beta, 0.6, 0.1, -0.5, &FlowOptions::default()).unwrap();
    assert!(r < 1e-9, "{r}");
}

#[test]
fn lipschitz_probe_trivial_cases() {
    let beta = make_brownian(2, grid(65), 1.0);
    let h = Hamiltonian64::harmonic(1);
    let k = Noise64::scalar_potential(1, 1.0);
    let o = FlowOptions::default();
    let z = Vector::from_vec(vec![1.0, 0.5]);
    assert_eq!(lipschitz_probe(&h, &k, &beta, &beta, 0.5, 0.0, &z, &o).unwrap(), (0.0, 0.0));
    let other = make_brownian(9, grid(65), 1.0);
    let (a, _) = lipschitz_probe(&h, &k, &beta, &other, 0.5, 0.0, &Vector::zeros(2), &o).unwrap();
    assert_eq!(a, 0.0);
}

#[test]
fn lipschitz_ratio_stays_bounded_under_mollification() {
    let beta = make_brownian(4, grid(1025), 1.0);
    let h = Hamiltonian64::harmonic(1);
    let k = Noise64::scalar_potential(1, 1.0);
    let mut o = FlowOptions::default();
    o.project = false;
    let z = Vector::from_vec(vec![1.0, -0.5]);
    let ratios: Vec<f64> = (4..=9)
        .map(|kk| {
            let m = mollify(&beta, 2f64.powi(-kk)).unwrap();
            let (a, b) = lipschitz_probe(&h, &k, &beta, &m, 0.6, -0.6, &z, &o).unwrap();
            a / b
        })
        .collect();
    let max = ratios.iter().cloned().fold(0.0, f64::max);
    assert!(max < 10.0, "{ratios:?}");
}

#[test]
fn noise_exponential_bound() {
    let k = Noise64::rotation(2, 0.8, 0.5).unwrap();
    let gamma = roughflow::linalg::spectral_norm(&k.s().generator());
    for delta in [-1.5, -0.2, 0.3, 2.0] {
        let n = roughflow::linalg::spectral_norm(&roughflow::flow::phi_noise(&k, delta));
        assert!(n <= (gamma * f64::abs(delta)).exp() * (1.0 + 1e-12));
    }
}

fn random_quadratic(d: usize, c: &[f64]) -> (Hamiltonian64, Noise64) {
    let sym = |off: usize| {
        let m = Mat::from_fn(d, d, |i, j| c[(off + i * d + j) % c.len()]);
        (&m + m.transpose()) * 0.5
    };
    let l = Mat::from_fn(d, d, |i, j| c[(7 + i + 2 * j) % c.len()]);
    let e = sym(3) + Mat::identity(d, d) * 2.0;
    let h = Hamiltonian64::constant(sym(0), l, e).unwrap();
    let k = Noise64::potential(sym(5)).unwrap();
    (h, k)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn flows_are_symplectic(seed in 0u64..1000, d in 1usize..=3, c in prop::collection::vec(-1.0f64..1.0, 16)) {
        let beta = make_brownian(seed, grid(129), 1.0);
        let (h, k) = random_quadratic(d, &c);
        let f = solve_flow(&h, &k, &beta, 0.45, -0.35, &FlowOptions::default()).unwrap();
        prop_assert!(f.symplectic_residual() < 1e-9);
    }

    #[test]
    fn flows_invert_under_time_reversal(seed in 0u64..1000, c in prop::collection::vec(-1.0f64..1.0, 16)) {
        let beta = make_brownian(seed, grid(129), 1.0);
        let (h, k) = random_quadratic(2, &c);
        let o = FlowOptions::default();
        let fw = solve_flow(&h, &k, &beta, 0.3, -0.2, &o).unwrap();
        let bw = solve_flow(&h, &k, &beta, -0.2, 0.3, &o).unwrap();
        prop_assert!(max_abs(&(fw.then(&bw).extended() - Mat::identity(6, 6))) < 1e-9);
    }
}
