//! Empirical horizon: the largest `Δ` for which the flow on `[s, s + Δ]`
//! contracts and `|det B(u, s)|/(u − s)^d` stays above `gamma_min` throughout.

use roughflow::flow::solve_flow;
use roughflow::scenario::Task;
use roughflow::{DriverPath64, Hamiltonian64, Noise64, Scenario};

use crate::failure::Failure;

/// Shortest horizon probed; below it `det B/Δ^d` is not resolved.
pub const MIN_HORIZON: f64 = 1e-3;

fn start_time(task: &Task) -> f64 {
    match task {
        Task::Flow { s, .. }
        | Task::Kernel { s, .. }
        | Task::Propagate { s, .. }
        | Task::Cauchy { s, .. }
        | Task::DispersiveSweep { s, .. }
        | Task::Nls { s, .. } => *s,
    }
}

fn horizon_ok(sc: &Scenario, h: &Hamiltonian64, k: &Noise64, beta: &DriverPath64, s: f64, delta: f64) -> bool {
    let Ok(f) = solve_flow(h, k, beta, s + delta, s, &sc.flow_options()) else {
        return false;
    };
    let d = sc.dim;
    let mut prev_sign = 0.0;
    for (u, lin) in f.linear_history() {
        let du = u - s;
        let det = lin.view((0, d), (d, d)).determinant();
        // a sign change between checkpoints means a caustic was stepped over
        if prev_sign * det < 0.0 {
            return false;
        }
        if det != 0.0 {
            prev_sign = det.signum();
        }
        if du >= MIN_HORIZON && det.abs() / du.powi(d as i32) < sc.tolerances.gamma_min {
            return false;
        }
    }
    true
}

/// Bisects the horizon to `tolerances.bisect`; 0 if even the shortest probe fails.
pub fn sweep_horizon(sc: &Scenario, seed: u64) -> Result<f64, Failure> {
    let beta = sc.driver(seed)?;
    let (h, k) = (sc.hamiltonian()?, sc.noise()?);
    let s = start_time(&sc.task);
    let max = sc.grid().end() - s;
    if max < MIN_HORIZON || !horizon_ok(sc, &h, &k, &beta, s, MIN_HORIZON) {
        return Ok(0.0);
    }
    if horizon_ok(sc, &h, &k, &beta, s, max) {
        return Ok(max);
    }
    let (mut lo, mut hi) = (MIN_HORIZON, max);
    while hi - lo > sc.tolerances.bisect {
        let mid = 0.5 * (lo + hi);
        if horizon_ok(sc, &h, &k, &beta, s, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}
