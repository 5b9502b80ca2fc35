//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::time::Instant;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use roughflow::flow::{loglog_slope, short_time_remainders, solve_flow};
use roughflow::kernel::{dispersive_sup, hk_kernel, mehler_kernel, probe_points};
use roughflow::linalg::{spectral_norm, Mat, Vector};
use roughflow::nls::{mass_residual, solve_nls};
use roughflow::paths::{make_brownian, mollify};
use roughflow::propagator::{apply_kernel, egorov_residual, hk_sobolev_norm, propagate_gaussian, KernelMethod};
use roughflow::{
    DriverPath64, Flow64, FlowOptions, GaussianState64, Hamiltonian64, NlsConfig64, NlsMethod, Noise64, Siegel64,
    TimeGrid64, WaveFunction64,
};

type C = Complex<f64>;
type Outcome = Result<String, String>;

fn opts() -> FlowOptions<f64> {
    FlowOptions::default()
}

fn coherent(center: &[f64]) -> GaussianState64 {
    GaussianState64::coherent(&Vector::from_vec(center.to_vec())).unwrap()
}

fn hk(f: &Flow64) -> roughflow::Kernel64 {
    hk_kernel(f, &Siegel64::i_identity(f.dim())).unwrap()
}

fn sym(rng: &mut ChaCha8Rng, d: usize) -> Mat<f64> {
    let m = Mat::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
    (&m + m.transpose()) * 0.5
}

/// Random `H` with `E_H` bounded away from singular and random `K`.
fn random_scenario(rng: &mut ChaCha8Rng, d: usize) -> (Hamiltonian64, Noise64) {
    let l = Mat::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
    let e = sym(rng, d) + Mat::identity(d, d) * 2.0;
    let g = sym(rng, d);
    let h = Hamiltonian64::constant(g, l, e).unwrap();
    let lk = Mat::from_fn(d, d, |_, _| rng.gen_range(-0.5..0.5));
    let k = Noise64::new(sym(rng, d), lk, Mat::zeros(d, d), Vector::zeros(2 * d)).unwrap();
    (h, k)
}

fn brownian_harmonic(seed: u64) -> (Hamiltonian64, Noise64, DriverPath64) {
    let mut beta = make_brownian(seed, TimeGrid64::new(0.0, 1.0, 1025).unwrap(), 1.0);
    beta.mu = 0.45;
    (Hamiltonian64::harmonic(1), Noise64::scalar_potential(1, 1.0), beta)
}

fn spread(v: &[f64]) -> f64 {
    let hi = v.iter().cloned().fold(f64::MIN, f64::max);
    let lo = v.iter().cloned().fold(f64::MAX, f64::min);
    hi / lo
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn symplecticity_suite() -> Outcome {
    let start = Instant::now();
    let worst: Vec<f64> = (0..100u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + i);
            let d = 1 + (i % 3) as usize;
            let (h, k) = random_scenario(&mut rng, d);
            let mut beta = make_brownian(i, TimeGrid64::new(0.0, 1.0, 513).unwrap(), 1.0);
            beta.mu = 0.45;
            let s = rng.gen_range(-0.9..0.0);
            let t = rng.gen_range(0.0..0.9);
            solve_flow(&h, &k, &beta, t, s, &opts()).map(|f| f.symplectic_residual()).unwrap_or(f64::INFINITY)
        })
        .collect();
    let max = worst.iter().cloned().fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    check(max <= 1e-9 && secs < 60.0, format!("100 scenarios, max residual {max:.2e}, {secs:.1} s"))
}

fn sussmann_convergence() -> Outcome {
    let start = Instant::now();
    let (h, k, beta) = brownian_harmonic(42);
    let eps: Vec<f64> = (4..=12).map(|j| 2f64.powi(-j)).collect();
    let paths: Vec<DriverPath64> = eps.iter().map(|&e| mollify(&beta, e).unwrap()).collect();
    let (t, s) = (0.5, -0.3);
    let flows: Vec<Flow64> = paths.par_iter().map(|p| solve_flow(&h, &k, p, t, s, &opts()).unwrap()).collect();
    let g0 = coherent(&[0.5, -0.3]);
    let states: Vec<GaussianState64> = flows.iter().map(|f| propagate_gaussian(f, &g0).unwrap()).collect();
    let mut flow_c = Vec::new();
    let mut state_c = Vec::new();
    for i in 0..eps.len() - 1 {
        let pd = paths[i].sup_distance(&paths[i + 1]);
        let fd = (&flows[i].f - &flows[i + 1].f).abs().max().max((&flows[i].v - &flows[i + 1].v).abs().max());
        let (a, b) = (&states[i], &states[i + 1]);
        let sd = (a.norm().powi(2) + b.norm().powi(2) - 2.0 * a.inner(b).re).max(0.0).sqrt();
        flow_c.push(fd / pd);
        state_c.push(sd / pd);
    }
    let (fs, ss) = (spread(&flow_c), spread(&state_c));
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ");
    check(
        fs <= 3.0 && ss <= 3.0,
        format!(
            "flow constants [{}] spread {fs:.2}; state constants [{}] spread {ss:.2}; {:.1} s",
            fmt(&flow_c),
            fmt(&state_c),
            start.elapsed().as_secs_f64()
        ),
    )
}

fn kernel_oracles() -> Outcome {
    let zero = DriverPath64::zero(TimeGrid64::new(0.0, 2.0, 33).unwrap());
    let rel = |k: &roughflow::Kernel64, exact: &dyn Fn(f64, f64) -> C| {
        probe_points::<f64>(1, 21, 3.0)
            .iter()
            .map(|(x, y)| {
                let e = exact(x[0], y[0]);
                (k.eval(x, y) - e).norm() / e.norm()
            })
            .fold(0.0, f64::max)
    };
    let mut free_err: f64 = 0.0;
    for dt in [0.05, 0.4, 1.3] {
        let f = solve_flow(&Hamiltonian64::free(1), &Noise64::zero(1), &zero, dt, 0.0, &opts()).unwrap();
        let exact = |x: f64, y: f64| {
            C::new(0.0, 2.0 * std::f64::consts::PI * dt).powf(-0.5) * C::new(0.0, (x - y).powi(2) / (2.0 * dt)).exp()
        };
        let me = mehler_kernel(&f, &Hamiltonian64::free(1), &Noise64::zero(1), &zero, 1e-6).unwrap();
        free_err = free_err.max(rel(&hk(&f), &exact)).max(rel(&me, &exact));
    }
    let mut mehler_err: f64 = 0.0;
    for dl in [0.1, 0.3, 1.0] {
        let f = solve_flow(&Hamiltonian64::harmonic(1), &Noise64::zero(1), &zero, dl, 0.0, &opts()).unwrap();
        let exact = |x: f64, y: f64| {
            let phase = ((x * x + y * y) * dl.cos() - 2.0 * x * y) / (2.0 * dl.sin());
            C::new(0.0, 2.0 * std::f64::consts::PI * dl.sin()).powf(-0.5) * C::new(0.0, phase).exp()
        };
        let me = mehler_kernel(&f, &Hamiltonian64::harmonic(1), &Noise64::zero(1), &zero, 1e-6).unwrap();
        mehler_err = mehler_err.max(rel(&hk(&f), &exact)).max(rel(&me, &exact));
    }
    let mut mutual: f64 = 0.0;
    for seed in 0..10 {
        let (h, k, beta) = brownian_harmonic(seed);
        let f = solve_flow(&h, &k, &beta, 0.6, -0.2, &opts()).unwrap();
        let me = mehler_kernel(&f, &h, &k, &beta, 1e-6).unwrap();
        mutual = mutual.max(hk(&f).max_deviation(&me, &probe_points(1, 21, 2.0)));
    }
    check(
        free_err <= 1e-12 && mehler_err <= 1e-10 && mutual <= 1e-8,
        format!("free {free_err:.1e}, harmonic {mehler_err:.1e}, HK vs Mehler on 10 Brownian paths {mutual:.1e}"),
    )
}

/// Horizons probed for the caustic and dispersive sweeps, up to `T_R = 1`.
fn sweep_dts() -> Vec<f64> {
    (0..=30).map(|i| 1e-3 * 1000f64.powf(i as f64 / 30.0)).collect()
}

/// `(det B/Δ, sup|K|·Δ^{1/2})` over the sweep for one seed.
fn sweep_seed(seed: u64) -> Vec<(f64, f64)> {
    let (h, k, beta) = brownian_harmonic(seed);
    sweep_dts()
        .into_iter()
        .map(|dt| {
            let f = solve_flow(&h, &k, &beta, -0.5 + dt, -0.5, &opts()).unwrap();
            let gamma = f.b().determinant() / dt;
            let sup = mehler_kernel(&f, &h, &k, &beta, 1e-6).map(|m| dispersive_sup(&m)).unwrap_or(f64::INFINITY);
            (gamma, sup * dt.sqrt())
        })
        .collect()
}

fn caustic_and_dispersive() -> (Outcome, Outcome) {
    let per_seed: Vec<Vec<(f64, f64)>> = (0..100u64).into_par_iter().map(sweep_seed).collect();
    let gammas: Vec<f64> = per_seed.iter().map(|v| v.iter().map(|x| x.0).fold(f64::MAX, f64::min)).collect();
    let violations = gammas.iter().filter(|g| !(**g > 0.0)).count();
    let gmin = gammas.iter().cloned().fold(f64::MAX, f64::min);
    let gmax = gammas.iter().cloned().fold(f64::MIN, f64::max);
    let caustic = check(
        violations == 0,
        format!("gamma per seed in [{gmin:.3}, {gmax:.3}] over 100 seeds, {violations} violations"),
    );
    let ratios: Vec<f64> = per_seed.iter().flat_map(|v| v.iter().map(|x| x.1)).collect();
    let sp = spread(&ratios);
    let bound = ratios.iter().cloned().fold(f64::MIN, f64::max);
    let dispersive = check(sp.is_finite() && sp < 10.0, format!("sup|K| |t-s|^(1/2) <= {bound:.3}, spread {sp:.2}"));
    (caustic, dispersive)
}

fn unitarity_and_gaussian() -> Outcome {
    let (h, k, beta) = brownian_harmonic(3);
    let f = solve_flow(&h, &k, &beta, 0.5, -0.3, &opts()).unwrap();
    let g = coherent(&[0.8, -0.4]);
    let psi = g.to_grid(12.0, 1024).unwrap();
    let out = apply_kernel(&hk(&f), &psi).unwrap();
    let norm1 = (out.l2_norm() - psi.l2_norm()).abs();
    let gauss1 = out.l2_distance(&propagate_gaussian(&f, &g).unwrap().to_grid(12.0, 1024).unwrap()).unwrap();

    let beta2 = make_brownian(8, TimeGrid64::new(0.0, 1.0, 129).unwrap(), 1.0);
    let h2 = Hamiltonian64::rotating_trap(2, 0.5).unwrap();
    let k2 = Noise64::scalar_potential(2, 0.6);
    let f2 = solve_flow(&h2, &k2, &beta2, 0.9, 0.0, &opts()).unwrap();
    let g2 = coherent(&[0.5, -0.3, 0.2, 0.4]);
    let psi2 = g2.to_grid(7.0, 256).unwrap();
    let out2 = apply_kernel(&hk(&f2), &psi2).unwrap();
    let norm2 = (out2.l2_norm() - psi2.l2_norm()).abs();
    let gauss2 = out2.l2_distance(&propagate_gaussian(&f2, &g2).unwrap().to_grid(7.0, 256).unwrap()).unwrap();
    let worst = norm1.max(gauss1).max(norm2).max(gauss2);
    check(
        worst <= 1e-6,
        format!("d=1 m=1024: norm {norm1:.1e}, oracle {gauss1:.1e}; d=2 m=256: norm {norm2:.1e}, oracle {gauss2:.1e}"),
    )
}

fn egorov() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let (h, k, beta) = brownian_harmonic(5);
    let f1 = solve_flow(&h, &k, &beta, 0.4, -0.4, &opts()).unwrap();
    let psi1 = coherent(&[0.3, 0.6]).to_grid(12.0, 1024).unwrap();
    let beta2 = make_brownian(8, TimeGrid64::new(0.0, 1.0, 129).unwrap(), 1.0);
    let f2 = solve_flow(
        &Hamiltonian64::rotating_trap(2, 0.5).unwrap(),
        &Noise64::scalar_potential(2, 0.6),
        &beta2,
        0.9,
        0.0,
        &opts(),
    )
    .unwrap();
    let psi2 = coherent(&[0.5, -0.3, 0.2, 0.4]).to_grid(7.0, 256).unwrap();
    let mut worst: f64 = 0.0;
    for (f, psi) in [(&f1, &psi1), (&f2, &psi2)] {
        let kf = hk(f);
        let d = f.dim();
        for _ in 0..10 {
            let a = Vector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0));
            let b = Vector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0));
            worst = worst.max(egorov_residual(f, &kf, &a, &b, psi).unwrap_or(f64::INFINITY));
        }
    }
    check(worst <= 1e-5, format!("10 observables on d=1 and d=2 scenarios, max residual {worst:.1e}"))
}

fn sobolev_invariance() -> Outcome {
    let times: Vec<f64> = (1..=8).map(|i| -0.5 + 0.125 * i as f64).collect();
    let results: Vec<(f64, f64, bool)> = (0..20u64)
        .into_par_iter()
        .map(|seed| {
            let (h, k, beta) = brownian_harmonic(100 + seed);
            let psi = coherent(&[0.5, -0.3]).to_grid(12.0, 1024).unwrap();
            let n0 = [hk_sobolev_norm(&psi, 1), hk_sobolev_norm(&psi, 2)];
            let (mut c1, mut c2, mut within) = (0.0f64, 0.0f64, true);
            for &t in &times {
                let f = solve_flow(&h, &k, &beta, t, -0.5, &opts()).unwrap();
                let out = apply_kernel(&hk(&f), &psi).unwrap();
                let r1 = hk_sobolev_norm(&out, 1) / n0[0];
                let r2 = hk_sobolev_norm(&out, 2) / n0[1];
                // a priori growth allowed by the classical flow
                let grow = 1.0 + spectral_norm(&f.f) + f.v.norm();
                within &= r1 <= grow && r2 <= grow * grow;
                c1 = c1.max(r1);
                c2 = c2.max(r2);
            }
            (c1, c2, within)
        })
        .collect();
    let c1 = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let c2 = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let ok = results.iter().all(|r| r.2) && c1.is_finite() && c2.is_finite();
    check(ok, format!("20 seeds, C(H1) = {c1:.3}, C(H2) = {c2:.3}"))
}

fn nls_criteria() -> Outcome {
    let cfg = |lambda: f64, dt: f64, method: NlsMethod| {
        let mut c = NlsConfig64::new(lambda, 1.0, dt, method);
        c.kernel = KernelMethod::Spectral;
        c
    };
    let mut beta = make_brownian(42, TimeGrid64::new(0.0, 1.0, 4097).unwrap(), 1.0);
    beta.mu = 0.45;
    let h = Hamiltonian64::free(1);
    let k = Noise64::scalar_potential(1, 1.0);
    let psi = coherent(&[0.3, 0.5]).to_grid(12.0, 1024).unwrap();
    let mut mass: f64 = 0.0;
    for lambda in [1.0, -1.0] {
        let traj = solve_nls(&h, &k, &beta, &cfg(lambda, 0.01, NlsMethod::Splitstep), &psi, 0.0, 0.5).unwrap();
        mass = mass.max(mass_residual(&traj));
    }
    let a = solve_nls(&h, &k, &beta, &cfg(1.0, 0.001, NlsMethod::Splitstep), &psi, 0.0, 0.05).unwrap();
    let b = solve_nls(&h, &k, &beta, &cfg(1.0, 0.001, NlsMethod::Duhamel), &psi, 0.0, 0.05).unwrap();
    let cross = a.last().l2_distance(b.last()).unwrap();

    let smooth = DriverPath64::from_fn(TimeGrid64::new(0.0, 1.0, 257).unwrap(), 1.0, |t| (3.0 * t).sin());
    let psi0 = coherent(&[0.0, 0.5]).to_grid(12.0, 1024).unwrap();
    let run = |dt: f64| -> WaveFunction64 {
        solve_nls(&h, &k, &smooth, &cfg(1.0, dt, NlsMethod::Splitstep), &psi0, 0.0, 0.4).unwrap().last().clone()
    };
    let (u1, u2, u4) = (run(0.1), run(0.05), run(0.025));
    let ratio = u1.l2_distance(&u2).unwrap() / u2.l2_distance(&u4).unwrap();
    check(
        mass <= 1e-6 && cross <= 1e-4 && (ratio - 4.0).abs() <= 0.5,
        format!("mass {mass:.1e}, splitstep vs Duhamel {cross:.1e}, Richardson ratio {ratio:.3}"),
    )
}

fn holder_threshold() -> Outcome {
    let dts: Vec<f64> = (4..=10).map(|j| 2f64.powi(-j)).collect();
    let h = Hamiltonian64::harmonic(1);
    let coupled = Noise64::new(Mat::zeros(1, 1), Mat::identity(1, 1), Mat::zeros(1, 1), Vector::zeros(2)).unwrap();
    let potential = Noise64::scalar_potential(1, 1.0);
    let slope = |k: &Noise64| {
        let logs: Vec<Vec<f64>> = (0..8u64)
            .into_par_iter()
            .map(|seed| {
                let mut beta = make_brownian(seed, TimeGrid64::new(0.0, 1.0, 16385).unwrap(), 1.0);
                beta.mu = 0.45;
                short_time_remainders(&h, k, &beta, -0.5, &dts, &opts())
                    .unwrap()
                    .iter()
                    .map(|s| s.b_block.ln())
                    .collect()
            })
            .collect();
        let geo: Vec<f64> = (0..dts.len()).map(|i| (logs.iter().map(|l| l[i]).sum::<f64>() / logs.len() as f64).exp()).collect();
        loglog_slope(&dts, &geo)
    };
    let (s_coupled, s_potential) = (slope(&coupled), slope(&potential));
    check(
        s_potential >= 1.8 && s_coupled < 1.8,
        format!("B-remainder slope with L_K = 0: {s_potential:.2} (order 2 holds); with L_K != 0: {s_coupled:.2} (order 2 fails)"),
    )
}

fn main() {
    let start = Instant::now();
    let (caustic, dispersive) = caustic_and_dispersive();
    let results: Vec<(&str, Outcome)> = vec![
        ("symplecticity suite", symplecticity_suite()),
        ("convergence under mollification", sussmann_convergence()),
        ("exact kernel oracles", kernel_oracles()),
        ("caustic lower bound", caustic),
        ("dispersive estimate", dispersive),
        ("unitarity and Gaussian oracle", unitarity_and_gaussian()),
        ("Egorov", egorov()),
        ("Sobolev invariance", sobolev_invariance()),
        ("NLS", nls_criteria()),
        ("Holder threshold", holder_threshold()),
    ];
    let mut failed = 0;
    for (i, (name, r)) in results.iter().enumerate() {
        match r {
            Ok(d) => println!("criterion {:>2} PASS  {name}: {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {d}", i + 1)
            }
        }
    }
    println!("acceptance: {} of {} passed in {:.1} s", results.len() - failed, results.len(), start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
