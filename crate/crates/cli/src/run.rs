//! Task pipelines for one driver sample.

use nalgebra::DVector;
use roughflow::flow::{chapman_residual, solve_flow};
use roughflow::io::{cauchy_json, flow_json, kernel_json, probe_csv, write_json, write_wavefunction, Provenance};
use roughflow::kernel::{dispersive_sup, hk_kernel, mehler_kernel, probe_points};
use roughflow::nls::{mass_residual, solve_nls};
use roughflow::propagator::{apply_kernel_with, propagate_gaussian, propagate_rough};
use roughflow::scenario::{StateSpec, Task};
use roughflow::{DriverPath64, Flow64, GaussianState64, HypothesisReport, Scenario, Siegel64};
use serde::Serialize;
use serde_json::json;

use crate::failure::Failure;
use crate::output::OutputDir;

/// One invariant evaluated by `--verify`.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, pass: value <= threshold }
    }
}

/// What one seed produced.
pub struct SeedOutcome {
    pub seed: u64,
    /// Rows of the ensemble CSV (dispersive sweep only).
    pub rows: Vec<String>,
    /// Largest `sup|K|·|t − s|^{d/2}` over the sweep.
    pub max_ratio: Option<f64>,
    pub checks: Vec<Check>,
}

pub struct Context<'a> {
    pub sc: &'a Scenario,
    pub prov: Provenance,
    pub out: &'a OutputDir,
    /// Seed suffix for file names when several seeds run.
    pub tag_seeds: bool,
    pub verify: bool,
}

fn describe(r: &HypothesisReport) -> String {
    let mut why = Vec::new();
    if !r.e_h_invertible {
        why.push("E_H(t) must be invertible");
    }
    if !r.e_k_zero {
        why.push("the p-p block of K must vanish");
    }
    if !r.mv2 {
        why.push("a q-p coupling in K needs mu > 1/2");
    }
    why.join("; ")
}

fn coherent(st: &StateSpec) -> Result<GaussianState64, Failure> {
    let center = DVector::from_iterator(st.q.len() * 2, st.q.iter().chain(&st.p).copied());
    Ok(GaussianState64::coherent(&center)?)
}

fn flow_checks(ctx: &Context, beta: &DriverPath64, f: &Flow64) -> Result<Vec<Check>, Failure> {
    let sc = ctx.sc;
    let (h, k) = (sc.hamiltonian()?, sc.noise()?);
    let tol = sc.tolerances.symplectic;
    let mid = 0.5 * (f.t + f.s);
    let chapman = chapman_residual(&h, &k, beta, f.t, f.s, mid, &sc.flow_options())?;
    Ok(vec![Check::at_most("symplectic", f.symplectic_residual(), tol), Check::at_most("chapman_kolmogorov", chapman, tol)])
}

pub fn run_seed(ctx: &Context, seed: u64) -> Result<SeedOutcome, Failure> {
    let sc = ctx.sc;
    let beta = sc.driver(seed)?;
    let (h, k) = (sc.hamiltonian()?, sc.noise()?);
    let opts = sc.flow_options();
    if sc.task.needs_hypotheses() {
        let rep = sc.hypotheses(&beta)?;
        if !rep.kernel_ready() {
            return Err(Failure::Hypothesis(describe(&rep)));
        }
    }
    let tag = ctx.tag_seeds.then_some(seed);
    let name = sc.task.name();
    let d = sc.dim;
    let mut outcome = SeedOutcome { seed, rows: Vec::new(), max_ratio: None, checks: Vec::new() };
    let json_bytes = |v: &serde_json::Value| -> Result<Vec<u8>, Failure> {
        let mut buf = Vec::new();
        write_json(v, &mut buf)?;
        Ok(buf)
    };

    match &sc.task {
        Task::Flow { s, t } => {
            let f = solve_flow(&h, &k, &beta, *t, *s, &opts)?;
            ctx.out.write(&ctx.out.path(name, tag, "json"), &json_bytes(&flow_json(&f, &ctx.prov))?)?;
            if ctx.verify {
                outcome.checks = flow_checks(ctx, &beta, &f)?;
            }
        }
        Task::Kernel { s, t, probe_m, probe_r } => {
            let f = solve_flow(&h, &k, &beta, *t, *s, &opts)?;
            let hk = hk_kernel(&f, &Siegel64::i_identity(d))?;
            let mk = mehler_kernel(&f, &h, &k, &beta, sc.tolerances.gamma_min)?;
            let points = probe_points(d, *probe_m, *probe_r);
            let dev = hk.max_deviation(&mk, &points);
            let mut doc = kernel_json(&mk, &ctx.prov);
            doc["t"] = json!(t);
            doc["s"] = json!(s);
            doc["hk_mehler_deviation"] = json!(dev);
            doc["dispersive_sup"] = json!(dispersive_sup(&mk));
            ctx.out.write(&ctx.out.path(name, tag, "json"), &json_bytes(&doc)?)?;
            let mut csv = Vec::new();
            probe_csv(&mk, &points, &ctx.prov, &mut csv)?;
            ctx.out.write(&ctx.out.path(name, tag, "csv"), &csv)?;
            if ctx.verify {
                outcome.checks = flow_checks(ctx, &beta, &f)?;
                outcome.checks.push(Check::at_most("hk_mehler_agreement", dev, 1e-8));
            }
        }
        Task::Propagate { s, t, state, lbox, m, method } => {
            let f = solve_flow(&h, &k, &beta, *t, *s, &opts)?;
            let kf = hk_kernel(&f, &Siegel64::i_identity(d))?;
            let g = coherent(state)?;
            let m = sc.grid_points(*m);
            let psi = g.to_grid(*lbox, m)?;
            let out = apply_kernel_with(&kf, &psi, *method)?;
            let exact = propagate_gaussian(&f, &g)?.to_grid(*lbox, m)?;
            let norm_change = (out.l2_norm() - psi.l2_norm()).abs();
            let gauss = out.l2_distance(&exact)?;
            let mut csv = Vec::new();
            write_wavefunction(&out, &ctx.prov, &mut csv)?;
            ctx.out.write(&ctx.out.path(name, tag, "csv"), &csv)?;
            let mut doc = json!({
                "t": t, "s": s, "m": m, "lbox": lbox,
                "norm_in": psi.l2_norm(), "norm_out": out.l2_norm(),
                "gaussian_l2": gauss, "quad_error": out.quad_error,
            });
            doc["version"] = json!(ctx.prov.version);
            doc["config_hash"] = json!(ctx.prov.config_hash);
            ctx.out.write(&ctx.out.path(name, tag, "json"), &json_bytes(&doc)?)?;
            if ctx.verify {
                outcome.checks = flow_checks(ctx, &beta, &f)?;
                outcome.checks.push(Check::at_most("unitarity", norm_change, sc.tolerances.unitarity));
                outcome.checks.push(Check::at_most("gaussian_oracle", gauss, sc.tolerances.unitarity));
            }
        }
        Task::Cauchy { s, t, state, eps, lbox, m } => {
            let psi = coherent(state)?.to_grid(*lbox, sc.grid_points(*m))?;
            let (_, report) = propagate_rough(&h, &k, &beta, &psi, *t, *s, eps, &opts)?;
            ctx.out.write(&ctx.out.path(name, tag, "json"), &json_bytes(&cauchy_json(&report, &ctx.prov))?)?;
            if ctx.verify {
                let f = solve_flow(&h, &k, &beta, *t, *s, &opts)?;
                outcome.checks = flow_checks(ctx, &beta, &f)?;
            }
        }
        Task::DispersiveSweep { s, dts } => {
            let mut worst: f64 = 0.0;
            for dt in dts {
                let f = solve_flow(&h, &k, &beta, s + dt, *s, &opts)?;
                let mk = mehler_kernel(&f, &h, &k, &beta, sc.tolerances.gamma_min)?;
                let sup = dispersive_sup(&mk);
                let ratio = sup * dt.powf(d as f64 / 2.0);
                worst = worst.max(ratio);
                outcome.rows.push(format!("{seed},{dt:.16e},{sup:.16e},{ratio:.16e}"));
                if ctx.verify && dt == dts.last().unwrap() {
                    outcome.checks = flow_checks(ctx, &beta, &f)?;
                }
            }
            outcome.max_ratio = Some(worst);
        }
        Task::Nls { s, duration, dt, state, method, lbox, m } => {
            let psi = coherent(state)?.to_grid(*lbox, sc.grid_points(*m))?;
            let cfg = sc.nls_config(*dt, *method);
            let traj = solve_nls(&h, &k, &beta, &cfg, &psi, *s, *duration)?;
            let mut csv = ctx.prov.csv_line();
            csv.push_str(&traj.to_csv());
            ctx.out.write(&ctx.out.path(name, tag, "csv"), csv.as_bytes())?;
            if ctx.verify {
                let f = solve_flow(&h, &k, &beta, s + duration, *s, &opts)?;
                outcome.checks = flow_checks(ctx, &beta, &f)?;
                outcome.checks.push(Check::at_most("mass", mass_residual(&traj), sc.tolerances.unitarity));
            }
        }
    }
    Ok(outcome)
}
