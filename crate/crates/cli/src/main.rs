//! `roughflow run <file>` and `roughflow sweep-horizon <file>`.

mod failure;
mod output;
mod run;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use roughflow::io::Provenance;
use roughflow::scenario::Task;
use roughflow::Scenario;
use serde_json::json;

use failure::Failure;
use output::OutputDir;
use run::{Check, Context, SeedOutcome};

/// Environment variable naming the default output directory.
const OUT_ENV: &str = "ROUGHFLOW_OUT";

#[derive(Parser)]
#[command(name = "roughflow", version, about = "Rough-path driven quadratic Hamiltonians: flows, kernels, propagation, NLS")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the task of a scenario file (or `builtin:<name>`).
    Run(Common),
    /// Bisect the largest horizon with a contracting, caustic-free flow.
    SweepHorizon(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario JSON, or `builtin:<name>`.
    file: String,
    /// Seed range `a..b` (exclusive), `a..=b` or a single seed.
    #[arg(long)]
    seeds: Option<String>,
    /// Output directory; falls back to the scenario's `out`, then the environment.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for the seed ensemble.
    #[arg(long)]
    threads: Option<usize>,
    /// Evaluate the invariant suite and fail on violations.
    #[arg(long)]
    verify: bool,
}

fn parse_seeds(spec: &str) -> Result<Vec<u64>, Failure> {
    let bad = || Failure::Config { path: "--seeds".into(), message: format!("cannot parse `{spec}`") };
    let num = |s: &str| s.trim().parse::<u64>().map_err(|_| bad());
    let seeds: Vec<u64> = if let Some((a, b)) = spec.split_once("..=") {
        (num(a)?..=num(b)?).collect()
    } else if let Some((a, b)) = spec.split_once("..") {
        (num(a)?..num(b)?).collect()
    } else {
        vec![num(spec)?]
    };
    if seeds.is_empty() {
        return Err(bad());
    }
    Ok(seeds)
}

fn load(file: &str) -> Result<Scenario, Failure> {
    if let Some(name) = file.strip_prefix("builtin:") {
        return Scenario::builtin(name).ok_or_else(|| Failure::Config {
            path: ".".into(),
            message: format!("unknown builtin `{name}`; known: {}", Scenario::builtin_names().join(", ")),
        });
    }
    Ok(Scenario::load(std::path::Path::new(file))?)
}

fn setup(c: &Common) -> Result<(Scenario, Vec<u64>, OutputDir), Failure> {
    let sc = load(&c.file)?;
    let seeds = match &c.seeds {
        Some(spec) if sc.is_random() => parse_seeds(spec)?,
        Some(spec) => {
            parse_seeds(spec)?;
            eprintln!("driver is deterministic; ignoring --seeds");
            vec![sc.driver.seed]
        }
        None => vec![sc.driver.seed],
    };
    if let Some(n) = c.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config { path: "--threads".into(), message: e.to_string() })?;
    }
    let dir = c
        .out
        .clone()
        .or_else(|| sc.out.as_ref().map(PathBuf::from))
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("roughflow-out"));
    Ok((sc, seeds, OutputDir::new(dir)?))
}

fn json_bytes(v: &serde_json::Value) -> Vec<u8> {
    let mut buf = serde_json::to_vec_pretty(v).expect("json serializes");
    buf.push(b'\n');
    buf
}

fn run(c: &Common) -> Result<(), Failure> {
    let (sc, seeds, out) = setup(c)?;
    let ctx = Context {
        sc: &sc,
        prov: Provenance::new(sc.config_hash()),
        out: &out,
        tag_seeds: seeds.len() > 1 && !matches!(sc.task, Task::DispersiveSweep { .. }),
        verify: c.verify,
    };
    let results: Vec<Result<SeedOutcome, Failure>> = seeds.par_iter().map(|&s| run::run_seed(&ctx, s)).collect();
    let mut first_failure = None;
    let mut outcomes = Vec::new();
    for (seed, r) in seeds.iter().zip(results) {
        match r {
            Ok(o) => outcomes.push(o),
            Err(f) => {
                if seeds.len() > 1 {
                    eprintln!("seed {seed}: {}", f.report());
                }
                first_failure.get_or_insert(f);
            }
        }
    }

    let mut checks: Vec<(u64, Check)> =
        outcomes.iter().flat_map(|o| o.checks.iter().map(move |c| (o.seed, c.clone()))).collect();
    if let Task::DispersiveSweep { .. } = sc.task {
        let mut csv = ctx.prov.csv_line();
        csv.push_str("seed,dt,sup_abs_kernel,bound_ratio\n");
        for o in &outcomes {
            o.rows.iter().for_each(|r| {
                csv.push_str(r);
                csv.push('\n');
            });
        }
        out.write(&out.path(sc.task.name(), None, "csv"), csv.as_bytes())?;
        let ratios: Vec<f64> = outcomes.iter().filter_map(|o| o.max_ratio).collect();
        if c.verify && !ratios.is_empty() {
            let hi = ratios.iter().cloned().fold(f64::MIN, f64::max);
            let lo = ratios.iter().cloned().fold(f64::MAX, f64::min);
            checks.push((u64::MAX, Check::at_most("dispersive_spread", hi / lo, 10.0)));
        }
    }
    if c.verify {
        let rows: Vec<_> = checks
            .iter()
            .map(|(seed, ch)| {
                let mut v = serde_json::to_value(ch).expect("check serializes");
                if *seed != u64::MAX {
                    v["seed"] = json!(seed);
                }
                v
            })
            .collect();
        let doc = json!({ "version": ctx.prov.version, "config_hash": ctx.prov.config_hash, "checks": rows });
        out.write(&out.path("verify", None, "json"), &json_bytes(&doc))?;
        if let Some((seed, ch)) = checks.iter().find(|(_, ch)| !ch.pass) {
            let who = if *seed == u64::MAX { "ensemble".to_string() } else { format!("seed {seed}") };
            let f = Failure::Numerical(format!(
                "invariant {} violated ({who}): {:e} > {:e}",
                ch.name, ch.value, ch.threshold
            ));
            first_failure.get_or_insert(f);
        }
    }
    first_failure.map_or(Ok(()), Err)
}

fn sweep(c: &Common) -> Result<(), Failure> {
    let (sc, seeds, out) = setup(c)?;
    let prov = Provenance::new(sc.config_hash());
    let results: Vec<Result<f64, Failure>> = seeds.par_iter().map(|&s| sweep::sweep_horizon(&sc, s)).collect();
    let mut rows = Vec::new();
    for (seed, r) in seeds.iter().zip(results) {
        let t_r = r?;
        println!("seed {seed}: T_R = {t_r:.6}");
        rows.push(json!({ "seed": seed, "t_r": t_r }));
    }
    let doc = json!({
        "version": prov.version,
        "config_hash": prov.config_hash,
        "bisect": sc.tolerances.bisect,
        "gamma_min": sc.tolerances.gamma_min,
        "horizons": rows,
    });
    out.write(&out.path("sweep-horizon", None, "json"), &json_bytes(&doc))?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let r = match &cli.command {
        Command::Run(c) => run(c),
        Command::SweepHorizon(c) => sweep(c),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.report());
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
