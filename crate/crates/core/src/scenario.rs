//! JSON scenario files: Hamiltonian blocks, driver, horizon, task and
//! tolerances. Unknown keys are rejected and errors carry the path of the
//! offending key.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::flow::FlowOptions;
use crate::hamiltonians::{validate_hypotheses, HypothesisReport, NoiseHamiltonian, QuadraticHamiltonian, TimeFn};
use crate::linalg::{Mat, Vector};
use crate::nls::{NlsConfig, NlsMethod};
use crate::paths::{make_brownian, make_fbm, read_csv, DriverPath, TimeGrid};
use crate::propagator::KernelMethod;

pub const SCHEMA_VERSION: u32 = 1;

/// A config that failed to parse or validate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// Dotted path of the offending key (`.` for the document root).
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn cfg_err(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError { path: path.into(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Builtin {
    Free,
    Harmonic,
    Saddle,
    RotatingTrap,
}

/// Constant value or a linearly interpolated node table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coef<V> {
    Const(V),
    Table { times: Vec<f64>, values: Vec<V> },
}

pub type Matrix = Vec<Vec<f64>>;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(rename = "G", default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Matrix>,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub l: Option<Matrix>,
    #[serde(rename = "E", default, skip_serializing_if = "Option::is_none")]
    pub e: Option<Matrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriverKind {
    #[default]
    Zero,
    Brownian,
    Fbm,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriverSpec {
    #[serde(default)]
    pub kind: DriverKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hurst: Option<f64>,
    #[serde(default = "one")]
    pub scale: f64,
    /// `t,beta` CSV, relative to the scenario file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
}

impl Default for DriverSpec {
    fn default() -> Self {
        Self { kind: DriverKind::Zero, seed: 0, hurst: None, scale: 1.0, file: None }
    }
}

/// Driver grid `[t0 − T, t0 + T]` with `n` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Horizon {
    pub t0: f64,
    #[serde(rename = "T")]
    pub half_width: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Task {
    Flow {
        s: f64,
        t: f64,
    },
    Kernel {
        s: f64,
        t: f64,
        #[serde(default = "probe_m")]
        probe_m: usize,
        #[serde(default = "probe_r")]
        probe_r: f64,
    },
    Propagate {
        s: f64,
        t: f64,
        state: StateSpec,
        #[serde(default = "lbox")]
        lbox: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        m: Option<usize>,
        #[serde(default = "auto")]
        method: KernelMethod,
    },
    Cauchy {
        s: f64,
        t: f64,
        state: StateSpec,
        eps: Vec<f64>,
        #[serde(default = "lbox")]
        lbox: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        m: Option<usize>,
    },
    DispersiveSweep {
        s: f64,
        dts: Vec<f64>,
    },
    Nls {
        s: f64,
        duration: f64,
        dt: f64,
        state: StateSpec,
        #[serde(default = "splitstep")]
        method: NlsMethod,
        #[serde(default = "lbox")]
        lbox: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        m: Option<usize>,
    },
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Flow { .. } => "flow",
            Task::Kernel { .. } => "kernel",
            Task::Propagate { .. } => "propagate",
            Task::Cauchy { .. } => "cauchy",
            Task::DispersiveSweep { .. } => "dispersive-sweep",
            Task::Nls { .. } => "nls",
        }
    }

    /// Every task except the bare flow relies on the kernel hypotheses.
    pub fn needs_hypotheses(&self) -> bool {
        !matches!(self, Task::Flow { .. })
    }
}

/// Every tolerance the pipelines use, with the library defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub picard: f64,
    pub max_iter: usize,
    pub min_points: usize,
    pub max_points: usize,
    pub quadrature: f64,
    pub projection: f64,
    /// Lower bound on `|det B|/|t − s|^d` below which a kernel is refused.
    pub gamma_min: f64,
    /// Horizon bisection resolution.
    pub bisect: f64,
    /// Largest mass change per NLS macro step.
    pub mass: f64,
    pub duhamel: f64,
    /// `--verify` threshold on `‖FᵀJF − J‖_max`.
    pub symplectic: f64,
    /// `--verify` threshold on norm loss and closed-form mismatch.
    pub unitarity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let f = FlowOptions::<f64>::default();
        Self {
            picard: f.tol,
            max_iter: f.max_iter,
            min_points: f.min_points,
            max_points: f.max_points,
            quadrature: f.quad_tol,
            projection: f.projection_threshold,
            gamma_min: 1e-6,
            bisect: 1e-3,
            mass: 1e-5,
            duhamel: 1e-8,
            symplectic: 1e-9,
            unitarity: 1e-6,
        }
    }
}

fn one() -> f64 {
    1.0
}
fn probe_m() -> usize {
    21
}
fn probe_r() -> f64 {
    2.0
}
fn lbox() -> f64 {
    12.0
}
fn auto() -> KernelMethod {
    KernelMethod::Auto
}
fn splitstep() -> NlsMethod {
    NlsMethod::Splitstep
}
fn default_mu() -> f64 {
    0.45
}
fn schema_version() -> u32 {
    SCHEMA_VERSION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "schema_version")]
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dim: usize,
    /// Base Hamiltonian; explicit `G`, `L`, `E` replace its blocks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<Builtin>,
    /// Rotation rate of the rotating trap.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(rename = "G", default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Coef<Matrix>>,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub l: Option<Coef<Matrix>>,
    #[serde(rename = "E", default, skip_serializing_if = "Option::is_none")]
    pub e: Option<Coef<Matrix>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Coef<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Coef<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h0: Option<Coef<f64>>,
    #[serde(rename = "K", default)]
    pub k: NoiseSpec,
    /// Hölder exponent the driver is declared to have.
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default = "one")]
    pub sigma: f64,
    #[serde(default)]
    pub driver: DriverSpec,
    pub horizon: Horizon,
    pub task: Task,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Directory that relative paths resolve against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

const BUILTINS: &[(&str, &str)] = &[
    ("harmonic", include_str!("../scenarios/harmonic.json")),
    ("free", include_str!("../scenarios/free.json")),
    ("saddle", include_str!("../scenarios/saddle.json")),
    ("rotating_trap", include_str!("../scenarios/rotating_trap.json")),
    ("brownian_harmonic", include_str!("../scenarios/brownian_harmonic.json")),
    ("angular_momentum", include_str!("../scenarios/angular_momentum.json")),
    ("nls_brownian", include_str!("../scenarios/nls_brownian.json")),
    ("cauchy_brownian", include_str!("../scenarios/cauchy_brownian.json")),
];

fn to_mat(rows: &Matrix, d: usize, path: &str) -> std::result::Result<Mat<f64>, ConfigError> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(cfg_err(path, format!("expected a {d}x{d} matrix")));
    }
    Ok(Mat::from_fn(d, d, |i, j| rows[i][j]))
}

fn to_vec(v: &[f64], n: usize, path: &str) -> std::result::Result<Vector<f64>, ConfigError> {
    if v.len() != n {
        return Err(cfg_err(path, format!("expected {n} entries")));
    }
    Ok(Vector::from_column_slice(v))
}

fn time_fn<V, W>(
    c: &Coef<V>,
    path: &str,
    conv: impl Fn(&V, &str) -> std::result::Result<W, ConfigError>,
) -> std::result::Result<TimeFn<f64, W>, ConfigError>
where
    W: Clone + std::ops::Add<Output = W> + std::ops::Mul<f64, Output = W>,
{
    match c {
        Coef::Const(v) => Ok(TimeFn::Const(conv(v, path)?)),
        Coef::Table { times, values } => {
            let vals = values
                .iter()
                .enumerate()
                .map(|(i, v)| conv(v, &format!("{path}.values[{i}]")))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            TimeFn::table(times.clone(), vals).map_err(|e| cfg_err(path, e.to_string()))
        }
    }
}

impl Scenario {
    /// Parses and validates a scenario document.
    pub fn parse(text: &str) -> std::result::Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let sc: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            cfg_err(&path, e.into_inner().to_string())
        })?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> std::result::Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| cfg_err(".", format!("{}: {e}", path.display())))?;
        let mut sc = Self::parse(&text)?;
        sc.base_dir = path.parent().map(Path::to_path_buf);
        Ok(sc)
    }

    /// Named scenarios shipped with the library.
    pub fn builtin(name: &str) -> Option<Self> {
        BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, text)| Self::parse(text).expect("builtin scenarios are valid"))
    }

    pub fn builtin_names() -> Vec<&'static str> {
        BUILTINS.iter().map(|(n, _)| *n).collect()
    }

    fn validate(&self) -> std::result::Result<(), ConfigError> {
        if self.schema != SCHEMA_VERSION {
            return Err(cfg_err("schema", format!("unsupported schema version {}, expected {SCHEMA_VERSION}", self.schema)));
        }
        if !(1..=3).contains(&self.dim) {
            return Err(cfg_err("dim", "dimension must be 1, 2 or 3"));
        }
        if self.builtin == Some(Builtin::Saddle) && self.dim != 2 {
            return Err(cfg_err("builtin", "the saddle is two-dimensional"));
        }
        if self.builtin == Some(Builtin::RotatingTrap) && self.dim < 2 {
            return Err(cfg_err("builtin", "the rotating trap needs dim >= 2"));
        }
        if self.horizon.n < 2 || !(self.horizon.half_width > 0.0) {
            return Err(cfg_err("horizon", "need n >= 2 and T > 0"));
        }
        if !(self.sigma > 0.0) {
            return Err(cfg_err("sigma", "must be positive"));
        }
        match self.driver.kind {
            DriverKind::Fbm if !self.driver.hurst.is_some_and(|h| h > 0.0 && h < 1.0) => {
                return Err(cfg_err("driver.hurst", "fbm needs 0 < hurst < 1"));
            }
            DriverKind::Csv if self.driver.file.is_none() => return Err(cfg_err("driver.file", "csv driver needs a file")),
            _ => {}
        }
        let grid_dim = |m: Option<usize>| -> std::result::Result<(), ConfigError> {
            if self.dim > 2 {
                return Err(cfg_err("task.kind", "grid tasks support dim 1 and 2"));
            }
            if m.is_some_and(|m| m < 8) {
                return Err(cfg_err("task.m", "need at least 8 grid points per axis"));
            }
            Ok(())
        };
        let state = |st: &StateSpec| -> std::result::Result<(), ConfigError> {
            to_vec(&st.q, self.dim, "task.state.q")?;
            to_vec(&st.p, self.dim, "task.state.p")?;
            Ok(())
        };
        match &self.task {
            Task::Propagate { state: st, m, .. } => {
                grid_dim(*m)?;
                state(st)?;
            }
            Task::Cauchy { state: st, m, eps, .. } => {
                grid_dim(*m)?;
                state(st)?;
                if eps.is_empty() || eps.windows(2).any(|w| !(w[1] < w[0])) || eps.iter().any(|e| !(*e > 0.0)) {
                    return Err(cfg_err("task.eps", "need a positive, strictly decreasing schedule"));
                }
            }
            Task::Nls { state: st, m, dt, duration, .. } => {
                grid_dim(*m)?;
                state(st)?;
                if !(*dt > 0.0) || !(*duration > 0.0) {
                    return Err(cfg_err("task.dt", "need dt > 0 and duration > 0"));
                }
            }
            Task::DispersiveSweep { dts, .. } => {
                if dts.is_empty() || dts.iter().any(|d| !(*d > 0.0)) {
                    return Err(cfg_err("task.dts", "need positive time steps"));
                }
            }
            Task::Kernel { probe_m, .. } if *probe_m == 0 => return Err(cfg_err("task.probe_m", "must be positive")),
            _ => {}
        }
        self.hamiltonian()?;
        self.noise()?;
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the canonical serialization.
    pub fn config_hash(&self) -> String {
        let canon = serde_json::to_string(self).expect("scenario serializes");
        let digest = Sha256::digest(canon.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn hamiltonian(&self) -> std::result::Result<QuadraticHamiltonian<f64>, ConfigError> {
        let d = self.dim;
        let mut h = match self.builtin {
            None => QuadraticHamiltonian::zero(d),
            Some(Builtin::Free) => QuadraticHamiltonian::free(d),
            Some(Builtin::Harmonic) => QuadraticHamiltonian::harmonic(d),
            Some(Builtin::Saddle) => QuadraticHamiltonian::saddle(),
            Some(Builtin::RotatingTrap) => QuadraticHamiltonian::rotating_trap(d, self.omega.unwrap_or(0.5))
                .map_err(|e| cfg_err("builtin", e.to_string()))?,
        };
        let mat = |m: &Matrix, p: &str| to_mat(m, d, p);
        let vec = |v: &Vec<f64>, p: &str| to_vec(v, d, p);
        if let Some(c) = &self.g {
            h.g = time_fn(c, "G", mat)?;
        }
        if let Some(c) = &self.l {
            h.l = time_fn(c, "L", mat)?;
        }
        if let Some(c) = &self.e {
            h.e = time_fn(c, "E", mat)?;
        }
        if let Some(c) = &self.a {
            h.a = time_fn(c, "a", vec)?;
        }
        if let Some(c) = &self.b {
            h.b = time_fn(c, "b", vec)?;
        }
        if let Some(c) = &self.h0 {
            h.h0 = time_fn(c, "h0", |x: &f64, _| Ok(*x))?;
        }
        for (t, name) in [(self.horizon.t0 - self.horizon.half_width, "G"), (self.horizon.t0, "G")] {
            h.blocks(t).map_err(|e| cfg_err(name, e.to_string()))?;
        }
        Ok(h)
    }

    pub fn noise(&self) -> std::result::Result<NoiseHamiltonian<f64>, ConfigError> {
        let d = self.dim;
        let m = |o: &Option<Matrix>, p: &str| o.as_ref().map_or(Ok(Mat::zeros(d, d)), |m| to_mat(m, d, p));
        let v = |o: &Option<Vec<f64>>, p: &str| o.as_ref().map_or(Ok(Vector::zeros(d)), |v| to_vec(v, d, p));
        let (g, l, e) = (m(&self.k.g, "K.G")?, m(&self.k.l, "K.L")?, m(&self.k.e, "K.E")?);
        let lin = Vector::from_iterator(2 * d, v(&self.k.a, "K.a")?.iter().chain(v(&self.k.b, "K.b")?.iter()).copied());
        NoiseHamiltonian::new(g, l, e, lin).map_err(|err| cfg_err("K", err.to_string()))
    }

    pub fn grid(&self) -> TimeGrid<f64> {
        TimeGrid::new(self.horizon.t0, self.horizon.half_width, self.horizon.n).expect("validated horizon")
    }

    /// True when the driver depends on the seed.
    pub fn is_random(&self) -> bool {
        matches!(self.driver.kind, DriverKind::Brownian | DriverKind::Fbm)
    }

    /// The driver for `seed` (ignored by deterministic kinds).
    pub fn driver(&self, seed: u64) -> Result<DriverPath<f64>> {
        let grid = self.grid();
        let mut path = match self.driver.kind {
            DriverKind::Zero => return Ok(DriverPath::zero(grid)),
            DriverKind::Brownian => make_brownian(seed, grid, self.driver.scale),
            DriverKind::Fbm => {
                let mut p = make_fbm(self.driver.hurst.unwrap_or(0.5), seed, grid)?;
                p.values.iter_mut().for_each(|v| *v *= self.driver.scale);
                p
            }
            DriverKind::Csv => {
                let file = self.driver.file.as_deref().unwrap_or_default();
                let full = self.base_dir.as_deref().map_or_else(|| PathBuf::from(file), |b| b.join(file));
                let reader = std::io::BufReader::new(std::fs::File::open(&full)?);
                let p = read_csv(reader, self.mu)?;
                if p.grid.start() > grid.start() || p.grid.end() < grid.end() {
                    return Err(Error::InvalidArgument(format!("{} does not cover the horizon", full.display())));
                }
                p
            }
        };
        path.mu = self.mu;
        Ok(path)
    }

    pub fn flow_options(&self) -> FlowOptions<f64> {
        let t = &self.tolerances;
        FlowOptions {
            tol: t.picard,
            max_iter: t.max_iter,
            min_points: t.min_points,
            max_points: t.max_points,
            quad_tol: t.quadrature,
            projection_threshold: t.projection,
            ..FlowOptions::default()
        }
    }

    pub fn nls_config(&self, dt: f64, method: NlsMethod) -> NlsConfig<f64> {
        let mut c = NlsConfig::new(self.lambda, self.sigma, dt, method);
        c.mass_tol = self.tolerances.mass;
        c.picard_tol = self.tolerances.duhamel;
        c.flow = self.flow_options();
        if self.dim == 1 {
            c.kernel = KernelMethod::Spectral;
        }
        c
    }

    /// Hypotheses checked at 100 probe times across the horizon.
    pub fn hypotheses(&self, driver: &DriverPath<f64>) -> std::result::Result<HypothesisReport, ConfigError> {
        let g = self.grid();
        let probes: Vec<f64> =
            (0..100).map(|i| g.start() + (g.end() - g.start()) * i as f64 / 99.0).collect();
        Ok(validate_hypotheses(&self.hamiltonian()?, &self.noise()?, driver.mu, &probes))
    }

    /// Default grid size for tasks on wave functions.
    pub fn grid_points(&self, m: Option<usize>) -> usize {
        m.unwrap_or(if self.dim == 1 { 1024 } else { 256 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_parse() {
        for name in Scenario::builtin_names() {
            let sc = Scenario::builtin(name).unwrap();
            assert_eq!(sc.name.as_deref(), Some(name));
            sc.driver(1).unwrap();
        }
    }

    #[test]
    fn unknown_key_reports_its_path() {
        let text = r#"{"dim": 1, "horizon": {"t0": 0, "T": 1, "n": 9}, "task": {"kind": "flow", "s": 0, "t": 1, "bogus": 2}}"#;
        let err = Scenario::parse(text).unwrap_err();
        assert!(err.path.starts_with("task"), "{err}");
        let text = r#"{"dim": 1, "horizon": {"t0": 0, "T": 1, "n": 9}, "K": {"G": [[1.0]], "X": 1}, "task": {"kind": "flow", "s": 0, "t": 1}}"#;
        assert_eq!(Scenario::parse(text).unwrap_err().path, "K.X");
    }

    #[test]
    fn wrong_block_shape_is_rejected() {
        let text = r#"{"dim": 2, "G": [[1.0]], "horizon": {"t0": 0, "T": 1, "n": 9}, "task": {"kind": "flow", "s": 0, "t": 1}}"#;
        assert_eq!(Scenario::parse(text).unwrap_err().path, "G");
        let text = r#"{"schema": 7, "dim": 1, "horizon": {"t0": 0, "T": 1, "n": 9}, "task": {"kind": "flow", "s": 0, "t": 1}}"#;
        assert_eq!(Scenario::parse(text).unwrap_err().path, "schema");
    }

    #[test]
    fn table_coefficients_interpolate() {
        let text = r#"{"dim": 1, "E": [[1.0]], "G": {"times": [0, 1], "values": [[[1.0]], [[3.0]]]},
            "horizon": {"t0": 0, "T": 1, "n": 9}, "task": {"kind": "flow", "s": 0, "t": 1}}"#;
        let h = Scenario::parse(text).unwrap().hamiltonian().unwrap();
        assert!((h.blocks(0.5).unwrap().0[(0, 0)] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn hash_ignores_formatting_but_not_content() {
        let a = Scenario::parse(r#"{"dim":1,"horizon":{"t0":0,"T":1,"n":9},"task":{"kind":"flow","s":0,"t":1}}"#).unwrap();
        let b = Scenario::parse("{\n \"task\": {\"t\": 1, \"s\": 0, \"kind\": \"flow\"}, \"dim\": 1,\n \"horizon\": {\"n\": 9, \"T\": 1.0, \"t0\": 0}}")
            .unwrap();
        assert_eq!(a.config_hash(), b.config_hash());
        let c = Scenario::parse(r#"{"dim":1,"horizon":{"t0":0,"T":1,"n":9},"task":{"kind":"flow","s":0,"t":0.5}}"#).unwrap();
        assert_ne!(a.config_hash(), c.config_hash());
    }

    #[test]
    fn angular_momentum_hypotheses_follow_mu() {
        let sc = Scenario::builtin("angular_momentum").unwrap();
        assert!(sc.hypotheses(&sc.driver(0).unwrap()).unwrap().mv2);
        let mut low = sc.clone();
        low.mu = 0.45;
        assert!(!low.hypotheses(&low.driver(0).unwrap()).unwrap().mv2);
    }
}
