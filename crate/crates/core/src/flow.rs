//! Rough-driven affine symplectic flow.
//!
//! The flow of `H(t) + β̇K` solves
//! `Φ(t,s) = Φ_K(β_t − β_s) + ∫_s^t Φ_K(β_t − β_τ) J S_H(τ) Φ(τ,s) dτ`,
//! in which only point values of `β` appear. Degree-one and degree-zero terms
//! are lifted to a homogeneous quadratic Hamiltonian on `(q, q0, p, p0)` with
//! `q0 ≡ 1` (see [`QuadraticHamiltonian::extended_s`]), so one solve of the
//! equation above on the extended space yields the linear part, the
//! translation and the action increment together.

use log::debug;

use crate::error::{Error, Result};
use crate::hamiltonians::{NoiseHamiltonian, QuadraticHamiltonian};
use crate::linalg::{expm, max_abs, mul_small_into, spectral_norm, symplectic_j, symplectic_projection, symplectic_residual, Mat, Vector};
use crate::paths::DriverPath;
use crate::scalar::{lit, to_f64, Real};

/// Solver knobs for [`solve_flow`].
#[derive(Debug, Clone, Copy)]
pub struct FlowOptions<T: Real> {
    /// Picard stopping tolerance on successive iterates (max norm).
    pub tol: T,
    pub max_iter: usize,
    /// Trapezoid points per breakpoint interval on the first pass.
    pub min_points: usize,
    pub max_points: usize,
    /// Acceptance threshold between successive Richardson-extrapolated results.
    pub quad_tol: T,
    /// Apply the symplectic cleanup when the residual exceeds `projection_threshold`.
    pub project: bool,
    pub projection_threshold: T,
    /// Upper bound on stored intermediate flows (used for branch tracking).
    pub history_len: usize,
}

impl<T: Real> Default for FlowOptions<T> {
    fn default() -> Self {
        Self {
            tol: lit(1e-12),
            max_iter: 50,
            min_points: 8,
            max_points: 1024,
            quad_tol: lit(1e-10),
            project: true,
            projection_threshold: lit(1e-11),
            history_len: 256,
        }
    }
}

/// Diagnostics attached to a solved flow.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FlowResiduals {
    pub picard: f64,
    pub iterations: usize,
    pub quadrature: f64,
    pub points_per_interval: usize,
    pub symplectic: f64,
    pub projected: bool,
}

impl Default for FlowResiduals {
    fn default() -> Self {
        Self { picard: 0.0, iterations: 0, quadrature: 0.0, points_per_interval: 0, symplectic: 0.0, projected: false }
    }
}

/// `Φ(t,s) z = F z + v` together with its lift on the extended phase space.
#[derive(Debug, Clone)]
pub struct AffineSymplecticMap<T: Real> {
    pub f: Mat<T>,
    pub v: Vector<T>,
    pub t: T,
    pub s: T,
    ext: Mat<T>,
    history: Vec<(T, Mat<T>)>,
    pub residuals: FlowResiduals,
}

fn ext_index(d: usize) -> (Vec<usize>, usize, usize) {
    // (q, p) positions inside (q, q0, p, p0), then q0 and p0
    let m = d + 1;
    let idx = (0..d).chain(m..m + d).collect();
    (idx, d, m + d)
}

impl<T: Real> AffineSymplecticMap<T> {
    pub fn dim(&self) -> usize {
        self.f.nrows() / 2
    }

    /// Builds from an extended flow and the extended flows at intermediate times.
    pub fn from_extended(ext: Mat<T>, t: T, s: T, mut history: Vec<(T, Mat<T>)>) -> Self {
        let d = ext.nrows() / 2 - 1;
        let (idx, q0, _) = ext_index(d);
        let f = Mat::from_fn(2 * d, 2 * d, |i, j| ext[(idx[i], idx[j])]);
        let v = Vector::from_fn(2 * d, |i, _| ext[(idx[i], q0)]);
        if history.is_empty() {
            let n = ext.nrows();
            history.push((s, Mat::identity(n, n)));
            history.push((t, ext.clone()));
        }
        Self { f, v, t, s, ext, history, residuals: FlowResiduals::default() }
    }

    pub fn identity(d: usize, s: T) -> Self {
        let n = 2 * d + 2;
        Self::from_extended(Mat::identity(n, n), s, s, vec![(s, Mat::identity(n, n))])
    }

    /// Exact flow of a constant-coefficient Hamiltonian without noise,
    /// `exp((t − s) J̃ S̃)`, with `checkpoints` evenly spaced history entries.
    pub fn autonomous(h: &QuadraticHamiltonian<T>, t: T, s: T, checkpoints: usize) -> Result<Self> {
        let d = h.dim;
        let gen = symplectic_j::<T>(d + 1) * h.extended_s(s)?;
        let steps = checkpoints.max(1);
        let history: Vec<_> = (0..=steps)
            .map(|k| {
                let tau = s + (t - s) * lit::<T>(k as f64 / steps as f64);
                (tau, expm(&(&gen * (tau - s)), lit(1e-16)))
            })
            .collect();
        let ext = history.last().unwrap().1.clone();
        Ok(Self::from_extended(ext, t, s, history))
    }

    /// Extended `(2d+2)`-square flow on `(q, q0, p, p0)`.
    pub fn extended(&self) -> &Mat<T> {
        &self.ext
    }

    /// Intermediate extended flows `Φ̃(τ, s)` from `τ = s` to `τ = t`.
    pub fn history(&self) -> &[(T, Mat<T>)] {
        &self.history
    }

    /// Linear part `F(τ, s)` at every history checkpoint.
    pub fn linear_history(&self) -> Vec<(T, Mat<T>)> {
        let d = self.dim();
        let (idx, _, _) = ext_index(d);
        self.history
            .iter()
            .map(|(tau, e)| (*tau, Mat::from_fn(2 * d, 2 * d, |i, j| e[(idx[i], idx[j])])))
            .collect()
    }

    fn block(&self, r: usize, c: usize) -> Mat<T> {
        let d = self.dim();
        self.f.view((r * d, c * d), (d, d)).into_owned()
    }

    pub fn a(&self) -> Mat<T> {
        self.block(0, 0)
    }
    pub fn b(&self) -> Mat<T> {
        self.block(0, 1)
    }
    pub fn c(&self) -> Mat<T> {
        self.block(1, 0)
    }
    pub fn d_block(&self) -> Mat<T> {
        self.block(1, 1)
    }
    pub fn v_q(&self) -> Vector<T> {
        self.v.rows(0, self.dim()).into_owned()
    }
    pub fn v_p(&self) -> Vector<T> {
        let d = self.dim();
        self.v.rows(d, d).into_owned()
    }

    pub fn apply(&self, z: &Vector<T>) -> Vector<T> {
        &self.f * z + &self.v
    }

    /// `p0(t) − p0(s)` for the trajectory starting at `z`: `−∫ (V·z_u + 2 h0)`
    /// including the noise contribution.
    pub fn p0_increment(&self, z: &Vector<T>) -> T {
        let d = self.dim();
        let (idx, q0, p0) = ext_index(d);
        let mut acc = self.ext[(p0, q0)];
        for i in 0..2 * d {
            acc += self.ext[(p0, idx[i])] * z[i];
        }
        acc
    }

    /// Classical action `∫(q̇·p − H_β) du` along the trajectory from `z`,
    /// via the Euler identity on the extended space:
    /// `½(p_t·q_t − p_s·q_s + p0(t) − p0(s))`.
    pub fn action_from(&self, z: &Vector<T>) -> T {
        let d = self.dim();
        let zt = self.apply(z);
        let dot = |w: &Vector<T>| w.rows(0, d).dot(&w.rows(d, d));
        lit::<T>(0.5) * (dot(&zt) - dot(z) + self.p0_increment(z))
    }

    pub fn symplectic_residual(&self) -> T {
        symplectic_residual(&self.f)
    }

    /// `self` followed by `later` (`later.s` must equal `self.t`).
    pub fn then(&self, later: &Self) -> Self {
        let ext = &later.ext * &self.ext;
        let mut history = self.history.clone();
        for (tau, e) in later.history.iter().skip(1) {
            history.push((*tau, e * &self.ext));
        }
        let mut out = Self::from_extended(ext, later.t, self.s, history);
        out.residuals.symplectic = to_f64(out.symplectic_residual());
        out
    }
}

/// Noise flow `exp(δ J S_K)` on `R^{2d}`.
///
/// With `L_K = E_K = 0` the generator squares to zero and the two-term form
/// `I + δ J S_K` is exact.
pub fn phi_noise<T: Real>(k: &NoiseHamiltonian<T>, delta: T) -> Mat<T> {
    let gen = k.s().generator();
    let n = gen.nrows();
    let nilpotent = k.l.iter().chain(k.e.iter()).all(|x| *x == T::zero());
    if nilpotent {
        Mat::identity(n, n) + gen * delta
    } else {
        expm(&(gen * delta), lit(1e-13))
    }
}

fn exp_noise_ext<T: Real>(gen: &Mat<T>, gen2: &Mat<T>, nilpotent3: bool, delta: T) -> Mat<T> {
    let n = gen.nrows();
    if nilpotent3 {
        Mat::identity(n, n) + gen * delta + gen2 * (delta * delta * lit::<T>(0.5))
    } else {
        expm(&(gen * delta), lit(1e-14))
    }
}

struct Subgrid<T: Real> {
    nodes: Vec<T>,
    /// Points per breakpoint interval; interval `i` spans nodes `i·per ..= (i+1)·per`.
    per: usize,
}

fn subgrid<T: Real>(breaks: &[T], per: usize) -> Subgrid<T> {
    let mut nodes = Vec::with_capacity((breaks.len() - 1) * per + 1);
    nodes.push(breaks[0]);
    for w in breaks.windows(2) {
        for k in 1..=per {
            let x = if k == per { w[1] } else { w[0] + (w[1] - w[0]) * lit::<T>(k as f64 / per as f64) };
            nodes.push(x);
        }
    }
    Subgrid { nodes, per }
}

/// Inverse of a symplectic matrix, `−J Mᵀ J`.
fn symplectic_inverse<T: Real>(m: &Mat<T>, j: &Mat<T>) -> Mat<T> {
    let n = m.nrows();
    let (mut a, mut b) = (Mat::zeros(n, n), Mat::zeros(n, n));
    mul_small_into(&mut a, j, &m.transpose(), false);
    mul_small_into(&mut b, &a, j, false);
    -b
}

/// `e^{±(β(τ_j) − β(τ_0)) J S_K}` at every subgrid node.
fn noise_factors<T: Real>(
    noise_gen: &Mat<T>,
    noise_gen2: &Mat<T>,
    nilpotent3: bool,
    beta: &DriverPath<T>,
    grid: &Subgrid<T>,
    jx: &Mat<T>,
) -> (Vec<Mat<T>>, Vec<Mat<T>>) {
    let nodes = &grid.nodes;
    let b0 = beta.eval(nodes[0]);
    let deltas: Vec<T> = nodes.iter().map(|&tau| beta.eval(tau) - b0).collect();
    let fwd: Vec<Mat<T>> = if nilpotent3 || beta.mollifier_width().is_some() {
        deltas.iter().map(|&dl| exp_noise_ext(noise_gen, noise_gen2, nilpotent3, dl)).collect()
    } else {
        // β is linear between breakpoints: chain one step factor inside each
        // interval and restart from a fresh exponential at every breakpoint
        let per = grid.per;
        let mut out = Vec::with_capacity(nodes.len());
        let mut start = exp_noise_ext(noise_gen, noise_gen2, false, deltas[0]);
        out.push(start.clone());
        for i in 0..(nodes.len() - 1) / per {
            let (a, b) = (i * per, (i + 1) * per);
            let step = exp_noise_ext(noise_gen, noise_gen2, false, (deltas[b] - deltas[a]) / lit::<T>(per as f64));
            let mut cur = start.clone();
            for _ in a + 1..b {
                let mut next = Mat::zeros(cur.nrows(), cur.ncols());
                mul_small_into(&mut next, &cur, &step, false);
                out.push(next.clone());
                cur = next;
            }
            start = exp_noise_ext(noise_gen, noise_gen2, false, deltas[b]);
            out.push(start.clone());
        }
        out
    };
    let bwd = fwd.iter().map(|m| symplectic_inverse(m, jx)).collect();
    (fwd, bwd)
}

struct PicardOutcome<T: Real> {
    solution: Vec<Mat<T>>,
    residual: T,
    iterations: usize,
}

/// Picard iteration for the discretized integral equation on one subgrid.
fn picard<T: Real>(
    h: &QuadraticHamiltonian<T>,
    noise_gen: &Mat<T>,
    noise_gen2: &Mat<T>,
    nilpotent3: bool,
    beta: &DriverPath<T>,
    grid: &Subgrid<T>,
    warm: Option<&[Mat<T>]>,
    opts: &FlowOptions<T>,
) -> Result<PicardOutcome<T>> {
    let d = h.dim;
    let jx = symplectic_j::<T>(d + 1);
    let nodes = &grid.nodes;
    let n = nodes.len();
    let (fwd, bwd) = noise_factors(noise_gen, noise_gen2, nilpotent3, beta, grid, &jx);
    let mut gens = Vec::with_capacity(n);
    let const_h = h.g.is_const() && h.l.is_const() && h.e.is_const() && h.a.is_const() && h.b.is_const() && h.h0.is_const();
    let g0 = &jx * h.extended_s(nodes[0])?;
    for (j, &tau) in nodes.iter().enumerate() {
        let m = if const_h { g0.clone() } else { &jx * h.extended_s(tau)? };
        // Q_j J S_H(τ_j): the left factor of the interaction-picture integrand
        let mut q = Mat::zeros(m.nrows(), m.ncols());
        mul_small_into(&mut q, &bwd[j], &m, false);
        gens.push(q);
    }

    let dim = noise_gen.nrows();
    let half = lit::<T>(0.5);
    // a solution on the half-resolution grid sits at the even nodes
    let mut x: Vec<Mat<T>> = match warm {
        Some(w) if 2 * (w.len() - 1) == n - 1 => (0..n)
            .map(|j| if j % 2 == 0 { w[j / 2].clone() } else { (&w[j / 2] + &w[j / 2 + 1]) * half })
            .collect(),
        _ => fwd.clone(),
    };
    let mut last_halving = (0usize, T::max_value().unwrap());
    let mut cum = Mat::<T>::zeros(dim, dim);
    let mut prev = Mat::<T>::zeros(dim, dim);
    let mut cur = Mat::<T>::zeros(dim, dim);
    let mut xn = Mat::<T>::zeros(dim, dim);
    for it in 1..=opts.max_iter {
        // x_j ← F_j (I + ∫_{τ_0}^{τ_j} Q J S_H x), updated in place: the integrand
        // at j only needs the old x_j, which is read before it is replaced
        cum.fill(T::zero());
        mul_small_into(&mut prev, &gens[0], &x[0], false);
        let mut res = T::zero();
        for j in 1..n {
            mul_small_into(&mut cur, &gens[j], &x[j], false);
            let w = (nodes[j] - nodes[j - 1]) * half;
            for ((c, a), b) in cum.iter_mut().zip(prev.iter()).zip(cur.iter()) {
                *c += w * (*a + *b);
            }
            xn.copy_from(&fwd[j]);
            mul_small_into(&mut xn, &fwd[j], &cum, true);
            let (mut diff, mut scale) = (T::zero(), T::one());
            for (a, b) in xn.iter().zip(x[j].iter()) {
                diff = diff.max((*a - *b).abs());
                scale = scale.max(a.abs());
            }
            res = res.max(diff / scale);
            x[j].copy_from(&xn);
            std::mem::swap(&mut prev, &mut cur);
        }
        if !res.is_finite() {
            return Err(Error::NoContraction { residual: f64::INFINITY, iterations: it });
        }
        if res <= opts.tol {
            return Ok(PicardOutcome { solution: x, residual: res, iterations: it });
        }
        if res <= last_halving.1 * half {
            last_halving = (it, res);
        }
    }
    Err(Error::NoContraction { residual: to_f64(last_halving.1), iterations: opts.max_iter })
}

/// Solves the integral equation for `Φ_{H_β}(t, s)` (either time order).
pub fn solve_flow<T: Real>(
    h: &QuadraticHamiltonian<T>,
    k: &NoiseHamiltonian<T>,
    beta: &DriverPath<T>,
    t: T,
    s: T,
    opts: &FlowOptions<T>,
) -> Result<AffineSymplecticMap<T>> {
    if h.dim != k.dim {
        return Err(Error::Dimension(format!("H has d = {}, K has d = {}", h.dim, k.dim)));
    }
    if !(opts.tol > T::zero()) {
        return Err(Error::InvalidArgument("flow tolerance must be > 0".into()));
    }
    if !beta.grid.contains(t) || !beta.grid.contains(s) {
        return Err(Error::InvalidArgument(format!(
            "times ({}, {}) outside the driver interval",
            to_f64(s),
            to_f64(t)
        )));
    }
    let d = h.dim;
    if (t - s).abs() < lit(1e-14) {
        let mut id = AffineSymplecticMap::identity(d, s);
        id.t = t;
        return Ok(id);
    }

    let noise_gen = symplectic_j::<T>(d + 1) * k.extended_s();
    let const_h = h.g.is_const() && h.l.is_const() && h.e.is_const() && h.a.is_const() && h.b.is_const() && h.h0.is_const();
    if const_h && (max_abs(&noise_gen) == T::zero() || beta.oscillation(s, t) == T::zero()) {
        // no noise acts on [s, t]: the flow is a single exponential
        let mut map = AffineSymplecticMap::autonomous(h, t, s, opts.history_len.max(2))?;
        map.residuals = FlowResiduals {
            picard: 0.0,
            iterations: 0,
            quadrature: 0.0,
            points_per_interval: 0,
            symplectic: to_f64(symplectic_residual(&map.f)),
            projected: false,
        };
        return Ok(map);
    }
    let noise_gen2 = &noise_gen * &noise_gen;
    let nilpotent3 = max_abs(&(&noise_gen2 * &noise_gen)) == T::zero();

    let (lo, hi) = if s < t { (s, t) } else { (t, s) };
    let mut breaks = beta.breakpoints(lo, hi);
    if t < s {
        breaks.reverse();
    }

    let mut per = opts.min_points.max(1);
    let mut prev_end: Option<Mat<T>> = None;
    let mut prev_rich: Option<Mat<T>> = None;
    let mut last_change = T::max_value().unwrap();
    let mut warm: Option<Vec<Mat<T>>> = None;
    loop {
        let grid = subgrid(&breaks, per);
        let out = picard(h, &noise_gen, &noise_gen2, nilpotent3, beta, &grid, warm.as_deref(), opts)?;
        let end = out.solution.last().unwrap().clone();
        if let Some(pe) = &prev_end {
            let rich = (&end * lit::<T>(4.0) - pe) * (T::one() / lit::<T>(3.0));
            if let Some(pr) = &prev_rich {
                let change = max_abs(&(&rich - pr)) / max_abs(&rich).max(T::one());
                last_change = change;
                if change <= opts.quad_tol {
                    return Ok(finish(rich, t, s, &grid, out, per, change, opts));
                }
            }
            prev_rich = Some(rich);
        }
        prev_end = Some(end);
        warm = Some(out.solution);
        if per * 2 > opts.max_points {
            return Err(Error::QuadratureUnderResolved { change: to_f64(last_change) });
        }
        per *= 2;
    }
}

#[allow(clippy::too_many_arguments)]
fn finish<T: Real>(
    ext: Mat<T>,
    t: T,
    s: T,
    grid: &Subgrid<T>,
    out: PicardOutcome<T>,
    per: usize,
    change: T,
    opts: &FlowOptions<T>,
) -> AffineSymplecticMap<T> {
    let n = grid.nodes.len();
    let stride = (n / opts.history_len.max(2)).max(1);
    let mut history: Vec<(T, Mat<T>)> = (0..n - 1)
        .step_by(stride)
        .map(|j| (grid.nodes[j], out.solution[j].clone()))
        .collect();
    let mut ext = ext;
    let mut projected = false;
    let mut sres = symplectic_residual(&ext);
    if opts.project && sres > opts.projection_threshold {
        let (g, sweeps) = symplectic_projection(&ext);
        debug!(
            "symplectic cleanup on [{}, {}]: residual {:e} -> {:e} in {} sweeps",
            to_f64(s),
            to_f64(t),
            to_f64(sres),
            to_f64(symplectic_residual(&g)),
            sweeps
        );
        ext = g;
        sres = symplectic_residual(&ext);
        projected = true;
    }
    history.push((t, ext.clone()));
    let mut map = AffineSymplecticMap::from_extended(ext, t, s, history);
    map.residuals = FlowResiduals {
        picard: to_f64(out.residual),
        iterations: out.iterations,
        quadrature: to_f64(change),
        points_per_interval: per,
        symplectic: to_f64(sres),
        projected,
    };
    map
}

/// Chapman–Kolmogorov defect `‖Φ(t,t1) − Φ(t,s)Φ(s,t1)‖` (linear part and
/// translation, max norm).
pub fn chapman_residual<T: Real>(
    h: &QuadraticHamiltonian<T>,
    k: &NoiseHamiltonian<T>,
    beta: &DriverPath<T>,
    t: T,
    s: T,
    t1: T,
    opts: &FlowOptions<T>,
) -> Result<T> {
    let direct = solve_flow(h, k, beta, t, t1, opts)?;
    let first = solve_flow(h, k, beta, s, t1, opts)?;
    let second = solve_flow(h, k, beta, t, s, opts)?;
    let composed = first.then(&second);
    let df = max_abs(&(&direct.f - &composed.f));
    let dv = (&direct.v - &composed.v).iter().fold(T::zero(), |a, x| a.max(x.abs()));
    Ok(df.max(dv))
}

/// `(|z_{β₁}(t) − z_{β₂}(t)|, ‖β₁ − β₂‖∞ |z|)`; their ratio bounds the
/// Lipschitz constant of `β ↦ Φ_β(t,s) z`.
#[allow(clippy::too_many_arguments)]
pub fn lipschitz_probe<T: Real>(
    h: &QuadraticHamiltonian<T>,
    k: &NoiseHamiltonian<T>,
    beta1: &DriverPath<T>,
    beta2: &DriverPath<T>,
    t: T,
    s: T,
    z: &Vector<T>,
    opts: &FlowOptions<T>,
) -> Result<(T, T)> {
    let f1 = solve_flow(h, k, beta1, t, s, opts)?;
    let f2 = solve_flow(h, k, beta2, t, s, opts)?;
    let diff = (f1.apply(z) - f2.apply(z)).norm();
    Ok((diff, beta1.sup_distance(beta2) * z.norm()))
}

/// Threshold below which `|det B|` is treated as a caustic.
pub fn default_caustic_threshold<T: Real>(flow: &AffineSymplecticMap<T>) -> T {
    let d = flow.dim() as i32;
    lit::<T>(1e-10) * spectral_norm(&flow.f).max(T::one()).powi(d)
}

/// Initial momentum of the trajectory going from `y` at time `s` to `x` at time `t`.
pub fn boundary_momentum<T: Real>(flow: &AffineSymplecticMap<T>, x: &Vector<T>, y: &Vector<T>) -> Result<Vector<T>> {
    let b = flow.b();
    let det = b.determinant();
    let thr = default_caustic_threshold(flow);
    if det.abs() < thr {
        return Err(Error::Caustic { det: to_f64(det.abs()), threshold: to_f64(thr) });
    }
    let rhs = x - flow.a() * y - flow.v_q();
    b.lu().solve(&rhs).ok_or(Error::Caustic { det: to_f64(det.abs()), threshold: to_f64(thr) })
}

/// Action `S(t,s;x,y)` along the unique trajectory from `y` to `x`.
pub fn action<T: Real>(flow: &AffineSymplecticMap<T>, x: &Vector<T>, y: &Vector<T>) -> Result<T> {
    let p = boundary_momentum(flow, x, y)?;
    let z = Vector::from_iterator(2 * flow.dim(), y.iter().chain(p.iter()).copied());
    Ok(flow.action_from(&z))
}

/// Short-time remainders at one step size.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ShortTimeSample {
    pub dt: f64,
    /// `osc(β, [s, s+dt])`.
    pub osc: f64,
    /// `‖F − I − (β_t − β_s) J S_K − dt J S_H(s)‖_max`.
    pub linear: f64,
    /// `‖B − dt E_H(s)‖_max`.
    pub b_block: f64,
}

/// Remainders of the first-order expansion of `F(s + dt, s)` for each `dt`.
pub fn short_time_remainders<T: Real>(
    h: &QuadraticHamiltonian<T>,
    k: &NoiseHamiltonian<T>,
    beta: &DriverPath<T>,
    s: T,
    dts: &[T],
    opts: &FlowOptions<T>,
) -> Result<Vec<ShortTimeSample>> {
    let d = h.dim;
    let mk = k.s().generator();
    let mh = crate::hamiltonians::assemble_s(h, s)?.generator();
    let e = h.e_block(s);
    dts.iter()
        .map(|&dt| {
            let t = s + dt;
            let f = solve_flow(h, k, beta, t, s, opts)?;
            let lin = Mat::identity(2 * d, 2 * d) + &mk * (beta.eval(t) - beta.eval(s)) + &mh * dt;
            let b = f.b() - &e * dt;
            Ok(ShortTimeSample {
                dt: to_f64(dt),
                osc: to_f64(beta.oscillation(s, t)),
                linear: to_f64(max_abs(&(&f.f - lin))),
                b_block: to_f64(max_abs(&b)),
            })
        })
        .collect()
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    num / den
}
