//! Mild nonlinear Schrödinger equation `i∂ₜψ = Ĥ_β(t)ψ + λ|ψ|^{2σ}ψ`.

use nalgebra::ComplexField;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::flow::{solve_flow, FlowOptions};
use crate::hamiltonians::{NoiseHamiltonian, QuadraticHamiltonian};
use crate::kernel::{hk_kernel, KernelClosedForm, SiegelMatrix};
use crate::linalg::{Mat, Vector};
use crate::paths::DriverPath;
use crate::propagator::{apply_kernel_with, hk_sobolev_norm, KernelMethod, WaveFunction};
use crate::scalar::{imag_unit, lit, real, to_f64, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NlsMethod {
    /// Strang splitting: half nonlinear phase, exact linear step, half nonlinear phase.
    Splitstep,
    /// Picard iteration on the integral equation (short horizons only).
    Duhamel,
}

#[derive(Debug, Clone, Copy)]
pub struct NlsConfig<T: Real> {
    pub lambda: T,
    pub sigma: T,
    pub dt: T,
    pub method: NlsMethod,
    /// Fixed-point tolerance of the Duhamel iteration.
    pub picard_tol: T,
    pub picard_max_iter: usize,
    /// Largest accepted mass change over one macro step.
    pub mass_tol: T,
    /// How often a rejected step may be halved before giving up.
    pub max_halvings: usize,
    pub kernel: KernelMethod,
    pub flow: FlowOptions<T>,
}

impl<T: Real> NlsConfig<T> {
    pub fn new(lambda: T, sigma: T, dt: T, method: NlsMethod) -> Self {
        Self {
            lambda,
            sigma,
            dt,
            method,
            picard_tol: lit(1e-8),
            picard_max_iter: 60,
            mass_tol: lit(1e-5),
            max_halvings: 6,
            kernel: KernelMethod::Auto,
            flow: FlowOptions::default(),
        }
    }

    /// `σ < 2/d`, the range of the `L²` theory.
    pub fn l2_subcritical(&self, d: usize) -> bool {
        self.sigma < lit::<T>(2.0 / d as f64)
    }
}

/// States at the accepted step times.
#[derive(Debug, Clone)]
pub struct Trajectory<T: Real> {
    pub times: Vec<T>,
    pub states: Vec<WaveFunction<T>>,
}

impl<T: Real> Trajectory<T> {
    pub fn masses(&self) -> Vec<T> {
        self.states.iter().map(|s| s.l2_norm().powi(2)).collect()
    }

    pub fn last(&self) -> &WaveFunction<T> {
        self.states.last().expect("trajectory holds the initial state")
    }

    /// Rows `t,mass,h1norm`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,mass,h1norm\n");
        for (t, s) in self.times.iter().zip(&self.states) {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e}\n",
                to_f64(*t),
                to_f64(s.l2_norm().powi(2)),
                to_f64(hk_sobolev_norm(s, 1))
            ));
        }
        out
    }
}

/// `ψ ← e^{−iλ|ψ|^{2σ}τ}ψ`.
fn nonlinear_phase<T: Real>(psi: &mut WaveFunction<T>, lambda: T, sigma: T, tau: T) {
    let floor = lit::<T>(1e-300);
    for z in &mut psi.values {
        let power = ((sigma + sigma) * z.modulus().max(floor).ln()).exp();
        *z *= (-imag_unit::<T>() * real(lambda * power * tau)).exp();
    }
}

/// `|ψ|^{2σ}ψ`.
fn nonlinearity<T: Real>(psi: &WaveFunction<T>, sigma: T) -> Vec<Complex<T>> {
    let floor = lit::<T>(1e-300);
    psi.values
        .iter()
        .map(|z| z * real(((sigma + sigma) * z.modulus().max(floor).ln()).exp()))
        .collect()
}

enum LinearStep<T: Real> {
    Kernel(KernelClosedForm<T>),
    /// `A = I`, `B = 0`, `v_q = 0`: multiplication by `e^{i(½x·Cx + v_p·x + c)}`.
    Multiply { c: Mat<T>, v_p: Vector<T>, phase: T },
}

impl<T: Real> LinearStep<T> {
    fn build(
        h: &QuadraticHamiltonian<T>,
        k: &NoiseHamiltonian<T>,
        beta: &DriverPath<T>,
        t: T,
        s: T,
        opts: &FlowOptions<T>,
    ) -> Result<Self> {
        let flow = solve_flow(h, k, beta, t, s, opts)?;
        let d = h.dim;
        let tol = lit::<T>(1e-14);
        let small = |v: &[T]| v.iter().all(|x| x.abs() <= tol);
        let fixes_positions = small((flow.a() - Mat::<T>::identity(d, d)).as_slice())
            && small(flow.b().as_slice())
            && small(flow.v_q().as_slice());
        if fixes_positions {
            let phase = flow.action_from(&Vector::zeros(2 * d));
            return Ok(Self::Multiply { c: flow.c(), v_p: flow.v_p(), phase });
        }
        Ok(Self::Kernel(hk_kernel(&flow, &SiegelMatrix::i_identity(d))?))
    }

    fn apply(&self, psi: &WaveFunction<T>, method: KernelMethod) -> Result<WaveFunction<T>> {
        match self {
            Self::Kernel(kf) => apply_kernel_with(kf, psi, method),
            Self::Multiply { c, v_p, phase } => {
                let mut out = psi.clone();
                let half = lit::<T>(0.5);
                for (i, z) in out.values.iter_mut().enumerate() {
                    let x = Vector::from_vec(psi.point(i));
                    let f = half * x.dot(&(c * &x)) + v_p.dot(&x) + *phase;
                    *z *= (imag_unit::<T>() * real(f)).exp();
                }
                Ok(out)
            }
        }
    }
}

/// Solves on `[s, s + horizon]` with the method of `cfg`.
#[allow(clippy::too_many_arguments)]
pub fn solve_nls<T: Real>(
    h: &QuadraticHamiltonian<T>,
    k: &NoiseHamiltonian<T>,
    beta: &DriverPath<T>,
    cfg: &NlsConfig<T>,
    psi0: &WaveFunction<T>,
    s: T,
    horizon: T,
) -> Result<Trajectory<T>> {
    if !(cfg.dt > T::zero()) || !(cfg.sigma > T::zero()) || !(horizon >= T::zero()) {
        return Err(Error::InvalidArgument("need dt > 0, sigma > 0 and a non-negative horizon".into()));
    }
    if h.dim != psi0.dim {
        return Err(Error::Dimension("Hamiltonian and state dimensions differ".into()));
    }
    match cfg.method {
        NlsMethod::Splitstep => splitstep(h, k, beta, cfg, psi0, s, s + horizon),
        NlsMethod::Duhamel => duhamel(h, k, beta, cfg, psi0, s, s + horizon),
    }
}

#[allow(clippy::too_many_arguments)]
fn splitstep<T: Real>(
    h: &QuadraticHamiltonian<T>,
    k: &NoiseHamiltonian<T>,
    beta: &DriverPath<T>,
    cfg: &NlsConfig<T>,
    psi0: &WaveFunction<T>,
    s: T,
    end: T,
) -> Result<Trajectory<T>> {
    let mut traj = Trajectory { times: vec![s], states: vec![psi0.clone()] };
    let mut u = s;
    let mut psi = psi0.clone();
    let half = lit::<T>(0.5);
    let tiny = lit::<T>(1e-14) * (end - s).abs().max(T::one());
    while end - u > tiny {
        let mut dt = cfg.dt.min(end - u);
        let mut halvings = 0;
        loop {
            let mass0 = psi.l2_norm().powi(2);
            let mut next = psi.clone();
            nonlinear_phase(&mut next, cfg.lambda, cfg.sigma, dt * half);
            next = LinearStep::build(h, k, beta, u + dt, u, &cfg.flow)?.apply(&next, cfg.kernel)?;
            nonlinear_phase(&mut next, cfg.lambda, cfg.sigma, dt * half);
            let drift = (next.l2_norm().powi(2) - mass0).abs();
            if drift <= cfg.mass_tol {
                psi = next;
                u += dt;
                break;
            }
            if halvings == cfg.max_halvings {
                return Err(Error::StepRejected { drift: to_f64(drift), t: to_f64(u) });
            }
            log::debug!("mass drift {:.3e} at t = {:.6}; halving the step", to_f64(drift), to_f64(u));
            dt *= half;
            halvings += 1;
        }
        traj.times.push(u);
        traj.states.push(psi.clone());
    }
    Ok(traj)
}

#[allow(clippy::too_many_arguments)]
fn duhamel<T: Real>(
    h: &QuadraticHamiltonian<T>,
    k: &NoiseHamiltonian<T>,
    beta: &DriverPath<T>,
    cfg: &NlsConfig<T>,
    psi0: &WaveFunction<T>,
    s: T,
    end: T,
) -> Result<Trajectory<T>> {
    let n = ((to_f64(end - s) / to_f64(cfg.dt)).ceil() as usize).max(1);
    let times: Vec<T> = (0..=n).map(|j| s + (end - s) * lit::<T>(j as f64 / n as f64)).collect();
    let steps: Vec<LinearStep<T>> = times
        .windows(2)
        .map(|w| LinearStep::build(h, k, beta, w[1], w[0], &cfg.flow))
        .collect::<Result<_>>()?;
    let dt = (end - s) / lit::<T>(n as f64);
    let half = lit::<T>(0.5);

    // free part U(t_j, s)ψ₀
    let mut free = vec![psi0.clone()];
    for st in &steps {
        free.push(st.apply(free.last().unwrap(), cfg.kernel)?);
    }
    let mut current = free.clone();
    let minus_i_lambda = -imag_unit::<T>() * real(cfg.lambda);
    let mut last_change = lit::<T>(f64::INFINITY);
    for it in 1..=cfg.picard_max_iter {
        // S_j = U(t_j, t_{j−1})S_{j−1} + dt N_j,  I_j = S_j − ½dt N_j (S_0 = ½dt N_0)
        let nl: Vec<Vec<Complex<T>>> = current.iter().map(|p| nonlinearity(p, cfg.sigma)).collect();
        let scaled = |v: &[Complex<T>], c: T| v.iter().map(|z| z * real(c)).collect::<Vec<_>>();
        let mut acc = psi0.clone();
        acc.values = scaled(&nl[0], dt * half);
        let mut next = vec![psi0.clone()];
        for j in 1..=n {
            let moved = steps[j - 1].apply(&acc, cfg.kernel)?;
            acc = moved.clone();
            for (a, b) in acc.values.iter_mut().zip(&nl[j]) {
                *a += b * real(dt);
            }
            let mut state = free[j].clone();
            for ((z, a), b) in state.values.iter_mut().zip(&acc.values).zip(&nl[j]) {
                *z += minus_i_lambda * (a - b * real(dt * half));
            }
            state.quad_error = None;
            next.push(state);
        }
        let change = next
            .iter()
            .zip(&current)
            .map(|(a, b)| a.l2_distance(b))
            .collect::<Result<Vec<T>>>()?
            .into_iter()
            .fold(T::zero(), |a, b| a.max(b));
        current = next;
        last_change = change;
        if change <= cfg.picard_tol {
            log::debug!("Duhamel iteration converged after {it} sweeps");
            return Ok(Trajectory { times, states: current });
        }
        if !change.is_finite() {
            break;
        }
    }
    Err(Error::NoContraction { residual: to_f64(last_change), iterations: cfg.picard_max_iter })
}

/// `max_t |‖ψ(t)‖ − ‖ψ(s)‖|`.
pub fn mass_residual<T: Real>(traj: &Trajectory<T>) -> T {
    let n0 = traj.states[0].l2_norm();
    traj.states.iter().fold(T::zero(), |a, s| a.max((s.l2_norm() - n0).abs()))
}

/// `‖(a·x + b·∇)ψ(t)‖` along the trajectory.
pub fn h1_track<T: Real>(traj: &Trajectory<T>, a: &Vector<T>, b: &Vector<T>) -> Vec<T> {
    traj.states
        .iter()
        .map(|psi| {
            let d = psi.dim;
            let grads: Vec<Vec<Complex<T>>> = (0..d).map(|ax| psi.derivative(ax)).collect();
            let values = (0..psi.values.len())
                .map(|i| {
                    let x = psi.point(i);
                    (0..d).fold(Complex::new(T::zero(), T::zero()), |acc, ax| {
                        acc + psi.values[i] * real(a[ax] * x[ax]) + grads[ax][i] * real(b[ax])
                    })
                })
                .collect();
            let mut w = psi.clone();
            w.values = values;
            w.l2_norm()
        })
        .collect()
}
