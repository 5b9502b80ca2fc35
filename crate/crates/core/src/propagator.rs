//! States on grids, closed-form Gaussian evolution, and kernel application.

use nalgebra::ComplexField;
use num_complex::Complex;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::flow::{solve_flow, AffineSymplecticMap, FlowOptions};
use crate::hamiltonians::{NoiseHamiltonian, QuadraticHamiltonian};
use crate::kernel::{hk_kernel, KernelClosedForm, SiegelMatrix};
use crate::linalg::{cdet, cinv, sqrt_det_principal, to_complex, CMat, CVector, SqrtDetTracker, Vector};
use crate::paths::{mollify, DriverPath};
use crate::scalar::{imag_unit, lit, real, to_f64, Real};

/// Samples of `ψ` on `[−L, L]^d` with `m` points per axis, `d ∈ {1, 2}`.
/// For `d = 2` the layout is row-major in `(x₁, x₂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction<T: Real> {
    pub dim: usize,
    pub lbox: T,
    pub m: usize,
    pub values: Vec<Complex<T>>,
    /// Quadrature error estimate recorded by [`apply_kernel`].
    pub quad_error: Option<T>,
}

impl<T: Real> WaveFunction<T> {
    pub fn new(dim: usize, lbox: T, m: usize, values: Vec<Complex<T>>) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::InvalidArgument(format!("grids support d = 1, 2, got {dim}")));
        }
        if m < 3 || !(lbox > T::zero()) {
            return Err(Error::InvalidArgument("need m >= 3 and a positive box".into()));
        }
        if values.len() != m.pow(dim as u32) {
            return Err(Error::Dimension(format!("expected {} values, got {}", m.pow(dim as u32), values.len())));
        }
        if values.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidArgument("wave function has non-finite values".into()));
        }
        Ok(Self { dim, lbox, m, values, quad_error: None })
    }

    pub fn from_fn(dim: usize, lbox: T, m: usize, f: impl Fn(&[T]) -> Complex<T>) -> Result<Self> {
        let axis = grid_axis(lbox, m);
        let values = match dim {
            1 => axis.iter().map(|&x| f(&[x])).collect(),
            2 => axis.iter().flat_map(|&a| axis.iter().map(move |&b| (a, b))).map(|(a, b)| f(&[a, b])).collect(),
            _ => Vec::new(),
        };
        Self::new(dim, lbox, m, values)
    }

    pub fn spacing(&self) -> T {
        (self.lbox + self.lbox) / lit::<T>((self.m - 1) as f64)
    }

    pub fn axis(&self) -> Vec<T> {
        grid_axis(self.lbox, self.m)
    }

    pub fn point(&self, idx: usize) -> Vec<T> {
        let ax = |i: usize| -self.lbox + self.spacing() * lit::<T>(i as f64);
        match self.dim {
            1 => vec![ax(idx)],
            _ => vec![ax(idx / self.m), ax(idx % self.m)],
        }
    }

    fn weight(&self, idx: usize) -> T {
        let h = self.spacing();
        let w1 = |i: usize| if i == 0 || i == self.m - 1 { h * lit::<T>(0.5) } else { h };
        match self.dim {
            1 => w1(idx),
            _ => w1(idx / self.m) * w1(idx % self.m),
        }
    }

    fn same_grid(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim || self.m != other.m || (self.lbox - other.lbox).abs() > lit(1e-12) {
            return Err(Error::Dimension("wave functions live on different grids".into()));
        }
        Ok(())
    }

    /// `⟨self, other⟩` by trapezoid quadrature.
    pub fn inner(&self, other: &Self) -> Result<Complex<T>> {
        self.same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .enumerate()
            .fold(Complex::new(T::zero(), T::zero()), |acc, (i, (a, b))| acc + a.conj() * b * real(self.weight(i))))
    }

    pub fn l2_norm(&self) -> T {
        self.values
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (i, z)| acc + z.norm_sqr() * self.weight(i))
            .sqrt()
    }

    pub fn l2_distance(&self, other: &Self) -> Result<T> {
        self.same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .enumerate()
            .fold(T::zero(), |acc, (i, (a, b))| acc + (a - b).norm_sqr() * self.weight(i))
            .sqrt())
    }

    pub fn normalized(mut self) -> Self {
        let n = self.l2_norm();
        if n > T::zero() {
            for z in &mut self.values {
                *z /= real(n);
            }
        }
        self
    }

    pub fn max_modulus(&self) -> T {
        self.values.iter().fold(T::zero(), |a, z| a.max(z.modulus()))
    }

    /// Partial derivative along `axis` by sixth-order central differences
    /// (zero outside the box).
    pub fn derivative(&self, axis: usize) -> Vec<Complex<T>> {
        const C: [f64; 3] = [3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0];
        let m = self.m as isize;
        let h = self.spacing();
        let stride: isize = if self.dim == 2 && axis == 0 { m } else { 1 };
        let coord = |idx: usize| -> isize {
            if self.dim == 2 && axis == 0 {
                idx as isize / m
            } else {
                idx as isize % m
            }
        };
        (0..self.values.len())
            .map(|idx| {
                let c = coord(idx);
                let mut acc = Complex::new(T::zero(), T::zero());
                for (k, w) in C.iter().enumerate() {
                    let o = k as isize + 1;
                    let fwd = if c + o < m { self.values[(idx as isize + o * stride) as usize] } else { Complex::new(T::zero(), T::zero()) };
                    let bwd = if c - o >= 0 { self.values[(idx as isize - o * stride) as usize] } else { Complex::new(T::zero(), T::zero()) };
                    acc += (fwd - bwd) * real(lit::<T>(*w));
                }
                acc / real(h)
            })
            .collect()
    }

    fn with_values(&self, values: Vec<Complex<T>>) -> Self {
        Self { dim: self.dim, lbox: self.lbox, m: self.m, values, quad_error: None }
    }

    /// `⟨q_axis⟩`, unnormalized.
    pub fn expect_position(&self, axis: usize) -> T {
        self.values
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (i, z)| acc + z.norm_sqr() * self.point(i)[axis] * self.weight(i))
    }

    /// `⟨−i∂_axis⟩`, unnormalized.
    pub fn expect_momentum(&self, axis: usize) -> T {
        let dpsi = self.derivative(axis);
        let s = self
            .values
            .iter()
            .zip(&dpsi)
            .enumerate()
            .fold(Complex::new(T::zero(), T::zero()), |acc, (i, (a, b))| acc + a.conj() * b * real(self.weight(i)));
        (s * -imag_unit::<T>()).re
    }
}

fn grid_axis<T: Real>(lbox: T, m: usize) -> Vec<T> {
    let h = (lbox + lbox) / lit::<T>((m - 1) as f64);
    (0..m).map(|i| -lbox + h * lit::<T>(i as f64)).collect()
}

/// `ψ(x) = exp(α + i p₀·(x − q₀) + ½ i (x − q₀)·Γ(x − q₀))`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState<T: Real> {
    pub center: Vector<T>,
    pub gamma: SiegelMatrix<T>,
    pub log_amp: Complex<T>,
}

impl<T: Real> GaussianState<T> {
    pub fn new(center: Vector<T>, gamma: SiegelMatrix<T>, log_amp: Complex<T>) -> Result<Self> {
        if center.len() != 2 * gamma.dim() {
            return Err(Error::Dimension("center must have length 2d".into()));
        }
        Ok(Self { center, gamma, log_amp })
    }

    /// Normalized coherent state `φ_z = T(z)φ₀`, `φ₀(x) = π^{-d/4} e^{−|x|²/2}`.
    pub fn coherent(z: &Vector<T>) -> Result<Self> {
        if z.len() % 2 != 0 || z.is_empty() {
            return Err(Error::Dimension("phase-space point must have even length".into()));
        }
        let d = z.len() / 2;
        let qp = z.rows(0, d).dot(&z.rows(d, d));
        let norm = -lit::<T>(d as f64 / 4.0) * T::pi().ln();
        Ok(Self { center: z.clone(), gamma: SiegelMatrix::i_identity(d), log_amp: Complex::new(norm, qp * lit(0.5)) })
    }

    pub fn dim(&self) -> usize {
        self.gamma.dim()
    }

    pub fn q(&self) -> Vector<T> {
        self.center.rows(0, self.dim()).into_owned()
    }

    pub fn p(&self) -> Vector<T> {
        let d = self.dim();
        self.center.rows(d, d).into_owned()
    }

    pub fn eval(&self, x: &[T]) -> Complex<T> {
        let d = self.dim();
        let i = imag_unit::<T>();
        let dx: CVector<T> = CVector::from_fn(d, |k, _| real(x[k] - self.center[k]));
        let lin = (0..d).fold(Complex::new(T::zero(), T::zero()), |a, k| a + real(self.center[d + k]) * dx[k]);
        let quad = (dx.transpose() * self.gamma.matrix() * &dx)[(0, 0)];
        (self.log_amp + i * lin + i * quad * real(lit::<T>(0.5))).exp()
    }

    /// Exact `L²` norm: `e^{Re α} π^{d/4} det(Im Γ)^{-1/4}`.
    pub fn norm(&self) -> T {
        let d = self.dim();
        let im = self.gamma.matrix().map(|z| z.im);
        let det = ((&im + im.transpose()) * lit::<T>(0.5)).determinant();
        self.log_amp.re.exp() * T::pi().powf(lit(d as f64 / 4.0)) * det.powf(lit(-0.25))
    }

    pub fn to_grid(&self, lbox: T, m: usize) -> Result<WaveFunction<T>> {
        WaveFunction::from_fn(self.dim(), lbox, m, |x| self.eval(x))
    }

    /// Exact evolution under the quantized affine flow.
    pub fn propagate(&self, flow: &AffineSymplecticMap<T>) -> Result<Self> {
        let d = self.dim();
        if flow.dim() != d {
            return Err(Error::Dimension("flow and state dimensions differ".into()));
        }
        let g = self.gamma.matrix();
        let image = |f: &crate::linalg::Mat<T>| {
            let blk = |r: usize, c: usize| to_complex(&f.view((r * d, c * d), (d, d)).into_owned());
            (blk(0, 0) + blk(0, 1) * g, blk(1, 0) + blk(1, 1) * g)
        };
        let mut tracker = SqrtDetTracker::start(Complex::new(T::one(), T::zero()));
        for (_, f) in flow.linear_history().iter().skip(1) {
            tracker.advance(cdet(&image(f).0))?;
        }
        let (den, num) = image(&flow.f);
        let inv = cinv(&den).ok_or(Error::NotSiegel { min_eig: 0.0 })?;
        let gamma = SiegelMatrix::new(num * inv)?;
        let action = flow.action_from(&self.center);
        let log_amp = self.log_amp + imag_unit::<T>() * real(action) - tracker.value().ln();
        Ok(Self { center: flow.apply(&self.center), gamma, log_amp })
    }

    /// `⟨self, other⟩ = ∫ conj(self) · other` in closed form.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        let d = self.dim();
        let i = imag_unit::<T>();
        let g1c = self.gamma.matrix().map(|z| z.conj());
        let g2 = other.gamma.matrix();
        let (q1, p1) = (self.q().map(real), self.p().map(real));
        let (q2, p2) = (other.q().map(real), other.p().map(real));
        // exponent ½xᵀAx + b·x + c
        let a = (g2 - &g1c) * i;
        let b = ((&p2 - g2 * &q2) - (&p1 - &g1c * &q1)) * i;
        let half = real(lit::<T>(0.5));
        let c = other.log_amp + self.log_amp.conj() + i * (-(p2.dot(&q2)) + half * (q2.transpose() * g2 * &q2)[(0, 0)])
            - i * (-(p1.dot(&q1)) + half * (q1.transpose() * &g1c * &q1)[(0, 0)]);
        let neg_a = -a;
        let inv = cinv(&neg_a).expect("Gaussian overlap form is invertible");
        let root = sqrt_det_principal(&neg_a).expect("Schur decomposition converges");
        let expo = c + half * (b.transpose() * inv * &b)[(0, 0)];
        real(T::two_pi().powf(lit(d as f64 / 2.0))) / root * expo.exp()
    }
}

/// How [`apply_kernel_with`] realizes `∫K(x,y)ψ(y)dy`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelMethod {
    /// Direct trapezoid sum, falling back to the spectral route in `d = 1`
    /// when the direct sum is under-resolved.
    Auto,
    Direct,
    /// `d = 1` only: chirp, free step in Fourier space, chirp.
    Spectral,
}

const SUPPORT_FLOOR: f64 = 1e-6;
const TAIL_TOL: f64 = 1e-5;

/// `ψ'(x) = ∫K(x,y)ψ(y)dy` on the grid of `psi` (see [`KernelMethod::Auto`]).
pub fn apply_kernel<T: Real>(kf: &KernelClosedForm<T>, psi: &WaveFunction<T>) -> Result<WaveFunction<T>> {
    apply_kernel_with(kf, psi, KernelMethod::Auto)
}

pub fn apply_kernel_with<T: Real>(
    kf: &KernelClosedForm<T>,
    psi: &WaveFunction<T>,
    method: KernelMethod,
) -> Result<WaveFunction<T>> {
    if kf.dim() != psi.dim {
        return Err(Error::Dimension(format!("kernel d = {}, state d = {}", kf.dim(), psi.dim)));
    }
    check_tails(psi, "input")?;
    let axis = psi.axis();
    let h = psi.spacing();
    let direct = |xs: &[T], ys: &[T], vals: &[Complex<T>], w: &[T]| match psi.dim {
        1 => direct_1d(kf, xs, ys, vals, w),
        _ => direct_2d(kf, xs, ys, vals, w),
    };
    let run_direct = || -> Result<WaveFunction<T>> {
        let w = trapezoid_weights(psi.m, h);
        let out = psi.with_values(direct(&axis, &axis, &psi.values, &w));
        nyquist_direct(kf, psi, &out)?;
        check_tails(&out, "output")?;
        // half-resolution rerun on the even-index subgrid
        let (cx, cv, cw) = coarse(psi);
        let coarse_out = direct(&cx, &cx, &cv, &cw);
        let err = coarse_distance(&out, &coarse_out);
        let mut out = out;
        out.quad_error = Some(err);
        Ok(out)
    };
    let run_spectral = || -> Result<WaveFunction<T>> {
        if psi.dim != 1 {
            return Err(Error::InvalidArgument("spectral route is one-dimensional".into()));
        }
        let vals = spectral_1d(kf, axis[0], h, &psi.values)?;
        let out = psi.with_values(vals);
        nyquist_spectral(kf, psi, &out)?;
        check_tails(&out, "output")?;
        let (cx, cv, _) = coarse(psi);
        let cvals = spectral_1d(kf, cx[0], h + h, &cv)?;
        let err = coarse_distance(&out, &cvals);
        let mut out = out;
        out.quad_error = Some(err);
        Ok(out)
    };
    match method {
        KernelMethod::Direct => run_direct(),
        KernelMethod::Spectral => run_spectral(),
        KernelMethod::Auto => match run_direct() {
            Err(Error::UnderResolved(msg)) if psi.dim == 1 => {
                log::debug!("direct kernel sum under-resolved ({msg}); using the spectral route");
                run_spectral()
            }
            other => other,
        },
    }
}

fn trapezoid_weights<T: Real>(n: usize, h: T) -> Vec<T> {
    (0..n).map(|i| if i == 0 || i == n - 1 { h * lit::<T>(0.5) } else { h }).collect()
}

/// Even-index subgrid: axis, values and weights.
fn coarse<T: Real>(psi: &WaveFunction<T>) -> (Vec<T>, Vec<Complex<T>>, Vec<T>) {
    let axis = psi.axis();
    let idx: Vec<usize> = (0..psi.m).step_by(2).collect();
    let cx: Vec<T> = idx.iter().map(|&i| axis[i]).collect();
    let vals = match psi.dim {
        1 => idx.iter().map(|&i| psi.values[i]).collect(),
        _ => idx.iter().flat_map(|&i| idx.iter().map(move |&j| (i, j))).map(|(i, j)| psi.values[i * psi.m + j]).collect(),
    };
    let h2 = psi.spacing() + psi.spacing();
    (cx, vals, trapezoid_weights(idx.len(), h2))
}

/// `L²` distance between the fine output restricted to even nodes and the coarse output.
fn coarse_distance<T: Real>(fine: &WaveFunction<T>, coarse_vals: &[Complex<T>]) -> T {
    let idx: Vec<usize> = (0..fine.m).step_by(2).collect();
    let n = idx.len();
    let w = (fine.spacing() + fine.spacing()).powi(fine.dim as i32);
    let mut acc = T::zero();
    for (k, cv) in coarse_vals.iter().enumerate() {
        let fi = match fine.dim {
            1 => idx[k],
            _ => idx[k / n] * fine.m + idx[k % n],
        };
        acc += (fine.values[fi] - cv).norm_sqr() * w;
    }
    acc.sqrt()
}

fn check_tails<T: Real>(psi: &WaveFunction<T>, what: &str) -> Result<()> {
    let max = psi.max_modulus();
    let m = psi.m;
    let edge = (0..psi.values.len()).filter(|&i| match psi.dim {
        1 => i == 0 || i == m - 1,
        _ => {
            let (a, b) = (i / m, i % m);
            a == 0 || b == 0 || a == m - 1 || b == m - 1
        }
    });
    let worst = edge.fold(T::zero(), |a, i| a.max(psi.values[i].modulus()));
    if worst > lit::<T>(TAIL_TOL) * max {
        return Err(Error::UnderResolved(format!(
            "{what} state not decayed at the box edge: {:.3e} of its maximum",
            to_f64(worst / max)
        )));
    }
    Ok(())
}

fn support<T: Real>(psi: &WaveFunction<T>) -> Vec<usize> {
    let thr = lit::<T>(SUPPORT_FLOOR) * psi.max_modulus();
    (0..psi.values.len()).filter(|&i| psi.values[i].modulus() >= thr).collect()
}

/// Local phase gradient of `ψ` along `axis` at `idx` (zero at the edge).
fn phase_gradient<T: Real>(psi: &WaveFunction<T>, idx: usize, axis: usize) -> T {
    let m = psi.m;
    let (c, stride) = match (psi.dim, axis) {
        (1, _) => (idx, 1),
        (_, 0) => (idx / m, m),
        _ => (idx % m, 1),
    };
    if c + 1 >= m {
        return T::zero();
    }
    let r = psi.values[idx + stride] * psi.values[idx].conj();
    crate::linalg::phase_of(r) / psi.spacing()
}

/// `|∂_y Φ(x,y) + ∂ arg ψ(y)|·h < π/2` for `x` at the corners of the output support
/// and every `y` in the input support.
fn nyquist_direct<T: Real>(kf: &KernelClosedForm<T>, psi: &WaveFunction<T>, out: &WaveFunction<T>) -> Result<()> {
    let d = psi.dim;
    let sin = support(psi);
    let sout = support(out);
    let mut lo = vec![T::max_value().unwrap(); d];
    let mut hi = vec![-T::max_value().unwrap(); d];
    for &i in &sout {
        let x = out.point(i);
        for a in 0..d {
            lo[a] = lo[a].min(x[a]);
            hi[a] = hi[a].max(x[a]);
        }
    }
    let corners: Vec<Vec<T>> = (0..(1usize << d))
        .map(|mask| (0..d).map(|a| if mask >> a & 1 == 1 { hi[a] } else { lo[a] }).collect())
        .collect();
    let h = psi.spacing();
    let mut worst = T::zero();
    for &j in &sin {
        let y = psi.point(j);
        for b in 0..d {
            let own = phase_gradient(psi, j, b);
            let base = (0..d).fold(kf.ly[b].re, |acc, k| acc + kf.qyy[(b, k)].re * y[k]);
            for x in &corners {
                let g = (0..d).fold(base, |acc, k| acc + kf.qxy[(k, b)].re * x[k]) + own;
                worst = worst.max(g.abs() * h);
            }
        }
    }
    if worst >= T::frac_pi_2() {
        return Err(Error::UnderResolved(format!("kernel phase changes by {:.3} per cell", to_f64(worst))));
    }
    Ok(())
}

fn direct_1d<T: Real>(kf: &KernelClosedForm<T>, xs: &[T], ys: &[T], vals: &[Complex<T>], w: &[T]) -> Vec<Complex<T>> {
    let g: Vec<Complex<T>> = vals.iter().zip(w).map(|(v, w)| v * real(*w)).collect();
    xs.par_iter()
        .map(|&x| {
            ys.iter()
                .zip(&g)
                .fold(Complex::new(T::zero(), T::zero()), |acc, (&y, gv)| acc + kf.eval(&[x], &[y]) * gv)
        })
        .collect()
}

/// Factored sum `Σ_y Π_{a,b} e^{iQxy_{ab} x_a y_b} g(y)`, one pair of real
/// matrix products per output row.
fn direct_2d<T: Real>(kf: &KernelClosedForm<T>, xs: &[T], ys: &[T], vals: &[Complex<T>], w: &[T]) -> Vec<Complex<T>> {
    use crate::linalg::Mat;
    let (nx, ny) = (xs.len(), ys.len());
    let i = imag_unit::<T>();
    let half = real(lit::<T>(0.5));
    let y_phase = |y: [T; 2]| {
        let yc = [real(y[0]), real(y[1])];
        let mut s = kf.ly[0] * yc[0] + kf.ly[1] * yc[1];
        for a in 0..2 {
            for b in 0..2 {
                s += half * kf.qyy[(a, b)] * yc[a] * yc[b];
            }
        }
        s
    };
    let g: Vec<Complex<T>> = (0..ny * ny)
        .map(|k| {
            let (a, b) = (k / ny, k % ny);
            vals[k] * real(w[a] * w[b]) * (i * y_phase([ys[a], ys[b]])).exp()
        })
        .collect();
    let e = |a: usize, b: usize| CMat::from_fn(nx, ny, |r, c| (i * kf.qxy[(a, b)] * real(xs[r] * ys[c])).exp());
    let (e11, e12, e21, e22) = (e(0, 0), e(0, 1), e(1, 0), e(1, 1));
    let e22r: Mat<T> = e22.map(|z| z.re);
    let e22i: Mat<T> = e22.map(|z| z.im);
    let rows: Vec<Vec<Complex<T>>> = (0..nx)
        .into_par_iter()
        .map(|r| {
            // H[y2, y1] = E11[x1,y1] E12[x1,y2] g(y1,y2), transposed for the product
            let hr = Mat::from_fn(ny, ny, |y2, y1| (e11[(r, y1)] * e12[(r, y2)] * g[y1 * ny + y2]).re);
            let hi = Mat::from_fn(ny, ny, |y2, y1| (e11[(r, y1)] * e12[(r, y2)] * g[y1 * ny + y2]).im);
            let rr = &e22r * &hr - &e22i * &hi;
            let ri = &e22r * &hi + &e22i * &hr;
            (0..nx)
                .map(|x2| {
                    let s = (0..ny).fold(Complex::new(T::zero(), T::zero()), |acc, y1| {
                        acc + e21[(x2, y1)] * Complex::new(rr[(x2, y1)], ri[(x2, y1)])
                    });
                    let xc = [real(xs[r]), real(xs[x2])];
                    let mut ph = kf.c + kf.lx[0] * xc[0] + kf.lx[1] * xc[1];
                    for a in 0..2 {
                        for b in 0..2 {
                            ph += half * kf.qxx[(a, b)] * xc[a] * xc[b];
                        }
                    }
                    kf.pref * (i * ph).exp() * s
                })
                .collect()
        })
        .collect();
    rows.concat()
}

/// Splits the one-dimensional phase as `(x−y)²/(2B) + ½γ₁x² + ½γ₂y²`.
fn spectral_split<T: Real>(kf: &KernelClosedForm<T>) -> Result<(T, Complex<T>, Complex<T>)> {
    let qxy = kf.qxy[(0, 0)];
    let scale = qxy.modulus().max(T::one());
    if qxy.im.abs() > lit::<T>(1e-9) * scale || qxy.re == T::zero() {
        return Err(Error::UnderResolved("kernel has no real off-diagonal phase for the spectral route".into()));
    }
    let b = -T::one() / qxy.re;
    let inv_b = real(T::one() / b);
    Ok((b, kf.qxx[(0, 0)] - inv_b, kf.qyy[(0, 0)] - inv_b))
}

fn spectral_1d<T: Real>(kf: &KernelClosedForm<T>, x0: T, h: T, vals: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
    let (b, g1, g2) = spectral_split(kf)?;
    let n = vals.len();
    let i = imag_unit::<T>();
    let half = real(lit::<T>(0.5));
    let x = |k: usize| real(x0 + h * lit::<T>(k as f64));
    let mut buf: Vec<Complex<f64>> = (0..n)
        .map(|k| {
            let v = vals[k] * (i * (half * g2 * x(k) * x(k) + kf.ly[0] * x(k))).exp();
            Complex::new(to_f64(v.re), to_f64(v.im))
        })
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let (bf, hf) = (to_f64(b), to_f64(h));
    for (k, z) in buf.iter_mut().enumerate() {
        let kk = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
        let freq = 2.0 * std::f64::consts::PI * kk / (n as f64 * hf);
        *z *= Complex::new(0.0, -bf * freq * freq / 2.0).exp() / n as f64;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let free_pref = (real(T::two_pi() * b) * i).sqrt();
    let ratio = kf.pref * free_pref;
    Ok((0..n)
        .map(|k| {
            let v = Complex::new(lit::<T>(buf[k].re), lit::<T>(buf[k].im));
            ratio * (i * (half * g1 * x(k) * x(k) + kf.lx[0] * x(k) + kf.c)).exp() * v
        })
        .collect())
}

fn nyquist_spectral<T: Real>(kf: &KernelClosedForm<T>, psi: &WaveFunction<T>, out: &WaveFunction<T>) -> Result<()> {
    let (_, g1, g2) = spectral_split(kf)?;
    let h = psi.spacing();
    let worst_in = support(psi).into_iter().fold(T::zero(), |a, j| {
        let y = psi.point(j)[0];
        a.max(((g2.re * y + kf.ly[0].re) + phase_gradient(psi, j, 0)).abs() * h)
    });
    let worst_out = support(out).into_iter().fold(T::zero(), |a, j| {
        let x = out.point(j)[0];
        a.max((g1.re * x + kf.lx[0].re).abs() * h)
    });
    let worst = worst_in.max(worst_out);
    if worst >= T::frac_pi_2() {
        return Err(Error::UnderResolved(format!("chirp phase changes by {:.3} per cell", to_f64(worst))));
    }
    Ok(())
}

/// Exact evolution of a Gaussian under the quantized flow.
pub fn propagate_gaussian<T: Real>(flow: &AffineSymplecticMap<T>, g: &GaussianState<T>) -> Result<GaussianState<T>> {
    g.propagate(flow)
}

/// One mollification level of [`propagate_rough`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CauchyEntry {
    pub eps: f64,
    /// `‖ψ_{ε_k} − ψ_{ε_{k−1}}‖_{L²}` (zero for the first level).
    pub l2dist: f64,
}

/// Successive distances of the mollified solutions.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchyReport {
    pub entries: Vec<CauchyEntry>,
    /// `‖β^{ε_k} − β^{ε_{k−1}}‖∞`, aligned with `entries`.
    pub path_distances: Vec<f64>,
    /// `H²` surrogate norm of the initial state.
    pub h2norm: f64,
}

impl CauchyReport {
    /// `l2dist / (path distance · h2norm)` for every level after the first.
    pub fn constants(&self) -> Vec<f64> {
        self.entries
            .iter()
            .zip(&self.path_distances)
            .skip(1)
            .map(|(e, p)| e.l2dist / (p * self.h2norm))
            .collect()
    }
}

/// Propagates `psi` from `s` to `t` along each mollification `β^{ε_k}` of
/// the driver and reports how the results converge.
#[allow(clippy::too_many_arguments)]
pub fn propagate_rough<T: Real>(
    h: &QuadraticHamiltonian<T>,
    k: &NoiseHamiltonian<T>,
    beta: &DriverPath<T>,
    psi: &WaveFunction<T>,
    t: T,
    s: T,
    eps_schedule: &[T],
    opts: &FlowOptions<T>,
) -> Result<(WaveFunction<T>, CauchyReport)> {
    if eps_schedule.is_empty() || eps_schedule.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument("mollification schedule must be non-empty and strictly decreasing".into()));
    }
    let theta = SiegelMatrix::i_identity(h.dim);
    let mut entries = Vec::new();
    let mut path_distances = Vec::new();
    let mut prev: Option<(WaveFunction<T>, DriverPath<T>)> = None;
    for &eps in eps_schedule {
        let path = if beta.smooth { beta.clone() } else { mollify(beta, eps)? };
        let flow = solve_flow(h, k, &path, t, s, opts)?;
        let out = if flow.t == flow.s { psi.clone() } else { apply_kernel(&hk_kernel(&flow, &theta)?, psi)? };
        let (dist, pd) = match &prev {
            Some((p, pp)) => (to_f64(out.l2_distance(p)?), to_f64(path.sup_distance(pp))),
            None => (0.0, 0.0),
        };
        entries.push(CauchyEntry { eps: to_f64(eps), l2dist: dist });
        path_distances.push(pd);
        prev = Some((out, path));
    }
    let report = CauchyReport { entries, path_distances, h2norm: to_f64(hk_sobolev_norm(psi, 2)) };
    check_cauchy(&report)?;
    Ok((prev.unwrap().0, report))
}

/// Requires net contraction over the schedule and no level whose Lipschitz
/// ratio exceeds ten times the median.
fn check_cauchy(report: &CauchyReport) -> Result<()> {
    let e = &report.entries;
    if e.len() >= 3 {
        let (first, last) = (e[1].l2dist, e[e.len() - 1].l2dist);
        if last > first + 1e-10 {
            return Err(Error::NotCauchy(format!("no contraction: {first:.3e} at the start, {last:.3e} at the end")));
        }
    }
    let mut c: Vec<f64> = report.constants().into_iter().filter(|x| x.is_finite()).collect();
    if c.len() >= 2 {
        let worst = c.iter().cloned().fold(0.0, f64::max);
        c.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = c[c.len() / 2];
        if worst > 10.0 * median {
            return Err(Error::NotCauchy(format!("Lipschitz ratio {worst:.3e} against median {median:.3e}")));
        }
    }
    Ok(())
}
/// `|⟨ψ', (a·q + b·p)ψ'⟩ − ⟨ψ, ((a,b)·Φ(t,s)z)ψ⟩|` with `ψ' = apply_kernel(kf, ψ)`.
pub fn egorov_residual<T: Real>(
    flow: &AffineSymplecticMap<T>,
    kf: &KernelClosedForm<T>,
    a: &Vector<T>,
    b: &Vector<T>,
    psi: &WaveFunction<T>,
) -> Result<T> {
    let d = psi.dim;
    if a.len() != d || b.len() != d || flow.dim() != d {
        return Err(Error::Dimension("observable and state dimensions differ".into()));
    }
    let out = if flow.t == flow.s { psi.clone() } else { apply_kernel(kf, psi)? };
    let lhs = linear_expectation(&out, a, b);
    let mut ab = Vector::zeros(2 * d);
    ab.rows_mut(0, d).copy_from(a);
    ab.rows_mut(d, d).copy_from(b);
    let pulled = flow.f.transpose() * &ab;
    let shift = ab.dot(&flow.v);
    let norm2 = psi.l2_norm().powi(2);
    let rhs = linear_expectation(psi, &pulled.rows(0, d).into_owned(), &pulled.rows(d, d).into_owned()) + shift * norm2;
    Ok((lhs - rhs).abs())
}

fn linear_expectation<T: Real>(psi: &WaveFunction<T>, a: &Vector<T>, b: &Vector<T>) -> T {
    (0..psi.dim).fold(T::zero(), |acc, k| acc + a[k] * psi.expect_position(k) + b[k] * psi.expect_momentum(k))
}

/// Surrogate of the harmonic-oscillator Sobolev norm:
/// `k = 0` gives `‖ψ‖`, `k ≥ 1` gives `(Σ_{|α|≤k} ‖∂^αψ‖²)^{1/2} + ‖|x|^kψ‖`.
pub fn hk_sobolev_norm<T: Real>(psi: &WaveFunction<T>, k: usize) -> T {
    if k == 0 {
        return psi.l2_norm();
    }
    let norm_of = |v: Vec<Complex<T>>| psi.with_values(v).l2_norm();
    let mut sq = psi.l2_norm().powi(2);
    let mut level = vec![psi.clone()];
    for _ in 0..k {
        let mut next = Vec::new();
        for w in &level {
            for axis in 0..psi.dim {
                next.push(w.with_values(w.derivative(axis)));
            }
        }
        sq += next.iter().fold(T::zero(), |a, w| a + w.l2_norm().powi(2));
        level = next;
    }
    let weighted: Vec<Complex<T>> = psi
        .values
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let r2 = psi.point(i).iter().fold(T::zero(), |a, x| a + *x * *x);
            z * real(r2.powf(lit(k as f64 / 2.0)))
        })
        .collect();
    sq.sqrt() + norm_of(weighted)
}
