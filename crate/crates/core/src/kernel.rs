//! Closed-form propagator kernels.
//!
//! Every kernel is stored as
//! `K(x,y) = pref · exp(i(½Qxx x·x + Qxy x·y + ½Qyy y·y + lx·x + ly·y + c))`.

use nalgebra::ComplexField;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::flow::{action, AffineSymplecticMap};
use crate::hamiltonians::{validate_hypotheses, NoiseHamiltonian, QuadraticHamiltonian};
use crate::linalg::{
    cdet, cinv, complexify, max_abs_c, min_eigenvalue, sqrt_det_i_symmetric, sqrt_det_principal, to_complex, CMat,
    CVector, Mat, SqrtDetTracker, Vector,
};
use crate::paths::DriverPath;
use crate::propagator::GaussianState;
use crate::scalar::{imag_unit, lit, real, to_f64, Real};

/// Complex symmetric `d×d` matrix with positive definite imaginary part.
#[derive(Debug, Clone, PartialEq)]
pub struct SiegelMatrix<T: Real> {
    m: CMat<T>,
}

impl<T: Real> SiegelMatrix<T> {
    pub fn new(m: CMat<T>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension("Siegel matrix must be square".into()));
        }
        let asym = max_abs_c(&(&m - m.transpose()));
        if asym > lit::<T>(1e-10) * max_abs_c(&m).max(T::one()) {
            return Err(Error::NonSymmetric { residual: to_f64(asym) });
        }
        let im = m.map(|z| z.im);
        let min_eig = min_eigenvalue(&((&im + im.transpose()) * lit::<T>(0.5)));
        if !(min_eig > lit(1e-12)) {
            return Err(Error::NotSiegel { min_eig: to_f64(min_eig) });
        }
        let m = (&m + m.transpose()) * real(lit::<T>(0.5));
        Ok(Self { m })
    }

    /// `i·I`.
    pub fn i_identity(d: usize) -> Self {
        Self { m: CMat::identity(d, d) * imag_unit::<T>() }
    }

    pub fn matrix(&self) -> &CMat<T> {
        &self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn into_inner(self) -> CMat<T> {
        self.m
    }
}

/// Kernel `pref · exp(iΦ(x,y))` with `Φ` a complex quadratic polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelClosedForm<T: Real> {
    pub pref: Complex<T>,
    pub qxx: CMat<T>,
    pub qxy: CMat<T>,
    pub qyy: CMat<T>,
    pub lx: CVector<T>,
    pub ly: CVector<T>,
    pub c: Complex<T>,
}

impl<T: Real> KernelClosedForm<T> {
    pub fn dim(&self) -> usize {
        self.qxx.nrows()
    }

    pub fn phase(&self, x: &[T], y: &[T]) -> Complex<T> {
        let d = self.dim();
        let half = real(lit::<T>(0.5));
        let mut acc = self.c;
        for i in 0..d {
            let xi = real(x[i]);
            let yi = real(y[i]);
            acc += self.lx[i] * xi + self.ly[i] * yi;
            for j in 0..d {
                acc += half * self.qxx[(i, j)] * xi * real(x[j]);
                acc += half * self.qyy[(i, j)] * yi * real(y[j]);
                acc += self.qxy[(i, j)] * xi * real(y[j]);
            }
        }
        acc
    }

    pub fn eval(&self, x: &[T], y: &[T]) -> Complex<T> {
        self.pref * (imag_unit::<T>() * self.phase(x, y)).exp()
    }

    /// Joint phase as a quadratic form in `w = (x, y)`: `(Q, l, c)`.
    pub fn joint(&self) -> (CMat<T>, CVector<T>, Complex<T>) {
        let d = self.dim();
        let mut q = CMat::zeros(2 * d, 2 * d);
        q.view_mut((0, 0), (d, d)).copy_from(&self.qxx);
        q.view_mut((0, d), (d, d)).copy_from(&self.qxy);
        q.view_mut((d, 0), (d, d)).copy_from(&self.qxy.transpose());
        q.view_mut((d, d), (d, d)).copy_from(&self.qyy);
        let mut l = CVector::zeros(2 * d);
        l.rows_mut(0, d).copy_from(&self.lx);
        l.rows_mut(d, d).copy_from(&self.ly);
        (q, l, self.c)
    }

    /// Largest `|K₁ − K₂|` over the probe points, relative to `max |K₁|`.
    pub fn max_deviation(&self, other: &Self, points: &[(Vec<T>, Vec<T>)]) -> T {
        let mut dev = T::zero();
        let mut scale = T::zero();
        for (x, y) in points {
            let a = self.eval(x, y);
            dev = dev.max((a - other.eval(x, y)).modulus());
            scale = scale.max(a.modulus());
        }
        dev / scale.max(lit(1e-300))
    }
}

/// `Γ = (C + iD)(A + iB)^{-1}`.
pub fn gamma_matrix<T: Real>(flow: &AffineSymplecticMap<T>) -> Result<SiegelMatrix<T>> {
    let num = complexify(&flow.c(), &flow.d_block());
    let den = complexify(&flow.a(), &flow.b());
    let inv = cinv(&den).ok_or_else(|| Error::NotSiegel { min_eig: 0.0 })?;
    SiegelMatrix::new(num * inv)
}

/// Complex quadratic polynomial `½uᵀQu + l·u + c` in `n` real variables.
struct Quad<T: Real> {
    q: CMat<T>,
    l: CVector<T>,
    c: Complex<T>,
}

/// Real affine function `a·u + α`.
#[derive(Clone)]
struct Affine<T: Real> {
    a: Vector<T>,
    alpha: T,
}

impl<T: Real> Affine<T> {
    fn var(n: usize, i: usize) -> Self {
        let mut a = Vector::zeros(n);
        a[i] = T::one();
        Self { a, alpha: T::zero() }
    }

    fn minus(&self, o: &Self) -> Self {
        Self { a: &self.a - &o.a, alpha: self.alpha - o.alpha }
    }
}

impl<T: Real> Quad<T> {
    fn zero(n: usize) -> Self {
        Self { q: CMat::zeros(n, n), l: CVector::zeros(n), c: Complex::new(T::zero(), T::zero()) }
    }

    /// `self += k · f · g`.
    fn add_product(&mut self, k: Complex<T>, f: &Affine<T>, g: &Affine<T>) {
        let n = f.a.len();
        for i in 0..n {
            for j in 0..n {
                self.q[(i, j)] += k * real(f.a[i] * g.a[j] + g.a[i] * f.a[j]);
            }
            self.l[i] += k * real(f.alpha * g.a[i] + g.alpha * f.a[i]);
        }
        self.c += k * real(f.alpha * g.alpha);
    }

    fn add_affine(&mut self, k: Complex<T>, f: &Affine<T>) {
        for i in 0..f.a.len() {
            self.l[i] += k * real(f.a[i]);
        }
        self.c += k * real(f.alpha);
    }
}

/// `det(i M_Θ/2)` with `M_Θ = C − iD − Θ(A − iB)` for a linear part `f`.
fn m_theta_det<T: Real>(f: &Mat<T>, theta: &CMat<T>) -> Complex<T> {
    let d = f.nrows() / 2;
    let blk = |r: usize, c: usize| f.view((r * d, c * d), (d, d)).into_owned();
    let i = imag_unit::<T>();
    let m = to_complex(&blk(1, 0)) - to_complex(&blk(1, 1)) * i - theta * (to_complex(&blk(0, 0)) - to_complex(&blk(0, 1)) * i);
    cdet(&(m * (i * real(lit::<T>(0.5)))))
}

/// Kernel obtained by integrating the frozen-Gaussian phase over phase space
/// in closed form. `theta` is the width matrix of the outgoing Gaussians.
pub fn hk_kernel<T: Real>(flow: &AffineSymplecticMap<T>, theta: &SiegelMatrix<T>) -> Result<KernelClosedForm<T>> {
    let d = flow.dim();
    if theta.dim() != d {
        return Err(Error::Dimension(format!("Θ is {}x{}, flow has d = {d}", theta.dim(), theta.dim())));
    }
    let n = 4 * d;
    let (zx, zy) = (2 * d, 3 * d);
    let i = imag_unit::<T>();
    let one = real(T::one());
    let half = real(lit::<T>(0.5));

    let q: Vec<Affine<T>> = (0..d).map(|k| Affine::var(n, k)).collect();
    let p: Vec<Affine<T>> = (0..d).map(|k| Affine::var(n, d + k)).collect();
    let x: Vec<Affine<T>> = (0..d).map(|k| Affine::var(n, zx + k)).collect();
    let y: Vec<Affine<T>> = (0..d).map(|k| Affine::var(n, zy + k)).collect();
    let image = |row: usize| {
        let mut a = Vector::zeros(n);
        for j in 0..2 * d {
            a[j] = flow.f[(row, j)];
        }
        Affine { a, alpha: flow.v[row] }
    };
    let qt: Vec<Affine<T>> = (0..d).map(image).collect();
    let pt: Vec<Affine<T>> = (d..2 * d).map(image).collect();
    let dp0 = {
        let mut a = Vector::zeros(n);
        let base = flow.p0_increment(&Vector::zeros(2 * d));
        for j in 0..2 * d {
            let mut e = Vector::zeros(2 * d);
            e[j] = T::one();
            a[j] = flow.p0_increment(&e) - base;
        }
        Affine { a, alpha: base }
    };

    let mut psi = Quad::zero(n);
    // classical action ½(p_t·q_t − p·q + Δp0)
    for k in 0..d {
        psi.add_product(half, &pt[k], &qt[k]);
        psi.add_product(-half, &p[k], &q[k]);
    }
    psi.add_affine(half, &dp0);
    let dx: Vec<Affine<T>> = (0..d).map(|k| x[k].minus(&qt[k])).collect();
    let dy: Vec<Affine<T>> = (0..d).map(|k| y[k].minus(&q[k])).collect();
    for k in 0..d {
        psi.add_product(one, &pt[k], &dx[k]);
        psi.add_product(-one, &p[k], &dy[k]);
        psi.add_product(half * i, &dy[k], &dy[k]);
        for j in 0..d {
            psi.add_product(half * theta.matrix()[(k, j)], &dx[k], &dx[j]);
        }
    }
    let two = 2 * d;
    let pz = psi.q.view((0, 0), (two, two)).into_owned();
    let det_p = cdet(&pz);
    let scale = max_abs_c(&pz).max(T::one());
    if det_p.modulus() < lit::<T>(1e-12) * scale.powi(2 * two as i32) {
        return Err(Error::DegenerateHessian { det: to_f64(det_p.modulus()) });
    }
    let pinv = cinv(&pz).ok_or(Error::DegenerateHessian { det: to_f64(det_p.modulus()) })?;
    let qzw = psi.q.view((0, two), (two, two)).into_owned();
    let qww = psi.q.view((two, two), (two, two)).into_owned();
    let lz = psi.l.rows(0, two).into_owned();
    let lw = psi.l.rows(two, two).into_owned();
    let red = &qww - qzw.transpose() * &pinv * &qzw;
    let lred = &lw - qzw.transpose() * (&pinv * &lz);
    let cred = psi.c - half * (lz.transpose() * &pinv * &lz)[(0, 0)];

    let root_p = sqrt_det_principal(&(&pz * (-i))).ok_or(Error::DegenerateHessian { det: to_f64(det_p.modulus()) })?;
    let root_m = tracked_m_theta_root(flow, theta.matrix())?;
    let two_pi = T::two_pi();
    let dd = d as f64;
    let pref = real(lit::<T>(2f64.powf(dd / 2.0)) * two_pi.powf(lit(-dd / 2.0))) * root_m / root_p;

    let red = (&red + red.transpose()) * half;
    Ok(KernelClosedForm {
        pref,
        qxx: red.view((0, 0), (d, d)).into_owned(),
        qxy: red.view((0, d), (d, d)).into_owned(),
        qyy: red.view((d, d), (d, d)).into_owned(),
        lx: lred.rows(0, d).into_owned(),
        ly: lred.rows(d, d).into_owned(),
        c: cred,
    })
}

/// `det^{1/2}(i M_Θ/2)` followed from `τ = s`, where it equals the principal
/// root of `det(½(I − iΘ))`.
fn tracked_m_theta_root<T: Real>(flow: &AffineSymplecticMap<T>, theta: &CMat<T>) -> Result<Complex<T>> {
    let d = flow.dim();
    let i = imag_unit::<T>();
    let start = (CMat::identity(d, d) - theta * i) * real(lit::<T>(0.5));
    let mut tracker = SqrtDetTracker::start(sqrt_det_principal(&start).ok_or(Error::BranchLost { jump: f64::NAN })?);
    for (_, f) in flow.linear_history().iter().skip(1) {
        tracker.advance(m_theta_det(f, theta))?;
    }
    Ok(tracker.value())
}

/// Kernel in generating-function form: `(2πi)^{-d/2} det^{-1/2}(B) e^{iS(x,y)}`.
///
/// The square root is followed from `i·sgn(t−s)·E_H(s)` along the flow
/// history. Fails with [`Error::HypothesisViolated`] when the hypotheses behind
/// this form do not hold and with [`Error::Caustic`] when
/// `|det B| < max(γ_min|t−s|^d, 1e−10 max(1,‖F‖)^d)`.
pub fn mehler_kernel<T: Real>(
    flow: &AffineSymplecticMap<T>,
    h: &QuadraticHamiltonian<T>,
    k: &NoiseHamiltonian<T>,
    beta: &DriverPath<T>,
    gamma_min: T,
) -> Result<KernelClosedForm<T>> {
    let d = flow.dim();
    let (t, s) = (flow.t, flow.s);
    let dt = (t - s).abs();
    if dt == T::zero() {
        return Err(Error::InvalidArgument("kernel needs t ≠ s".into()));
    }
    let times: Vec<T> = flow.history().iter().map(|(tau, _)| *tau).collect();
    let report = validate_hypotheses(h, k, beta.mu, &times);
    if !report.kernel_ready() {
        return Err(Error::HypothesisViolated(format!("{report:?}")));
    }
    let b = flow.b();
    let det_b = b.determinant();
    let thr = (gamma_min * dt.powi(d as i32)).max(crate::flow::default_caustic_threshold(flow));
    if det_b.abs() < thr {
        return Err(Error::Caustic { det: to_f64(det_b.abs()), threshold: to_f64(thr) });
    }
    let binv = b.clone().try_inverse().ok_or(Error::Caustic { det: 0.0, threshold: to_f64(thr) })?;
    let sym = |m: Mat<T>| (&m + m.transpose()) * lit::<T>(0.5);
    let qxx = sym(flow.d_block() * &binv);
    let qyy = sym(&binv * flow.a());
    let qxy = -binv.transpose();
    let vq = flow.v_q();
    let lx = flow.v_p() - flow.d_block() * (&binv * &vq);
    let ly = &binv * &vq;
    let zero = Vector::zeros(d);
    let c = action(flow, &zero, &zero)?;

    let sign = (t - s).signum();
    let mut tracker = SqrtDetTracker::start(sqrt_det_i_symmetric(&h.e_block(s), sign));
    for (tau, f) in flow.linear_history().iter().skip(1) {
        let w = (*tau - s).abs();
        let bt = f.view((0, d), (d, d)).into_owned() * (T::one() / w);
        tracker.advance(cdet(&(to_complex(&bt) * imag_unit::<T>())))?;
    }
    let root = tracker.value();
    let two_pi_dt = T::two_pi() * dt;
    let pref = real(two_pi_dt.powf(lit(-(d as f64) / 2.0))) / root;

    let kf = KernelClosedForm {
        pref,
        qxx: to_complex(&qxx),
        qxy: to_complex(&qxy),
        qyy: to_complex(&qyy),
        lx: lx.map(real),
        ly: ly.map(real),
        c: real(c),
    };
    check_against_action(&kf, flow)?;
    Ok(kf)
}

fn check_against_action<T: Real>(kf: &KernelClosedForm<T>, flow: &AffineSymplecticMap<T>) -> Result<()> {
    let d = flow.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..3 {
        let x: Vec<T> = (0..d).map(|_| lit(rng.gen_range(-1.0..1.0))).collect();
        let y: Vec<T> = (0..d).map(|_| lit(rng.gen_range(-1.0..1.0))).collect();
        let direct = action(flow, &Vector::from_vec(x.clone()), &Vector::from_vec(y.clone()))?;
        let form = kf.phase(&x, &y).re;
        let tol = lit::<T>(1e-8) * (T::one() + direct.abs());
        if (direct - form).abs() > tol {
            return Err(Error::UnderResolved(format!(
                "generating-function phase disagrees with the action: {} vs {}",
                to_f64(form),
                to_f64(direct)
            )));
        }
    }
    Ok(())
}

/// `sup_{x,y} |K(x,y)|`, infinite when the imaginary part of the phase is
/// unbounded below.
pub fn dispersive_sup<T: Real>(kf: &KernelClosedForm<T>) -> T {
    let (q, l, c) = kf.joint();
    let qi = q.map(|z| z.im);
    let li = l.map(|z| z.im);
    let eig = ((&qi + qi.transpose()) * lit::<T>(0.5)).symmetric_eigen();
    let scale = max_abs_c(&q).max(T::one());
    let tol = lit::<T>(1e-9) * scale;
    let mut min = c.im;
    for (j, &lam) in eig.eigenvalues.iter().enumerate() {
        let proj = eig.eigenvectors.column(j).dot(&li);
        if lam > tol {
            min -= proj * proj / (lam + lam);
        } else if lam < -tol || proj.abs() > tol {
            return T::max_value().unwrap();
        }
    }
    kf.pref.modulus() * (-min).exp()
}

/// Coherent-state matrix element `⟨φ_Y, U φ_X⟩` of the propagator of `flow`.
pub fn bargmann_element<T: Real>(flow: &AffineSymplecticMap<T>, x: &Vector<T>, y: &Vector<T>) -> Result<Complex<T>> {
    let d = flow.dim();
    if x.len() != 2 * d || y.len() != 2 * d {
        return Err(Error::Dimension(format!("phase-space points must have length {}", 2 * d)));
    }
    let moved = GaussianState::coherent(x)?.propagate(flow)?;
    Ok(GaussianState::coherent(y)?.inner(&moved))
}

/// Sample points on a `m^d × m^d` grid in `[−r, r]^{2d}` (for kernel comparisons).
pub fn probe_points<T: Real>(d: usize, m: usize, r: T) -> Vec<(Vec<T>, Vec<T>)> {
    let axis: Vec<T> = (0..m)
        .map(|k| if m == 1 { T::zero() } else { -r + (r + r) * lit::<T>(k as f64 / (m - 1) as f64) })
        .collect();
    let total = m.pow(d as u32);
    let coords = |mut idx: usize| {
        (0..d)
            .map(|_| {
                let v = axis[idx % m];
                idx /= m;
                v
            })
            .collect::<Vec<T>>()
    };
    let mut out = Vec::with_capacity(total * total);
    for a in 0..total {
        for b in 0..total {
            out.push((coords(a), coords(b)));
        }
    }
    out
}
