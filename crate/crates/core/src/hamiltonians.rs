//! Quadratic Hamiltonians `H(t) = H₂ + H₁ + H₀` and the autonomous noise
//! Hamiltonian `K = K₂ + K₁`.
//!
//! Convention: `H₂(t; z) = ½ S(t) z·z` with `S = [[G, Lᵀ], [L, E]]` and
//! `z = (q, p)`, so `H₂ = ½(Gq·q + 2Lq·p + Ep·p)`. The harmonic oscillator
//! `½(q² + p²)` has `G = E = I`; the saddle `p₁² − p₂² + q₁² + q₂²` has
//! `S = diag(2, 2, 2, −2)`. Scenario files store these S-blocks directly.

use std::ops::{Add, Mul};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{asymmetry, symmetrize, symplectic_j, Mat, Vector};
use crate::scalar::{lit, to_f64, Real};

/// Continuous coefficient `t ↦ V`.
#[derive(Clone)]
pub enum TimeFn<T: Real, V> {
    Const(V),
    /// Node table, linearly interpolated and held constant outside.
    Table { times: Vec<T>, values: Vec<V> },
    Func(Arc<dyn Fn(T) -> V + Send + Sync>),
}

impl<T: Real, V: std::fmt::Debug> std::fmt::Debug for TimeFn<T, V> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TimeFn::Const(v) => f.debug_tuple("Const").field(v).finish(),
            TimeFn::Table { times, .. } => write!(f, "Table({} nodes)", times.len()),
            TimeFn::Func(_) => write!(f, "Func"),
        }
    }
}

impl<T, V> TimeFn<T, V>
where
    T: Real,
    V: Clone + Add<Output = V> + Mul<T, Output = V>,
{
    pub fn func(f: impl Fn(T) -> V + Send + Sync + 'static) -> Self {
        TimeFn::Func(Arc::new(f))
    }

    pub fn table(times: Vec<T>, values: Vec<V>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::Dimension("coefficient table needs matching, non-empty columns".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("coefficient table times must increase".into()));
        }
        Ok(TimeFn::Table { times, values })
    }

    pub fn at(&self, t: T) -> V {
        match self {
            TimeFn::Const(v) => v.clone(),
            TimeFn::Func(f) => f(t),
            TimeFn::Table { times, values } => {
                let n = times.len();
                if t <= times[0] {
                    return values[0].clone();
                }
                if t >= times[n - 1] {
                    return values[n - 1].clone();
                }
                let i = times.partition_point(|&x| x <= t) - 1;
                let w = (t - times[i]) / (times[i + 1] - times[i]);
                values[i].clone() * (T::one() - w) + values[i + 1].clone() * w
            }
        }
    }

    pub fn is_const(&self) -> bool {
        matches!(self, TimeFn::Const(_))
    }
}

/// `H(t)` as block data.
#[derive(Debug, Clone)]
pub struct QuadraticHamiltonian<T: Real> {
    pub dim: usize,
    pub g: TimeFn<T, Mat<T>>,
    pub l: TimeFn<T, Mat<T>>,
    pub e: TimeFn<T, Mat<T>>,
    pub a: TimeFn<T, Vector<T>>,
    pub b: TimeFn<T, Vector<T>>,
    pub h0: TimeFn<T, T>,
}

/// `S` together with the matching `J`.
#[derive(Debug, Clone, PartialEq)]
pub struct BigMatrix<T: Real> {
    pub s: Mat<T>,
    pub j: Mat<T>,
}

impl<T: Real> BigMatrix<T> {
    /// The Hamiltonian matrix `J S` generating the linear flow.
    pub fn generator(&self) -> Mat<T> {
        &self.j * &self.s
    }
}

fn block_s<T: Real>(g: &Mat<T>, l: &Mat<T>, e: &Mat<T>) -> Mat<T> {
    let d = g.nrows();
    let mut s = Mat::zeros(2 * d, 2 * d);
    s.view_mut((0, 0), (d, d)).copy_from(g);
    s.view_mut((0, d), (d, d)).copy_from(&l.transpose());
    s.view_mut((d, 0), (d, d)).copy_from(l);
    s.view_mut((d, d), (d, d)).copy_from(e);
    s
}

/// Extended symmetric matrix on `(q, q0, p, p0)` for the homogeneous lift
/// `H₂ + q0 (a·q + b·p) + h0 q0²`; along `q0 ≡ 1` it reproduces `H`, and
/// `p0` accumulates `−∫(V·z + 2h0)`, which is what the action needs.
fn extended_block<T: Real>(g: &Mat<T>, l: &Mat<T>, e: &Mat<T>, a: &Vector<T>, b: &Vector<T>, h0: T) -> Mat<T> {
    let d = g.nrows();
    let m = d + 1;
    let mut gx = Mat::zeros(m, m);
    let mut lx = Mat::zeros(m, m);
    let mut ex = Mat::zeros(m, m);
    gx.view_mut((0, 0), (d, d)).copy_from(g);
    lx.view_mut((0, 0), (d, d)).copy_from(l);
    ex.view_mut((0, 0), (d, d)).copy_from(e);
    for i in 0..d {
        gx[(i, d)] = a[i];
        gx[(d, i)] = a[i];
        lx[(i, d)] = b[i];
    }
    gx[(d, d)] = h0 + h0;
    block_s(&gx, &lx, &ex)
}

fn check_sym<T: Real>(m: &Mat<T>) -> Result<()> {
    let r = asymmetry(m);
    if r > lit(1e-10) {
        return Err(Error::NonSymmetric { residual: to_f64(r) });
    }
    Ok(())
}

impl<T: Real> QuadraticHamiltonian<T> {
    /// Time-independent purely quadratic Hamiltonian.
    pub fn constant(g: Mat<T>, l: Mat<T>, e: Mat<T>) -> Result<Self> {
        let d = g.nrows();
        for m in [&g, &l, &e] {
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::Dimension(format!("blocks must be {d}x{d}")));
            }
        }
        check_sym(&g)?;
        check_sym(&e)?;
        Ok(Self {
            dim: d,
            g: TimeFn::Const(g),
            l: TimeFn::Const(l),
            e: TimeFn::Const(e),
            a: TimeFn::Const(Vector::zeros(d)),
            b: TimeFn::Const(Vector::zeros(d)),
            h0: TimeFn::Const(T::zero()),
        })
    }

    pub fn zero(d: usize) -> Self {
        Self::constant(Mat::zeros(d, d), Mat::zeros(d, d), Mat::zeros(d, d)).unwrap()
    }

    /// `½|p|²`.
    pub fn free(d: usize) -> Self {
        Self::constant(Mat::zeros(d, d), Mat::zeros(d, d), Mat::identity(d, d)).unwrap()
    }

    /// `½(|q|² + |p|²)`.
    pub fn harmonic(d: usize) -> Self {
        Self::constant(Mat::identity(d, d), Mat::zeros(d, d), Mat::identity(d, d)).unwrap()
    }

    /// `p₁² − p₂² + q₁² + q₂²`, the indefinite-kinetic example in `d = 2`.
    pub fn saddle() -> Self {
        let two = lit::<T>(2.0);
        let g = Mat::from_diagonal(&Vector::from_vec(vec![two, two]));
        let e = Mat::from_diagonal(&Vector::from_vec(vec![two, -two]));
        Self::constant(g, Mat::zeros(2, 2), e).unwrap()
    }

    /// Harmonic trap plus rotation `ω (q₁p₂ − q₂p₁)` (`d = 2` or `3`, about the last-but-one axis pair).
    pub fn rotating_trap(d: usize, omega: T) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidArgument("rotating trap needs d >= 2".into()));
        }
        let mut l = Mat::zeros(d, d);
        l[(0, 1)] = -omega;
        l[(1, 0)] = omega;
        Self::constant(Mat::identity(d, d), l, Mat::identity(d, d))
    }

    pub fn with_linear(mut self, a: TimeFn<T, Vector<T>>, b: TimeFn<T, Vector<T>>) -> Self {
        self.a = a;
        self.b = b;
        self
    }

    pub fn with_scalar(mut self, h0: TimeFn<T, T>) -> Self {
        self.h0 = h0;
        self
    }

    pub fn has_lower_order(&self) -> bool {
        let zero_vec = |f: &TimeFn<T, Vector<T>>| matches!(f, TimeFn::Const(v) if v.iter().all(|x| *x == T::zero()));
        let zero_sc = matches!(self.h0, TimeFn::Const(x) if x == T::zero());
        !(zero_vec(&self.a) && zero_vec(&self.b) && zero_sc)
    }

    /// Evaluates `(G, L, E)` at `t`, checking symmetry of `G` and `E`.
    pub fn blocks(&self, t: T) -> Result<(Mat<T>, Mat<T>, Mat<T>)> {
        let (g, l, e) = (self.g.at(t), self.l.at(t), self.e.at(t));
        check_sym(&g)?;
        check_sym(&e)?;
        if g.iter().chain(l.iter()).chain(e.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite coefficient at t = {}", to_f64(t))));
        }
        Ok((symmetrize(&g), l, symmetrize(&e)))
    }

    pub fn e_block(&self, t: T) -> Mat<T> {
        symmetrize(&self.e.at(t))
    }

    pub fn extended_s(&self, t: T) -> Result<Mat<T>> {
        let (g, l, e) = self.blocks(t)?;
        Ok(extended_block(&g, &l, &e, &self.a.at(t), &self.b.at(t), self.h0.at(t)))
    }

    /// Value `H(t; q, p)`.
    pub fn value(&self, t: T, z: &Vector<T>) -> Result<T> {
        let d = self.dim;
        let s = assemble_s(self, t)?.s;
        let v = Vector::from_iterator(
            2 * d,
            self.a.at(t).iter().chain(self.b.at(t).iter()).copied(),
        );
        Ok(lit::<T>(0.5) * z.dot(&(&s * z)) + v.dot(z) + self.h0.at(t))
    }
}

/// Matrix of the quadratic part of `H(t)`.
pub fn assemble_s<T: Real>(h: &QuadraticHamiltonian<T>, t: T) -> Result<BigMatrix<T>> {
    let (g, l, e) = h.blocks(t)?;
    Ok(BigMatrix { s: block_s(&g, &l, &e), j: symplectic_j(h.dim) })
}

/// Autonomous `K = ½ S_K z·z + V_K·z`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseHamiltonian<T: Real> {
    pub dim: usize,
    pub g: Mat<T>,
    pub l: Mat<T>,
    pub e: Mat<T>,
    pub v: Vector<T>,
}

impl<T: Real> NoiseHamiltonian<T> {
    pub fn new(g: Mat<T>, l: Mat<T>, e: Mat<T>, v: Vector<T>) -> Result<Self> {
        let d = g.nrows();
        for m in [&g, &l, &e] {
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::Dimension(format!("noise blocks must be {d}x{d}")));
            }
        }
        if v.len() != 2 * d {
            return Err(Error::Dimension(format!("noise linear part must have length {}", 2 * d)));
        }
        check_sym(&g)?;
        check_sym(&e)?;
        Ok(Self { dim: d, g: symmetrize(&g), l, e: symmetrize(&e), v })
    }

    pub fn zero(d: usize) -> Self {
        Self::new(Mat::zeros(d, d), Mat::zeros(d, d), Mat::zeros(d, d), Vector::zeros(2 * d)).unwrap()
    }

    /// Potential noise `½ G_K q·q`.
    pub fn potential(g: Mat<T>) -> Result<Self> {
        let d = g.nrows();
        Self::new(g, Mat::zeros(d, d), Mat::zeros(d, d), Vector::zeros(2 * d))
    }

    /// `½ c |q|²`.
    pub fn scalar_potential(d: usize, c: T) -> Self {
        Self::potential(Mat::identity(d, d) * c).unwrap()
    }

    /// Angular-momentum noise `ω (q₁p₂ − q₂p₁)` with an optional confining `½ c|q|²`.
    pub fn rotation(d: usize, omega: T, c: T) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidArgument("rotation noise needs d >= 2".into()));
        }
        let mut l = Mat::zeros(d, d);
        l[(0, 1)] = -omega;
        l[(1, 0)] = omega;
        Self::new(Mat::identity(d, d) * c, l, Mat::zeros(d, d), Vector::zeros(2 * d))
    }

    pub fn with_linear(mut self, v: Vector<T>) -> Result<Self> {
        if v.len() != 2 * self.dim {
            return Err(Error::Dimension(format!("noise linear part must have length {}", 2 * self.dim)));
        }
        self.v = v;
        Ok(self)
    }

    pub fn s(&self) -> BigMatrix<T> {
        BigMatrix { s: block_s(&self.g, &self.l, &self.e), j: symplectic_j(self.dim) }
    }

    pub fn extended_s(&self) -> Mat<T> {
        let d = self.dim;
        let vq = self.v.rows(0, d).into_owned();
        let vp = self.v.rows(d, d).into_owned();
        extended_block(&self.g, &self.l, &self.e, &vq, &vp, T::zero())
    }

    pub fn is_quadratic_only(&self) -> bool {
        self.v.iter().all(|x| *x == T::zero())
    }
}

/// Which of the kernel hypotheses hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct HypothesisReport {
    /// `E_H(t)` invertible at every probe time.
    pub e_h_invertible: bool,
    /// `∂²_{pp}K = 0`.
    pub e_k_zero: bool,
    /// `∂²_{qp}K = 0`.
    pub l_k_zero: bool,
    pub mu_above_half: bool,
    pub mvv1: bool,
    pub mv2: bool,
}

impl HypothesisReport {
    pub fn kernel_ready(&self) -> bool {
        self.mvv1 && self.mv2
    }
}

fn invertible<T: Real>(m: &Mat<T>) -> bool {
    let sv = m.clone().singular_values();
    let max = sv.iter().fold(T::zero(), |a, &b| a.max(b));
    let min = sv.iter().fold(T::max_value().unwrap(), |a, &b| a.min(b));
    min > lit::<T>(1e-10) * max.max(T::one())
}

/// Checks the two hypotheses behind the Mehler form of the kernel.
/// Invertibility of `E_H` is checked pointwise at `probe_times`.
pub fn validate_hypotheses<T: Real>(
    h: &QuadraticHamiltonian<T>,
    k: &NoiseHamiltonian<T>,
    mu: T,
    probe_times: &[T],
) -> HypothesisReport {
    let e_h_invertible = probe_times.iter().all(|&t| invertible(&h.e_block(t)));
    let e_k_zero = k.e.iter().all(|x| x.abs() <= lit(1e-14));
    let l_k_zero = k.l.iter().all(|x| x.abs() <= lit(1e-14));
    let mu_above_half = mu > lit(0.5);
    HypothesisReport {
        e_h_invertible,
        e_k_zero,
        l_k_zero,
        mu_above_half,
        mvv1: e_h_invertible && e_k_zero,
        mv2: l_k_zero || mu_above_half,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_and_free_s() {
        let s = assemble_s(&QuadraticHamiltonian::<f64>::harmonic(1), 0.0).unwrap();
        assert_eq!(s.s, Mat::identity(2, 2));
        let s = assemble_s(&QuadraticHamiltonian::<f64>::free(1), 0.0).unwrap();
        assert_eq!(s.s, Mat::from_diagonal(&Vector::from_vec(vec![0.0, 1.0])));
    }

    #[test]
    fn saddle_s_is_doubled_diagonal() {
        let s = assemble_s(&QuadraticHamiltonian::<f64>::saddle(), 0.3).unwrap();
        assert_eq!(s.s, Mat::from_diagonal(&Vector::from_vec(vec![2.0, 2.0, 2.0, -2.0])));
        // ½ S z·z at z = (1, 1, 1, 1) is 1 − 1 + 1 + 1 = 2
        let z = Vector::from_element(4, 1.0);
        assert!((QuadraticHamiltonian::<f64>::saddle().value(0.0, &z).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn non_symmetric_blocks_rejected() {
        let g = Mat::<f64>::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        let err = QuadraticHamiltonian::constant(g, Mat::zeros(2, 2), Mat::identity(2, 2));
        assert!(matches!(err, Err(Error::NonSymmetric { .. })));
    }

    #[test]
    fn time_dependent_table_interpolates() {
        let f: TimeFn<f64, Mat<f64>> = TimeFn::table(
            vec![0.0, 1.0],
            vec![Mat::identity(1, 1), Mat::identity(1, 1) * 3.0],
        )
        .unwrap();
        assert!((f.at(0.25)[(0, 0)] - 1.5).abs() < 1e-15);
        assert!((f.at(5.0)[(0, 0)] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn hamiltonian_matrices_are_trace_free() {
        let hs = [
            QuadraticHamiltonian::<f64>::harmonic(3),
            QuadraticHamiltonian::saddle(),
            QuadraticHamiltonian::rotating_trap(3, 0.7).unwrap(),
        ];
        for h in &hs {
            let m = assemble_s(h, 0.0).unwrap().generator();
            assert_eq!(m.trace(), 0.0);
        }
    }

    #[test]
    fn hypothesis_examples() {
        let h = QuadraticHamiltonian::<f64>::harmonic(1);
        let k = NoiseHamiltonian::potential(Mat::from_element(1, 1, 2.0)).unwrap();
        let r = validate_hypotheses(&h, &k, 0.45, &[0.0]);
        assert!(r.mvv1 && r.mv2);

        let k = NoiseHamiltonian::new(Mat::zeros(1, 1), Mat::zeros(1, 1), Mat::identity(1, 1), Vector::zeros(2)).unwrap();
        assert!(!validate_hypotheses(&h, &k, 0.45, &[0.0]).mvv1);

        let h3 = QuadraticHamiltonian::<f64>::harmonic(3);
        let k3 = NoiseHamiltonian::rotation(3, 1.0, 0.0).unwrap();
        assert!(!validate_hypotheses(&h3, &k3, 0.45, &[0.0]).mv2);
        assert!(validate_hypotheses(&h3, &k3, 0.6, &[0.0]).mv2);
    }

    #[test]
    fn extended_lift_reproduces_linear_terms() {
        let h = QuadraticHamiltonian::<f64>::harmonic(1).with_linear(
            TimeFn::Const(Vector::from_vec(vec![0.3])),
            TimeFn::Const(Vector::from_vec(vec![-0.2])),
        ).with_scalar(TimeFn::Const(0.7));
        let sx = h.extended_s(0.0).unwrap();
        // z~ = (q, q0, p, p0) = (1.5, 1, -0.5, 4)
        let z = Vector::from_vec(vec![1.5, 1.0, -0.5, 4.0]);
        let zr = Vector::from_vec(vec![1.5, -0.5]);
        let lifted = 0.5 * z.dot(&(&sx * &z));
        assert!((lifted - h.value(0.0, &zr).unwrap()).abs() < 1e-14);
    }
}
