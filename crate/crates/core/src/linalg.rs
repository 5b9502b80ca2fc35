//! Small dense helpers shared by the flow and kernel code.

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};

pub type Mat<T> = DMatrix<T>;
pub type Vector<T> = DVector<T>;
pub type CMat<T> = DMatrix<Complex<T>>;
pub type CVector<T> = DVector<Complex<T>>;

/// Standard symplectic matrix `[[0, I], [-I, 0]]` of size `2d`.
pub fn symplectic_j<T: Real>(d: usize) -> Mat<T> {
    let mut j = Mat::zeros(2 * d, 2 * d);
    for i in 0..d {
        j[(i, d + i)] = T::one();
        j[(d + i, i)] = -T::one();
    }
    j
}

pub fn max_abs<T: Real>(m: &Mat<T>) -> T {
    m.iter().fold(T::zero(), |acc, x| acc.max(x.abs()))
}

pub fn max_abs_c<T: Real>(m: &CMat<T>) -> T {
    m.iter().fold(T::zero(), |acc, x| acc.max(x.modulus()))
}

/// `‖FᵀJF − J‖_max`.
pub fn symplectic_residual<T: Real>(f: &Mat<T>) -> T {
    let j = symplectic_j::<T>(f.nrows() / 2);
    max_abs(&(f.transpose() * &j * f - j))
}

/// Residual of `m − mᵀ` in max norm.
pub fn asymmetry<T: Real>(m: &Mat<T>) -> T {
    max_abs(&(m - m.transpose()))
}

pub fn symmetrize<T: Real>(m: &Mat<T>) -> Mat<T> {
    (m + m.transpose()) * lit::<T>(0.5)
}

fn norm1<T: Real>(m: &Mat<T>) -> T {
    (0..m.ncols())
        .map(|c| m.column(c).iter().fold(T::zero(), |a, x| a + x.abs()))
        .fold(T::zero(), |a, b| a.max(b))
}

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
///
/// The argument is scaled so that its 1-norm is at most 1/2; the series is
/// summed until the next term is below `rel_tol` relative to the partial sum.
pub fn expm<T: Real>(a: &Mat<T>, rel_tol: T) -> Mat<T> {
    let n = a.nrows();
    let norm = norm1(a);
    let half = lit::<T>(0.5);
    let mut squarings = 0u32;
    let mut scale = T::one();
    while norm * scale > half {
        scale *= half;
        squarings += 1;
    }
    let x = a * scale;
    let mut sum = Mat::<T>::identity(n, n);
    let mut term = Mat::<T>::identity(n, n);
    let mut buf = Mat::<T>::zeros(n, n);
    for k in 1..40 {
        mul_small_into(&mut buf, &term, &x, false);
        std::mem::swap(&mut term, &mut buf);
        term *= T::one() / lit::<T>(k as f64);
        sum += &term;
        if max_abs(&term) <= rel_tol * max_abs(&sum) {
            break;
        }
    }
    for _ in 0..squarings {
        mul_small_into(&mut buf, &sum, &sum, false);
        std::mem::swap(&mut sum, &mut buf);
    }
    sum
}

/// Pulls a nearly symplectic matrix back onto the symplectic group.
///
/// Newton–Schulz iteration for `F (−J Fᵀ J F)^{-1/2}`; returns the corrected
/// matrix and the number of sweeps used.
pub fn symplectic_projection<T: Real>(f: &Mat<T>) -> (Mat<T>, usize) {
    let n = f.nrows();
    let j = symplectic_j::<T>(n / 2);
    let eye = Mat::<T>::identity(n, n);
    let mut g = f.clone();
    let three = lit::<T>(3.0);
    let half = lit::<T>(0.5);
    for sweep in 0..20 {
        let m = -(&j * g.transpose() * &j * &g);
        let dev = max_abs(&(&m - &eye));
        if dev < lit(1e-15) {
            return (g, sweep);
        }
        g = &g * ((&eye * three - m) * half);
    }
    (g, 20)
}

/// Complex determinant via LU.
pub fn cdet<T: Real>(m: &CMat<T>) -> Complex<T> {
    m.clone().lu().determinant()
}

pub fn cinv<T: Real>(m: &CMat<T>) -> Option<CMat<T>> {
    m.clone().lu().try_inverse()
}

pub fn to_complex<T: Real>(m: &Mat<T>) -> CMat<T> {
    m.map(|x| Complex::new(x, T::zero()))
}

/// `A + i B` for real `A`, `B`.
pub fn complexify<T: Real>(re: &Mat<T>, im: &Mat<T>) -> CMat<T> {
    re.zip_map(im, |a, b| Complex::new(a, b))
}

pub fn phase_of<T: Real>(z: Complex<T>) -> T {
    z.im.atan2(z.re)
}

/// Principal square root of `det(i·sgn·S)` for real symmetric `S`, taken as
/// the product of principal square roots of the eigenvalues `i·sgn·λ`.
pub fn sqrt_det_i_symmetric<T: Real>(s: &Mat<T>, sign: T) -> Complex<T> {
    let eig = s.clone().symmetric_eigen();
    eig.eigenvalues
        .iter()
        .fold(Complex::new(T::one(), T::zero()), |acc, &l| {
            acc * Complex::new(T::zero(), sign * l).sqrt()
        })
}

/// Product of principal square roots of the eigenvalues of `m`: the branch of
/// `det^{1/2}` continuous on matrices with positive definite Hermitian part.
pub fn sqrt_det_principal<T: Real>(m: &CMat<T>) -> Option<Complex<T>> {
    let eig = m.clone().schur().eigenvalues()?;
    Some(eig.iter().fold(Complex::new(T::one(), T::zero()), |acc, l| acc * l.sqrt()))
}

/// Square root of `det M(τ)` followed continuously along a sequence of
/// matrices, starting from the given branch value at the first one.
///
/// Each step picks the root closest in phase to the previous one and refuses
/// with [`Error::BranchLost`] when the determinant itself turned by more than
/// π/2 since the last checkpoint (a root jump above π/4).
#[derive(Debug, Clone, Copy)]
pub struct SqrtDetTracker<T: Real> {
    current: Complex<T>,
}

impl<T: Real> SqrtDetTracker<T> {
    pub fn start(root: Complex<T>) -> Self {
        Self { current: root }
    }

    pub fn start_principal(det: Complex<T>) -> Self {
        Self { current: det.sqrt() }
    }

    pub fn advance(&mut self, det: Complex<T>) -> Result<Complex<T>> {
        let cand = det.sqrt();
        let prev = self.current;
        let jump = |c: Complex<T>| {
            let r = c / prev;
            phase_of(r).abs()
        };
        let (j1, j2) = (jump(cand), jump(-cand));
        let (chosen, j) = if j1 <= j2 { (cand, j1) } else { (-cand, j2) };
        if j > T::frac_pi_4() {
            return Err(Error::BranchLost { jump: to_f64(j + j) });
        }
        self.current = chosen;
        Ok(chosen)
    }

    pub fn value(&self) -> Complex<T> {
        self.current
    }
}

/// Minimum eigenvalue of a real symmetric matrix.
pub fn min_eigenvalue<T: Real>(s: &Mat<T>) -> T {
    s.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(T::max_value().unwrap(), |a, &b| a.min(b))
}

/// Spectral norm (largest singular value).
pub fn spectral_norm<T: Real>(m: &Mat<T>) -> T {
    m.clone()
        .singular_values()
        .iter()
        .fold(T::zero(), |a, &b| a.max(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j_squares_to_minus_identity() {
        for d in 1..4 {
            let j = symplectic_j::<f64>(d);
            let n = 2 * d;
            assert_eq!(&j * &j, -Mat::<f64>::identity(n, n));
        }
    }

    #[test]
    fn expm_rotation_generator() {
        let mut a = Mat::<f64>::zeros(2, 2);
        a[(0, 1)] = 1.3;
        a[(1, 0)] = -1.3;
        let e = expm(&a, 1e-15);
        assert!((e[(0, 0)] - 1.3f64.cos()).abs() < 1e-14);
        assert!((e[(0, 1)] - 1.3f64.sin()).abs() < 1e-14);
        assert!((e[(1, 0)] + 1.3f64.sin()).abs() < 1e-14);
    }

    #[test]
    fn expm_large_argument() {
        let a = Mat::<f64>::from_row_slice(1, 1, &[12.0]);
        let e = expm(&a, 1e-15);
        assert!((e[(0, 0)] / 12f64.exp() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn projection_repairs_perturbed_symplectic() {
        let mut f = Mat::<f64>::from_row_slice(2, 2, &[0.8, 0.6, -0.6, 0.8]);
        f[(0, 0)] += 1e-7;
        assert!(symplectic_residual(&f) > 1e-8);
        let (g, _) = symplectic_projection(&f);
        assert!(symplectic_residual(&g) < 1e-14);
        assert!(max_abs(&(g - f)) < 1e-6);
    }

    #[test]
    fn tracker_follows_unit_circle() {
        // det = e^{iθ}, θ from 0 to 6π: root must be e^{iθ/2}
        let mut tr = SqrtDetTracker::start_principal(Complex::new(1.0f64, 0.0));
        let n = 600;
        for k in 1..=n {
            let th = 6.0 * std::f64::consts::PI * k as f64 / n as f64;
            let r = tr.advance(Complex::from_polar(1.0, th)).unwrap();
            let want = Complex::from_polar(1.0, th / 2.0);
            assert!((r - want).norm() < 1e-12);
        }
    }

    #[test]
    fn tracker_refuses_jumps() {
        let mut tr = SqrtDetTracker::start_principal(Complex::new(1.0f64, 0.0));
        assert!(tr.advance(Complex::from_polar(2.0, 0.45 * std::f64::consts::PI)).is_ok());
        let mut tr = SqrtDetTracker::start_principal(Complex::new(1.0f64, 0.0));
        let err = tr.advance(Complex::from_polar(1.0, 0.6 * std::f64::consts::PI));
        assert!(matches!(err, Err(Error::BranchLost { .. })));
    }

    #[test]
    fn sqrt_det_i_symmetric_signature() {
        let s = Mat::<f64>::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let r = sqrt_det_i_symmetric(&s, 1.0);
        // e^{iπ/4} e^{-iπ/4} = 1
        assert!((r - Complex::new(1.0, 0.0)).norm() < 1e-14);
    }
}

/// `out = a·b + (accumulate ? out : 0)` for small square matrices, without the
/// packing overhead of the blocked kernel.
pub fn mul_small_into<T: Real>(out: &mut Mat<T>, a: &Mat<T>, b: &Mat<T>, accumulate: bool) {
    let n = a.nrows();
    debug_assert!(a.ncols() == n && b.nrows() == n && b.ncols() == n && out.nrows() == n && out.ncols() == n);
    let (a, b) = (a.as_slice(), b.as_slice());
    let o = out.as_mut_slice();
    if !accumulate {
        o.iter_mut().for_each(|x| *x = T::zero());
    }
    for j in 0..n {
        for k in 0..n {
            let bkj = b[k + j * n];
            if bkj == T::zero() {
                continue;
            }
            let col = &a[k * n..(k + 1) * n];
            for (oi, ai) in o[j * n..(j + 1) * n].iter_mut().zip(col) {
                *oi += *ai * bkj;
            }
        }
    }
}
