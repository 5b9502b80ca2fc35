#![allow(dead_code)]

use roughflow::linalg::{Mat, Vector};
use roughflow::{DriverPath64, Hamiltonian64, Noise64};

/// RK4 integration of `ż = J(S_H z + V_H) + β̇ J(S_K z + V_K)` together with the
/// action `∫ q̇·p − H − β̇K`. Integrates piece by piece between the path's
/// breakpoints; on a raw piecewise-linear path `β̇` is the secant slope of the
/// piece, so the result is the exact flow up to RK4 error.
pub struct OdeOracle<'a> {
    pub h: &'a Hamiltonian64,
    pub k: &'a Noise64,
    pub beta: &'a DriverPath64,
}

impl OdeOracle<'_> {
    fn rhs(&self, t: f64, z: &Vector<f64>, slope: Option<f64>) -> (Vector<f64>, f64) {
        let d = self.h.dim;
        let (g, l, e) = self.h.blocks(t).unwrap();
        let a = self.h.a.at(t);
        let b = self.h.b.at(t);
        let h0 = self.h.h0.at(t);
        let bd = slope.unwrap_or_else(|| self.beta.derivative(t));
        let q = z.rows(0, d).into_owned();
        let p = z.rows(d, d).into_owned();
        let k = self.k;
        let vq = k.v.rows(0, d).into_owned();
        let vp = k.v.rows(d, d).into_owned();
        // ∂H/∂q = G q + Lᵀ p + a, ∂H/∂p = L q + E p + b
        let hq = &g * &q + l.transpose() * &p + &a + (&k.g * &q + k.l.transpose() * &p + &vq) * bd;
        let hp = &l * &q + &e * &p + &b + (&k.l * &q + &k.e * &p + &vp) * bd;
        let ham = 0.5 * (q.dot(&(&g * &q)) + 2.0 * p.dot(&(&l * &q)) + p.dot(&(&e * &p)))
            + a.dot(&q)
            + b.dot(&p)
            + h0
            + bd * (0.5 * (q.dot(&(&k.g * &q)) + 2.0 * p.dot(&(&k.l * &q)) + p.dot(&(&k.e * &p))) + vq.dot(&q) + vp.dot(&p));
        let mut dz = Vector::zeros(2 * d);
        dz.rows_mut(0, d).copy_from(&hp);
        dz.rows_mut(d, d).copy_from(&(-hq));
        (dz, hp.dot(&p) - ham)
    }

    /// Trajectory end point and action from `z` over `[s, t]`, `n` steps per piece.
    pub fn run(&self, z: &Vector<f64>, t: f64, s: f64, n: usize) -> (Vector<f64>, f64) {
        let (lo, hi) = if s < t { (s, t) } else { (t, s) };
        let mut br = self.beta.breakpoints(lo, hi);
        if t < s {
            br.reverse();
        }
        let raw = self.beta.mollifier_width().is_none();
        let mut z = z.clone();
        let mut act = 0.0;
        for w in br.windows(2) {
            let slope = raw.then(|| (self.beta.eval(w[1]) - self.beta.eval(w[0])) / (w[1] - w[0]));
            let h = (w[1] - w[0]) / n as f64;
            for i in 0..n {
                let u = w[0] + i as f64 * h;
                let (k1, a1) = self.rhs(u, &z, slope);
                let (k2, a2) = self.rhs(u + h / 2.0, &(&z + &k1 * (h / 2.0)), slope);
                let (k3, a3) = self.rhs(u + h / 2.0, &(&z + &k2 * (h / 2.0)), slope);
                let (k4, a4) = self.rhs(u + h, &(&z + &k3 * h), slope);
                z += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
                act += (a1 + 2.0 * a2 + 2.0 * a3 + a4) * (h / 6.0);
            }
        }
        (z, act)
    }

    /// Linear part and translation of the flow.
    pub fn flow(&self, t: f64, s: f64, n: usize) -> (Mat<f64>, Vector<f64>) {
        let d2 = 2 * self.h.dim;
        let (v, _) = self.run(&Vector::zeros(d2), t, s, n);
        let mut f = Mat::zeros(d2, d2);
        for j in 0..d2 {
            let mut e = Vector::zeros(d2);
            e[j] = 1.0;
            let (zj, _) = self.run(&e, t, s, n);
            f.set_column(j, &(zj - &v));
        }
        (f, v)
    }
}
