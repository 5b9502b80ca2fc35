//! Rough driver paths on a uniform time grid.
//!
//! Randomness comes from `ChaCha8Rng::seed_from_u64`, a seedable counter-based
//! generator, so every sample below is bit-reproducible for a fixed seed and grid.

use std::io::{BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};

/// Uniform grid on `[t0 − T, t0 + T]` with `n` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid<T: Real> {
    pub t0: T,
    pub half_width: T,
    pub n: usize,
}

impl<T: Real> TimeGrid<T> {
    pub fn new(t0: T, half_width: T, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("time grid needs n >= 2, got {n}")));
        }
        if !(half_width > T::zero()) {
            return Err(Error::InvalidArgument("time grid half-width must be > 0".into()));
        }
        Ok(Self { t0, half_width, n })
    }

    /// Grid covering `[start, end]`.
    pub fn spanning(start: T, end: T, n: usize) -> Result<Self> {
        let two = lit::<T>(2.0);
        Self::new((start + end) / two, (end - start) / two, n)
    }

    pub fn spacing(&self) -> T {
        lit::<T>(2.0) * self.half_width / lit::<T>((self.n - 1) as f64)
    }

    pub fn start(&self) -> T {
        self.t0 - self.half_width
    }

    pub fn end(&self) -> T {
        self.t0 + self.half_width
    }

    pub fn node(&self, i: usize) -> T {
        if i + 1 == self.n {
            self.end()
        } else {
            self.start() + self.spacing() * lit::<T>(i as f64)
        }
    }

    pub fn nodes(&self) -> Vec<T> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    pub fn contains(&self, t: T) -> bool {
        let slack = self.spacing() * lit::<T>(1e-9);
        t >= self.start() - slack && t <= self.end() + slack
    }

    /// Index `i` of the cell `[t_i, t_{i+1}]` containing `t`, clamped to the grid.
    fn cell(&self, t: T) -> usize {
        let x = (t - self.start()) / self.spacing();
        let i = to_f64(x).floor();
        if i < 0.0 {
            0
        } else {
            (i as usize).min(self.n - 2)
        }
    }
}

/// Sampled driver `β` with its claimed Hölder exponent.
///
/// Between nodes the path is the piecewise-linear interpolant, extended
/// constantly outside the grid. A mollified path keeps the same samples and
/// evaluates the convolution of that interpolant with a C¹ bump of width `eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriverPath<T: Real> {
    pub grid: TimeGrid<T>,
    pub values: Vec<T>,
    pub mu: T,
    pub smooth: bool,
    mollifier: Option<T>,
}

// Bump ρ(x) = 15/16 (1 − x²)² on [−1, 1]; P0 and P1 are antiderivatives of ρ and xρ.
fn bump_p0(x: f64) -> f64 {
    let x = x.clamp(-1.0, 1.0);
    15.0 / 16.0 * (x - 2.0 * x.powi(3) / 3.0 + x.powi(5) / 5.0)
}

fn bump_p1(x: f64) -> f64 {
    let x = x.clamp(-1.0, 1.0);
    15.0 / 16.0 * (x * x / 2.0 - x.powi(4) / 2.0 + x.powi(6) / 6.0)
}

impl<T: Real> DriverPath<T> {
    pub fn from_values(grid: TimeGrid<T>, values: Vec<T>, mu: T) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::Dimension(format!(
                "path has {} values for a grid of {} nodes",
                values.len(),
                grid.n
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("path values must be finite".into()));
        }
        Ok(Self { grid, values, mu, smooth: false, mollifier: None })
    }

    pub fn zero(grid: TimeGrid<T>) -> Self {
        Self { grid, values: vec![T::zero(); grid.n], mu: T::one(), smooth: true, mollifier: None }
    }

    /// Samples `f` at the nodes; marked smooth (the caller vouches for C¹).
    pub fn from_fn(grid: TimeGrid<T>, mu: T, f: impl Fn(T) -> T) -> Self {
        let values = grid.nodes().into_iter().map(f).collect();
        Self { grid, values, mu, smooth: false, mollifier: None }
    }

    pub fn mollifier_width(&self) -> Option<T> {
        self.mollifier
    }

    /// Piecewise-linear value of the raw samples.
    fn linear(&self, t: T) -> T {
        let g = &self.grid;
        if t <= g.start() {
            return self.values[0];
        }
        if t >= g.end() {
            return self.values[g.n - 1];
        }
        let i = g.cell(t);
        let (ta, tb) = (g.node(i), g.node(i + 1));
        let w = (t - ta) / (tb - ta);
        self.values[i] + (self.values[i + 1] - self.values[i]) * w
    }

    /// Breakpoints of the raw interpolant inside `(a, b)`, with `a` and `b` added.
    fn pieces(&self, a: T, b: T) -> Vec<T> {
        let g = &self.grid;
        let mut pts = vec![a];
        if b > g.start() && a < g.end() {
            let lo = if a <= g.start() { 0 } else { g.cell(a) + 1 };
            for i in lo..g.n {
                let ti = g.node(i);
                if ti >= b {
                    break;
                }
                if ti > a {
                    pts.push(ti);
                }
            }
        }
        pts.push(b);
        pts
    }

    /// (value, derivative) of the mollified path at `t`.
    fn convolved(&self, t: T, eps: T) -> (T, T) {
        let (tf, ef) = (to_f64(t), to_f64(eps));
        let pts = self.pieces(t - eps, t + eps);
        let (mut val, mut der) = (0.0, 0.0);
        for w in pts.windows(2) {
            let (ta, tb) = (w[0], w[1]);
            if !(tb > ta) {
                continue;
            }
            let mid = (ta + tb) / lit::<T>(2.0);
            let slope = if mid <= self.grid.start() || mid >= self.grid.end() {
                0.0
            } else {
                let i = self.grid.cell(mid);
                to_f64((self.values[i + 1] - self.values[i]) / self.grid.spacing())
            };
            let beta_a = to_f64(self.linear(ta));
            let (taf, tbf) = (to_f64(ta), to_f64(tb));
            let (xa, xb) = ((tf - tbf) / ef, (tf - taf) / ef);
            let m0 = bump_p0(xb) - bump_p0(xa);
            let m1 = bump_p1(xb) - bump_p1(xa);
            val += (beta_a + slope * (tf - taf)) * m0 - slope * ef * m1;
            der += slope * m0;
        }
        (lit(val), lit(der))
    }

    /// β(t).
    pub fn eval(&self, t: T) -> T {
        match self.mollifier {
            Some(eps) => self.convolved(t, eps).0,
            None => self.linear(t),
        }
    }

    /// dβ/dt: exact for a mollified path, the cell slope otherwise.
    pub fn derivative(&self, t: T) -> T {
        match self.mollifier {
            Some(eps) => self.convolved(t, eps).1,
            None => {
                if t < self.grid.start() || t > self.grid.end() {
                    return T::zero();
                }
                let i = self.grid.cell(t);
                (self.values[i + 1] - self.values[i]) / self.grid.spacing()
            }
        }
    }

    /// Points at which the path (or its mollification) changes character.
    /// Used to align quadrature subgrids and sup-norm probes.
    pub fn breakpoints(&self, a: T, b: T) -> Vec<T> {
        let mut pts = self.pieces(a, b);
        if let Some(eps) = self.mollifier {
            if eps < self.grid.spacing() / lit::<T>(2.0) {
                let mut extra = Vec::new();
                for &p in &pts[1..pts.len() - 1] {
                    for q in [p - eps, p + eps] {
                        if q > a && q < b {
                            extra.push(q);
                        }
                    }
                }
                pts.extend(extra);
                pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
                pts.dedup_by(|x, y| (*x - *y).abs() <= eps * lit::<T>(1e-9));
            }
        }
        pts
    }

    fn probe_points(&self) -> Vec<T> {
        let g = &self.grid;
        let bp = self.breakpoints(g.start(), g.end());
        let mut out = Vec::with_capacity(bp.len() * 4);
        for w in bp.windows(2) {
            for k in 0..4 {
                out.push(w[0] + (w[1] - w[0]) * lit::<T>(k as f64 / 4.0));
            }
        }
        out.push(g.end());
        out
    }

    pub fn sup_norm(&self) -> T {
        match self.mollifier {
            None => self.values.iter().fold(T::zero(), |a, v| a.max(v.abs())),
            Some(_) => self.probe_points().into_iter().fold(T::zero(), |a, t| a.max(self.eval(t).abs())),
        }
    }

    /// `sup_t |self(t) − other(t)|` probed on both paths' breakpoints
    /// refined four times.
    pub fn sup_distance(&self, other: &Self) -> T {
        let mut pts = self.probe_points();
        pts.extend(other.probe_points());
        pts.into_iter()
            .fold(T::zero(), |a, t| a.max((self.eval(t) - other.eval(t)).abs()))
    }

    /// `sup_{u between s and t} |β(t) − β(u)|`, the oscillation entering the
    /// short-time flow expansion.
    pub fn oscillation(&self, s: T, t: T) -> T {
        let (a, b) = if s <= t { (s, t) } else { (t, s) };
        let mut pts = self.breakpoints(a, b);
        pts.push(a);
        let bt = self.eval(t);
        pts.into_iter().fold(T::zero(), |acc, u| acc.max((self.eval(u) - bt).abs()))
    }
}

/// Standard Brownian motion started at 0 at the left end of the grid.
///
/// When `n − 1` is a power of two the path is built by Lévy midpoint
/// refinement (endpoint first, then one dyadic level at a time), so the same
/// seed on a grid with twice the resolution reproduces the coarse samples at
/// the shared nodes. Otherwise independent increments are summed.
pub fn make_brownian<T: Real>(seed: u64, grid: TimeGrid<T>, scale: T) -> DriverPath<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.n;
    let h = to_f64(grid.spacing());
    let sc = to_f64(scale);
    let mut v = vec![0.0f64; n];
    let intervals = n - 1;
    if intervals.is_power_of_two() {
        let total = h * intervals as f64;
        let z: f64 = StandardNormal.sample(&mut rng);
        v[intervals] = sc * total.sqrt() * z;
        let mut step = intervals;
        while step > 1 {
            let half = step / 2;
            // conditional variance of the midpoint of a bridge of length step·h
            let sd = sc * (half as f64 * h / 2.0).sqrt();
            let mut left = 0;
            while left < intervals {
                let right = left + step;
                let z: f64 = StandardNormal.sample(&mut rng);
                v[left + half] = 0.5 * (v[left] + v[right]) + sd * z;
                left = right;
            }
            step = half;
        }
    } else {
        for i in 1..n {
            let z: f64 = StandardNormal.sample(&mut rng);
            v[i] = v[i - 1] + sc * h.sqrt() * z;
        }
    }
    DriverPath {
        grid,
        values: v.into_iter().map(lit).collect(),
        mu: lit(0.45),
        smooth: false,
        mollifier: None,
    }
}

/// fBm covariance `½(τᵢ^{2H} + τⱼ^{2H} − |τᵢ − τⱼ|^{2H})` at the nodes after the
/// first, with `τ` measured from the left end of the grid.
pub fn fbm_covariance<T: Real>(hurst: T, grid: &TimeGrid<T>) -> Vec<Vec<f64>> {
    let h2 = 2.0 * to_f64(hurst);
    let tau: Vec<f64> = (1..grid.n).map(|i| to_f64(grid.node(i) - grid.start())).collect();
    tau.iter()
        .map(|&a| {
            tau.iter()
                .map(|&b| 0.5 * (a.powf(h2) + b.powf(h2) - (a - b).abs().powf(h2)))
                .collect()
        })
        .collect()
}

/// Dense Cholesky factor of an fBm covariance, reusable across seeds.
#[derive(Debug, Clone)]
pub struct FbmSampler<T: Real> {
    grid: TimeGrid<T>,
    hurst: T,
    lower: Vec<Vec<f64>>,
}

impl<T: Real> FbmSampler<T> {
    pub fn new(hurst: T, grid: TimeGrid<T>) -> Result<Self> {
        let h = to_f64(hurst);
        if !(h > 0.0 && h < 1.0) {
            return Err(Error::InvalidArgument(format!("Hurst index must lie in (0,1), got {h}")));
        }
        let cov = fbm_covariance(hurst, &grid);
        let m = cov.len();
        let mut l = vec![vec![0.0f64; m]; m];
        let tiny = 1e-14 * cov.iter().enumerate().fold(0.0f64, |a, (i, r)| a.max(r[i]));
        for j in 0..m {
            let mut d = cov[j][j];
            for k in 0..j {
                d -= l[j][k] * l[j][k];
            }
            if !(d > tiny) {
                return Err(Error::CovarianceNotPD { row: j });
            }
            let d = d.sqrt();
            l[j][j] = d;
            for i in (j + 1)..m {
                let mut s = cov[i][j];
                for k in 0..j {
                    s -= l[i][k] * l[j][k];
                }
                l[i][j] = s / d;
            }
        }
        Ok(Self { grid, hurst, lower: l })
    }

    pub fn sample(&self, seed: u64) -> DriverPath<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = self.lower.len();
        let z: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut v = vec![T::zero(); m + 1];
        for i in 0..m {
            let s: f64 = (0..=i).map(|k| self.lower[i][k] * z[k]).sum();
            v[i + 1] = lit(s);
        }
        DriverPath {
            grid: self.grid,
            values: v,
            mu: self.hurst - lit(0.05),
            smooth: false,
            mollifier: None,
        }
    }
}

/// Fractional Brownian motion with Hurst index `hurst` by exact Cholesky
/// factorization of the covariance (desk scale, `n ≲ 4096`).
pub fn make_fbm<T: Real>(hurst: T, seed: u64, grid: TimeGrid<T>) -> Result<DriverPath<T>> {
    Ok(FbmSampler::new(hurst, grid)?.sample(seed))
}

/// C¹ approximation of `path` by convolution with a compact quadratic bump of
/// half-width `eps`.
pub fn mollify<T: Real>(path: &DriverPath<T>, eps: T) -> Result<DriverPath<T>> {
    if !(eps > T::zero()) {
        return Err(Error::InvalidArgument("mollifier width must be > 0".into()));
    }
    Ok(DriverPath {
        grid: path.grid,
        values: path.values.clone(),
        mu: path.mu,
        smooth: true,
        mollifier: Some(eps),
    })
}

/// Discrete Hölder norm: `sup |β(t) − β(s)|/|t − s|^μ` over node pairs plus
/// the sup norm. At `μ = 0` this returns `2·sup|β|` by convention.
pub fn holder_norm<T: Real>(path: &DriverPath<T>, mu: T) -> T {
    let sup = path.values.iter().fold(T::zero(), |a, v| a.max(v.abs()));
    if mu == T::zero() {
        return sup + sup;
    }
    let nodes = path.grid.nodes();
    let mut semi = T::zero();
    for i in 0..nodes.len() {
        for j in (i + 1)..nodes.len() {
            let q = (path.values[j] - path.values[i]).abs() / (nodes[j] - nodes[i]).powf(mu);
            if q > semi {
                semi = q;
            }
        }
    }
    semi + sup
}

/// Writes `t,beta` with 17 significant digits.
pub fn write_csv<T: Real, W: Write>(path: &DriverPath<T>, mut out: W) -> Result<()> {
    writeln!(out, "t,beta")?;
    for (i, v) in path.values.iter().enumerate() {
        writeln!(out, "{:.16e},{:.16e}", to_f64(path.grid.node(i)), to_f64(*v))?;
    }
    Ok(())
}

/// Reads a `t,beta` CSV on a uniform grid.
pub fn read_csv<T: Real, R: BufRead>(input: R, mu: T) -> Result<DriverPath<T>> {
    let mut lines = input.lines().peekable();
    // leading `#` lines carry provenance
    while let Some(Ok(l)) = lines.peek() {
        if !l.starts_with('#') {
            break;
        }
        lines.next();
    }
    let header = lines.next().ok_or_else(|| Error::Parse("empty path file".into()))??;
    if header.trim() != "t,beta" {
        return Err(Error::Parse(format!("expected header `t,beta`, got `{}`", header.trim())));
    }
    let mut ts = Vec::new();
    let mut vs = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split(',');
        let parse = |s: Option<&str>| -> Result<f64> {
            s.ok_or_else(|| Error::Parse(format!("data row {}: missing column", k + 1)))?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("data row {}: {e}", k + 1)))
        };
        ts.push(parse(it.next())?);
        vs.push(parse(it.next())?);
    }
    if ts.len() < 2 {
        return Err(Error::Parse("path file needs at least two rows".into()));
    }
    let n = ts.len();
    let h = (ts[n - 1] - ts[0]) / (n - 1) as f64;
    for (i, &t) in ts.iter().enumerate() {
        if (t - (ts[0] + h * i as f64)).abs() > 1e-9 * h.abs().max(1.0) {
            return Err(Error::Parse(format!("row {} is off the uniform grid", i + 2)));
        }
    }
    let grid = TimeGrid::spanning(lit(ts[0]), lit(ts[n - 1]), n)?;
    DriverPath::from_values(grid, vs.into_iter().map(lit).collect(), mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(n: usize) -> TimeGrid<f64> {
        TimeGrid::new(0.0, 1.0, n).unwrap()
    }

    #[test]
    fn two_node_brownian_is_one_increment() {
        let p = make_brownian(1, grid(2), 1.0);
        assert_eq!(p.values[0], 0.0);
        assert!(p.values[1] != 0.0);
        let z = make_brownian(1, grid(257), 0.0);
        assert!(z.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn brownian_is_reproducible_and_nested() {
        let a = make_brownian(42, grid(1025), 1.0);
        assert_eq!(a.values, make_brownian(42, grid(1025), 1.0).values);
        let b = make_brownian(42, grid(2049), 1.0);
        for i in 0..1025 {
            assert_eq!(a.values[i], b.values[2 * i]);
        }
    }

    #[test]
    fn brownian_holder_norm_stable_under_refinement() {
        let a = holder_norm(&make_brownian(42, grid(1025), 1.0), 0.45);
        let b = holder_norm(&make_brownian(42, grid(2049), 1.0), 0.45);
        assert!(a.is_finite() && b >= a && b < 1.2 * a, "{a} {b}");
    }

    #[test]
    fn brownian_norm_above_half_grows_under_refinement() {
        let n = [257, 1025, 4097].map(|m| holder_norm(&make_brownian(42, grid(m), 1.0), 0.6));
        assert!(n[0] < n[1] && n[1] < n[2], "{n:?}");
    }

    #[test]
    fn brownian_norm_above_half_doubles_from_257_to_4097() {
        let a = holder_norm(&make_brownian(42, grid(257), 1.0), 0.6);
        let b = holder_norm(&make_brownian(42, grid(4097), 1.0), 0.6);
        assert!(b > 2.0 * a, "ratio {}", b / a);
    }

    #[test]
    fn half_hurst_covariance_is_min() {
        let g = TimeGrid::spanning(0.0, 1.0, 9).unwrap();
        let c = fbm_covariance(0.5f64, &g);
        let nodes = g.nodes();
        for i in 0..8 {
            for j in 0..8 {
                assert!((c[i][j] - nodes[i + 1].min(nodes[j + 1])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fbm_two_nodes_variance() {
        let g = TimeGrid::spanning(0.0, 0.5, 2).unwrap();
        let c = fbm_covariance(0.7, &g);
        assert_eq!(c.len(), 1);
        assert!((c[0][0] - 0.5f64.powf(1.4)).abs() < 1e-14);
    }

    #[test]
    fn fbm_sample_covariance_matches() {
        let g = TimeGrid::spanning(0.0, 1.0, 9).unwrap();
        let sampler = FbmSampler::new(0.75, g).unwrap();
        let exact = fbm_covariance(0.75, &g);
        let n = 10_000;
        let samples: Vec<_> = (0..n).map(|s| sampler.sample(7 + s as u64).values).collect();
        for (i, j) in [(0, 0), (1, 4), (3, 3), (2, 7), (7, 7)] {
            let emp = samples.iter().map(|v| v[i + 1] * v[j + 1]).sum::<f64>() / n as f64;
            assert!((emp - exact[i][j]).abs() <= 0.05 * exact[i][j], "({i},{j}) {emp} {}", exact[i][j]);
        }
    }

    #[test]
    fn mollify_fixes_affine_and_constant_paths() {
        let g = grid(65);
        let lin = DriverPath::from_fn(g, 1.0, |t| t);
        let m = mollify(&lin, 0.01).unwrap();
        for k in 0..200 {
            let t = -0.9 + 1.8 * k as f64 / 199.0;
            assert!((m.eval(t) - t).abs() < 1e-12);
            assert!((m.derivative(t) - 1.0).abs() < 1e-12);
        }
        let c = DriverPath::from_fn(g, 0.5, |_| 0.3);
        let mc = mollify(&c, 0.05).unwrap();
        assert!((mc.eval(0.123) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn mollification_error_follows_holder_rate() {
        let b = make_brownian(5, grid(2049), 1.0);
        let c = holder_norm(&b, 0.45);
        for k in 4..=10 {
            let eps = 2f64.powi(-k);
            let m = mollify(&b, eps).unwrap();
            assert!(m.sup_distance(&b) <= c * eps.powf(0.45), "k={k}");
        }
    }

    #[test]
    fn holder_norm_examples() {
        let c = DriverPath::from_fn(grid(33), 0.5, |_| -0.7);
        assert!((holder_norm(&c, 0.5) - 0.7).abs() < 1e-15);
        let id = DriverPath::from_fn(TimeGrid::spanning(0.0, 1.0, 33).unwrap(), 1.0, |t| t);
        assert!((holder_norm(&id, 1.0f64) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let p = make_brownian(8, grid(17), 1.0);
        let mut buf = Vec::new();
        write_csv(&p, &mut buf).unwrap();
        let q: DriverPath<f64> = read_csv(std::io::Cursor::new(buf), 0.45).unwrap();
        assert_eq!(p.values, q.values);
        assert_eq!(p.grid.nodes(), q.grid.nodes());
    }

    #[test]
    fn wide_mollifiers_shrink_toward_path() {
        for seed in 0..200 {
            let p = make_brownian(seed, grid(257), 1.0);
            let d: Vec<f64> = (3..=12).map(|k| mollify(&p, 2f64.powi(-k)).unwrap().sup_distance(&p)).collect();
            assert!(d.windows(2).all(|w| w[1] <= w[0]), "seed {seed}: {d:?}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn holder_norm_monotone_in_mu(seed in 0u64..10_000, m1 in 0.0f64..1.0, m2 in 0.0f64..1.0) {
            let g = TimeGrid::new(0.0, 0.5, 65).unwrap();
            let p = make_brownian(seed, g, 1.0);
            let (lo, hi) = if m1 < m2 { (m1, m2) } else { (m2, m1) };
            prop_assume!(lo > 0.0);
            prop_assert!(holder_norm(&p, lo) <= holder_norm(&p, hi) + 1e-12);
        }

        #[test]
        fn mollification_converges_monotonically(seed in 0u64..10_000) {
            let p = make_brownian(seed, grid(257), 1.0);
            let d: Vec<f64> = (8..=14).map(|k| mollify(&p, 2f64.powi(-k)).unwrap().sup_distance(&p)).collect();
            for w in d.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-15);
            }
        }
    }
}
