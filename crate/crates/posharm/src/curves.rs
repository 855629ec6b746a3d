//! Positive curves `ℝP¹ → Flag(ℝ^d)` from `d-1` increasing homeomorphisms.
//!
//! The curve is `ξ(t) = N(0, t)·σ₀` where `N(a, b)` is the ordered
//! exponential of `Σ φᵢ'(s) E_{i,i+1} ds` over `[a, b]`. For piecewise linear
//! `φᵢ` this is a finite product of exponentials of nilpotent matrices, so
//! the iterated integrals come out exactly. Outside the window the `φᵢ` are
//! continued with their boundary slopes, and `∞ ↦ σ_∞`.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::domain;
use crate::flags::{self, Flag, PositiveQuadruple, Unipotent};
use crate::hyp2::ExtReal;
use crate::linalg::{antidiag, det, Mat};
use crate::{Error, Result};

/// Strictly increasing piecewise linear map with `φ(0) = 0`, `φ(1) = 1`,
/// continued linearly beyond its last breakpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseMonotone {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseMonotone {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.len() != values.len() || breakpoints.len() < 2 {
            return Err(domain("need matching breakpoints and values, at least two"));
        }
        if breakpoints.iter().chain(&values).any(|x| !x.is_finite()) {
            return Err(domain("breakpoints and values must be finite"));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) || values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(domain("breakpoints and values must be strictly increasing"));
        }
        let p = Self { breakpoints, values };
        for (t, v) in [(0.0, 0.0), (1.0, 1.0)] {
            match p.breakpoints.iter().position(|&b| b == t) {
                Some(k) if (p.values[k] - v).abs() <= 1e-12 => {}
                _ => return Err(domain("φ must have breakpoints 0 and 1 with φ(0) = 0, φ(1) = 1")),
            }
        }
        Ok(p)
    }

    /// The identity on `[-t, t]`, `t > 1`.
    pub fn identity(t: f64) -> Result<Self> {
        Self::new(alloc::vec![-t, 0.0, 1.0, t], alloc::vec![-t, 0.0, 1.0, t])
    }

    /// Samples an increasing map on `grid` (which must contain 0 and 1) and
    /// normalizes it affinely to `φ(0) = 0`, `φ(1) = 1`.
    pub fn sampled(f: impl Fn(f64) -> f64, grid: &[f64]) -> Result<Self> {
        let (f0, f1) = (f(0.0), f(1.0));
        let values = grid.iter().map(|&t| (f(t) - f0) / (f1 - f0)).collect();
        let mut p = Self::new(grid.to_vec(), values)?;
        for (t, v) in [(0.0, 0.0), (1.0, 1.0)] {
            if let Some(k) = p.breakpoints.iter().position(|&b| b == t) {
                p.values[k] = v;
            }
        }
        Ok(p)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, t: f64) -> f64 {
        let b = &self.breakpoints;
        let n = b.len();
        let k = match b.partition_point(|&x| x <= t) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let s = (self.values[k + 1] - self.values[k]) / (b[k + 1] - b[k]);
        self.values[k] + s * (t - b[k])
    }
}

/// Sampling plan for quasisymmetry ratios: base points `x` uniform in
/// `[x_min, x_max]`, increments `t` geometric in `[t_min, t_max]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QsGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub nt: usize,
}

impl QsGrid {
    fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let nx = self.nx.max(1);
        let nt = self.nt.max(1);
        (0..nx).flat_map(move |i| {
            let x =
                if nx == 1 { self.x_min } else { self.x_min + (self.x_max - self.x_min) * i as f64 / (nx - 1) as f64 };
            (0..nt).map(move |j| {
                let t = if nt == 1 {
                    self.t_min
                } else {
                    self.t_min * (self.t_max / self.t_min).powf(j as f64 / (nt - 1) as f64)
                };
                (x, t)
            })
        })
    }
}

/// Sampled lower bound for the quasisymmetry constant of `φ`:
/// `sup max(ρ, 1/ρ)` with `ρ = (φ(x+t) - φ(x)) / (φ(x) - φ(x-t))`.
pub fn qs_constant(phi: &PiecewiseMonotone, grid: &QsGrid) -> f64 {
    let mut k: f64 = 1.0;
    for (x, t) in grid.points() {
        let r = (phi.eval(x + t) - phi.eval(x)) / (phi.eval(x) - phi.eval(x - t));
        k = k.max(r).max(1.0 / r);
    }
    k
}

#[derive(Clone, Debug)]
pub struct PositiveCurve<const D: usize> {
    window: (f64, f64),
    knots: Vec<f64>,
    // φᵢ at each knot, `values[k][i]`.
    values: Vec<[f64; 8]>,
    // N(t₀, t_k).
    prefix: Vec<Unipotent<D>>,
    zero_slope_intervals: usize,
}

/// Builds the curve on `window`, which must contain `[0, 1]`.
pub fn build_curve<const D: usize>(phis: &[PiecewiseMonotone], window: (f64, f64)) -> Result<PositiveCurve<D>> {
    if !(2..=9).contains(&D) {
        return Err(Error::Unsupported(D));
    }
    if phis.len() != D - 1 {
        return Err(domain("need one homeomorphism per simple root"));
    }
    let (lo, hi) = window;
    if !(lo < 0.0 && hi > 1.0) || !lo.is_finite() || !hi.is_finite() {
        return Err(domain("window must be finite and contain [0, 1]"));
    }
    let mut knots: Vec<f64> =
        phis.iter().flat_map(|p| p.breakpoints.iter().cloned()).filter(|&t| t > lo && t < hi).collect();
    knots.push(lo);
    knots.push(hi);
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let values: Vec<[f64; 8]> = knots
        .iter()
        .map(|&t| {
            let mut v = [0.0; 8];
            for (i, p) in phis.iter().enumerate() {
                v[i] = p.eval(t);
            }
            v
        })
        .collect();
    let mut zero_slope_intervals = 0;
    let mut prefix = Vec::with_capacity(knots.len());
    prefix.push(Unipotent::identity());
    let mut steps = Vec::with_capacity(knots.len());
    for k in 0..knots.len() - 1 {
        let inc: Vec<f64> = (0..D - 1).map(|i| values[k + 1][i] - values[k][i]).collect();
        if inc.iter().any(|&c| c <= 0.0) {
            zero_slope_intervals += 1;
        }
        let step = Unipotent::exp_superdiagonal(&inc);
        prefix.push(prefix[k].mul(&step));
        steps.push(step);
    }
    // Products of totally positive steps stay totally positive, and the steps
    // are well conditioned where the full product is not.
    if zero_slope_intervals == 0 && D <= 6 {
        for step in &steps {
            let (ok, report) = flags::totally_positive(step)?;
            if !ok {
                return Err(report.into_error());
            }
        }
    }
    Ok(PositiveCurve { window, knots, values, prefix, zero_slope_intervals })
}

impl<const D: usize> PositiveCurve<D> {
    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Subintervals where some `φᵢ` is flat; positivity degrades there.
    pub fn zero_slope_intervals(&self) -> usize {
        self.zero_slope_intervals
    }

    /// `φᵢ` (zero-based `i`) with the boundary-slope continuation.
    pub fn phi(&self, i: usize, t: f64) -> f64 {
        let n = self.knots.len();
        let k = match self.knots.partition_point(|&x| x <= t) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let s = (self.values[k + 1][i] - self.values[k][i]) / (self.knots[k + 1] - self.knots[k]);
        self.values[k][i] + s * (t - self.knots[k])
    }

    /// Slope of `φᵢ` on the piece containing `t`.
    fn slope(&self, i: usize, t: f64) -> f64 {
        let n = self.knots.len();
        let k = self.knots.partition_point(|&x| x <= t).clamp(1, n - 1) - 1;
        (self.values[k + 1][i] - self.values[k][i]) / (self.knots[k + 1] - self.knots[k])
    }

    /// `[a, b]` lies in a single piece, so the increment is slope times
    /// length without cancellation between large values.
    fn step(&self, a: f64, b: f64) -> Unipotent<D> {
        let mid = 0.5 * (a + b);
        let inc: Vec<f64> = (0..D - 1).map(|i| self.slope(i, mid) * (b - a)).collect();
        Unipotent::exp_superdiagonal(&inc)
    }

    /// `N(a, b)` as a product over the knots in between (the inverse when
    /// `b < a`). No cancellation between large prefix products.
    pub fn between(&self, a: f64, b: f64) -> Unipotent<D> {
        if b < a {
            return self.between(b, a).inverse();
        }
        let mut out = Unipotent::identity();
        let mut s = a;
        let start = self.knots.partition_point(|&x| x <= a);
        for &k in &self.knots[start..] {
            if k >= b {
                break;
            }
            out = out.mul(&self.step(s, k));
            s = k;
        }
        out.mul(&self.step(s, b))
    }

    /// `n(t) = N(t₀, t)` for `t` in the window.
    pub fn from_start(&self, t: f64) -> Result<Unipotent<D>> {
        let (lo, hi) = self.window;
        if !(t >= lo && t <= hi) {
            return Err(Error::Range(t));
        }
        let k = self.knots.partition_point(|&x| x <= t).saturating_sub(1).min(self.knots.len() - 2);
        Ok(self.prefix[k].mul(&self.step(self.knots[k], t)))
    }

    /// `n(t)·σ₀`, normalized at the window start.
    pub fn eval_flag(&self, t: f64) -> Result<Flag<D>> {
        Ok(Flag::from_unipotent(&self.from_start(t)?))
    }

    /// `N(0, t)`, any finite `t`.
    pub fn unipotent(&self, t: f64) -> Unipotent<D> {
        self.between(0.0, t)
    }

    /// `ξ(t) = N(0, t)·σ₀`, `ξ(∞) = σ_∞`.
    pub fn flag_at(&self, t: ExtReal) -> Flag<D> {
        match t {
            ExtReal::Finite(t) => Flag::from_unipotent(&self.unipotent(t)),
            ExtReal::Infinity => Flag::sigma_inf(),
        }
    }

    /// Number of parameters where `t ↦ ξ(t)` (window-start normalized) fails
    /// to be transverse to the `k`-dimensional subspace spanned by the first
    /// `k` columns of `v`, from sign changes of `det[V | (n(t)J)_{1..d-k}]`
    /// located by bisection, plus near-zero local minima of `|det|` (even
    /// order zeros) located by golden section.
    pub fn count_nontransverse(&self, v: &Mat<D>, k: usize, samples: usize) -> Result<(usize, Vec<f64>)> {
        if k == 0 || k >= D {
            return Err(domain("subspace dimension must lie in 1..d-1"));
        }
        let samples = samples.max(3);
        let j = antidiag::<D>();
        let f = |t: f64| -> f64 {
            let b = self.from_start(t).map(|n| n.as_matrix() * j).unwrap_or_else(|_| Mat::<D>::identity());
            let m = Mat::<D>::from_fn(|r, c| if c < k { v[(r, c)] } else { b[(r, c - k)] });
            det(&m)
        };
        let (lo, hi) = self.window;
        let ts: Vec<f64> = (0..samples).map(|i| lo + (hi - lo) * i as f64 / (samples - 1) as f64).collect();
        let fs: Vec<f64> = ts.iter().map(|&t| f(t)).collect();
        let scale = fs.iter().fold(0.0_f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
        let mut roots = Vec::new();
        for i in 0..samples - 1 {
            let (a, b) = (ts[i], ts[i + 1]);
            let (fa, fb) = (fs[i], fs[i + 1]);
            if fa == 0.0 {
                roots.push(a);
                continue;
            }
            if fa * fb < 0.0 {
                let (mut x, mut y, mut fx) = (a, b, fa);
                for _ in 0..60 {
                    let m = 0.5 * (x + y);
                    let fm = f(m);
                    if fm == 0.0 {
                        x = m;
                        y = m;
                        break;
                    }
                    if fm * fx < 0.0 {
                        y = m;
                    } else {
                        x = m;
                        fx = fm;
                    }
                }
                roots.push(0.5 * (x + y));
            } else if i > 0
                && fa.abs() <= fs[i - 1].abs()
                && fa.abs() <= fb.abs()
                && fa * fs[i - 1] > 0.0
                && fa * fb > 0.0
            {
                // Local minimum of |f| without a sign change.
                let (t, v) = golden_min(|t| f(t).abs(), ts[i - 1], b);
                if v <= 1e-9 * scale {
                    roots.push(t);
                }
            }
        }
        if fs[samples - 1] == 0.0 {
            roots.push(hi);
        }
        roots.sort_by(f64::total_cmp);
        roots.dedup_by(|a, b| (*a - *b).abs() < 1e-9 * (hi - lo));
        Ok((roots.len(), roots))
    }
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-14 * (1.0 + a.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let t = 0.5 * (a + b);
    (t, f(t))
}

/// Image quadruple of `(a, b, c, e)` under the curve in standard position.
pub fn image_quadruple<const D: usize>(curve: &PositiveCurve<D>, q: &[ExtReal; 4]) -> Result<PositiveQuadruple<D>> {
    let f: [Flag<D>; 4] = core::array::from_fn(|k| curve.flag_at(q[k]));
    let (_, sq, _) = flags::quadruple_positive(&f)?;
    PositiveQuadruple::try_from(sq)
}

/// Sampled flag quasisymmetry constant over the domain quadruples
/// `(x-t, x, x+t, ∞)` of the grid (all of cross ratio `-1`) and their
/// images under the Möbius maps `extra`.
pub fn curve_qs_constant<const D: usize>(
    curve: &PositiveCurve<D>,
    grid: &QsGrid,
    extra: &[crate::hyp2::Mobius],
) -> (f64, usize, usize) {
    let mut k: f64 = 1.0;
    let mut used = 0;
    let mut skipped = 0;
    let base = |x: f64, t: f64| [ExtReal::Finite(x - t), ExtReal::Finite(x), ExtReal::Finite(x + t), ExtReal::Infinity];
    for (x, t) in grid.points() {
        let mut quads = alloc::vec![base(x, t)];
        for g in extra {
            let q = base(x, t);
            quads.push(core::array::from_fn(|j| g.apply_ext(&q[j])));
        }
        for q in quads {
            match image_quadruple(curve, &q) {
                Ok(pq) => {
                    used += 1;
                    for i in 1..D {
                        if let Ok(c) = flags::cross_ratio_i(&pq, i) {
                            k = k.max(-c).max(-1.0 / c);
                        }
                    }
                }
                Err(_) => skipped += 1,
            }
        }
    }
    (k, used, skipped)
}

#[cfg(test)]
mod tests;
