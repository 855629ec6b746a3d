#[cfg(not(feature = "std"))]
use num_traits::Float;

use super::{CartanVector, SpdPoint, KAPPA};
use crate::error::domain;
use crate::linalg::{self, antidiag, det_dyn, iwasawa_log_diag, Mat, Vector};
use crate::Result;

/// Point of the visual boundary: the endpoint of the ray
/// `t ↦ k diag(e^{t u}) kᵀ` from the basepoint, with `k` orthogonal and `u`
/// a unit-speed type in `𝔞⁺`.
#[derive(Clone, Copy, Debug)]
pub struct IdealPoint<const D: usize> {
    frame: Mat<D>,
    type_vec: CartanVector<D>,
}

impl<const D: usize> IdealPoint<D> {
    pub fn new(frame: Mat<D>, type_vec: CartanVector<D>) -> Result<Self> {
        if (frame.transpose() * frame - Mat::<D>::identity()).amax() > 1e-12 {
            return Err(domain("frame must be orthogonal"));
        }
        if (type_vec.norm() - 1.0).abs() > 1e-12 {
            return Err(domain("type must have unit norm"));
        }
        Ok(Self { frame, type_vec })
    }

    /// Orthonormalizes `frame` and rescales `dir` (sorted, trace removed) to
    /// unit type.
    pub fn from_direction(frame: &Mat<D>, dir: &Vector<D>) -> Result<Self> {
        let frame = linalg::orthonormalize_columns(frame).ok_or_else(|| domain("degenerate frame"))?;
        let u = CartanVector::project(dir);
        let n = u.norm();
        if !(n > 0.0) {
            return Err(domain("zero direction"));
        }
        Ok(Self { frame, type_vec: CartanVector { v: u.v / n } })
    }

    pub fn frame(&self) -> &Mat<D> {
        &self.frame
    }

    pub fn type_vec(&self) -> &CartanVector<D> {
        &self.type_vec
    }

    /// Endpoint of the reversed ray: longest Weyl element in the same frame.
    pub fn opposite(&self) -> Self {
        Self { frame: self.frame * antidiag::<D>(), type_vec: self.type_vec.opposite() }
    }

    /// The ray point at distance `t` from the basepoint.
    pub fn ray_point(&self, t: f64) -> SpdPoint<D> {
        let mut g = self.frame;
        let mut g_inv = self.frame.transpose();
        for j in 0..D {
            let h = 0.5 * t * self.type_vec.v[j];
            for i in 0..D {
                g[(i, j)] *= h.exp();
                g_inv[(j, i)] *= (-h).exp();
            }
        }
        SpdPoint::from_factor_pair(g, g_inv)
    }
}

/// Busemann function normalized at the basepoint, via the pivots of
/// `kᵀ P k = N diag(e^w) Nᵀ`: `b(P) = -κ² ⟨u, w⟩`.
pub fn busemann<const D: usize>(eta: &IdealPoint<D>, p: &SpdPoint<D>) -> f64 {
    let w = iwasawa_log_diag(&(eta.frame.transpose() * p.factor()));
    -KAPPA * KAPPA * eta.type_vec.v.dot(&w)
}

/// The defining limit `d(γ(t), p) - t`, extrapolated to `t = ∞` from
/// `t ∈ {T/8, T/4, T/2, T}`. The plain difference converges only like
/// `1/t` (the correction comes from the flat directions orthogonal to the
/// ray), so the values are extrapolated in `1/t` by Neville's scheme.
pub fn busemann_truncated<const D: usize>(eta: &IdealPoint<D>, p: &SpdPoint<D>, horizon: f64) -> f64 {
    let b = eta.frame.transpose() * p.factor();
    let u = &eta.type_vec.v;
    let gap = |t: f64| {
        // d(γ(t), p) from the singular values of diag(e^{-t u/2}) kᵀ g.
        let s: [f64; D] = core::array::from_fn(|i| -0.5 * t * u[i]);
        let logs = linalg::log_singular_values_row_scaled(&b, &s);
        let v: [f64; D] = core::array::from_fn(|i| 2.0 * logs[i]);
        KAPPA * linalg::stable_norm(&v) - t
    };
    let ts = [horizon / 8.0, horizon / 4.0, horizon / 2.0, horizon];
    let mut h = [0.0; 4];
    let mut f = [0.0; 4];
    for k in 0..4 {
        h[k] = 1.0 / ts[k];
        f[k] = gap(ts[k]);
    }
    neville_at_zero(&h, &mut f)
}

fn neville_at_zero(x: &[f64], f: &mut [f64]) -> f64 {
    let n = x.len();
    for m in 1..n {
        for i in 0..(n - m) {
            f[i] = (x[i + m] * f[i] - x[i] * f[i + 1]) / (x[i + m] - x[i]);
        }
    }
    f[0]
}

/// Asymptotic slope of `b_eta` along the ray to `xi`.
///
/// When `k_ηᵀ k_ξ` is a signed permutation the two lie in one flat and the
/// slope is `-κ²⟨u_η, π u_ξ⟩`. Otherwise the ray is followed out to `horizon`
/// and the slope is the secant over `[horizon/2, horizon]`; the pivots along
/// the ray are evaluated through Cauchy-Binet in log space, which stays exact
/// where the entries of the factor span hundreds of orders of magnitude.
pub fn slope<const D: usize>(eta: &IdealPoint<D>, xi: &IdealPoint<D>, horizon: f64) -> f64 {
    let m = eta.frame.transpose() * xi.frame;
    if let Some(perm) = signed_permutation(&m) {
        let v = Vector::<D>::from_fn(|i, _| xi.type_vec.v[perm[i]]);
        return -KAPPA * KAPPA * eta.type_vec.v.dot(&v);
    }
    let on_ray = |t: f64| {
        let logs = Vector::<D>::from_fn(|j, _| 0.5 * t * xi.type_vec.v[j]);
        let w = log_pivots_column_scaled(&m, &logs);
        -KAPPA * KAPPA * eta.type_vec.v.dot(&w)
    };
    (on_ray(horizon) - on_ray(0.5 * horizon)) / (0.5 * horizon)
}

fn signed_permutation<const D: usize>(m: &Mat<D>) -> Option<[usize; D]> {
    let mut perm = [0; D];
    let mut used = [false; D];
    for i in 0..D {
        let mut hit = None;
        for j in 0..D {
            let a = m[(i, j)].abs();
            if (a - 1.0).abs() < 1e-9 {
                hit = Some(j);
            } else if a > 1e-9 {
                return None;
            }
        }
        let j = hit?;
        if used[j] {
            return None;
        }
        used[j] = true;
        perm[i] = j;
    }
    Some(perm)
}

/// Iwasawa pivots `w` of `b bᵀ` with `b = m diag(e^{s})`. The pivot of row
/// `i` is the ratio of Gram determinants of rows `i..D` and `i+1..D`, each a
/// sum over column subsets of squared minors times `e^{2 Σ s}`.
pub(crate) fn log_pivots_column_scaled<const D: usize>(m: &Mat<D>, s: &Vector<D>) -> Vector<D> {
    let mut log_gram = [0.0; D];
    let mut buf = alloc::vec![0.0; D * D];
    let mut terms = alloc::vec::Vec::new();
    for i in (0..D).rev() {
        let k = D - i;
        terms.clear();
        for mask in 0u32..(1 << D) {
            if mask.count_ones() as usize != k {
                continue;
            }
            let cols: alloc::vec::Vec<usize> = (0..D).filter(|j| mask & (1 << j) != 0).collect();
            for (r, row) in (i..D).enumerate() {
                for (c, &col) in cols.iter().enumerate() {
                    buf[r * k + c] = m[(row, col)];
                }
            }
            let minor = det_dyn(&mut buf[..k * k], k);
            let scale: f64 = cols.iter().map(|&j| s[j]).sum();
            terms.push(2.0 * (minor.abs().ln() + scale));
        }
        let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = terms.iter().map(|t| (t - top).exp()).sum();
        log_gram[i] = top + sum.ln();
    }
    Vector::<D>::from_fn(|i, _| log_gram[i] - if i + 1 < D { log_gram[i + 1] } else { 0.0 })
}
