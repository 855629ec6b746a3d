//! The symmetric space `Y_d` of `PGL_d(ℝ)`, modelled on determinant-one
//! symmetric positive definite matrices.
//!
//! A point is stored through a factor `g` with `P = g gᵀ` together with
//! `g⁻¹`. Relative quantities between two points are then formed as
//! `g_p⁻¹ g_q`, which stays accurate far from the identity where `P` itself
//! has condition numbers beyond `1/ε`.

mod cone;
mod ideal;
mod quad;

pub use cone::{separation, weyl_cone_distance};
pub use ideal::{busemann, busemann_truncated, slope, IdealPoint};
pub use quad::{ptolemy_check, quad_cr_bound_check};

#[cfg(not(feature = "std"))]
use num_traits::Float;

use core::f64::consts::FRAC_1_SQRT_2;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::domain;
use crate::linalg::{self, frobenius, iwasawa_log_diag, sym_eigen, Mat, Vector};
use crate::{Error, Result};

/// Scale between the Euclidean norm of a Cartan vector and the Riemannian
/// distance. The trace form `tr(X²)` has sectional curvatures in `[-1/2, 0]`,
/// so the factor `1/√2` normalizes the minimum to `-1` in every dimension.
pub const KAPPA: f64 = FRAC_1_SQRT_2;

const SYM_TOL: f64 = 1e-12;
const DET_TOL: f64 = 1e-10;

/// Point of `Y_d`.
#[derive(Clone, Copy, Debug)]
pub struct SpdPoint<const D: usize> {
    g: Mat<D>,
    g_inv: Mat<D>,
}

impl<const D: usize> SpdPoint<D> {
    /// The basepoint `o`.
    pub fn identity() -> Self {
        Self { g: Mat::identity(), g_inv: Mat::identity() }
    }

    /// Validating constructor: symmetric, positive definite, determinant one.
    pub fn from_matrix(m: &Mat<D>) -> Result<Self> {
        let scale = frobenius(m);
        if !m.iter().all(|x| x.is_finite()) || scale == 0.0 {
            return Err(domain("matrix must be finite and nonzero"));
        }
        if frobenius(&(m - m.transpose())) > SYM_TOL * scale {
            return Err(domain("matrix is not symmetric"));
        }
        let (vals, vecs) = sym_eigen(&linalg::symmetrize(m));
        if vals.iter().any(|&l| !(l > 0.0)) {
            return Err(domain("matrix is not positive definite"));
        }
        let log_det: f64 = vals.iter().map(|l| l.ln()).sum();
        if log_det.abs() > DET_TOL {
            return Err(domain("determinant differs from 1"));
        }
        Ok(Self::from_eigen(&vals, &vecs, log_det))
    }

    /// Like [`from_matrix`](Self::from_matrix) but rescales to determinant one,
    /// i.e. the projective class of a positive definite matrix.
    pub fn from_matrix_normalized(m: &Mat<D>) -> Result<Self> {
        let sym = linalg::symmetrize(m);
        if frobenius(&(m - m.transpose())) > SYM_TOL * frobenius(m) {
            return Err(domain("matrix is not symmetric"));
        }
        let (vals, vecs) = sym_eigen(&sym);
        if vals.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(domain("matrix is not positive definite"));
        }
        let log_det: f64 = vals.iter().map(|l| l.ln()).sum();
        Ok(Self::from_eigen(&vals, &vecs, log_det))
    }

    fn from_eigen(vals: &Vector<D>, vecs: &Mat<D>, log_det: f64) -> Self {
        let shift = log_det / D as f64;
        let mut g = *vecs;
        let mut g_inv = vecs.transpose();
        for j in 0..D {
            let s = (0.5 * (vals[j].ln() - shift)).exp();
            for i in 0..D {
                g[(i, j)] *= s;
                g_inv[(j, i)] /= s;
            }
        }
        Self { g, g_inv }
    }

    /// The point `g gᵀ` after rescaling `g` to `|det g| = 1`.
    pub fn from_factor(g: &Mat<D>) -> Result<Self> {
        if !g.iter().all(|x| x.is_finite()) {
            return Err(domain("factor must be finite"));
        }
        let w = iwasawa_log_diag(g);
        let log_abs_det = 0.5 * w.sum();
        if !log_abs_det.is_finite() {
            return Err(domain("factor is singular"));
        }
        let g = g * (-log_abs_det / D as f64).exp();
        let g_inv = g.try_inverse().ok_or_else(|| domain("factor is singular"))?;
        Ok(Self { g, g_inv })
    }

    pub(crate) fn from_factor_pair(g: Mat<D>, g_inv: Mat<D>) -> Self {
        Self { g, g_inv }
    }

    pub fn matrix(&self) -> Mat<D> {
        linalg::symmetrize(&(self.g * self.g.transpose()))
    }

    /// A factor `g` with `P = g gᵀ` and `|det g| = 1`.
    pub fn factor(&self) -> &Mat<D> {
        &self.g
    }

    pub fn factor_inverse(&self) -> &Mat<D> {
        &self.g_inv
    }

    /// Congruence action `h·P = h P hᵀ`, projectivized to determinant one.
    pub fn act(&self, h: &Mat<D>) -> Result<Self> {
        Self::from_factor(&(h * self.g))
    }

    /// `g_p⁻¹ g_q`: the factor of `q` seen from the frame of `p`.
    pub(crate) fn relative_factor(&self, q: &Self) -> Mat<D> {
        self.g_inv * q.g
    }

    /// `log` of `q` relative to `p`, in the frame of `g_p`.
    pub(crate) fn log_frame(&self, q: &Self) -> Mat<D> {
        let (logs, vecs) = linalg::gram_eigen(&self.relative_factor(q));
        let mut x = vecs;
        for j in 0..D {
            let l = logs[j];
            for i in 0..D {
                x[(i, j)] *= l;
            }
        }
        let x = linalg::symmetrize(&(x * vecs.transpose()));
        remove_trace(&x)
    }

    /// The point `g e^{X/2} (g e^{X/2})ᵀ` for `X` in the frame of `g`.
    pub(crate) fn exp_frame(&self, x: &Mat<D>) -> Self {
        let (vals, vecs) = sym_eigen(&remove_trace(&linalg::symmetrize(x)));
        let mut up = vecs;
        let mut down = vecs;
        for j in 0..D {
            let h = 0.5 * vals[j];
            let (eu, ed) = (h.exp(), (-h).exp());
            for i in 0..D {
                up[(i, j)] *= eu;
                down[(i, j)] *= ed;
            }
        }
        let vt = vecs.transpose();
        Self { g: self.g * up * vt, g_inv: down * vt * self.g_inv }
    }

    /// `P^{1/2}`, the symmetric square root.
    pub fn sqrt(&self) -> Mat<D> {
        linalg::symmetrize(&linalg::sym_apply(&self.matrix(), f64::sqrt))
    }
}

fn remove_trace<const D: usize>(x: &Mat<D>) -> Mat<D> {
    let t = x.trace() / D as f64;
    x - Mat::<D>::identity() * t
}

/// Element of the closed positive Weyl chamber `𝔞⁺`: non-increasing
/// entries summing to zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CartanVector<const D: usize> {
    v: Vector<D>,
}

impl<const D: usize> CartanVector<D> {
    pub fn new(v: Vector<D>) -> Result<Self> {
        let scale = v.amax().max(1.0);
        if v.sum().abs() > 1e-12 * scale {
            return Err(domain("Cartan vector must sum to zero"));
        }
        if (1..D).any(|i| v[i] > v[i - 1]) {
            return Err(domain("Cartan vector must be non-increasing"));
        }
        Ok(Self { v })
    }

    /// Sorts and removes the mean.
    pub fn project(v: &Vector<D>) -> Self {
        let mut s = linalg::sorted_desc(v);
        let m = s.sum() / D as f64;
        s.add_scalar_mut(-m);
        Self { v: s }
    }

    pub fn zero() -> Self {
        Self { v: Vector::zeros() }
    }

    pub fn as_vector(&self) -> &Vector<D> {
        &self.v
    }

    /// Simple root `α_i(v) = v_i - v_{i+1}`, `1 ≤ i < D`.
    pub fn alpha(&self, i: usize) -> f64 {
        self.v[i - 1] - self.v[i]
    }

    /// Riemannian length of the corresponding flat segment.
    pub fn norm(&self) -> f64 {
        KAPPA * linalg::stable_norm(self.v.as_slice())
    }

    /// `-w₀ v`, the opposition involution.
    pub fn opposite(&self) -> Self {
        Self { v: Vector::from_fn(|i, _| -self.v[D - 1 - i]) }
    }
}

/// Tangent vector at `base`, stored in the frame `base^{1/2}`: the point
/// `exp(base, s)` is `base^{1/2} e^{s} base^{1/2}`.
#[derive(Clone, Copy, Debug)]
pub struct TangentSym<const D: usize> {
    pub s: Mat<D>,
    pub base: SpdPoint<D>,
}

impl<const D: usize> TangentSym<D> {
    pub fn new(base: SpdPoint<D>, s: Mat<D>) -> Result<Self> {
        let scale = frobenius(&s).max(1.0);
        if frobenius(&(s - s.transpose())) > SYM_TOL * scale || s.trace().abs() > SYM_TOL * scale {
            return Err(domain("tangent matrix must be symmetric and trace free"));
        }
        Ok(Self { s, base })
    }

    pub fn norm(&self) -> f64 {
        KAPPA * frobenius(&self.s)
    }
}

/// Orthogonal polar factor `U` of `g = P^{1/2} U`.
fn polar_rotation<const D: usize>(p: &SpdPoint<D>) -> Mat<D> {
    let inv_sqrt = linalg::symmetrize(&linalg::sym_apply(&p.matrix(), |l| 1.0 / l.sqrt()));
    inv_sqrt * p.g
}

pub fn log<const D: usize>(base: &SpdPoint<D>, q: &SpdPoint<D>) -> TangentSym<D> {
    let u = polar_rotation(base);
    let s = linalg::symmetrize(&(u * base.log_frame(q) * u.transpose()));
    TangentSym { s: remove_trace(&s), base: *base }
}

pub fn exp<const D: usize>(v: &TangentSym<D>) -> SpdPoint<D> {
    let u = polar_rotation(&v.base);
    v.base.exp_frame(&(u.transpose() * v.s * u))
}

/// Sorted logarithms of the eigenvalues of `p^{-1/2} q p^{-1/2}`.
pub fn vector_distance<const D: usize>(p: &SpdPoint<D>, q: &SpdPoint<D>) -> CartanVector<D> {
    let a = p.relative_factor(q);
    let l: [f64; D] = linalg::log_singular_values(&a);
    CartanVector::project(&Vector::from_fn(|i, _| 2.0 * l[i]))
}

pub fn distance<const D: usize>(p: &SpdPoint<D>, q: &SpdPoint<D>) -> f64 {
    vector_distance(p, q).norm()
}

/// `p^{1/2} (p^{-1/2} q p^{-1/2})^t p^{1/2}`.
pub fn geodesic<const D: usize>(p: &SpdPoint<D>, q: &SpdPoint<D>, t: f64) -> SpdPoint<D> {
    p.exp_frame(&(p.log_frame(q) * t))
}

/// Weighted barycenter: the minimizer of `Σ wᵢ d(·, pᵢ)²`.
///
/// Fixed-point iteration `h ← exp_h(Σ wᵢ log_h pᵢ / Σ wᵢ)`, halving the step
/// whenever the residual would grow.
pub fn karcher_mean<const D: usize>(
    points: &[SpdPoint<D>],
    weights: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<SpdPoint<D>> {
    if points.len() != weights.len() || points.is_empty() {
        return Err(domain("points and weights must be nonempty and of equal length"));
    }
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(domain("weights must be finite and nonnegative"));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(domain("weights are all zero"));
    }
    let heaviest = (0..points.len()).max_by(|&a, &b| weights[a].total_cmp(&weights[b])).unwrap_or(0);
    let mean_log = |h: &SpdPoint<D>| {
        let mut x = Mat::<D>::zeros();
        for (p, &w) in points.iter().zip(weights) {
            if w > 0.0 {
                x += h.log_frame(p) * (w / total);
            }
        }
        x
    };
    let mut h = points[heaviest];
    let mut x = mean_log(&h);
    let mut residual = KAPPA * frobenius(&x);
    for _ in 0..max_iter {
        if residual <= tol {
            return Ok(h);
        }
        let mut step = 1.0;
        loop {
            let trial = h.exp_frame(&(x * step));
            let tx = mean_log(&trial);
            let tr = KAPPA * frobenius(&tx);
            if tr < residual || step < 1e-6 {
                h = trial;
                x = tx;
                residual = tr;
                break;
            }
            step *= 0.5;
        }
    }
    if residual <= tol {
        return Ok(h);
    }
    Err(Error::NonConvergence { what: "karcher mean", iterations: max_iter, residual })
}

/// Sectional curvature of the plane spanned by metric-orthonormal `x, y`
/// (symmetric, trace free) at the basepoint, read off from the distance
/// between `exp(εx)` and `exp(εy)`: `c² = 2ε² - K ε⁴/3 + O(ε⁶)`. One
/// Richardson step removes the `ε²` error.
pub fn comparison_curvature<const D: usize>(x: &Mat<D>, y: &Mat<D>, eps: f64) -> f64 {
    let o = SpdPoint::<D>::identity();
    let estimate = |e: f64| {
        let a = o.exp_frame(&(x * e));
        let b = o.exp_frame(&(y * e));
        let c = distance(&a, &b);
        3.0 * (2.0 * e * e - c * c) / e.powi(4)
    };
    (4.0 * estimate(eps / 2.0) - estimate(eps)) / 3.0
}

/// Gaussian symmetric trace-free matrix with unit metric norm.
pub fn random_unit_tangent<const D: usize, R: Rng + ?Sized>(rng: &mut R) -> Mat<D> {
    let mut m = Mat::<D>::zeros();
    for i in 0..D {
        for j in i..D {
            let z: f64 = StandardNormal.sample(rng);
            let z = if i == j { z } else { z * FRAC_1_SQRT_2 };
            m[(i, j)] = z;
            m[(j, i)] = z;
        }
    }
    let m = remove_trace(&m);
    let n = KAPPA * frobenius(&m);
    m / n
}

/// `exp_o(r X)` for a random unit direction `X` and `r = radius`.
pub fn random_point<const D: usize, R: Rng + ?Sized>(rng: &mut R, radius: f64) -> SpdPoint<D> {
    let x = random_unit_tangent::<D, R>(rng);
    SpdPoint::identity().exp_frame(&(x * radius))
}

/// Haar-random orthogonal matrix.
pub fn random_orthogonal<const D: usize, R: Rng + ?Sized>(rng: &mut R) -> Mat<D> {
    loop {
        let m = Mat::<D>::from_fn(|_, _| StandardNormal.sample(rng));
        if let Some(q) = linalg::orthonormalize_columns(&m) {
            return q;
        }
    }
}
