//! Stability certificates: averages of Busemann functions over hitting
//! measures of hyperbolic disks, minimized over sampled ideal points.
//!
//! These are numerical evidence. Every infimum is over a finite, reported
//! sample of ideal points.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::domain;
use crate::hyp2::{circle_points, HypPoint};
use crate::linalg::{self, Mat, Vector};
use crate::spd::{busemann, random_orthogonal, separation, IdealPoint, SpdPoint};
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral {
    /// The average with `2n` circle points.
    pub value: f64,
    /// `|S_{2n} - S_n|`.
    pub error: f64,
}

/// `S = Σ_k [b_η(f(z_k)) - b_η(f(x))] / n` over `n` equally spaced points of
/// the circle of radius `r` about `x`, reported at `2n` points together with
/// the change from `n`.
pub fn stability_integral<const D: usize>(
    f: impl Fn(&HypPoint) -> Result<SpdPoint<D>>,
    x: &HypPoint,
    r: f64,
    eta: &IdealPoint<D>,
    n: usize,
) -> Result<Integral> {
    let ring = CircleValues::new(&f, x, r, n)?;
    Ok(ring.integral(eta))
}

/// [`stability_integral`] for several ideal points, evaluating `f` once.
pub fn stability_profile<const D: usize>(
    f: impl Fn(&HypPoint) -> Result<SpdPoint<D>>,
    x: &HypPoint,
    r: f64,
    etas: &[IdealPoint<D>],
    n: usize,
) -> Result<Vec<Integral>> {
    let ring = CircleValues::new(&f, x, r, n)?;
    Ok(etas.iter().map(|eta| ring.integral(eta)).collect())
}

/// `f` at a center and at `2n` circle points, reused across ideal points.
struct CircleValues<const D: usize> {
    center: SpdPoint<D>,
    circle: Vec<SpdPoint<D>>,
}

impl<const D: usize> CircleValues<D> {
    fn new(f: &impl Fn(&HypPoint) -> Result<SpdPoint<D>>, x: &HypPoint, r: f64, n: usize) -> Result<Self> {
        let pts = circle_points(x, r, 2 * n)?;
        Ok(Self { center: f(x)?, circle: pts.iter().map(f).collect::<Result<_>>()? })
    }

    fn integral(&self, eta: &IdealPoint<D>) -> Integral {
        let b0 = busemann(eta, &self.center);
        let vals: Vec<f64> = self.circle.iter().map(|p| busemann(eta, p) - b0).collect();
        let fine = vals.iter().sum::<f64>() / vals.len() as f64;
        let coarse = vals.iter().step_by(2).sum::<f64>() / (vals.len() / 2) as f64;
        Integral { value: fine, error: (fine - coarse).abs() }
    }
}

/// Unit types on a quasi-uniform lattice of the unit sphere of `𝔞⁺`: a
/// Kronecker sequence in the cube, radially projected and then sorted into
/// the chamber (sorting folds the sphere onto the chamber).
pub fn type_lattice<const D: usize>(count: usize) -> Vec<Vector<D>> {
    // Generalized golden ratio: the root of x^{m+1} = x + 1.
    let m = D - 1;
    let mut phi = 2.0f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (m as f64 + 1.0));
    }
    let steps: Vec<f64> = (1..=m).map(|j| phi.powi(-(j as i32)).fract()).collect();
    let mut out = Vec::with_capacity(count);
    let mut k = 0u64;
    while out.len() < count && k < 64 * count as u64 + 64 {
        k += 1;
        // Coordinates in an orthonormal basis of the trace-free hyperplane.
        let c: Vec<f64> = steps.iter().map(|s| 2.0 * (0.5 + k as f64 * s).fract() - 1.0).collect();
        let v = trace_free_from_coords::<D>(&c);
        let n = v.norm();
        if n < 1e-6 {
            continue;
        }
        let u = linalg::sorted_desc(&(v / n));
        out.push(u);
    }
    out
}

/// Helmert basis of `{v : Σ vᵢ = 0}`.
fn trace_free_from_coords<const D: usize>(c: &[f64]) -> Vector<D> {
    let mut v = Vector::<D>::zeros();
    for (j, &cj) in c.iter().enumerate() {
        let k = j + 1;
        let s = 1.0 / ((k * (k + 1)) as f64).sqrt();
        for i in 0..k {
            v[i] += cj * s;
        }
        v[k] -= cj * s * k as f64;
    }
    v
}

/// Random frames from the Haar measure combined with lattice types.
pub fn sample_ideal_points<const D: usize, R: Rng + ?Sized>(rng: &mut R, count: usize) -> Result<Vec<IdealPoint<D>>> {
    let types = type_lattice::<D>(count);
    types.iter().map(|u| IdealPoint::from_direction(&random_orthogonal::<D, R>(rng), u)).collect()
}

#[derive(Clone, Debug)]
pub struct CenterReport<const D: usize> {
    pub x: HypPoint,
    pub r: f64,
    pub inf_s: f64,
    pub argmin: IdealPoint<D>,
    pub s_over_r: f64,
    /// Quadrature error estimate at the minimizer.
    pub quad_error: f64,
    pub evaluations: usize,
}

#[derive(Clone, Debug)]
pub struct StabilityReport<const D: usize> {
    pub centers: Vec<CenterReport<D>>,
    pub inf_s: f64,
    pub inf_s_over_r: f64,
    /// `ε(Y_d) / M̂`.
    pub threshold: f64,
    /// `inf S ≥ 1`.
    pub pass: bool,
    pub ideal_samples: usize,
    pub circle_points: usize,
}

/// Perturbs `eta` by a random rotation of size `step` and a random change of
/// type, refolded into the chamber.
fn perturb<const D: usize, R: Rng + ?Sized>(rng: &mut R, eta: &IdealPoint<D>, step: f64) -> Result<IdealPoint<D>> {
    let mut skew = Mat::<D>::zeros();
    for i in 0..D {
        for j in (i + 1)..D {
            let g: f64 = StandardNormal.sample(rng);
            skew[(i, j)] = step * g;
            skew[(j, i)] = -step * g;
        }
    }
    // Cayley transform keeps the rotation exactly orthogonal.
    let id = Mat::<D>::identity();
    let rot = (id - 0.5 * skew).try_inverse().ok_or_else(|| domain("rotation step too large"))? * (id + 0.5 * skew);
    let noise = Vector::<D>::from_fn(|_, _| {
        let g: f64 = StandardNormal.sample(rng);
        step * g
    });
    IdealPoint::from_direction(&(eta.frame() * rot), &(eta.type_vec().as_vector() + noise))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CertifyOptions {
    /// Circle points are `2n`, compared against `n`.
    pub n: usize,
    /// Local random-search steps around the running minimizer.
    pub refine: usize,
    /// Quasi-isometry constant entering the threshold `ε(Y_d)/M̂`.
    pub m_hat: f64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self { n: 128, refine: 64, m_hat: 1.0 }
    }
}

/// For each center, the smallest `S(f, x, r, η)` over `etas`, then a local
/// random search around the running minimizer.
pub fn certify<const D: usize, R: Rng + ?Sized>(
    f: impl Fn(&HypPoint) -> Result<SpdPoint<D>>,
    centers: &[HypPoint],
    r: f64,
    etas: &[IdealPoint<D>],
    opts: &CertifyOptions,
    rng: &mut R,
) -> Result<StabilityReport<D>> {
    let CertifyOptions { n, refine, m_hat } = *opts;
    if etas.is_empty() || centers.is_empty() {
        return Err(domain("need at least one center and one ideal point"));
    }
    let mut out = Vec::with_capacity(centers.len());
    for x in centers {
        let ring = CircleValues::new(&f, x, r, n)?;
        let mut best = (f64::INFINITY, etas[0], 0.0);
        for eta in etas {
            let s = ring.integral(eta);
            if s.value < best.0 {
                best = (s.value, *eta, s.error);
            }
        }
        let mut step = 0.3;
        for _ in 0..refine {
            let cand = perturb(rng, &best.1, step)?;
            let s = ring.integral(&cand);
            if s.value < best.0 {
                best = (s.value, cand, s.error);
            } else {
                step = (step * 0.9).max(1e-3);
            }
        }
        out.push(CenterReport {
            x: *x,
            r,
            inf_s: best.0,
            argmin: best.1,
            s_over_r: best.0 / r,
            quad_error: best.2,
            evaluations: etas.len() + refine,
        });
    }
    let inf_s = out.iter().map(|c| c.inf_s).fold(f64::INFINITY, f64::min);
    Ok(StabilityReport {
        centers: out,
        inf_s,
        inf_s_over_r: inf_s / r,
        threshold: separation(D, &(1..D).collect::<Vec<_>>())? / m_hat,
        pass: inf_s >= 1.0,
        ideal_samples: etas.len() + refine,
        circle_points: 2 * n,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DriftReport {
    pub radii: Vec<f64>,
    /// `inf S / r` per radius.
    pub ratios: Vec<f64>,
    /// `1 / (M̂ (d-1))`.
    pub reference: f64,
}

/// `inf S(f, x, r, η) / r` over the samples as `r` grows.
pub fn drift_proxy<const D: usize, R: Rng + ?Sized>(
    f: impl Fn(&HypPoint) -> Result<SpdPoint<D>>,
    centers: &[HypPoint],
    radii: &[f64],
    etas: &[IdealPoint<D>],
    opts: &CertifyOptions,
    rng: &mut R,
) -> Result<DriftReport> {
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(domain("radii must be increasing"));
    }
    let mut ratios = Vec::with_capacity(radii.len());
    for &r in radii {
        ratios.push(certify(&f, centers, r, etas, opts, rng)?.inf_s_over_r);
    }
    Ok(DriftReport { radii: radii.to_vec(), ratios, reference: 1.0 / (opts.m_hat * (D - 1) as f64) })
}

#[cfg(test)]
mod tests;
