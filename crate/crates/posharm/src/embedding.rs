//! The map `f = p_d ∘ ξ³ ∘ s : ℍ² → Y_d` induced by a positive curve, with
//! sampled quasi-isometry constants and Morse-defect diagnostics.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::Rng;

use crate::curves::PositiveCurve;
use crate::error::domain;
use crate::flags::normal_form;
use crate::hyp2::{hyp_distance, polar_point, ExtReal, HypPoint, IdealTriple, Mobius};
use crate::linalg::Mat;
use crate::spd::{distance, vector_distance, weyl_cone_distance, SpdPoint};
use crate::{Error, Result};

/// How a point of `ℍ²` picks an ideal triple whose foot point stays nearby.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Section {
    /// `(x, x+y, ∞)`, the image of `(0, 1, ∞)` under the upper triangular
    /// element taking `i` to `z`.
    Standard,
    /// `(x-y, x, x+y)`, whose foot point is `z` itself.
    Symmetric,
}

impl Section {
    pub fn triple(&self, z: &HypPoint) -> IdealTriple {
        match self {
            Section::Standard => crate::hyp2::section(z),
            Section::Symmetric => IdealTriple {
                t: [ExtReal::Finite(z.x - z.y), ExtReal::Finite(z.x), ExtReal::Finite(z.x + z.y)],
                positive: true,
            },
        }
    }
}

#[derive(Clone, Debug)]
pub struct EmbeddingHandle<const D: usize> {
    curve: PositiveCurve<D>,
    section: Section,
    cache: BTreeMap<usize, SpdPoint<D>>,
}

impl<const D: usize> EmbeddingHandle<D> {
    pub fn new(curve: PositiveCurve<D>, section: Section) -> Self {
        Self { curve, section, cache: BTreeMap::new() }
    }

    pub fn curve(&self) -> &PositiveCurve<D> {
        &self.curve
    }

    pub fn section(&self) -> Section {
        self.section
    }

    /// `f(z)`: the projection of the image triple. Parameters outside the
    /// curve window are a range error.
    pub fn evaluate(&self, z: &HypPoint) -> Result<SpdPoint<D>> {
        let triple = self.section.triple(z);
        let (lo, hi) = self.curve.window();
        for t in &triple.t {
            if let ExtReal::Finite(t) = *t {
                if !(t >= lo && t <= hi) {
                    return Err(Error::Range(t));
                }
            }
        }
        match triple.t {
            [ExtReal::Finite(a), ExtReal::Finite(b), ExtReal::Infinity] => self.standard(a, b),
            t => {
                let flags = t.map(|s| self.curve.flag_at(s));
                let (g, _) = normal_form(&flags[0], &flags[1], &flags[2])?;
                let inv = g.try_inverse().ok_or_else(|| domain("normalizing matrix is singular"))?;
                SpdPoint::from_factor(&inv)
            }
        }
    }

    /// Triples `(ξ(a), ξ(b), σ_∞)` in closed form. With `u = N(a, b)` the
    /// normalizing element is `h·N(0, a)⁻¹` for the torus element `h` with
    /// `h_{i+1} = h_i u_{i,i+1}`, so both the factor and its inverse come out
    /// as products of unipotents and diagonals.
    fn standard(&self, a: f64, b: f64) -> Result<SpdPoint<D>> {
        let u = self.curve.between(a, b);
        let mut log_h = [0.0; D];
        for i in 1..D {
            let s = u.superdiagonal(i);
            if !(s > 0.0) {
                return Err(Error::NotTransverse { margin: s });
            }
            log_h[i] = log_h[i - 1] + s.ln();
        }
        let shift = log_h.iter().sum::<f64>() / D as f64;
        let n_a = self.curve.unipotent(a);
        let n_a_inv = self.curve.between(a, 0.0);
        let g = Mat::<D>::from_fn(|i, j| n_a.as_matrix()[(i, j)] * (shift - log_h[j]).exp());
        let g_inv = Mat::<D>::from_fn(|i, j| (log_h[i] - shift).exp() * n_a_inv.as_matrix()[(i, j)]);
        Ok(SpdPoint::from_factor_pair(g, g_inv))
    }

    /// Cached evaluation keyed by a vertex id.
    pub fn evaluate_vertex(&mut self, id: usize, z: &HypPoint) -> Result<SpdPoint<D>> {
        if let Some(p) = self.cache.get(&id) {
            return Ok(*p);
        }
        let p = self.evaluate(z)?;
        self.cache.insert(id, p);
        Ok(p)
    }

    pub fn clear_cache(&mut self) {
        self.cache.clear();
    }

    pub fn estimate_constants(&self, pairs: &[(HypPoint, HypPoint)]) -> Result<Constants> {
        estimate_constants(|z| self.evaluate(z), pairs)
    }

    pub fn morse_defect(&self, a: ExtReal, b: ExtReal, half_length: f64, samples: usize) -> Result<f64> {
        morse_defect(|z| self.evaluate(z), a, b, half_length, samples)
    }
}

/// Sampled estimates; not bounds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Constants {
    /// `sup d_Y(f(x), f(z)) / (d(x, z) + 1)`.
    pub l_hat: f64,
    /// `sup (d(x, z) - 1) / αᵢ(a)` over pairs and simple roots, with
    /// `a = d⃗/2` the Cartan projection of `f(x)⁻¹f(z)` in half-log units.
    pub m_hat: f64,
    pub pairs_used: usize,
    pub pairs_skipped: usize,
}

/// Pairs from the hyperbolic area measure on `B(center, radius)`, keeping
/// those at distance in `[0.1, 20]`.
pub fn sample_pairs<R: Rng + ?Sized>(
    rng: &mut R,
    center: &HypPoint,
    radius: f64,
    count: usize,
) -> Vec<(HypPoint, HypPoint)> {
    let point = |rng: &mut R| {
        let u: f64 = rng.random();
        let r = (1.0 + u * (radius.cosh() - 1.0)).acosh();
        let theta = rng.random::<f64>() * 2.0 * core::f64::consts::PI;
        polar_point(center, r, theta)
    };
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count && attempts < 100 * count.max(1) {
        attempts += 1;
        let (x, z) = (point(rng), point(rng));
        let d = hyp_distance(&x, &z);
        if (0.1..=20.0).contains(&d) {
            out.push((x, z));
        }
    }
    out
}

/// Pairs where `f` is undefined (outside the window) are skipped and counted.
pub fn estimate_constants<const D: usize>(
    f: impl Fn(&HypPoint) -> Result<SpdPoint<D>>,
    pairs: &[(HypPoint, HypPoint)],
) -> Result<Constants> {
    let mut c = Constants { l_hat: 0.0, m_hat: 0.0, pairs_used: 0, pairs_skipped: 0 };
    for (x, z) in pairs {
        let (fx, fz) = match (f(x), f(z)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(Error::Range(_)), _) | (_, Err(Error::Range(_))) => {
                c.pairs_skipped += 1;
                continue;
            }
            (Err(e), _) | (_, Err(e)) => return Err(e),
        };
        let dx = hyp_distance(x, z);
        c.l_hat = c.l_hat.max(distance(&fx, &fz) / (dx + 1.0));
        let v = vector_distance(&fx, &fz);
        for i in 1..D {
            let alpha = 0.5 * v.alpha(i);
            let ratio = if alpha > 0.0 {
                (dx - 1.0) / alpha
            } else if dx > 1.0 {
                f64::INFINITY
            } else {
                0.0
            };
            c.m_hat = c.m_hat.max(ratio);
        }
        c.pairs_used += 1;
    }
    Ok(c)
}

/// Largest distance from `f(γ(s))`, `|s| ≤ half_length`, to the Weyl cone at
/// `f(γ(-half_length))` through `f(γ(half_length))`, where `γ` is the unit
/// speed geodesic from `a` to `b`.
pub fn morse_defect<const D: usize>(
    f: impl Fn(&HypPoint) -> Result<SpdPoint<D>>,
    a: ExtReal,
    b: ExtReal,
    half_length: f64,
    samples: usize,
) -> Result<f64> {
    if a == b || !(half_length > 0.0) || samples < 2 {
        return Err(domain("need distinct endpoints, a positive length and two samples"));
    }
    let back = Mobius::to_zero_infinity(&a, &b).inverse();
    let gamma = |s: f64| back.apply(&HypPoint { x: 0.0, y: s.exp() });
    let start = f(&gamma(-half_length))?;
    let end = f(&gamma(half_length))?;
    let mut worst: f64 = 0.0;
    for k in 0..samples {
        let s = -half_length + 2.0 * half_length * k as f64 / (samples - 1) as f64;
        worst = worst.max(weyl_cone_distance(&f(&gamma(s))?, &start, &end)?);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests;
