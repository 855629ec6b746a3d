//! The upper half-plane model of ℍ² (curvature −1) and its boundary ℝP¹.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{domain, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HypPoint {
    pub x: f64,
    pub y: f64,
}

impl HypPoint {
    pub const I: HypPoint = HypPoint { x: 0.0, y: 1.0 };

    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(y > 0.0) || !x.is_finite() || !y.is_finite() {
            return Err(domain("hyperbolic point needs finite x and y > 0"));
        }
        Ok(HypPoint { x, y })
    }

    pub fn z(&self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }

    fn from_z(z: Complex64) -> Self {
        HypPoint { x: z.re, y: z.im }
    }
}

pub fn hyp_distance(p: &HypPoint, q: &HypPoint) -> f64 {
    let dx = p.x - q.x;
    let dy = p.y - q.y;
    let chord = (dx * dx + dy * dy).sqrt();
    2.0 * (chord / (2.0 * (p.y * q.y).sqrt())).asinh()
}

/// A point of ℝP¹ = ℝ ∪ {∞}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    Infinity,
}

impl ExtReal {
    /// Homogeneous coordinates `(x : y)` with `t = x / y`.
    pub fn homogeneous(&self) -> (f64, f64) {
        match *self {
            ExtReal::Finite(t) => (t, 1.0),
            ExtReal::Infinity => (1.0, 0.0),
        }
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            ExtReal::Finite(t) => Some(t),
            ExtReal::Infinity => None,
        }
    }
}

impl From<f64> for ExtReal {
    fn from(t: f64) -> Self {
        ExtReal::Finite(t)
    }
}

fn bracket(a: &ExtReal, b: &ExtReal) -> f64 {
    let (xa, ya) = a.homogeneous();
    let (xb, yb) = b.homogeneous();
    xa * yb - xb * ya
}

/// Projective 2×2 matrix `[[a, b], [c, d]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mobius {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mobius {
    pub const IDENTITY: Mobius = Mobius { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let m = Mobius { a, b, c, d };
        if m.det() == 0.0 || !m.det().is_finite() {
            return Err(domain("singular Möbius matrix"));
        }
        Ok(m)
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    /// The upper-triangular, positive-diagonal element with `g·i = z`.
    pub fn upper_triangular(z: &HypPoint) -> Self {
        let s = z.y.sqrt();
        Mobius { a: s, b: z.x / s, c: 0.0, d: 1.0 / s }
    }

    pub fn compose(&self, o: &Mobius) -> Mobius {
        Mobius {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    pub fn inverse(&self) -> Mobius {
        Mobius { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    /// Isometric action on ℍ²; orientation-reversing elements act through
    /// `z ↦ (a z̄ + b)/(c z̄ + d)`.
    pub fn apply(&self, p: &HypPoint) -> HypPoint {
        let z = if self.det() > 0.0 { p.z() } else { p.z().conj() };
        let w = (z * self.a + self.b) / (z * self.c + self.d);
        HypPoint::from_z(w)
    }

    pub fn apply_ext(&self, t: &ExtReal) -> ExtReal {
        let (x, y) = t.homogeneous();
        let nx = self.a * x + self.b * y;
        let ny = self.c * x + self.d * y;
        if ny == 0.0 {
            ExtReal::Infinity
        } else {
            ExtReal::Finite(nx / ny)
        }
    }

    /// The orientation-preserving element sending `t1 ↦ 0` and `t3 ↦ ∞`.
    pub(crate) fn to_zero_infinity(t1: &ExtReal, t3: &ExtReal) -> Mobius {
        match (*t1, *t3) {
            (ExtReal::Finite(a), ExtReal::Infinity) => Mobius { a: 1.0, b: -a, c: 0.0, d: 1.0 },
            (ExtReal::Infinity, ExtReal::Finite(b)) => Mobius { a: 0.0, b: -1.0, c: 1.0, d: -b },
            (ExtReal::Finite(a), ExtReal::Finite(b)) => {
                if a > b {
                    Mobius { a: 1.0, b: -a, c: 1.0, d: -b }
                } else {
                    Mobius { a: 1.0, b: -a, c: -1.0, d: b }
                }
            }
            (ExtReal::Infinity, ExtReal::Infinity) => Mobius::IDENTITY,
        }
    }
}

/// Pairwise distinct triple of points in ℝP¹.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdealTriple {
    pub t: [ExtReal; 3],
    /// Whether `(t1, t2, t3)` is positively (counterclockwise) ordered.
    pub positive: bool,
}

impl IdealTriple {
    pub fn new(t1: ExtReal, t2: ExtReal, t3: ExtReal) -> Result<Self> {
        let orient = bracket(&t1, &t2) * bracket(&t2, &t3) * bracket(&t3, &t1);
        if orient == 0.0 {
            return Err(domain("ideal triple points must be pairwise distinct"));
        }
        Ok(IdealTriple { t: [t1, t2, t3], positive: orient > 0.0 })
    }
}

/// Cross ratio `(λ4−λ3)(λ2−λ1) / ((λ3−λ2)(λ1−λ4))`, normalized so that
/// `CR(x, 0, 1, ∞) = x`. Finite and nonzero for distinct points.
pub fn cross_ratio(t: &[ExtReal; 4]) -> Result<f64> {
    for i in 0..4 {
        for j in (i + 1)..4 {
            if bracket(&t[i], &t[j]) == 0.0 {
                return Err(domain("cross ratio needs pairwise distinct points"));
            }
        }
    }
    let num = bracket(&t[3], &t[2]) * bracket(&t[1], &t[0]);
    let den = bracket(&t[2], &t[1]) * bracket(&t[0], &t[3]);
    Ok(num / den)
}

/// Foot of the perpendicular from `t2` onto the geodesic `(t1, t3)`.
pub fn foot_point(t: &IdealTriple) -> HypPoint {
    let g = Mobius::to_zero_infinity(&t.t[0], &t.t[2]);
    let s = match g.apply_ext(&t.t[1]) {
        ExtReal::Finite(s) => s.abs(),
        ExtReal::Infinity => unreachable!("t2 is distinct from t3"),
    };
    g.inverse().apply(&HypPoint { x: 0.0, y: s })
}

/// `g_z·(0, 1, ∞)` for the upper-triangular `g_z` with `g_z·i = z`.
pub fn section(z: &HypPoint) -> IdealTriple {
    IdealTriple { t: [ExtReal::Finite(z.x), ExtReal::Finite(z.x + z.y), ExtReal::Infinity], positive: true }
}

/// The point at distance `r` from `x` in direction `theta`, measured from
/// the upward vertical.
pub fn polar_point(x: &HypPoint, r: f64, theta: f64) -> HypPoint {
    let w = Complex64::from_polar((r / 2.0).tanh(), theta);
    let one = Complex64::new(1.0, 0.0);
    let around_i = Complex64::i() * (one + w) / (one - w);
    Mobius::upper_triangular(x).apply(&HypPoint::from_z(around_i))
}

/// `n` equally spaced points on the geodesic circle of radius `r` about `x`.
/// With weights `1/n` they form a quadrature of the hitting measure of
/// `B(x, r)` started at its center.
pub fn circle_points(x: &HypPoint, r: f64, n: usize) -> Result<Vec<HypPoint>> {
    if !(r > 0.0) || n < 3 {
        return Err(domain("circle needs r > 0 and at least 3 points"));
    }
    Ok((0..n).map(|k| polar_point(x, r, 2.0 * PI * k as f64 / n as f64)).collect())
}

/// Closed form of `∫_a^b ds / sinh s`.
pub fn gamma_closed(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0) || b < a {
        return Err(domain("gamma integral needs 0 < a ≤ b"));
    }
    Ok((b / 2.0).tanh().ln() - (a / 2.0).tanh().ln())
}

/// `∫_a^b ds / sinh s` by double-exponential quadrature; the integrand has a
/// logarithmic singularity at 0, so `a` must be positive.
#[cfg(feature = "std")]
pub fn gamma_integral(a: f64, b: f64) -> Result<f64> {
    let exact = gamma_closed(a, b)?;
    if a == b {
        return Ok(0.0);
    }
    let out = quadrature::integrate(|s| 1.0 / s.sinh(), a, b, 1e-13 * exact.abs().max(1e-300));
    Ok(out.integral)
}

/// Lower bound on the exit probability through the near boundary piece, with
/// the decreasing Green's function `Γ` normalized by `Γ(a) − Γ(b) = ∫_a^b`.
pub fn exit_alpha(r: f64) -> Result<f64> {
    Ok(gamma_closed(r + 1.0, r + 2.0)? / gamma_closed(1.0, r + 2.0)?)
}
