use super::{distance, SpdPoint};
use crate::error::domain;
use crate::Result;

struct Sides {
    d: f64,
    d2: f64,
    e: f64,
    e2: f64,
    f: f64,
    f2: f64,
}

// The quadrilateral is the cycle q1 q3 q4 q2. Opposite sides are
// D = d13, D' = d24 and E = d12, E' = d34; the diagonals are F = d23, F' = d14.
fn sides<const D: usize>(q: &[SpdPoint<D>; 4]) -> Sides {
    Sides {
        d: distance(&q[0], &q[2]),
        d2: distance(&q[1], &q[3]),
        e: distance(&q[0], &q[1]),
        e2: distance(&q[2], &q[3]),
        f: distance(&q[1], &q[2]),
        f2: distance(&q[0], &q[3]),
    }
}

/// `(F F', D D' + E E')`; in a CAT(0) space the first never exceeds the second.
pub fn ptolemy_check<const D: usize>(q: &[SpdPoint<D>; 4]) -> (f64, f64) {
    let s = sides(q);
    (s.f * s.f2, s.d * s.d2 + s.e * s.e2)
}

/// `(F - D + F' - D', 2 E E' / D)`.
pub fn quad_cr_bound_check<const D: usize>(q: &[SpdPoint<D>; 4]) -> Result<(f64, f64)> {
    let s = sides(q);
    if !(s.d > 0.0) {
        return Err(domain("quadrilateral diagonal D vanishes"));
    }
    Ok((s.f - s.d + s.f2 - s.d2, 2.0 * s.e * s.e2 / s.d))
}
