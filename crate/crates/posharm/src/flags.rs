//! Full flags of `ℝ^d`, total positivity and the normal forms of positive
//! triples and quadruples.
//!
//! A flag is stored as a basis whose first `k` columns span its
//! `k`-dimensional subspace. `σ₀` takes the basis `e_d, …, e_1`, `σ_∞` the
//! basis `e_1, …, e_d`, and `n·σ₀` has basis `n J` with `J` the antidiagonal.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::domain;
use crate::linalg::{antidiag, det, det_dyn, lu_nopivot, orthonormalize_columns, Mat};
use crate::spd::{CartanVector, IdealPoint, SpdPoint};
use crate::{Error, Result};

const TRANSVERSE_TOL: f64 = 1e-10;
const TP_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug)]
pub struct Flag<const D: usize> {
    basis: Mat<D>,
}

impl<const D: usize> Flag<D> {
    /// Canonical representative: Gram-Schmidt with positive pivots.
    pub fn new(basis: &Mat<D>) -> Result<Self> {
        let mut b = *basis;
        for j in 0..D {
            let n = b.column(j).norm();
            if !(n > 0.0) || !n.is_finite() {
                return Err(domain("flag basis has a zero column"));
            }
            b.column_mut(j).unscale_mut(n);
        }
        let q = orthonormalize_columns(&b).ok_or_else(|| domain("flag basis is singular"))?;
        if !(det(&b).abs() > 1e-12) {
            return Err(domain("flag basis is singular"));
        }
        Ok(Self { basis: q })
    }

    pub fn sigma0() -> Self {
        Self { basis: antidiag::<D>() }
    }

    pub fn sigma_inf() -> Self {
        Self { basis: Mat::identity() }
    }

    /// `n·σ₀`.
    pub fn from_unipotent(n: &Unipotent<D>) -> Self {
        Self::new(&(n.as_matrix() * antidiag::<D>())).expect("unipotent translates of σ₀ are flags")
    }

    pub fn basis(&self) -> &Mat<D> {
        &self.basis
    }

    pub fn act(&self, g: &Mat<D>) -> Result<Self> {
        Self::new(&(g * self.basis))
    }

    /// The boundary point with this flag as attracting flag and type `u`.
    pub fn ideal_point(&self, u: &CartanVector<D>) -> Result<IdealPoint<D>> {
        IdealPoint::from_direction(&self.basis, u.as_vector())
    }
}

/// The half-sum of the positive roots, `(d-1, d-3, …, 1-d)/2`, scaled to
/// unit length.
pub fn rho<const D: usize>() -> CartanVector<D> {
    let v = crate::linalg::Vector::<D>::from_fn(|i, _| (D as f64 - 1.0) / 2.0 - i as f64);
    let u = CartanVector::project(&v);
    CartanVector::new(u.as_vector() / u.norm()).expect("ρ lies in the chamber")
}

fn block_det<const D: usize>(cols: impl Iterator<Item = [f64; D]>) -> f64 {
    let mut m = Mat::<D>::zeros();
    for (j, c) in cols.enumerate() {
        for i in 0..D {
            m[(i, j)] = c[i];
        }
    }
    det(&m)
}

fn col<const D: usize>(m: &Mat<D>, j: usize) -> [f64; D] {
    core::array::from_fn(|i| m[(i, j)])
}

/// Transversality of two flags with its margin, the smallest
/// `|det[F_{1..k} | G_{1..d-k}]|` over `k` on orthonormal representatives.
pub fn transverse<const D: usize>(f: &Flag<D>, g: &Flag<D>) -> (bool, f64) {
    let mut margin = f64::INFINITY;
    for k in 1..D {
        let cols = (0..k).map(|j| col(&f.basis, j)).chain((0..D - k).map(|j| col(&g.basis, j)));
        margin = margin.min(block_det::<D>(cols).abs());
    }
    (margin > TRANSVERSE_TOL, margin)
}

/// Unit upper triangular matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Unipotent<const D: usize> {
    n: Mat<D>,
}

impl<const D: usize> Unipotent<D> {
    pub fn new(n: Mat<D>) -> Result<Self> {
        for i in 0..D {
            if n[(i, i)] != 1.0 || (0..i).any(|j| n[(i, j)] != 0.0) {
                return Err(domain("matrix is not unit upper triangular"));
            }
        }
        Ok(Self { n })
    }

    /// Cleans rounding below the diagonal and on it.
    pub(crate) fn from_raw(mut n: Mat<D>) -> Self {
        for i in 0..D {
            n[(i, i)] = 1.0;
            for j in 0..i {
                n[(i, j)] = 0.0;
            }
        }
        Self { n }
    }

    pub fn identity() -> Self {
        Self { n: Mat::identity() }
    }

    /// `exp(X)` for strictly upper triangular `X`; the series terminates.
    pub fn exp_nilpotent(x: &Mat<D>) -> Self {
        let mut term = Mat::<D>::identity();
        let mut sum = Mat::<D>::identity();
        for k in 1..D {
            term = term * x / k as f64;
            sum += term;
        }
        Self::from_raw(sum)
    }

    /// `exp(Σ cᵢ E_{i,i+1})`.
    pub fn exp_superdiagonal(c: &[f64]) -> Self {
        assert_eq!(c.len(), D - 1, "one coefficient per simple root");
        let x = Mat::<D>::from_fn(|i, j| if j == i + 1 { c[i] } else { 0.0 });
        Self::exp_nilpotent(&x)
    }

    pub fn as_matrix(&self) -> &Mat<D> {
        &self.n
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::from_raw(self.n * other.n)
    }

    /// Exact back substitution.
    pub fn inverse(&self) -> Self {
        let mut inv = Mat::<D>::identity();
        for j in 0..D {
            for i in (0..j).rev() {
                let s: f64 = ((i + 1)..=j).map(|k| self.n[(i, k)] * inv[(k, j)]).sum();
                inv[(i, j)] = -s;
            }
        }
        Self { n: inv }
    }

    /// `n_{i,i+1}`, `1 ≤ i < D`.
    pub fn superdiagonal(&self, i: usize) -> f64 {
        self.n[(i - 1, i)]
    }
}

/// The smallest minor that is not forced to vanish by the unipotent shape,
/// with its (zero-based) rows and columns.
#[derive(Clone, Debug, PartialEq)]
pub struct MinorReport {
    pub margin: f64,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

impl MinorReport {
    pub fn into_error(self) -> Error {
        Error::PositivityViolation { rows: self.rows, cols: self.cols, value: self.margin }
    }
}

/// Whether every minor of `n` that can be positive is positive. A minor
/// with rows `i₁<…<i_k` and columns `j₁<…<j_k` is not identically zero on
/// unipotents iff `i_r ≤ j_r` for all `r`; all of them are enumerated.
pub fn totally_positive<const D: usize>(n: &Unipotent<D>) -> Result<(bool, MinorReport)> {
    if D > 6 {
        return Err(Error::Unsupported(D));
    }
    // Conjugating by a positive diagonal scales every minor by a positive
    // factor. Balancing the superdiagonal to ones keeps the elimination well
    // conditioned for steps with very unequal increments.
    let mut scale = [1.0; 6];
    if (1..D).all(|i| n.n[(i - 1, i)] > 0.0) {
        for i in 1..D {
            scale[i] = scale[i - 1] * n.n[(i - 1, i)];
        }
    }
    let mut worst = MinorReport { margin: f64::INFINITY, rows: Vec::new(), cols: Vec::new() };
    let mut positive = true;
    let mut buf = [0.0; 36];
    for rows in 1u32..(1 << D) {
        let ri: Vec<usize> = (0..D).filter(|i| rows & (1 << i) != 0).collect();
        let k = ri.len();
        for cols in 1u32..(1 << D) {
            if cols.count_ones() as usize != k {
                continue;
            }
            let ci: Vec<usize> = (0..D).filter(|j| cols & (1 << j) != 0).collect();
            if ri.iter().zip(&ci).any(|(i, j)| i > j) {
                continue;
            }
            // Rounding in the elimination is bounded by the Hadamard product.
            let mut hadamard = 1.0;
            let mut unscale = 1.0;
            for (r, &i) in ri.iter().enumerate() {
                let mut row = 0.0;
                for (c, &j) in ci.iter().enumerate() {
                    let b = n.n[(i, j)] * scale[i] / scale[j];
                    buf[r * k + c] = b;
                    row += b * b;
                }
                hadamard *= row.sqrt();
                unscale *= scale[ci[r]] / scale[i];
            }
            let balanced = det_dyn(&mut buf[..k * k], k);
            if balanced <= TP_TOL * hadamard {
                positive = false;
            }
            let m = balanced * unscale;
            if m < worst.margin {
                worst = MinorReport { margin: m, rows: ri.clone(), cols: ci };
            }
        }
    }
    Ok((positive, worst))
}

/// Line `f3^{(k)} ∩ f1^{(d-k+1)}`: the vector of `span(A)` orthogonal to the
/// last `k-1` (orthonormal) columns of `f1`, by a generalized cross product.
fn intersection_line<const D: usize>(f3: &Flag<D>, f1: &Flag<D>, k: usize) -> [f64; D] {
    // N = Cᵀ A, (k-1) × k.
    let c0 = D - k + 1;
    let mut nmat = Vec::with_capacity((k - 1) * k);
    for r in 0..(k - 1) {
        for j in 0..k {
            let dot: f64 = (0..D).map(|i| f1.basis[(i, c0 + r)] * f3.basis[(i, j)]).sum();
            nmat.push(dot);
        }
    }
    let mut x = [0.0; D];
    let mut buf = Vec::with_capacity((k - 1) * (k - 1));
    for (j, xj) in x.iter_mut().enumerate().take(k) {
        buf.clear();
        for r in 0..(k - 1) {
            for c in 0..k {
                if c != j {
                    buf.push(nmat[r * k + c]);
                }
            }
        }
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        *xj = sign * if k == 1 { 1.0 } else { det_dyn(&mut buf, k - 1) };
    }
    let v: [f64; D] = core::array::from_fn(|i| (0..k).map(|j| f3.basis[(i, j)] * x[j]).sum());
    let n = crate::linalg::stable_norm(&v);
    core::array::from_fn(|i| v[i] / n)
}

/// `g₀` with `g₀·f1 = σ₀`, `g₀·f3 = σ_∞`.
fn opposite_pair_frame<const D: usize>(f1: &Flag<D>, f3: &Flag<D>) -> Result<Mat<D>> {
    let (ok, margin) = transverse(f1, f3);
    if !ok {
        return Err(Error::NotTransverse { margin });
    }
    let mut v = Mat::<D>::zeros();
    for k in 1..=D {
        let line = intersection_line(f3, f1, k);
        for i in 0..D {
            v[(i, k - 1)] = line[i];
        }
    }
    v.try_inverse().ok_or(Error::NotTransverse { margin })
}

/// The unipotent `u` with `u·σ₀ = f`, for `f` transverse to `σ_∞`. With
/// `M = (basis of f) J = u L` (upper times lower), `J M J = (J u J)(J L J)` is
/// an ordinary LU factorization.
pub(crate) fn unipotent_of<const D: usize>(basis: &Mat<D>) -> Result<Unipotent<D>> {
    let j = antidiag::<D>();
    let m = basis * j;
    let (l, _) = lu_nopivot(&(j * m * j), 1e-12).ok_or(Error::NotTransverse { margin: 0.0 })?;
    Ok(Unipotent::from_raw(j * l * j))
}

/// Projective scaling to `|det| = 1`.
fn unit_det<const D: usize>(g: &Mat<D>) -> Mat<D> {
    let d = det(g).abs();
    g * d.powf(-1.0 / D as f64)
}

/// `(g, n)` with `g·(f1, f2, f3) = (σ₀, n·σ₀, σ_∞)`, `n` unipotent with unit
/// superdiagonal and `|det g| = 1`, without testing positivity of `n`.
pub fn normal_form<const D: usize>(f1: &Flag<D>, f2: &Flag<D>, f3: &Flag<D>) -> Result<(Mat<D>, Unipotent<D>)> {
    for (a, b) in [(f1, f2), (f2, f3)] {
        let (ok, margin) = transverse(a, b);
        if !ok {
            return Err(Error::NotTransverse { margin });
        }
    }
    let g0 = opposite_pair_frame(f1, f3)?;
    let u = unipotent_of(&(g0 * f2.basis))?;
    // Torus element h with (h u h⁻¹)_{i,i+1} = 1: h_{i+1} = h_i u_{i,i+1}.
    let mut h = [1.0; D];
    for i in 1..D {
        let s = u.n[(i - 1, i)];
        if s == 0.0 || !s.is_finite() {
            return Err(Error::NotTransverse { margin: 0.0 });
        }
        h[i] = h[i - 1] * s;
    }
    let n = Unipotent::from_raw(Mat::<D>::from_fn(|i, j| u.n[(i, j)] * h[i] / h[j]));
    let g = Mat::<D>::from_fn(|i, j| h[i] * g0[(i, j)]);
    Ok((unit_det(&g), n))
}

/// Normal form of a positive triple: errors carry the violating minor.
pub fn normalize_triple<const D: usize>(f1: &Flag<D>, f2: &Flag<D>, f3: &Flag<D>) -> Result<(Mat<D>, Unipotent<D>)> {
    let (g, n) = normal_form(f1, f2, f3)?;
    let (ok, report) = totally_positive(&n)?;
    if !ok {
        return Err(report.into_error());
    }
    Ok((g, n))
}

/// `g⁻¹·o` for the normalizing `g` of a positive triple.
pub fn project_pd<const D: usize>(f1: &Flag<D>, f2: &Flag<D>, f3: &Flag<D>) -> Result<SpdPoint<D>> {
    let (g, _) = normalize_triple(f1, f2, f3)?;
    let inv = g.try_inverse().ok_or_else(|| domain("normalizing matrix is singular"))?;
    SpdPoint::from_factor(&inv)
}

/// A quadruple in the standard position `(m·σ₀, σ₀, n·σ₀, σ_∞)`.
#[derive(Clone, Copy, Debug)]
pub struct StandardQuadruple<const D: usize> {
    pub m: Unipotent<D>,
    pub n: Unipotent<D>,
}

/// Standard quadruple with `n` and `m⁻¹` totally positive.
#[derive(Clone, Copy, Debug)]
pub struct PositiveQuadruple<const D: usize> {
    m: Unipotent<D>,
    n: Unipotent<D>,
}

impl<const D: usize> PositiveQuadruple<D> {
    pub fn new(m: Unipotent<D>, n: Unipotent<D>) -> Result<Self> {
        let (ok, report) = totally_positive(&n)?;
        if !ok {
            return Err(report.into_error());
        }
        let (ok, report) = totally_positive(&m.inverse())?;
        if !ok {
            return Err(report.into_error());
        }
        Ok(Self { m, n })
    }

    pub fn m(&self) -> &Unipotent<D> {
        &self.m
    }

    pub fn n(&self) -> &Unipotent<D> {
        &self.n
    }
}

impl<const D: usize> TryFrom<StandardQuadruple<D>> for PositiveQuadruple<D> {
    type Error = Error;
    fn try_from(q: StandardQuadruple<D>) -> Result<Self> {
        Self::new(q.m, q.n)
    }
}

/// Brings `(f1, f2, f3, f4)` to standard position through the normal form
/// of `(f2, f3, f4)`.
pub fn standard_position<const D: usize>(f: &[Flag<D>; 4]) -> Result<StandardQuadruple<D>> {
    let (g, n) = normal_form(&f[1], &f[2], &f[3])?;
    let (ok, margin) = transverse(&f[0], &f[3]);
    if !ok {
        return Err(Error::NotTransverse { margin });
    }
    let m = unipotent_of(&(g * f[0].basis))?;
    Ok(StandardQuadruple { m, n })
}

/// Positivity of a dihedrally ordered quadruple: `n` and `m⁻¹` totally
/// positive in standard position. The witness is the worst minor.
pub fn quadruple_positive<const D: usize>(f: &[Flag<D>; 4]) -> Result<(bool, StandardQuadruple<D>, MinorReport)> {
    let q = standard_position(f)?;
    let (pn, rn) = totally_positive(&q.n)?;
    let (pm, rm) = totally_positive(&q.m.inverse())?;
    let witness = if rn.margin <= rm.margin { rn } else { rm };
    Ok((pn && pm, q, witness))
}

/// `CR_i = m_{i,i+1} / n_{i,i+1}`, `1 ≤ i < D`.
pub fn cross_ratio_i<const D: usize>(q: &PositiveQuadruple<D>, i: usize) -> Result<f64> {
    if i == 0 || i >= D {
        return Err(domain("cross ratio index out of range"));
    }
    let n = q.n.superdiagonal(i);
    if n == 0.0 {
        return Err(domain("degenerate quadruple"));
    }
    Ok(q.m.superdiagonal(i) / n)
}

/// `cr_i = log(-CR_i)`.
pub fn cr_i<const D: usize>(q: &PositiveQuadruple<D>, i: usize) -> Result<f64> {
    let c = cross_ratio_i(q, i)?;
    if !(c < 0.0) {
        return Err(domain("cross ratio is not negative"));
    }
    Ok((-c).ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spd::{busemann, distance, random_point, random_unit_tangent, vector_distance};
    use nalgebra::{Matrix2, Matrix3};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_matrix<const D: usize>(r: &mut ChaCha8Rng) -> Mat<D> {
        Mat::<D>::from_fn(|_, _| StandardNormal.sample(r))
    }

    fn same_flag<const D: usize>(a: &Flag<D>, b: &Flag<D>) -> bool {
        (a.basis - b.basis).amax() < 1e-9
    }

    #[test]
    fn transversality_examples() {
        assert!(transverse(&Flag::<3>::sigma0(), &Flag::sigma_inf()).0);
        assert!(!transverse(&Flag::<3>::sigma0(), &Flag::sigma0()).0);
        let n = Unipotent::<4>::exp_superdiagonal(&[1.0, 0.5, 2.0]);
        let (ok, margin) = transverse(&Flag::sigma_inf(), &Flag::from_unipotent(&n));
        assert!(ok && margin > 0.0);
    }

    #[test]
    fn total_positivity_examples() {
        let n = Unipotent::<2>::new(Matrix2::new(1.0, 1.0, 0.0, 1.0)).unwrap();
        assert!(totally_positive(&n).unwrap().0);
        let e = Unipotent::<3>::exp_superdiagonal(&[1.0, 1.0]);
        assert_eq!(*e.as_matrix(), Matrix3::new(1.0, 1.0, 0.5, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0));
        let (ok, report) = totally_positive(&e).unwrap();
        assert!(ok);
        assert!((report.margin - 0.5).abs() < 1e-15);
        let bad = Unipotent::<3>::new(Matrix3::new(1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0)).unwrap();
        let (ok, report) = totally_positive(&bad).unwrap();
        assert!(!ok);
        assert_eq!(report.margin, 0.0);
        assert!(Unipotent::<3>::new(Matrix3::identity() * 2.0).is_err());

        // The full determinant is 1 against a Hadamard bound near 2e12, so an
        // unbalanced test would call this step degenerate.
        let (ok, report) = totally_positive(&Unipotent::<3>::exp_superdiagonal(&[1e4, 2e4])).unwrap();
        assert!(ok);
        assert_eq!(report.margin, 1.0);
    }

    #[test]
    fn normalized_triples() {
        let n = Unipotent::<4>::exp_superdiagonal(&[1.0, 1.0, 1.0]);
        let (g, m) = normalize_triple(&Flag::sigma0(), &Flag::from_unipotent(&n), &Flag::sigma_inf()).unwrap();
        assert!((m.as_matrix() - n.as_matrix()).amax() < 1e-12);
        let g = g / g[(0, 0)];
        assert!((g - Mat::<4>::identity()).amax() < 1e-12);
        // Torus conjugates normalize to the same n.
        let h = Mat::<4>::from_diagonal(&crate::linalg::Vector::<4>::new(2.0, 0.5, 3.0, 0.25));
        let hn = Unipotent::from_raw(h * n.as_matrix() * h.try_inverse().unwrap());
        let (_, m) = normalize_triple(&Flag::sigma0(), &Flag::from_unipotent(&hn), &Flag::sigma_inf()).unwrap();
        assert!((m.as_matrix() - n.as_matrix()).amax() < 1e-12);
    }

    #[test]
    fn d2_triple_zero_t_infinity() {
        // The line (t : 1) is n·σ₀ for n₁₂ = t.
        let t = 3.5;
        let f2 = Flag::new(&Matrix2::new(t, 0.0, 1.0, 1.0)).unwrap();
        let (g, n) = normalize_triple(&Flag::sigma0(), &f2, &Flag::sigma_inf()).unwrap();
        assert!((n.superdiagonal(1) - 1.0).abs() < 1e-14);
        let g = g / g[(0, 0)].abs() * (1.0 / t).sqrt();
        assert!((g.abs() - Matrix2::new(1.0 / t.sqrt(), 0.0, 0.0, t.sqrt())).amax() < 1e-12);
        // With the foot-point convention (0, t, ∞) projects to i t.
        let p = project_pd(&Flag::sigma0(), &f2, &Flag::sigma_inf()).unwrap();
        assert!((p.matrix() - Matrix2::new(t, 0.0, 0.0, 1.0 / t)).amax() < 1e-12);
    }

    #[test]
    fn non_positive_triple_reports_minor() {
        let bad = Unipotent::<3>::new(Matrix3::new(1.0, 1.0, 2.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0)).unwrap();
        let err = normalize_triple(&Flag::sigma0(), &Flag::from_unipotent(&bad), &Flag::sigma_inf()).unwrap_err();
        match err {
            Error::PositivityViolation { rows, cols, value } => {
                assert_eq!((rows, cols), (vec![0, 1], vec![1, 2]));
                assert!((value + 1.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            normalize_triple(&Flag::<3>::sigma0(), &Flag::sigma0(), &Flag::sigma_inf()),
            Err(Error::NotTransverse { .. })
        ));
    }

    #[test]
    fn d2_cross_ratio_is_classical() {
        // (a, 0, t, ∞) with a < 0 < t.
        let (a, t) = (-1.7, 2.3);
        let m = Unipotent::<2>::new(Matrix2::new(1.0, a, 0.0, 1.0)).unwrap();
        let n = Unipotent::<2>::new(Matrix2::new(1.0, t, 0.0, 1.0)).unwrap();
        let q = PositiveQuadruple::new(m, n).unwrap();
        let ext = |x: f64| crate::hyp2::ExtReal::Finite(x);
        let classical = crate::hyp2::cross_ratio(&[ext(a), ext(0.0), ext(t), crate::hyp2::ExtReal::Infinity]).unwrap();
        assert!((cross_ratio_i(&q, 1).unwrap() - a / t).abs() < 1e-15);
        assert!((cross_ratio_i(&q, 1).unwrap() - classical).abs() < 1e-12);
    }

    #[test]
    fn symmetric_quadruple() {
        let n = Unipotent::<3>::exp_superdiagonal(&[1.0, 1.0]);
        let m = Unipotent::<3>::exp_superdiagonal(&[-1.0, -1.0]);
        let q = PositiveQuadruple::new(m, n).unwrap();
        for i in 1..3 {
            assert!((cross_ratio_i(&q, i).unwrap() + 1.0).abs() < 1e-15);
            assert!(cr_i(&q, i).unwrap().abs() < 1e-15);
        }
    }

    fn standard_quadruple<const D: usize>(a: &[f64], b: &[f64]) -> [Flag<D>; 4] {
        let m = Unipotent::<D>::exp_superdiagonal(a);
        let n = Unipotent::<D>::exp_superdiagonal(b);
        [Flag::from_unipotent(&m), Flag::sigma0(), Flag::from_unipotent(&n), Flag::sigma_inf()]
    }

    #[test]
    fn quadruple_invariance() {
        let mut r = ChaCha8Rng::seed_from_u64(3);
        let f = standard_quadruple::<3>(&[-0.7, -1.3], &[0.4, 2.0]);
        let (ok, q, _) = quadruple_positive(&f).unwrap();
        assert!(ok);
        let q = PositiveQuadruple::try_from(q).unwrap();
        let g = random_matrix::<3>(&mut r);
        let moved: [Flag<3>; 4] = core::array::from_fn(|k| f[k].act(&g).unwrap());
        let (ok2, q2, _) = quadruple_positive(&moved).unwrap();
        assert!(ok2);
        let q2 = PositiveQuadruple::try_from(q2).unwrap();
        for i in 1..3 {
            let (c1, c2) = (cross_ratio_i(&q, i).unwrap(), cross_ratio_i(&q2, i).unwrap());
            assert!(c1 < 0.0 && (c1 - c2).abs() < 1e-9);
        }
        // A violating quadruple: m⁻¹ fails on its top-right 2x2 minor.
        let m = Unipotent::<3>::new(Matrix3::new(1.0, -1.0, -0.5, 0.0, 1.0, -1.0, 0.0, 0.0, 1.0)).unwrap();
        let n = Unipotent::<3>::exp_superdiagonal(&[1.0, 1.0]);
        let f = [Flag::from_unipotent(&m), Flag::sigma0(), Flag::from_unipotent(&n), Flag::sigma_inf()];
        let (ok, _, witness) = quadruple_positive(&f).unwrap();
        assert!(!ok && witness.margin <= 0.0);
    }

    #[test]
    fn cross_ratio_reads_flat_displacement() {
        // Both projections lie in the diagonal flat; α_i of half the flat
        // displacement is log(n'_{i,i+1} / n_{i,i+1}).
        let n = Unipotent::<3>::exp_superdiagonal(&[0.8, 2.5]);
        let n2 = Unipotent::<3>::exp_superdiagonal(&[3.0, 0.4]);
        let p1 = project_pd(&Flag::sigma0(), &Flag::from_unipotent(&n), &Flag::sigma_inf()).unwrap();
        let p2 = project_pd(&Flag::sigma0(), &Flag::from_unipotent(&n2), &Flag::sigma_inf()).unwrap();
        let d1 = p1.matrix().diagonal().map(f64::ln);
        let d2 = p2.matrix().diagonal().map(f64::ln);
        let delta = (d2 - d1) * 0.5;
        for i in 1..3 {
            let ratio = (n2.superdiagonal(i) / n.superdiagonal(i)).ln();
            let root = delta[i - 1] - delta[i];
            assert!((root - ratio).abs() < 1e-9, "{root} {ratio}");
        }
    }

    #[test]
    fn properness_of_positive_triple_busemann_sum() {
        let n = Unipotent::<3>::exp_superdiagonal(&[1.0, 1.0]);
        let flags = [Flag::sigma0(), Flag::from_unipotent(&n), Flag::sigma_inf()];
        let etas: Vec<IdealPoint<3>> = flags.iter().map(|f| f.ideal_point(&rho::<3>()).unwrap()).collect();
        let s = |p: &SpdPoint<3>| etas.iter().map(|e| busemann(e, p)).sum::<f64>();
        let mut r = ChaCha8Rng::seed_from_u64(4);
        let o = project_pd(&flags[0], &flags[1], &flags[2]).unwrap();
        for _ in 0..20 {
            let x = random_unit_tangent::<3, _>(&mut r);
            let vals: Vec<f64> = (0..=20).map(|k| s(&o.exp_frame(&(x * (0.5 * k as f64))))).collect();
            for w in vals[4..].windows(2) {
                assert!(w[1] > w[0], "{vals:?}");
            }
            assert!(vals[20] > vals[4] + 1.0);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn prop_tp_closed_under_products(a in proptest::collection::vec(0.05f64..3.0, 3), b in proptest::collection::vec(0.05f64..3.0, 3)) {
            let x = Unipotent::<4>::exp_superdiagonal(&a);
            let y = Unipotent::<4>::exp_superdiagonal(&b);
            let (ok, rep) = totally_positive(&x.mul(&y)).unwrap();
            prop_assert!(ok && rep.margin > 0.0);
        }

        #[test]
        fn prop_normal_form_is_projectively_unique(seed in any::<u64>(), c in proptest::collection::vec(0.2f64..3.0, 2)) {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            let n = Unipotent::<3>::exp_superdiagonal(&c);
            let f = [Flag::sigma0(), Flag::from_unipotent(&n), Flag::sigma_inf()];
            let g = random_matrix::<3>(&mut r);
            let (_, m1) = normalize_triple(&f[0], &f[1], &f[2]).unwrap();
            let moved: Vec<Flag<3>> = f.iter().map(|x| x.act(&g).unwrap()).collect();
            let (_, m2) = normalize_triple(&moved[0], &moved[1], &moved[2]).unwrap();
            prop_assert!((m1.as_matrix() - m2.as_matrix()).amax() < 1e-9);
            let p = project_pd(&f[0], &f[1], &f[2]).unwrap();
            let q = project_pd(&moved[0], &moved[1], &moved[2]).unwrap();
            prop_assert!(distance(&p.act(&g).unwrap(), &q) < 1e-9);
            prop_assert!(same_flag(&moved[0], &f[0].act(&g).unwrap()));
        }

        #[test]
        fn prop_projection_lies_in_flat(seed in any::<u64>()) {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            let c: Vec<f64> = (0..3)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut r);
                    z.exp()
                })
                .collect();
            let n = Unipotent::<4>::exp_superdiagonal(&c);
            let p = project_pd(&Flag::sigma0(), &Flag::from_unipotent(&n), &Flag::sigma_inf()).unwrap();
            let m = p.matrix();
            let off = (m - Mat::<4>::from_diagonal(&m.diagonal())).amax() / m.amax();
            prop_assert!(off < 1e-12);
            let _ = vector_distance(&p, &random_point::<4, _>(&mut r, 1.0));
        }
    }
}
