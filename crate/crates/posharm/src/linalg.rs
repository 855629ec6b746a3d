//! Dense kernels on stack matrices.
//!
//! The geometry is generic over a const dimension, and nalgebra's
//! decompositions need typenum-style bounds that do not propagate well
//! through generic code. The few kernels needed here are small, and the
//! Jacobi methods have the relative accuracy on graded matrices that the
//! far-from-origin points of `Y_d` need.

use nalgebra::{SMatrix, SVector};
#[cfg(not(feature = "std"))]
use num_traits::Float;

pub type Mat<const D: usize> = SMatrix<f64, D, D>;
pub type Vector<const D: usize> = SVector<f64, D>;

const MAX_SWEEPS: usize = 64;

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns unsorted eigenvalues and the orthogonal matrix of eigenvectors
/// (in columns).
pub fn sym_eigen<const D: usize>(m: &Mat<D>) -> (Vector<D>, Mat<D>) {
    let mut a = *m;
    let mut v = Mat::<D>::identity();
    let floor = f64::EPSILON * f64::EPSILON * frobenius(&a);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..D {
            for q in (p + 1)..D {
                let apq = a[(p, q)];
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                if apq.abs() <= floor || apq.abs() <= f64::EPSILON * (app * aqq).abs().sqrt() {
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..D {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(p, k)] = a[(k, p)];
                    a[(k, q)] = s * akp + c * akq;
                    a[(q, k)] = a[(k, q)];
                }
                a[(p, p)] = app - t * apq;
                a[(q, q)] = aqq + t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..D {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    (a.diagonal(), v)
}

/// `V f(Λ) Vᵀ` for a symmetric matrix.
pub fn sym_apply<const D: usize>(m: &Mat<D>, f: impl Fn(f64) -> f64) -> Mat<D> {
    let (vals, vecs) = sym_eigen(m);
    let mut scaled = vecs;
    for j in 0..D {
        let fj = f(vals[j]);
        for i in 0..D {
            scaled[(i, j)] *= fj;
        }
    }
    scaled * vecs.transpose()
}

pub fn sym_log<const D: usize>(m: &Mat<D>) -> Mat<D> {
    symmetrize(&sym_apply(m, f64::ln))
}

pub fn sym_exp<const D: usize>(m: &Mat<D>) -> Mat<D> {
    symmetrize(&sym_apply(m, f64::exp))
}

pub fn symmetrize<const D: usize>(m: &Mat<D>) -> Mat<D> {
    (m + m.transpose()) * 0.5
}

pub fn frobenius<const D: usize>(m: &Mat<D>) -> f64 {
    let mut scale = 0.0_f64;
    for x in m.iter() {
        scale = scale.max(x.abs());
    }
    if scale == 0.0 {
        return 0.0;
    }
    let mut s = 0.0;
    for x in m.iter() {
        let y = x / scale;
        s += y * y;
    }
    scale * s.sqrt()
}

/// Euclidean norm that neither overflows nor underflows for entries near the
/// ends of the exponent range.
pub fn stable_norm(x: &[f64]) -> f64 {
    let scale = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * x.iter().map(|v| (v / scale) * (v / scale)).sum::<f64>().sqrt()
}

fn column<const D: usize>(m: &Mat<D>, j: usize) -> [f64; D] {
    core::array::from_fn(|i| m[(i, j)])
}

/// Logarithms of the singular values of `x` by one-sided (Hestenes) Jacobi
/// on its columns. High relative accuracy for column-scaled well-conditioned
/// matrices, including scales close to the exponent limits.
pub fn log_singular_values<const D: usize>(x: &Mat<D>) -> [f64; D] {
    hestenes(x, false).0
}

/// Eigen-decomposition of `a aᵀ` without forming it: returns `2 log σᵢ` and
/// the orthogonal eigenvectors (columns), from one-sided Jacobi on `aᵀ`.
pub fn gram_eigen<const D: usize>(a: &Mat<D>) -> ([f64; D], Mat<D>) {
    let (logs, r) = hestenes(&a.transpose(), true);
    (core::array::from_fn(|i| 2.0 * logs[i]), r)
}

// Rotates the columns of `x` until they are orthogonal: x R = U Σ. The
// rotation R is accumulated on request.
fn hestenes<const D: usize>(x: &Mat<D>, accumulate: bool) -> ([f64; D], Mat<D>) {
    let mut a = *x;
    let mut r = Mat::<D>::identity();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..D {
            for q in (p + 1)..D {
                let cp = column(&a, p);
                let cq = column(&a, q);
                let np = stable_norm(&cp);
                let nq = stable_norm(&cq);
                if np == 0.0 || nq == 0.0 {
                    continue;
                }
                let mut cos = 0.0;
                for i in 0..D {
                    cos += (cp[i] / np) * (cq[i] / nq);
                }
                if cos.abs() <= 4.0 * f64::EPSILON {
                    continue;
                }
                rotated = true;
                let ratio = nq / np;
                let zeta = (ratio - 1.0 / ratio) / (2.0 * cos);
                let t = if !zeta.is_finite() || zeta.abs() > 1e150 {
                    if zeta.is_finite() {
                        0.5 / zeta
                    } else {
                        0.0
                    }
                } else {
                    zeta.signum() / (zeta.abs() + (zeta * zeta + 1.0).sqrt())
                };
                if t == 0.0 {
                    continue;
                }
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = c * t;
                for i in 0..D {
                    a[(i, p)] = c * cp[i] - s * cq[i];
                    a[(i, q)] = s * cp[i] + c * cq[i];
                }
                if accumulate {
                    for i in 0..D {
                        let (rp, rq) = (r[(i, p)], r[(i, q)]);
                        r[(i, p)] = c * rp - s * rq;
                        r[(i, q)] = s * rp + c * rq;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    (core::array::from_fn(|j| stable_norm(&column(&a, j)).ln()), r)
}

/// Sorted (non-increasing) log singular values of `diag(e^{s}) b`.
///
/// Hestenes rotations underflow once the row scales differ by more than
/// about `e^{700}`; beyond that the products `σ₁⋯σ_k` are read off from the
/// Frobenius norms of the compound matrices (a log-sum-exp over minors),
/// which is exact up to a relative error `e^{-(gap between scales)}`.
pub fn log_singular_values_row_scaled<const D: usize>(b: &Mat<D>, s: &[f64; D]) -> [f64; D] {
    let hi = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = s.iter().cloned().fold(f64::INFINITY, f64::min);
    let mid = 0.5 * (hi + lo);
    let mut out = if hi - lo < 600.0 { scaled_by_rotations(b, s, mid) } else { scaled_by_compounds(b, s) };
    out.sort_by(|x, y| y.total_cmp(x));
    out
}

fn scaled_by_rotations<const D: usize>(b: &Mat<D>, s: &[f64; D], mid: f64) -> [f64; D] {
    let mut x = b.transpose();
    for j in 0..D {
        let e = (s[j] - mid).exp();
        for i in 0..D {
            x[(i, j)] *= e;
        }
    }
    let l = log_singular_values(&x);
    core::array::from_fn(|i| l[i] + mid)
}

fn scaled_by_compounds<const D: usize>(b: &Mat<D>, s: &[f64; D]) -> [f64; D] {
    let mut prev = 0.0;
    let mut out = [0.0; D];
    let mut buf = alloc::vec![0.0; D * D];
    for k in 1..=D {
        let subsets: alloc::vec::Vec<u32> = (0u32..(1 << D)).filter(|m| m.count_ones() as usize == k).collect();
        let mut terms = alloc::vec::Vec::with_capacity(subsets.len() * subsets.len());
        for &rows in &subsets {
            let ri: alloc::vec::Vec<usize> = (0..D).filter(|i| rows & (1 << i) != 0).collect();
            let scale: f64 = ri.iter().map(|&i| s[i]).sum();
            for &cols in &subsets {
                let ci: alloc::vec::Vec<usize> = (0..D).filter(|j| cols & (1 << j) != 0).collect();
                for (r, &i) in ri.iter().enumerate() {
                    for (c, &j) in ci.iter().enumerate() {
                        buf[r * k + c] = b[(i, j)];
                    }
                }
                let minor = det_dyn(&mut buf[..k * k], k);
                terms.push(2.0 * (minor.abs().ln() + scale));
            }
        }
        let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let total = 0.5 * (top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln());
        out[k - 1] = total - prev;
        prev = total;
    }
    out
}

/// For `q = b bᵀ` returns `w` with `q = N diag(e^w) Nᵀ`, `N` unit upper
/// triangular. The squared pivots are the rows of `b` orthogonalized from
/// the last row upwards (Gram-Schmidt, reorthogonalized once).
pub fn iwasawa_log_diag<const D: usize>(b: &Mat<D>) -> Vector<D> {
    let mut basis = [[0.0; D]; D];
    let mut w = Vector::<D>::zeros();
    for (k, i) in (0..D).rev().enumerate() {
        let mut r: [f64; D] = core::array::from_fn(|j| b[(i, j)]);
        for _ in 0..2 {
            for e in basis.iter().take(k) {
                let dot: f64 = (0..D).map(|j| r[j] * e[j]).sum();
                for j in 0..D {
                    r[j] -= dot * e[j];
                }
            }
        }
        let n = stable_norm(&r);
        w[i] = 2.0 * n.ln();
        for j in 0..D {
            basis[k][j] = r[j] / n;
        }
    }
    w
}

/// Doolittle LU without pivoting: `m = L U` with `L` unit lower triangular.
/// Fails when a leading principal minor vanishes relative to `tol`.
pub fn lu_nopivot<const D: usize>(m: &Mat<D>, tol: f64) -> Option<(Mat<D>, Mat<D>)> {
    let scale = frobenius(m).max(f64::MIN_POSITIVE);
    let mut l = Mat::<D>::identity();
    let mut u = Mat::<D>::zeros();
    for i in 0..D {
        for j in i..D {
            let s: f64 = (0..i).map(|k| l[(i, k)] * u[(k, j)]).sum();
            u[(i, j)] = m[(i, j)] - s;
        }
        if u[(i, i)].abs() <= tol * scale {
            return None;
        }
        for j in (i + 1)..D {
            let s: f64 = (0..i).map(|k| l[(j, k)] * u[(k, i)]).sum();
            l[(j, i)] = (m[(j, i)] - s) / u[(i, i)];
        }
    }
    Some((l, u))
}

/// Antidiagonal permutation `e_i ↦ e_{D+1-i}`.
pub fn antidiag<const D: usize>() -> Mat<D> {
    Mat::<D>::from_fn(|i, j| if i + j + 1 == D { 1.0 } else { 0.0 })
}

/// Gram-Schmidt orthonormalization of the columns (reorthogonalized once).
/// Returns `None` for numerically dependent columns.
pub fn orthonormalize_columns<const D: usize>(m: &Mat<D>) -> Option<Mat<D>> {
    let mut q = *m;
    for j in 0..D {
        for _ in 0..2 {
            for k in 0..j {
                let dot: f64 = (0..D).map(|i| q[(i, j)] * q[(i, k)]).sum();
                for i in 0..D {
                    q[(i, j)] -= dot * q[(i, k)];
                }
            }
        }
        let n = stable_norm(&column(&q, j));
        if !(n > 1e-12 * stable_norm(&column(m, j))) {
            return None;
        }
        for i in 0..D {
            q[(i, j)] /= n;
        }
    }
    Some(q)
}

/// Sort a vector in non-increasing order.
pub fn sorted_desc<const D: usize>(v: &Vector<D>) -> Vector<D> {
    let mut a: [f64; D] = core::array::from_fn(|i| v[i]);
    a.sort_by(|x, y| y.total_cmp(x));
    Vector::<D>::from_fn(|i, _| a[i])
}

/// Determinant by partial pivoting.
pub fn det<const D: usize>(m: &Mat<D>) -> f64 {
    let mut flat: [[f64; D]; D] = core::array::from_fn(|i| core::array::from_fn(|j| m[(i, j)]));
    det_dyn(flat.as_flattened_mut(), D)
}

/// Determinant of a small dynamic-size block via partial pivoting.
pub fn det_dyn(m: &mut [f64], n: usize) -> f64 {
    let mut det = 1.0;
    for c in 0..n {
        let mut piv = c;
        for r in (c + 1)..n {
            if m[r * n + c].abs() > m[piv * n + c].abs() {
                piv = r;
            }
        }
        if m[piv * n + c] == 0.0 {
            return 0.0;
        }
        if piv != c {
            for k in 0..n {
                m.swap(c * n + k, piv * n + k);
            }
            det = -det;
        }
        let p = m[c * n + c];
        det *= p;
        for r in (c + 1)..n {
            let f = m[r * n + c] / p;
            if f != 0.0 {
                for k in c..n {
                    m[r * n + k] -= f * m[c * n + k];
                }
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix3;

    #[test]
    fn jacobi_reconstructs() {
        let m = Matrix3::new(4.0, 1.0, -2.0, 1.0, 3.0, 0.5, -2.0, 0.5, 5.0);
        let (vals, vecs) = sym_eigen(&m);
        let back = vecs * Mat::<3>::from_diagonal(&vals) * vecs.transpose();
        assert!((back - m).norm() < 1e-13);
        assert!((vecs.transpose() * vecs - Mat::<3>::identity()).norm() < 1e-14);
    }

    #[test]
    fn graded_singular_values_keep_relative_accuracy() {
        // diag(e^400, 1, e^-400) times a rotation: exact log singular values.
        let (s, c) = (0.6_f64, 0.8_f64);
        let rot = Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0);
        let scale = Matrix3::from_diagonal(&nalgebra::Vector3::new(400.0_f64.exp(), 1.0, (-400.0_f64).exp()));
        let mut logs = log_singular_values(&(rot * scale));
        logs.sort_by(|a, b| b.total_cmp(a));
        assert!((logs[0] - 400.0).abs() < 1e-12);
        assert!(logs[1].abs() < 1e-12);
        assert!((logs[2] + 400.0).abs() < 1e-12);
    }

    #[test]
    fn gram_eigen_of_graded_factor() {
        let (s, c) = (0.6_f64, 0.8_f64);
        let rot = Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0);
        let scale = Matrix3::from_diagonal(&nalgebra::Vector3::new(30.0_f64.exp(), 1.0, (-30.0_f64).exp()));
        let other = Matrix3::new(0.0, 0.0, 1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0);
        let (logs, v) = gram_eigen(&(rot * scale * other));
        for (j, &lj) in logs.iter().enumerate() {
            let col = v.column(j);
            let expect = if lj > 1.0 {
                60.0
            } else if lj < -1.0 {
                -60.0
            } else {
                0.0
            };
            assert!((lj - expect).abs() < 1e-12);
            let hit = (rot.transpose() * col).amax();
            assert!((hit - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn row_scaled_singular_values_agree_across_methods() {
        let b = Matrix3::new(1.0, 0.5, 0.2, 0.1, 1.0, 0.3, -0.2, 0.4, 1.0);
        let s = [290.0, 10.0, -295.0];
        let a = scaled_by_rotations(&b, &s, 0.0);
        let c = scaled_by_compounds(&b, &s);
        for i in 0..3 {
            assert!((a[i] - c[i]).abs() < 1e-9, "{a:?} {c:?}");
        }
        let far = log_singular_values_row_scaled(&b, &[500.0, 10.0, -500.0]);
        assert!(far.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn iwasawa_pivots_match_udu() {
        let n = Matrix3::new(1.0, 0.3, -0.7, 0.0, 1.0, 2.0, 0.0, 0.0, 1.0);
        let d = nalgebra::Vector3::new(0.5_f64, 2.0, 1.0);
        let q = n * Mat::<3>::from_diagonal(&d) * n.transpose();
        let b = q.cholesky().unwrap().l();
        let w = iwasawa_log_diag(&b);
        for i in 0..3 {
            assert!((w[i] - d[i].ln()).abs() < 1e-13);
        }
    }

    #[test]
    fn lu_round_trip() {
        let m = Matrix3::new(2.0, 1.0, 1.0, 4.0, -6.0, 0.0, -2.0, 7.0, 2.0);
        let (l, u) = lu_nopivot(&m, 1e-14).unwrap();
        assert!((l * u - m).norm() < 1e-13);
        assert!(lu_nopivot(&Matrix3::new(0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0), 1e-14).is_none());
    }

    #[test]
    fn dyn_det() {
        let mut m = [2.0, 1.0, 1.0, 4.0, -6.0, 0.0, -2.0, 7.0, 2.0];
        assert!((det_dyn(&mut m, 3) - (-16.0)).abs() < 1e-12);
    }
}
