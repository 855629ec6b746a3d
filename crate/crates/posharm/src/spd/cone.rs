#[cfg(not(feature = "std"))]
use num_traits::Float;

use alloc::vec;
use alloc::vec::Vec;

use super::{SpdPoint, KAPPA};
use crate::error::domain;
use crate::linalg::{self, Mat, Vector};
use crate::{Error, Result};

/// Projection onto `{x : x_0 ≥ x_1 ≥ …}` (pool adjacent violators). Sums are
/// preserved, so trace-free inputs stay trace free.
pub(crate) fn project_decreasing(x: &mut [f64]) {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(x.len());
    for &v in x.iter() {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (m2, n2) = blocks[blocks.len() - 1];
            let (m1, n1) = blocks[blocks.len() - 2];
            if m1 >= m2 {
                break;
            }
            blocks.pop();
            let n = n1 + n2;
            *blocks.last_mut().unwrap() = ((m1 * n1 as f64 + m2 * n2 as f64) / n as f64, n);
        }
    }
    let mut i = 0;
    for (m, n) in blocks {
        for _ in 0..n {
            x[i] = m;
            i += 1;
        }
    }
}

fn permutations_of(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations_of(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

/// `W_Θ`: permutations of `0..d` preserving the blocks of consecutive
/// indices joined by the simple roots outside `Θ`.
fn weyl_subgroup(d: usize, theta: &[usize]) -> Vec<Vec<usize>> {
    let mut blocks: Vec<Vec<usize>> = vec![vec![0]];
    for i in 1..d {
        if theta.contains(&i) {
            blocks.push(vec![i]);
        } else {
            blocks.last_mut().unwrap().push(i);
        }
    }
    let mut group = vec![(0..d).collect::<Vec<_>>()];
    for block in blocks {
        let perms = permutations_of(&block);
        let mut next = Vec::with_capacity(group.len() * perms.len());
        for w in &group {
            for p in &perms {
                let mut w2 = w.clone();
                for (k, &i) in block.iter().enumerate() {
                    w2[i] = p[k];
                }
                next.push(w2);
            }
        }
        group = next;
    }
    group
}

// Inputs are unit vectors or their projections, so anything this small is a
// projection onto the apex.
fn normalize(x: &mut [f64]) -> bool {
    let n = linalg::stable_norm(x);
    if n < 1e-12 {
        return false;
    }
    x.iter_mut().for_each(|v| *v /= n);
    true
}

/// `-cos` of the smallest angle between `W_Θ 𝔞⁺` and `-𝔞⁺` in `Y_d`.
///
/// For each `w` the largest cosine between the two cones is found by
/// alternating projections (each step does not decrease the cosine), started
/// from every pair of extreme rays.
pub fn separation(d: usize, theta: &[usize]) -> Result<f64> {
    if d < 2 {
        return Err(Error::Unsupported(d));
    }
    if theta.is_empty() || theta.iter().any(|&i| i == 0 || i >= d) {
        return Err(domain("theta must be a nonempty subset of 1..d-1"));
    }
    // Extreme rays of 𝔞⁺: fundamental coweights, trace removed.
    let rays: Vec<Vec<f64>> = (1..d)
        .map(|k| {
            let mut r: Vec<f64> = (0..d).map(|i| if i < k { 1.0 } else { 0.0 } - k as f64 / d as f64).collect();
            normalize(&mut r);
            r
        })
        .collect();
    let mut best = f64::NEG_INFINITY;
    for w in weyl_subgroup(d, theta) {
        // x ∈ w𝔞⁺ iff (x_{w(0)}, x_{w(1)}, …) is non-increasing.
        let project_w = |x: &mut Vec<f64>| {
            let mut a: Vec<f64> = w.iter().map(|&i| x[i]).collect();
            project_decreasing(&mut a);
            for (k, &i) in w.iter().enumerate() {
                x[i] = a[k];
            }
        };
        let project_neg = |y: &mut Vec<f64>| {
            y.iter_mut().for_each(|v| *v = -*v);
            project_decreasing(y);
            y.iter_mut().for_each(|v| *v = -*v);
        };
        for r in &rays {
            for s in &rays {
                let mut x: Vec<f64> = vec![0.0; d];
                for (k, &i) in w.iter().enumerate() {
                    x[i] = r[k];
                }
                let mut y: Vec<f64> = s.iter().map(|v| -v).collect();
                let mut cos = dot(&x, &y);
                for _ in 0..10_000 {
                    let mut y2 = x.clone();
                    project_neg(&mut y2);
                    if !normalize(&mut y2) {
                        break;
                    }
                    let mut x2 = y2.clone();
                    project_w(&mut x2);
                    if !normalize(&mut x2) {
                        break;
                    }
                    let c = dot(&x2, &y2);
                    x = x2;
                    y = y2;
                    let done = c - cos < 1e-14;
                    cos = cos.max(c);
                    if done {
                        break;
                    }
                }
                best = best.max(cos);
            }
        }
    }
    Ok(-best)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Distance from `p` to the Weyl cone `{F e^{v} Fᵀ : v ∈ 𝔞⁺}` with tip `base`
/// spanned towards `through`.
///
/// The function `v ↦ ½ d(p, c(v))²` is convex on the flat with gradient
/// `-κ² diag(log A_v)`, `A_v = e^{-v/2} p̃ e^{-v/2}` in the frame `F`; it is
/// minimized by projected gradient descent with Armijo backtracking from
/// several starts.
pub fn weyl_cone_distance<const D: usize>(p: &SpdPoint<D>, base: &SpdPoint<D>, through: &SpdPoint<D>) -> Result<f64> {
    let a = base.relative_factor(through);
    let (vals, vecs) = linalg::gram_eigen(&a);
    let mut order: [usize; D] = core::array::from_fn(|i| i);
    order.sort_by(|&i, &j| vals[j].total_cmp(&vals[i]));
    let lam = Vector::<D>::from_fn(|i, _| vals[order[i]]);
    let tol = 1e-9 * (1.0 + lam.amax());
    if (0..D - 1).any(|i| lam[i] - lam[i + 1] <= tol) {
        return Err(domain("cone direction is not regular"));
    }
    let v_sorted = Mat::<D>::from_fn(|i, j| vecs[(i, order[j])]);
    // p̃ = F⁻¹ p F⁻ᵀ, with factor Vᵀ g_base⁻¹ g_p.
    let pt = v_sorted.transpose() * base.factor_inverse() * p.factor();

    let objective = |v: &Vector<D>| -> (f64, Vector<D>) {
        let mut x = pt;
        for i in 0..D {
            let s = (-0.5 * v[i]).exp();
            for j in 0..D {
                x[(i, j)] *= s;
            }
        }
        let (ev, evec) = linalg::gram_eigen(&x);
        let logs = Vector::<D>::from_fn(|i, _| ev[i]);
        let f = 0.5 * KAPPA * KAPPA * logs.norm_squared();
        let grad = Vector::<D>::from_fn(|i, _| {
            let diag: f64 = (0..D).map(|k| evec[(i, k)] * evec[(i, k)] * logs[k]).sum();
            -KAPPA * KAPPA * diag
        });
        (f, grad)
    };
    let project = |v: &Vector<D>| -> Vector<D> {
        let mut a: [f64; D] = core::array::from_fn(|i| v[i]);
        let mean = a.iter().sum::<f64>() / D as f64;
        a.iter_mut().for_each(|x| *x -= mean);
        project_decreasing(&mut a);
        Vector::<D>::from_fn(|i, _| a[i])
    };

    let diag_logs = {
        let m = pt * pt.transpose();
        project(&Vector::<D>::from_fn(|i, _| m[(i, i)].ln()))
    };
    let starts = [
        Vector::<D>::zeros(),
        lam,
        lam * 0.25,
        lam * 0.5,
        lam * 2.0,
        diag_logs,
        (diag_logs + lam) * 0.5,
        project(&super::vector_distance(base, p).v),
    ];
    let mut best = f64::INFINITY;
    for start in starts {
        let mut v = project(&start);
        let (mut f, mut g) = objective(&v);
        for _ in 0..2000 {
            let mut step = 1.0 / (KAPPA * KAPPA);
            let mut moved = false;
            while step > 1e-12 {
                let trial = project(&(v - g * step));
                let (ft, gt) = objective(&trial);
                let dv = trial - v;
                if ft <= f + g.dot(&dv) * 1e-4 + 1e-15 * f.max(1.0) && dv.norm() > 0.0 {
                    let small = dv.norm() < 1e-11;
                    v = trial;
                    f = ft;
                    g = gt;
                    moved = !small;
                    break;
                }
                step *= 0.5;
            }
            if !moved {
                break;
            }
        }
        best = best.min(f);
    }
    Ok((2.0 * best.max(0.0)).sqrt())
}
