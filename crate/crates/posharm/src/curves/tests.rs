use super::*;
use crate::flags::{normalize_triple, transverse};
use crate::hyp2::Mobius;
use nalgebra::Matrix3;
use proptest::prelude::*;

const T: f64 = 32.0;

fn veronese<const D: usize>() -> PositiveCurve<D> {
    let phis: Vec<PiecewiseMonotone> = (0..D - 1).map(|_| PiecewiseMonotone::identity(T).unwrap()).collect();
    build_curve(&phis, (-T, T)).unwrap()
}

/// Increasing, normalized, piecewise linear with uneven slopes.
fn wobbly(seed: u64) -> PiecewiseMonotone {
    let mut grid: Vec<f64> = (-16..=16).map(|k| k as f64 * 2.0).collect();
    grid.extend([0.5, 1.0, 1.5]);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let a = 1.0 + (seed % 7) as f64 * 0.3;
    PiecewiseMonotone::sampled(move |t| t + 0.4 * (a * t).sin() / a + 0.05 * t * t.abs(), &grid).unwrap()
}

#[test]
fn piecewise_monotone_validation() {
    assert!(PiecewiseMonotone::new(vec![0.0, 1.0], vec![0.0, 1.0]).is_ok());
    assert!(PiecewiseMonotone::new(vec![0.0, 1.0, 0.5], vec![0.0, 1.0, 2.0]).is_err());
    assert!(PiecewiseMonotone::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 1.0]).is_err());
    assert!(PiecewiseMonotone::new(vec![0.0, 2.0], vec![0.0, 1.0]).is_err());
    let p = PiecewiseMonotone::new(vec![-1.0, 0.0, 1.0], vec![-3.0, 0.0, 1.0]).unwrap();
    assert_eq!(p.eval(-2.0), -6.0);
    assert_eq!(p.eval(3.0), 3.0);
}

#[test]
fn veronese_entries() {
    let c = veronese::<4>();
    for t in [-3.0, -0.5, 0.7, 2.0, 11.0] {
        let n = c.unipotent(t);
        let mut fact = 1.0;
        for j in 0..4 {
            if j > 0 {
                fact *= j as f64;
            }
            for i in 0..4 - j {
                let want = t.powi(j as i32) / fact;
                assert!((n.as_matrix()[(i, i + j)] - want).abs() < 1e-12 * (1.0 + want.abs()));
            }
        }
    }
}

#[test]
fn single_interval_is_one_exponential() {
    let phis = [PiecewiseMonotone::identity(2.0).unwrap(), PiecewiseMonotone::identity(2.0).unwrap()];
    let c: PositiveCurve<3> = build_curve(&phis, (-2.0, 2.0)).unwrap();
    let t = -0.75;
    let n = c.from_start(t).unwrap();
    let e = Unipotent::<3>::exp_superdiagonal(&[t + 2.0, t + 2.0]);
    assert!((n.as_matrix() - e.as_matrix()).amax() < 1e-14);
    assert!(c.from_start(2.5).is_err());
    let f = c.eval_flag(-2.0).unwrap();
    assert!((f.basis() - Flag::<3>::sigma0().basis()).amax() < 1e-15);
}

#[test]
fn superdiagonal_reproduces_phi() {
    let phi = wobbly(3);
    let c: PositiveCurve<2> = build_curve(core::slice::from_ref(&phi), (-T, T)).unwrap();
    for t in [-31.0, -5.3, 0.2, 0.9, 7.7, 30.0] {
        let n = c.from_start(t).unwrap();
        assert!((n.superdiagonal(1) - (phi.eval(t) - phi.eval(-T))).abs() < 1e-12);
    }
    let phis = [wobbly(1), wobbly(2), wobbly(4)];
    let c: PositiveCurve<4> = build_curve(&phis, (-T, T)).unwrap();
    for t in [-20.0, 0.3, 15.0] {
        let n = c.from_start(t).unwrap();
        for (i, p) in phis.iter().enumerate() {
            assert!((n.superdiagonal(i + 1) - (p.eval(t) - p.eval(-T))).abs() < 1e-12);
        }
    }
}

#[test]
fn second_superdiagonal_is_iterated_integral() {
    // n_{13}(t) = ∫_{t₀}^{t} (φ₁(s) - φ₁(t₀)) dφ₂(s); midpoint rule on a fine
    // grid (exact up to O(h²) on each linear piece).
    let phis = [wobbly(1), wobbly(5)];
    let (lo, t) = (-6.0, 5.0);
    let c: PositiveCurve<3> = build_curve(&phis, (lo, 8.0)).unwrap();
    let n = c.from_start(t).unwrap();
    let steps = 400_000;
    let h = (t - lo) / steps as f64;
    let mut sum = 0.0;
    for k in 0..steps {
        let s = lo + (k as f64 + 0.5) * h;
        let d2 = phis[1].eval(s + 0.5 * h) - phis[1].eval(s - 0.5 * h);
        sum += (phis[0].eval(s) - phis[0].eval(lo)) * d2;
    }
    assert!((n.as_matrix()[(0, 2)] - sum).abs() < 1e-6, "{} vs {sum}", n.as_matrix()[(0, 2)]);
}

#[test]
fn flow_property_and_positivity() {
    let c: PositiveCurve<4> = build_curve(&[wobbly(1), wobbly(2), wobbly(3)], (-T, T)).unwrap();
    for (a, b, d) in [(-10.0, 0.5, 3.0), (-40.0, -31.0, 50.0), (0.0, 1.0, 1.5)] {
        let lhs = c.between(a, d);
        let rhs = c.between(a, b).mul(&c.between(b, d));
        let scale = lhs.as_matrix().amax();
        assert!((lhs.as_matrix() - rhs.as_matrix()).amax() < 1e-12 * scale.max(1.0));
        let (ok, report) = flags::totally_positive(&c.between(a, b)).unwrap();
        assert!(ok && report.margin > 0.0);
    }
    let n_a = c.from_start(-5.0).unwrap();
    let n_b = c.from_start(6.0).unwrap();
    let rel = n_a.inverse().mul(&n_b);
    assert!((rel.as_matrix() - c.between(-5.0, 6.0).as_matrix()).amax() < 1e-6 * rel.as_matrix().amax());
}

#[test]
fn sampled_triples_are_positive() {
    let c: PositiveCurve<3> = build_curve(&[wobbly(2), wobbly(6)], (-T, T)).unwrap();
    let ts = [-45.0, -12.0, -1.0, 0.0, 0.3, 1.0, 4.0, 20.0, 60.0];
    for i in 0..ts.len() {
        for j in i + 1..ts.len() {
            for k in j + 1..ts.len() {
                let f = |t: f64| c.flag_at(ExtReal::Finite(t));
                assert!(normalize_triple(&f(ts[i]), &f(ts[j]), &f(ts[k])).is_ok());
                assert!(normalize_triple(&f(ts[j]), &f(ts[k]), &c.flag_at(ExtReal::Infinity)).is_ok());
            }
        }
    }
    // Near ∞ the flags approach σ_∞'s opposite behaviour continuously: the
    // transversality margin to σ₀ stays bounded away from zero.
    assert!(transverse(&c.flag_at(ExtReal::Finite(1e3)), &Flag::sigma0()).0);
}

#[test]
fn shrinking_perturbations_stay_positive() {
    // φ_ε = (1-ε) id + ε ψ converges to the identity; every member and the
    // limit are positive on sampled triples.
    for eps in [0.5, 0.1, 0.01, 0.0] {
        let psi = wobbly(4);
        let grid = psi.breakpoints().to_vec();
        let phi = PiecewiseMonotone::sampled(|t| (1.0 - eps) * t + eps * psi.eval(t), &grid).unwrap();
        let c: PositiveCurve<3> = build_curve(&[phi.clone(), phi], (-T, T)).unwrap();
        let f = |t: f64| c.flag_at(ExtReal::Finite(t));
        assert!(normalize_triple(&f(-3.0), &f(0.5), &f(9.0)).is_ok());
    }
}

#[test]
fn qs_constant_examples() {
    let grid = QsGrid { x_min: -4.0, x_max: 4.0, nx: 81, t_min: 0.05, t_max: 4.0, nt: 40 };
    let id = PiecewiseMonotone::identity(T).unwrap();
    assert!((qs_constant(&id, &grid) - 1.0).abs() < 1e-12);
    let fine: Vec<f64> = (-800..=800).map(|k| k as f64 * 0.01).collect();
    let affine = PiecewiseMonotone::sampled(|t| 3.0 * t + 2.0, &fine).unwrap();
    assert!((qs_constant(&affine, &grid) - 1.0).abs() < 1e-9);
    let square = PiecewiseMonotone::sampled(|t| t * t.abs(), &fine).unwrap();
    // x = t gives (4t² - t²)/t² = 3 exactly on the grid points x = t.
    let grid = QsGrid { x_min: 1.0, x_max: 1.0, nx: 1, t_min: 1.0, t_max: 1.0, nt: 1 };
    assert!(qs_constant(&square, &grid) >= 3.0 - 1e-9);
}

#[test]
fn curve_qs_constant_examples() {
    let grid = QsGrid { x_min: -3.0, x_max: 3.0, nx: 7, t_min: 0.1, t_max: 3.0, nt: 6 };
    let moves = [Mobius::new(1.0, 1.0, -0.2, 1.0).unwrap(), Mobius::new(2.0, -1.0, 0.3, 0.8).unwrap()];
    let (k, used, _) = curve_qs_constant(&veronese::<3>(), &grid, &moves);
    assert!(used > 0);
    assert!((k - 1.0).abs() < 1e-6, "{k}");
    // d = 2: CR₁ is the classical cross ratio, so the constant is that of φ₁.
    let phi = wobbly(3);
    let c: PositiveCurve<2> = build_curve(core::slice::from_ref(&phi), (-T, T)).unwrap();
    let (k2, _, skipped) = curve_qs_constant(&c, &grid, &[]);
    assert_eq!(skipped, 0);
    assert!((k2 - qs_constant(&phi, &grid)).abs() < 1e-9);
}

#[test]
fn nontransverse_counts() {
    let c = veronese::<3>();
    let mut generic = Matrix3::zeros();
    generic[(0, 0)] = 0.3;
    generic[(1, 0)] = -1.1;
    generic[(2, 0)] = 0.7;
    let (count, _) = c.count_nontransverse(&generic, 1, 2001).unwrap();
    assert!(count <= 2, "{count}");
    // Tangency: the line of the curve point at t* = 1.3 (first column of n(t*)J).
    let t_star = 1.3;
    let b = c.from_start(t_star).unwrap().as_matrix() * antidiag::<3>();
    let (count, at) = c.count_nontransverse(&b, 1, 2001).unwrap();
    assert!(count >= 1);
    assert!(at.iter().any(|t| (t - t_star).abs() < 1e-4), "{at:?}");
    let (count, _) = c.count_nontransverse(&Matrix3::identity(), 1, 2001).unwrap();
    assert_eq!(count, 0);
    let (count, _) = c.count_nontransverse(&Matrix3::identity(), 2, 2001).unwrap();
    assert_eq!(count, 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn prop_increments_totally_positive(a in -40.0f64..40.0, len in 0.01f64..30.0, seed in 0u64..20) {
        let c: PositiveCurve<3> = build_curve(&[wobbly(seed), wobbly(seed + 1)], (-T, T)).unwrap();
        let (ok, report) = flags::totally_positive(&c.between(a, a + len)).unwrap();
        prop_assert!(ok && report.margin > 0.0);
    }
}
