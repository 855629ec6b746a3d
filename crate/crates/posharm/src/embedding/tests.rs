use super::*;
use crate::curves::{build_curve, PiecewiseMonotone};
use crate::flags::Unipotent;
use nalgebra::{Matrix2, Matrix3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn veronese<const D: usize>(t: f64) -> EmbeddingHandle<D> {
    let phis: Vec<PiecewiseMonotone> = (0..D - 1).map(|_| PiecewiseMonotone::identity(t).unwrap()).collect();
    EmbeddingHandle::new(build_curve(&phis, (-t, t)).unwrap(), Section::Standard)
}

fn wobbly_curve(t: f64) -> PositiveCurve<3> {
    let grid: Vec<f64> = [-t, -40.0, -8.0, -2.0, -0.5, 0.0, 0.4, 1.0, 1.7, 3.0, 9.0, 50.0, t].to_vec();
    let a = PiecewiseMonotone::sampled(|s| s + 0.3 * s.sin(), &grid).unwrap();
    let b = PiecewiseMonotone::sampled(|s| 1.3 * s + 0.2 * (2.0 * s).cos(), &grid).unwrap();
    build_curve(&[a, b], (-t, t)).unwrap()
}

fn close<const D: usize>(p: &SpdPoint<D>, m: &Mat<D>, tol: f64) -> bool {
    (p.matrix() - m).amax() < tol * m.amax().max(1.0)
}

#[test]
fn identity_at_i() {
    let i = HypPoint::I;
    assert!(close(&veronese::<2>(100.0).evaluate(&i).unwrap(), &Matrix2::identity(), 1e-14));
    assert!(close(&veronese::<3>(100.0).evaluate(&i).unwrap(), &Matrix3::identity(), 1e-14));
}

#[test]
fn d2_is_the_standard_upper_half_plane_model() {
    let e = veronese::<2>(1e4);
    for (x, y) in [(0.3, 2.0), (-5.0, 0.01), (40.0, 700.0)] {
        let p = e.evaluate(&HypPoint::new(x, y).unwrap()).unwrap();
        let want = Matrix2::new(y + x * x / y, x / y, x / y, 1.0 / y);
        assert!(close(&p, &want, 1e-12), "{:?}", p.matrix());
    }
    let a = HypPoint::new(0.2, 0.5).unwrap();
    let b = HypPoint::new(-3.0, 9.0).unwrap();
    let (fa, fb) = (e.evaluate(&a).unwrap(), e.evaluate(&b).unwrap());
    assert!((distance(&fa, &fb) - hyp_distance(&a, &b)).abs() < 1e-11);
}

#[test]
fn veronese_vertical_line_is_diagonal() {
    let e = veronese::<3>(1e4);
    for y in [1e-3, 0.5, 7.0, 2e3] {
        let p = e.evaluate(&HypPoint::new(0.0, y).unwrap()).unwrap();
        let want = Matrix3::from_diagonal(&nalgebra::Vector3::new(y * y, 1.0, 1.0 / (y * y)));
        assert!(close(&p, &want, 1e-12));
    }
}

/// The upper triangular subgroup acts through the irreducible representation
/// generated by `E₁₂ + E₂₃` and `diag(2, 0, -2)`.
fn rho(g: &Mobius) -> Matrix3<f64> {
    let a = g.a / g.det().sqrt();
    let b = g.b / g.det().sqrt();
    let n = *Unipotent::<3>::exp_superdiagonal(&[b / a, b / a]).as_matrix();
    Matrix3::from_diagonal(&nalgebra::Vector3::new(a * a, 1.0, 1.0 / (a * a))) * n
}

#[test]
fn veronese_equivariance_under_upper_triangular() {
    let e = veronese::<3>(1e4);
    let z = HypPoint::new(0.4, 1.3).unwrap();
    let fz = e.evaluate(&z).unwrap();
    for g in [Mobius::new(2.0, 1.0, 0.0, 0.5).unwrap(), Mobius::new(0.7, -3.0, 0.0, 1.0 / 0.7).unwrap()] {
        let lhs = e.evaluate(&g.apply(&z)).unwrap();
        let rhs = fz.act(&rho(&g)).unwrap();
        assert!(distance(&lhs, &rhs) < 1e-10);
    }
}

#[test]
fn out_of_window_is_range_error() {
    let e = veronese::<3>(10.0);
    assert!(matches!(e.evaluate(&HypPoint::new(0.0, 20.0).unwrap()), Err(Error::Range(_))));
}

#[test]
fn cache_matches_direct_evaluation() {
    let mut e = veronese::<3>(100.0);
    let z = HypPoint::new(1.0, 2.0).unwrap();
    let a = e.evaluate_vertex(7, &z).unwrap();
    let b = e.evaluate_vertex(7, &HypPoint::I).unwrap();
    assert_eq!(a.matrix(), b.matrix());
    assert_eq!(a.matrix(), e.evaluate(&z).unwrap().matrix());
}

#[test]
fn sections_differ_by_a_constant_for_veronese() {
    // Both sections are equivariant under the upper triangular group, which
    // acts transitively and isometrically on the target.
    let std = veronese::<3>(1e4);
    let sym = EmbeddingHandle::new(std.curve().clone(), Section::Symmetric);
    let d0 = distance(&std.evaluate(&HypPoint::I).unwrap(), &sym.evaluate(&HypPoint::I).unwrap());
    assert!(d0 > 0.0);
    for (x, y) in [(3.0, 0.2), (-10.0, 30.0), (0.5, 0.05)] {
        let z = HypPoint::new(x, y).unwrap();
        let d = distance(&std.evaluate(&z).unwrap(), &sym.evaluate(&z).unwrap());
        assert!((d - d0).abs() < 1e-8, "{d} vs {d0}");
    }
}

#[test]
fn constants_of_isometric_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pairs = sample_pairs(&mut rng, &HypPoint::I, 8.0, 400);
    assert_eq!(pairs.len(), 400);
    let c2 = veronese::<2>(1e4).estimate_constants(&pairs).unwrap();
    assert_eq!(c2.pairs_skipped, 0);
    assert!(c2.l_hat <= 1.0 && c2.l_hat > 0.85, "{c2:?}");
    assert!(c2.m_hat <= 1.0 && c2.m_hat > 0.85, "{c2:?}");
    let c3 = veronese::<3>(1e4).estimate_constants(&pairs).unwrap();
    assert!((c3.m_hat - 1.0).abs() < 0.05, "{c3:?}");
}

#[test]
fn constants_invariant_under_target_isometry() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let pairs = sample_pairs(&mut rng, &HypPoint::I, 4.0, 60);
    let e = EmbeddingHandle::new(wobbly_curve(1e3), Section::Standard);
    let h = Matrix3::new(1.0, 2.0, 0.0, -0.5, 1.0, 3.0, 0.2, 0.0, 1.0);
    let c = e.estimate_constants(&pairs).unwrap();
    let moved = estimate_constants(|z| e.evaluate(z)?.act(&h), &pairs).unwrap();
    assert!((c.l_hat - moved.l_hat).abs() < 1e-9);
    assert!((c.m_hat - moved.m_hat).abs() < 1e-9);
}

#[test]
fn morse_defect_examples() {
    let e = veronese::<3>(1e4);
    let flat = e.morse_defect(ExtReal::Finite(0.0), ExtReal::Infinity, 4.0, 17).unwrap();
    assert!(flat < 1e-6, "{flat}");
    let w = EmbeddingHandle::new(wobbly_curve(1e4), Section::Standard);
    let d = w.morse_defect(ExtReal::Finite(-1.0), ExtReal::Finite(2.0), 3.0, 13).unwrap();
    assert!(d.is_finite());
}
