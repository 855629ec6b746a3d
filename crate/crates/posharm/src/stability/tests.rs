use super::*;
use crate::curves::{build_curve, PiecewiseMonotone};
use crate::embedding::{EmbeddingHandle, Section};
use crate::hyp2::Mobius;
use crate::spd::{distance, random_point};
use nalgebra::{Matrix2, Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn identity_map(z: &HypPoint) -> Result<SpdPoint<2>> {
    let s = z.y.sqrt();
    SpdPoint::from_factor(&Matrix2::new(s, z.x / s, 0.0, 1.0 / s))
}

/// `ℍ² × {pt}` inside `Y₃`.
fn slice_map(z: &HypPoint) -> Result<SpdPoint<3>> {
    let s = z.y.sqrt();
    SpdPoint::from_factor(&Matrix3::new(s, z.x / s, 0.0, 0.0, 1.0 / s, 0.0, 0.0, 0.0, 1.0))
}

fn veronese3(t: f64) -> EmbeddingHandle<3> {
    let phis = [PiecewiseMonotone::identity(t).unwrap(), PiecewiseMonotone::identity(t).unwrap()];
    EmbeddingHandle::new(build_curve(&phis, (-t, t)).unwrap(), Section::Standard)
}

#[test]
fn identity_circle_average() {
    // Mean of a Busemann function over the radius-r circle in ℍ² is
    // 2 log cosh(r/2), since its Laplacian is 1 and M'(r) = area/length.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for eta in sample_ideal_points::<2, _>(&mut rng, 4).unwrap() {
        for r in [0.5, 2.0, 5.0] {
            let s = stability_integral(identity_map, &HypPoint::new(0.3, 1.7).unwrap(), r, &eta, 256).unwrap();
            let want = 2.0 * (r / 2.0).cosh().ln();
            assert!((s.value - want).abs() < 1e-9 + 10.0 * s.error, "{r}: {} vs {want}", s.value);
        }
    }
}

#[test]
fn constant_and_slice_maps_are_not_stable() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let y = random_point::<3, _>(&mut rng, 2.0);
    let eta = sample_ideal_points::<3, _>(&mut rng, 1).unwrap()[0];
    let s = stability_integral(|_| Ok(y), &HypPoint::I, 3.0, &eta, 64).unwrap();
    assert_eq!(s.value, 0.0);

    let flat = IdealPoint::from_direction(&Matrix3::identity(), &Vector3::new(1.0, 1.0, -2.0)).unwrap();
    let s = stability_integral(slice_map, &HypPoint::new(1.0, 2.0).unwrap(), 4.0, &flat, 64).unwrap();
    assert!(s.value.abs() < 1e-12);

    let mut etas = sample_ideal_points::<3, _>(&mut rng, 16).unwrap();
    etas.push(flat);
    let report = certify(slice_map, &[HypPoint::I], 2.0, &etas, &CertifyOptions::default(), &mut rng).unwrap();
    assert!(!report.pass);
    assert!(report.inf_s <= 1e-3, "{}", report.inf_s);
}

#[test]
fn identity_certificate_and_drift() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let etas = sample_ideal_points::<2, _>(&mut rng, 8).unwrap();
    let opts = CertifyOptions { n: 256, refine: 16, m_hat: 1.0 };
    let report = certify(identity_map, &[HypPoint::I], 2.0, &etas, &opts, &mut rng).unwrap();
    assert!((report.inf_s - 2.0 * 1f64.cosh().ln()).abs() < 1e-6);
    assert!((report.threshold - 1.0).abs() < 1e-9);
    let drift = drift_proxy(identity_map, &[HypPoint::I], &[2.0, 8.0, 16.0], &etas, &opts, &mut rng).unwrap();
    assert!(drift.ratios.windows(2).all(|w| w[1] > w[0]));
    assert!(drift.ratios[2] > 0.9);
}

#[test]
fn veronese_certificate_at_radius_eight() {
    let e = veronese3(1e4);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let etas = sample_ideal_points::<3, _>(&mut rng, 64).unwrap();
    let opts = CertifyOptions { n: 128, refine: 64, m_hat: 1.0 };
    let report = certify(|z| e.evaluate(z), &[HypPoint::I], 8.0, &etas, &opts, &mut rng).unwrap();
    assert!(report.pass, "{}", report.inf_s);
    assert!(report.inf_s_over_r > 0.3, "{}", report.inf_s_over_r);
}

#[test]
fn simultaneous_isometries_preserve_s() {
    // A rotation about i in the domain and an orthogonal change of frame in
    // the target, applied to (f, x, η).
    let e = veronese3(1e4);
    let f = |z: &HypPoint| e.evaluate(z);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let k = random_orthogonal::<3, _>(&mut rng);
    let (c, s) = (0.4f64.cos(), 0.4f64.sin());
    let g = Mobius::new(c, s, -s, c).unwrap();
    let g_inv = g.inverse();
    let moved = |z: &HypPoint| f(&g_inv.apply(z))?.act(&k);
    let eta = IdealPoint::from_direction(&random_orthogonal::<3, _>(&mut rng), &Vector3::new(1.0, 0.2, -1.2)).unwrap();
    let eta_moved = IdealPoint::from_direction(&(k * eta.frame()), eta.type_vec().as_vector()).unwrap();
    let a = stability_integral(f, &HypPoint::I, 1.5, &eta, 512).unwrap();
    let b = stability_integral(moved, &g.apply(&HypPoint::I), 1.5, &eta_moved, 512).unwrap();
    assert!((a.value - b.value).abs() < 1e-6 + a.error + b.error, "{} {}", a.value, b.value);
}

#[test]
fn coarse_perturbation_moves_s_by_at_most_twice() {
    let e = veronese3(1e4);
    let f = |z: &HypPoint| e.evaluate(z);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let eta = sample_ideal_points::<3, _>(&mut rng, 1).unwrap()[0];
    let bumps: Vec<SpdPoint<3>> = (0..64).map(|_| random_point(&mut rng, 0.2)).collect();
    // Moves f by a point-dependent isometry of displacement at most c.
    let bumped = |z: &HypPoint| {
        let k = ((z.x * 13.0).sin().abs() * 63.0) as usize;
        f(z)?.act(bumps[k].factor())
    };
    let mut c: f64 = 0.0;
    for p in crate::hyp2::circle_points(&HypPoint::I, 2.0, 128).unwrap().iter().chain([&HypPoint::I]) {
        c = c.max(distance(&f(p).unwrap(), &bumped(p).unwrap()));
    }
    let a = stability_integral(f, &HypPoint::I, 2.0, &eta, 64).unwrap();
    let b = stability_integral(bumped, &HypPoint::I, 2.0, &eta, 64).unwrap();
    assert!((a.value - b.value).abs() <= 2.0 * c + 1e-12);
}

#[test]
fn lattice_types_are_unit_and_ordered() {
    let types = type_lattice::<4>(50);
    assert_eq!(types.len(), 50);
    for u in &types {
        assert!(u.sum().abs() < 1e-12);
        assert!((u.norm() - 1.0).abs() < 1e-12);
        assert!(u[0] >= u[1] && u[1] >= u[2] && u[2] >= u[3]);
    }
}
