//! End to end on a curve that is positive and quasisymmetric but not the
//! Veronese curve: curve, embedding, harmonic representative, certificate.

use posharm::curves::{build_curve, curve_qs_constant, PiecewiseMonotone, QsGrid};
use posharm::embedding::{sample_pairs, EmbeddingHandle, Section};
use posharm::harmonic::{check_energy_monotone, diagnostics, exhaust_with, SolverOptions};
use posharm::hyp2::{hyp_distance, HypPoint};
use posharm::spd::{distance, SpdPoint};
use posharm::stability::{drift_proxy, sample_ideal_points, CertifyOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const T: f64 = 1e4;

fn bent() -> EmbeddingHandle<3> {
    let mut grid: Vec<f64> = (-50..=50).map(|k| k as f64 * 0.5).collect();
    grid.extend([-T, T]);
    grid.sort_by(f64::total_cmp);
    let wobble = PiecewiseMonotone::sampled(|t| t + 0.3 * t.sin(), &grid).unwrap();
    let stretch = PiecewiseMonotone::new(vec![-T, 0.0, 1.0, T], vec![-2.0 * T, 0.0, 1.0, 0.5 * T]).unwrap();
    EmbeddingHandle::new(build_curve(&[wobble, stretch], (-T, T)).unwrap(), Section::Standard)
}

#[test]
fn curve_is_quasisymmetric_and_embedding_is_coarse_lipschitz() {
    let e = bent();
    let grid = QsGrid { x_min: -8.0, x_max: 8.0, nx: 12, t_min: 1e-2, t_max: 8.0, nt: 12 };
    let (k, used, _) = curve_qs_constant(e.curve(), &grid, &[]);
    assert!(used > 100 && k.is_finite() && k < 10.0, "{k} from {used}");

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let fit = sample_pairs(&mut rng, &HypPoint::I, 3.0, 300);
    let c = e.estimate_constants(&fit).unwrap();
    // Fresh pairs respect the fitted Lipschitz constant with a small margin.
    for (x, z) in sample_pairs(&mut rng, &HypPoint::I, 3.0, 300) {
        let dy = distance(&e.evaluate(&x).unwrap(), &e.evaluate(&z).unwrap());
        assert!(dy <= 1.05 * c.l_hat * (hyp_distance(&x, &z) + 1.0), "{dy} vs L̂ {}", c.l_hat);
    }
}

#[test]
fn harmonic_representative_and_certificate() {
    let e = bent();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut energies_ok = true;
    let reports = exhaust_with(&e, &HypPoint::I, &[1.5, 3.0], 0.25, 4, &SolverOptions::default(), |mesh, f, sol| {
        energies_ok &= check_energy_monotone(&sol.energies).is_ok();
        let diag = diagnostics(&sol.map, mesh, f, &SpdPoint::identity(), &[(0, mesh.len() - 1), (1, 7)]);
        assert!(diag.subharmonic_min >= -1e-6, "{diag:?}");
        assert_eq!(diag.quad_violations, 0);
        Ok(())
    })
    .unwrap();
    assert!(energies_ok);
    assert!(reports.iter().all(|r| r.interior_sup.is_finite()));

    let etas = sample_ideal_points::<3, _>(&mut rng, 32).unwrap();
    let opts = CertifyOptions { n: 64, refine: 32, m_hat: 1.0 };
    let drift = drift_proxy(|z| e.evaluate(z), &[HypPoint::I], &[4.0, 8.0], &etas, &opts, &mut rng).unwrap();
    assert!(drift.ratios[1] > 0.0, "{:?}", drift.ratios);
    assert!(drift.ratios[1] >= drift.ratios[0], "{:?}", drift.ratios);
}
