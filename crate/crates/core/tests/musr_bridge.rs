//! Histogram bridge against the two-spin dynamics.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mutomo::dynamics::{HamiltonianSpec, PhysicalConstants, PropagatorSpec};
use mutomo::musr::{
    bloch_vector, estimate_tomogram, expected_histogram, simulate_events, true_reduced_tomogram, uniform_edges,
    DecayModel, DetectorGeometry, EstimationOptions, EvolvedPolarization, HistogramMetadata, HistogramSeries,
    MuonPolarization, SimulationConfig,
};
use mutomo::linalg::partial_trace;
use mutomo::two_spin::{reduced_tomogram, TwoSpinBasis};
use mutomo::{DensityMatrix, Direction, Exec, Spin, Subsystem};

fn random_evolution(rng: &mut ChaCha8Rng) -> (PropagatorSpec, DensityMatrix) {
    let a = rng.random_range(0.05..0.5);
    let b = Vector3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-5.0..5.0));
    let spec = if rng.random_bool(0.5) {
        HamiltonianSpec::isotropic(a, b)
    } else {
        let da = rng.random_range(-0.1..0.1);
        HamiltonianSpec::mu_star(a, da, Direction::random(rng), b)
    };
    let prop = PropagatorSpec::numeric(spec, PhysicalConstants::default()).unwrap();
    (prop, DensityMatrix::random(4, rng))
}

#[test]
fn evolved_polarization_matches_reduced_tomogram() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let basis = TwoSpinBasis::qubits();
    for _ in 0..20 {
        let (prop, rho0) = random_evolution(&mut rng);
        let prep = prop.prepare().unwrap();
        let pol = EvolvedPolarization::new(&prep, &rho0).unwrap();
        for _ in 0..5 {
            let t = rng.random_range(0.0..200.0);
            let rho = prep.evolve(&rho0, t).unwrap();
            let p = pol.polarization(t);
            let muon = partial_trace(rho.matrix(), basis.dims(), Subsystem::A).unwrap();
            assert!((p - bloch_vector(&muon).unwrap()).norm() < 1e-10);
            let n = Direction::random(&mut rng);
            let w = reduced_tomogram(&rho, &basis, &n).unwrap()[0];
            assert!((w - 0.5 * (1.0 + p.dot(&n.unit()))).abs() < 1e-10);
        }
    }
}

/// Noise-free counts from the expected histogram, scaled so rounding is
/// negligible, must be inverted to the true tomogram.
#[test]
fn estimator_inverts_expected_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let geometry = DetectorGeometry::six_axis(0.6, 1.0).unwrap();
    let model = DecayModel::default();
    let edges = uniform_edges(0.0, 40.0, 2.0).unwrap();
    let config = SimulationConfig::new(1 << 50, 0, edges.clone()).with_background(0.0);
    for _ in 0..20 {
        let (prop, rho0) = random_evolution(&mut rng);
        let pol = EvolvedPolarization::new(&prop.prepare().unwrap(), &rho0).unwrap();
        let expected = expected_histogram(&pol, &geometry, &model, &config).unwrap();
        let hist = HistogramSeries {
            bin_edges: edges.clone(),
            axes: geometry.detectors.iter().map(|d| d.axis).collect(),
            counts: expected.iter().map(|row| row.iter().map(|v| v.round() as u64).collect()).collect(),
            meta: HistogramMetadata {
                n_muons: config.n_muons,
                seed: 0,
                background_fraction: 0.0,
                asymmetry: model.asymmetry,
                lifetime_ns: model.lifetime_ns,
            },
        };
        let est = estimate_tomogram(&hist, &geometry, &model, &EstimationOptions::default()).unwrap();
        for ax in &est.axes {
            let truth = true_reduced_tomogram(&pol, &ax.axis, &edges, model.lifetime_ns).unwrap();
            for (b, w) in ax.bins.iter().zip(&truth) {
                assert!((b.w_plus - w).abs() < 1e-6, "{} vs {w}", b.w_plus);
                assert!((b.w_plus + b.w_minus - 1.0).abs() < 1e-12);
            }
        }
    }
}

/// Muonium with a weak contact coupling: the z asymmetry oscillates at ω₀
/// and the estimates are statistically consistent with it.
#[test]
fn muonium_oscillation_is_resolved() {
    let w0 = 0.05;
    let prop = PropagatorSpec::auto(HamiltonianSpec::hyperfine(w0, Spin::HALF), PhysicalConstants::default()).unwrap();
    let pol = EvolvedPolarization::new(&prop.prepare().unwrap(), &DensityMatrix::muonium_initial(2)).unwrap();
    let geometry = DetectorGeometry::pair(Direction::z(), 0.8, 1.0).unwrap();
    let model = DecayModel::default();
    let config = SimulationConfig::new(2_000_000, 7, uniform_edges(0.0, 3000.0, 10.0).unwrap());
    let hist = simulate_events(&pol, &geometry, &model, &config, Exec::default()).unwrap();
    let est = estimate_tomogram(&hist, &geometry, &model, &EstimationOptions::default()).unwrap();
    let ax = &est.axes[0];
    let truth = true_reduced_tomogram(&pol, &ax.axis, &hist.bin_edges, model.lifetime_ns).unwrap();
    let (mut chi2, mut n) = (0.0, 0usize);
    for (b, w) in ax.bins.iter().zip(&truth) {
        if !b.low_confidence {
            chi2 += ((b.w_plus - w) / b.sigma).powi(2);
            n += 1;
        }
    }
    let n = n as f64;
    assert!(n > 50.0);
    assert!((chi2 - n).abs() < 5.0 * (2.0 * n).sqrt(), "χ² {chi2} over {n} bins");
    // The contrast is visible: early bins swing between 3/4 and 1/2.
    let early: Vec<f64> = ax.bins.iter().take(13).map(|b| b.w_plus).collect();
    let (lo, hi) = early.iter().fold((1.0f64, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
    assert!(hi > 0.7 && lo < 0.56, "{lo} {hi}");
}
