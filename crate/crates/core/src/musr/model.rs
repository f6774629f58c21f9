//! Decay physics, detectors and polarization sources.

use nalgebra::{Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::dynamics::PreparedPropagator;
use crate::error::{Error, Result};
use crate::linalg::{kron, pauli, ComplexMatrix, C64};
use crate::spin::Direction;
use crate::state::DensityMatrix;

/// Muon mean lifetime in ns.
pub const MUON_LIFETIME_NS: f64 = 2197.0;

/// Energy-averaged positron asymmetry.
pub const AVERAGE_ASYMMETRY: f64 = 1.0 / 3.0;

/// Slack allowed on probabilities recovered from Γ.
pub const PROBABILITY_SLACK: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Species {
    MuPlus,
    MuMinus,
}

impl Species {
    /// +1 for μ⁺ (positron along the spin), −1 for μ⁻.
    pub fn sign(self) -> f64 {
        match self {
            Species::MuPlus => 1.0,
            Species::MuMinus => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayModel {
    pub asymmetry: f64,
    pub lifetime_ns: f64,
    pub species: Species,
}

impl Default for DecayModel {
    fn default() -> Self {
        DecayModel {
            asymmetry: AVERAGE_ASYMMETRY,
            lifetime_ns: MUON_LIFETIME_NS,
            species: Species::MuPlus,
        }
    }
}

impl DecayModel {
    /// `asymmetry` in [0, 1]; zero is accepted so an isotropic emitter can be
    /// simulated, but it cannot be inverted into a tomogram.
    pub fn new(asymmetry: f64, lifetime_ns: f64, species: Species) -> Result<Self> {
        let m = DecayModel {
            asymmetry,
            lifetime_ns,
            species,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.asymmetry) {
            return Err(Error::OutOfRange(format!("asymmetry {} outside [0, 1]", self.asymmetry)));
        }
        if !(self.lifetime_ns > 0.0) || !self.lifetime_ns.is_finite() {
            return Err(Error::OutOfRange(format!("lifetime {} ns", self.lifetime_ns)));
        }
        Ok(())
    }

    pub fn with_species(mut self, species: Species) -> Self {
        self.species = species;
        self
    }

    /// Coefficient of `P·n` in the emission law, negative for μ⁻.
    pub fn signed_asymmetry(&self) -> f64 {
        self.species.sign() * self.asymmetry
    }
}

/// `Γ(n) = 1 + a (P·n)`, normalized to unit mean over the sphere.
pub fn gamma_distribution(p: &Vector3<f64>, n: &Direction, a: f64) -> Result<f64> {
    check_polarization(p)?;
    Ok(1.0 + a * p.dot(&n.unit()))
}

pub(crate) fn check_polarization(p: &Vector3<f64>) -> Result<()> {
    let norm = p.norm();
    if !norm.is_finite() || norm > 1.0 + 1e-12 {
        return Err(Error::OutOfRange(format!("polarization length {norm}")));
    }
    Ok(())
}

/// Invert Γ along one axis into `(w(+1/2), w(−1/2))`.
pub fn histogram_to_tomogram(gamma_value: f64, a: f64, species: Species) -> Result<(f64, f64)> {
    if !(a > 0.0) || a > 1.0 {
        return Err(Error::OutOfRange(format!("asymmetry {a} cannot be inverted")));
    }
    let d = species.sign() * (gamma_value - 1.0) / (2.0 * a);
    let (wp, wm) = (0.5 + d, 0.5 - d);
    let ok = |w: f64| (-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&w);
    if !ok(wp) || !ok(wm) {
        return Err(Error::OutOfRange(format!("Γ = {gamma_value} is not reachable with a = {a}")));
    }
    Ok((wp, wm))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detector {
    pub axis: Direction,
    /// Radians, in (0, π].
    pub half_angle: f64,
    pub efficiency: f64,
}

impl Detector {
    pub fn new(axis: Direction, half_angle: f64, efficiency: f64) -> Result<Self> {
        let d = Detector {
            axis,
            half_angle,
            efficiency,
        };
        d.validate()?;
        Ok(d)
    }

    fn validate(&self) -> Result<()> {
        if !(self.half_angle > 0.0 && self.half_angle <= std::f64::consts::PI) {
            return Err(Error::OutOfRange(format!("half-angle {}", self.half_angle)));
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(Error::OutOfRange(format!("efficiency {}", self.efficiency)));
        }
        Ok(())
    }

    pub fn contains(&self, n: &Vector3<f64>) -> bool {
        n.dot(&self.axis.unit()) >= self.half_angle.cos()
    }

    /// Fraction of decays whose positron lands in the cone, before efficiency.
    ///
    /// `∫_cone Γ dn/4π = (1 − cos α)/2 + a (P·axis) sin²α / 4`.
    pub fn acceptance(&self, p: &Vector3<f64>, signed_asymmetry: f64) -> f64 {
        let (s, c) = self.half_angle.sin_cos();
        0.5 * (1.0 - c) + 0.25 * signed_asymmetry * p.dot(&self.axis.unit()) * s * s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorGeometry {
    pub detectors: Vec<Detector>,
}

impl DetectorGeometry {
    pub fn new(detectors: Vec<Detector>) -> Result<Self> {
        let g = DetectorGeometry { detectors };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.detectors.is_empty() {
            return Err(Error::InconsistentSpec("no detectors".into()));
        }
        self.detectors.iter().try_for_each(Detector::validate)
    }

    /// Detectors on ±x, ±y, ±z in that order.
    pub fn six_axis(half_angle: f64, efficiency: f64) -> Result<Self> {
        use std::f64::consts::{FRAC_PI_2, PI};
        let axes = [
            Direction::x(),
            Direction::new(FRAC_PI_2, PI),
            Direction::y(),
            Direction::new(FRAC_PI_2, 3.0 * FRAC_PI_2),
            Direction::z(),
            Direction::new(PI, 0.0),
        ];
        DetectorGeometry::new(
            axes.iter()
                .map(|&a| Detector::new(a, half_angle, efficiency))
                .collect::<Result<_>>()?,
        )
    }

    /// Forward/backward pair along `axis`.
    pub fn pair(axis: Direction, half_angle: f64, efficiency: f64) -> Result<Self> {
        let back = Direction::from_vector(-axis.unit())?;
        DetectorGeometry::new(vec![
            Detector::new(axis, half_angle, efficiency)?,
            Detector::new(back, half_angle, efficiency)?,
        ])
    }

    /// One detector covering the whole sphere.
    pub fn full_sphere() -> Self {
        DetectorGeometry {
            detectors: vec![Detector {
                axis: Direction::z(),
                half_angle: std::f64::consts::PI,
                efficiency: 1.0,
            }],
        }
    }

    pub fn len(&self) -> usize {
        self.detectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detectors.is_empty()
    }

    /// First detector whose cone contains `n`.
    pub fn detector_for(&self, n: &Vector3<f64>) -> Option<usize> {
        self.detectors.iter().position(|d| d.contains(n))
    }

    /// Index pairs `(forward, backward)` of antiparallel detectors with equal
    /// cones, forward being the one listed first.
    pub fn antiparallel_pairs(&self) -> Vec<(usize, usize)> {
        let mut used = vec![false; self.detectors.len()];
        let mut out = Vec::new();
        for i in 0..self.detectors.len() {
            if used[i] {
                continue;
            }
            let di = &self.detectors[i];
            let found = (i + 1..self.detectors.len()).find(|&j| {
                let dj = &self.detectors[j];
                !used[j]
                    && (di.axis.unit() + dj.axis.unit()).norm() < 1e-9
                    && (di.half_angle - dj.half_angle).abs() < 1e-12
            });
            if let Some(j) = found {
                used[i] = true;
                used[j] = true;
                out.push((i, j));
            }
        }
        out
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let g: DetectorGeometry = serde_json::from_str(text)?;
        g.validate()?;
        Ok(g)
    }
}

/// Muon polarization `P(t) = Tr[ρμ(t) σ]` as a function of time in ns.
pub trait MuonPolarization: Sync {
    fn polarization(&self, t: f64) -> Vector3<f64>;
}

impl<F: ?Sized> MuonPolarization for F
where
    F: Fn(f64) -> Vector3<f64> + Sync,
{
    fn polarization(&self, t: f64) -> Vector3<f64> {
        self(t)
    }
}

/// Bloch vector of a qubit density matrix.
pub fn bloch_vector(rho: &ComplexMatrix) -> Result<Vector3<f64>> {
    if rho.shape() != (2, 2) {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: rho.nrows(),
        });
    }
    let s = pauli();
    Ok(Vector3::new(
        (rho * &s[0]).trace().re,
        (rho * &s[1]).trace().re,
        (rho * &s[2]).trace().re,
    ))
}

/// Time-independent polarization.
#[derive(Clone, Copy, Debug)]
pub struct StaticPolarization(pub Vector3<f64>);

impl MuonPolarization for StaticPolarization {
    fn polarization(&self, _t: f64) -> Vector3<f64> {
        self.0
    }
}

/// Free muon precessing right-handedly about `axis` at `omega` rad/ns.
#[derive(Clone, Copy, Debug)]
pub struct Precessing {
    pub p0: Vector3<f64>,
    pub axis: Direction,
    pub omega: f64,
}

impl MuonPolarization for Precessing {
    fn polarization(&self, t: f64) -> Vector3<f64> {
        let axis = Unit::new_unchecked(self.axis.unit());
        Rotation3::from_axis_angle(&axis, self.omega * t) * self.p0
    }
}

/// Muon polarization of an evolving two-spin state, summed over the
/// Hamiltonian's eigen-frequencies so each evaluation is cheap.
#[derive(Clone, Debug)]
pub struct EvolvedPolarization {
    freqs: Vec<f64>,
    coeffs: Vec<[C64; 3]>,
}

impl EvolvedPolarization {
    /// Uses the spectral propagator `Σ e^{−iE t}|k⟩⟨k|` of `prep`.
    pub fn new(prep: &PreparedPropagator, rho0: &DensityMatrix) -> Result<Self> {
        let basis = prep.spec().basis()?;
        basis.check_state(rho0.matrix())?;
        let dim_e = basis.dims().dim_b;
        let v = prep.eigenvectors();
        let e = prep.energies();
        let rho_t = v.adjoint() * rho0.matrix() * v;
        let eye = ComplexMatrix::identity(dim_e, dim_e);
        let ops: Vec<ComplexMatrix> = pauli()
            .iter()
            .map(|s| v.adjoint() * kron(s, &eye) * v)
            .collect();
        let n = e.len();
        let mut freqs = Vec::with_capacity(n * n);
        let mut coeffs = Vec::with_capacity(n * n);
        for j in 0..n {
            for k in 0..n {
                let r = rho_t[(j, k)];
                freqs.push(e[j] - e[k]);
                coeffs.push([r * ops[0][(k, j)], r * ops[1][(k, j)], r * ops[2][(k, j)]]);
            }
        }
        Ok(EvolvedPolarization { freqs, coeffs })
    }
}

impl MuonPolarization for EvolvedPolarization {
    fn polarization(&self, t: f64) -> Vector3<f64> {
        let mut p = Vector3::zeros();
        for (w, c) in self.freqs.iter().zip(&self.coeffs) {
            let ph = C64::from_polar(1.0, -w * t);
            for i in 0..3 {
                p[i] += (c[i] * ph).re;
            }
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{HamiltonianSpec, PhysicalConstants, PropagatorSpec};
    use crate::linalg::partial_trace;
    use crate::spin::QuadratureGrid;
    use crate::Subsystem;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gamma_examples() {
        let a = AVERAGE_ASYMMETRY;
        let z = Vector3::z();
        for th in [0.0, 0.7, 2.0, 3.1] {
            let g = gamma_distribution(&z, &Direction::new(th, 0.3), a).unwrap();
            assert!((g - (1.0 + th.cos() / 3.0)).abs() < 1e-15);
            assert_eq!(gamma_distribution(&Vector3::zeros(), &Direction::new(th, 0.3), a).unwrap(), 1.0);
        }
        assert!(gamma_distribution(&Vector3::new(0.8, 0.8, 0.0), &Direction::z(), a).is_err());
    }

    #[test]
    fn inversion_examples() {
        let (wp, wm) = histogram_to_tomogram(4.0 / 3.0, 1.0 / 3.0, Species::MuPlus).unwrap();
        assert!((wp - 1.0).abs() < 1e-15 && wm.abs() < 1e-15);
        assert_eq!(histogram_to_tomogram(1.0, 0.5, Species::MuPlus).unwrap(), (0.5, 0.5));
        // (3/2)Γ − 1 for a = 1/3
        let (wp, _) = histogram_to_tomogram(1.1, 1.0 / 3.0, Species::MuPlus).unwrap();
        assert!((wp - (1.5 * 1.1 - 1.0)).abs() < 1e-14);
        let (wp, wm) = histogram_to_tomogram(1.1, 1.0 / 3.0, Species::MuMinus).unwrap();
        assert!((wm - (1.5 * 1.1 - 1.0)).abs() < 1e-14 && (wp - (2.0 - 1.5 * 1.1)).abs() < 1e-14);
        assert!(histogram_to_tomogram(1.5, 1.0 / 3.0, Species::MuPlus).is_err());
        assert!(histogram_to_tomogram(1.0, 0.0, Species::MuPlus).is_err());
    }

    #[test]
    fn gamma_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let r: f64 = rand::Rng::random_range(&mut rng, 0.0..1.0);
            let p = Direction::random(&mut rng).unit() * r;
            let n = Direction::random(&mut rng);
            let a: f64 = rand::Rng::random_range(&mut rng, 0.2..1.0);
            let g = gamma_distribution(&p, &n, a).unwrap();
            let (wp, wm) = histogram_to_tomogram(g, a, Species::MuPlus).unwrap();
            assert!((wp - 0.5 * (1.0 + p.dot(&n.unit()))).abs() < 1e-13);
            assert!((wp + wm - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn model_validation() {
        assert!(DecayModel::new(1.2, 2197.0, Species::MuPlus).is_err());
        assert!(DecayModel::new(0.5, 0.0, Species::MuPlus).is_err());
        assert!(DecayModel::new(0.0, 2197.0, Species::MuMinus).is_ok());
        assert!(Detector::new(Direction::z(), 0.0, 1.0).is_err());
        assert!(Detector::new(Direction::z(), 0.5, 0.0).is_err());
        assert!(DetectorGeometry::new(vec![]).is_err());
    }

    #[test]
    fn six_axis_pairs() {
        let g = DetectorGeometry::six_axis(0.7, 1.0).unwrap();
        assert_eq!(g.antiparallel_pairs(), vec![(0, 1), (2, 3), (4, 5)]);
        let text = serde_json::to_string(&g).unwrap();
        let back = DetectorGeometry::from_json(&text).unwrap();
        for (a, b) in g.detectors.iter().zip(&back.detectors) {
            assert!((a.axis.unit() - b.axis.unit()).norm() < 1e-15);
        }
    }

    #[test]
    fn cone_acceptance_matches_quadrature() {
        let p = Vector3::new(0.3, -0.5, 0.6);
        let det = Detector::new(Direction::new(0.9, 2.0), 0.8, 1.0).unwrap();
        let full = Detector::new(Direction::z(), std::f64::consts::PI, 1.0).unwrap();
        assert!((full.acceptance(&p, 0.4) - 1.0).abs() < 1e-15);
        let mut brute = 0.0;
        let n = 400_000;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..n {
            let d = Direction::random(&mut rng);
            if det.contains(&d.unit()) {
                brute += 1.0 + 0.4 * p.dot(&d.unit());
            }
        }
        brute /= n as f64;
        assert!((brute - det.acceptance(&p, 0.4)).abs() < 3e-3);
    }

    proptest! {
        #[test]
        fn gamma_normalized_on_grid(theta in 0.0f64..std::f64::consts::PI, phi in 0.0f64..std::f64::consts::TAU, r in 0.0f64..1.0, a in 0.0f64..1.0) {
            let p = Direction::new(theta, phi).unit() * r;
            let grid = QuadratureGrid::for_degree(2);
            let s = grid.integrate(|n| gamma_distribution(&p, n, a).unwrap());
            prop_assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn precession_sense() {
        let p = Precessing {
            p0: Vector3::x(),
            axis: Direction::z(),
            omega: 1.0,
        };
        let v = p.polarization(std::f64::consts::FRAC_PI_2);
        assert!((v - Vector3::y()).norm() < 1e-15);
    }

    #[test]
    fn evolved_polarization_matches_density() {
        let spec = HamiltonianSpec::mu_star(0.58, -0.47, Direction::new(0.4, 1.1), Vector3::new(0.01, 0.02, 0.05));
        let prep = PropagatorSpec::numeric(spec, PhysicalConstants::default()).unwrap().prepare().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho0 = DensityMatrix::random(4, &mut rng);
        let pol = EvolvedPolarization::new(&prep, &rho0).unwrap();
        for t in [0.0, 1.3, 17.0, 250.0] {
            let rho = prep.evolve(&rho0, t).unwrap();
            let red = partial_trace(rho.matrix(), crate::SubsystemDims::new(2, 2), Subsystem::A).unwrap();
            let expect = bloch_vector(&red).unwrap();
            assert!((pol.polarization(t) - expect).norm() < 1e-10);
        }
    }
}
