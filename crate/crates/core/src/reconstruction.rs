//! Initial two-qubit state from time series of the reduced muon tomogram.
//!
//! `ρ₀ = I/4 + Σₖ cₖ Pₖ/2` over the fifteen Pauli products `Pₖ`, so every
//! measured `w̃(1/2, n, t)` is affine in `c` and least squares is exact.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dynamics::{evolve_density, PropagatorSpec};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::linalg::{c, eig_hermitian, frobenius, hermitize, identity, kron, pauli, ComplexMatrix};
use crate::spin::Direction;
use crate::state::DensityMatrix;
use crate::two_spin::reduced_tomogram;

/// Number of real parameters of a two-qubit density matrix.
pub const N_PARAMS: usize = 15;

/// Relative singular-value threshold for the rank.
/// Negative eigenvalues smaller than this are roundoff and do not set the
/// clipping flag.
pub const CLIP_TOL: f64 = 1e-12;

pub const RANK_TOL: f64 = 1e-10;

/// Two times closer than this fraction of a level-spacing period count as coincident.
const COINCIDENCE_TOL: f64 = 1e-9;

const LABELS: [&str; 4] = ["I", "X", "Y", "Z"];

/// Pauli index pairs `(muon, electron)` in parameter order: `σᵢ⊗I`, `I⊗σⱼ`, `σᵢ⊗σⱼ`.
fn pauli_pairs() -> [(usize, usize); N_PARAMS] {
    let mut out = [(0, 0); N_PARAMS];
    let mut k = 0;
    for i in 1..4 {
        out[k] = (i, 0);
        k += 1;
    }
    for j in 1..4 {
        out[k] = (0, j);
        k += 1;
    }
    for i in 1..4 {
        for j in 1..4 {
            out[k] = (i, j);
            k += 1;
        }
    }
    out
}

/// Label such as `"X⊗Z"` for parameter `k`.
pub fn parameter_label(k: usize) -> String {
    let (i, j) = pauli_pairs()[k];
    format!("{}⊗{}", LABELS[i], LABELS[j])
}

fn pauli_products() -> Vec<ComplexMatrix> {
    let s = pauli();
    let single = |i: usize| if i == 0 { identity(2) } else { s[i - 1].clone() };
    pauli_pairs().iter().map(|&(i, j)| kron(&single(i), &single(j))).collect()
}

/// `cₖ = Tr[ρ Pₖ]/2`.
pub fn pauli_parameters(rho: &ComplexMatrix) -> Result<[f64; N_PARAMS]> {
    if rho.shape() != (4, 4) {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: rho.nrows(),
        });
    }
    let mut out = [0.0; N_PARAMS];
    for (o, p) in out.iter_mut().zip(pauli_products()) {
        *o = 0.5 * (rho * p).trace().re;
    }
    Ok(out)
}

/// `I/4 + Σ cₖ Pₖ/2`, Hermitian with unit trace but not necessarily positive.
pub fn matrix_from_parameters(params: &[f64]) -> Result<ComplexMatrix> {
    if params.len() != N_PARAMS {
        return Err(Error::DimensionMismatch {
            expected: N_PARAMS,
            found: params.len(),
        });
    }
    let mut m = identity(4) * c(0.25, 0.0);
    for (ck, p) in params.iter().zip(pauli_products()) {
        m += p * c(0.5 * ck, 0.0);
    }
    Ok(m)
}

/// One propagator observed at several times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSetting {
    pub propagator: PropagatorSpec,
    pub times: Vec<f64>,
}

/// Reduced muon tomograms `w̃(1/2, n, t)` for every direction, setting and time.
///
/// Values are ordered setting-major, then by direction, then by time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementPlan {
    pub directions: Vec<Direction>,
    pub settings: Vec<MeasurementSetting>,
}

/// `T·frac(l/φ)` for `l = 1..=n`, where `T` is the beat period of the two
/// lowest distinct level spacings (or the period of the only one).
pub fn default_times(propagator: &PropagatorSpec, n: usize) -> Result<Vec<f64>> {
    let gaps = propagator.prepare()?.gaps();
    let period = match gaps.as_slice() {
        [] => return Err(Error::InconsistentSpec("propagator has a degenerate spectrum".into())),
        [g] => TAU / g,
        [g1, g2, ..] => TAU / (g2 - g1).abs(),
    };
    let inv_phi = 2.0 / (1.0 + 5f64.sqrt());
    Ok((1..=n).map(|l| period * (l as f64 * inv_phi).fract()).collect())
}

impl MeasurementPlan {
    /// Directions x̂, ŷ, ẑ under a single propagator.
    pub fn new(propagator: PropagatorSpec, times: Vec<f64>) -> Self {
        MeasurementPlan {
            directions: vec![Direction::x(), Direction::y(), Direction::z()],
            settings: vec![MeasurementSetting { propagator, times }],
        }
    }

    /// Three axes and `n_times` default times.
    pub fn with_default_times(propagator: PropagatorSpec, n_times: usize) -> Result<Self> {
        let times = default_times(&propagator, n_times)?;
        Ok(Self::new(propagator, times))
    }

    pub fn with_directions(mut self, directions: Vec<Direction>) -> Self {
        self.directions = directions;
        self
    }

    pub fn with_setting(mut self, setting: MeasurementSetting) -> Self {
        self.settings.push(setting);
        self
    }

    pub fn n_values(&self) -> usize {
        self.directions.len() * self.settings.iter().map(|s| s.times.len()).sum::<usize>()
    }

    /// Checks shapes and that no two times of a setting coincide modulo any
    /// level-spacing period of its propagator.
    pub fn validate(&self) -> Result<()> {
        if self.directions.is_empty() || self.settings.is_empty() {
            return Err(Error::InconsistentSpec("plan needs directions and settings".into()));
        }
        for s in &self.settings {
            s.propagator.validate()?;
            if s.propagator.dim() != 4 {
                return Err(Error::InconsistentSpec("reconstruction needs a muon-electron qubit pair".into()));
            }
            if s.times.is_empty() || s.times.iter().any(|t| !t.is_finite()) {
                return Err(Error::InconsistentSpec("each setting needs finite times".into()));
            }
            let periods: Vec<f64> = s.propagator.prepare()?.gaps().iter().map(|g| TAU / g).collect();
            for (i, a) in s.times.iter().enumerate() {
                for b in &s.times[i + 1..] {
                    let d = (a - b).abs();
                    if d == 0.0 {
                        return Err(Error::InconsistentSpec(format!("time {a} ns is repeated")));
                    }
                    for p in &periods {
                        let r = d.rem_euclid(*p);
                        if r.min(p - r) <= COINCIDENCE_TOL * p {
                            return Err(Error::InconsistentSpec(format!(
                                "times {a} and {b} ns coincide modulo the period {p} ns"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Linear map from the fifteen parameters to predicted values minus 1/2.
#[derive(Clone, Debug)]
pub struct DesignMatrix {
    pub matrix: DMatrix<f64>,
    /// Descending.
    pub singular_values: Vec<f64>,
}

impl DesignMatrix {
    pub fn build(plan: &MeasurementPlan) -> Result<Self> {
        plan.validate()?;
        let paulis = pauli_products();
        let eye = identity(2);
        let projectors: Vec<ComplexMatrix> = plan
            .directions
            .iter()
            .map(|n| {
                let u = n.unit();
                let s = pauli();
                let p = identity(2) * c(0.5, 0.0) + (&s[0] * c(u.x, 0.0) + &s[1] * c(u.y, 0.0) + &s[2] * c(u.z, 0.0)) * c(0.5, 0.0);
                kron(&p, &eye)
            })
            .collect();
        let mut rows: Vec<f64> = Vec::with_capacity(plan.n_values() * N_PARAMS);
        for s in &plan.settings {
            let prep = s.propagator.prepare()?;
            let evolved: Vec<Vec<ComplexMatrix>> = s
                .times
                .iter()
                .map(|&t| {
                    let u = prep.at(t)?;
                    Ok(paulis.iter().map(|p| &u * p * u.adjoint()).collect())
                })
                .collect::<Result<_>>()?;
            for proj in &projectors {
                for ev in &evolved {
                    rows.extend(ev.iter().map(|up| 0.5 * (proj * up).trace().re));
                }
            }
        }
        let matrix = DMatrix::from_row_slice(plan.n_values(), N_PARAMS, &rows);
        let mut singular_values = matrix.clone().svd(false, false).singular_values.as_slice().to_vec();
        singular_values.sort_by(|a, b| b.total_cmp(a));
        Ok(DesignMatrix { matrix, singular_values })
    }

    fn threshold(&self) -> f64 {
        RANK_TOL * self.singular_values.first().copied().unwrap_or(0.0)
    }

    pub fn rank(&self) -> usize {
        let tol = self.threshold();
        self.singular_values.iter().filter(|&&s| s > tol).count()
    }

    /// `σ_max/σ_15`, infinite when rank-deficient.
    pub fn condition_number(&self) -> f64 {
        if self.rank() < N_PARAMS {
            f64::INFINITY
        } else {
            self.singular_values[0] / self.singular_values[N_PARAMS - 1]
        }
    }

    pub fn predict(&self, params: &[f64]) -> Vec<f64> {
        let p = DVector::from_column_slice(params);
        (&self.matrix * p).iter().map(|v| v + 0.5).collect()
    }

    /// Null-space directions written as combinations of Pauli products.
    pub fn null_space(&self) -> Vec<String> {
        let rank = self.rank();
        if rank >= N_PARAMS {
            return Vec::new();
        }
        let gram = self.matrix.transpose() * &self.matrix;
        let eig = SymmetricEigen::new(gram);
        let mut order: Vec<usize> = (0..N_PARAMS).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        order[..N_PARAMS - rank]
            .iter()
            .map(|&col| {
                let v = eig.eigenvectors.column(col);
                let mut terms: Vec<(usize, f64)> = v.iter().copied().enumerate().filter(|(_, x)| x.abs() > 0.05).collect();
                terms.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));
                terms
                    .iter()
                    .map(|(k, x)| format!("{x:+.3}·{}", parameter_label(*k)))
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect()
    }
}

/// `w̃(1/2, n, t)` for every plan entry, computed by evolving `ρ₀`.
pub fn forward_model(rho0: &DensityMatrix, plan: &MeasurementPlan) -> Result<Vec<f64>> {
    plan.validate()?;
    let mut out = Vec::with_capacity(plan.n_values());
    for s in &plan.settings {
        let basis = s.propagator.basis()?;
        let prep = s.propagator.prepare()?;
        let states: Vec<DensityMatrix> = s
            .times
            .iter()
            .map(|&t| evolve_density(rho0, &prep.at(t)?))
            .collect::<Result<_>>()?;
        for n in &plan.directions {
            for rho in &states {
                out.push(reduced_tomogram(rho, &basis, n)?[0]);
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Identifiability {
    pub rank: usize,
    pub condition_number: f64,
    pub singular_values: Vec<f64>,
    pub null_space: Vec<String>,
}

pub fn identifiability(plan: &MeasurementPlan) -> Result<Identifiability> {
    let d = DesignMatrix::build(plan)?;
    Ok(Identifiability {
        rank: d.rank(),
        condition_number: d.condition_number(),
        null_space: d.null_space(),
        singular_values: d.singular_values,
    })
}

/// Report written by the reconstruction command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub plan: MeasurementPlan,
    pub rank: usize,
    pub condition_number: f64,
    pub rho0_real: Vec<Vec<f64>>,
    pub rho0_imag: Vec<Vec<f64>>,
    /// Euclidean norm of measured minus predicted values for the returned state.
    pub residual_norm: f64,
    /// Eigenvalue clipping changed the least-squares estimate.
    pub clipped: bool,
    /// Clipping moved an eigenvalue by more than three standard deviations.
    pub clipped_beyond_3sigma: bool,
}

#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub rho0: DensityMatrix,
    /// Unconstrained least-squares estimate.
    pub unconstrained: ComplexMatrix,
    /// Standard deviation of the estimate's Frobenius error.
    pub sigma: f64,
    pub report: ReconstructionReport,
}

/// Weighted least squares over the fifteen parameters, then eigenvalue
/// clipping onto the density matrices.
///
/// Without `sigmas` all values get equal weight and `sigma` is reported as 0.
pub fn reconstruct_initial(values: &[f64], sigmas: Option<&[f64]>, plan: &MeasurementPlan) -> Result<Reconstruction> {
    let design = DesignMatrix::build(plan)?;
    reconstruct_with_design(values, sigmas, plan, &design)
}

fn reconstruct_with_design(
    values: &[f64],
    sigmas: Option<&[f64]>,
    plan: &MeasurementPlan,
    design: &DesignMatrix,
) -> Result<Reconstruction> {
    let n = plan.n_values();
    if values.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: values.len(),
        });
    }
    if let Some(s) = sigmas {
        if s.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: s.len(),
            });
        }
        if s.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
            return Err(Error::OutOfRange("uncertainties must be positive".into()));
        }
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::OutOfRange("non-finite measurement".into()));
    }
    let rank = design.rank();
    if rank < N_PARAMS {
        return Err(Error::RankDeficient {
            rank,
            needed: N_PARAMS,
            null_space: design.null_space().join("; "),
        });
    }

    let weights: Vec<f64> = match sigmas {
        Some(s) => s.iter().map(|x| 1.0 / x).collect(),
        None => vec![1.0; n],
    };
    let mut a = design.matrix.clone();
    for (i, w) in weights.iter().enumerate() {
        a.row_mut(i).scale_mut(*w);
    }
    let b = DVector::from_iterator(n, values.iter().zip(&weights).map(|(v, w)| (v - 0.5) * w));
    let svd = a.svd(true, true);
    let tol = RANK_TOL * svd.singular_values.max();
    let params = svd.solve(&b, tol).map_err(|e| Error::InsufficientData(e.to_string()))?;
    // Covariance V Σ⁻² Vᵀ has trace Σ σᵢ⁻².
    let sigma = if sigmas.is_some() {
        svd.singular_values.iter().map(|s| s.powi(-2)).sum::<f64>().sqrt()
    } else {
        0.0
    };

    let raw = matrix_from_parameters(params.as_slice())?;
    let (vals, vecs) = eig_hermitian(&raw)?;
    let clipped_vals: Vec<f64> = vals.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = clipped_vals.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidState("estimate has no positive eigenvalue".into()));
    }
    let clipped = vals.iter().any(|&v| v < -CLIP_TOL);
    let shifts = vals.iter().zip(&clipped_vals).map(|(v, w)| (v - w / total).abs());
    let max_shift = shifts.fold(0.0f64, f64::max);
    let mut rho = ComplexMatrix::zeros(4, 4);
    for (k, w) in clipped_vals.iter().enumerate() {
        let col = vecs.column(k);
        rho += col * col.adjoint() * c(w / total, 0.0);
    }
    let rho0 = DensityMatrix::new(hermitize(&rho))?;

    let predicted = design.predict(&pauli_parameters(rho0.matrix())?);
    let residual_norm = predicted.iter().zip(values).map(|(p, v)| (p - v).powi(2)).sum::<f64>().sqrt();
    let m = rho0.matrix();
    let report = ReconstructionReport {
        plan: plan.clone(),
        rank,
        condition_number: design.condition_number(),
        rho0_real: (0..4).map(|i| (0..4).map(|j| m[(i, j)].re).collect()).collect(),
        rho0_imag: (0..4).map(|i| (0..4).map(|j| m[(i, j)].im).collect()).collect(),
        residual_norm,
        clipped,
        clipped_beyond_3sigma: clipped && max_shift > 3.0 * sigma,
    };
    Ok(Reconstruction {
        rho0,
        unconstrained: raw,
        sigma,
        report,
    })
}

/// Frobenius errors of reconstructions from `trials` noisy copies of the
/// exact data, Gaussian noise of standard deviation `sigma`.
pub fn noise_trials(
    rho0: &DensityMatrix,
    plan: &MeasurementPlan,
    sigma: f64,
    trials: usize,
    seed: u64,
    exec: Exec,
) -> Result<Vec<f64>> {
    let exact = forward_model(rho0, plan)?;
    let design = DesignMatrix::build(plan)?;
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::OutOfRange(e.to_string()))?;
    let sig = vec![sigma; exact.len()];
    exec.map_range(trials, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let noisy: Vec<f64> = exact.iter().map(|v| v + noise.sample(&mut rng)).collect();
        let r = reconstruct_with_design(&noisy, Some(&sig), plan, &design)?;
        Ok(frobenius(&(r.rho0.matrix() - rho0.matrix())))
    })
    .into_iter()
    .collect()
}
