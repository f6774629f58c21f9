use serde::{Deserialize, Serialize};

use super::closed_form::{propagator_closed_form, ClosedFormVariant};
use super::constants::PhysicalConstants;
use super::hamiltonian::{build_hamiltonian, HamiltonianSpec};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::linalg::{eig_hermitian, hermitize, kron, require_unitary, spectral_apply, ComplexMatrix, C64};
use crate::spin::{measurement_frame, Direction, QuadratureGrid, Spin};
use crate::state::DensityMatrix;
use crate::two_spin::{individual_tomogram_unitary, TwoSpinBasis, TwoSpinTomogram};

const UNITARY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PropagationMethod {
    ClosedForm(ClosedFormVariant),
    NumericExpm,
}

/// A Hamiltonian together with the way its propagator is evaluated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagatorSpec {
    pub hamiltonian: HamiltonianSpec,
    pub method: PropagationMethod,
    pub constants: PhysicalConstants,
}

impl PropagatorSpec {
    pub fn new(hamiltonian: HamiltonianSpec, method: PropagationMethod, constants: PhysicalConstants) -> Result<Self> {
        let spec = Self {
            hamiltonian,
            method,
            constants,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Re-run the constructor checks, e.g. after deserializing.
    pub fn validate(&self) -> Result<()> {
        self.hamiltonian.validate()?;
        if let PropagationMethod::ClosedForm(v) = self.method {
            if !v.supports(&self.hamiltonian) {
                return Err(Error::NotTabulated(format!("{v:?} does not match the field/axis orientation")));
            }
        }
        Ok(())
    }

    /// Closed form when one is tabulated for the orientation, numeric otherwise.
    pub fn auto(hamiltonian: HamiltonianSpec, constants: PhysicalConstants) -> Result<Self> {
        let method = ClosedFormVariant::detect(&hamiltonian)
            .map(PropagationMethod::ClosedForm)
            .unwrap_or(PropagationMethod::NumericExpm);
        Self::new(hamiltonian, method, constants)
    }

    pub fn numeric(hamiltonian: HamiltonianSpec, constants: PhysicalConstants) -> Result<Self> {
        Self::new(hamiltonian, PropagationMethod::NumericExpm, constants)
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn basis(&self) -> Result<TwoSpinBasis> {
        TwoSpinBasis::new(Spin::HALF, self.hamiltonian.j_e)
    }

    /// `H/ħ` in rad/ns.
    pub fn hamiltonian_matrix(&self) -> Result<ComplexMatrix> {
        build_hamiltonian(&self.hamiltonian, &self.constants)
    }

    pub fn at(&self, t: f64) -> Result<ComplexMatrix> {
        match self.method {
            PropagationMethod::ClosedForm(v) => propagator_closed_form(v, &self.hamiltonian, &self.constants, t),
            PropagationMethod::NumericExpm => propagator_numeric(&self.hamiltonian, &self.constants, t),
        }
    }

    /// Diagonalize once for repeated evaluation.
    pub fn prepare(&self) -> Result<PreparedPropagator> {
        let (energies, vectors) = eig_hermitian(&self.hamiltonian_matrix()?)?;
        Ok(PreparedPropagator {
            spec: self.clone(),
            energies,
            vectors,
        })
    }
}

/// `exp(−iHt)` through the Hermitian eigendecomposition.
pub fn propagator_numeric(spec: &HamiltonianSpec, constants: &PhysicalConstants, t: f64) -> Result<ComplexMatrix> {
    crate::linalg::propagator(&build_hamiltonian(spec, constants)?, t, 1.0)
}

/// A propagator with its Hamiltonian spectrum cached.
#[derive(Clone, Debug)]
pub struct PreparedPropagator {
    spec: PropagatorSpec,
    energies: Vec<f64>,
    vectors: ComplexMatrix,
}

impl PreparedPropagator {
    pub fn spec(&self) -> &PropagatorSpec {
        &self.spec
    }

    /// Eigenvalues of `H/ħ`, ascending, rad/ns.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Columns are the eigenvectors matching [`energies`](Self::energies).
    pub fn eigenvectors(&self) -> &ComplexMatrix {
        &self.vectors
    }

    pub fn at(&self, t: f64) -> Result<ComplexMatrix> {
        match self.spec.method {
            PropagationMethod::ClosedForm(_) => self.spec.at(t),
            PropagationMethod::NumericExpm => Ok(spectral_apply(&self.energies, &self.vectors, |e| {
                C64::from_polar(1.0, -e * t)
            })),
        }
    }

    pub fn evolve(&self, rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
        evolve_density(rho0, &self.at(t)?)
    }

    /// Distinct positive level spacings, ascending (rad/ns).
    pub fn gaps(&self) -> Vec<f64> {
        let mut gaps: Vec<f64> = Vec::new();
        let scale = self.energies.iter().fold(0.0f64, |m, e| m.max(e.abs())).max(1e-300);
        for (i, a) in self.energies.iter().enumerate() {
            for b in &self.energies[i + 1..] {
                let g = (b - a).abs();
                if g > 1e-9 * scale && !gaps.iter().any(|x| (x - g).abs() <= 1e-9 * scale) {
                    gaps.push(g);
                }
            }
        }
        gaps.sort_by(|a, b| a.total_cmp(b));
        gaps
    }
}

/// `U ρ U†`.
pub fn evolve_density(rho0: &DensityMatrix, u: &ComplexMatrix) -> Result<DensityMatrix> {
    if u.nrows() != rho0.dim() || u.ncols() != rho0.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho0.dim(),
            found: u.nrows(),
        });
    }
    require_unitary(u, UNITARY_TOL)?;
    Ok(DensityMatrix::from_trusted(hermitize(&(u * rho0.matrix() * u.adjoint()))))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum EvolutionPath {
    /// Sample the tomogram of `U ρ₀ U†`.
    #[default]
    Conjugation,
    /// Evaluate the initial unitary tomogram at the composed unitary
    /// `(R_μ† ⊗ R_e†) U(t)`.
    Composition,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TomogramSeries {
    pub times: Vec<f64>,
    pub tomograms: Vec<TwoSpinTomogram>,
}

pub fn evolve_tomogram(
    rho0: &DensityMatrix,
    propagator: &PreparedPropagator,
    times: &[f64],
    grid_mu: &QuadratureGrid,
    grid_e: &QuadratureGrid,
    path: EvolutionPath,
    exec: Exec,
) -> Result<TomogramSeries> {
    let basis = propagator.spec().basis()?;
    basis.check_state(rho0.matrix())?;
    let frames_mu: Vec<ComplexMatrix> = grid_mu
        .nodes()
        .iter()
        .map(|d| measurement_frame(basis.j_mu(), d))
        .collect::<Result<_>>()?;
    let frames_e: Vec<ComplexMatrix> = grid_e
        .nodes()
        .iter()
        .map(|d| measurement_frame(basis.j_e(), d))
        .collect::<Result<_>>()?;
    let tomograms = exec.map(times, |&t| -> Result<TwoSpinTomogram> {
        let u = propagator.at(t)?;
        match path {
            EvolutionPath::Conjugation => {
                let rho = evolve_density(rho0, &u)?;
                TwoSpinTomogram::sample_with(&rho, &basis, grid_mu, grid_e, Exec::Sequential)
            }
            EvolutionPath::Composition => {
                require_unitary(&u, UNITARY_TOL)?;
                let mut values = Vec::with_capacity(grid_mu.len() * grid_e.len() * basis.dim());
                for fm in &frames_mu {
                    for fe in &frames_e {
                        values.extend(individual_tomogram_unitary(rho0, &(kron(fm, fe) * &u))?);
                    }
                }
                TwoSpinTomogram::from_values(basis, grid_mu.clone(), grid_e.clone(), values)
            }
        }
    });
    Ok(TomogramSeries {
        times: times.to_vec(),
        tomograms: tomograms.into_iter().collect::<Result<_>>()?,
    })
}

/// Joint tomogram of free muonium started from a polarized muon and an
/// unpolarized electron, evolving under the contact interaction `ω₀`.
pub fn analytic_free_mu(m_mu: f64, n_mu: &Direction, m_e: f64, n_e: &Direction, t: f64, omega0: f64) -> f64 {
    let (a, b) = (n_mu.unit(), n_e.unit());
    let (s, c) = (omega0 * t).sin_cos();
    let cross_z = a.x * b.y - a.y * b.x;
    0.25 * (1.0 + m_mu * a.z + m_e * b.z + (m_mu * a.z - m_e * b.z) * c + 2.0 * m_mu * m_e * cross_z * s)
}

/// Muon marginal of [`analytic_free_mu`].
pub fn analytic_free_mu_reduced(m_mu: f64, n_mu: &Direction, t: f64, omega0: f64) -> f64 {
    0.5 * (1.0 + m_mu * n_mu.unit().z * (1.0 + (omega0 * t).cos()))
}

/// Entanglement measure of the same state: `sin⁴(ω₀t)/128`.
pub fn analytic_free_mu_entanglement(t: f64, omega0: f64) -> f64 {
    (omega0 * t).sin().powi(4) / 128.0
}

/// Largest elementwise Bell-like number of the same state: `|sin ω₀t|`.
pub fn analytic_free_mu_max_bell(t: f64, omega0: f64) -> f64 {
    (omega0 * t).sin().abs()
}
