//! Validated density matrices.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{c, eig_hermitian, hermitian_deviation, hermitize, kron, ComplexMatrix, C64};

/// Slack for trace, Hermiticity and positivity checks.
pub const STATE_TOL: f64 = 1e-10;

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::InvalidState(format!("shape {:?} is not square", m.shape())));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite entry".into()));
        }
        let dev = hermitian_deviation(&m);
        if dev > STATE_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {dev:.3e})")));
        }
        let m = hermitize(&m);
        let tr = m.trace().re;
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr}")));
        }
        let (vals, _) = eig_hermitian(&m)?;
        if vals[0] < -STATE_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {:.3e}", vals[0])));
        }
        Ok(Self(m))
    }

    /// `|ψ⟩⟨ψ|` after normalizing `ψ`.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let v = DVector::from_column_slice(psi);
        let norm = v.norm();
        if !(norm > 0.0) {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let v = v / c(norm, 0.0);
        Ok(Self(&v * v.adjoint()))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim, dim) * c(1.0 / dim as f64, 0.0))
    }

    /// `ρA ⊗ ρB`.
    pub fn product(a: &DensityMatrix, b: &DensityMatrix) -> Self {
        Self(kron(&a.0, &b.0))
    }

    /// Two-qubit singlet `(|↑↓⟩ − |↓↑⟩)/√2`.
    pub fn singlet() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self::pure(&[c(0.0, 0.0), c(s, 0.0), c(-s, 0.0), c(0.0, 0.0)]).expect("normalized")
    }

    /// Muon spin up, electron unpolarized: `|↑⟩⟨↑| ⊗ I / dim_e`.
    pub fn muonium_initial(dim_e: usize) -> Self {
        let mut up = ComplexMatrix::zeros(2, 2);
        up[(0, 0)] = c(1.0, 0.0);
        Self(kron(&up, &(ComplexMatrix::identity(dim_e, dim_e) * c(1.0 / dim_e as f64, 0.0))))
    }

    /// Qubit state with Bloch vector `p` (`|p| ≤ 1`).
    pub fn qubit(p: [f64; 3]) -> Result<Self> {
        let [x, y, z] = p;
        Self::new(ComplexMatrix::from_row_slice(
            2,
            2,
            &[c((1.0 + z) / 2.0, 0.0), c(x / 2.0, -y / 2.0), c(x / 2.0, y / 2.0), c((1.0 - z) / 2.0, 0.0)],
        ))
    }

    /// Random full-rank state from the Ginibre ensemble.
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        Self::random_with_rank(dim, dim, rng)
    }

    pub fn random_with_rank<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> Self {
        let g = ComplexMatrix::from_fn(dim, rank.max(1), |_, _| {
            c(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let m = &g * g.adjoint();
        let tr = m.trace().re;
        Self(hermitize(&(m / c(tr, 0.0))))
    }

    pub fn random_pure<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        Self::random_with_rank(dim, 1, rng)
    }

    /// Wrap a matrix already known to be a valid state up to roundoff.
    pub(crate) fn from_trusted(m: ComplexMatrix) -> Self {
        Self(hermitize(&m))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn purity(&self) -> f64 {
        (&self.0 * &self.0).trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eig_hermitian(&self.0).expect("density matrices are Hermitian").0
    }
}

impl AsRef<ComplexMatrix> for DensityMatrix {
    fn as_ref(&self) -> &ComplexMatrix {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn validation() {
        assert!(DensityMatrix::new(ComplexMatrix::identity(2, 2)).is_err());
        let neg = ComplexMatrix::from_row_slice(2, 2, &[c(1.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.5, 0.0)]);
        assert!(DensityMatrix::new(neg).is_err());
        let nh = ComplexMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.1, 0.0), c(0.0, 0.0), c(0.5, 0.0)]);
        assert!(DensityMatrix::new(nh).is_err());
        assert!(DensityMatrix::qubit([0.0, 0.0, 1.0]).is_ok());
        assert!(DensityMatrix::qubit([0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn random_states_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for dim in [2, 3, 4, 6] {
            let r = DensityMatrix::random(dim, &mut rng);
            assert!(DensityMatrix::new(r.matrix().clone()).is_ok());
            let p = DensityMatrix::random_pure(dim, &mut rng);
            assert!((p.purity() - 1.0).abs() < 1e-12);
        }
        assert!((DensityMatrix::singlet().purity() - 1.0).abs() < 1e-15);
        assert!((DensityMatrix::maximally_mixed(4).purity() - 0.25).abs() < 1e-15);
    }
}
