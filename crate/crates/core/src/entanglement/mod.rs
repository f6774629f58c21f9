//! Separability diagnostics: PPT positivity coefficients, the measure E,
//! negativity, Bell-like numbers, and the star-product route to M3/M4 that
//! works on tomograms alone.

mod bell;
mod star;

pub use bell::{
    bell_cells, bell_number, max_bell, max_bell_with, BellContraction, BellMaximum, BellOptions, BellSetting,
    TwoQubitBloch, BELL_MATRIX,
};
pub use star::{star_kernel, star_kernel_factor, tomographic_m34, tomographic_traces, StarArg};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::linalg::{eig_hermitian, hermitian_deviation, partial_transpose, ComplexMatrix, Subsystem, SubsystemDims};
use crate::state::DensityMatrix;
use crate::two_spin::TwoSpinTomogram;

/// Elementary symmetric polynomials of the spectrum of a unit-trace 4×4
/// matrix, written through `Tr Λ^k`. All three are non-negative iff Λ ≥ 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositivityCoefficients {
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
}

impl PositivityCoefficients {
    /// From `Tr Λ²`, `Tr Λ³`, `Tr Λ⁴` (with `Tr Λ = 1`).
    pub fn from_traces(t2: f64, t3: f64, t4: f64) -> Self {
        Self {
            m2: (1.0 - t2) / 2.0,
            m3: (1.0 - 3.0 * t2 + 2.0 * t3) / 6.0,
            m4: (1.0 - 6.0 * t2 + 3.0 * t2 * t2 + 8.0 * t3 - 6.0 * t4) / 24.0,
        }
    }

    /// `E = |M3| + |M4| − M3 − M4`.
    pub fn measure(&self) -> f64 {
        (self.m3.abs() - self.m3) + (self.m4.abs() - self.m4)
    }
}

pub fn positivity_coefficients(lambda: &ComplexMatrix) -> Result<PositivityCoefficients> {
    if lambda.shape() != (4, 4) {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: lambda.nrows(),
        });
    }
    let dev = hermitian_deviation(lambda);
    if dev > 1e-10 {
        return Err(Error::NotHermitian(dev));
    }
    let tr = lambda.trace().re;
    if (tr - 1.0).abs() > 1e-10 {
        return Err(Error::OutOfRange(format!("trace {tr} is not 1")));
    }
    let l2 = lambda * lambda;
    let l3 = &l2 * lambda;
    let t2 = l2.trace().re;
    let t3 = l3.trace().re;
    let t4 = (&l2 * &l2).trace().re;
    Ok(PositivityCoefficients::from_traces(t2, t3, t4))
}

fn ppt_of(rho: &DensityMatrix, dims: SubsystemDims) -> Result<ComplexMatrix> {
    partial_transpose(rho.matrix(), dims, Subsystem::A)
}

/// Positivity coefficients of the partial transpose of a two-qubit state.
pub fn ppt_coefficients(rho: &DensityMatrix) -> Result<PositivityCoefficients> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: rho.dim(),
        });
    }
    positivity_coefficients(&ppt_of(rho, SubsystemDims::new(2, 2))?)
}

/// Entanglement measure E of a two-qubit state, evaluated on `ρ^ppt`.
pub fn entanglement_e(rho: &DensityMatrix) -> Result<f64> {
    Ok(ppt_coefficients(rho)?.measure())
}

/// Sum of the moduli of the negative eigenvalues of `ρ^ppt`; supported for
/// 2×2 and 2×3, where it vanishes exactly for separable states.
pub fn negativity(rho: &DensityMatrix, dims: SubsystemDims) -> Result<f64> {
    if dims.dim_a != 2 || !(dims.dim_b == 2 || dims.dim_b == 3) {
        return Err(Error::OutOfRange(format!(
            "negativity supported for 2x2 and 2x3, got {}x{}",
            dims.dim_a, dims.dim_b
        )));
    }
    let (vals, _) = eig_hermitian(&crate::linalg::hermitize(&ppt_of(rho, dims)?))?;
    Ok(vals.iter().filter(|v| **v < 0.0).map(|v| -v).sum())
}

/// Partial transpose on the muon factor, acting on a tomogram:
/// `w^ppt(m_μ, n_μ, …) = w(m_μ, (n_x, −n_y, n_z), …)`.
pub fn ppt_tomogram(w: &TwoSpinTomogram) -> TwoSpinTomogram {
    let grid = w.grid_mu().clone();
    w.permute_mu(|a| grid.ppt_index(a))
}

/// Entanglement indicators of one state at one time.
///
/// E, the positivity coefficients and the Bell maximum are two-qubit
/// quantities and are absent for larger electron spins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntanglementReport {
    pub t: f64,
    #[serde(rename = "E")]
    pub e: Option<f64>,
    #[serde(rename = "M2")]
    pub m2: Option<f64>,
    #[serde(rename = "M3")]
    pub m3: Option<f64>,
    #[serde(rename = "M4")]
    pub m4: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bell_number: Option<f64>,
    pub max_bell: Option<f64>,
    pub negativity: f64,
}

impl EntanglementReport {
    /// Build a report; the Bell optimization runs only when `with_bell` is set.
    pub fn evaluate(rho: &DensityMatrix, dims: SubsystemDims, t: f64, with_bell: bool, exec: Exec) -> Result<Self> {
        let neg = negativity(rho, dims)?;
        if dims.dim_b != 2 {
            return Ok(Self {
                t,
                e: None,
                m2: None,
                m3: None,
                m4: None,
                bell_number: None,
                max_bell: None,
                negativity: neg,
            });
        }
        let p = ppt_coefficients(rho)?;
        let max_bell = if with_bell {
            Some(max_bell(rho, BellContraction::default(), exec)?.value)
        } else {
            None
        };
        Ok(Self {
            t,
            e: Some(p.measure()),
            m2: Some(p.m2),
            m3: Some(p.m3),
            m4: Some(p.m4),
            bell_number: None,
            max_bell,
            negativity: neg,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, kron, max_abs_diff};
    use crate::spin::{QuadratureGrid, Spin};
    use crate::two_spin::{reconstruct_two_spin_operator, TwoSpinBasis};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn coefficient_examples() {
        let p = positivity_coefficients(DensityMatrix::maximally_mixed(4).matrix()).unwrap();
        assert!((p.m2 - 3.0 / 8.0).abs() < 1e-15);
        assert!((p.m3 - 1.0 / 16.0).abs() < 1e-15);
        assert!((p.m4 - 1.0 / 256.0).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pure = DensityMatrix::random_pure(4, &mut rng);
        let p = positivity_coefficients(pure.matrix()).unwrap();
        assert!(p.m2.abs() < 1e-14 && p.m3.abs() < 1e-14 && p.m4.abs() < 1e-14);
        // Spectrum of the singlet's partial transpose is (−1/2, 1/2, 1/2, 1/2).
        let p = ppt_coefficients(&DensityMatrix::singlet()).unwrap();
        assert!(p.m2.abs() < 1e-15 && (p.m3 + 0.25).abs() < 1e-15 && (p.m4 + 1.0 / 16.0).abs() < 1e-15);
        assert!(positivity_coefficients(&ComplexMatrix::identity(4, 4)).is_err());
        assert!(positivity_coefficients(&ComplexMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn singlet_indicators() {
        let s = DensityMatrix::singlet();
        assert!((entanglement_e(&s).unwrap() - 0.625).abs() < 1e-15);
        assert!((negativity(&s, SubsystemDims::new(2, 2)).unwrap() - 0.5).abs() < 1e-14);
        assert!(entanglement_e(&DensityMatrix::maximally_mixed(6)).is_err());
        assert!(negativity(&DensityMatrix::maximally_mixed(9), SubsystemDims::new(3, 3)).is_err());
    }

    #[test]
    fn ppt_tomogram_reconstructs_partial_transpose() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let basis = TwoSpinBasis::with_electron(Spin::ONE).unwrap();
        let gm = QuadratureGrid::for_spin(Spin::HALF);
        let ge = QuadratureGrid::for_spin(Spin::ONE);
        for _ in 0..5 {
            let rho = DensityMatrix::random(6, &mut rng);
            let w = TwoSpinTomogram::sample(&rho, &basis, &gm, &ge).unwrap();
            let wp = ppt_tomogram(&w);
            let back = reconstruct_two_spin_operator(&wp).unwrap();
            let pt = partial_transpose(rho.matrix(), basis.dims(), Subsystem::A).unwrap();
            assert!(max_abs_diff(&back, &pt) < 1e-10);
            assert_eq!(ppt_tomogram(&wp), w);
        }
    }

    #[test]
    fn real_product_state_tomogram_is_ppt_invariant() {
        let basis = TwoSpinBasis::qubits();
        let rm = DensityMatrix::qubit([0.3, 0.0, 0.5]).unwrap();
        let re = DensityMatrix::qubit([0.1, 0.4, -0.2]).unwrap();
        let g = QuadratureGrid::for_spin(Spin::HALF);
        let w = TwoSpinTomogram::sample(&DensityMatrix::product(&rm, &re), &basis, &g, &g).unwrap();
        let wp = ppt_tomogram(&w);
        assert!(w.values().iter().zip(wp.values()).all(|(a, b)| (a - b).abs() < 1e-15));
    }

    #[test]
    fn report_json_fields() {
        let r = EntanglementReport::evaluate(&DensityMatrix::singlet(), SubsystemDims::new(2, 2), 0.5, true, Exec::Sequential)
            .unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        for key in ["t", "E", "M2", "M3", "M4", "max_bell", "negativity"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        let q = EntanglementReport::evaluate(&DensityMatrix::maximally_mixed(6), SubsystemDims::new(2, 3), 0.0, true, Exec::Sequential)
            .unwrap();
        assert!(q.e.is_none() && q.negativity.abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn coefficients_are_symmetric_polynomials(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rho = DensityMatrix::random(4, &mut rng);
            for lambda in [rho.matrix().clone(), partial_transpose(rho.matrix(), SubsystemDims::new(2, 2), Subsystem::A).unwrap()] {
                let (l, _) = eig_hermitian(&crate::linalg::hermitize(&lambda)).unwrap();
                let mut e2 = 0.0;
                let mut e3 = 0.0;
                for i in 0..4 {
                    for j in i + 1..4 {
                        e2 += l[i] * l[j];
                        for k in j + 1..4 {
                            e3 += l[i] * l[j] * l[k];
                        }
                    }
                }
                let e4 = l.iter().product::<f64>();
                let p = positivity_coefficients(&lambda).unwrap();
                prop_assert!((p.m2 - e2).abs() < 1e-12);
                prop_assert!((p.m3 - e3).abs() < 1e-12);
                prop_assert!((p.m4 - e4).abs() < 1e-12);
            }
        }

        #[test]
        fn m2_is_ppt_invariant(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rho = DensityMatrix::random(4, &mut rng);
            let a = positivity_coefficients(rho.matrix()).unwrap();
            let b = ppt_coefficients(&rho).unwrap();
            prop_assert!((a.m2 - b.m2).abs() < 1e-15);
        }

        #[test]
        fn e_and_negativity_agree_on_entanglement(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rank = 1 + (seed % 4) as usize;
            let rho = DensityMatrix::random_with_rank(4, rank, &mut rng);
            let e = entanglement_e(&rho).unwrap();
            let n = negativity(&rho, SubsystemDims::new(2, 2)).unwrap();
            prop_assert!(e >= 0.0);
            prop_assert_eq!(e > 1e-12, n > 1e-12, "E = {}, N = {}", e, n);
        }

        #[test]
        fn separable_mixtures_have_zero_indicators(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut m = ComplexMatrix::zeros(4, 4);
            let k = 1 + (seed % 5) as usize;
            for _ in 0..k {
                let a = DensityMatrix::random(2, &mut rng);
                let b = DensityMatrix::random(2, &mut rng);
                m += kron(a.matrix(), b.matrix()) * c(1.0 / k as f64, 0.0);
            }
            let rho = DensityMatrix::new(m).unwrap();
            prop_assert!(entanglement_e(&rho).unwrap() <= 1e-12);
            prop_assert!(negativity(&rho, SubsystemDims::new(2, 2)).unwrap() <= 1e-12);
        }
    }
}
