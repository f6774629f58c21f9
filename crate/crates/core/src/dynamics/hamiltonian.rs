use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::linalg::{c, identity, kron, ComplexMatrix};
use crate::spin::{Direction, Spin};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HamiltonianFamily {
    /// `ħω₀ J_μ·J_e`.
    HyperfineOnly,
    /// Isotropic contact term plus both Zeeman terms.
    IsotropicMu,
    /// Isotropic muonium plus an axial term `ΔA (N·J_μ)(N·J_e)`.
    AnisotropicMuStar,
}

/// Static muon–electron Hamiltonian. Frequencies are energies over ħ in
/// rad/ns; the field is in Gauss.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    pub family: HamiltonianFamily,
    pub a_coupling: f64,
    pub delta_a: f64,
    /// Hyperfine frequency for `HyperfineOnly`.
    pub omega0: f64,
    pub b_field: Vector3<f64>,
    pub anisotropy_axis: Option<Direction>,
    pub j_e: Spin,
}

impl HamiltonianSpec {
    pub fn hyperfine(omega0: f64, j_e: Spin) -> Self {
        Self {
            family: HamiltonianFamily::HyperfineOnly,
            a_coupling: omega0,
            delta_a: 0.0,
            omega0,
            b_field: Vector3::zeros(),
            anisotropy_axis: None,
            j_e,
        }
    }

    pub fn isotropic(a_coupling: f64, b_field: Vector3<f64>) -> Self {
        Self {
            family: HamiltonianFamily::IsotropicMu,
            a_coupling,
            delta_a: 0.0,
            omega0: a_coupling,
            b_field,
            anisotropy_axis: None,
            j_e: Spin::HALF,
        }
    }

    pub fn mu_star(a_coupling: f64, delta_a: f64, axis: Direction, b_field: Vector3<f64>) -> Self {
        Self {
            family: HamiltonianFamily::AnisotropicMuStar,
            a_coupling,
            delta_a,
            omega0: a_coupling,
            b_field,
            anisotropy_axis: Some(axis),
            j_e: Spin::HALF,
        }
    }

    pub fn with_electron(mut self, j_e: Spin) -> Self {
        self.j_e = j_e;
        self
    }

    /// Contact coupling actually used: `ω₀` for the hyperfine-only family.
    pub fn contact(&self) -> f64 {
        match self.family {
            HamiltonianFamily::HyperfineOnly => self.omega0,
            _ => self.a_coupling,
        }
    }

    pub fn dim(&self) -> usize {
        2 * self.j_e.dim()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InconsistentSpec(msg.into()));
        if !(self.j_e.twice() >= 1 && self.j_e.twice() <= 3) {
            return bad("electron spin must be 1/2, 1 or 3/2");
        }
        let finite = [self.a_coupling, self.delta_a, self.omega0]
            .iter()
            .chain(self.b_field.iter())
            .all(|v| v.is_finite());
        if !finite {
            return bad("non-finite parameter");
        }
        match self.family {
            HamiltonianFamily::HyperfineOnly => {
                if self.b_field.norm() != 0.0 {
                    return bad("hyperfine-only Hamiltonian takes no magnetic field");
                }
                if self.delta_a != 0.0 || self.anisotropy_axis.is_some() {
                    return bad("hyperfine-only Hamiltonian takes no anisotropy");
                }
            }
            HamiltonianFamily::IsotropicMu => {
                if self.delta_a != 0.0 || self.anisotropy_axis.is_some() {
                    return bad("isotropic muonium takes no anisotropy");
                }
            }
            HamiltonianFamily::AnisotropicMuStar => {
                if self.anisotropy_axis.is_none() {
                    return bad("anisotropic muonium needs an anisotropy axis");
                }
            }
        }
        Ok(())
    }
}

fn dot_j(v: &Vector3<f64>, ops: &[ComplexMatrix; 3]) -> ComplexMatrix {
    &ops[0] * c(v.x, 0.0) + &ops[1] * c(v.y, 0.0) + &ops[2] * c(v.z, 0.0)
}

/// `H/ħ` in rad/ns, product basis with the muon first.
pub fn build_hamiltonian(spec: &HamiltonianSpec, constants: &PhysicalConstants) -> Result<ComplexMatrix> {
    spec.validate()?;
    let jm = Spin::HALF.operators();
    let je = spec.j_e.operators();
    let im = identity(2);
    let ie = identity(spec.j_e.dim());
    let mut h = ComplexMatrix::zeros(spec.dim(), spec.dim());
    for k in 0..3 {
        h += kron(&jm[k], &je[k]);
    }
    h *= c(spec.contact(), 0.0);
    if spec.family == HamiltonianFamily::HyperfineOnly {
        return Ok(h);
    }
    let b = spec.b_field;
    h -= kron(&dot_j(&b, &jm), &ie) * c(constants.gamma_mu(), 0.0);
    h += kron(&im, &dot_j(&b, &je)) * c(constants.gamma_e(), 0.0);
    if let Some(axis) = &spec.anisotropy_axis {
        let n = axis.unit();
        h += kron(&dot_j(&n, &jm), &dot_j(&n, &je)) * c(spec.delta_a, 0.0);
    }
    Ok(h)
}

/// Frequency abbreviations of the closed-form propagators (rad/ns), with
/// `B` the field magnitude.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Abbreviations {
    pub a: f64,
    pub b_plus: f64,
    pub b_minus: f64,
    pub c: f64,
    pub d: f64,
    pub f: f64,
    pub h: f64,
}

impl Abbreviations {
    pub fn new(spec: &HamiltonianSpec, constants: &PhysicalConstants) -> Self {
        let big_a = spec.contact();
        let big_d = spec.delta_a;
        let b = spec.b_field.norm();
        let (gm, ge) = (constants.gamma_mu(), constants.gamma_e());
        Self {
            a: big_a / 4.0,
            b_plus: b * (gm + ge) / 2.0,
            b_minus: b * (gm - ge) / 2.0,
            c: (big_a * big_a + b * b * (gm + ge).powi(2)).sqrt() / 2.0,
            d: big_d / 4.0,
            f: (big_d * big_d + 4.0 * b * b * (gm - ge).powi(2)).sqrt() / 4.0,
            h: ((big_a + big_d / 2.0).powi(2) + b * b * (gm + ge).powi(2)).sqrt() / 2.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eig_hermitian, hermitian_deviation, max_abs_diff};

    #[test]
    fn hyperfine_spectrum() {
        let w0 = 2.7;
        let h = build_hamiltonian(&HamiltonianSpec::hyperfine(w0, Spin::HALF), &PhysicalConstants::default()).unwrap();
        let (vals, _) = eig_hermitian(&h).unwrap();
        let expect = [-0.75 * w0, 0.25 * w0, 0.25 * w0, 0.25 * w0];
        assert!(vals.iter().zip(expect).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn spin_one_hyperfine_spectrum() {
        // J·J = (L(L+1) − 3/4 − 2)/2 for L = 1/2, 3/2.
        let h = build_hamiltonian(&HamiltonianSpec::hyperfine(1.0, Spin::ONE), &PhysicalConstants::default()).unwrap();
        let (vals, _) = eig_hermitian(&h).unwrap();
        let expect = [-1.0, -1.0, 0.5, 0.5, 0.5, 0.5];
        assert!(vals.iter().zip(expect).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn family_limits() {
        let k = PhysicalConstants::default();
        let hf = build_hamiltonian(&HamiltonianSpec::hyperfine(3.0, Spin::HALF), &k).unwrap();
        let iso0 = build_hamiltonian(&HamiltonianSpec::isotropic(3.0, Vector3::zeros()), &k).unwrap();
        assert!(max_abs_diff(&hf, &iso0) < 1e-15);
        let b = Vector3::new(10.0, -4.0, 30.0);
        let iso = build_hamiltonian(&HamiltonianSpec::isotropic(3.0, b), &k).unwrap();
        let star = build_hamiltonian(&HamiltonianSpec::mu_star(3.0, 0.0, Direction::new(0.3, 1.0), b), &k).unwrap();
        assert!(max_abs_diff(&iso, &star) < 1e-15);
        assert!(hermitian_deviation(&star) < 1e-15);
    }

    #[test]
    fn inconsistent_specs() {
        let k = PhysicalConstants::default();
        let mut s = HamiltonianSpec::hyperfine(1.0, Spin::HALF);
        s.b_field = Vector3::new(0.0, 0.0, 1.0);
        assert!(matches!(build_hamiltonian(&s, &k), Err(Error::InconsistentSpec(_))));
        let mut s = HamiltonianSpec::mu_star(1.0, 0.5, Direction::x(), Vector3::zeros());
        s.anisotropy_axis = None;
        assert!(build_hamiltonian(&s, &k).is_err());
        let s = HamiltonianSpec::hyperfine(1.0, Spin::TWO);
        assert!(build_hamiltonian(&s, &k).is_err());
        let mut s = HamiltonianSpec::isotropic(1.0, Vector3::zeros());
        s.delta_a = 1.0;
        assert!(build_hamiltonian(&s, &k).is_err());
    }
}
