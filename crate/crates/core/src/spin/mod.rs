//! Single-spin machinery: spin labels, directions, Wigner functions,
//! sphere quadrature and spin tomograms.

mod direction;
mod quadrature;
mod tomogram;
mod wigner;

pub use direction::Direction;
pub use quadrature::{gauss_legendre, QuadratureGrid};
pub use tomogram::{
    dequantizer, dual_basis, operator_symbol, quantizer, quantizer_kernel, quantizer_wigner,
    measurement_frame, reconstruct_from_sphere, reconstruct_operator, reconstruct_qubit_three_directions, rotation_matrix,
    tomogram, SpinTomogram,
};
pub use wigner::{clebsch_gordan, three_j, wigner_small_d};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, ComplexMatrix};

/// Spin quantum number `j`, stored as `2j`.
///
/// Projections are passed around as `2m` and ordered descending, so index 0
/// is `m = +j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Spin(u32);

impl Spin {
    pub const ZERO: Spin = Spin(0);
    pub const HALF: Spin = Spin(1);
    pub const ONE: Spin = Spin(2);
    pub const THREE_HALVES: Spin = Spin(3);
    pub const TWO: Spin = Spin(4);

    pub const fn from_twice(tj: u32) -> Self {
        Spin(tj)
    }

    /// Parse a non-negative half-integer.
    pub fn new(j: f64) -> Result<Self> {
        let tj = (2.0 * j).round();
        if !j.is_finite() || j < 0.0 || (2.0 * j - tj).abs() > 1e-9 {
            return Err(Error::UnsupportedSpin(j));
        }
        Ok(Spin(tj as u32))
    }

    pub fn twice(self) -> u32 {
        self.0
    }

    pub fn j(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub fn dim(self) -> usize {
        self.0 as usize + 1
    }

    /// `2m` for each basis state, descending.
    pub fn projections(self) -> impl Iterator<Item = i32> + Clone {
        let tj = self.0 as i32;
        (0..=self.0 as i32).map(move |i| tj - 2 * i)
    }

    /// `m` of the basis state at `index`.
    pub fn m_of(self, index: usize) -> f64 {
        self.j() - index as f64
    }

    /// Basis index of the projection `2m`.
    pub fn index_of(self, tm: i32) -> Result<usize> {
        let tj = self.0 as i32;
        if tm.abs() > tj || (tj - tm) % 2 != 0 {
            return Err(Error::InvalidProjection(format!("2m = {tm} for j = {self}")));
        }
        Ok(((tj - tm) / 2) as usize)
    }

    /// Spin operators `(Jx, Jy, Jz)` in units of ħ.
    pub fn operators(self) -> [ComplexMatrix; 3] {
        let n = self.dim();
        let j = self.j();
        let mut jp = ComplexMatrix::zeros(n, n);
        for i in 1..n {
            let m = self.m_of(i);
            jp[(i - 1, i)] = c((j * (j + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
        }
        let jm = jp.adjoint();
        let jx = (&jp + &jm) * c(0.5, 0.0);
        let jy = (&jp - &jm) * c(0.0, -0.5);
        let jz = ComplexMatrix::from_fn(n, n, |r, s| if r == s { c(self.m_of(r), 0.0) } else { c(0.0, 0.0) });
        [jx, jy, jz]
    }
}

impl TryFrom<f64> for Spin {
    type Error = Error;
    fn try_from(j: f64) -> Result<Self> {
        Spin::new(j)
    }
}

impl From<Spin> for f64 {
    fn from(s: Spin) -> f64 {
        s.j()
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    #[test]
    fn labels() {
        assert_eq!(Spin::new(1.5).unwrap(), Spin::THREE_HALVES);
        assert!(Spin::new(0.7).is_err());
        assert!(Spin::new(-0.5).is_err());
        assert_eq!(Spin::ONE.projections().collect::<Vec<_>>(), vec![2, 0, -2]);
        assert_eq!(Spin::HALF.index_of(-1).unwrap(), 1);
        assert!(Spin::HALF.index_of(0).is_err());
        assert_eq!(Spin::HALF.to_string(), "1/2");
        assert_eq!(Spin::TWO.to_string(), "2");
    }

    #[test]
    fn angular_momentum_algebra() {
        for s in [Spin::HALF, Spin::ONE, Spin::THREE_HALVES, Spin::TWO] {
            let [jx, jy, jz] = s.operators();
            let comm = &jx * &jy - &jy * &jx;
            assert!(max_abs_diff(&comm, &(&jz * c(0.0, 1.0))) < 1e-14);
            let casimir = &jx * &jx + &jy * &jy + &jz * &jz;
            let j = s.j();
            let expect = ComplexMatrix::identity(s.dim(), s.dim()) * c(j * (j + 1.0), 0.0);
            assert!(max_abs_diff(&casimir, &expect) < 1e-13);
        }
    }
}
