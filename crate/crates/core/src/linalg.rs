//! Dense complex matrices and the handful of operations the rest of the
//! crate is built on.
//!
//! Composite indices follow `muon_index * dim_b + electron_index`, with both
//! factors ordered by descending projection.

use nalgebra::DMatrix;
pub use nalgebra::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type ComplexMatrix = DMatrix<C64>;

/// Relative Hermiticity tolerance for the eigensolver gate.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

/// Pauli matrices (σx, σy, σz).
pub fn pauli() -> [ComplexMatrix; 3] {
    let o = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    [
        ComplexMatrix::from_row_slice(2, 2, &[o, one, one, o]),
        ComplexMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
        ComplexMatrix::from_row_slice(2, 2, &[one, o, o, -one]),
    ]
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Factor dimensions of a bipartite space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SubsystemDims {
    pub dim_a: usize,
    pub dim_b: usize,
}

impl SubsystemDims {
    pub fn new(dim_a: usize, dim_b: usize) -> Self {
        Self { dim_a, dim_b }
    }

    pub fn total(&self) -> usize {
        self.dim_a * self.dim_b
    }

    fn check(&self, m: &ComplexMatrix) -> Result<()> {
        let n = self.total();
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: m.nrows().max(m.ncols()),
            });
        }
        Ok(())
    }
}

/// Which factor of a bipartite space (A is the muon).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Partial trace, keeping subsystem `keep`.
pub fn partial_trace(m: &ComplexMatrix, dims: SubsystemDims, keep: Subsystem) -> Result<ComplexMatrix> {
    dims.check(m)?;
    let (da, db) = (dims.dim_a, dims.dim_b);
    let out = match keep {
        Subsystem::A => ComplexMatrix::from_fn(da, da, |i, j| {
            (0..db).map(|k| m[(i * db + k, j * db + k)]).sum()
        }),
        Subsystem::B => ComplexMatrix::from_fn(db, db, |i, j| {
            (0..da).map(|k| m[(k * db + i, k * db + j)]).sum()
        }),
    };
    Ok(out)
}

/// Transpose the indices of one factor.
pub fn partial_transpose(m: &ComplexMatrix, dims: SubsystemDims, which: Subsystem) -> Result<ComplexMatrix> {
    dims.check(m)?;
    let db = dims.dim_b;
    let n = dims.total();
    Ok(ComplexMatrix::from_fn(n, n, |r, s| {
        let (i, k) = (r / db, r % db);
        let (j, l) = (s / db, s % db);
        match which {
            Subsystem::A => m[(j * db + k, i * db + l)],
            Subsystem::B => m[(i * db + l, j * db + k)],
        }
    }))
}

pub fn frobenius(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// `max_abs_diff(a, e^{iχ} b)` with χ chosen to align the two matrices in the
/// least-squares sense.
pub fn phase_insensitive_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let overlap: C64 = a.iter().zip(b.iter()).map(|(x, y)| y.conj() * x).sum();
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        c(1.0, 0.0)
    };
    max_abs_diff(a, &(b * phase))
}

/// Largest entrywise modulus of `m - m†`.
pub fn hermitian_deviation(m: &ComplexMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

/// `(m + m†) / 2`.
pub fn hermitize(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()) * c(0.5, 0.0)
}

/// Largest entrywise modulus of `U†U - I`.
pub fn unitarity_error(u: &ComplexMatrix) -> f64 {
    if u.nrows() != u.ncols() {
        return f64::INFINITY;
    }
    max_abs_diff(&(u.adjoint() * u), &identity(u.nrows()))
}

pub fn require_unitary(u: &ComplexMatrix, tol: f64) -> Result<()> {
    let e = unitarity_error(u);
    if e > tol {
        return Err(Error::NotUnitary(e));
    }
    Ok(())
}

fn require_hermitian(m: &ComplexMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    let dev = hermitian_deviation(m);
    if dev > HERMITIAN_TOL * frobenius(m) {
        return Err(Error::NotHermitian(dev));
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix: ascending eigenvalues and the
/// unitary matrix whose columns are the matching eigenvectors.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    require_hermitian(m)?;
    let eig = m.clone().symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])]);
    Ok((values, vectors))
}

/// `V f(Λ) V†` for a Hermitian matrix with eigendecomposition `(Λ, V)`.
pub fn spectral_apply(values: &[f64], vectors: &ComplexMatrix, f: impl Fn(f64) -> C64) -> ComplexMatrix {
    let n = values.len();
    let mut scaled = vectors.clone();
    for k in 0..n {
        let fk = f(values[k]);
        for r in 0..n {
            scaled[(r, k)] *= fk;
        }
    }
    scaled * vectors.adjoint()
}

/// `exp(-i h t / ħ)` via the eigendecomposition of `h`.
pub fn propagator(h: &ComplexMatrix, t: f64, hbar: f64) -> Result<ComplexMatrix> {
    let (values, vectors) = eig_hermitian(h)?;
    Ok(spectral_apply(&values, &vectors, |e| C64::from_polar(1.0, -e * t / hbar)))
}
