//! Muon-electron pairs: Clebsch-Gordan coupling and the individual, reduced
//! and total two-spin tomograms.

mod tomogram;

pub use tomogram::{reconstruct_two_spin, reconstruct_two_spin_operator, total_from_individual, TwoSpinTomogram};

use crate::error::{Error, Result};
use crate::linalg::{c, kron, partial_trace, require_unitary, ComplexMatrix, Subsystem, SubsystemDims};
use crate::spin::{clebsch_gordan, measurement_frame, reconstruct_operator, rotation_matrix, tomogram, Direction, QuadratureGrid, Spin};
use crate::state::DensityMatrix;

const UNITARY_TOL: f64 = 1e-10;

/// Muon spin 1/2 coupled to an electron shell of spin `j_e`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TwoSpinBasis {
    j_mu: Spin,
    j_e: Spin,
}

impl TwoSpinBasis {
    pub fn new(j_mu: Spin, j_e: Spin) -> Result<Self> {
        if j_mu != Spin::HALF {
            return Err(Error::UnsupportedSpin(j_mu.j()));
        }
        if !(1..=3).contains(&j_e.twice()) {
            return Err(Error::UnsupportedSpin(j_e.j()));
        }
        Ok(Self { j_mu, j_e })
    }

    /// Muonium: two spins 1/2.
    pub fn qubits() -> Self {
        Self {
            j_mu: Spin::HALF,
            j_e: Spin::HALF,
        }
    }

    pub fn with_electron(j_e: Spin) -> Result<Self> {
        Self::new(Spin::HALF, j_e)
    }

    pub fn j_mu(&self) -> Spin {
        self.j_mu
    }

    pub fn j_e(&self) -> Spin {
        self.j_e
    }

    pub fn dims(&self) -> SubsystemDims {
        SubsystemDims::new(self.j_mu.dim(), self.j_e.dim())
    }

    pub fn dim(&self) -> usize {
        self.dims().total()
    }

    /// `(2m_μ, 2m_e)` in composite-index order.
    pub fn product_labels(&self) -> Vec<(i32, i32)> {
        self.j_mu
            .projections()
            .flat_map(|a| self.j_e.projections().map(move |b| (a, b)))
            .collect()
    }

    /// `(L, 2M)` ordered by L descending, then M descending.
    pub fn coupled_labels(&self) -> Vec<(Spin, i32)> {
        let (a, b) = (self.j_mu.twice(), self.j_e.twice());
        let mut out = Vec::with_capacity(self.dim());
        let mut tl = a + b;
        loop {
            let l = Spin::from_twice(tl);
            out.extend(l.projections().map(|tm| (l, tm)));
            if tl == a.abs_diff(b) {
                break;
            }
            tl -= 2;
        }
        out
    }

    /// Total spins present, descending.
    pub fn total_spins(&self) -> Vec<Spin> {
        let mut v: Vec<Spin> = self.coupled_labels().iter().map(|x| x.0).collect();
        v.dedup();
        v
    }

    /// Error unless `m` is a square matrix of the basis dimension.
    pub fn check_state(&self, m: &ComplexMatrix) -> Result<()> {
        if m.nrows() != self.dim() || m.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: m.nrows(),
            });
        }
        Ok(())
    }
}

/// Change of basis from product states (columns) to coupled states (rows).
///
/// An operator `X` in the product basis reads `U_CG X U_CG†` in the coupled
/// basis.
pub fn cg_matrix(j_mu: Spin, j_e: Spin) -> Result<ComplexMatrix> {
    let basis = TwoSpinBasis::new(j_mu, j_e)?;
    let coupled = basis.coupled_labels();
    let product = basis.product_labels();
    let (a, b) = (j_mu.twice() as i32, j_e.twice() as i32);
    Ok(ComplexMatrix::from_fn(basis.dim(), basis.dim(), |r, col| {
        let (l, tm) = coupled[r];
        let (ma, mb) = product[col];
        c(clebsch_gordan(a, ma, b, mb, l.twice() as i32, tm), 0.0)
    }))
}

fn diag_re(m: &ComplexMatrix) -> Vec<f64> {
    (0..m.nrows()).map(|i| m[(i, i)].re).collect()
}

/// Diagonal of `U ρ U†` in the product basis.
pub fn individual_tomogram_unitary(rho: &DensityMatrix, u: &ComplexMatrix) -> Result<Vec<f64>> {
    if u.nrows() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: u.nrows(),
        });
    }
    require_unitary(u, UNITARY_TOL)?;
    Ok(diag_re(&(u * rho.matrix() * u.adjoint())))
}

/// Joint probabilities `w(m_μ, n_μ, m_e, n_e)` in composite-index order.
pub fn individual_tomogram(
    rho: &DensityMatrix,
    basis: &TwoSpinBasis,
    dir_mu: &Direction,
    dir_e: &Direction,
) -> Result<Vec<f64>> {
    basis.check_state(rho.matrix())?;
    let u = kron(&measurement_frame(basis.j_mu, dir_mu)?, &measurement_frame(basis.j_e, dir_e)?);
    Ok(diag_re(&(&u * rho.matrix() * u.adjoint())))
}

/// Muon marginal: the single-spin tomogram of `Tr_e ρ`.
pub fn reduced_tomogram(rho: &DensityMatrix, basis: &TwoSpinBasis, dir_mu: &Direction) -> Result<Vec<f64>> {
    basis.check_state(rho.matrix())?;
    let red = DensityMatrix::from_trusted(partial_trace(rho.matrix(), basis.dims(), Subsystem::A)?);
    tomogram(&red, basis.j_mu, dir_mu)
}

/// `⟨L M| U ρ U† |L M⟩` over coupled labels.
pub fn total_tomogram(rho: &DensityMatrix, basis: &TwoSpinBasis, u: &ComplexMatrix) -> Result<Vec<f64>> {
    basis.check_state(rho.matrix())?;
    basis.check_state(u)?;
    require_unitary(u, UNITARY_TOL)?;
    let cg = cg_matrix(basis.j_mu, basis.j_e)?;
    let v = &cg * u;
    Ok(diag_re(&(&v * rho.matrix() * v.adjoint())))
}

/// `⊕_L R^(L)(N)` in the coupled basis.
pub fn blockdiag_rotation(basis: &TwoSpinBasis, n: &Direction) -> Result<ComplexMatrix> {
    let mut out = ComplexMatrix::zeros(basis.dim(), basis.dim());
    let mut offset = 0;
    for l in basis.total_spins() {
        let r = rotation_matrix(l, n)?;
        out.view_mut((offset, offset), (l.dim(), l.dim())).copy_from(&r);
        offset += l.dim();
    }
    Ok(out)
}

/// `U_CG (R^(j_μ)(N) ⊗ R^(j_e)(N)) U_CG†`, equal to [`blockdiag_rotation`].
pub fn cg_conjugated_rotation(basis: &TwoSpinBasis, n: &Direction) -> Result<ComplexMatrix> {
    let cg = cg_matrix(basis.j_mu, basis.j_e)?;
    let r = kron(&rotation_matrix(basis.j_mu, n)?, &rotation_matrix(basis.j_e, n)?);
    Ok(&cg * r * cg.adjoint())
}

/// `f^(L)(M, N)`: total-spin distribution along `N`, over coupled labels.
///
/// Only the blocks of ρ diagonal in L contribute, so coherences between
/// different L are invisible here.
pub fn total_pdf(rho: &DensityMatrix, basis: &TwoSpinBasis, n: &Direction) -> Result<Vec<f64>> {
    basis.check_state(rho.matrix())?;
    let v = blockdiag_rotation(basis, n)?.adjoint() * cg_matrix(basis.j_mu, basis.j_e)?;
    Ok(diag_re(&(&v * rho.matrix() * v.adjoint())))
}

/// `f^(L)(M, N)` sampled on a grid; `values[node * dim + coupled_index]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TotalPdfSamples {
    pub basis: TwoSpinBasis,
    pub grid: QuadratureGrid,
    pub values: Vec<f64>,
}

impl TotalPdfSamples {
    pub fn sample(rho: &DensityMatrix, basis: &TwoSpinBasis, grid: &QuadratureGrid) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len() * basis.dim());
        for n in grid.nodes() {
            values.extend(total_pdf(rho, basis, n)?);
        }
        Ok(Self {
            basis: *basis,
            grid: grid.clone(),
            values,
        })
    }
}

/// Recover `⊕_L ρ^(L)` (coupled basis) from sampled `f^(L)` with per-block
/// quantizers.
pub fn reconstruct_blockdiag(samples: &TotalPdfSamples) -> Result<ComplexMatrix> {
    let basis = &samples.basis;
    let dim = basis.dim();
    if samples.values.len() != samples.grid.len() * dim {
        return Err(Error::DimensionMismatch {
            expected: samples.grid.len() * dim,
            found: samples.values.len(),
        });
    }
    let mut out = ComplexMatrix::zeros(dim, dim);
    let mut offset = 0;
    for l in basis.total_spins() {
        let block_values: Vec<f64> = samples
            .values
            .chunks(dim)
            .flat_map(|row| row[offset..offset + l.dim()].iter().copied())
            .collect();
        let block = reconstruct_operator(l, &samples.grid, &block_values)?;
        out.view_mut((offset, offset), (l.dim(), l.dim())).copy_from(&block);
        offset += l.dim();
    }
    Ok(out)
}
