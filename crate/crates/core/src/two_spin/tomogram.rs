use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{cg_matrix, TwoSpinBasis, UNITARY_TOL};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::linalg::{c, kron, require_unitary, ComplexMatrix};
use crate::spin::{quantizer, Direction, QuadratureGrid, Spin};
use crate::state::DensityMatrix;

/// Individual two-spin tomogram on a product of sphere grids.
///
/// Values are laid out as
/// `((node_mu * n_e + node_e) * dim_mu + m_mu_index) * dim_e + m_e_index`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoSpinTomogram {
    basis: TwoSpinBasis,
    grid_mu: QuadratureGrid,
    grid_e: QuadratureGrid,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct TwoSpinRow {
    m_mu: f64,
    theta_mu: f64,
    phi_mu: f64,
    m_e: f64,
    theta_e: f64,
    phi_e: f64,
    probability: f64,
}

impl TwoSpinTomogram {
    pub fn sample(
        rho: &DensityMatrix,
        basis: &TwoSpinBasis,
        grid_mu: &QuadratureGrid,
        grid_e: &QuadratureGrid,
    ) -> Result<Self> {
        Self::sample_with(rho, basis, grid_mu, grid_e, Exec::Sequential)
    }

    pub fn sample_with(
        rho: &DensityMatrix,
        basis: &TwoSpinBasis,
        grid_mu: &QuadratureGrid,
        grid_e: &QuadratureGrid,
        exec: Exec,
    ) -> Result<Self> {
        basis.check_state(rho.matrix())?;
        let rot_e: Vec<ComplexMatrix> = grid_e
            .nodes()
            .iter()
            .map(|d| crate::spin::measurement_frame(basis.j_e(), d))
            .collect::<Result<_>>()?;
        let rows = exec.map(grid_mu.nodes(), |d| -> Result<Vec<f64>> {
            let rm = crate::spin::measurement_frame(basis.j_mu(), d)?;
            let mut out = Vec::with_capacity(rot_e.len() * basis.dim());
            for re in &rot_e {
                let u = kron(&rm, re);
                let m = &u * rho.matrix() * u.adjoint();
                out.extend((0..basis.dim()).map(|i| m[(i, i)].re));
            }
            Ok(out)
        });
        let mut values = Vec::with_capacity(grid_mu.len() * grid_e.len() * basis.dim());
        for r in rows {
            values.extend(r?);
        }
        Ok(Self {
            basis: *basis,
            grid_mu: grid_mu.clone(),
            grid_e: grid_e.clone(),
            values,
        })
    }

    pub fn from_values(
        basis: TwoSpinBasis,
        grid_mu: QuadratureGrid,
        grid_e: QuadratureGrid,
        values: Vec<f64>,
    ) -> Result<Self> {
        let n = grid_mu.len() * grid_e.len() * basis.dim();
        if values.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: values.len(),
            });
        }
        Ok(Self {
            basis,
            grid_mu,
            grid_e,
            values,
        })
    }

    pub fn basis(&self) -> &TwoSpinBasis {
        &self.basis
    }

    pub fn grid_mu(&self) -> &QuadratureGrid {
        &self.grid_mu
    }

    pub fn grid_e(&self) -> &QuadratureGrid {
        &self.grid_e
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Joint distribution at one pair of grid directions, composite-index order.
    pub fn cell(&self, node_mu: usize, node_e: usize) -> &[f64] {
        let d = self.basis.dim();
        let start = (node_mu * self.grid_e.len() + node_e) * d;
        &self.values[start..start + d]
    }

    pub fn value(&self, node_mu: usize, node_e: usize, m_mu_index: usize, m_e_index: usize) -> f64 {
        self.cell(node_mu, node_e)[m_mu_index * self.basis.j_e().dim() + m_e_index]
    }

    /// Same tomogram with the muon directions permuted: entry `node_mu` is
    /// taken from `source(node_mu)`.
    pub(crate) fn permute_mu(&self, source: impl Fn(usize) -> usize) -> Self {
        let block = self.grid_e.len() * self.basis.dim();
        let mut values = Vec::with_capacity(self.values.len());
        for a in 0..self.grid_mu.len() {
            let s = source(a);
            values.extend_from_slice(&self.values[s * block..(s + 1) * block]);
        }
        Self {
            values,
            ..self.clone()
        }
    }

    /// Probabilities lie in `[−tol, 1 + tol]` and sum to 1 per direction pair.
    pub fn check(&self, tol: f64) -> Result<()> {
        for (k, chunk) in self.values.chunks(self.basis.dim()).enumerate() {
            let s: f64 = chunk.iter().sum();
            if (s - 1.0).abs() > tol || chunk.iter().any(|&w| w < -tol || w > 1.0 + tol) {
                return Err(Error::OutOfRange(format!("direction pair {k}: {chunk:?}")));
            }
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let (jm, je) = (self.basis.j_mu(), self.basis.j_e());
        for (a, dm) in self.grid_mu.nodes().iter().enumerate() {
            for (b, de) in self.grid_e.nodes().iter().enumerate() {
                for i in 0..jm.dim() {
                    for k in 0..je.dim() {
                        w.serialize(TwoSpinRow {
                            m_mu: jm.m_of(i),
                            theta_mu: dm.theta(),
                            phi_mu: dm.phi(),
                            m_e: je.m_of(k),
                            theta_e: de.theta(),
                            phi_e: de.phi(),
                            probability: self.value(a, b, i, k),
                        })?;
                    }
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let rows: Vec<TwoSpinRow> = rdr.deserialize().collect::<std::result::Result<_, _>>()?;
        if rows.is_empty() {
            return Err(Error::Format("empty tomogram file".into()));
        }
        let basis = TwoSpinBasis::new(Spin::new(rows[0].m_mu)?, Spin::new(rows[0].m_e)?)?;
        let d = basis.dim();
        if rows.len() % d != 0 {
            return Err(Error::Format(format!("{} rows is not a multiple of {d}", rows.len())));
        }
        let pairs: Vec<&[TwoSpinRow]> = rows.chunks(d).collect();
        let same_mu = |x: &TwoSpinRow, y: &TwoSpinRow| x.theta_mu == y.theta_mu && x.phi_mu == y.phi_mu;
        let n_e = pairs.iter().take_while(|p| same_mu(&p[0], &pairs[0][0])).count();
        if pairs.len() % n_e != 0 {
            return Err(Error::Format("direction pairs do not form a product grid".into()));
        }
        let mu_angles: Vec<(f64, f64)> = pairs.iter().step_by(n_e).map(|p| (p[0].theta_mu, p[0].phi_mu)).collect();
        let e_angles: Vec<(f64, f64)> = pairs[..n_e].iter().map(|p| (p[0].theta_e, p[0].phi_e)).collect();
        let grid_mu = QuadratureGrid::from_angles(&mu_angles)?;
        let grid_e = QuadratureGrid::from_angles(&e_angles)?;
        let labels = basis.product_labels();
        for (k, p) in pairs.iter().enumerate() {
            let (a, b) = (k / n_e, k % n_e);
            for (row, &(tm, te)) in p.iter().zip(&labels) {
                let ok = row.theta_mu == mu_angles[a].0
                    && row.phi_mu == mu_angles[a].1
                    && row.theta_e == e_angles[b].0
                    && row.phi_e == e_angles[b].1
                    && (2.0 * row.m_mu - tm as f64).abs() < 1e-9
                    && (2.0 * row.m_e - te as f64).abs() < 1e-9;
                if !ok {
                    return Err(Error::Format(format!("row block {k} is out of order")));
                }
            }
        }
        let values = rows.iter().map(|r| r.probability).collect();
        Self::from_values(basis, grid_mu, grid_e, values)
    }
}

fn quantizer_table(spin: Spin, grid: &QuadratureGrid) -> Result<Vec<Vec<ComplexMatrix>>> {
    grid.nodes()
        .iter()
        .map(|d: &Direction| spin.projections().map(|tm| quantizer(spin, tm, d)).collect())
        .collect()
}

/// `Σ ∫∫ w D_μ ⊗ D_e` without any validity check on the result.
pub fn reconstruct_two_spin_operator(w: &TwoSpinTomogram) -> Result<ComplexMatrix> {
    let (jm, je) = (w.basis.j_mu(), w.basis.j_e());
    w.grid_mu.require_degree(2 * jm.twice() as usize)?;
    w.grid_e.require_degree(2 * je.twice() as usize)?;
    let qm = quantizer_table(jm, &w.grid_mu)?;
    let qe = quantizer_table(je, &w.grid_e)?;
    let mut acc = ComplexMatrix::zeros(w.basis.dim(), w.basis.dim());
    for (a, wa) in w.grid_mu.weights().iter().enumerate() {
        for i in 0..jm.dim() {
            let mut inner = ComplexMatrix::zeros(je.dim(), je.dim());
            for (b, wb) in w.grid_e.weights().iter().enumerate() {
                for k in 0..je.dim() {
                    inner += &qe[b][k] * c(wb * w.value(a, b, i, k), 0.0);
                }
            }
            acc += kron(&qm[a][i], &inner) * c(*wa, 0.0);
        }
    }
    Ok(acc)
}

/// Invert an individual two-spin tomogram to the density matrix.
pub fn reconstruct_two_spin(w: &TwoSpinTomogram) -> Result<DensityMatrix> {
    DensityMatrix::new(reconstruct_two_spin_operator(w)?)
}

/// Total tomogram `⟨L M| U ρ U† |L M⟩` computed from the individual tomogram
/// alone, by integrating it against `⟨L M| U (D_μ ⊗ D_e) U† |L M⟩`.
pub fn total_from_individual(w: &TwoSpinTomogram, u: &ComplexMatrix) -> Result<Vec<f64>> {
    w.basis.check_state(u)?;
    require_unitary(u, UNITARY_TOL)?;
    let v = cg_matrix(w.basis.j_mu(), w.basis.j_e())? * u;
    let rho = reconstruct_two_spin_operator(w)?;
    let m = &v * rho * v.adjoint();
    Ok((0..m.nrows()).map(|i| m[(i, i)].re).collect())
}
