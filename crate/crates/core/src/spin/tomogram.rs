use std::io::{Read, Write};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{three_j, wigner_small_d, Direction, QuadratureGrid, Spin};
use crate::error::{Error, Result};
use crate::linalg::{c, ComplexMatrix, C64};
use crate::state::DensityMatrix;

const MAX_TWICE_J: u32 = 4;

fn check_spin(spin: Spin) -> Result<()> {
    if spin.twice() > MAX_TWICE_J {
        return Err(Error::UnsupportedSpin(spin.j()));
    }
    Ok(())
}

/// `R(n) = exp(−iθ n⊥·J)` in the `|j m⟩` basis (m descending).
///
/// Entries are `e^{−i(m'−m)φ} d^j_{m'm}(θ)`.
pub fn rotation_matrix(spin: Spin, dir: &Direction) -> Result<ComplexMatrix> {
    check_spin(spin)?;
    let tj = spin.twice() as i32;
    let projections: Vec<i32> = spin.projections().collect();
    let (theta, phi) = (dir.theta(), dir.phi());
    let n = spin.dim();
    let mut r = ComplexMatrix::zeros(n, n);
    for (i, &tmp) in projections.iter().enumerate() {
        for (k, &tm) in projections.iter().enumerate() {
            let d = wigner_small_d(tj, tmp, tm, theta)?;
            r[(i, k)] = C64::from_polar(d, -0.5 * (tmp - tm) as f64 * phi);
        }
    }
    Ok(r)
}

/// `R(n)†`, the frame whose basis states `|m⟩` are the eigenstates of `n·J`.
///
/// `R(n)` carries ẑ onto `n`, so projections along `n` are read off after
/// conjugating by its adjoint. Equal to `R(θ, φ + π)`.
pub fn measurement_frame(spin: Spin, dir: &Direction) -> Result<ComplexMatrix> {
    Ok(rotation_matrix(spin, dir)?.adjoint())
}

/// Diagonal of `R† a R`: the tomographic symbol of an arbitrary operator.
pub fn operator_symbol(a: &ComplexMatrix, spin: Spin, dir: &Direction) -> Result<Vec<C64>> {
    if a.nrows() != spin.dim() || a.ncols() != spin.dim() {
        return Err(Error::DimensionMismatch {
            expected: spin.dim(),
            found: a.nrows(),
        });
    }
    let r = measurement_frame(spin, dir)?;
    let rot = &r * a * r.adjoint();
    Ok((0..spin.dim()).map(|i| rot[(i, i)]).collect())
}

/// `w(m, n) = ⟨j m| R(n)† ρ R(n) |j m⟩` for every `m`, descending: the
/// probability of projection `m` along `n`.
pub fn tomogram(rho: &DensityMatrix, spin: Spin, dir: &Direction) -> Result<Vec<f64>> {
    Ok(operator_symbol(rho.matrix(), spin, dir)?.into_iter().map(|z| z.re).collect())
}

/// `R |m⟩⟨m| R†`, the projector whose expectation is `w(m, n)`.
pub fn dequantizer(spin: Spin, tm: i32, dir: &Direction) -> Result<ComplexMatrix> {
    let i = spin.index_of(tm)?;
    let r = measurement_frame(spin, dir)?;
    let row = r.row(i);
    Ok(row.adjoint() * row)
}

/// `K(m, m') = Σ_k (2k+1)² (−1)^{2j−m−m'} (j j k; m −m 0)(j j k; m' −m' 0)`.
///
/// The quantizer at ẑ is `diag_m' K(m, m')`.
pub fn quantizer_kernel(spin: Spin, tm: i32, tm2: i32) -> f64 {
    let tj = spin.twice() as i32;
    let phase = if ((2 * tj - tm - tm2) / 2) % 2 == 0 { 1.0 } else { -1.0 };
    (0..=tj)
        .map(|k| {
            let f = (2 * k + 1) as f64;
            f * f * three_j(tj, tj, 2 * k, tm, -tm, 0) * three_j(tj, tj, 2 * k, tm2, -tm2, 0)
        })
        .sum::<f64>()
        * phase
}

/// Quantizer `D(m, n) = R(n) [Σ_{m'} K(m, m') |m'⟩⟨m'|] R(n)†`, dual to the
/// dequantizer under the normalized sphere measure.
///
/// For `j = 1/2` this is `I/2 + 3m (n·σ)`.
pub fn quantizer(spin: Spin, tm: i32, dir: &Direction) -> Result<ComplexMatrix> {
    spin.index_of(tm)?;
    let r = measurement_frame(spin, dir)?;
    Ok(quantizer_from_rotation(spin, tm, &r))
}

fn quantizer_from_rotation(spin: Spin, tm: i32, r: &ComplexMatrix) -> ComplexMatrix {
    let mut kr = r.clone();
    for (i, tm2) in spin.projections().enumerate() {
        let k = c(quantizer_kernel(spin, tm, tm2), 0.0);
        for col in 0..spin.dim() {
            kr[(i, col)] *= k;
        }
    }
    r.adjoint() * kr
}

/// The same quantizer assembled directly from D-functions:
/// `⟨m1|D|m2⟩ = Σ_k (2k+1)² (−1)^{2j−m−m1} (j j k; m −m 0)(j j k; m1 −m2 −q) d^k_{0q}(θ) e^{−iqφ}`
/// with `q = m1 − m2`, evaluated at azimuth `φ + π` to match [`measurement_frame`].
pub fn quantizer_wigner(spin: Spin, tm: i32, dir: &Direction) -> Result<ComplexMatrix> {
    check_spin(spin)?;
    spin.index_of(tm)?;
    let tj = spin.twice() as i32;
    let proj: Vec<i32> = spin.projections().collect();
    let n = spin.dim();
    let mut out = ComplexMatrix::zeros(n, n);
    for (a, &tm1) in proj.iter().enumerate() {
        for (b, &tm2) in proj.iter().enumerate() {
            let tq = tm1 - tm2;
            let phase = if ((2 * tj - tm - tm1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
            let mut sum = 0.0;
            for k in 0..=tj {
                if tq.abs() > 2 * k {
                    continue;
                }
                let f = (2 * k + 1) as f64;
                sum += f
                    * f
                    * three_j(tj, tj, 2 * k, tm, -tm, 0)
                    * three_j(tj, tj, 2 * k, tm1, -tm2, -tq)
                    * wigner_small_d(2 * k, 0, tq, dir.theta())?;
            }
            out[(a, b)] = C64::from_polar(phase * sum, -0.5 * tq as f64 * (dir.phi() + std::f64::consts::PI));
        }
    }
    Ok(out)
}

/// `Σ_m ∫ w(m, n) D(m, n) dn/4π` for symbol values laid out as
/// `values[node * dim + m_index]`.
pub fn reconstruct_operator(spin: Spin, grid: &QuadratureGrid, values: &[f64]) -> Result<ComplexMatrix> {
    check_spin(spin)?;
    let dim = spin.dim();
    if values.len() != grid.len() * dim {
        return Err(Error::DimensionMismatch {
            expected: grid.len() * dim,
            found: values.len(),
        });
    }
    grid.require_degree(2 * spin.twice() as usize)?;
    let kernel: Vec<Vec<f64>> = spin
        .projections()
        .map(|tm| spin.projections().map(|tm2| quantizer_kernel(spin, tm, tm2)).collect())
        .collect();
    let mut acc = ComplexMatrix::zeros(dim, dim);
    for (node, (dir, weight)) in grid.nodes().iter().zip(grid.weights()).enumerate() {
        // Σ_m w(m) K(m, ·), then a single conjugation.
        let diag: Vec<f64> = (0..dim)
            .map(|i2| (0..dim).map(|i| values[node * dim + i] * kernel[i][i2]).sum::<f64>() * weight)
            .collect();
        let r = measurement_frame(spin, dir)?;
        let mut kr = r.clone();
        for (i2, d) in diag.iter().enumerate() {
            for col in 0..dim {
                kr[(i2, col)] *= c(*d, 0.0);
            }
        }
        acc += r.adjoint() * kr;
    }
    Ok(acc)
}

/// Single-spin tomogram sampled on a sphere quadrature grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinTomogram {
    spin: Spin,
    grid: QuadratureGrid,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SpinRow {
    m: f64,
    theta: f64,
    phi: f64,
    weight: f64,
    probability: f64,
}

impl SpinTomogram {
    pub fn sample(rho: &DensityMatrix, spin: Spin, grid: &QuadratureGrid) -> Result<Self> {
        if rho.dim() != spin.dim() {
            return Err(Error::DimensionMismatch {
                expected: spin.dim(),
                found: rho.dim(),
            });
        }
        let mut values = Vec::with_capacity(grid.len() * spin.dim());
        for dir in grid.nodes() {
            values.extend(tomogram(rho, spin, dir)?);
        }
        Ok(Self {
            spin,
            grid: grid.clone(),
            values,
        })
    }

    pub fn from_values(spin: Spin, grid: QuadratureGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() * spin.dim() {
            return Err(Error::DimensionMismatch {
                expected: grid.len() * spin.dim(),
                found: values.len(),
            });
        }
        Ok(Self { spin, grid, values })
    }

    pub fn spin(&self) -> Spin {
        self.spin
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    /// Laid out as `values[node * dim + m_index]`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, node: usize, m_index: usize) -> f64 {
        self.values[node * self.spin.dim() + m_index]
    }

    /// Probabilities lie in `[−tol, 1 + tol]` and sum to 1 at every node.
    pub fn check(&self, tol: f64) -> Result<()> {
        let dim = self.spin.dim();
        for (node, chunk) in self.values.chunks(dim).enumerate() {
            let s: f64 = chunk.iter().sum();
            if (s - 1.0).abs() > tol || chunk.iter().any(|&w| w < -tol || w > 1.0 + tol) {
                return Err(Error::OutOfRange(format!("node {node}: {chunk:?}")));
            }
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for (node, (dir, weight)) in self.grid.nodes().iter().zip(self.grid.weights()).enumerate() {
            for i in 0..self.spin.dim() {
                w.serialize(SpinRow {
                    m: self.spin.m_of(i),
                    theta: dir.theta(),
                    phi: dir.phi(),
                    weight: *weight,
                    probability: self.value(node, i),
                })?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let rows: Vec<SpinRow> = rdr.deserialize().collect::<std::result::Result<_, _>>()?;
        if rows.is_empty() {
            return Err(Error::Format("empty tomogram file".into()));
        }
        let spin = Spin::new(rows[0].m)?;
        let dim = spin.dim();
        if rows.len() % dim != 0 {
            return Err(Error::Format(format!("{} rows is not a multiple of {dim}", rows.len())));
        }
        let mut angles = Vec::with_capacity(rows.len() / dim);
        for (node, chunk) in rows.chunks(dim).enumerate() {
            for (i, row) in chunk.iter().enumerate() {
                if (row.m - spin.m_of(i)).abs() > 1e-9 || row.theta != chunk[0].theta || row.phi != chunk[0].phi {
                    return Err(Error::Format(format!("node {node} rows are not ordered by descending m")));
                }
            }
            angles.push((chunk[0].theta, chunk[0].phi));
        }
        let grid = QuadratureGrid::from_angles(&angles)?;
        for (node, chunk) in rows.chunks(dim).enumerate() {
            if (chunk[0].weight - grid.weights()[node]).abs() > 1e-12 {
                return Err(Error::Format(format!("node {node} weight does not match the grid")));
            }
        }
        let values = rows.iter().map(|r| r.probability).collect();
        Self::from_values(spin, grid, values)
    }
}

/// Invert a sampled tomogram through the sphere quadrature.
pub fn reconstruct_from_sphere(tom: &SpinTomogram) -> Result<DensityMatrix> {
    DensityMatrix::new(reconstruct_operator(tom.spin, &tom.grid, &tom.values)?)
}

/// Dual basis `l_k` with `l_i · n_j = δ_ij`.
pub fn dual_basis(n1: &Direction, n2: &Direction, n3: &Direction) -> Result<[Vector3<f64>; 3]> {
    let (a, b, cc) = (n1.unit(), n2.unit(), n3.unit());
    let triple = a.dot(&b.cross(&cc));
    if triple.abs() < 1e-10 {
        return Err(Error::Coplanar(triple));
    }
    Ok([b.cross(&cc) / triple, cc.cross(&a) / triple, a.cross(&b) / triple])
}

/// Qubit state from `w(+1/2, n_k)` along three non-coplanar directions:
/// `ρ = I/2 + Σ_k (w_k − 1/2) (σ·l_k)`.
///
/// The result is Hermitian with unit trace but is not checked for positivity.
pub fn reconstruct_qubit_three_directions(w: [f64; 3], dirs: [&Direction; 3]) -> Result<ComplexMatrix> {
    let l = dual_basis(dirs[0], dirs[1], dirs[2])?;
    let p: Vector3<f64> = (0..3).map(|k| l[k] * (2.0 * w[k] - 1.0)).sum();
    Ok(ComplexMatrix::from_row_slice(
        2,
        2,
        &[c((1.0 + p.z) / 2.0, 0.0), c(p.x / 2.0, -p.y / 2.0), c(p.x / 2.0, p.y / 2.0), c((1.0 - p.z) / 2.0, 0.0)],
    ))
}
