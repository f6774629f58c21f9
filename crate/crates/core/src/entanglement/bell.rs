//! Bell-like numbers built from two-qubit tomograms, and their maximization.

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::linalg::{kron, pauli};
use crate::spin::Direction;
use crate::state::DensityMatrix;
use crate::two_spin::{individual_tomogram, TwoSpinBasis};

/// Sign matrix contracted with the cell table: rows are the outcome pairs
/// (++, +−, −+, −−), columns the settings (n1n1, n1n2, n2n1, n2n2).
pub const BELL_MATRIX: [[f64; 4]; 4] = [
    [1.0, -1.0, -1.0, 1.0],
    [1.0, -1.0, -1.0, 1.0],
    [1.0, -1.0, -1.0, 1.0],
    [-1.0, 1.0, 1.0, -1.0],
];

/// Two muon and two electron analyzer directions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BellSetting {
    pub n1_mu: Direction,
    pub n2_mu: Direction,
    pub n1_e: Direction,
    pub n2_e: Direction,
}

impl BellSetting {
    /// Column `(a, b)` pairs muon direction `a` with electron direction `b`.
    pub fn column_directions(&self) -> [(&Direction, &Direction); 4] {
        [
            (&self.n1_mu, &self.n1_e),
            (&self.n1_mu, &self.n2_e),
            (&self.n2_mu, &self.n1_e),
            (&self.n2_mu, &self.n2_e),
        ]
    }

    fn from_angles(x: &[f64; 8]) -> Self {
        Self {
            n1_mu: Direction::new(x[0], x[1]),
            n2_mu: Direction::new(x[2], x[3]),
            n1_e: Direction::new(x[4], x[5]),
            n2_e: Direction::new(x[6], x[7]),
        }
    }
}

/// How the sign matrix is contracted with the cell table.
///
/// `Elementwise` sums `I_kl W_kl`; for a state with correlation matrix `T`
/// its maximum is `2σ_max(T)`. `MatrixTrace` takes `Tr[I·W]`, which is the
/// usual CHSH combination and reaches `2√2` on the singlet.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum BellContraction {
    #[default]
    Elementwise,
    MatrixTrace,
}

/// Cell table `W[outcome][setting]` of a two-qubit state.
pub fn bell_cells(rho: &DensityMatrix, setting: &BellSetting) -> Result<[[f64; 4]; 4]> {
    let basis = TwoSpinBasis::qubits();
    let mut cells = [[0.0; 4]; 4];
    for (col, (dm, de)) in setting.column_directions().into_iter().enumerate() {
        let w = individual_tomogram(rho, &basis, dm, de)?;
        for (row, v) in w.into_iter().enumerate() {
            cells[row][col] = v;
        }
    }
    Ok(cells)
}

fn contract(cells: &[[f64; 4]; 4], contraction: BellContraction) -> f64 {
    match contraction {
        BellContraction::Elementwise => (0..4)
            .flat_map(|k| (0..4).map(move |l| (k, l)))
            .map(|(k, l)| BELL_MATRIX[k][l] * cells[k][l])
            .sum(),
        BellContraction::MatrixTrace => (0..4)
            .flat_map(|k| (0..4).map(move |l| (k, l)))
            .map(|(k, l)| BELL_MATRIX[k][l] * cells[l][k])
            .sum(),
    }
}

/// Bell-like number of a cell table; every column must be a distribution.
pub fn bell_number(cells: &[[f64; 4]; 4], contraction: BellContraction) -> Result<f64> {
    for col in 0..4 {
        let s: f64 = (0..4).map(|row| cells[row][col]).sum();
        if (s - 1.0).abs() > 1e-8 {
            return Err(Error::OutOfRange(format!("setting column {col} sums to {s}")));
        }
    }
    Ok(contract(cells, contraction))
}

/// `ρ = (I + a·σ⊗I + I⊗b·σ + Σ T_ij σ_i⊗σ_j)/4`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoQubitBloch {
    pub a: Vector3<f64>,
    pub b: Vector3<f64>,
    pub t: Matrix3<f64>,
}

impl TwoQubitBloch {
    pub fn from_state(rho: &DensityMatrix) -> Result<Self> {
        if rho.dim() != 4 {
            return Err(Error::DimensionMismatch {
                expected: 4,
                found: rho.dim(),
            });
        }
        let s = pauli();
        let id = crate::linalg::identity(2);
        let ev = |op: &crate::linalg::ComplexMatrix| (rho.matrix() * op).trace().re;
        let a = Vector3::from_fn(|i, _| ev(&kron(&s[i], &id)));
        let b = Vector3::from_fn(|i, _| ev(&kron(&id, &s[i])));
        let t = Matrix3::from_fn(|i, j| ev(&kron(&s[i], &s[j])));
        Ok(Self { a, b, t })
    }

    /// Outcome probabilities (++, +−, −+, −−) along `n_mu`, `n_e`.
    pub fn probabilities(&self, n_mu: &Vector3<f64>, n_e: &Vector3<f64>) -> [f64; 4] {
        let am = self.a.dot(n_mu);
        let be = self.b.dot(n_e);
        let tt = n_mu.dot(&(self.t * n_e));
        [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)]
            .map(|(s1, s2)| 0.25 * (1.0 + s1 * am + s2 * be + s1 * s2 * tt))
    }

    fn cells(&self, dirs: &[Vector3<f64>; 4]) -> [[f64; 4]; 4] {
        let cols = [(0, 2), (0, 3), (1, 2), (1, 3)];
        let mut cells = [[0.0; 4]; 4];
        for (col, (i, j)) in cols.into_iter().enumerate() {
            let p = self.probabilities(&dirs[i], &dirs[j]);
            for row in 0..4 {
                cells[row][col] = p[row];
            }
        }
        cells
    }

    fn objective(&self, x: &[f64; 8], contraction: BellContraction) -> f64 {
        let n = |th: f64, ph: f64| {
            let (st, ct) = th.sin_cos();
            let (sp, cp) = ph.sin_cos();
            Vector3::new(st * cp, st * sp, ct)
        };
        let dirs = [n(x[0], x[1]), n(x[2], x[3]), n(x[4], x[5]), n(x[6], x[7])];
        contract(&self.cells(&dirs), contraction).abs()
    }
}

/// Optimizer settings for [`max_bell_with`].
#[derive(Clone, Debug, PartialEq)]
pub struct BellOptions {
    pub starts: usize,
    pub seed: u64,
    pub angle_tol: f64,
    pub max_sweeps: usize,
}

impl Default for BellOptions {
    fn default() -> Self {
        Self {
            starts: 32,
            seed: 0x5eed_be11,
            angle_tol: 1e-4,
            max_sweeps: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BellMaximum {
    pub value: f64,
    pub setting: BellSetting,
}

pub fn max_bell(rho: &DensityMatrix, contraction: BellContraction, exec: Exec) -> Result<BellMaximum> {
    max_bell_with(rho, contraction, &BellOptions::default(), exec)
}

/// Multi-start coordinate ascent of `|B|` over the eight angles.
///
/// Each coordinate move scans eight equispaced points over its period and
/// refines the best by golden-section search. Starts are drawn from a
/// seeded generator, so results do not depend on `exec`.
pub fn max_bell_with(
    rho: &DensityMatrix,
    contraction: BellContraction,
    options: &BellOptions,
    exec: Exec,
) -> Result<BellMaximum> {
    let bloch = TwoQubitBloch::from_state(rho)?;
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let starts: Vec<[f64; 8]> = (0..options.starts.max(1))
        .map(|_| std::array::from_fn(|_| rng.random_range(0.0..TAU)))
        .collect();
    let results = exec.map(&starts, |x0| ascend(&bloch, *x0, contraction, options));
    let (x, value) = results
        .into_iter()
        .fold(([0.0; 8], f64::NEG_INFINITY), |best, r| if r.1 > best.1 { r } else { best });
    Ok(BellMaximum {
        value,
        setting: BellSetting::from_angles(&x),
    })
}

fn ascend(bloch: &TwoQubitBloch, mut x: [f64; 8], contraction: BellContraction, options: &BellOptions) -> ([f64; 8], f64) {
    let mut f = bloch.objective(&x, contraction);
    for _ in 0..options.max_sweeps {
        let before = f;
        for k in 0..8 {
            let mut eval = |v: f64| {
                let mut y = x;
                y[k] = v;
                bloch.objective(&y, contraction)
            };
            let step = TAU / 8.0;
            let (mut best_v, mut best_f) = (x[k], f);
            for j in 1..8 {
                let v = x[k] + j as f64 * step;
                let fv = eval(v);
                if fv > best_f {
                    best_v = v;
                    best_f = fv;
                }
            }
            let (v, fv) = golden_max(&mut eval, best_v - step, best_v + step, options.angle_tol);
            if fv > best_f {
                best_v = v;
                best_f = fv;
            }
            x[k] = best_v.rem_euclid(TAU);
            f = best_f;
        }
        if f - before <= 1e-12 {
            break;
        }
    }
    (x, f)
}

fn golden_max(f: &mut impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    while hi - lo > tol {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + r * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - r * (hi - lo);
            fa = f(a);
        }
    }
    if fa > fb {
        (a, fa)
    } else {
        (b, fb)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, ComplexMatrix};
    use proptest::prelude::*;
    use rand::Rng;
    use std::f64::consts::PI;

    /// Direction at `angle_deg` from ẑ towards x̂, within the x–z plane.
    fn xz(angle_deg: f64) -> Direction {
        let a = angle_deg.to_radians();
        if a <= PI {
            Direction::new(a, 0.0)
        } else {
            Direction::new(TAU - a, PI)
        }
    }

    fn singlet_setting() -> BellSetting {
        BellSetting {
            n1_mu: xz(90.0),
            n2_mu: xz(0.0),
            n1_e: xz(45.0),
            n2_e: xz(135.0),
        }
    }

    #[test]
    fn singlet_chsh_optimum() {
        let cells = bell_cells(&DensityMatrix::singlet(), &singlet_setting()).unwrap();
        let b = bell_number(&cells, BellContraction::MatrixTrace).unwrap();
        assert!((b.abs() - 2.0 * 2f64.sqrt()).abs() < 1e-10, "{b}");
        // The elementwise reading of the same table: −½(n1−n2)ᵀT(n1'−n2') with T = −I.
        let e = bell_number(&cells, BellContraction::Elementwise).unwrap();
        assert!((e.abs() - 0.5 * 2f64.sqrt()).abs() < 1e-10, "{e}");
    }

    #[test]
    fn maximally_mixed_is_zero() {
        let cells = bell_cells(&DensityMatrix::maximally_mixed(4), &singlet_setting()).unwrap();
        for contraction in [BellContraction::Elementwise, BellContraction::MatrixTrace] {
            assert!(bell_number(&cells, contraction).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_unnormalized_columns() {
        let mut cells = [[0.25; 4]; 4];
        cells[0][2] = 0.3;
        assert!(bell_number(&cells, BellContraction::Elementwise).is_err());
    }

    #[test]
    fn singlet_maxima() {
        let s = DensityMatrix::singlet();
        let chsh = max_bell(&s, BellContraction::MatrixTrace, Exec::Sequential).unwrap();
        assert!((chsh.value - 2.0 * 2f64.sqrt()).abs() < 1e-3, "{}", chsh.value);
        let cells = bell_cells(&s, &chsh.setting).unwrap();
        let again = bell_number(&cells, BellContraction::MatrixTrace).unwrap().abs();
        assert!((again - chsh.value).abs() < 1e-10);
        let elem = max_bell(&s, BellContraction::Elementwise, Exec::Sequential).unwrap();
        assert!((elem.value - 2.0).abs() < 1e-3, "{}", elem.value);
    }

    #[test]
    fn exec_modes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = DensityMatrix::random(4, &mut rng);
        let a = max_bell(&rho, BellContraction::Elementwise, Exec::Sequential).unwrap();
        let b = max_bell(&rho, BellContraction::Elementwise, Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }

    fn svd_max(rho: &DensityMatrix) -> (f64, f64) {
        let t = TwoQubitBloch::from_state(rho).unwrap().t;
        let s = t.svd(false, false).singular_values;
        let mut v: Vec<f64> = s.iter().copied().collect();
        v.sort_by(|a, b| b.partial_cmp(a).unwrap());
        (2.0 * v[0], 2.0 * (v[0] * v[0] + v[1] * v[1]).sqrt())
    }

    #[test]
    fn maxima_match_correlation_matrix_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for _ in 0..10 {
            let rho = DensityMatrix::random_with_rank(4, 2, &mut rng);
            let (elem, chsh) = svd_max(&rho);
            let e = max_bell(&rho, BellContraction::Elementwise, Exec::default()).unwrap().value;
            let m = max_bell(&rho, BellContraction::MatrixTrace, Exec::default()).unwrap().value;
            assert!((e - elem).abs() < 1e-3, "{e} vs {elem}");
            assert!((m - chsh).abs() < 1e-3, "{m} vs {chsh}");
        }
    }

    proptest! {
        #[test]
        fn bloch_cells_match_tomogram(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rho = DensityMatrix::random(4, &mut rng);
            let x: [f64; 8] = std::array::from_fn(|_| rng.random_range(0.0..TAU));
            let setting = BellSetting::from_angles(&x);
            let cells = bell_cells(&rho, &setting).unwrap();
            let dirs = [&setting.n1_mu, &setting.n2_mu, &setting.n1_e, &setting.n2_e].map(|d| d.unit());
            let fast = TwoQubitBloch::from_state(&rho).unwrap().cells(&dirs);
            for r in 0..4 {
                for col in 0..4 {
                    prop_assert!((cells[r][col] - fast[r][col]).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn product_tables_obey_classical_bound(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = DensityMatrix::random(2, &mut rng);
            let b = DensityMatrix::random(2, &mut rng);
            let rho = DensityMatrix::product(&a, &b);
            for _ in 0..50 {
                let x: [f64; 8] = std::array::from_fn(|_| rng.random_range(0.0..TAU));
                let cells = bell_cells(&rho, &BellSetting::from_angles(&x)).unwrap();
                for contraction in [BellContraction::Elementwise, BellContraction::MatrixTrace] {
                    prop_assert!(bell_number(&cells, contraction).unwrap().abs() <= 2.0 + 1e-12);
                }
            }
        }

        #[test]
        fn tsirelson_bound(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rho = DensityMatrix::random_pure(4, &mut rng);
            let x: [f64; 8] = std::array::from_fn(|_| rng.random_range(0.0..TAU));
            let cells = bell_cells(&rho, &BellSetting::from_angles(&x)).unwrap();
            for contraction in [BellContraction::Elementwise, BellContraction::MatrixTrace] {
                prop_assert!(bell_number(&cells, contraction).unwrap().abs() <= 2.0 * 2f64.sqrt() + 1e-12);
            }
        }
    }

    #[test]
    fn bloch_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho = DensityMatrix::random(4, &mut rng);
        let bl = TwoQubitBloch::from_state(&rho).unwrap();
        let s = pauli();
        let id = crate::linalg::identity(2);
        let mut m = ComplexMatrix::identity(4, 4);
        for i in 0..3 {
            m += kron(&s[i], &id) * c(bl.a[i], 0.0) + kron(&id, &s[i]) * c(bl.b[i], 0.0);
            for j in 0..3 {
                m += kron(&s[i], &s[j]) * c(bl.t[(i, j)], 0.0);
            }
        }
        m *= c(0.25, 0.0);
        assert!(crate::linalg::max_abs_diff(&m, rho.matrix()) < 1e-14);
    }
}
