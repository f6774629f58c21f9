//! Star product of two-qubit tomographic symbols and the positivity
//! coefficients of `ρ^ppt` computed from its tomogram alone.

use nalgebra::{DMatrix, Vector3};

use super::PositivityCoefficients;
use crate::error::{Error, Result};
use crate::linalg::{c, C64};
use crate::spin::{Direction, QuadratureGrid};
use crate::two_spin::{TwoSpinBasis, TwoSpinTomogram};

/// One qubit argument `(m, n)` of a symbol.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StarArg {
    pub m: f64,
    pub n: Vector3<f64>,
}

impl StarArg {
    pub fn new(m: f64, dir: &Direction) -> Self {
        Self { m, n: dir.unit() }
    }
}

/// Single-qubit kernel `K(x', x'', x) = Tr[D(x') D(x'') U(x)]`.
pub fn star_kernel_factor(first: &StarArg, second: &StarArg, target: &StarArg) -> C64 {
    let (m, m1, m2) = (target.m, first.m, second.m);
    let (n, n1, n2) = (&target.n, &first.n, &second.n);
    c(
        0.25 + 9.0 * m1 * m2 * n1.dot(n2) + 3.0 * m * m1 * n.dot(n1) + 3.0 * m * m2 * n.dot(n2),
        18.0 * m * m1 * m2 * n.dot(&n1.cross(n2)),
    )
}

/// Two-qubit kernel: the product of the muon and electron factors.
/// Arrays hold `[muon, electron]` arguments.
pub fn star_kernel(first: [&StarArg; 2], second: [&StarArg; 2], target: [&StarArg; 2]) -> C64 {
    star_kernel_factor(first[0], second[0], target[0]) * star_kernel_factor(first[1], second[1], target[1])
}

/// Points `(node, m)` of one qubit factor with their quadrature weights.
struct FactorPoints {
    args: Vec<StarArg>,
    weights: Vec<f64>,
}

impl FactorPoints {
    fn from_grid(grid: &QuadratureGrid) -> Self {
        let mut args = Vec::with_capacity(2 * grid.len());
        let mut weights = Vec::with_capacity(2 * grid.len());
        for (dir, w) in grid.nodes().iter().zip(grid.weights()) {
            for m in [0.5, -0.5] {
                args.push(StarArg::new(m, dir));
                weights.push(*w);
            }
        }
        Self { args, weights }
    }

    fn at(dir: &Direction) -> Self {
        Self {
            args: vec![StarArg::new(0.5, dir), StarArg::new(-0.5, dir)],
            weights: vec![1.0, 1.0],
        }
    }

    fn len(&self) -> usize {
        self.args.len()
    }

    /// `W' W'' K(p', p'', t)` as one matrix per target point.
    fn kernels(&self, targets: &FactorPoints) -> Vec<DMatrix<C64>> {
        targets
            .args
            .iter()
            .map(|t| {
                DMatrix::from_fn(self.len(), self.len(), |p1, p2| {
                    star_kernel_factor(&self.args[p1], &self.args[p2], t) * (self.weights[p1] * self.weights[p2])
                })
            })
            .collect()
    }

    /// `W' (1/2 + 6 m m' n·n')`: resampling a symbol onto `targets`.
    fn interpolation(&self, targets: &FactorPoints) -> DMatrix<f64> {
        DMatrix::from_fn(targets.len(), self.len(), |t, p| {
            let (a, b) = (&targets.args[t], &self.args[p]);
            self.weights[p] * (0.5 + 6.0 * a.m * b.m * a.n.dot(&b.n))
        })
    }
}

/// `(f ⋆ g)` on the product of `targets_mu × targets_e`; symbols are
/// matrices indexed `[muon point, electron point]`.
fn star(f: &DMatrix<C64>, g: &DMatrix<C64>, k_mu: &[DMatrix<C64>], k_e: &[DMatrix<C64>]) -> DMatrix<C64> {
    let h: Vec<DMatrix<C64>> = k_e.iter().map(|ke| f * ke * g.transpose()).collect();
    DMatrix::from_fn(k_mu.len(), k_e.len(), |tm, te| k_mu[tm].component_mul(&h[te]).sum())
}

fn symbol_trace(s: &DMatrix<C64>) -> f64 {
    s.sum().re
}

/// `Tr Λ^k`, `k = 1..4`, for the operator Λ whose tomogram is `w`, evaluated
/// through iterated star products at `(n_μ, n_e)`.
///
/// The input is resampled onto the smallest grid that integrates the
/// kernels exactly, so any qubit tomogram on grids of degree ≥ 2 works.
pub fn tomographic_traces(w: &TwoSpinTomogram, eval_mu: &Direction, eval_e: &Direction) -> Result<[f64; 4]> {
    if *w.basis() != TwoSpinBasis::qubits() {
        return Err(Error::OutOfRange(
            "star-product coefficients are defined for two qubits".into(),
        ));
    }
    w.grid_mu().require_degree(2)?;
    w.grid_e().require_degree(2)?;

    let src_mu = FactorPoints::from_grid(w.grid_mu());
    let src_e = FactorPoints::from_grid(w.grid_e());
    let work = FactorPoints::from_grid(&QuadratureGrid::for_degree(2));
    let eval_mu = FactorPoints::at(eval_mu);
    let eval_e = FactorPoints::at(eval_e);

    let mut raw = DMatrix::<f64>::zeros(src_mu.len(), src_e.len());
    for a in 0..w.grid_mu().len() {
        for b in 0..w.grid_e().len() {
            for i in 0..2 {
                for k in 0..2 {
                    raw[(2 * a + i, 2 * b + k)] = w.value(a, b, i, k);
                }
            }
        }
    }
    let s1 = (src_mu.interpolation(&work) * raw * src_e.interpolation(&work).transpose()).map(|x| c(x, 0.0));
    let lin_mu = work.interpolation(&eval_mu).map(|x| c(x, 0.0));
    let lin_e = work.interpolation(&eval_e).map(|x| c(x, 0.0));

    let kw = work.kernels(&work);
    let km = work.kernels(&eval_mu);
    let ke = work.kernels(&eval_e);

    let s2 = star(&s1, &s1, &kw, &kw);
    let t1 = symbol_trace(&(&lin_mu * &s1 * lin_e.transpose()));
    let t2 = symbol_trace(&star(&s1, &s1, &km, &ke));
    let t3 = symbol_trace(&star(&s2, &s1, &km, &ke));
    let t4 = symbol_trace(&star(&s2, &s2, &km, &ke));
    Ok([t1, t2, t3, t4])
}

/// `(M3, M4)` of the operator whose tomogram is `w_ppt`; pass the
/// PPT-transformed tomogram to test separability.
pub fn tomographic_m34(w_ppt: &TwoSpinTomogram, eval_mu: &Direction, eval_e: &Direction) -> Result<(f64, f64)> {
    let [_, t2, t3, t4] = tomographic_traces(w_ppt, eval_mu, eval_e)?;
    let p = PositivityCoefficients::from_traces(t2, t3, t4);
    Ok((p.m3, p.m4))
}
