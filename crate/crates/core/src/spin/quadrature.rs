use std::f64::consts::{PI, TAU};

use super::{Direction, Spin};
use crate::error::{Error, Result};

/// Gauss-Legendre nodes on [−1, 1], descending, with weights summing to 2.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 1.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j - 1) as f64 * z * p2 - (j - 1) as f64 * p3) / j as f64;
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Product rule on the unit sphere: Gauss-Legendre in cosθ times the
/// trapezoid rule in φ. Weights are normalized to sum to 1, so `integrate`
/// returns the mean over the sphere (`∫ f dn / 4π`).
///
/// Node `i` sits at `theta_index = i / n_phi`, `phi_index = i % n_phi`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureGrid {
    n_theta: usize,
    n_phi: usize,
    nodes: Vec<Direction>,
    weights: Vec<f64>,
}

impl QuadratureGrid {
    pub fn new(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta == 0 || n_phi == 0 {
            return Err(Error::OutOfRange("quadrature grid needs at least one node per axis".into()));
        }
        let (x, wx) = gauss_legendre(n_theta);
        let mut nodes = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        for (xi, wi) in x.iter().zip(&wx) {
            let theta = xi.clamp(-1.0, 1.0).acos();
            for k in 0..n_phi {
                nodes.push(Direction::new(theta, TAU * k as f64 / n_phi as f64));
                weights.push(wi / (2.0 * n_phi as f64));
            }
        }
        Ok(Self {
            n_theta,
            n_phi,
            nodes,
            weights,
        })
    }

    /// Smallest grid exact for spherical polynomials of degree `d`.
    pub fn for_degree(d: usize) -> Self {
        Self::new(d / 2 + 1, d + 1).expect("non-empty grid")
    }

    /// Grid with `4j + 1` polar and `4j + 2` azimuthal nodes, exact for the
    /// degree-`4j` integrands of sphere reconstruction.
    pub fn for_spin(spin: Spin) -> Self {
        let tj = spin.twice() as usize;
        Self::new(2 * tj + 1, 2 * tj + 2).expect("non-empty grid")
    }

    /// Rebuild a grid from its node angles (in node order) and check that they
    /// form a Gauss-Legendre × trapezoid product rule.
    pub fn from_angles(angles: &[(f64, f64)]) -> Result<Self> {
        let n = angles.len();
        if n == 0 {
            return Err(Error::Format("empty direction grid".into()));
        }
        let n_phi = angles.iter().take_while(|a| (a.0 - angles[0].0).abs() < 1e-12).count();
        if n % n_phi != 0 {
            return Err(Error::Format(format!("{n} nodes do not split into rows of {n_phi}")));
        }
        let grid = Self::new(n / n_phi, n_phi)?;
        for (i, &(theta, phi)) in angles.iter().enumerate() {
            let node = grid.nodes[i];
            let dphi = (phi - node.phi()).abs();
            if (theta - node.theta()).abs() > 1e-10 || dphi.min(TAU - dphi) > 1e-10 {
                return Err(Error::Format(format!(
                    "node {i} at ({theta}, {phi}) is not on the Gauss-Legendre × trapezoid grid"
                )));
            }
        }
        Ok(grid)
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    /// Highest spherical-polynomial degree integrated exactly.
    pub fn degree(&self) -> usize {
        (2 * self.n_theta - 1).min(self.n_phi - 1)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Direction] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Index of the node carrying the image `(nx, −ny, nz)` of node `i`.
    pub fn ppt_index(&self, i: usize) -> usize {
        let (it, ip) = (i / self.n_phi, i % self.n_phi);
        it * self.n_phi + (self.n_phi - ip) % self.n_phi
    }

    pub fn integrate(&self, f: impl Fn(&Direction) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(n, w)| w * f(n)).sum()
    }

    pub(crate) fn require_degree(&self, needed: usize) -> Result<()> {
        if self.degree() < needed {
            return Err(Error::InsufficientQuadrature {
                needed,
                got: self.degree(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_is_exact() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            for p in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(p as i32)).sum();
                let exact = if p % 2 == 0 { 2.0 / (p as f64 + 1.0) } else { 0.0 };
                assert!((q - exact).abs() < 1e-13, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn sphere_monomials() {
        // Mean of x^a y^b z^c over the sphere.
        fn exact(a: u32, b: u32, cc: u32) -> f64 {
            if a % 2 == 1 || b % 2 == 1 || cc % 2 == 1 {
                return 0.0;
            }
            let df = |k: u32| (1..=k).filter(|i| i % 2 == 1).map(|i| i as f64).product::<f64>();
            df(a.saturating_sub(1)) * df(b.saturating_sub(1)) * df(cc.saturating_sub(1))
                / df(a + b + cc + 1)
        }
        let grid = QuadratureGrid::for_degree(6);
        assert_eq!(grid.degree(), 6);
        for a in 0..=6u32 {
            for b in 0..=(6 - a) {
                for cc in 0..=(6 - a - b) {
                    let q = grid.integrate(|d| {
                        let n = d.unit();
                        n.x.powi(a as i32) * n.y.powi(b as i32) * n.z.powi(cc as i32)
                    });
                    assert!((q - exact(a, b, cc)).abs() < 1e-14, "{a} {b} {cc}: {q}");
                }
            }
        }
    }

    #[test]
    fn spin_grids() {
        for tj in 1..=4 {
            let g = QuadratureGrid::for_spin(Spin::from_twice(tj));
            assert!(g.degree() >= 2 * tj as usize);
            assert!((g.weights().iter().sum::<f64>() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn ppt_index_mirrors_y() {
        let g = QuadratureGrid::new(3, 5).unwrap();
        for i in 0..g.len() {
            let j = g.ppt_index(i);
            let (a, b) = (g.nodes()[i].unit(), g.nodes()[j].unit());
            assert!((a.x - b.x).abs() < 1e-14 && (a.y + b.y).abs() < 1e-14 && (a.z - b.z).abs() < 1e-14);
            assert_eq!(g.ppt_index(j), i);
        }
    }

    #[test]
    fn rebuild_from_angles() {
        let g = QuadratureGrid::new(4, 6).unwrap();
        let angles: Vec<_> = g.nodes().iter().map(|d| (d.theta(), d.phi())).collect();
        assert_eq!(QuadratureGrid::from_angles(&angles).unwrap(), g);
        let mut bad = angles.clone();
        bad[3].1 += 0.01;
        assert!(QuadratureGrid::from_angles(&bad).is_err());
    }
}
