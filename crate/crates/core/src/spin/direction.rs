use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unit vector `n = (cosφ sinθ, sinφ sinθ, cosθ)` with θ ∈ [0, π], φ ∈ [0, 2π).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "Angles", from = "Angles")]
pub struct Direction {
    theta: f64,
    phi: f64,
    n: Vector3<f64>,
}

#[derive(Clone, Copy, Serialize, Deserialize)]
struct Angles {
    theta: f64,
    phi: f64,
}

impl From<Direction> for Angles {
    fn from(d: Direction) -> Self {
        Angles {
            theta: d.theta,
            phi: d.phi,
        }
    }
}

impl From<Angles> for Direction {
    fn from(a: Angles) -> Self {
        Direction::new(a.theta, a.phi)
    }
}

fn wrap_phi(phi: f64) -> f64 {
    let p = phi.rem_euclid(TAU);
    if p >= TAU {
        0.0
    } else {
        p
    }
}

impl Direction {
    /// Any real angles are accepted; a polar angle outside [0, π] is folded
    /// back onto the sphere.
    pub fn new(theta: f64, phi: f64) -> Self {
        if (0.0..=PI).contains(&theta) {
            let phi = wrap_phi(phi);
            let (st, ct) = theta.sin_cos();
            let (sp, cp) = phi.sin_cos();
            Direction {
                theta,
                phi,
                n: Vector3::new(cp * st, sp * st, ct),
            }
        } else {
            let t = theta.rem_euclid(TAU);
            if t <= PI {
                Direction::new(t, phi)
            } else {
                Direction::new(TAU - t, phi + PI)
            }
        }
    }

    pub fn from_vector(v: Vector3<f64>) -> Result<Self> {
        let norm = v.norm();
        if !(norm > 1e-300) || !norm.is_finite() {
            return Err(Error::OutOfRange("direction from a zero or non-finite vector".into()));
        }
        let u = v / norm;
        let theta = u.x.hypot(u.y).atan2(u.z);
        let phi = wrap_phi(u.y.atan2(u.x));
        Ok(Direction { theta, phi, n: u })
    }

    pub fn x() -> Self {
        Direction::new(PI / 2.0, 0.0)
    }

    pub fn y() -> Self {
        Direction::new(PI / 2.0, PI / 2.0)
    }

    pub fn z() -> Self {
        Direction::new(0.0, 0.0)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn unit(&self) -> Vector3<f64> {
        self.n
    }

    /// Rotation axis `n⊥ = (−sinφ, cosφ, 0)` taking ẑ to `n`.
    pub fn perp(&self) -> Vector3<f64> {
        Vector3::new(-self.phi.sin(), self.phi.cos(), 0.0)
    }

    /// Image under partial transposition: `(nx, −ny, nz)`.
    pub fn ppt(&self) -> Self {
        Direction::new(self.theta, -self.phi)
    }

    pub fn dot(&self, other: &Direction) -> f64 {
        self.n.dot(&other.n)
    }

    /// Uniform on the sphere.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let u: f64 = rng.random_range(-1.0..=1.0);
        let phi: f64 = rng.random_range(0.0..TAU);
        Direction::new(u.acos(), phi)
    }
}
