use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Coupling constants in SI units. Derived gyromagnetic ratios are returned
/// in rad/ns per Gauss, the internal unit system.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub g_mu: f64,
    /// Muon magnetic moment, J/T.
    pub mu_mu: f64,
    pub g_e: f64,
    /// Electron moment unit (Bohr magneton), J/T.
    pub mu_e: f64,
    /// J·s.
    pub hbar: f64,
}

pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;
pub const NUCLEAR_MAGNETON_PROTON: f64 = 1.410_606_797_36e-26;
pub const PLANCK: f64 = 6.626_070_15e-34;
pub const MUON_TO_PROTON_MOMENT: f64 = 3.18334;

const GAUSS_IN_TESLA: f64 = 1e-4;
const NS_IN_S: f64 = 1e-9;

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            g_mu: 2.0,
            mu_mu: MUON_TO_PROTON_MOMENT * NUCLEAR_MAGNETON_PROTON,
            g_e: 2.002_319_3,
            mu_e: BOHR_MAGNETON,
            hbar: PLANCK / TAU,
        }
    }
}

impl PhysicalConstants {
    /// `g_μ μ_μ / ħ` in rad/ns/G.
    pub fn gamma_mu(&self) -> f64 {
        self.g_mu * self.mu_mu / self.hbar * GAUSS_IN_TESLA * NS_IN_S
    }

    /// `g_e μ_e / ħ` in rad/ns/G.
    pub fn gamma_e(&self) -> f64 {
        self.g_e * self.mu_e / self.hbar * GAUSS_IN_TESLA * NS_IN_S
    }

    /// Field where the electron and muon Zeeman splittings differ by the
    /// hyperfine constant: `B (γ_e − γ_μ) = A`. `a_coupling` in rad/ns.
    pub fn critical_field(&self, a_coupling: f64) -> f64 {
        a_coupling / (self.gamma_e() - self.gamma_mu())
    }
}

/// Linear frequency in MHz to rad/ns.
pub fn mhz_to_rad_per_ns(mhz: f64) -> f64 {
    TAU * mhz * 1e-3
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gyromagnetic_ratios() {
        let k = PhysicalConstants::default();
        // MHz/G
        let ge = k.gamma_e() / TAU * 1e3;
        let gm = k.gamma_mu() / TAU * 1e3;
        assert!((ge - 2.80249).abs() < 1e-4, "{ge}");
        assert!((gm - 0.013554).abs() < 1e-6, "{gm}");
    }

    #[test]
    fn critical_fields() {
        let k = PhysicalConstants::default();
        let quartz = k.critical_field(mhz_to_rad_per_ns(4404.0));
        let si = k.critical_field(mhz_to_rad_per_ns(92.595));
        assert!((quartz - 1579.1).abs() < 0.2, "{quartz}");
        assert!((si - 33.20).abs() < 0.01, "{si}");
    }
}
