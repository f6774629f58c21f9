//! Material parameter sets and the shipped presets.
//!
//! Presets are looked up first in the directories listed in
//! `MUTOMO_PRESET_PATH` (as `<name>.json` or `<name>.toml`), then among the
//! built-in files.

use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::constants::mhz_to_rad_per_ns;
use super::hamiltonian::{HamiltonianFamily, HamiltonianSpec};
use crate::error::{Error, Result};
use crate::spin::{Direction, Spin};

pub const PRESET_PATH_ENV: &str = "MUTOMO_PRESET_PATH";

const BUILTIN: [(&str, &str); 3] = [
    ("vacuum-mu", include_str!("../../presets/vacuum-mu.json")),
    ("quartz", include_str!("../../presets/quartz.json")),
    ("si-mustar", include_str!("../../presets/si-mustar.json")),
];

/// Frequencies are in MHz; each carries a flag saying whether it is an
/// angular frequency (rad/µs) or a linear one (multiplied by 2π on use).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub name: String,
    pub family: HamiltonianFamily,
    #[serde(rename = "A_MHz")]
    pub a_mhz: f64,
    #[serde(rename = "A_is_angular")]
    pub a_is_angular: bool,
    #[serde(rename = "deltaA_MHz", default)]
    pub delta_a_mhz: f64,
    #[serde(rename = "deltaA_is_angular", default)]
    pub delta_a_is_angular: bool,
    pub j_e: Spin,
    #[serde(default)]
    pub notes: String,
}

fn to_rad_per_ns(mhz: f64, angular: bool) -> f64 {
    if angular {
        mhz * 1e-3
    } else {
        mhz_to_rad_per_ns(mhz)
    }
}

impl Material {
    /// Contact coupling `A/ħ` in rad/ns.
    pub fn a_coupling(&self) -> f64 {
        to_rad_per_ns(self.a_mhz, self.a_is_angular)
    }

    /// Anisotropic coupling `ΔA/ħ` in rad/ns.
    pub fn delta_a(&self) -> f64 {
        to_rad_per_ns(self.delta_a_mhz, self.delta_a_is_angular)
    }

    pub fn hamiltonian(&self, b_field: Vector3<f64>, anisotropy_axis: Option<Direction>) -> Result<HamiltonianSpec> {
        let a = self.a_coupling();
        let spec = match self.family {
            HamiltonianFamily::HyperfineOnly => {
                let mut s = HamiltonianSpec::hyperfine(a, self.j_e);
                s.b_field = b_field;
                s.anisotropy_axis = anisotropy_axis;
                s
            }
            HamiltonianFamily::IsotropicMu => {
                let mut s = HamiltonianSpec::isotropic(a, b_field).with_electron(self.j_e);
                s.anisotropy_axis = anisotropy_axis;
                s
            }
            HamiltonianFamily::AnisotropicMuStar => {
                let axis = anisotropy_axis.ok_or_else(|| {
                    Error::InconsistentSpec(format!("material '{}' needs an anisotropy axis", self.name))
                })?;
                HamiltonianSpec::mu_star(a, self.delta_a(), axis, b_field).with_electron(self.j_e)
            }
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Parse by extension: `.toml` as TOML, anything else as JSON.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => Self::from_toml(&text),
            _ => Self::from_json(&text),
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        if let Some(path) = find_on_search_path(name) {
            return Self::load(&path);
        }
        BUILTIN
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, text)| Self::from_json(text))
            .unwrap_or_else(|| Err(Error::InconsistentSpec(format!("unknown material preset '{name}'"))))
    }

    pub fn builtin_names() -> Vec<&'static str> {
        BUILTIN.iter().map(|(n, _)| *n).collect()
    }
}

fn find_on_search_path(name: &str) -> Option<PathBuf> {
    let dirs = std::env::var_os(PRESET_PATH_ENV)?;
    std::env::split_paths(&dirs)
        .flat_map(|d| ["json", "toml"].map(|ext| d.join(format!("{name}.{ext}"))))
        .find(|p| p.is_file())
}
