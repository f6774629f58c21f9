use std::fmt;
use std::path::PathBuf;

use clap::Args;
use nalgebra::Vector3;

use mutomo::dynamics::{HamiltonianFamily, Material, PhysicalConstants, PropagatorSpec};
use mutomo::{DensityMatrix, Direction};

/// Error with the category that decides the exit code.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration: {m}"),
            CliError::Numeric(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<mutomo::Error> for CliError {
    fn from(e: mutomo::Error) -> Self {
        use mutomo::Error as E;
        match e {
            E::InconsistentSpec(_)
            | E::OutOfRange(_)
            | E::UnsupportedSpin(_)
            | E::NotTabulated(_)
            | E::Format(_)
            | E::Io(_)
            | E::Csv(_)
            | E::Json(_)
            | E::Toml(_)
            | E::Coplanar(_) => CliError::Config(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// `x`, `-y`, `z` or `theta,phi` in radians.
pub fn parse_direction(s: &str) -> Result<Direction, String> {
    let axis = |v: Vector3<f64>| Direction::from_vector(v).map_err(|e| e.to_string());
    match s.trim() {
        "x" | "+x" => axis(Vector3::x()),
        "-x" => axis(-Vector3::x()),
        "y" | "+y" => axis(Vector3::y()),
        "-y" => axis(-Vector3::y()),
        "z" | "+z" => axis(Vector3::z()),
        "-z" => axis(-Vector3::z()),
        other => {
            let parts: Vec<&str> = other.split(',').collect();
            if parts.len() != 2 {
                return Err(format!("'{other}' is not an axis name or 'theta,phi'"));
            }
            let theta: f64 = parts[0].trim().parse().map_err(|_| format!("bad angle '{}'", parts[0]))?;
            let phi: f64 = parts[1].trim().parse().map_err(|_| format!("bad angle '{}'", parts[1]))?;
            if !theta.is_finite() || !phi.is_finite() {
                return Err("angles must be finite".into());
            }
            Ok(Direction::new(theta, phi))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum InitState {
    /// Muon polarized along +z, electron unpolarized.
    Muonium,
    /// Muon polarized along +x, electron unpolarized.
    MuoniumX,
    /// Muon-electron singlet (electron spin 1/2 only).
    Singlet,
    /// Maximally mixed.
    Mixed,
}

impl InitState {
    pub fn build(self, dim_e: usize) -> CliResult<DensityMatrix> {
        Ok(match self {
            InitState::Muonium => DensityMatrix::muonium_initial(dim_e),
            InitState::MuoniumX => {
                DensityMatrix::product(&DensityMatrix::qubit([1.0, 0.0, 0.0])?, &DensityMatrix::maximally_mixed(dim_e))
            }
            InitState::Singlet if dim_e == 2 => DensityMatrix::singlet(),
            InitState::Singlet => return Err(CliError::Config("the singlet needs electron spin 1/2".into())),
            InitState::Mixed => DensityMatrix::maximally_mixed(2 * dim_e),
        })
    }
}

/// Material and field options shared by every verb.
#[derive(Args, Debug, Clone)]
pub struct SystemArgs {
    /// Material preset name or path to a JSON/TOML material file.
    #[arg(long, default_value = "vacuum-mu")]
    pub material: String,
    /// Field magnitude(s) in gauss; comma separated. Defaults to a sweep
    /// across the material's critical field.
    #[arg(long = "B", value_delimiter = ',', allow_negative_numbers = true)]
    pub b: Vec<f64>,
    /// Field direction: x, y, z, -z or theta,phi.
    #[arg(long = "B-axis", default_value = "z", value_parser = parse_direction)]
    pub b_axis: Direction,
    /// Anisotropy axis of an anisotropic material.
    #[arg(long = "aniso-axis", value_parser = parse_direction)]
    pub aniso_axis: Option<Direction>,
}

impl SystemArgs {
    pub fn material(&self) -> CliResult<Material> {
        let path = PathBuf::from(&self.material);
        if path.is_file() {
            Ok(Material::load(&path)?)
        } else {
            Ok(Material::preset(&self.material)?)
        }
    }

    pub fn fields(&self, material: &Material) -> Vec<f64> {
        if !self.b.is_empty() {
            return self.b.clone();
        }
        match material.name.as_str() {
            "quartz" => vec![0.0, 790.0, 1580.0, 3160.0],
            "si-mustar" => vec![0.0, 10.0, 33.0, 100.0],
            _ if material.family == HamiltonianFamily::HyperfineOnly => vec![0.0],
            _ => {
                let bc = PhysicalConstants::default().critical_field(material.a_coupling());
                vec![0.0, bc / 2.0, bc, 2.0 * bc]
            }
        }
    }

    /// Anisotropic materials default to an anisotropy axis along x.
    pub fn aniso_axis(&self, material: &Material) -> Option<Direction> {
        match (self.aniso_axis, material.family) {
            (Some(a), _) => Some(a),
            (None, HamiltonianFamily::AnisotropicMuStar) => Some(Direction::x()),
            (None, _) => None,
        }
    }

    pub fn propagator(&self, material: &Material, b: f64) -> CliResult<PropagatorSpec> {
        let field = self.b_axis.unit() * b;
        let spec = material.hamiltonian(field, self.aniso_axis(material))?;
        Ok(PropagatorSpec::auto(spec, PhysicalConstants::default())?)
    }
}

#[derive(Args, Debug, Clone)]
pub struct TimeArgs {
    /// End of the time grid in ns. Defaults to four hyperfine periods.
    #[arg(long = "t-max-ns")]
    pub t_max_ns: Option<f64>,
    /// Number of time points, including t = 0.
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
}

impl TimeArgs {
    pub fn times(&self, material: &Material) -> CliResult<Vec<f64>> {
        let t_max = self.t_max_ns.unwrap_or(4.0 * std::f64::consts::TAU / material.a_coupling().abs());
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(CliError::Config(format!("t-max-ns must be positive, got {t_max}")));
        }
        match self.steps {
            0 => Err(CliError::Config("steps must be at least 1".into())),
            1 => Ok(vec![0.0]),
            n => Ok((0..n).map(|k| t_max * k as f64 / (n - 1) as f64).collect()),
        }
    }
}

#[derive(Args, Debug)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub time: TimeArgs,
    #[arg(long, value_enum, default_value = "muonium")]
    pub init: InitState,
    /// Skip the Bell maximization, which dominates the run time.
    #[arg(long)]
    pub no_bell: bool,
    /// Output stem: writes `<out>.csv` and `<out>.json`. CSV goes to stdout
    /// when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long, value_enum, default_value = "muonium-x")]
    pub init: InitState,
    #[arg(long = "n-muons", default_value_t = 1_000_000)]
    pub n_muons: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Detector geometry JSON. Defaults to six detectors of half-angle π/4.
    #[arg(long)]
    pub detectors: Option<PathBuf>,
    #[arg(long = "t-max-ns", default_value_t = 20_000.0)]
    pub t_max_ns: f64,
    #[arg(long = "bin-ns", default_value_t = 100.0)]
    pub bin_ns: f64,
    /// Background as a fraction of the muon count.
    #[arg(long, default_value_t = mutomo::musr::DEFAULT_BACKGROUND)]
    pub background: f64,
    /// Output stem: writes the histogram, the estimate and a manifest.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ReconstructArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// Times per measurement setting.
    #[arg(long, default_value_t = 5)]
    pub times: usize,
    /// Field vector of a second measurement setting, `Bx,By,Bz` in gauss.
    #[arg(long = "extra-B", value_delimiter = ',', allow_negative_numbers = true)]
    pub extra_b: Option<Vec<f64>>,
    /// Anisotropy axis of the second setting.
    #[arg(long = "extra-aniso-axis", value_parser = parse_direction)]
    pub extra_aniso_axis: Option<Direction>,
    /// Measured values, one `w[,sigma]` row per plan entry after a header.
    /// Without it, data are synthesized from `--init`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "muonium")]
    pub init: InitState,
    /// Gaussian noise added to synthesized data.
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Report file; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BellArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub time: TimeArgs,
    #[arg(long, value_enum, default_value = "muonium")]
    pub init: InitState,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
