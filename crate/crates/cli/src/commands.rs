use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde_json::{json, Value};

use mutomo::dynamics::{HamiltonianFamily, Material, PhysicalConstants, PropagatorSpec};
use mutomo::entanglement::{entanglement_e, max_bell, negativity, BellContraction};
use mutomo::musr::{
    estimate_tomogram, simulate_events, uniform_edges, DecayModel, DetectorGeometry, EstimationOptions,
    EvolvedPolarization, SimulationConfig,
};
use mutomo::reconstruction::{
    default_times, forward_model, identifiability, reconstruct_initial, MeasurementPlan, MeasurementSetting,
};
use mutomo::two_spin::reduced_tomogram;
use mutomo::linalg::frobenius;
use mutomo::{Direction, Exec};

use crate::args::{BellArgs, CliError, CliResult, EvolveArgs, ReconstructArgs, ReportArgs, SimulateArgs, SystemArgs};

pub const EVOLVE_FORMAT: &str = "mutomo-evolve/1";
pub const BELL_FORMAT: &str = "mutomo-bell/1";

fn sibling(stem: &Path, suffix: &str) -> PathBuf {
    PathBuf::from(format!("{}{suffix}", stem.display()))
}

fn write_json(path: &Path, value: &Value) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Numeric(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn emit(out: Option<&Path>, text: &str, manifest: Value) -> CliResult<()> {
    match out {
        Some(stem) => {
            std::fs::write(sibling(stem, ".csv"), text)?;
            write_json(&sibling(stem, ".json"), &manifest)
        }
        None => print_stdout(text),
    }
}

/// A closed pipe downstream (`| head`) is not an error.
fn print_stdout(text: &str) -> CliResult<()> {
    use std::io::Write;
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn system_manifest(system: &SystemArgs, material: &Material) -> Value {
    json!({
        "material": to_value(material),
        "field_axis": to_value(&system.b_axis),
        "anisotropy_axis": to_value(&system.aniso_axis(material)),
    })
}

/// A single field for verbs that do not sweep.
fn single_field(system: &SystemArgs, material: &Material) -> CliResult<f64> {
    match system.b.as_slice() {
        [] if material.family == HamiltonianFamily::HyperfineOnly => Ok(0.0),
        [] => Ok(PhysicalConstants::default().critical_field(material.a_coupling())),
        [b] => Ok(*b),
        _ => Err(CliError::Config("this command takes a single --B value".into())),
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn evolve(a: &EvolveArgs) -> CliResult<()> {
    let material = a.system.material()?;
    let fields = a.system.fields(&material);
    let times = a.time.times(&material)?;
    let mut text = format!("# format: {EVOLVE_FORMAT}\nB_G,t_ns,axis,w_reduced,E,negativity,max_bell\n");
    let mut methods = Vec::new();
    let axes = [("x", Direction::x()), ("y", Direction::y()), ("z", Direction::z())];
    for &b in &fields {
        let prop = a.system.propagator(&material, b)?;
        methods.push(to_value(&prop.method));
        let prep = prop.prepare()?;
        let basis = prop.basis()?;
        let rho0 = a.init.build(basis.dims().dim_b)?;
        let qubits = basis.dim() == 4;
        let rows = Exec::default().map(&times, |&t| -> mutomo::Result<String> {
            let rho = prep.evolve(&rho0, t)?;
            let e = if qubits { Some(entanglement_e(&rho)? + 0.0) } else { None };
            let neg = negativity(&rho, basis.dims())? + 0.0;
            let bell = if a.no_bell || !qubits {
                None
            } else {
                Some(max_bell(&rho, BellContraction::Elementwise, Exec::Sequential)?.value)
            };
            let mut s = String::new();
            for (name, d) in &axes {
                let w = reduced_tomogram(&rho, &basis, d)?[0];
                let _ = writeln!(s, "{b},{t},{name},{w},{},{neg},{}", fmt_opt(e), fmt_opt(bell));
            }
            Ok(s)
        });
        for r in rows {
            text.push_str(&r?);
        }
    }
    let manifest = json!({
        "format": EVOLVE_FORMAT,
        "verb": "evolve",
        "mutomo_version": env!("CARGO_PKG_VERSION"),
        "system": system_manifest(&a.system, &material),
        "fields_G": fields,
        "propagators": methods,
        "init": format!("{:?}", a.init),
        "t_max_ns": times.last(),
        "steps": times.len(),
        "bell_contraction": if a.no_bell { Value::Null } else { json!("elementwise") },
        "reduced_tomogram": "w(m = +1/2) of the muon along the axis",
    });
    emit(a.out.as_deref(), &text, manifest)
}

pub fn simulate(a: &SimulateArgs) -> CliResult<()> {
    let material = a.system.material()?;
    let b = single_field(&a.system, &material)?;
    let prop = a.system.propagator(&material, b)?;
    let basis = prop.basis()?;
    let rho0 = a.init.build(basis.dims().dim_b)?;
    let pol = EvolvedPolarization::new(&prop.prepare()?, &rho0)?;
    let geometry = match &a.detectors {
        Some(p) => DetectorGeometry::from_json(&std::fs::read_to_string(p)?)?,
        None => DetectorGeometry::six_axis(std::f64::consts::FRAC_PI_4, 1.0)?,
    };
    let model = DecayModel::default();
    let config = SimulationConfig::new(a.n_muons, a.seed, uniform_edges(0.0, a.t_max_ns, a.bin_ns)?)
        .with_background(a.background);
    let hist = simulate_events(&pol, &geometry, &model, &config, Exec::default())?;
    hist.save(&a.out)?;
    let estimate = estimate_tomogram(&hist, &geometry, &model, &EstimationOptions::default())?;
    let tomogram_path = sibling(&a.out, ".tomogram.csv");
    estimate.write_csv(std::fs::File::create(&tomogram_path)?)?;
    let manifest = json!({
        "verb": "simulate",
        "mutomo_version": env!("CARGO_PKG_VERSION"),
        "system": system_manifest(&a.system, &material),
        "field_G": b,
        "propagator": to_value(&prop.method),
        "init": format!("{:?}", a.init),
        "decay_model": to_value(&model),
        "geometry": to_value(&geometry),
        "histogram": hist.meta,
        "histogram_csv": a.out.with_extension("csv"),
        "tomogram_csv": tomogram_path,
    });
    write_json(&sibling(&a.out, ".manifest.json"), &manifest)
}

fn read_values(path: &Path) -> CliResult<(Vec<f64>, Option<Vec<f64>>)> {
    let text = std::fs::read_to_string(path)?;
    let mut values = Vec::new();
    let mut sigmas = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || (i == 0 && line.starts_with(|c: char| c.is_alphabetic())) {
            continue;
        }
        let bad = || CliError::Config(format!("{}:{}: expected 'w[,sigma]'", path.display(), i + 1));
        let mut parts = line.split(',').map(|p| p.trim().parse::<f64>());
        values.push(parts.next().ok_or_else(bad)?.map_err(|_| bad())?);
        if let Some(s) = parts.next() {
            sigmas.push(s.map_err(|_| bad())?);
        }
    }
    if !sigmas.is_empty() && sigmas.len() != values.len() {
        return Err(CliError::Config("sigma column must be given for every row or none".into()));
    }
    Ok((values, (!sigmas.is_empty()).then_some(sigmas)))
}

pub fn reconstruct(a: &ReconstructArgs) -> CliResult<()> {
    let material = a.system.material()?;
    let b = single_field(&a.system, &material)?;
    let mut plan = MeasurementPlan::with_default_times(a.system.propagator(&material, b)?, a.times)?;
    if let Some(v) = &a.extra_b {
        if v.len() != 3 {
            return Err(CliError::Config(format!("--extra-B takes Bx,By,Bz, got {} values", v.len())));
        }
        let field = Vector3::new(v[0], v[1], v[2]);
        let axis = a.extra_aniso_axis.or(a.system.aniso_axis(&material));
        let prop = PropagatorSpec::auto(material.hamiltonian(field, axis)?, PhysicalConstants::default())?;
        plan = plan.with_setting(MeasurementSetting {
            times: default_times(&prop, a.times)?,
            propagator: prop,
        });
    }
    let ident = identifiability(&plan)?;
    eprintln!(
        "design: {} values, rank {} of 15, condition number {:.3e}",
        plan.n_values(),
        ident.rank,
        ident.condition_number
    );
    let (values, sigmas, truth) = match &a.input {
        Some(p) => {
            let (v, s) = read_values(p)?;
            (v, s, None)
        }
        None => {
            let truth = a.init.build(plan.settings[0].propagator.basis()?.dims().dim_b)?;
            let mut v = forward_model(&truth, &plan)?;
            if a.sigma > 0.0 {
                let noise = Normal::new(0.0, a.sigma).map_err(|e| CliError::Config(e.to_string()))?;
                let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
                v.iter_mut().for_each(|x| *x += noise.sample(&mut rng));
            }
            let s = (a.sigma > 0.0).then(|| vec![a.sigma; v.len()]);
            (v, s, Some(truth))
        }
    };
    if values.len() != plan.n_values() {
        return Err(CliError::Config(format!("the plan has {} values, the input {}", plan.n_values(), values.len())));
    }
    let rec = reconstruct_initial(&values, sigmas.as_deref(), &plan)?;
    let error = truth.map(|t| frobenius(&(rec.rho0.matrix() - t.matrix())));
    let out = json!({
        "verb": "reconstruct",
        "mutomo_version": env!("CARGO_PKG_VERSION"),
        "system": system_manifest(&a.system, &material),
        "identifiability": to_value(&ident),
        "report": to_value(&rec.report),
        "synthesized_from": if a.input.is_none() { json!(format!("{:?}", a.init)) } else { Value::Null },
        "frobenius_error": error,
    });
    match &a.out {
        Some(p) => write_json(p, &out),
        None => print_stdout(&(serde_json::to_string_pretty(&out).map_err(|e| CliError::Numeric(e.to_string()))? + "\n")),
    }
}

pub fn bell(a: &BellArgs) -> CliResult<()> {
    let material = a.system.material()?;
    let fields = a.system.fields(&material);
    let times = a.time.times(&material)?;
    let mut text = format!(
        "# format: {BELL_FORMAT}\nB_G,t_ns,elementwise,matrix_trace,n1_mu_theta,n1_mu_phi,n2_mu_theta,n2_mu_phi,n1_e_theta,n1_e_phi,n2_e_theta,n2_e_phi\n"
    );
    for &b in &fields {
        let prop = a.system.propagator(&material, b)?;
        let prep = prop.prepare()?;
        let rho0 = a.init.build(prop.basis()?.dims().dim_b)?;
        let rows = Exec::default().map(&times, |&t| -> mutomo::Result<String> {
            let rho = prep.evolve(&rho0, t)?;
            let el = max_bell(&rho, BellContraction::Elementwise, Exec::Sequential)?;
            let tr = max_bell(&rho, BellContraction::MatrixTrace, Exec::Sequential)?;
            let s = &el.setting;
            let angles: Vec<String> = [&s.n1_mu, &s.n2_mu, &s.n1_e, &s.n2_e]
                .iter()
                .flat_map(|d| [d.theta().to_string(), d.phi().to_string()])
                .collect();
            Ok(format!("{b},{t},{},{},{}\n", el.value, tr.value, angles.join(",")))
        });
        for r in rows {
            text.push_str(&r?);
        }
    }
    let manifest = json!({
        "format": BELL_FORMAT,
        "verb": "bell",
        "mutomo_version": env!("CARGO_PKG_VERSION"),
        "system": system_manifest(&a.system, &material),
        "fields_G": fields,
        "init": format!("{:?}", a.init),
        "steps": times.len(),
    });
    emit(a.out.as_deref(), &text, manifest)
}

pub fn report(a: &ReportArgs) -> CliResult<()> {
    let material = a.system.material()?;
    let k = PhysicalConstants::default();
    let mut fields = Vec::new();
    for b in a.system.fields(&material) {
        let prop = a.system.propagator(&material, b)?;
        let gaps = prop.prepare()?.gaps();
        let ident = identifiability(&MeasurementPlan::with_default_times(prop.clone(), 5)?)?;
        fields.push(json!({
            "B_G": b,
            "propagator": to_value(&prop.method),
            "gaps_rad_per_ns": gaps,
            "single_setting_rank": ident.rank,
            "null_space": ident.null_space,
        }));
    }
    let out = json!({
        "verb": "report",
        "mutomo_version": env!("CARGO_PKG_VERSION"),
        "system": system_manifest(&a.system, &material),
        "a_coupling_rad_per_ns": material.a_coupling(),
        "delta_a_rad_per_ns": material.delta_a(),
        "critical_field_G": k.critical_field(material.a_coupling()),
        "fields": fields,
    });
    match &a.out {
        Some(p) => write_json(p, &out),
        None => print_stdout(&(serde_json::to_string_pretty(&out).map_err(|e| CliError::Numeric(e.to_string()))? + "\n")),
    }
}
