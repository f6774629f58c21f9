use std::path::Path;
use std::process::{Command, Output};

fn mutomo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mutomo")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn evolve_free_muonium_follows_closed_forms() {
    let o = mutomo(&["evolve", "--material", "vacuum-mu", "--steps", "41", "--no-bell"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# format: mutomo-evolve/1"));
    assert_eq!(lines.next(), Some("B_G,t_ns,axis,w_reduced,E,negativity,max_bell"));
    let w0 = 2.0 * std::f64::consts::PI * 4453.0e-3;
    let mut n = 0;
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let t: f64 = f[1].parse().unwrap();
        let w: f64 = f[3].parse().unwrap();
        let e: f64 = f[4].parse().unwrap();
        let expect = if f[2] == "z" { 0.5 * (1.0 + 0.5 * (1.0 + (w0 * t).cos())) } else { 0.5 };
        assert!((w - expect).abs() < 1e-10, "{line}");
        assert!((e - (w0 * t).sin().powi(4) / 128.0).abs() < 1e-10, "{line}");
        assert!(f[6].is_empty());
        n += 1;
    }
    assert_eq!(n, 41 * 3);
}

#[test]
fn evolve_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let stem = dir.path().join("quartz");
    let o = mutomo(&["evolve", "--material", "quartz", "--steps", "3", "--out", stem.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("quartz.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2 + 4 * 3 * 3);
    let m = json(&dir.path().join("quartz.json"));
    assert_eq!(m["format"], "mutomo-evolve/1");
    assert_eq!(m["fields_G"], serde_json::json!([0.0, 790.0, 1580.0, 3160.0]));
    assert_eq!(m["bell_contraction"], "elementwise");
    for line in csv.lines().skip(2) {
        let b: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!((0.0..=1.0 + 1e-6).contains(&b), "{line}");
    }
}

#[test]
fn config_errors_exit_with_two() {
    for args in [
        &["evolve", "--material", "vacuum-mu", "--B", "10"][..],
        &["evolve", "--material", "no-such-material"],
        &["evolve", "--B-axis", "sideways"],
        &["evolve", "--steps", "0"],
        &["report", "--material", "quartz", "--aniso-axis", "x"],
        &["reconstruct", "--material", "quartz", "--B", "1,2"],
    ] {
        let o = mutomo(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn single_setting_reconstruction_is_rank_deficient() {
    let o = mutomo(&["reconstruct", "--material", "si-mustar", "--B", "33", "--aniso-axis", "x"]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("rank 13 of 15"), "{err}");
}

#[test]
fn two_setting_reconstruction_recovers_state() {
    let o = mutomo(&[
        "reconstruct",
        "--material",
        "si-mustar",
        "--B",
        "33",
        "--extra-B",
        "3,-7,33",
        "--extra-aniso-axis",
        "0.7,0.4",
        "--init",
        "singlet",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["identifiability"]["rank"], 15);
    assert!(r["frobenius_error"].as_f64().unwrap() < 1e-9);
    assert_eq!(r["report"]["clipped"], false);
}

#[test]
fn reconstruct_reads_values_file() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--material", "si-mustar", "--B", "33", "--extra-B", "3,-7,33", "--extra-aniso-axis", "0.7,0.4"];
    // Fifteen values per setting: three axes times five default times.
    let path = dir.path().join("w.csv");
    std::fs::write(&path, format!("w\n{}", "0.5\n".repeat(30))).unwrap();
    let o = mutomo(&[&["reconstruct"][..], &args, &["--input", path.to_str().unwrap()]].concat());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let re = r["report"]["rho0_real"].as_array().unwrap();
    assert!(r["report"]["residual_norm"].as_f64().unwrap() < 1e-12);
    // Flat data reconstructs the maximally mixed state.
    let diag: Vec<f64> = (0..4).map(|i| re[i].as_array().unwrap()[i].as_f64().unwrap()).collect();
    assert!(diag.iter().all(|d| (d - 0.25).abs() < 1e-9), "{diag:?}");

    std::fs::write(&path, "w\n0.5\n").unwrap();
    let o = mutomo(&[&["reconstruct"][..], &args, &["--input", path.to_str().unwrap()]].concat());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn preset_search_path_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("custom.toml"),
        "name = \"custom\"\nfamily = \"IsotropicMu\"\nA_MHz = 1000.0\nA_is_angular = false\nj_e = 0.5\n",
    )
    .unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_mutomo"))
        .args(["report", "--material", "custom"])
        .env("MUTOMO_PRESET_PATH", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let bc = r["critical_field_G"].as_f64().unwrap();
    assert!((bc - 4404.0f64.recip() * 1000.0 * 1579.1).abs() < 2.0, "{bc}");
    assert_eq!(r["fields"].as_array().unwrap().len(), 4);
}

#[test]
fn simulate_writes_histogram_estimate_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let stem = dir.path().join("run");
    let o = mutomo(&[
        "simulate",
        "--material",
        "quartz",
        "--B",
        "5",
        "--n-muons",
        "100000",
        "--t-max-ns",
        "4000",
        "--bin-ns",
        "400",
        "--seed",
        "9",
        "--out",
        stem.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let hist = std::fs::read_to_string(dir.path().join("run.csv")).unwrap();
    assert_eq!(hist.lines().count(), 1 + 6 * 10);
    let est = std::fs::read_to_string(dir.path().join("run.tomogram.csv")).unwrap();
    assert_eq!(est.lines().count(), 1 + 3 * 10);
    let m = json(&dir.path().join("run.manifest.json"));
    assert_eq!(m["histogram"]["seed"], 9);
    assert_eq!(m["histogram"]["n_muons"], 100000);
    let meta = json(&dir.path().join("run.json"));
    assert_eq!(meta["n_muons"], 100000);
}

#[test]
fn bell_reports_both_contractions() {
    let o = mutomo(&["bell", "--material", "vacuum-mu", "--steps", "3", "--t-max-ns", "0.1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("# format: mutomo-bell/1\n"));
    let w0 = 2.0 * std::f64::consts::PI * 4453.0e-3;
    for line in text.lines().skip(2) {
        let f: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(f.len(), 12);
        assert!((f[2] - (w0 * f[1]).sin().abs()).abs() < 1e-3, "{line}");
    }
}
