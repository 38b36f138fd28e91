use std::path::Path;
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_hyperspec");

fn fixture(name: &str) -> String {
    format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(out: &Path, args: &[&str]) -> (i32, String) {
    let o = Command::new(BIN)
        .arg("--out")
        .arg(out)
        .args(args)
        .env("HYPERSPEC_WORKERS", "2")
        .output()
        .expect("binary runs");
    (o.status.code().unwrap_or(-1), String::from_utf8_lossy(&o.stderr).into_owned())
}

#[test]
fn obs_constant_reports_e42() {
    let dir = tempfile::tempdir().unwrap();
    let (code, log) = run(dir.path(), &["obs-constant", "--K", "1", "--Ctilde", "1", "--T", "1", "--lambda", "0.8"]);
    assert_eq!(code, 0, "{log}");
    assert!(log.contains("C_obs = e^{42.000000}"), "{log}");
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("obs-constant.json")).unwrap()).unwrap();
    assert!((summary["result"]["report"]["log_c_obs"].as_f64().unwrap() - 42.0).abs() < 1e-9);
    let table = std::fs::read_to_string(dir.path().join("obs-constant.csv")).unwrap();
    assert!(table.starts_with("m,l_m,l_m1,l_m2,epsilon"));
}

#[test]
fn kernel_check_mass_table() {
    let dir = tempfile::tempdir().unwrap();
    let (code, log) = run(dir.path(), &["kernel-check", "--t", "1", "--mass"]);
    assert_eq!(code, 0, "{log}");
    let table = std::fs::read_to_string(dir.path().join("kernel-check.csv")).unwrap();
    let row: Vec<&str> = table.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "mass");
    assert!((row[3].parse::<f64>().unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn thickness_certifies_and_refutes() {
    let dir = tempfile::tempdir().unwrap();
    let region = fixture("strips.region.toml");
    let args = ["thickness", "--region", &region, "--R", "4", "--delta", "1e-3", "--window", "-3,3,0.5,4"];
    let (code, log) = run(dir.path(), &args);
    assert_eq!(code, 0, "{log}");
    let s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("thickness.json")).unwrap()).unwrap();
    assert_eq!(s["result"]["certificate"]["mode"], "certified-on-grid");
    let (code, _) = run(dir.path(), &["thickness", "--region", &region, "--R", "0.3", "--delta", "0.1", "--window", "-3,3,0.5,4"]);
    assert_eq!(code, 0);
    let s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("thickness.json")).unwrap()).unwrap();
    assert_eq!(s["result"]["certificate"]["mode"], "refuted");
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [a.path(), b.path()] {
        assert_eq!(run(dir, &["cover", "--samples", "200", "--seed", "11"]).0, 0);
        assert_eq!(run(dir, &["kernel-eval", "--t", "0.5,2", "--d", "0,1.5,4"]).0, 0);
    }
    for f in ["cover.csv", "cover.json", "kernel-eval.csv", "kernel-eval.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let c = tempfile::tempdir().unwrap();
    run(c.path(), &["cover", "--samples", "200", "--seed", "12"]);
    assert_ne!(std::fs::read(a.path().join("cover.csv")).unwrap(), std::fs::read(c.path().join("cover.csv")).unwrap());
}

#[test]
fn projection_round_trips_coefficient_files() {
    let dir = tempfile::tempdir().unwrap();
    let written = dir.path().join("p.json");
    let coeffs = fixture("heat_t0.5.coeffs.json");
    let args = ["project", "--coeffs", &coeffs, "--lambda", "2", "--write", written.to_str().unwrap()];
    assert_eq!(run(dir.path(), &args).0, 0);
    let p = hyperspec::spectral::SpectralCoefficients::load(&written).unwrap();
    assert!(p.lambda_eff().unwrap() <= 2.0);
}

#[test]
fn exit_status_distinguishes_failures() {
    let dir = tempfile::tempdir().unwrap();
    let (code, log) = run(dir.path(), &["thickness", "--region", "/no/such/file.toml", "--R", "1", "--delta", "0.1", "--window", "0,1,1,2"]);
    assert_eq!(code, 2);
    assert!(log.contains("/no/such/file.toml"), "{log}");
    assert_eq!(run(dir.path(), &["obs-constant", "--lambda", "0.5"]).0, 2);
    assert_eq!(run(dir.path(), &["kernel-eval", "--t", "1"]).0, 2);
    // unreachable mass tolerance: an assertion failure, not an error
    let (code, log) = run(dir.path(), &["kernel-check", "--t", "1", "--mass", "--mass-tol", "1e-30"]);
    assert_eq!(code, 4, "{log}");
    assert!(log.contains("assertion failed"), "{log}");
    // a quadrature budget too small to converge
    let (code, log) = run(dir.path(), &["--max-subdivisions", "1", "--rel-tol", "1e-14", "kernel-check", "--t", "1", "--mass"]);
    assert_eq!(code, 3, "{log}");
}
