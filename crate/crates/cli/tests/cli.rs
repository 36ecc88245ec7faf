use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn cryomux(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cryomux")).args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn simulate(dir: &Path, seed: &str) -> Output {
    cryomux(&["simulate", "--config", s(&data("example_config.json")), "--seed", seed, "--out-dir", s(dir)])
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn simulate_is_byte_identical_for_a_seed() {
    let (a, b, c) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let start = Instant::now();
    assert!(simulate(a.path(), "7").status.success());
    assert!(start.elapsed().as_secs() < 60);
    assert!(simulate(b.path(), "7").status.success());
    assert!(simulate(c.path(), "8").status.success());
    let (fa, fb, fc) = (dir_contents(a.path()), dir_contents(b.path()), dir_contents(c.path()));
    assert!(fa.iter().any(|(n, _)| n == "Q2_ref.csv") && fa.iter().any(|(n, _)| n == "Q2_mux.csv"));
    assert_eq!(fa, fb);
    assert_ne!(fa, fc);
}

#[test]
fn simulate_outputs_are_rfc4180_csv() {
    let dir = tempfile::tempdir().unwrap();
    assert!(simulate(dir.path(), "3").status.success());
    for (name, bytes) in dir_contents(dir.path()) {
        if name.ends_with(".csv") {
            let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(bytes.as_slice());
            let width = rdr.headers().unwrap().len();
            let rows: Vec<_> = rdr.records().collect::<Result<_, _>>().unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(!rows.is_empty() && rows.iter().all(|r| r.len() == width), "{name}");
        }
    }
}

#[test]
fn simulate_json_format() {
    let dir = tempfile::tempdir().unwrap();
    let out = cryomux(&["simulate", "--config", s(&data("example_config.json")), "--out-dir", s(dir.path()), "--format", "json"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&fs::read(dir.path().join("Q2_mux.json")).unwrap()).unwrap();
    assert_eq!(v["path"], "mux");
    assert_eq!(v["repetitions"].as_array().unwrap().len(), 72);
}

#[test]
fn missing_qubits_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, "{\n  \"seed\": 4\n}\n").unwrap();
    let out = cryomux(&["simulate", "--config", s(&cfg), "--out-dir", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("`qubits`") && err.contains("line"), "{err}");
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(cryomux(&["budget", "--bogus"]).status.code(), Some(2));
}

#[test]
fn fit_noise_on_bundled_sweep() {
    let v = stdout_json(&cryomux(&["fit-noise", s(&data("synthetic_sweep.csv"))]));
    let a = v["sqrt_a_uphi0"].as_f64().unwrap();
    let b = v["sqrt_b_nphi0_per_rthz"].as_f64().unwrap();
    assert!((a / 2.8 - 1.0).abs() < 0.1, "√A = {a}");
    assert!((b / 15.0 - 1.0).abs() < 0.1, "√B = {b}");
}

#[test]
fn fit_noise_rejects_zero_dispersion() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("z.csv");
    fs::write(&p, "dispersion_hz_per_phi0,gamma_phi_e_hz\n0,1\n0,2\n0,3\n0,4\n0,5\n").unwrap();
    let out = cryomux(&["fit-noise", s(&p)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not identifiable"));
}

#[test]
fn compare_identical_files() {
    let f = data("qubit2_ref.csv");
    let v = stdout_json(&cryomux(&["compare", "--ref", s(&f), "--mux", s(&f)]));
    for q in ["t1", "t2e", "gamma_phi"] {
        assert_eq!(v["quantities"][q]["p_value"].as_f64().unwrap(), 1.0, "{q}");
        assert_eq!(v["quantities"][q]["significant"], false);
    }
}

#[test]
fn compare_qubit2_fixture() {
    let v = stdout_json(&cryomux(&["compare", "--ref", s(&data("qubit2_ref.csv")), "--mux", s(&data("qubit2_mux.csv"))]));
    let g = &v["quantities"]["gamma_phi"];
    assert!(g["p_value"].as_f64().unwrap() < 0.05);
    assert_eq!(g["difference_sign"], 1);
    let n = v["added"]["n_add"].as_f64().unwrap();
    assert!((n / 0.022 - 1.0).abs() < 0.3, "n_add = {n}");
}

#[test]
fn compare_single_row_is_insufficient() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(data("qubit2_ref.csv")).unwrap();
    let p = dir.path().join("one.csv");
    fs::write(&p, text.lines().take(2).collect::<Vec<_>>().join("\n") + "\n").unwrap();
    let out = cryomux(&["compare", "--ref", s(&p), "--mux", s(&data("qubit2_mux.csv"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("insufficient"));
}

#[test]
fn compare_schema_mismatch_exits_2() {
    let out = cryomux(&["compare", "--ref", s(&data("synthetic_sweep.csv")), "--mux", s(&data("qubit2_mux.csv"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn budget_defaults() {
    let v = stdout_json(&cryomux(&["budget"]));
    assert_eq!(v["mux_count"], 100_000);
    assert_eq!(v["addressable_devices"], 400_000);
}

#[test]
fn rf_report_band_and_range() {
    let out = cryomux(&["rf-report", "--fmin", "1e9", "--fmax", "8e9", "--points", "57"]);
    assert!(out.status.success());
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        assert!(rec[2].parse::<f64>().unwrap() >= 30.0, "{rec:?}");
        rows += 1;
    }
    assert_eq!(rows, 57);
    assert_eq!(cryomux(&["rf-report", "--fmin", "1e9", "--fmax", "20e9"]).status.code(), Some(2));
}

#[test]
fn manifests_and_json_outputs_match_schemas() {
    let have_python = Command::new("python3").args(["-c", "import jsonschema, referencing"]).output().map(|o| o.status.success()).unwrap_or(false);
    if !have_python {
        eprintln!("skipping: python3 with jsonschema is not available");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(simulate(&d.join("sim"), "1").status.success());
    let fit_dir = d.join("fit");
    assert!(cryomux(&["fit-noise", s(&data("synthetic_sweep.csv")), "--out-dir", s(&fit_dir)]).status.success());
    let cmp_dir = d.join("cmp");
    assert!(cryomux(&["compare", "--ref", s(&data("qubit2_ref.csv")), "--mux", s(&data("qubit2_mux.csv")), "--out-dir", s(&cmp_dir)])
        .status
        .success());
    let bud_dir = d.join("bud");
    assert!(cryomux(&["budget", "--config", s(&data("example_config.json")), "--out-dir", s(&bud_dir)]).status.success());
    let rf_dir = d.join("rf");
    assert!(cryomux(&["rf-report", "--format", "json", "--out-dir", s(&rf_dir)]).status.success());

    let pairs: Vec<(&str, PathBuf)> = vec![
        ("config.schema.json", data("example_config.json")),
        ("summary.schema.json", d.join("sim/summary.json")),
        ("manifest.schema.json", d.join("sim/manifest.json")),
        ("noise_fit.schema.json", fit_dir.join("noise_fit.json")),
        ("manifest.schema.json", fit_dir.join("manifest.json")),
        ("compare.schema.json", cmp_dir.join("compare.json")),
        ("manifest.schema.json", cmp_dir.join("manifest.json")),
        ("budget.schema.json", bud_dir.join("budget.json")),
        ("manifest.schema.json", bud_dir.join("manifest.json")),
        ("rf_report.schema.json", rf_dir.join("rf_report.json")),
        ("manifest.schema.json", rf_dir.join("manifest.json")),
    ];
    let script = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scripts/validate_schemas.py");
    let mut args = vec![script.to_string_lossy().into_owned()];
    for (schema, file) in &pairs {
        args.push(schema.to_string());
        args.push(file.to_string_lossy().into_owned());
    }
    let out = Command::new("python3").args(&args).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
