use std::path::Path;
use std::process::{Command, Output};

use mott_extract::output::to_json;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mott-extract"))
        .args(args)
        .env_remove("MOTT_EXTRACT_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout_json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().unwrap().iter().map(String::from).collect();
    let rows = reader
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn scheme1_files_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for path in [&a, &b] {
        let out = run(&["scheme1", "--out", path.to_str().unwrap()]);
        assert!(out.status.success());
    }
    let first = std::fs::read(&a).unwrap();
    assert_eq!(first, std::fs::read(&b).unwrap());

    let report: Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(to_json(&report).as_bytes(), first.as_slice());
    let steps = report["report"]["steps"].as_array().unwrap();
    let names: Vec<&str> = steps.iter().map(|s| s["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["mott_prep", "selective_depop", "removal", "transfer"]);
    assert!(steps[1]["channels"][0]["p"].is_f64());
    assert_eq!(report["report"]["atoms_extracted"], 100);
    assert_eq!(report["config"]["lattice"]["site_detuning"], 52.0);
}

#[test]
fn csv_trajectory_has_one_row_per_sample() {
    let out = run(&["pulse", "--format", "csv", "--set", "output.trajectory_samples=57"]);
    assert!(out.status.success());
    let (header, rows) = csv_rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(header, ["t", "c0_re", "c0_im", "c1_re", "c1_im"]);
    assert_eq!(rows.len(), 57);
}

#[test]
fn csv_output_writes_config_echo() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "transfer",
        "--format",
        "csv",
        "--xi",
        "0.01",
        "--out",
        dir.path().join("t.csv").to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let echo = std::fs::read_to_string(dir.path().join("t.csv.config.toml")).unwrap();
    assert!(echo.contains("adiabaticity = 0.01"), "{echo}");
    let (header, rows) = csv_rows(&std::fs::read_to_string(dir.path().join("t.csv")).unwrap());
    assert_eq!(header[0], "t_us");
    assert_eq!(rows.len(), 401);
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_mott-extract"))
        .args(["pulse", "--out", "pulse.json"])
        .env("MOTT_EXTRACT_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("pulse.json").exists());
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(
        &path,
        "[pulse]\nenvelope_width = 10.0\n\n[lattice]\nsite_detuning = 40.0\n",
    )
    .unwrap();
    let from_file = stdout_json(&["pulse", "--config", path.to_str().unwrap()]);
    assert_eq!(from_file["report"]["omega0"], 10.0);
    assert_eq!(from_file["report"]["detuning"], 40.0);
    let flag_wins = stdout_json(&["pulse", "--config", path.to_str().unwrap(), "--omega0", "12"]);
    assert_eq!(flag_wins["report"]["omega0"], 12.0);
}

#[test]
fn exit_codes_follow_error_class() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[lattice]\nperiod = 2\n").unwrap();
    let out = run(&["scheme1", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lattice.period"));

    let out = run(&["pulse", "--set", "lattice.nonsense=1"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["lattice", "--set", "lattice.lpol_wavelength_nm=760"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));

    let out = run(&["pulse", "--out", "/nonexistent-dir/pulse.json"]);
    assert_eq!(out.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent-dir/pulse.json"));

    let missing = run(&["pulse", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(5));
}

#[test]
fn scheme1_failure_names_the_step() {
    let out = run(&["scheme1", "--set", "transfer.direction=shallow"]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("step `transfer`"), "{stderr}");
}

fn sweep_table(args: &[&str]) -> (Vec<String>, Vec<Vec<String>>) {
    let out = run(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    csv_rows(&String::from_utf8(out.stdout).unwrap())
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn sweep_adiabaticity_gives_closed_form_excitation() {
    let (header, rows) = sweep_table(&[
        "sweep",
        "--param",
        "transfer.adiabaticity",
        "--values",
        "0.0025,0.005,0.01",
        "--format",
        "csv",
    ]);
    let xi = column(&header, &rows, "transfer.adiabaticity");
    assert_eq!(xi, [0.0025, 0.005, 0.01]);
    for (x, p) in xi.iter().zip(column(&header, &rows, "transfer_excitation")) {
        assert!((p - 4.0 * x * x).abs() <= 1e-3 * 4.0 * x * x, "{x}: {p}");
    }
}

#[test]
fn sweep_period_gives_fraction_one_over_n() {
    let (header, rows) = sweep_table(&[
        "sweep",
        "--param",
        "lattice.period",
        "--values",
        "3,4,5",
        "--set",
        "lattice.total_sites=600",
        "--format",
        "csv",
    ]);
    for (n, f) in [3.0, 4.0, 5.0]
        .iter()
        .zip(column(&header, &rows, "extraction_fraction"))
    {
        assert!((f - 1.0 / n).abs() < 1e-11, "{n}: {f}");
    }
}

#[test]
fn sweep_detuning_flip_error_decreases_on_a_lobe() {
    let (header, rows) = sweep_table(&[
        "sweep",
        "--param",
        "lattice.site_detuning",
        "--values",
        "64,80,96,112,128",
        "--set",
        "pulse.envelope_width=13",
        "--set",
        "pulse.cutoff=0.38461538461538464",
        "--format",
        "csv",
    ]);
    let flips = column(&header, &rows, "pulse_flip_error");
    assert!(flips.windows(2).all(|w| w[1] < w[0]), "{flips:?}");
}

#[test]
fn sweep_rejects_unknown_path() {
    let out = run(&["sweep", "--param", "lattice.colour", "--values", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("transfer.adiabaticity"), "{stderr}");
}

#[test]
fn empty_config_echoes_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.toml");
    std::fs::write(&path, "").unwrap();
    let report = stdout_json(&["transfer", "--config", path.to_str().unwrap()]);
    assert_eq!(report["config"]["transfer"]["adiabaticity"], 0.005);
    assert_eq!(report["config"]["lattice"]["period"], 3);
    assert_eq!(report["config"]["pulse"]["envelope_width"], "delta/4");
    assert!(Path::new(&path).exists());
}
