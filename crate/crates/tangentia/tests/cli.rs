use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tangentia"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

#[test]
fn missing_input_is_exit_2() {
    let d = tempfile::tempdir().unwrap();
    let out = run(&["alpha", "-i", "nope.json", "--point", "0", "--radius", "0.5"], d.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn bad_flag_is_usage_error() {
    let d = tempfile::tempdir().unwrap();
    let out = run(&["sweep", "--no-such-flag"], d.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_measure_reports_location() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("m.json"), "{\"ambient_dim\": 1, \"points\": [[0.0], ]}").unwrap();
    let out = run(&["alpha", "-i", "m.json", "--point", "0", "--radius", "0.5"], d.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("m.json"));
}

#[test]
fn flat_line_sweep_is_near_zero() {
    let d = tempfile::tempdir().unwrap();
    let gen = run(
        &["gen", "--kind", "flat", "--dim", "1", "--ambient", "2", "--spacing", "0.01", "-o", "line.json"],
        d.path(),
    );
    assert_eq!(gen.status.code(), Some(0));
    std::fs::write(d.path().join("p.json"), "[[0.0, 0.0]]").unwrap();
    let out = run(
        &["sweep", "-i", "line.json", "--probes", "p.json", "--depth", "3", "--r-max", "0.2", "-o", "out"],
        d.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(d.path().join("out/sweep.csv")).unwrap();
    let mut rows = csv.lines();
    let header: Vec<&str> = rows.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "alpha_1").unwrap();
    let mut n = 0;
    for line in rows {
        let v: f64 = line.split(',').nth(col).unwrap().parse().unwrap();
        assert!(v < 0.05, "alpha_1 = {v}");
        n += 1;
    }
    assert_eq!(n, 3);
    assert!(d.path().join("out/dini.json").exists());
}

#[test]
fn verify_lemmas_passes() {
    let d = tempfile::tempdir().unwrap();
    let out = run(&["verify-lemmas", "--trials", "3", "-o", "v.json"], d.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(d.path().join("v.json")).unwrap()).unwrap();
    assert!(v.to_string().contains("lemma_5_3"));
}
