use std::path::PathBuf;
use std::process::Command;

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn hexweb(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_hexweb")).args(args).env("HEXWEB_THREADS", "2").output().unwrap()
}

#[test]
fn verify_passes_and_prints_one_line_per_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("flat.toml");
    let out = hexweb(&["verify", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 3, "{text}");
    assert!(dir.path().join("report.json").exists());
}

#[test]
fn failing_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("translation_not_positive.toml");
    let out = hexweb(&["verify", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("FAIL pde"));
}

#[test]
fn bad_input_exits_two() {
    let cfg = configs().join("flat.toml");
    let out = hexweb(&["verify", "--config", cfg.to_str().unwrap(), "--checks", "orbit"]);
    assert_eq!(out.status.code(), Some(2));
    let out = hexweb(&["verify", "--config", "/nonexistent/hexweb.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn seed_override_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("dual_dim2.toml");
    let out =
        hexweb(&["dual", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--seed", "42"]);
    assert_eq!(out.status.code(), Some(0));
    let json = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    assert!(json.contains("\"seed\": 42"), "{json}");
    assert!(dir.path().join("dual.svg").exists());
}
