use std::path::PathBuf;

use hexweb::cli_io::{evaluate, load_config, parse_config, run_pipeline, Check, Command, RunConfig, Status};
use hexweb::HexError;

fn config(name: &str) -> RunConfig {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.toml"));
    load_config(&p).unwrap()
}

fn in_dir(cfg: RunConfig, command: Command, dir: &tempfile::TempDir) -> RunConfig {
    cfg.with_overrides(Some(command), Some(dir.path().to_path_buf()), None, None).unwrap()
}

#[test]
fn minimal_config_uses_defaults() {
    let cfg = parse_config("[family.constant_curvature]\nkind = \"flat\"\n").unwrap();
    assert_eq!(cfg.command, Command::Verify);
    assert_eq!(cfg.grid.n, 20);
    assert_eq!(cfg.integrator.rel_tol, 1e-12);
    let (report, _, _) = evaluate(&cfg);
    assert!(report.all_passed, "{report:?}");
    assert_eq!(report.exit_code(), 0);
}

#[test]
fn malformed_toml_reports_position() {
    match parse_config("[family.translation\nf0 = 1") {
        Err(HexError::Parse { line, .. }) => assert_eq!(line, 1),
        other => panic!("{other:?}"),
    }
}

#[test]
fn exactly_one_family_is_required() {
    let two = "[family.constant_curvature]\nkind = \"flat\"\n[family.dual_dim3]\neps = 1.0\n";
    assert!(matches!(parse_config(two), Err(HexError::Validation { ref field, .. }) if field == "family"));
    assert!(matches!(parse_config("seed = 3\n"), Err(HexError::Validation { ref field, .. }) if field == "family"));
}

#[test]
fn unknown_and_inapplicable_checks_are_rejected() {
    let cfg = config("flat");
    let bad = cfg.clone().with_overrides(None, None, None, Some("pde,nope"));
    assert!(matches!(bad, Err(HexError::Validation { ref field, .. }) if field == "checks"));
    assert!(cfg.with_overrides(None, None, None, Some("orbit")).is_err());
}

#[test]
fn check_subset_runs_only_those_checks() {
    let cfg = config("translation").with_overrides(None, None, None, Some("curvature,pde")).unwrap();
    let (report, timing, _) = evaluate(&cfg);
    let names: Vec<&str> = report.checks.iter().map(|c| c.name.as_str()).collect();
    assert_eq!(names, ["pde", "curvature"]);
    assert!(timing.contains_key("total"));
}

#[test]
fn positivity_failure_has_witness_and_nonzero_exit() {
    let (report, _, _) = evaluate(&config("translation_not_positive"));
    assert!(!report.all_passed);
    assert_eq!(report.exit_code(), 1);
    let pde = report.check("pde").unwrap();
    assert_eq!(pde.status, Status::Fail);
    assert!(pde.error.as_deref().unwrap().contains("positiv"));
    assert!(pde.witness.as_ref().is_some_and(|w| !w.is_empty()));
    assert!(pde.tolerance > 0.0);
}

#[test]
fn branch_curvature_constant_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = in_dir(config("dilation_branch_a"), Command::Verify, &dir);
    cfg.checks = Some(vec![Check::Curvature]);
    let out = run_pipeline(&cfg).unwrap();
    let k = out.report.curvature_constant.unwrap();
    assert!((k + 16.0 / 81.0).abs() < 1e-8, "{k}");
    let json: serde_json::Value = serde_json::from_str(&out.json).unwrap();
    assert!((json["curvature_constant"].as_f64().unwrap() - k).abs() < 1e-15);
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["checks"][0]["name"], "curvature");
}

#[test]
fn generate_writes_metric_samples() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_pipeline(&in_dir(config("translation"), Command::Generate, &dir)).unwrap();
    let text = std::fs::read_to_string(dir.path().join("metric.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("u,v,E,F,G"));
    assert_eq!(lines.count(), 400);
    assert!(out.files.iter().any(|f| f.ends_with("report.json")));
    assert!(dir.path().join("timing.json").exists());
}

#[test]
fn plot_writes_web_svg() {
    let dir = tempfile::tempdir().unwrap();
    run_pipeline(&in_dir(config("flat"), Command::Plot, &dir)).unwrap();
    let svg = std::fs::read_to_string(dir.path().join("web.svg")).unwrap();
    assert!(svg.starts_with("<?xml"));
    for k in 1..=3 {
        let g = format!("<g id=\"foliation-{k}\"");
        let start = svg.find(&g).unwrap();
        let body = &svg[start..start + svg[start..].find("</g>").unwrap()];
        assert!(body.matches("<polyline").count() > 1, "foliation {k}");
    }
    let leaves = std::fs::read_to_string(dir.path().join("leaves.csv")).unwrap();
    assert!(leaves.starts_with("foliation,leaf,index,u,v"));
}

#[test]
fn dual_writes_scene_and_rejects_metric_families() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_pipeline(&in_dir(config("dual_dim3"), Command::Dual, &dir)).unwrap();
    assert!(out.report.all_passed);
    let svg = std::fs::read_to_string(dir.path().join("dual.svg")).unwrap();
    for id in ["quadric", "sections", "focal-curves"] {
        assert!(svg.contains(&format!("id=\"{id}\"")));
    }
    let bad = config("flat").with_overrides(Some(Command::Dual), None, None, None);
    assert!(bad.is_err());
}

#[test]
fn trace_writes_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = in_dir(config("spiral"), Command::Trace, &dir);
    cfg.grid.trajectories = 5;
    let out = run_pipeline(&cfg).unwrap();
    assert!(out.report.all_passed, "{:?}", out.report);
    assert!(std::fs::read_to_string(dir.path().join("trajectories.csv")).unwrap().lines().count() > 5);
}

#[test]
fn seed_changes_samples_but_not_verdict() {
    let run = |seed| {
        let mut cfg = config("dilation").with_overrides(None, None, Some(seed), Some("integral")).unwrap();
        cfg.grid.probe = 4;
        evaluate(&cfg).0
    };
    let (a, b) = (run(1), run(2));
    assert!(a.all_passed && b.all_passed);
    assert_ne!(a.check("integral").unwrap().witness, b.check("integral").unwrap().witness);
}
