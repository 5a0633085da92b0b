use quench_cli::commands::Command;
use quench_cli::config::RunConfig;
use quench_cli::execute;
use std::path::Path;
use std::process::Command as Process;

fn quench(dir: &Path, config: Option<&str>, sub: &str) -> (i32, String) {
    let mut cmd = Process::new(env!("CARGO_BIN_EXE_quench"));
    cmd.arg("--out").arg(dir.join("out"));
    if let Some(text) = config {
        let path = dir.join("run.toml");
        std::fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    let out = cmd.arg(sub).output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

#[test]
fn identical_configs_give_identical_manifests() {
    let cfg = RunConfig::default();
    for command in [Command::Sigma, Command::BasisCheck] {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        execute(command, &cfg, a.path()).unwrap();
        execute(command, &cfg, b.path()).unwrap();
        let read = |d: &Path| std::fs::read(d.join(command.name()).join("manifest.json")).unwrap();
        assert_eq!(read(a.path()), read(b.path()), "{}", command.name());
    }
}

#[test]
fn manifest_hashes_match_file_contents() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = execute(Command::Sigma, &RunConfig::default(), dir.path()).unwrap();
    assert!(!outcome.manifest.files.is_empty());
    for f in &outcome.manifest.files {
        let bytes = std::fs::read(dir.path().join("sigma").join(&f.path)).unwrap();
        assert_eq!(bytes.len(), f.bytes);
        assert_eq!(quench_cli::artifacts::sha256_hex(&bytes), f.sha256);
    }
}

#[test]
fn unknown_config_key_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = quench(dir.path(), Some("[basis]\nordr = 20\n"), "sigma");
    assert_eq!(code, 1);
}

#[test]
fn low_order_rule_fails_orthogonality() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout) = quench(dir.path(), Some("[basis]\norder = 2\n"), "basis-check");
    assert_eq!(code, 2);
    assert!(stdout.contains("FAIL orthogonality"), "{stdout}");
}

#[test]
fn basis_report_lists_exact_norms() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = quench(dir.path(), None, "basis-check");
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(dir.path().join("out/basis-check/basis_report.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let diag = v["diagonal"].as_array().unwrap();
    assert_eq!(diag[5]["norm_sq"], "3840");
    assert_eq!(diag[0]["norm_sq"], "1");
}

#[test]
fn sigma_table_has_the_secular_rows() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = execute(Command::Sigma, &RunConfig::default(), dir.path()).unwrap();
    assert!(outcome.passed());
    let text = std::fs::read_to_string(dir.path().join("sigma/sigma_table.csv")).unwrap();
    assert!(text.lines().any(|l| l.starts_with("4,2,secular-mode,-8/27,")));
    assert!(text.lines().any(|l| l.starts_with("4,4,constant-mode,-1/27,")));
}

#[test]
fn ode_mode_reproduces_the_quench_time() {
    let mut cfg = RunConfig::default();
    cfg.ic.kind = "ode".into();
    cfg.ic.a = 0.8;
    cfg.grid.nr = 32;
    cfg.grid.nphi = 16;
    let dir = tempfile::tempdir().unwrap();
    let outcome = execute(Command::Simulate, &cfg, dir.path()).unwrap();
    assert!(outcome.passed(), "{:?}", outcome.checks);
}

#[test]
fn violation_run_flags_only_its_target() {
    let mut cfg = RunConfig::default();
    cfg.renormalize.source = "violation".into();
    cfg.renormalize.violation = "in1".into();
    cfg.renormalize.s_values = vec![20.0];
    cfg.bootstrap.h = 0.2;
    let dir = tempfile::tempdir().unwrap();
    let outcome = execute(Command::Renormalize, &cfg, dir.path()).unwrap();
    assert!(outcome.passed(), "{:?}", outcome.checks);
    let text = std::fs::read_to_string(dir.path().join("renormalize/bootstrap_report.json")).unwrap();
    let rows: Vec<serde_json::Value> = serde_json::from_str(&text).unwrap();
    assert_eq!(rows.len(), 12);
}

#[test]
fn unknown_violation_is_rejected() {
    let mut cfg = RunConfig::default();
    cfg.renormalize.source = "violation".into();
    cfg.renormalize.violation = "in4".into();
    let dir = tempfile::tempdir().unwrap();
    assert!(execute(Command::Renormalize, &cfg, dir.path()).is_err());
}
