use std::process::Command;

use kcontact::cli::*;
use kcontact::KError;

fn cfg(dir: &std::path::Path, extra: &[(&str, &str)]) -> RunConfig {
    let mut pairs: Vec<(String, String)> = vec![
        ("preset".into(), "heisenberg3".into()),
        ("resolution".into(), "8".into()),
        ("samples".into(), "2".into()),
        ("out".into(), dir.display().to_string()),
    ];
    pairs.extend(extra.iter().map(|(k, v)| (k.to_string(), v.to_string())));
    RunConfig::default().with_overrides(&pairs).unwrap()
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kcontact"))
}

#[test]
fn malformed_json_reports_position() {
    let err = RunConfig::from_json("{\n  \"resolution\": 16,\n  \"seed\": }", "run.json").unwrap_err();
    assert_eq!(exit_code(&err), EXIT_CONFIG);
    let msg = err.to_string();
    assert!(msg.contains("run.json:3:"), "{msg}");
}

#[test]
fn configuration_errors_exit_with_two() {
    let e = RunConfig::from_json("{\"resolutoin\": 16}", "c.json").unwrap_err();
    assert_eq!(exit_code(&e), EXIT_CONFIG);
    let e = RunConfig::default().with_overrides(&[("bogus".into(), "1".into())]).unwrap_err();
    assert_eq!(exit_code(&e), EXIT_CONFIG);
    let mut c = RunConfig::default();
    c.preset = "torus7".into();
    let e = c.validate().unwrap_err();
    assert!(matches!(e, KError::UnknownPreset(_)));
    assert_eq!(exit_code(&e), EXIT_CONFIG);
    c.preset = "perturbed5".into();
    c.solver_tol = -1.0;
    assert_eq!(exit_code(&c.validate().unwrap_err()), EXIT_CONFIG);

    let dir = tempfile::tempdir().unwrap();
    let c = cfg(dir.path(), &[("preset", "perturbed5"), ("eps", "10")]);
    let e = run("curvature", &c).unwrap_err();
    assert!(matches!(e, KError::PerturbationPositivity { .. }));
    assert_eq!(exit_code(&e), EXIT_CONFIG);
    let c = cfg(dir.path(), &[("torus", "1;cos:1")]);
    assert_eq!(exit_code(&run("futaki", &c).unwrap_err()), EXIT_CONFIG);
    // the Reeb field must be in the torus
    let c = cfg(dir.path(), &[("torus", "cos:1,0")]);
    let e = run("futaki", &c).unwrap_err();
    assert!(matches!(e, KError::InvalidTorus(_)));
    assert_eq!(exit_code(&e), EXIT_CONFIG);
}

#[test]
fn overrides_parse_and_apply() {
    let args: Vec<String> = ["--preset", "product5", "--resolution", "12", "--eps", "0.02", "--torus", "1;cos:0,0,1,0"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let pairs = parse_overrides(&args).unwrap();
    let c = RunConfig::default().with_overrides(&pairs).unwrap();
    assert_eq!(c.preset, "product5");
    assert_eq!(c.resolution, 12);
    assert_eq!(c.eps, 0.02);
    assert_eq!(c.torus, vec!["1".to_string(), "cos:0,0,1,0".to_string()]);
    assert!(parse_overrides(&["--seed".to_string()]).is_err());
    assert!(parse_overrides(&["seed".to_string(), "1".to_string()]).is_err());
}

#[test]
fn reports_are_reproducible_up_to_timing() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let strip = |dir: &std::path::Path| {
        let c = cfg(dir, &[("preset", "random-j"), ("resolution", "16")]);
        let r = run("curvature", &c).unwrap();
        let mut v = serde_json::to_value(&r).unwrap();
        v["timing"] = serde_json::Value::Null;
        v["config"]["out"] = serde_json::Value::Null;
        assert!(dir.join("report.json").exists());
        assert!(dir.join("fields/phi.kcon").exists());
        v
    };
    assert_eq!(strip(a.path()), strip(b.path()));
}

#[test]
fn subcommands_pass_on_the_flat_model() {
    let dir = tempfile::tempdir().unwrap();
    let c = cfg(dir.path(), &[]);
    for sub in ["check-identities", "curvature", "ddc-lemma", "futaki", "flow"] {
        let r = run(sub, &c).unwrap();
        assert!(r.passed, "{sub}: {:?}", r.failed_checks());
    }
    let c5 = cfg(dir.path(), &[("preset", "heisenberg5")]);
    let r = run("harmonic-dims", &c5).unwrap();
    assert!(r.passed);
    assert_eq!(r.results["b_plus"], 3);
    assert_eq!(r.results["h_minus"], 2);
    assert!(matches!(run("nonsense", &c), Err(KError::Config(_))));
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ \"seed\": 1,, }").unwrap();
    let out = bin().args(["curvature", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.json:1:"));

    let out = bin().args(["curvature", "--preset", "nowhere"]).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));

    let good = dir.path().join("good.json");
    let outdir = dir.path().join("out");
    std::fs::write(
        &good,
        format!("{{\"preset\": \"heisenberg3\", \"resolution\": 8, \"samples\": 2, \"out\": {:?}}}", outdir.display().to_string()),
    )
    .unwrap();
    let out = bin().args(["check-identities", "--config"]).arg(&good).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_PASS), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).lines().any(|l| l.starts_with("PASS ")));
    assert!(outdir.join("report.json").exists());

    // tolerance too tight for floating point: a failed check, not an error
    let out = bin()
        .args(["check-identities", "--config"])
        .arg(&good)
        .args(["--preset", "random-j", "--resolution", "16", "--identity-tol", "1e-300"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_CHECK_FAILED));
}
