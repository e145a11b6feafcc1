use std::fs;
use std::process::Command;

fn meanfield() -> Command {
    Command::new(env!("CARGO_BIN_EXE_meanfield"))
}

#[test]
fn verify_prints_one_line_per_identity_and_succeeds() {
    let out = meanfield().arg("verify").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() >= 18);
    assert!(text.lines().all(|l| l.starts_with("PASS ")));
}

#[test]
fn solve_writes_report_table_and_solution() {
    let dir = tempfile::tempdir().unwrap();
    let out = meanfield()
        .args(["--threads", "2", "solve", "--lambda-over-pi", "12", "--epsilon", "1e-3", "--h-far", "0.08", "--p", "1.3"])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["descriptor"]["h_far"], 0.08);
    assert_eq!(report["descriptor"]["p"], 1.3);
    assert_eq!(report["report"]["converged"], true);
    let csv = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(csv.starts_with("run,lambda_over_pi,epsilon,delta,gamma,phi_norm,"));
    assert_eq!(csv.lines().count(), 2);
    let mesh = meanfield_core::mesh_io::load_mesh(dir.path().join("solution.mesh")).unwrap();
    assert_eq!(mesh.values_named("u").unwrap().len(), mesh.mesh.vertex_count());
}

#[test]
fn solve_reads_descriptor_file() {
    let dir = tempfile::tempdir().unwrap();
    let desc = dir.path().join("run.json");
    fs::write(
        &desc,
        r#"{"domain": {"outer": {"disk": {"center": [0, 0], "radius": 1}}, "hole_center": [0, 0]},
            "lambda_over_pi": 16, "epsilon": 1e-3, "kappa": 2, "h_far": 0.08, "p": 1.2,
            "max_iters": 50, "tol": 1e-10}"#,
    )
    .unwrap();
    let out = meanfield().arg("solve").arg(&desc).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mesh = meanfield_core::mesh_io::load_mesh(dir.path().join("o/solution.mesh")).unwrap();
    assert_eq!(mesh.mesh.symmetry().unwrap().kappa, 2);
}

#[test]
fn quantized_lambda_without_kappa_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let out = meanfield()
        .args(["solve", "--lambda-over-pi", "16", "--epsilon", "1e-3", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("kappa = 2"));
}

#[test]
fn sweep_runs_plan_and_overrides_output() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.json");
    fs::write(
        &plan,
        r#"{"name": "cli", "sweep": {"base": {"lambda_over_pi": 12, "epsilon": 1e-3, "h_far": 0.08},
            "epsilon": [1e-3, 1e-4]}, "output_dir": "/nonexistent/ignored"}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = meanfield().arg("sweep").arg(&plan).arg("--out").arg(&out_dir).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["aggregate.csv", "fits.csv", "metadata.json", "reports/run_000.json", "reports/run_001.json"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("delta_law"));
}

#[test]
fn failed_acceptance_run_gives_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.json");
    fs::write(
        &plan,
        r#"{"name": "cli", "runs": [{"lambda_over_pi": 12, "epsilon": 1e-3, "h_far": 0.08,
            "max_iters": 1, "acceptance": true}], "output_dir": "out"}"#,
    )
    .unwrap();
    let out = meanfield().current_dir(dir.path()).arg("sweep").arg(&plan).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(dir.path().join("out/reports/run_000.json").exists());
}

#[test]
fn oracle_emits_json_record() {
    let out = meanfield()
        .args(["oracle", "--lambda-over-pi", "12", "--epsilon", "1e-3", "--h-far", "0.1"])
        .output()
        .unwrap();
    let rec: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rec["op"], "cross_check");
    assert!(rec["error_estimate"].as_f64().unwrap() > 0.0);
    assert!(rec["outputs"]["newton_vs_fixed_point"].as_f64().unwrap() < 1e-6);
}

#[test]
fn bad_arguments_are_rejected() {
    assert!(!meanfield().args(["solve", "--epsilon", "1e-3"]).output().unwrap().status.success());
    assert!(!meanfield().arg("frobnicate").output().unwrap().status.success());
}
