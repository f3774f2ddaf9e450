//! Exit-code and artifact checks for the `pint` binary.

use std::process::Command;

fn pint() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pint"))
}

#[test]
fn successful_run_exits_zero_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = pint()
        .args(["run", "--example", "1", "--n", "10", "--h", "0.1", "--t", "0.1"])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("converged in"), "stdout: {stdout}");
    assert!(dir.path().join("convergence.csv").exists());
    assert!(dir.path().join("summary.txt").exists());
}

#[test]
fn configuration_errors_exit_one() {
    for args in [
        vec!["run", "--example", "1", "--k", "7"],
        vec!["run", "--example", "9"],
        vec!["run", "--example", "1", "--kappa", "1.5"],
        vec!["run", "--no-such-flag"],
        vec!["run", "--config", "/nonexistent/path.cfg"],
    ] {
        let out = pint().args(&args).output().unwrap();
        assert_eq!(out.status.code(), Some(1), "args {args:?}");
    }
}

#[test]
fn help_exits_zero() {
    let out = pint().arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn divergence_exits_two() {
    // moderate interfacial width puts the frozen-Jacobian reaction term in
    // the amplified band of the waveform iteration
    let dir = tempfile::tempdir().unwrap();
    let out = pint()
        .args([
            "run", "--example", "4", "--eps-w", "0.15", "--t", "1.0", "--n", "50", "--h", "0.05",
        ])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("diverged"));
}

#[test]
fn sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = pint()
        .args([
            "run", "--example", "1", "--n", "10", "--h", "0.1", "--t", "0.1",
        ])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let out = pint()
        .args([
            "sweep", "--example", "1", "--n", "10", "--h", "0.1", "--t", "0.1", "--vary", "kappa",
            "--values", "0.5,0.3",
        ])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("sweep.csv").exists());
}
