//! End-to-end tests of the `prdg` binary: output files, exit codes and
//! deterministic reruns.

use std::path::Path;
use std::process::Command;

fn prdg() -> Command {
    Command::new(env!("CARGO_BIN_EXE_prdg"))
}

fn tmpdir(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("prdg-cli-test-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn read(dir: &Path, file: &str) -> String {
    std::fs::read_to_string(dir.join(file)).unwrap_or_else(|e| panic!("{file}: {e}"))
}

#[test]
fn solve_writes_the_three_outputs() {
    let dir = tmpdir("solve");
    let out = prdg()
        .args([
            "solve", "--example", "example1", "--order", "1", "--h", "0.2,0.1", "--out",
        ])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let errors = read(&dir, "errors.csv");
    assert!(errors.starts_with("h,n_dof,l2_error,l2_order,dg_error,dg_order,"));
    assert_eq!(errors.lines().count(), 3, "one header plus two mesh sizes");

    let orders = read(&dir, "orders.csv");
    assert_eq!(orders.lines().next().unwrap(), "h,l2_order,dg_order");

    let run: serde_json::Value = serde_json::from_str(&read(&dir, "run.json")).unwrap();
    assert_eq!(run["config"]["example"], "example1");
    assert_eq!(run["config"]["m"], 1);
    assert_eq!(run["config"]["solver"], "direct");
    assert_eq!(run["runs"].as_array().unwrap().len(), 2);
    assert!(run["runs"][1]["l2_order"].as_f64().unwrap() > 1.0);

    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn solve_is_deterministic_across_processes() {
    let d1 = tmpdir("det1");
    let d2 = tmpdir("det2");
    for d in [&d1, &d2] {
        let out = prdg()
            .args(["solve", "--example", "example6", "--order", "1", "--h", "0.2", "--out"])
            .arg(d)
            .output()
            .unwrap();
        assert!(out.status.success());
    }
    assert_eq!(read(&d1, "errors.csv"), read(&d2, "errors.csv"));
    assert_eq!(read(&d1, "run.json"), read(&d2, "run.json"));
    let _ = std::fs::remove_dir_all(&d1);
    let _ = std::fs::remove_dir_all(&d2);
}

#[test]
fn solve_honours_eta_and_cg_solver() {
    let dir = tmpdir("eta");
    let out = prdg()
        .args([
            "solve", "--example", "example1", "--order", "1", "--h", "0.2", "--eta", "40",
            "--solver", "cg", "--out",
        ])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let run: serde_json::Value = serde_json::from_str(&read(&dir, "run.json")).unwrap();
    assert_eq!(run["config"]["penalty"]["eta"], serde_json::json!([40.0, 40.0]));
    assert_eq!(run["config"]["solver"], "cg");
    assert!(run["runs"][0]["iterations"].as_u64().unwrap() > 0);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn report_efficiency_writes_csv() {
    let dir = tmpdir("report");
    let out = prdg()
        .args([
            "report", "--efficiency", "--example", "example1", "--orders", "1,2", "--h",
            "0.2,0.1", "--out",
        ])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = read(&dir, "efficiency.csv");
    assert_eq!(text.lines().next().unwrap(), "m,h,n_dof,l2_error");
    assert_eq!(text.lines().count(), 5);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn check_accepts_known_and_rejects_unknown_examples() {
    let ok = prdg().args(["check", "--example", "example5"]).output().unwrap();
    assert!(ok.status.success(), "stderr: {}", String::from_utf8_lossy(&ok.stderr));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("example5"));

    let bad = prdg().args(["check", "--example", "example9"]).output().unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("example9"));
}

#[test]
fn invalid_order_fails_with_a_message() {
    let dir = tmpdir("badorder");
    let out = prdg()
        .args(["solve", "--example", "example1", "--order", "0", "--h", "0.2", "--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("order"));
    let _ = std::fs::remove_dir_all(&dir);
}
