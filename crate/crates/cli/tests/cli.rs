use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fracdir"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let p = dir.join("scenario.json");
    std::fs::write(&p, body).unwrap();
    p
}

const BALL: &str = r#"{
    "domain": {"kind": "ball", "center": [0.0], "radius": 1.0},
    "params": {"d": 1, "alpha": 1.0},
    "problem": {"g": {"kind": "bump", "center": [2.0], "radius": 0.5}, "method": "both",
                "points": [[0.0], [0.6]]},
    "suites": [],
    "grids": {},
    "mc": {"paths": 4000, "seed": 2}
}"#;

#[test]
fn solve_elliptic_writes_report_and_solution() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BALL);
    let out = dir.path().join("out");
    let st = bin().args(["solve-elliptic", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert!(st.success());
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["schema"], "fracdir-report/1");
    assert_eq!(report["verdict"], "pass");
    let sol = std::fs::read_to_string(out.join("solution.csv")).unwrap();
    assert!(sol.starts_with("x1,d_x,value,error,provenance"));
    assert!(sol.contains("kernel-quadrature") && sol.contains("walk-on-spheres"));
    assert!(out.join("solve-elliptic.csv").exists());
}

#[test]
fn seed_flag_gives_identical_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BALL);
    let mut verdicts = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("o{k}"));
        let st = bin().args(["solve-elliptic", "--seed", "11", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
        assert!(st.success());
        let v: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
        assert_eq!(v["seed"], 11);
        verdicts.push(v["verdicts"].to_string());
    }
    assert_eq!(verdicts[0], verdicts[1]);
}

#[test]
fn kernel_verification_writes_kernel_and_wos_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &BALL.replace("\"suites\": []", "\"suites\": [\"exit-law\"]"));
    let out = dir.path().join("out");
    let st = bin().args(["verify-kernels", "--paths", "20000", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert!(st.success());
    let raw = std::fs::read_to_string(out.join("wos-raw.csv")).unwrap();
    assert!(raw.lines().count() > 1000);
    assert!(out.join("exit-law.csv").exists());
}

#[test]
fn invalid_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &BALL.replace("\"d\": 1", "\"d\": 3"));
    let st = bin().args(["norms", "--config"]).arg(&cfg).arg("--out").arg(dir.path().join("o")).status().unwrap();
    assert_eq!(st.code(), Some(2));
}

#[test]
fn failing_suite_exits_with_one() {
    // the exit-law CDF is one-dimensional: the suite fails on a disc
    let body = r#"{
        "domain": {"kind": "ball", "center": [0.0, 0.0], "radius": 1.0},
        "params": {"d": 2, "alpha": 1.0},
        "problem": {"g": {"kind": "bump", "center": [2.0, 0.0], "radius": 0.5}},
        "suites": ["exit-law"],
        "mc": {"paths": 100, "seed": 1}
    }"#;
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), body);
    let st = bin().args(["verify-kernels", "--config"]).arg(&cfg).arg("--out").arg(dir.path().join("o")).status().unwrap();
    assert_eq!(st.code(), Some(1));
}

#[test]
fn shipped_configs_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for e in std::fs::read_dir(&dir).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "json") {
            fracdir::harness::Scenario::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            n += 1;
        }
    }
    assert!(n >= 5);
}

#[test]
fn shipped_elliptic_config_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/elliptic-ball.json");
    let st = bin().args(["solve-elliptic", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).args(["--paths", "5000"]).status().unwrap();
    assert_eq!(st.code(), Some(0));
}
