use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn dir(name: &str) -> PathBuf {
    let d = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conebridge")).args(args).arg("--out").arg(out).env_remove("CONEBRIDGE_OUT").output().unwrap()
}

#[test]
fn ode_suite_passes_and_reports_the_homogeneous_residual() {
    let d = dir("ode");
    let o = run(&["verify", "--suite", "ode"], &d);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("verify-ode.json")).unwrap()).unwrap();
    let h = v["checks"].as_array().unwrap().iter().find(|c| c["name"] == "homogeneous_residual").unwrap();
    assert!(h["measured"].as_f64().unwrap() <= 1e-12);
    assert_eq!(v["passed"], true);
}

#[test]
fn malformed_config_exits_with_a_line_number() {
    let d = dir("config");
    let cfg = d.join("bad.toml");
    std::fs::write(&cfg, "[run]\nseed = 1\n[solver]\ntol = \n").unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "verify", "--suite", "ode"], &d);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.toml:4:"));
}

#[test]
fn usage_errors_exit_with_two() {
    let d = dir("usage");
    assert_eq!(run(&["solve", "graph-dirichlet", "--preset", "nope"], &d).status.code(), Some(2));
    assert_eq!(run(&["solve", "nothing"], &d).status.code(), Some(2));
    assert_eq!(run(&["scan", "--eps", "0.1"], &d).status.code(), Some(2));
    assert_eq!(run(&["verify", "--suite", "bogus"], &d).status.code(), Some(2));
}

#[test]
fn solve_writes_trace_surface_and_summary() {
    let d = dir("solve");
    let o = run(&["solve", "graph-dirichlet", "--preset", "holomorphic-z2"], &d);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("solve-graph-dirichlet-holomorphic-z2.json")).unwrap()).unwrap();
    assert!(v["nodewise_error"].as_f64().unwrap() < 1e-6);
    assert!(d.join("trace-graph-dirichlet-holomorphic-z2.jsonl").exists());
    assert!(d.join("surface-graph-dirichlet-holomorphic-z2.obj").exists());
    let o = run(&["solve", "lo-annulus"], &d);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("solve-lo-annulus-default.json")).unwrap()).unwrap();
    assert!(v["final_residual"].as_f64().unwrap() < 1e-6);
}

#[test]
fn output_directory_comes_from_the_environment() {
    let d = dir("env");
    let o = Command::new(env!("CARGO_BIN_EXE_conebridge")).args(["verify", "--suite", "ode"]).env("CONEBRIDGE_OUT", &d).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(d.join("verify-ode.json").exists());
}
