//! End-to-end runs of the command-line binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn zorich(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zorich"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn eval_at_origin() {
    let dir = tempfile::tempdir().unwrap();
    let o = zorich(&["eval", "--x", "0,0,0"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("Z(x) = (0, 0, 1)"), "{s}");
    assert!(s.contains(&format!("f(x) = (0, 0, {})", std::f64::consts::E)), "{s}");
    assert!(dir.path().join("eval.txt").exists());
    assert!(dir.path().join("eval_manifest.json").exists());
}

#[test]
fn invert_zero_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = zorich(&["invert", "--y", "0,0,0"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("zero input"));
}

#[test]
fn invert_recovers_a_point() {
    let dir = tempfile::tempdir().unwrap();
    let o = zorich(&["invert", "--y", "0,0,1"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("x = (0, 0, 0) in beam (0, 0)"), "{}", stdout(&o));
}

#[test]
fn invalid_arguments_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(zorich(&["eval", "--x", "1,2"], dir.path()).status.code(), Some(2));
    assert_eq!(zorich(&["cone", "--level", "0", "--x3-max", "1"], dir.path()).status.code(), Some(2));
    assert_eq!(zorich(&["coverage", "--u2", "0"], dir.path()).status.code(), Some(2));
}

#[test]
fn coverage_on_an_excluded_line_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let o = zorich(
        &["coverage", "--p", "0,0,0.5", "--direction", "1,0.4,0", "--budget", "200000"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("bounded image"), "{}", stdout(&o));
    let report = fs::read_to_string(dir.path().join("coverage_report.txt")).unwrap();
    assert!(report.contains("bounded_image=true"));
}

#[test]
fn coverage_output_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["coverage", "--u3", "0.3", "--budget", "100000", "--resolution", "32"];
    assert_eq!(zorich(&args, a.path()).status.code(), Some(0));
    assert_eq!(zorich(&args, b.path()).status.code(), Some(0));
    let ca = fs::read(a.path().join("coverage.csv")).unwrap();
    let cb = fs::read(b.path().join("coverage.csv")).unwrap();
    assert_eq!(ca, cb);
    let header = String::from_utf8_lossy(&ca).lines().next().unwrap().to_string();
    assert_eq!(header, "points_consumed,coverage,cap_hit_fraction");
}

#[test]
fn manifest_records_output_digests() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(zorich(&["cone", "--level", "2", "--x3-max", "2", "--n", "3"], dir.path()).status.code(), Some(0));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("cone_manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "cone");
    assert_eq!(manifest["parameters"]["level"], 2.0);
    let out = &manifest["outputs"][0];
    let path = Path::new(out["path"].as_str().unwrap());
    assert_eq!(out["sha256"].as_str().unwrap(), zorich::runner::sha256_file(path).unwrap());
    let mesh = fs::read_to_string(path).unwrap();
    assert!(mesh.starts_with("# triangle soup"));
    assert!(mesh.lines().skip(1).all(|l| l.split_whitespace().count() == 9));
}

#[test]
fn config_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "x = [0.0, 0.0, 1.0]\n").unwrap();
    let o = zorich(&["eval", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains(&format!("Z(x) = (0, 0, {})", std::f64::consts::E)));
    let o = zorich(&["eval", "--x", "0,0,0", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(stdout(&o).contains("Z(x) = (0, 0, 1)"));
}

#[test]
fn density_writes_its_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = zorich(&["density", "--budget", "20000", "--rungs", "2", "--u3", "0.45", "--delta", "0.02"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("density.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("delta,grid_n,valid_points,hits,fraction"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn trace_writes_a_point_cloud() {
    let dir = tempfile::tempdir().unwrap();
    let o = zorich(&["trace", "--u3", "0.5", "--budget", "20000", "--quick"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let cloud = fs::read_to_string(dir.path().join("trace.xyz")).unwrap();
    assert!(cloud.starts_with("# x y z"));
    for line in cloud.lines().skip(1) {
        let v: Vec<f64> = line.split_whitespace().map(|t| t.parse().unwrap()).collect();
        assert_eq!(v.len(), 3);
        assert!(v.iter().all(|c| c.abs() <= 10.0));
    }
}

#[test]
fn distortion_reports_the_slab_bound() {
    let dir = tempfile::tempdir().unwrap();
    let o = zorich(&["distortion", "--t1", "-1", "--t2", "0.5"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let rep = fs::read_to_string(dir.path().join("distortion.txt")).unwrap();
    assert!(rep.contains("pass=true"));
}

#[test]
fn quick_verify_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = zorich(&["verify", "--quick"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let rep = fs::read_to_string(dir.path().join("verify_report.txt")).unwrap();
    assert!(rep.lines().last().unwrap().ends_with("pass=true"));
}
