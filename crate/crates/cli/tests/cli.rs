use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_chaincert"))
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
        .status
        .code()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("scenario.cfg");
    fs::write(&p, text).unwrap();
    p
}

const SMALL_GRID: &str = r#"
theorem = "t3"
ratio = "6"
[space]
kind = "grid"
n = "6"
[phi]
kind = "power"
p = "2"
"#;

#[test]
fn twopoint_certificate() {
    let out = tempfile::tempdir().unwrap();
    assert_eq!(run(&scenarios().join("twopoint.cfg"), out.path(), &[]), 0);
    let cert: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.path().join("certificate.json")).unwrap()).unwrap();
    let first = &cert.as_array().unwrap()[0];
    assert_eq!(first["theorem"], "T3");
    assert!((first["B"].as_f64().unwrap() - 155.52).abs() < 1e-12);
    assert_eq!(first["R"], 6.0);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "ok");
}

#[test]
fn divergent_series_is_a_precondition_failure() {
    let out = tempfile::tempdir().unwrap();
    assert_eq!(run(&scenarios().join("diverge.cfg"), out.path(), &[]), 3);
    let summary = fs::read_to_string(out.path().join("summary.json")).unwrap();
    assert!(summary.contains("precondition"));
}

#[test]
fn corrupted_space_is_a_config_error() {
    let out = tempfile::tempdir().unwrap();
    assert_eq!(run(&scenarios().join("corrupt.cfg"), out.path(), &[]), 2);
    assert_eq!(run(&out.path().join("missing.cfg"), out.path(), &[]), 2);
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = scenarios().join("line.cfg");
    assert_eq!(run(&cfg, a.path(), &[]), 0);
    assert_eq!(run(&cfg, b.path(), &["--jobs", "1"]), 0);
    for f in ["certificate.json", "tau.csv", "pairs.csv", "verify.csv", "mc.csv", "summary.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let pairs = fs::read_to_string(a.path().join("pairs.csv")).unwrap();
    assert_eq!(pairs.lines().count(), 1 + 3);
    assert_eq!(pairs.lines().next().unwrap(), "s,t,d,tau,bound_t1,modulus_t3");
    let tau = fs::read_to_string(a.path().join("tau.csv")).unwrap();
    assert_eq!(tau.lines().count(), 1 + 9);
}

#[test]
fn empty_verification_writes_headers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_GRID);
    let out = dir.path().join("out");
    assert_eq!(run(&cfg, &out, &[]), 0);
    assert_eq!(fs::read_to_string(out.join("verify.csv")).unwrap(), "name,function,s,t,lhs,rhs,margin,pass\n");
    assert_eq!(fs::read_to_string(out.join("mc.csv")).unwrap(), "theorem,statistic,path,value\n");
}

#[test]
fn strict_mode_fails_on_warnings() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL_GRID.replace("ratio = \"6\"", "ratio = \"2\""));
    let out = dir.path().join("out");
    assert_eq!(run(&cfg, &out, &[]), 0);
    let summary = fs::read_to_string(out.join("summary.json")).unwrap();
    assert!(summary.contains("escalated"));
    assert_eq!(run(&cfg, &out, &["--strict"]), 4);
}

#[test]
fn failed_assertions_exit_four_and_are_listed() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
theorem = "t1"
ratio = "6"
[space]
kind = "random"
n = "12"
random_mass = true
seed = "3"
[phi]
kind = "power"
p = "2"
[psi]
kind = "power"
p = "4"
[functions]
random = "30"
seed = "5"
"#;
    let cfg = write_config(dir.path(), text);
    let out = dir.path().join("out");
    let code = run(&cfg, &out, &[]);
    let verify = fs::read_to_string(out.join("verify.csv")).unwrap();
    let failed = verify.lines().skip(1).filter(|l| l.ends_with(",false")).count();
    assert_eq!(code, 4);
    assert!(failed > 0);
    assert!(verify.lines().skip(1).all(|l| l.starts_with("1claim,")));
}

#[test]
fn mc_is_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
theorem = "both"
ratio = "6"
seed = "11"
[space]
kind = "brownian-grid"
n = "16"
[phi]
kind = "power"
p = "1"
[psi]
kind = "power"
p = "2"
[mc]
paths = "400"
"#;
    let cfg = write_config(dir.path(), text);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run(&cfg, &a, &["--jobs", "1"]), 0);
    assert_eq!(run(&cfg, &b, &["--jobs", "4"]), 0);
    assert_eq!(fs::read(a.join("mc.csv")).unwrap(), fs::read(b.join("mc.csv")).unwrap());
    let mc = fs::read_to_string(a.join("mc.csv")).unwrap();
    assert_eq!(mc.lines().count(), 1 + 400 * 3);
    let c = dir.path().join("c");
    assert_eq!(run(&cfg, &c, &["--seed", "12"]), 0);
    assert_ne!(fs::read(a.join("mc.csv")).unwrap(), fs::read(c.join("mc.csv")).unwrap());
}
