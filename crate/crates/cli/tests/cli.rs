use std::path::PathBuf;
use std::process::{Command, Output};

fn gluekit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gluekit")).args(args).env_remove("GLUEKIT_SEED").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scratch(name: &str, text: &str) -> PathBuf {
    let path = std::env::temp_dir().join(format!("gluekit-cli-{}-{name}", std::process::id()));
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn two_disks_glues() {
    let o = gluekit(&["glue-ring", "--fixture", "two-disks", "--prec", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("status: affine"));
    assert!(s.contains("generators: 3"));
    assert!(s.contains("generator g1: 5*x"));
}

#[test]
fn reports_are_deterministic() {
    let args = ["glue-ring", "--fixture", "two-disks", "--prec", "3", "--format", "report"];
    let (a, b) = (gluekit(&args), gluekit(&args));
    assert_eq!(stdout(&a), stdout(&b));
    let s = stdout(&a);
    assert!(s.starts_with("gluekit-report: 1\nkind: glue-ring\n"));
    assert!(!s.contains(" ms"));
}

#[test]
fn unit_circle_is_certified_negative() {
    let o = gluekit(&["classify", "--fixture", "unit-circle", "--prec", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("witness: xb mod p on c"));
}

#[test]
fn low_degree_bound_is_inconclusive() {
    let o = gluekit(&["check-dense", "--fixture", "two-disks", "--degree-bound", "1"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn parse_errors_exit_64() {
    let bad = scratch("bad", "module M over Zp(5)[x] { gens 2; rel [x, -1 }\n");
    let o = gluekit(&["glue-module", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1, column"));
    assert_eq!(gluekit(&["--profile", "Zp(6)", "classify", "--fixture", "two-disks"]).status.code(), Some(64));
    let o = Command::new(env!("CARGO_BIN_EXE_gluekit")).args(["verify-examples"]).env("GLUEKIT_SEED", "seven").output().unwrap();
    assert_eq!(o.status.code(), Some(64));
}

#[test]
fn module_round_trip() {
    let m = scratch("m", "module M over Zp(5)[x] { gens 2; rel [x, -1]; rel [0, p^2]; }\n");
    let o = gluekit(&["glue-module", m.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("round-trip: certified"));
}

#[test]
fn specialize_matrix() {
    let o = gluekit(&["specialize", "--matrix", "1,5;1,1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("reduction: 1,0;1,1"));
    let o = gluekit(&["specialize", "--matrix", "1,1/5;0,1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn groebner_basis() {
    let o = gluekit(&["groebner", "--vars", "x", "x^2 - 1", "x^3 - x^2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("basis 1: x - 1"));
}

#[test]
fn verify_examples_passes() {
    let o = gluekit(&["verify-examples", "--prec", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let o = gluekit(&["verify-examples", "--degree-bound", "1"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("two-disks        inconclusive"));
}
