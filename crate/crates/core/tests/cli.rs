use std::process::{Command, Output};

fn glnk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glnk")).args(args).env_remove("GLNK_BUDGET").output().expect("run glnk")
}

fn records(out: &Output) -> Vec<serde_json::Value> {
    String::from_utf8_lossy(&out.stdout).lines().map(|l| serde_json::from_str(l).expect("json line")).collect()
}

#[test]
fn trivial_weyl_sum() {
    let out = glnk(&["kloosterman", "--n", "3", "--q", "2", "--w", "id", "--c", "1,1"]);
    assert_eq!(out.status.code(), Some(0));
    let r = records(&out);
    assert_eq!(r.len(), 1);
    assert_eq!(r[0]["status"], "pass");
    assert_eq!(r[0]["anchor"], "kloosterman-sum");
}

#[test]
fn output_is_deterministic() {
    let args = ["experiment", "lift-census", "--n", "2", "--q", "5", "--seed", "7"];
    let a = glnk(&args);
    let b = glnk(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn exit_codes() {
    assert_eq!(glnk(&["kloosterman", "--n", "3", "--q", "2", "--w", "nonsense", "--c", "1,1"]).status.code(), Some(2));
    assert_eq!(glnk(&["--budget", "10", "count-ball", "--n", "3", "--q", "2", "--T", "20"]).status.code(), Some(3));
    let fail = glnk(&["kloosterman", "--n", "3", "--q", "2", "--w", "wstar", "--c", "24,40"]);
    assert_eq!(fail.status.code(), Some(1));
    assert_eq!(records(&fail)[0]["status"], "fail");
}

#[test]
fn verify_smoke_groups_passes() {
    let out = glnk(&["verify", "groups", "smoke"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(records(&out).iter().all(|r| r["status"] == "pass"));
}
