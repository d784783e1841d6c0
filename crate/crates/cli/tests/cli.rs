use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_multimode"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("multimode-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn synth_then_verify_round_trips() {
    let s = scratch("sched.json");
    let t = scratch("target.json");
    let out = bin()
        .args(["synth", "--target", "sk_glass", "--n", "5", "--seed", "7", "--out"])
        .arg(&s)
        .arg("--target-out")
        .arg(&t)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = bin().arg("verify").arg("--schedule").arg(&s).arg("--target").arg(&t).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
}

#[test]
fn verify_rejects_a_different_target() {
    let s = scratch("a2a.json");
    let t = scratch("other.json");
    assert!(bin().args(["synth", "--target", "all_to_all", "--n", "4", "--out"]).arg(&s).status().unwrap().success());
    std::fs::write(&t, r#"{"n": 4, "j_upper": [1, 0, 0, 1, 0, 1]}"#).unwrap();
    let out = bin().arg("verify").arg("--schedule").arg(&s).arg("--target").arg(&t).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn qft_reports_unit_fidelity() {
    let out = bin().args(["qft", "--n", "3", "--verify"]).output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(v["direct_runtime"].as_f64().unwrap(), 3.0);
}

#[test]
fn nbody_reports_unit_fidelity() {
    let out = bin().args(["nbody", "--n", "4", "--subset", "1,0,3", "--jt", "0.4", "--verify"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn bench_writes_csv() {
    let p = scratch("bench.csv");
    let ok = bin()
        .args(["bench", "--experiment", "fig4a", "--grid", "4,5", "--instances", "2", "--out"])
        .arg(&p)
        .status()
        .unwrap();
    assert!(ok.success());
    let text = std::fs::read_to_string(&p).unwrap();
    assert!(text.starts_with("experiment,n,parameter,method,runtime_mean,runtime_std,instances,base_seed"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn unknown_target_is_an_error() {
    let out = bin().args(["synth", "--target", "nope", "--n", "4", "--out", "/dev/null"]).output().unwrap();
    assert!(!out.status.success());
}
