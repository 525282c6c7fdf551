use std::process::Command;

fn qdini(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_qdini")).args(args).env_remove("QDINI_BUDGET").output().unwrap()
}

#[test]
fn demo_exits_zero_and_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = qdini(&["run", "builtin:re-sum", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["scenario"], "re-sum");
    assert_eq!(v["summary"]["mismatched"], 0);
}

#[test]
fn mismatch_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let text = qdini::builtin_scenario("re-sum").unwrap().to_json().unwrap();
    let path = dir.path().join("s.json");
    std::fs::write(&path, text.replacen(r#""expected": "inconclusive""#, r#""expected": "consistent""#, 1)).unwrap();
    let o = qdini(&["run", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn configuration_errors_exit_two() {
    assert_eq!(qdini(&["run", "builtin:nope"]).status.code(), Some(2));
    assert_eq!(qdini(&["run", "/nonexistent/scenario.json"]).status.code(), Some(2));
    assert_eq!(qdini(&["fuzz", "--suite", "nope", "--trials", "1"]).status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_qdini"))
        .args(["demo", "simon-dct"])
        .env("QDINI_BUDGET", "1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("budget"));
}

#[test]
fn unknown_builtin_lists_the_registry() {
    let o = qdini(&["run", "builtin:nope"]);
    let err = String::from_utf8_lossy(&o.stderr);
    for name in qdini::builtin_names() {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn fuzz_and_csv_output() {
    let o = qdini(&["fuzz", "--suite", "entropy", "--dim", "4", "--trials", "20", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["passed"], true);
    let o = qdini(&["run", "builtin:simon-dct", "--format", "csv"]);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("check,sequence,n,m,mu,gap,tail,flags"));
}

#[test]
fn list_names_builtins_and_suites() {
    let o = qdini(&["list"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("builtin:simon-dct") && text.contains("ladder"), "{text}");
}
