use std::path::Path;
use std::process::{Command, Output};

fn mac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mac"))
        .args(args)
        .env_remove("MAC_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn solve_fig1_greedy() {
    let o = mac(&["solve", "--instance", "fig1", "--budget", "1", "--method", "greedy", "--side", "s0"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), r#"{"method":"greedy","picks":[1],"values":[11],"f":11,"ratio":1.0}"#);
}

#[test]
fn solve_from_file_matches_builtin() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fig1.json");
    std::fs::write(&path, mac_core::Instance::fig1().to_json()).unwrap();
    let o = mac(&["solve", "--instance", path.to_str().unwrap(), "--budget", "2", "--method", "brute", "--side", "s0"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["picks"], serde_json::json!([1, 2]));
    assert_eq!(v["f"], 11);
}

#[test]
fn run_trace_matches_fig1_timeline() {
    let o = mac(&["run", "--instance", "fig1", "--control", "3,4", "--trace"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t=0 zeros=[3,4] ones=[]");
    assert_eq!(lines[1], "t=1 zeros=[3,4] ones=[6,7,8]");
    assert_eq!(lines[2], "t=2 zeros=[3,4] ones=[6,7,8]");
    let v: serde_json::Value = serde_json::from_str(lines[3]).unwrap();
    assert_eq!(v["f"], 6);
    assert_eq!(v["undecided"], serde_json::json!([1, 2, 5]));
}

#[test]
fn staged_run_reaches_the_joint_profile() {
    let joint = mac(&["run", "--instance", "fig1", "--control", "3,4"]);
    let staged = mac(&["run", "--instance", "fig1", "--stage", "3", "--stage", "4"]);
    let a: serde_json::Value = serde_json::from_str(&stdout(&joint)).unwrap();
    let b: serde_json::Value = serde_json::from_str(&stdout(&staged)).unwrap();
    assert_eq!(a["zeros"], b["zeros"]);
    assert_eq!(a["ones"], b["ones"]);
}

#[test]
fn refusal_exits_one_with_single_line() {
    let o = mac(&["verify", "greedy-bound", "--graph", "fig1", "--budget", "9", "--draws", "10"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error: budget 9 exceeds"));
    assert!(stdout(&o).is_empty());
}

#[test]
fn io_and_parse_errors_exit_two() {
    assert_eq!(mac(&["run", "--instance", "/no/such/file.json"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"n0\": 1,").unwrap();
    let o = mac(&["run", "--instance", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr(&o).lines().count(), 1);
    assert_eq!(mac(&["solve", "--instance", "fig1", "--budget", "1", "--bogus"]).status.code(), Some(2));
    assert_eq!(mac(&["verify", "submodularity", "--graph", "complete:3y3"]).status.code(), Some(2));
}

#[test]
fn generate_is_seed_deterministic() {
    let args = ["generate", "--n0", "5", "--n1", "6", "--p", "0.5", "--c-mode", "well-behaved"];
    let a = mac(&args);
    let b = mac(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let inst = mac_core::Instance::parse(&stdout(&a)).unwrap();
    assert_eq!((inst.n0(), inst.n1()), (5, 6));

    let c = Command::new(env!("CARGO_BIN_EXE_mac")).args(args).env("MAC_SEED", "99").output().unwrap();
    let d = mac(&[&args[..], &["--seed", "99"]].concat());
    assert_eq!(c.stdout, d.stdout);
}

#[test]
fn verify_submodularity_reports() {
    let o = mac(&["verify", "submodularity", "--graph", "complete:6x6", "--trials", "500", "--seed", "1"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["trials"], 500);
    assert_eq!(v["topology"], "complete:6x6");
    let pass = v["pass"].as_bool().unwrap();
    assert_eq!(o.status.code(), Some(if pass { 0 } else { 1 }));
}

#[test]
fn verify_selection_rule_on_fig1() {
    let o = mac(&[
        "verify", "selection-rule", "--graph", "fig1", "--cell", "3", "--tail", "4", "--draws", "2000", "--seed", "3",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["tv_distance"].as_f64().unwrap() <= 0.05);
}

fn sweep_to(dir: &Path, name: &str, jobs: &str) -> Vec<u8> {
    let out = dir.join(name);
    let o = mac(&[
        "sweep", "--sizes", "4:8:4", "--probs", "0.3,0.8", "--samples", "3", "--out",
        out.to_str().unwrap(), "--no-timing", "--jobs", jobs, "--seed", "5",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.join(format!("{name}.manifest.json")).exists());
    std::fs::read(out).unwrap()
}

#[test]
fn sweep_is_byte_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let a = sweep_to(dir.path(), "a.csv", "1");
    let b = sweep_to(dir.path(), "b.csv", "2");
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().next().unwrap(), "n,p,sample,seed,budget,method,f,edges,ratio,runtime_ms,steps");
    assert_eq!(text.lines().count(), 1 + 2 * 2 * 3 * 2);
}

#[test]
fn sweep_rejects_odd_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let o = mac(&["sweep", "--sizes", "5", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}
