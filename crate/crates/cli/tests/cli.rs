use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn nforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nforge"))
        .args(args)
        .env_remove("NFORGE_BUDGET_MB")
        .output()
        .expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nforge-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("stderr is JSON")
}

#[test]
fn construct_is_byte_identical() {
    let (a, b, rep) = (scratch("a.digits"), scratch("b.digits"), scratch("run.json"));
    for path in [&a, &b] {
        let out = nforge(&["construct", "--schedule", "toy-k4", "--out", path.to_str().unwrap(), "--report", rep.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let text = std::fs::read_to_string(&a).unwrap();
    assert!(text.starts_with("NFORGE v1 schedule=toy-k4"));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&rep).unwrap()).unwrap();
    assert_eq!(report["steps"].as_array().unwrap().len(), 2);
    assert!(report["census"]["totals"]["f_evaluations"].as_u64().unwrap() > 0);
}

#[test]
fn threads_do_not_change_output() {
    let one = nforge(&["construct", "--schedule", "toy-k5"]);
    let two = nforge(&["--threads", "2", "construct", "--schedule", "toy-k5"]);
    assert!(one.status.success());
    assert_eq!(one.stdout, two.stdout);
}

#[test]
fn digits_and_curve() {
    let path = scratch("d.digits");
    let out = nforge(&["digits", "--schedule", "toy-k6", "--n", "120", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let out = nforge(&["discrepancy", "--digits", path.to_str().unwrap(), "--base", "2", "--checkpoints", "16,64"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let curve = stdout_json(&out);
    assert_eq!(curve["points"].as_array().unwrap().len(), 2);
    let out = nforge(&["discrepancy", "--digits", path.to_str().unwrap(), "--checkpoints", "1024"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "insufficient_digits");
}

#[test]
fn control_points_file() {
    let path = scratch("vdc.txt");
    let text: String = (0u64..64).map(|i| format!("{}/64\n", i.reverse_bits() >> 58)).collect();
    std::fs::write(&path, text).unwrap();
    let out = nforge(&["discrepancy", "--points", path.to_str().unwrap(), "--checkpoints", "8,64"]);
    assert!(out.status.success());
    let rows = stdout_json(&out)["points"].as_array().unwrap().clone();
    assert_eq!(rows[1]["discrepancy_f64"], 1.0 / 64.0);
}

#[test]
fn bounds_values() {
    let out = nforge(&["bounds", "--what", "fukuyama", "--theta", "2"]);
    assert!(out.status.success());
    let v = stdout_json(&out)["value"].as_f64().unwrap();
    assert!((v - 84f64.sqrt() / 9.0).abs() < 1e-12);
    let out = nforge(&["bounds", "--what", "chain", "--base", "5"]);
    assert_eq!(stdout_json(&out)["value"], 3433 * 5);
    let out = nforge(&["bounds", "--what", "bernstein", "--n", "16", "--variance", "1/4", "--eps", "1"]);
    let v = stdout_json(&out);
    assert!(v["lower"].as_f64().unwrap() <= v["upper"].as_f64().unwrap());
}

#[test]
fn verify_suites_exit_zero() {
    let out = nforge(&["verify", "--suite", "corollary", "--hmax", "64"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["aggregate_pass"], true);
    let out = nforge(&["verify", "--suite", "all", "--schedule", "toy-k4", "--k", "4"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout_json(&out).as_array().unwrap().len(), 5);
}

#[test]
fn exit_codes() {
    // no good interval is a failed run, not a configuration problem
    let out = nforge(&["construct", "--schedule", "toy-k3", "--c", "1/2"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "no_good_interval");

    let out = nforge(&["construct", "--schedule", "no-such-preset"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_json(&out)["message"].as_str().unwrap().contains("no-such-preset"));

    let out = nforge(&["construct", "--schedule", "toy-k3", "--c", "2/0"]);
    assert_eq!(out.status.code(), Some(2));

    let out = nforge(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));

    let out = Command::new(env!("CARGO_BIN_EXE_nforge"))
        .args(["lil", "--n", "64", "--samples", "2", "--seed", "1"])
        .env("NFORGE_BUDGET_MB", "0")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_json(&out)["error"], "cap_exceeded");

    let out = nforge(&["--deadline-secs", "0", "construct", "--schedule", "toy-k6"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn lil_single_sample() {
    let out = nforge(&["lil", "--base", "3", "--n", "128", "--samples", "1", "--seed", "5"]);
    assert!(out.status.success());
    let r = stdout_json(&out);
    assert_eq!(r["values"].as_array().unwrap().len(), 1);
    assert_eq!(r["asserted"], false);
    assert_eq!(r["constant"], 1.0);
}

#[test]
fn schedule_file() {
    let path = scratch("s.toml");
    std::fs::write(
        &path,
        "name = \"mine\"\nk0 = 3\nkmax = 4\nbase_cap = \"k\"\nguard_mul = 1\nresolution = \"paper\"\nc_num = 46\nc_den = 1\n",
    )
    .unwrap();
    let out = nforge(&["construct", "--schedule", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("NFORGE v1 schedule=mine"));
    assert!(text.lines().skip(1).all(|l| l.chars().all(|c| c == '0')));
}
