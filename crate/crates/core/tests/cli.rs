use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

fn kmdp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kmdp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn m1() -> String {
    data("m1.json").to_str().unwrap().to_string()
}

fn machine() -> String {
    data("machine.json").to_str().unwrap().to_string()
}

#[test]
fn validate_exit_codes() {
    assert_eq!(kmdp(&["validate", &m1()]).status.code(), Some(0));

    let dir = TempDir::new().unwrap();
    let bad_sum = std::fs::read_to_string(data("m1.json"))
        .unwrap()
        .replace("\"g\": 0.6", "\"g\": 0.7");
    let out = kmdp(&["validate", &write(&dir, "bad.json", &bad_sum)]);
    assert_eq!(out.status.code(), Some(1));
    let listing = stdout(&out);
    assert_eq!(listing.lines().count(), 1);
    assert!(
        listing.contains("a1") && listing.contains("sums to"),
        "{listing}"
    );

    assert_eq!(
        kmdp(&["validate", &write(&dir, "empty.json", "")])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        kmdp(&["validate", &write(&dir, "broken.json", "{\"horizon\":")])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        kmdp(&["validate", "/definitely/not/here.json"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn solve_reports_m1() {
    let out = kmdp(&["solve", &m1()]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((report["values"]["0"]["s0"].as_f64().unwrap() - 6.8).abs() < 1e-12);
    assert!((report["assessments"]["1"]["a2"].as_f64().unwrap() - 4.2).abs() < 1e-12);
    assert_eq!(report["policy"], serde_json::json!({"1": {"s0": "a1"}}));
    assert_eq!(report["epsilon"], 0.0);
    assert_eq!(report["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(report["model"]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn solve_is_byte_identical_across_runs() {
    let a = kmdp(&["solve", &machine(), "--chi", "2=0.5"]);
    let b = kmdp(&["solve", &machine(), "--chi", "2=0.5"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn chi_flags_sum_into_the_certificate() {
    let out = kmdp(&["solve", &machine(), "--chi", "1=0.25", "--chi", "3=0.5"]);
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["epsilon"], 0.75);
    assert_eq!(
        report["chi"],
        serde_json::json!({"1": 0.25, "2": 0.0, "3": 0.5})
    );
    assert_eq!(
        kmdp(&["solve", &machine(), "--chi", "7=1"]).status.code(),
        Some(1)
    );
    assert_eq!(
        kmdp(&["solve", &machine(), "--chi", "1=-1"]).status.code(),
        Some(1)
    );
}

#[test]
fn zero_reward_model_has_zero_tables() {
    let dir = TempDir::new().unwrap();
    let text = r#"{
        "horizon": {"m": 0, "n": 2},
        "states": [[{"id": "s"}], [{"id": "k", "killed": true}, {"id": "u"}], [{"id": "k", "killed": true}, {"id": "v", "r": 0}]],
        "actions": [
            [{"id": "a", "owner": "s", "q": 0, "p": {"u": 0.5, "k": 0.5}}],
            [{"id": "b", "owner": "u", "q": 0, "p": {"v": 0.9, "k": 0.1}}]
        ]
    }"#;
    let out = kmdp(&["solve", &write(&dir, "zero.json", text)]);
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    for table in ["values", "assessments"] {
        for row in report[table].as_object().unwrap().values() {
            assert!(
                row.as_object()
                    .unwrap()
                    .values()
                    .all(|v| v.as_f64() == Some(0.0)),
                "{row}"
            );
        }
    }
}

#[test]
fn solved_policy_round_trips_through_eval() {
    let dir = TempDir::new().unwrap();
    let policy = dir.path().join("policy.json");
    let out = kmdp(&[
        "solve",
        &machine(),
        "--policy-out",
        policy.to_str().unwrap(),
    ]);
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let eval = kmdp(&["eval", &machine(), policy.to_str().unwrap(), "--per-state"]);
    assert_eq!(eval.status.code(), Some(0));
    for line in stdout(&eval).lines() {
        let (id, value) = line.split_once('\t').unwrap();
        let expected = report["values"]["0"][id].as_f64().unwrap();
        assert!(
            (value.parse::<f64>().unwrap() - expected).abs() < 1e-9,
            "{line}"
        );
    }
}

#[test]
fn eval_point_policies_of_m1() {
    let a1 = kmdp(&["eval", &m1(), data("m1-a1.json").to_str().unwrap()]);
    assert!((stdout(&a1).trim().parse::<f64>().unwrap() - 6.8).abs() < 1e-12);
    let a2 = kmdp(&["eval", &m1(), data("m1-a2.json").to_str().unwrap()]);
    assert!((stdout(&a2).trim().parse::<f64>().unwrap() - 4.2).abs() < 1e-12);
    let per_state = kmdp(&[
        "eval",
        &m1(),
        data("m1-a1.json").to_str().unwrap(),
        "--per-state",
    ]);
    assert_eq!(stdout(&per_state).lines().count(), 1);
}

#[test]
fn eval_rejects_unknown_ids() {
    let dir = TempDir::new().unwrap();
    for doc in [r#"{"1": {"s0": "a9"}}"#, r#"{"1": {"zz": "a1"}}"#] {
        let out = kmdp(&["eval", &m1(), &write(&dir, "p.json", doc)]);
        assert_eq!(out.status.code(), Some(1), "{doc}");
    }
    let out = kmdp(&[
        "eval",
        &m1(),
        data("m1-a1.json").to_str().unwrap(),
        "--start",
        "nowhere",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn outcome_cap_comes_from_the_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_kmdp"))
        .args(["eval", &m1(), data("m1-a1.json").to_str().unwrap()])
        .env("KMDP_MAX_OUTCOMES", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cap of 2"));
}

#[test]
fn enumerate_lists_the_law_as_csv() {
    let out = kmdp(&["enumerate", &m1(), data("m1-a1.json").to_str().unwrap()]);
    assert_eq!(
        stdout(&out),
        "kind,path,kill_stage,mass,assessment\n\
         killed,s0 a1 x*,1,0.1,-1\n\
         survived,s0 a1 g,,0.6,11\n\
         survived,s0 a1 b,,0.3,1\n"
    );
}

#[test]
fn simulate_is_seeded() {
    let policy = data("m1-a1.json");
    let args = [
        "simulate",
        &m1(),
        policy.to_str().unwrap(),
        "--samples",
        "2000",
        "--seed",
        "5",
    ];
    let a = kmdp(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, kmdp(&args).stdout);
    let report: Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(report["samples"], 2000);
    assert_eq!(report["seed"], 5);
    let (mean, se) = (
        report["mean"].as_f64().unwrap(),
        report["std_error"].as_f64().unwrap(),
    );
    assert!((mean - 6.8).abs() < 5.0 * se);
}

#[test]
fn check_exit_codes() {
    assert_eq!(
        kmdp(&["check", "fundamental", "--seed", "1", "--count", "50"])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(kmdp(&["check", "bogus"]).status.code(), Some(3));
}

#[test]
fn failing_check_dumps_a_replayable_counterexample() {
    let dir = TempDir::new().unwrap();
    let dump = dir.path().join("cx.json");
    let out = kmdp(&[
        "check",
        "markov",
        "--seed",
        "4",
        "--count",
        "3",
        "--tolerance",
        "-1",
        "--counterexample",
        dump.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["passed"], false);
    let cx: Value = serde_json::from_str(&std::fs::read_to_string(&dump).unwrap()).unwrap();
    let replay = kmdp(&["check", "markov", "--replay", dump.to_str().unwrap()]);
    assert_eq!(replay.status.code(), Some(0));
    let replayed: Value = serde_json::from_str(&stdout(&replay)).unwrap();
    assert_eq!(replayed["discrepancy"], cx["discrepancy"]);
}

#[test]
fn derive_writes_a_valid_model() {
    let dir = TempDir::new().unwrap();
    let target = dir.path().join("derived.json");
    let out = kmdp(&["derive", &machine(), "-o", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        kmdp(&["validate", target.to_str().unwrap()]).status.code(),
        Some(0)
    );
    let derived: Value = serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
    assert_eq!(derived["horizon"], serde_json::json!({"m": 1, "n": 3}));
    assert_eq!(kmdp(&["derive", &m1()]).status.code(), Some(1));
}
