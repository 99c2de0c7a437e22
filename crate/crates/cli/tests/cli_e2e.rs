//! End-to-end runs of the compiled binary: the gen/perturb/train/evaluate
//! chain, report determinism on disk, and exit codes.

use std::path::Path;
use std::process::Command;

fn fairguard() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fairguard"))
}

fn run_ok(cmd: &mut Command) -> String {
    let output = cmd.output().expect("binary runs");
    assert!(
        output.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn gen_perturb_train_evaluate_chain() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    run_ok(fairguard().args([
        "gen-data",
        "--n",
        "400",
        "--seed",
        "3",
        "--out",
        data.to_str().unwrap(),
    ]));
    assert!(data.exists());

    let record = dir.path().join("perturbed.json");
    run_ok(fairguard().args([
        "perturb",
        "--data",
        data.to_str().unwrap(),
        "--adversary",
        "tn",
        "--eta",
        "0.05",
        "--tau",
        "0.8",
        "--seed",
        "3",
        "--out",
        record.to_str().unwrap(),
    ]));
    let rec: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&record).unwrap()).unwrap();
    assert_eq!(rec["kind"], "tn");
    let flips = rec["flip_mask"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|v| v.as_bool().unwrap())
        .count();
    assert!(flips <= 20, "budget ceil(0.05 * 400) = 20, got {flips}");

    let report_path = dir.path().join("report.json");
    run_ok(fairguard().args([
        "train",
        "--data",
        data.to_str().unwrap(),
        "--adversary",
        "tn",
        "--eta",
        "0.05",
        "--tau",
        "0.8",
        "--solver",
        "err-tol-plus",
        "--trials",
        "2",
        "--seed",
        "5",
        "--out",
        report_path.to_str().unwrap(),
    ]));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    let theta = report["rows"][0]["theta"].as_array().unwrap();
    assert_eq!(theta.len(), 2);

    // extract the first trial's classifier and evaluate it on the data
    let model = dir.path().join("model.json");
    std::fs::write(
        &model,
        serde_json::json!({
            "theta": report["rows"][0]["theta"],
            "use_protected": report["rows"][0]["use_protected"],
            "temperature": 1.0,
        })
        .to_string(),
    )
    .unwrap();
    let eval_out = dir.path().join("eval.json");
    run_ok(fairguard().args([
        "evaluate",
        "--data",
        data.to_str().unwrap(),
        "--model",
        model.to_str().unwrap(),
        "--metric",
        "sr",
        "--out",
        eval_out.to_str().unwrap(),
    ]));
    let eval: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&eval_out).unwrap()).unwrap();
    assert!(eval["accuracy"].as_f64().unwrap() > 0.95);
    assert!(eval["sr"].as_f64().unwrap() > 0.5);
}

#[test]
fn repeated_train_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a.json");
    let out_b = dir.path().join("b.json");
    for out in [&out_a, &out_b] {
        run_ok(fairguard().args([
            "train",
            "--synthetic",
            "--n",
            "300",
            "--adversary",
            "tn",
            "--eta",
            "0.03",
            "--solver",
            "err-tol",
            "--trials",
            "1",
            "--seed",
            "11",
            "--out",
            out.to_str().unwrap(),
        ]));
    }
    assert_eq!(
        std::fs::read(&out_a).unwrap(),
        std::fs::read(&out_b).unwrap(),
        "reports differ across identical runs"
    );
}

#[test]
fn verify_theory_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("theory.json");
    run_ok(fairguard().args(["verify-theory", "--out", out.to_str().unwrap()]));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["all_passed"], true);

    // corrupted parameters (family A bounds depend on c and alpha; an alpha
    // out of the valid range must be rejected loudly)
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        serde_json::json!({
            "family_a_c": 0.6,
            "family_a_alpha": 0.1,
            "family_b_lambda": 0.2,
            "family_b_c": 0.04,
            "family_c_eta": 0.2,
            "coupling_eta": 0.1,
            "coupling_n": 500,
            "coupling_trials": 10,
            "frequency_n": 2000,
            "seed": 0
        })
        .to_string(),
    )
    .unwrap();
    let status = fairguard()
        .args(["verify-theory", "--params", bad.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!status.status.success());
}

#[test]
fn seed_env_var_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let with_flag = dir.path().join("flag.json");
    let with_env = dir.path().join("env.json");
    run_ok(fairguard().args([
        "train", "--synthetic", "--n", "200", "--solver", "uncons", "--trials", "1", "--seed",
        "99", "--out",
        with_flag.to_str().unwrap(),
    ]));
    run_ok(
        fairguard()
            .env("FAIRGUARD_SEED", "99")
            .args([
                "train",
                "--synthetic",
                "--n",
                "200",
                "--solver",
                "uncons",
                "--trials",
                "1",
                "--out",
                with_env.to_str().unwrap(),
            ]),
    );
    assert_eq!(std::fs::read(&with_flag).unwrap(), std::fs::read(&with_env).unwrap());
}

#[test]
fn csv_round_trip_via_gen_data(){
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("family.csv");
    run_ok(fairguard().args([
        "gen-data",
        "--family-a",
        "--family-dist",
        "1",
        "--n",
        "100",
        "--seed",
        "0",
        "--out",
        path.to_str().unwrap(),
    ]));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("f0,f1,f2,label,group"));
    assert_eq!(text.lines().count(), 101);
    assert!(Path::new(&path).exists());
}
