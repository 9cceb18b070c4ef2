//! Runs the `curio` binary and checks outputs and exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn curio(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curio")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const SMALL: &str = "seed = 2\n[env]\nkind = \"exercise\"\n[trainer]\nshaping = \"diffacc\"\ntotal_steps = 40\neval_every = 20\neval_episodes = 40\n";

#[test]
fn verify_pbrs_on_reduced_exercise_passes() {
    let o = curio(&["verify-pbrs", "--instance", "reduced-exercise", "--potential", "acc"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["argmax_sets_equal"], true);
    assert_eq!(v["counterexamples"].as_array().unwrap().len(), 0);
}

#[test]
fn per_turn_shaping_is_reported_but_not_fatal() {
    let o = curio(&["verify-pbrs", "--shaping", "acc", "--gamma", "0.9"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["argmax_sets_equal"], false);
    assert!(!v["counterexamples"][0]["belief"].as_array().unwrap().is_empty());
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad.toml", "seed = 1\n[env]\nkind = \"exercise\"\n[trainer]\nshaping = \"surprise\"\n");
    let out = dir.path().join("run").to_string_lossy().into_owned();
    assert_eq!(code(&curio(&["train", "--config", &bad, "--out", &out])), 2);
    assert_eq!(code(&curio(&["train", "--config", "/nonexistent.toml", "--out", &out])), 2);
    assert_eq!(code(&curio(&["eval", "--checkpoint", "/nonexistent.json"])), 2);
    assert_eq!(code(&curio(&["bandit", "--K", "3", "--k", "4"])), 2);
    assert_eq!(code(&curio(&["no-such-command"])), 2);
    assert_eq!(code(&curio(&["--help"])), 0);
}

#[test]
fn train_eval_replay_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL);
    let run = dir.path().join("run");
    let run_s = run.to_string_lossy().into_owned();
    let o = curio(&["train", "--config", &cfg, "--seed", "5", "--out", &run_s]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["config.toml", "metrics.jsonl", "checkpoint_best.json", "checkpoint_final.json", "sample_trajectory.jsonl", "summary.json"] {
        assert!(run.join(f).exists(), "{f} missing");
    }
    let metrics = std::fs::read_to_string(run.join("metrics.jsonl")).unwrap();
    assert_eq!(metrics.lines().count(), 2);
    for line in metrics.lines() {
        let m: serde_json::Value = serde_json::from_str(line).unwrap();
        let asks: u64 = m["question_histogram"].as_array().unwrap().iter().map(|x| x.as_u64().unwrap()).sum();
        assert!(asks <= 40 * 5);
    }

    let ckpt = run.join("checkpoint_best.json").to_string_lossy().into_owned();
    let o = curio(&["eval", "--checkpoint", &ckpt, "--split", "eval", "--episodes", "50"]);
    assert_eq!(code(&o), 0);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["episodes"], 50);

    let traj = run.join("sample_trajectory.jsonl");
    let traj_s = traj.to_string_lossy().into_owned();
    assert_eq!(code(&curio(&["replay", "--trajectory", &traj_s])), 0);

    // Swap one recorded answer for another valid-looking one.
    let text = std::fs::read_to_string(&traj).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let mut turn: serde_json::Value = serde_json::from_str(&lines[1]).unwrap();
    let r = turn["user_response"].as_u64().unwrap();
    turn["user_response"] = serde_json::json!(if r == 0 { 1 } else { 0 });
    lines[1] = turn.to_string();
    let forged = dir.path().join("forged.jsonl");
    std::fs::write(&forged, lines.join("\n") + "\n").unwrap();
    let o = curio(&["replay", "--trajectory", &forged.to_string_lossy()]);
    assert_eq!(code(&o), 3);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["matched"], false);
}

#[test]
fn generated_profiles_feed_a_config() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("profiles.csv");
    let o = curio(&["gen-profiles", "--n", "100", "--split", "80,20", "--seed", "9", "--out", &csv.to_string_lossy()]);
    assert_eq!(code(&o), 0);
    let corpus = curio::envs::exercise::ProfileCorpus::load(&csv).unwrap();
    assert_eq!((corpus.train.len(), corpus.eval.len()), (80, 20));

    let cfg = write_config(dir.path(), "from_file.toml", &format!("{SMALL}[profiles]\npath = \"profiles.csv\"\n"));
    let o = curio(&["eval", "--config", &cfg, "--agent", "scripted", "--episodes", "20"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["success_rate"], 1.0);
}
