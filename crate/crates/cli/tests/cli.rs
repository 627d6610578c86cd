use std::process::{Command, Output};

use serde_json::Value;

fn vl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vl"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(args: &[&str]) -> String {
    let out = vl(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn gen_data_sort_records_are_increasing() {
    let text = stdout(&[
        "gen-data", "--task", "sort", "--k", "6", "--len", "4", "--n", "100", "--seed", "7",
    ]);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 100);
    for line in lines {
        let rec: Value = serde_json::from_str(line).unwrap();
        let truth: Vec<u64> = serde_json::from_value(rec["truth"].clone()).unwrap();
        assert_eq!(truth.len(), 4);
        assert!(truth.windows(2).all(|w| w[0] < w[1]), "{truth:?}");
        assert_eq!(rec["features"].as_array().unwrap().len(), 4);
        assert!(rec.get("positions").is_none());
    }
}

#[test]
fn gen_data_to_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.jsonl");
    let args = [
        "gen-data", "--task", "match", "--k", "3", "--len", "4", "--n", "20", "--seed", "2",
    ];
    let printed = stdout(&args);
    let mut with_out = args.to_vec();
    let p = path.display().to_string();
    with_out.extend(["--out", p.as_str()]);
    stdout(&with_out);
    assert_eq!(std::fs::read_to_string(&path).unwrap(), printed);
}

#[test]
fn chess_records_carry_positions() {
    let text = stdout(&[
        "gen-data", "--task", "chess", "--pieces", "3", "--n", "5", "--seed", "1",
    ]);
    for line in text.lines() {
        let rec: Value = serde_json::from_str(line).unwrap();
        assert_eq!(rec["positions"].as_array().unwrap().len(), 3);
    }
}

#[test]
fn missing_task_is_a_usage_error() {
    let out = vl(&["gen-data", "--n", "5"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--task"));
}

#[test]
fn unknown_task_is_rejected() {
    let out = vl(&["gen-data", "--task", "sudoku"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn infeasible_parameters_exit_nonzero() {
    let out = vl(&["gen-data", "--task", "sort", "--k", "3", "--len", "5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("distinct"));
}

fn r_up(args: &[&str]) -> f64 {
    let v: Value = serde_json::from_str(&stdout(args)).unwrap();
    v["r_up"].as_f64().unwrap()
}

#[test]
fn symmetry_examples() {
    assert_eq!(
        r_up(&["analyze-symmetry", "--task", "alldiff", "--k", "3"]),
        1.0
    );
    assert_eq!(
        r_up(&[
            "analyze-symmetry",
            "--task",
            "addition",
            "--base",
            "2",
            "--digits",
            "1"
        ]),
        0.0
    );
    let v: Value = serde_json::from_str(&stdout(&[
        "analyze-symmetry",
        "--task",
        "addition",
        "--base",
        "2",
    ]))
    .unwrap();
    assert_eq!(v["r_up"].to_string(), "0.0");
    assert_eq!(v["group"].as_array().unwrap().len(), 1);
}

#[test]
fn symmetry_with_empirical_prior_and_explicit_lengths() {
    let v: Value = serde_json::from_str(&stdout(&[
        "analyze-symmetry",
        "--task",
        "match",
        "--k",
        "3",
        "--len",
        "4",
        "--lengths",
        "2,4",
        "--prior",
        "empirical",
        "--n",
        "200",
    ]))
    .unwrap();
    assert_eq!(v["check_length"], 4);
    // runs must be non-decreasing, so only the identity survives
    assert_eq!(v["group"].as_array().unwrap().len(), 1);
    assert_eq!(v["r_up"].as_f64().unwrap(), 0.0);
    assert!((v["r_avg"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn symmetry_refuses_large_alphabets() {
    let out = vl(&["analyze-symmetry", "--task", "sort", "--k", "10"]);
    assert!(!out.status.success());
}

#[test]
fn enumerate_random_grid_against_oracle() {
    for score in ["independent", "consistency", "lex"] {
        let out = vl(&[
            "enumerate",
            "--random-l",
            "3",
            "--random-k",
            "4",
            "--seed",
            "5",
            "--score",
            score,
            "--oracle",
            "--limit",
            "0",
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert_eq!(
            String::from_utf8(out.stdout).unwrap().lines().count(),
            1 + 64
        );
    }
}

#[test]
fn enumerate_grid_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.json");
    std::fs::write(&path, "[[0.9, 0.1], [0.6, 0.4]]").unwrap();
    let text = stdout(&["enumerate", "--grid", path.to_str().unwrap()]);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "rank,assignment,primary,secondary");
    let ranked: Vec<&str> = rows[1..]
        .iter()
        .map(|r| r.split(',').nth(1).unwrap())
        .collect();
    assert_eq!(ranked, ["0 0", "0 1", "1 0", "1 1"]);
    let top: f64 = rows[1].split(',').nth(3).unwrap().parse().unwrap();
    assert!((top - 0.54).abs() < 1e-12);

    let text = stdout(&[
        "enumerate",
        "--grid",
        path.to_str().unwrap(),
        "--score",
        "lex",
        "--reference",
        "1,0",
        "--limit",
        "1",
    ]);
    assert_eq!(
        text.lines().nth(1).unwrap().split(',').nth(1).unwrap(),
        "1 0"
    );
}

#[test]
fn enumerate_rejects_non_stochastic_grid() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.json");
    std::fs::write(&path, "[[0.9, 0.3]]").unwrap();
    assert!(!vl(&["enumerate", "--grid", path.to_str().unwrap()])
        .status
        .success());
    assert!(!vl(&["enumerate"]).status.success());
}

#[test]
fn train_eval_and_replay_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n).display().to_string();
    let (data, stats, model, record) = (p("train.jsonl"), p("s.csv"), p("m.json"), p("r.json"));
    stdout(&[
        "gen-data", "--task", "addition", "--base", "2", "--n", "400", "--seed", "4", "--out",
        &data,
    ]);
    stdout(&[
        "train",
        "--task",
        "addition",
        "--base",
        "2",
        "--data",
        &data,
        "--n-test",
        "50",
        "--epochs",
        "3",
        "--lr",
        "0.5",
        "--out-stats",
        &stats,
        "--out-model",
        &model,
        "--out-record",
        &record,
    ]);
    let csv = std::fs::read_to_string(&stats).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "epoch,mean_rank_K,mean_verifications,fraction_exhausted,pseudo_label_accuracy,symbol_accuracy,adjusted_accuracy,wall_time_s"
    );
    assert_eq!(lines.count(), 3);

    let rec: Value = serde_json::from_str(&std::fs::read_to_string(&record).unwrap()).unwrap();
    assert_eq!(rec["train_data"]["samples"], 400);
    assert_eq!(rec["train_data"]["path"].as_str().unwrap(), data);
    assert_eq!(rec["input_hash"].as_str().unwrap().len(), 64);
    assert!(rec["started_at"].is_string());

    let out = vl(&["replay", &record]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let metrics = stdout(&[
        "eval", "--task", "addition", "--base", "2", "--model", &model, "--n", "50",
    ]);
    let mut rows = metrics.lines();
    assert!(rows
        .next()
        .unwrap()
        .starts_with("task,samples,raw_accuracy,ttc_accuracy"));
    let row: Vec<&str> = rows.next().unwrap().split(',').collect();
    assert_eq!(row[0], "addition");
    assert_eq!(row[7], "0", "ttc violations");

    // the record no longer matches once the data changes
    stdout(&[
        "gen-data", "--task", "addition", "--base", "2", "--n", "400", "--seed", "5", "--out",
        &data,
    ]);
    assert!(!vl(&["replay", &record]).status.success());
}

#[test]
fn replay_survives_float_parsing() {
    // stats such as 0.41333333333333333 must parse back to the same bits
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n).display().to_string();
    let (data, record) = (p("train.jsonl"), p("r.json"));
    stdout(&[
        "gen-data", "--task", "addition", "--base", "3", "--n", "300", "--seed", "1", "--out",
        &data,
    ]);
    stdout(&[
        "train",
        "--task",
        "addition",
        "--base",
        "3",
        "--data",
        &data,
        "--n-test",
        "100",
        "--lr",
        "0.5",
        "--out-record",
        &record,
    ]);
    let out = vl(&["replay", &record]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn train_prints_stats_without_output_files() {
    let text = stdout(&[
        "--no-clock",
        "train",
        "--task",
        "sort",
        "--k",
        "4",
        "--len",
        "3",
        "--n",
        "100",
        "--n-test",
        "0",
        "--epochs",
        "2",
        "--lr",
        "0.5",
        "--score",
        "lex",
    ]);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1..].iter().all(|r| r.ends_with(",0.0")));
}

#[test]
fn eval_rejects_mismatched_model() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.json").display().to_string();
    stdout(&[
        "train",
        "--task",
        "addition",
        "--base",
        "2",
        "--n",
        "50",
        "--n-test",
        "0",
        "--epochs",
        "1",
        "--out-model",
        &model,
    ]);
    let out = vl(&[
        "eval", "--task", "addition", "--base", "3", "--model", &model,
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bench_shape() {
    let text = stdout(&[
        "bench", "--task", "addition", "--bases", "2..4", "--seeds", "3", "--n", "100", "--n-test",
        "20", "--epochs", "2", "--lr", "0.5",
    ]);
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        [
            "task",
            "param",
            "seed",
            "accuracy",
            "accuracy_ttc",
            "mean_rank_K",
            "verifications",
            "wall_time_s"
        ]
    );
    let records: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(records.len(), 9);
    for r in &records {
        assert!(r.iter().all(|f| !f.is_empty()));
        let k: f64 = r[5].parse().unwrap();
        assert!(k >= 1.0);
    }
    let params: Vec<&str> = records.iter().map(|r| &r[1]).collect();
    assert_eq!(params, ["2", "2", "2", "3", "3", "3", "4", "4", "4"]);
}

#[test]
fn bench_rejects_wrong_sweep() {
    let out = vl(&["bench", "--task", "sort", "--bases", "2..3"]);
    assert!(!out.status.success());
}
