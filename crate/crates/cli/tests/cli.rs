use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn edumine(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edumine"))
        .args(args)
        .output()
        .expect("spawn edumine")
}

fn ok(args: &[&str]) -> String {
    let out = edumine(args);
    assert!(
        out.status.success(),
        "edumine {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf-8 stdout")
}

fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}

/// Synthesizes and prepares a scored cohort; returns (table, schema).
fn cohort(dir: &Path, seed: &str, n: &str) -> (PathBuf, PathBuf) {
    let raw = dir.join(format!("raw{seed}"));
    ok(&[
        "synth",
        "--seed",
        seed,
        "--n-students",
        n,
        "--n-schools",
        "10",
        "--out",
        p(&raw),
    ]);
    let table = dir.join(format!("scored{seed}.csv"));
    ok(&[
        "prepare",
        "--roster",
        p(&raw.join("students.csv")),
        "--schema",
        p(&raw.join("students.schema")),
        "--credits",
        p(&raw.join("credits.csv")),
        "--out",
        p(&table),
    ]);
    (table.clone(), table.with_extension("schema"))
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).expect("read json")).expect("parse json")
}

#[test]
fn missing_schema_is_an_input_error_naming_the_path() {
    let dir = TempDir::new().unwrap();
    let absent = dir.path().join("nope.schema");
    let out = edumine(&[
        "eda",
        "--data",
        p(&dir.path().join("x.csv")),
        "--schema",
        p(&absent),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("nope.schema"), "{stderr}");
}

#[test]
fn unknown_target_exits_with_input_error() {
    let dir = TempDir::new().unwrap();
    let (table, schema) = cohort(dir.path(), "1", "60");
    let out = edumine(&[
        "train",
        "--data",
        p(&table),
        "--schema",
        p(&schema),
        "--target",
        "height",
        "--out",
        p(&dir.path().join("run")),
    ]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn prepare_joins_scores_onto_roster() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    std::fs::write(d.join("roster.csv"), "student_id,gender\na,f\nb,m\nc,f\n").unwrap();
    std::fs::write(
        d.join("roster.schema"),
        "name,role,level\nstudent_id,id,nominal\ngender,input,binary\n",
    )
    .unwrap();
    std::fs::write(
        d.join("credits.csv"),
        "student_id,subject,item_id,credit\n\
         a,reading,R01,full\na,maths,M01,partial\n\
         b,reading,R01,none\nb,maths,M01,none\n\
         c,science,S01,full\nc,science,S02,partial\n",
    )
    .unwrap();
    let stdout = ok(&[
        "prepare",
        "--roster",
        p(&d.join("roster.csv")),
        "--schema",
        p(&d.join("roster.schema")),
        "--credits",
        p(&d.join("credits.csv")),
        "--out",
        p(&d.join("scored.csv")),
    ]);
    assert!(stdout.starts_with("3 rows"), "{stdout}");
    let text = std::fs::read_to_string(d.join("scored.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "student_id,gender,reading,maths,science,problem_solving,aggregate"
    );
    assert_eq!(lines.next().unwrap(), "a,f,100,50,,,75");
    assert_eq!(lines.next().unwrap(), "b,m,0,0,,,0");
    assert_eq!(lines.next().unwrap(), "c,f,,,75,,75");
    let schema = std::fs::read_to_string(d.join("scored.schema")).unwrap();
    assert!(schema.contains("aggregate,target,interval"), "{schema}");
}

#[test]
fn train_is_deterministic_and_writes_artifacts() {
    let dir = TempDir::new().unwrap();
    let (table, schema) = cohort(dir.path(), "2", "200");
    let run = |name: &str| {
        let out = dir.path().join(name);
        ok(&[
            "train",
            "--data",
            p(&table),
            "--schema",
            p(&schema),
            "--target",
            "aggregate",
            "--seed",
            "3",
            "--nn-epochs",
            "200",
            "--out",
            p(&out),
        ]);
        out
    };
    let (a, b) = (run("a"), run("b"));
    for file in ["model.json", "tree_model.json", "champion.txt"] {
        assert_eq!(
            std::fs::read(a.join(file)).unwrap(),
            std::fs::read(b.join(file)).unwrap(),
            "{file}"
        );
    }
    let model = read_json(&a.join("model.json"));
    assert_eq!(model["target"], "aggregate");
    assert_eq!(model["seed"], 3);
    assert_eq!(read_json(&a.join("tree_model.json"))["model_kind"], "tree");
}

#[test]
fn zero_epochs_keeps_initial_network() {
    let dir = TempDir::new().unwrap();
    let (table, schema) = cohort(dir.path(), "3", "120");
    let out = dir.path().join("run");
    ok(&[
        "train",
        "--data",
        p(&table),
        "--schema",
        p(&schema),
        "--target",
        "aggregate",
        "--nn-epochs",
        "0",
        "--format",
        "json",
        "--out",
        p(&out),
    ]);
    let report = read_json(&out.join("champion.json"));
    let candidates = report["candidates"].as_array().unwrap();
    assert_eq!(candidates.len(), 3);
    assert!(candidates
        .iter()
        .all(|c| c["validation_ase"].as_f64().unwrap().is_finite()));
}

#[test]
fn format_both_prints_and_writes_each_form() {
    let dir = TempDir::new().unwrap();
    let (table, schema) = cohort(dir.path(), "4", "150");
    let out = dir.path().join("eda");
    let stdout = ok(&[
        "eda",
        "--data",
        p(&table),
        "--schema",
        p(&schema),
        "--group-by",
        "school_type",
        "--format",
        "both",
        "--out",
        p(&out),
    ]);
    assert!(stdout.contains("Correlation analysis"));
    assert!(stdout.contains("\"tool_version\""));
    let json = read_json(&out.join("eda.json"));
    assert_eq!(json["report"], "eda");
    assert_eq!(json["group_by"], "school_type");
    assert!(std::fs::read_to_string(out.join("eda.txt"))
        .unwrap()
        .contains("One-way ANOVA"));
}

#[test]
fn config_file_supplies_target_and_format() {
    let dir = TempDir::new().unwrap();
    let (table, schema) = cohort(dir.path(), "5", "120");
    let config = dir.path().join("run.conf");
    std::fs::write(
        &config,
        "target = aggregate\nformat = json\nnn_epochs = 20\n",
    )
    .unwrap();
    let out = dir.path().join("run");
    let stdout = ok(&[
        "train",
        "--data",
        p(&table),
        "--schema",
        p(&schema),
        "--config",
        p(&config),
        "--out",
        p(&out),
    ]);
    assert!(stdout.trim_start().starts_with('{'), "{stdout}");
    assert!(out.join("champion.json").exists() && !out.join("champion.txt").exists());

    std::fs::write(&config, "target = aggregate\nlearning_rate = 3\n").unwrap();
    let bad = edumine(&[
        "train",
        "--data",
        p(&table),
        "--schema",
        p(&schema),
        "--config",
        p(&config),
        "--out",
        p(&out),
    ]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("line 2"));
}

/// Writes `data` with its target replaced, keeping the header.
fn rewrite_target(src: &Path, dst: &Path, target: &str, value: impl Fn(usize) -> String) {
    let text = std::fs::read_to_string(src).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    let col = header.split(',').position(|h| h == target).unwrap();
    let mut out = format!("{header}\n");
    for (i, line) in lines.enumerate() {
        let mut cells: Vec<String> = line.split(',').map(str::to_string).collect();
        cells[col] = value(i);
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    std::fs::write(dst, out).unwrap();
}

#[test]
fn score_and_evaluate_agree_with_a_direct_mape() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let (table, schema) = cohort(d, "6", "160");
    ok(&[
        "train",
        "--data",
        p(&table),
        "--schema",
        p(&schema),
        "--target",
        "aggregate",
        "--nn-epochs",
        "50",
        "--out",
        p(&d.join("run")),
    ]);
    let model = d.join("run/tree_model.json");
    let preds_path = d.join("preds.csv");
    ok(&[
        "score",
        "--model",
        p(&model),
        "--data",
        p(&table),
        "--schema",
        p(&schema),
        "--out",
        p(&preds_path),
    ]);

    // every third actual is zero and must be excluded
    let zeroed = d.join("zeroed.csv");
    rewrite_target(&table, &zeroed, "aggregate", |i| {
        if i % 3 == 0 {
            "0".into()
        } else {
            format!("{}", 40 + i % 50)
        }
    });
    let out = d.join("eval");
    let stdout = ok(&[
        "evaluate",
        "--model",
        p(&model),
        "--data",
        p(&zeroed),
        "--schema",
        p(&schema),
        "--format",
        "both",
        "--out",
        p(&out),
    ]);
    let preds: Vec<f64> = std::fs::read_to_string(&preds_path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(preds.len(), 160);
    let (mut sum, mut n, mut excluded) = (0.0, 0, 0);
    for (i, pred) in preds.iter().enumerate() {
        if i % 3 == 0 {
            excluded += 1;
            continue;
        }
        let actual = f64::from((40 + i % 50) as u32);
        sum += ((actual - pred) / pred).abs();
        n += 1;
    }
    let expected = 100.0 * sum / n as f64;
    let report = read_json(&out.join("evaluation.json"));
    assert_eq!(report["excluded_rows"], excluded);
    assert_eq!(report["n_scored"], n);
    let got = report["mape"].as_f64().unwrap();
    assert!(
        (got - expected).abs() <= 1e-9 * expected,
        "{got} vs {expected}"
    );
    assert!(
        stdout.contains(&format!("Excluded (actual <= 0)    {excluded}")),
        "{stdout}"
    );
    assert!(report["variable_worth"].is_array());
}

#[test]
fn pipeline_writes_every_output() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let (train, schema) = cohort(d, "7", "200");
    let (score, _) = cohort(d, "8", "80");
    let out = d.join("run");
    ok(&[
        "pipeline",
        "--train-data",
        p(&train),
        "--score-data",
        p(&score),
        "--schema",
        p(&schema),
        "--target",
        "aggregate",
        "--nn-epochs",
        "50",
        "--out",
        p(&out),
    ]);
    for file in [
        "model.json",
        "tree_model.json",
        "champion.txt",
        "evaluation.txt",
        "predictions.csv",
    ] {
        assert!(out.join(file).exists(), "{file}");
    }
    let preds = std::fs::read_to_string(out.join("predictions.csv")).unwrap();
    assert_eq!(preds.lines().count(), 81);
    assert!(preds.starts_with("student_id,prediction\n"));
}
