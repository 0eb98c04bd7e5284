use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use envelope_ml::pipeline::normalize;
use envelope_ml::{fit_lda, read_dataset, FeatureId};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_envelope-ml"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn same_file(a: &Path, b: &Path) {
    let (x, y) = (fs::read(a).unwrap(), fs::read(b).unwrap());
    assert!(x == y, "{} and {} differ", a.display(), b.display());
}

#[test]
fn subcommands_compose_into_the_full_run() {
    let tmp = tempfile::tempdir().unwrap();
    let full = tmp.path().join("full");
    ok(&["run", "--out", p(&full)]);

    let step = tmp.path().join("steps");
    fs::create_dir(&step).unwrap();
    let f = |name: &str| step.join(name);
    ok(&["generate", "--out", p(&f("raw.csv"))]);
    ok(&[
        "simulate",
        "--input",
        p(&f("raw.csv")),
        "--out",
        p(&f("loads.csv")),
    ]);
    ok(&[
        "label",
        "--input",
        p(&f("loads.csv")),
        "--out",
        p(&f("dataset.csv")),
    ]);
    let msg = ok(&[
        "split",
        "--input",
        p(&f("dataset.csv")),
        "--train-out",
        p(&f("train.csv")),
        "--test-out",
        p(&f("test.csv")),
    ]);
    assert_eq!(msg.trim(), "train 210 / test 390");
    let pca_msg = ok(&["pca", "--train", p(&f("train.csv")), "--out-dir", p(&step)]);
    ok(&[
        "efs",
        "--train",
        p(&f("train.csv")),
        "--out",
        p(&f("efs_accuracy.csv")),
    ]);

    let summary: Value =
        serde_json::from_str(&fs::read_to_string(full.join("summary.json")).unwrap()).unwrap();
    let top: Vec<&str> = summary["pca"]["top_features"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert!(pca_msg.contains(&top.join(",")), "{pca_msg}");
    ok(&[
        "train",
        "--train",
        p(&f("train.csv")),
        "--test",
        p(&f("test.csv")),
        "--features",
        &top.join(","),
        "--grid-dir",
        p(&step),
        "--out",
        p(&f("pca_model.json")),
    ]);

    let mut compared = 0;
    for entry in fs::read_dir(&full).unwrap() {
        let name = entry.unwrap().file_name().into_string().unwrap();
        if name == "summary.json" {
            continue;
        }
        same_file(&full.join(&name), &step.join(&name));
        compared += 1;
    }
    assert_eq!(compared, 15);

    let model: Value =
        serde_json::from_str(&fs::read_to_string(f("pca_model.json")).unwrap()).unwrap();
    assert_eq!(model, summary["pca_selected"]);
}

#[test]
fn summary_agrees_with_the_written_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    ok(&["run", "--seed", "7", "--out", p(out)]);
    let s: Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();

    let dataset = read_dataset(&out.join("dataset.csv")).unwrap();
    let train = read_dataset(&out.join("train.csv")).unwrap();
    let test = read_dataset(&out.join("test.csv")).unwrap();
    for (key, d) in [("dataset", &dataset), ("train", &train), ("test", &test)] {
        let [low, medium, high] = d.class_counts();
        let c = &s["counts"][key];
        assert_eq!(c["low"], low);
        assert_eq!(c["medium"], medium);
        assert_eq!(c["high"], high);
        assert_eq!(c["total"], d.len());
    }
    let test_majority = *test.class_counts().iter().max().unwrap() as f64 / test.len() as f64;
    assert_eq!(
        s["baseline"]["test_majority_share"].as_f64().unwrap(),
        test_majority
    );

    let (_, tn, sn) = normalize(&train, &train, &test).unwrap();
    for key in ["pca_selected", "efs_selected"] {
        let features: Vec<usize> = s[key]["features"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_str().unwrap().parse::<FeatureId>().unwrap().index())
            .collect();
        let m = fit_lda(&tn.feature_matrix(&features), &tn.labels().unwrap()).unwrap();
        let acc = m
            .accuracy(&sn.feature_matrix(&features), &sn.labels().unwrap())
            .unwrap();
        assert_eq!(s[key]["test_accuracy"].as_f64().unwrap(), acc, "{key}");
    }

    let mut rdr = csv::Reader::from_path(out.join("efs_accuracy.csv")).unwrap();
    let rows: Vec<(String, usize, f64)> = rdr
        .records()
        .map(|r| {
            let r = r.unwrap();
            (
                r[0].to_string(),
                r[1].parse().unwrap(),
                r[2].parse().unwrap(),
            )
        })
        .collect();
    assert_eq!(rows.len(), 127);
    for best in s["efs"]["best_per_size"].as_array().unwrap() {
        let size = best["size"].as_u64().unwrap() as usize;
        let top = rows
            .iter()
            .filter(|r| r.1 == size)
            .fold(None::<&(String, usize, f64)>, |b, r| match b {
                Some(b) if b.2 >= r.2 => Some(b),
                _ => Some(r),
            })
            .unwrap();
        let names: Vec<&str> = best["features"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_str().unwrap())
            .collect();
        assert_eq!(top.0, names.join("+"));
        assert_eq!(top.2, best["metric"].as_f64().unwrap());
    }

    let mut listed: Vec<String> = s["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    let mut present: Vec<String> = fs::read_dir(out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    listed.sort();
    present.sort();
    assert_eq!(listed, present);
}

#[test]
fn exit_codes_distinguish_usage_from_pipeline_errors() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["run", "--bogus"]).status.code(), Some(1));
    assert_eq!(
        run(&["run", "--low-max", "95", "--out", p(tmp.path())])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        run(&["run", "--train-frac", "1.5", "--out", p(tmp.path())])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        run(&["run", "--efs-metric", "cv1", "--out", p(tmp.path())])
            .status
            .code(),
        Some(1)
    );

    let missing = tmp.path().join("nope.csv");
    let out = run(&[
        "label",
        "--input",
        p(&missing),
        "--out",
        p(&tmp.path().join("x.csv")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.csv"));
}

#[test]
fn failed_run_leaves_no_partial_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let loads = tmp.path().join("loads.csv");
    fs::write(&loads, "row_index,load\n0,80\n").unwrap();
    let out_dir = tmp.path().join("out");
    let out = run(&["run", "--ingest-loads", p(&loads), "--out", p(&out_dir)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ingest"));
    assert_eq!(fs::read_dir(&out_dir).unwrap().count(), 0);
}

#[test]
fn ingested_loads_drive_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let loads = tmp.path().join("loads.csv");
    let mut text = String::from("row_index,load\n");
    for i in 0..30 {
        // Load rises with material index, so the label follows the material.
        text.push_str(&format!("{i},{}\n", 60.0 + 6.0 * (i / 5) as f64));
    }
    fs::write(&loads, text).unwrap();
    let out = tmp.path().join("out");
    ok(&[
        "run",
        "--n-per-material",
        "5",
        "--ingest-loads",
        p(&loads),
        "--train-frac",
        "0.5",
        "--out",
        p(&out),
    ]);
    let d = read_dataset(&out.join("dataset.csv")).unwrap();
    assert_eq!(d.rows[0].load, Some(60.0));
    assert_eq!(d.rows[29].load, Some(90.0));
    assert_eq!(d.class_counts(), [15, 10, 5]);
}

#[test]
fn exported_config_reproduces_the_default_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg");
    ok(&["export-config", "--out-dir", p(&cfg)]);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    ok(&["run", "--out", p(&a)]);
    ok(&[
        "run",
        "--constants",
        p(&cfg.join("constants.json")),
        "--surrogate-config",
        p(&cfg.join("surrogate.json")),
        "--out",
        p(&b),
    ]);
    same_file(&a.join("dataset.csv"), &b.join("dataset.csv"));
    same_file(&a.join("efs_accuracy.csv"), &b.join("efs_accuracy.csv"));
}
