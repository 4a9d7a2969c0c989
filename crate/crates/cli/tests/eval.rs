mod common;

use std::fs;
use std::path::Path;

use common::{code, fixture, glossmwe, manifest_of, ok, stderr};
use serde_json::Value;

fn eval(gold: &Path, pred: &Path, metric: &str, extra: &[&str]) -> Value {
    let mut args = vec![
        "eval".to_string(),
        "--gold".into(),
        gold.display().to_string(),
        "--pred".into(),
        pred.display().to_string(),
        "--metric".into(),
        metric.into(),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    serde_json::from_str(&ok(glossmwe(args))).unwrap()
}

fn close(v: &Value, key: &str, want: f64) {
    let got = v[key].as_f64().unwrap();
    assert!((got - want).abs() < 1e-12, "{key}: {got} vs {want}");
}

/// One seven-token sentence with the given MWEs.
fn sentence(mwes: &[&[usize]]) -> String {
    let tokens: Vec<String> = (0..7)
        .map(|i| format!(r#"{{"form":"w{i}","lemma":"w{i}","upos":"X"}}"#))
        .collect();
    let groups: Vec<String> = mwes
        .iter()
        .enumerate()
        .map(|(k, m)| format!(r#"{{"id":{},"indices":{:?}}}"#, k + 1, m))
        .collect();
    format!(
        r#"{{"sent_id":"s","tokens":[{}],"mwes":[{}]}}"#,
        tokens.join(","),
        groups.join(",")
    ) + "\n"
}

#[test]
fn identical_files_score_one() {
    let f = fixture("three.jsonl");
    for metric in ["mwe-based", "token-based", "link"] {
        let r = eval(&f, &f, metric, &[]);
        assert_eq!(r["metric"], metric);
        for k in ["precision", "recall", "f1"] {
            close(&r, k, 1.0);
        }
    }
}

#[test]
fn hand_counted_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let gold = dir.path().join("gold.jsonl");
    let pred = dir.path().join("pred.jsonl");
    fs::write(&gold, sentence(&[&[1, 2], &[4, 5, 6]])).unwrap();
    fs::write(&pred, sentence(&[&[1, 2], &[4, 5]])).unwrap();

    let r = eval(&gold, &pred, "mwe-based", &[]);
    close(&r, "precision", 0.5);
    close(&r, "recall", 0.5);
    close(&r, "f1", 0.5);
    assert_eq!(
        (r["tp"].as_u64(), r["fp"].as_u64(), r["fn"].as_u64()),
        (Some(1), Some(1), Some(1))
    );

    let r = eval(&gold, &pred, "token-based", &[]);
    close(&r, "precision", 1.0);
    close(&r, "recall", 0.8);
    close(&r, "f1", 16.0 / 18.0);

    // gold links 1-2, 4-5, 5-6; predicted links 1-2, 4-5
    let r = eval(&gold, &pred, "link", &[]);
    close(&r, "precision", 1.0);
    close(&r, "recall", 2.0 / 3.0);
    close(&r, "f1", 0.8);
}

#[test]
fn wsd_key_files() {
    let dir = tempfile::tempdir().unwrap();
    let gold = dir.path().join("gold.key");
    let pred = dir.path().join("pred.key");
    fs::write(&gold, "i0 s0\ni1 s1\ni2 s2 s9\ni3 s3\n").unwrap();
    fs::write(&pred, "i0 s0\ni1 s1\ni2 s9\ni3 s2\n").unwrap();
    let r = eval(&gold, &pred, "wsd", &[]);
    close(&r, "f1", 0.75);
    assert_eq!(r["missing"], 0);

    fs::write(&pred, "i0 s0\ni1 s1\ni2 s9\n").unwrap();
    let res = glossmwe([
        "eval".as_ref(),
        "--gold".as_ref(),
        gold.as_os_str(),
        "--pred".as_ref(),
        pred.as_os_str(),
        "--metric".as_ref(),
        "wsd".as_ref(),
    ]);
    assert_eq!(code(&res), 2);
    let r = eval(&gold, &pred, "wsd", &["--lenient"]);
    close(&r, "precision", 1.0);
    close(&r, "recall", 0.75);
    assert_eq!(r["missing"], 1);
}

#[test]
fn metric_typo_is_a_usage_error() {
    let f = fixture("three.jsonl");
    let res = glossmwe([
        "eval".as_ref(),
        "--gold".as_ref(),
        f.as_os_str(),
        "--pred".as_ref(),
        f.as_os_str(),
        "--metric".as_ref(),
        "mwe-basd".as_ref(),
    ]);
    assert_eq!(code(&res), 2);
    assert!(stderr(&res).contains("mwe-based"), "{}", stderr(&res));
}

#[test]
fn sentence_id_mismatch_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let pred = dir.path().join("pred.jsonl");
    let text = fs::read_to_string(fixture("three.jsonl"))
        .unwrap()
        .replace("\"s2\"", "\"other\"");
    fs::write(&pred, text).unwrap();
    let res = glossmwe([
        "eval".as_ref(),
        "--gold".as_ref(),
        fixture("three.jsonl").as_os_str(),
        "--pred".as_ref(),
        pred.as_os_str(),
        "--metric".as_ref(),
        "link".as_ref(),
    ]);
    assert_eq!(code(&res), 2, "{}", stderr(&res));
}

#[test]
fn output_file_gets_report_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let f = fixture("three.jsonl");
    let printed = eval(
        &f,
        &fixture("three.rule-based.jsonl"),
        "mwe-based",
        &["--output", out.to_str().unwrap()],
    );
    let written: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(printed, written);
    let m: Value = serde_json::from_str(&fs::read_to_string(manifest_of(&out)).unwrap()).unwrap();
    assert_eq!(m["command"], "eval");
    assert_eq!(m["config"]["metric"], "mwe-based");
    assert_eq!(m["inputs"].as_array().unwrap().len(), 2);
}
