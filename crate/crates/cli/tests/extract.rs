mod common;

use std::collections::BTreeSet;
use std::fs;

use common::{code, fixture, glossmwe, manifest_of, ok, read_json, stderr};
use glossmwe::corpus::{read_corpus, Format};
use glossmwe::{load_lexicon, Lexicon, Sentence};

/// Rule-based extraction by enumeration: every strictly increasing index
/// tuple spelling an MWE entry, gap at most `max_gap`, then greedy selection
/// by first index, longer span, index tuple and key.
fn oracle(sentence: &Sentence, lexicon: &Lexicon, max_gap: usize) -> Vec<Vec<usize>> {
    let lemmas: Vec<String> = sentence.tokens.iter().map(|t| t.lemma.to_lowercase()).collect();
    let mut found: BTreeSet<(usize, std::cmp::Reverse<usize>, Vec<usize>, String)> = BTreeSet::new();
    for entry in lexicon.entries().iter().filter(|e| e.constituents.len() >= 2) {
        let k = entry.constituents.len();
        let mut stack: Vec<Vec<usize>> = vec![vec![]];
        while let Some(prefix) = stack.pop() {
            if prefix.len() == k {
                let gap = prefix[k - 1] - prefix[0] + 1 - k;
                if gap <= max_gap {
                    found.insert((prefix[0], std::cmp::Reverse(k), prefix.clone(), entry.key.clone()));
                }
                continue;
            }
            let start = prefix.last().map_or(0, |&i| i + 1);
            for (i, lemma) in lemmas.iter().enumerate().skip(start) {
                if *lemma == entry.constituents[prefix.len()] {
                    let mut next = prefix.clone();
                    next.push(i);
                    stack.push(next);
                }
            }
        }
    }
    let mut used = BTreeSet::new();
    let mut out = Vec::new();
    for (_, _, indices, _) in found {
        if indices.iter().all(|i| !used.contains(i)) {
            used.extend(indices.iter().copied());
            out.push(indices);
        }
    }
    out.sort();
    out
}

#[test]
fn golden_file_matches_oracle() {
    let lexicon = load_lexicon(fixture("lexicon.jsonl")).unwrap();
    let input = read_corpus(fixture("three.jsonl"), Format::Json).unwrap();
    let golden = read_corpus(fixture("three.rule-based.jsonl"), Format::Json).unwrap();
    assert_eq!(input.len(), golden.len());
    for (s, g) in input.iter().zip(&golden) {
        let mut got = g.gold_sets();
        got.sort();
        assert_eq!(got, oracle(s, &lexicon, 3), "{}", s.sent_id);
    }
}

#[test]
fn extract_reproduces_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pred.jsonl");
    ok(glossmwe([
        "extract".as_ref(),
        "--lexicon".as_ref(),
        fixture("lexicon.jsonl").as_os_str(),
        "--input".as_ref(),
        fixture("three.jsonl").as_os_str(),
        "--output".as_ref(),
        out.as_os_str(),
        "--preset".as_ref(),
        "rule-based".as_ref(),
    ]));
    assert_eq!(
        fs::read_to_string(&out).unwrap(),
        fs::read_to_string(fixture("three.rule-based.jsonl")).unwrap()
    );
    let m = read_json(&manifest_of(&out));
    assert_eq!(m["command"], "extract");
    assert_eq!(m["config"]["pipeline"]["max_gap"], 3);
    let roles: Vec<&str> = m["inputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|i| i["role"].as_str().unwrap())
        .collect();
    assert_eq!(roles, ["lexicon", "corpus"]);
    assert_eq!(m["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

fn extract_args(out: &std::path::Path, extra: &[&str]) -> Vec<std::ffi::OsString> {
    let mut v: Vec<std::ffi::OsString> = vec![
        "extract".into(),
        "--lexicon".into(),
        fixture("lexicon.jsonl").into(),
        "--input".into(),
        fixture("three.jsonl").into(),
        "--output".into(),
        out.into(),
    ];
    v.extend(extra.iter().map(Into::into));
    v
}

#[test]
fn encoder_filter_needs_weights() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pred.jsonl");
    let res = glossmwe(extract_args(&out, &["--encoder-filter"]));
    assert_eq!(code(&res), 2);
    assert!(stderr(&res).contains("--weights"), "{}", stderr(&res));
    assert!(!out.exists());
    assert!(!manifest_of(&out).exists());
}

#[test]
fn missing_weights_file_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pred.jsonl");
    let res = glossmwe(extract_args(
        &out,
        &["--encoder-filter", "--weights", "/nonexistent/model.bin"],
    ));
    assert_eq!(code(&res), 2, "{}", stderr(&res));
}

#[test]
fn empty_input_gives_empty_output() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("empty.jsonl");
    fs::write(&input, "").unwrap();
    let out = dir.path().join("pred.jsonl");
    ok(glossmwe([
        "extract".as_ref(),
        "--lexicon".as_ref(),
        fixture("lexicon.jsonl").as_os_str(),
        "--input".as_ref(),
        input.as_os_str(),
        "--output".as_ref(),
        out.as_os_str(),
    ]));
    assert_eq!(fs::read(&out).unwrap(), b"");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pred.jsonl");
    ok(glossmwe(extract_args(&out, &[])));
    let first = (fs::read(&out).unwrap(), fs::read(manifest_of(&out)).unwrap());
    ok(glossmwe(extract_args(&out, &[])));
    assert_eq!(first, (fs::read(&out).unwrap(), fs::read(manifest_of(&out)).unwrap()));

    let seq = dir.path().join("seq.jsonl");
    ok(glossmwe(extract_args(&seq, &["--sequential"])));
    assert_eq!(first.0, fs::read(&seq).unwrap());
}

#[test]
fn parseme_preset_keeps_verbal_entries_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pred.cupt");
    ok(glossmwe(extract_args(
        &out,
        &["--preset", "parseme", "--output-format", "cupt"],
    )));
    let pred = read_corpus(&out, Format::Cupt).unwrap();
    assert_eq!(pred[2].gold_sets(), vec![vec![4, 5]]);
    assert_eq!(pred[0].gold_sets(), vec![vec![1, 2, 3]]);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.toml");
    fs::write(&config, "[pipeline]\nmax_gap = 0\n").unwrap();
    let out = dir.path().join("pred.jsonl");
    let cfg = config.to_str().unwrap();
    ok(glossmwe(extract_args(&out, &["--config", cfg])));
    let pred = read_corpus(&out, Format::Json).unwrap();
    // look_up over "looked the word up" spans a gap of two
    assert!(!pred[1].gold_sets().contains(&vec![1, 4]));
    assert_eq!(read_json(&manifest_of(&out))["inputs"][2]["role"], "config");

    ok(glossmwe(extract_args(&out, &["--config", cfg, "--max-gap", "2"])));
    let pred = read_corpus(&out, Format::Json).unwrap();
    assert!(pred[1].gold_sets().contains(&vec![1, 4]));

    fs::write(&config, "[pipeline]\nmax_gapp = 0\n").unwrap();
    assert_eq!(code(&glossmwe(extract_args(&out, &["--config", cfg]))), 2);
}
