//! Canonical JSON-lines sentence format:
//!
//! ```text
//! {"sent_id":"s1","tokens":[{"form":"He","lemma":"he","upos":"PRON"},...],
//!  "mwes":[{"id":1,"indices":[1,2,3],"category":"VID"}]}
//! ```
//!
//! Tokens may carry `"sense"` (gold sense id) and `"mwe"` (an MWE id that
//! must appear in `mwes`).

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{CorpusError, MweAnnotation, PredictedGroup, Sentence, Token};

#[derive(Serialize, Deserialize)]
struct JsonToken {
    form: String,
    lemma: String,
    upos: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sense: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mwe: Option<u32>,
}

#[derive(Serialize, Deserialize)]
struct JsonMwe {
    id: u32,
    indices: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    category: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct JsonSentence {
    sent_id: String,
    tokens: Vec<JsonToken>,
    #[serde(default)]
    mwes: Vec<JsonMwe>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    metadata: Vec<String>,
}

pub(crate) fn sentence_from_json_line(line: &str, line_no: usize) -> Result<Sentence, CorpusError> {
    let raw: JsonSentence = serde_json::from_str(line).map_err(|e| CorpusError::MalformedRow {
        sent_id: String::new(),
        line: line_no,
        reason: e.to_string(),
    })?;
    sentence_from_raw(raw, line_no)
}

fn sentence_from_raw(raw: JsonSentence, line_no: usize) -> Result<Sentence, CorpusError> {
    let mut sentence = Sentence {
        sent_id: raw.sent_id,
        tokens: Vec::with_capacity(raw.tokens.len()),
        gold_mwes: Vec::new(),
        metadata: raw.metadata,
        layout: None,
    };
    let mut declared = Vec::new();
    for (i, t) in raw.tokens.into_iter().enumerate() {
        let mut token = Token::new(i, &t.form, &t.lemma, &t.upos);
        token.gold_sense = t.sense;
        declared.push(t.mwe);
        sentence.tokens.push(token);
    }
    let mwes: Vec<MweAnnotation> = raw
        .mwes
        .into_iter()
        .map(|m| MweAnnotation {
            mwe_id: m.id,
            token_indices: m.indices,
            category: m.category,
        })
        .collect();
    sentence.set_gold_mwes(mwes).map_err(|e| match e {
        CorpusError::MalformedRow { sent_id, reason, .. } => CorpusError::MalformedRow {
            sent_id,
            line: line_no,
            reason,
        },
        other => other,
    })?;
    for (i, mwe) in declared.into_iter().enumerate() {
        if let Some(id) = mwe {
            let listed = sentence
                .gold_mwes
                .iter()
                .any(|m| m.mwe_id == id && m.token_indices.contains(&i));
            if !listed {
                return Err(CorpusError::DanglingMweRef {
                    sent_id: sentence.sent_id.clone(),
                    mwe_id: id,
                });
            }
        }
    }
    Ok(sentence)
}

pub fn read_json<R: BufRead>(reader: R) -> Result<Vec<Sentence>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(sentence_from_json_line(&line, i + 1)?);
    }
    Ok(out)
}

pub(crate) fn sentence_to_json_value(s: &Sentence, groups: &[PredictedGroup]) -> serde_json::Value {
    let mut first_group = vec![None; s.tokens.len()];
    for g in groups {
        for &i in &g.indices {
            first_group[i].get_or_insert(g.id);
        }
    }
    let raw = JsonSentence {
        sent_id: s.sent_id.clone(),
        tokens: s
            .tokens
            .iter()
            .zip(first_group)
            .map(|(t, mwe)| JsonToken {
                form: t.form.clone(),
                lemma: t.lemma.clone(),
                upos: t.upos.clone(),
                sense: t.gold_sense.clone(),
                mwe,
            })
            .collect(),
        mwes: groups
            .iter()
            .map(|g| JsonMwe {
                id: g.id,
                indices: g.indices.clone(),
                category: g.category.clone(),
            })
            .collect(),
        metadata: s.metadata.clone(),
    };
    serde_json::to_value(raw).expect("sentence serializes")
}

pub(crate) fn sentence_from_json_value(value: serde_json::Value) -> Result<Sentence, CorpusError> {
    let raw: JsonSentence = serde_json::from_value(value).map_err(|e| CorpusError::MalformedRow {
        sent_id: String::new(),
        line: 0,
        reason: e.to_string(),
    })?;
    sentence_from_raw(raw, 0)
}

pub(crate) fn write_json<W: Write>(
    mut out: W,
    sentences: &[Sentence],
    groups: &[Vec<PredictedGroup>],
) -> Result<(), CorpusError> {
    for (s, g) in sentences.iter().zip(groups) {
        serde_json::to_writer(&mut out, &sentence_to_json_value(s, g)).map_err(std::io::Error::from)?;
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{write_corpus, Format};

    #[test]
    fn reads_senses_and_mwes() {
        let line = r#"{"sent_id":"d1","tokens":[{"form":"take","lemma":"take","upos":"VERB","mwe":1},{"form":"advantage","lemma":"advantage","upos":"NOUN","sense":"adv.n.01","mwe":1}],"mwes":[{"id":1,"indices":[0,1]}]}"#;
        let s = read_json(line.as_bytes()).unwrap();
        assert_eq!(s[0].tokens[1].gold_sense.as_deref(), Some("adv.n.01"));
        assert_eq!(s[0].gold_sets(), vec![vec![0, 1]]);
        let mut out = Vec::new();
        write_corpus(&mut out, &s, Format::Json).unwrap();
        let back = read_json(out.as_slice()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn token_mwe_must_be_listed() {
        let line = r#"{"sent_id":"d1","tokens":[{"form":"a","lemma":"a","upos":"X","mwe":3}],"mwes":[]}"#;
        assert!(matches!(
            read_json(line.as_bytes()).unwrap_err(),
            CorpusError::DanglingMweRef { mwe_id: 3, .. }
        ));
    }

    #[test]
    fn mwe_indices_checked() {
        let line =
            r#"{"sent_id":"d1","tokens":[{"form":"a","lemma":"a","upos":"X"}],"mwes":[{"id":1,"indices":[0,4]}]}"#;
        assert!(matches!(
            read_json(line.as_bytes()).unwrap_err(),
            CorpusError::InvalidMweIndices { .. }
        ));
    }
}
