//! Bi-encoder scoring from vectors produced elsewhere.
//!
//! File format (JSON):
//!
//! ```json
//! {
//!   "dim": 4,
//!   "not_mwe": [0.0, 0.0, 0.0, 0.0],
//!   "glosses": { "ktb.v.01": [0.1, 0.2, 0.3, 0.4] },
//!   "sentences": {
//!     "s1": {
//!       "rows": [[...], [...], [...]],
//!       "word_rows": [[0], [1, 2]]
//!     }
//!   }
//! }
//! ```
//!
//! `rows` holds one vector per encoder position (usually subwords).
//! `word_rows[i]` lists the rows belonging to token `i`; when absent, row `i`
//! is token `i`. A target's representation is the mean over all rows of all
//! its tokens.

use std::collections::HashMap;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use ndarray::Array1;
use serde::Deserialize;

use super::{dot, Scorer, ScorerError, SenseScores};
use crate::corpus::Sentence;
use crate::lexicon::Sense;

#[derive(Debug, Deserialize)]
struct SentenceVectors {
    rows: Vec<Vec<f64>>,
    #[serde(default)]
    word_rows: Option<Vec<Vec<usize>>>,
}

#[derive(Debug, Deserialize)]
struct VectorFile {
    dim: usize,
    not_mwe: Vec<f64>,
    glosses: HashMap<String, Vec<f64>>,
    sentences: HashMap<String, SentenceVectors>,
}

#[derive(Debug)]
pub struct PrecomputedScorer {
    file: VectorFile,
}

impl PrecomputedScorer {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScorerError> {
        let reader = BufReader::new(File::open(path)?);
        let file: VectorFile = serde_json::from_reader(reader).map_err(|e| ScorerError::Precomputed(e.to_string()))?;
        Self::validated(file)
    }

    pub fn from_json(text: &str) -> Result<Self, ScorerError> {
        let file: VectorFile = serde_json::from_str(text).map_err(|e| ScorerError::Precomputed(e.to_string()))?;
        Self::validated(file)
    }

    fn validated(file: VectorFile) -> Result<Self, ScorerError> {
        let d = file.dim;
        let bad = |what: &str| Err(ScorerError::Precomputed(format!("{what} does not have dimension {d}")));
        if file.not_mwe.len() != d {
            return bad("not_mwe");
        }
        if let Some((id, _)) = file.glosses.iter().find(|(_, v)| v.len() != d) {
            return bad(&format!("gloss {id}"));
        }
        for (id, s) in &file.sentences {
            if s.rows.iter().any(|r| r.len() != d) {
                return bad(&format!("sentence {id}"));
            }
            let max_row = s.word_rows.iter().flatten().flatten().copied().max();
            if max_row.is_some_and(|m| m >= s.rows.len()) {
                return Err(ScorerError::Precomputed(format!(
                    "sentence {id}: word_rows out of range"
                )));
            }
        }
        Ok(PrecomputedScorer { file })
    }

    fn word_vector(&self, sentence: &Sentence, indices: &[usize]) -> Result<Array1<f64>, ScorerError> {
        if indices.is_empty() {
            return Err(ScorerError::EmptyTarget);
        }
        let sv = self
            .file
            .sentences
            .get(&sentence.sent_id)
            .ok_or_else(|| ScorerError::MissingVector(format!("sentence {}", sentence.sent_id)))?;
        let n_tokens = sv.word_rows.as_ref().map_or(sv.rows.len(), Vec::len);
        let mut acc = Array1::zeros(self.file.dim);
        let mut count = 0usize;
        for &i in indices {
            if i >= n_tokens {
                return Err(ScorerError::IndexOutOfRange {
                    index: i,
                    len: n_tokens,
                });
            }
            let rows: &[usize] = match &sv.word_rows {
                Some(w) => &w[i],
                None => std::slice::from_ref(&i),
            };
            for &r in rows {
                acc += &Array1::from(sv.rows[r].clone());
                count += 1;
            }
        }
        if count == 0 {
            return Err(ScorerError::EmptyTarget);
        }
        Ok(acc / count as f64)
    }
}

impl Scorer for PrecomputedScorer {
    fn score(
        &self,
        sentence: &Sentence,
        indices: &[usize],
        senses: &[Sense],
        is_mwe: bool,
    ) -> Result<SenseScores, ScorerError> {
        if senses.is_empty() {
            return Err(ScorerError::EmptySenses);
        }
        let r_w = self.word_vector(sentence, indices)?;
        let per_sense = senses
            .iter()
            .map(|s| {
                let g = self
                    .file
                    .glosses
                    .get(&s.id)
                    .ok_or_else(|| ScorerError::MissingVector(format!("sense {}", s.id)))?;
                Ok((s.id.clone(), dot(r_w.view(), Array1::from(g.clone()).view())))
            })
            .collect::<Result<Vec<_>, ScorerError>>()?;
        let not_mwe = is_mwe.then(|| dot(r_w.view(), Array1::from(self.file.not_mwe.clone()).view()));
        Ok(SenseScores { per_sense, not_mwe })
    }
}
