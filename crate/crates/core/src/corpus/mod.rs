//! Corpus model and readers/writers for cupt, DiMSUM and the canonical
//! JSON-lines sentence format.

mod cupt;
mod dimsum;
mod json;

use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cupt::{parse_cupt, read_cupt};
pub use dimsum::{parse_dimsum, read_dimsum};
pub use json::read_json;

use cupt::write_cupt;
use dimsum::write_dimsum;
use json::write_json;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("sentence {sent_id}, line {line}: malformed row: {reason}")]
    MalformedRow {
        sent_id: String,
        line: usize,
        reason: String,
    },
    #[error("sentence {sent_id}: MWE {mwe_id} continued before it was opened")]
    DanglingMweRef { sent_id: String, mwe_id: u32 },
    #[error("sentence {sent_id}: parent chain through offset {offset} is cyclic")]
    CyclicParent { sent_id: String, offset: usize },
    #[error("unsupported corpus format {0:?}")]
    UnsupportedFormat(String),
    #[error("{sentences} sentences but {predictions} prediction lists")]
    PredictionCountMismatch { sentences: usize, predictions: usize },
    #[error("sentence {sent_id}: MWE over {indices:?} is out of bounds or unsorted")]
    InvalidMweIndices { sent_id: String, indices: Vec<usize> },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub index: usize,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub gold_sense: Option<String>,
    /// First gold MWE containing this token. cupt allows overlapping MWEs;
    /// `Sentence::gold_mwes` is the complete record.
    pub gold_mwe_id: Option<u32>,
}

impl Token {
    pub fn new(index: usize, form: &str, lemma: &str, upos: &str) -> Self {
        let lemma = if lemma.is_empty() || lemma == "_" {
            form.to_lowercase()
        } else {
            lemma.to_string()
        };
        Token {
            index,
            form: form.to_string(),
            lemma,
            upos: upos.to_string(),
            gold_sense: None,
            gold_mwe_id: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MweAnnotation {
    pub mwe_id: u32,
    pub token_indices: Vec<usize>,
    pub category: Option<String>,
}

/// Raw rows kept from the source file so predictions can be written back in
/// the same shape.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SourceLayout {
    Cupt {
        columns: Vec<String>,
        rows: Vec<Vec<String>>,
    },
    Dimsum {
        rows: Vec<Vec<String>>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sentence {
    pub sent_id: String,
    pub tokens: Vec<Token>,
    pub gold_mwes: Vec<MweAnnotation>,
    /// Comment lines, verbatim.
    pub metadata: Vec<String>,
    pub layout: Option<SourceLayout>,
}

impl Sentence {
    /// Builds a sentence from `(form, lemma, upos)` triples.
    pub fn from_triples(sent_id: &str, triples: &[(&str, &str, &str)]) -> Self {
        let tokens = triples
            .iter()
            .enumerate()
            .map(|(i, (f, l, p))| Token::new(i, f, l, p))
            .collect();
        Sentence {
            sent_id: sent_id.to_string(),
            tokens,
            gold_mwes: Vec::new(),
            metadata: Vec::new(),
            layout: None,
        }
    }

    /// Sentence whose forms and lemmas are the given words.
    pub fn from_lemmas(sent_id: &str, lemmas: &[&str]) -> Self {
        let triples: Vec<_> = lemmas.iter().map(|l| (*l, *l, "X")).collect();
        Self::from_triples(sent_id, &triples)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Replaces the gold MWEs, validating indices and syncing token ids.
    pub fn set_gold_mwes(&mut self, mut mwes: Vec<MweAnnotation>) -> Result<(), CorpusError> {
        for m in &mut mwes {
            m.token_indices.sort_unstable();
            let sorted = m.token_indices.windows(2).all(|w| w[0] < w[1]);
            let in_bounds = m.token_indices.iter().all(|&i| i < self.tokens.len());
            if !sorted || !in_bounds || m.token_indices.is_empty() {
                return Err(CorpusError::InvalidMweIndices {
                    sent_id: self.sent_id.clone(),
                    indices: m.token_indices.clone(),
                });
            }
        }
        mwes.sort_by_key(|m| m.mwe_id);
        if let Some(w) = mwes.windows(2).find(|w| w[0].mwe_id == w[1].mwe_id) {
            return Err(CorpusError::MalformedRow {
                sent_id: self.sent_id.clone(),
                line: 0,
                reason: format!("duplicate MWE id {}", w[0].mwe_id),
            });
        }
        for t in &mut self.tokens {
            t.gold_mwe_id = None;
        }
        for m in &mwes {
            for &i in &m.token_indices {
                self.tokens[i].gold_mwe_id.get_or_insert(m.mwe_id);
            }
        }
        self.gold_mwes = mwes;
        Ok(())
    }

    /// Gold MWEs as sorted token-index sets.
    pub fn gold_sets(&self) -> Vec<Vec<usize>> {
        self.gold_mwes.iter().map(|m| m.token_indices.clone()).collect()
    }
}

/// Anything that can be written out as an MWE group.
pub trait MweSpan {
    fn span_indices(&self) -> Vec<usize>;
    fn span_category(&self) -> Option<&str> {
        None
    }
}

impl MweSpan for Vec<usize> {
    fn span_indices(&self) -> Vec<usize> {
        let mut v = self.clone();
        v.sort_unstable();
        v
    }
}

impl MweSpan for MweAnnotation {
    fn span_indices(&self) -> Vec<usize> {
        self.token_indices.clone()
    }
    fn span_category(&self) -> Option<&str> {
        self.category.as_deref()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Cupt,
    Dimsum,
    Json,
}

impl Format {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Result<Format, CorpusError> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .unwrap_or("")
            .to_ascii_lowercase();
        match ext.as_str() {
            "cupt" | "conllu" => Ok(Format::Cupt),
            "dimsum" | "tsv" => Ok(Format::Dimsum),
            "json" | "jsonl" => Ok(Format::Json),
            _ => Err(CorpusError::UnsupportedFormat(path.display().to_string())),
        }
    }
}

impl FromStr for Format {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cupt" => Ok(Format::Cupt),
            "dimsum" => Ok(Format::Dimsum),
            "json" | "jsonl" => Ok(Format::Json),
            _ => Err(CorpusError::UnsupportedFormat(s.to_string())),
        }
    }
}

pub fn read_corpus_from<R: BufRead>(reader: R, format: Format) -> Result<Vec<Sentence>, CorpusError> {
    match format {
        Format::Cupt => read_cupt(reader),
        Format::Dimsum => read_dimsum(reader),
        Format::Json => read_json(reader),
    }
}

pub fn read_corpus(path: impl AsRef<Path>, format: Format) -> Result<Vec<Sentence>, CorpusError> {
    let file = File::open(path)?;
    read_corpus_from(BufReader::new(file), format)
}

/// Writes `sentences` in `format`, replacing their MWE annotation with
/// `predictions` (one list per sentence).
pub fn write_predictions<W: Write, P: MweSpan>(
    out: W,
    sentences: &[Sentence],
    predictions: &[Vec<P>],
    format: Format,
) -> Result<(), CorpusError> {
    if sentences.len() != predictions.len() {
        return Err(CorpusError::PredictionCountMismatch {
            sentences: sentences.len(),
            predictions: predictions.len(),
        });
    }
    let groups: Vec<Vec<PredictedGroup>> = predictions
        .iter()
        .zip(sentences)
        .map(|(preds, s)| numbered_groups(preds, s))
        .collect::<Result<_, _>>()?;
    match format {
        Format::Cupt => write_cupt(out, sentences, &groups),
        Format::Dimsum => write_dimsum(out, sentences, &groups),
        Format::Json => write_json(out, sentences, &groups),
    }
}

/// One sentence with its gold annotation as a canonical JSON object.
pub fn sentence_to_json(s: &Sentence) -> serde_json::Value {
    let gold: Vec<MweAnnotation> = s.gold_mwes.clone();
    let groups = numbered_groups(&gold, s).expect("gold MWEs are validated on construction");
    json::sentence_to_json_value(s, &groups)
}

pub fn sentence_from_json(value: serde_json::Value) -> Result<Sentence, CorpusError> {
    json::sentence_from_json_value(value)
}

/// Writes sentences with their own gold annotation.
pub fn write_corpus<W: Write>(out: W, sentences: &[Sentence], format: Format) -> Result<(), CorpusError> {
    let gold: Vec<Vec<MweAnnotation>> = sentences.iter().map(|s| s.gold_mwes.clone()).collect();
    write_predictions(out, sentences, &gold, format)
}

#[derive(Clone, Debug)]
pub(crate) struct PredictedGroup {
    pub id: u32,
    pub indices: Vec<usize>,
    pub category: Option<String>,
}

/// Numbers groups 1.. by their first token and validates bounds.
fn numbered_groups<P: MweSpan>(preds: &[P], s: &Sentence) -> Result<Vec<PredictedGroup>, CorpusError> {
    let mut groups: Vec<PredictedGroup> = preds
        .iter()
        .map(|p| PredictedGroup {
            id: 0,
            indices: p.span_indices(),
            category: p.span_category().map(str::to_owned),
        })
        .collect();
    for g in &groups {
        let ok = !g.indices.is_empty()
            && g.indices.windows(2).all(|w| w[0] < w[1])
            && g.indices.iter().all(|&i| i < s.tokens.len());
        if !ok {
            return Err(CorpusError::InvalidMweIndices {
                sent_id: s.sent_id.clone(),
                indices: g.indices.clone(),
            });
        }
    }
    groups.sort_by(|a, b| a.indices.cmp(&b.indices));
    for (i, g) in groups.iter_mut().enumerate() {
        g.id = i as u32 + 1;
    }
    Ok(groups)
}
