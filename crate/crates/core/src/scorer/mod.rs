//! Gloss-conditioned scoring: a toy context/gloss encoder pair with
//! Bi-encoder and Poly-encoder heads, plus a scorer backed by externally
//! computed vectors.

mod encoder;
mod grad;
mod graph;
mod ops;
mod poly;
mod precomputed;
mod weights;

use std::fmt;
use std::path::Path;

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use encoder::{
    context_ids, encode_context, gloss_ids, gloss_representation, gloss_words, hash_token, word_representation,
    EncodedContext, CLS_ID,
};
pub use grad::Gradients;
pub use graph::{sentence_logits, sentence_loss, TargetInput};
pub use ops::{dot, log_sum_exp, softmax};
pub use poly::{
    distinct_codes_query, poly_code_context_attention, poly_gloss_attention, poly_position_attention, target_masks,
    CodeAttention, GlossAttention, PositionQueries,
};
pub use precomputed::PrecomputedScorer;
pub use weights::{
    load_checkpoint, manifest_path, save_checkpoint, AttentionParams, Dims, ScorerWeights, TENSOR_ORDER,
};

use crate::corpus::Sentence;
use crate::lexicon::Sense;

#[derive(Debug, Error)]
pub enum ScorerError {
    #[error("sentence has {len} tokens, encoder limit is {max}")]
    SentenceTooLong { len: usize, max: usize },
    #[error("token index {index} out of range for {len} tokens")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("empty target index list")]
    EmptyTarget,
    #[error("empty gloss")]
    EmptyGloss,
    #[error("target has no candidate senses")]
    EmptySenses,
    #[error("gold label {gold} outside {labels} labels")]
    GoldOutOfRange { gold: usize, labels: usize },
    #[error("target/non-target masks do not partition the positions")]
    MaskOverlap,
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("precomputed vectors: {0}")]
    Precomputed(String),
    #[error("no precomputed vector for {0}")]
    MissingVector(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Scoring head on top of the encoders.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Architecture {
    #[default]
    BiEncoder,
    PolyEncoder,
    /// Poly-encoder with separate code sets for target and non-target positions.
    PolyDistinct,
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Architecture::BiEncoder => "bi-encoder",
            Architecture::PolyEncoder => "poly-encoder",
            Architecture::PolyDistinct => "poly-distinct",
        })
    }
}

impl std::str::FromStr for Architecture {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bi-encoder" | "bi" => Ok(Architecture::BiEncoder),
            "poly-encoder" | "poly" => Ok(Architecture::PolyEncoder),
            "poly-distinct" => Ok(Architecture::PolyDistinct),
            other => Err(format!("unknown architecture {other:?}")),
        }
    }
}

/// Per-sense scores in rank order, plus the not-an-MWE score for MWE targets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SenseScores {
    pub per_sense: Vec<(String, f64)>,
    pub not_mwe: Option<f64>,
}

impl SenseScores {
    /// Highest-scoring sense; the lower rank wins ties.
    pub fn best_sense(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, (_, s)) in self.per_sense.iter().enumerate() {
            if best.is_none_or(|(_, b)| *s > b) {
                best = Some((i, *s));
            }
        }
        best
    }

    /// Filter predicate: strict `max φ(w, s_i) > φ(w, n)`. Targets without a
    /// not-an-MWE score are always retained.
    pub fn retains(&self) -> bool {
        match (self.best_sense(), self.not_mwe) {
            (Some((_, b)), Some(n)) => b > n,
            (Some(_), None) => true,
            (None, _) => false,
        }
    }

    /// Best sense score minus the not-an-MWE score (or the best score alone
    /// when there is none).
    pub fn margin(&self) -> f64 {
        let best = self.best_sense().map_or(f64::NEG_INFINITY, |(_, s)| s);
        best - self.not_mwe.unwrap_or(0.0)
    }

    /// Label logits: senses in rank order, then not-an-MWE if present.
    pub fn logits(&self) -> Vec<f64> {
        self.per_sense.iter().map(|(_, s)| *s).chain(self.not_mwe).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Prediction {
    Sense(usize),
    NotMwe,
}

/// Argmax over senses and not-an-MWE; ties go to the lower rank and
/// not-an-MWE loses ties.
pub fn predict_sense(scores: &SenseScores) -> Prediction {
    match (scores.best_sense(), scores.not_mwe) {
        (Some((i, b)), Some(n)) if b >= n => Prediction::Sense(i),
        (Some((i, _)), None) => Prediction::Sense(i),
        _ => Prediction::NotMwe,
    }
}

pub const NOT_MWE: &str = "NOT_MWE";

/// A sense id or the reserved not-an-MWE label. Serializes as a plain string.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum SenseChoice {
    Sense(String),
    NotMwe,
}

impl SenseChoice {
    pub fn is_not_mwe(&self) -> bool {
        matches!(self, SenseChoice::NotMwe)
    }

    pub fn from_prediction(p: Prediction, scores: &SenseScores) -> Self {
        match p {
            Prediction::Sense(i) => SenseChoice::Sense(scores.per_sense[i].0.clone()),
            Prediction::NotMwe => SenseChoice::NotMwe,
        }
    }
}

impl From<String> for SenseChoice {
    fn from(s: String) -> Self {
        if s == NOT_MWE {
            SenseChoice::NotMwe
        } else {
            SenseChoice::Sense(s)
        }
    }
}

impl From<SenseChoice> for String {
    fn from(c: SenseChoice) -> Self {
        c.to_string()
    }
}

impl fmt::Display for SenseChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SenseChoice::Sense(s) => f.write_str(s),
            SenseChoice::NotMwe => f.write_str(NOT_MWE),
        }
    }
}

/// Anything that can score a target's candidate senses in context.
pub trait Scorer: Send + Sync {
    fn score(
        &self,
        sentence: &Sentence,
        indices: &[usize],
        senses: &[Sense],
        is_mwe: bool,
    ) -> Result<SenseScores, ScorerError>;
}

/// Plain dot-product scores for given vectors.
pub fn biencoder_scores(
    r_w: ArrayView1<'_, f64>,
    senses: &[Array1<f64>],
    r_n: Option<ArrayView1<'_, f64>>,
) -> (Vec<f64>, Option<f64>) {
    (
        senses.iter().map(|s| dot(r_w, s.view())).collect(),
        r_n.map(|n| dot(r_w, n)),
    )
}

fn score_with(
    weights: &ScorerWeights,
    arch: Architecture,
    sentence: &Sentence,
    indices: &[usize],
    senses: &[Sense],
    is_mwe: bool,
) -> Result<SenseScores, ScorerError> {
    if senses.is_empty() {
        return Err(ScorerError::EmptySenses);
    }
    let ctx = encode_context(weights, sentence)?;
    let vectors = senses
        .iter()
        .map(|s| gloss_representation(weights, &s.gloss))
        .collect::<Result<Vec<_>, _>>()?;
    let views: Vec<_> = vectors.iter().map(|v| v.view()).collect();
    let (logits, _) = graph::head_forward(weights, arch, ctx.vectors.view(), indices, &views, is_mwe)?;
    Ok(SenseScores {
        per_sense: senses.iter().zip(&logits).map(|(s, x)| (s.id.clone(), *x)).collect(),
        not_mwe: if is_mwe { logits.last().copied() } else { None },
    })
}

pub fn score_biencoder(
    weights: &ScorerWeights,
    sentence: &Sentence,
    indices: &[usize],
    senses: &[Sense],
    is_mwe: bool,
) -> Result<SenseScores, ScorerError> {
    score_with(weights, Architecture::BiEncoder, sentence, indices, senses, is_mwe)
}

pub fn score_polyencoder(
    weights: &ScorerWeights,
    sentence: &Sentence,
    indices: &[usize],
    senses: &[Sense],
    is_mwe: bool,
    distinct_codes: bool,
) -> Result<SenseScores, ScorerError> {
    let arch = if distinct_codes {
        Architecture::PolyDistinct
    } else {
        Architecture::PolyEncoder
    };
    score_with(weights, arch, sentence, indices, senses, is_mwe)
}

/// Trainable weights together with the head they were trained for.
#[derive(Clone, Debug)]
pub struct Model {
    pub weights: ScorerWeights,
    pub architecture: Architecture,
}

impl Model {
    pub fn new(weights: ScorerWeights, architecture: Architecture) -> Self {
        Model { weights, architecture }
    }

    pub fn random(dims: Dims, architecture: Architecture, seed: u64) -> Result<Self, ScorerError> {
        Ok(Model::new(ScorerWeights::random(dims, seed)?, architecture))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScorerError> {
        let (weights, architecture) = load_checkpoint(path)?;
        Ok(Model { weights, architecture })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ScorerError> {
        save_checkpoint(&self.weights, self.architecture, path)
    }
}

impl Scorer for Model {
    fn score(
        &self,
        sentence: &Sentence,
        indices: &[usize],
        senses: &[Sense],
        is_mwe: bool,
    ) -> Result<SenseScores, ScorerError> {
        score_with(&self.weights, self.architecture, sentence, indices, senses, is_mwe)
    }
}
