//! Candidate generation, filtering and overlap resolution, plus the
//! preprocessing that turns a sense-annotated corpus into MWE training data.

mod detect;
mod filters;
mod negatives;
mod resolve;
mod semcor;

use std::borrow::Cow;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use detect::{detect_consecutive_nouns, detect_exhaustive, is_noun_tag, Detection};
pub use filters::{filter_encoder, filter_max_gappiness, filter_ordered, filter_verbal_only};
pub use negatives::{generate_negatives, NegativeExample, NegativeSample};
pub use resolve::resolve_overlaps;
pub use semcor::{
    apply_manual_annotations, attach_stranded_constituents, export_candidates, mark_semcor_mwes, preprocess,
    read_annotated, read_manual_annotations, write_annotated, AnnotatedSentence, AttachReport, LabeledTarget,
    ManualAnnotation, MarkReport, PreprocessOptions, PreprocessReport, StageCount, TargetSource,
};

use crate::corpus::{MweSpan, Sentence};
use crate::lexicon::{Lexicon, LexiconEntry, Pos};
use crate::par::{self, Execution};
use crate::scorer::{Scorer, ScorerError, SenseChoice, SenseScores};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid pipeline configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Scorer(#[from] ScorerError),
    #[error("corpus supplies {available} negatives, {requested} requested")]
    InsufficientNegatives { available: usize, requested: usize },
    #[error("manual annotation for unknown sentence {0}")]
    UnknownSentence(String),
    #[error("processed corpus line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A lexicon entry bound to token positions; `token_indices[i]` realizes
/// `entry.constituents[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MweCandidate<'a> {
    pub entry: Cow<'a, LexiconEntry>,
    pub token_indices: Vec<usize>,
    pub sent_id: String,
}

impl MweCandidate<'_> {
    pub fn in_order(&self) -> bool {
        self.token_indices.windows(2).all(|w| w[0] < w[1])
    }

    /// Tokens inside the candidate's span that are not constituents.
    pub fn gap(&self) -> usize {
        match (self.token_indices.iter().min(), self.token_indices.iter().max()) {
            (Some(lo), Some(hi)) => (hi - lo + 1) - self.token_indices.len(),
            _ => 0,
        }
    }

    pub fn sorted_indices(&self) -> Vec<usize> {
        let mut v = self.token_indices.clone();
        v.sort_unstable();
        v
    }

    pub fn into_owned(self) -> MweCandidate<'static> {
        MweCandidate {
            entry: Cow::Owned(self.entry.into_owned()),
            token_indices: self.token_indices,
            sent_id: self.sent_id,
        }
    }
}

/// A candidate with the encoder's scores, if it went through the filter.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredCandidate<'a> {
    pub candidate: MweCandidate<'a>,
    pub scores: Option<SenseScores>,
}

impl<'a> ScoredCandidate<'a> {
    pub fn unscored(candidate: MweCandidate<'a>) -> Self {
        ScoredCandidate {
            candidate,
            scores: None,
        }
    }

    /// Best sense minus not-an-MWE; 0 without scores.
    pub fn margin(&self) -> f64 {
        self.scores.as_ref().map_or(0.0, SenseScores::margin)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictedMwe {
    pub token_indices: Vec<usize>,
    pub entry_key: String,
    pub chosen_sense: SenseChoice,
    pub margin: f64,
}

impl MweSpan for PredictedMwe {
    fn span_indices(&self) -> Vec<usize> {
        self.token_indices.clone()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub max_gap: usize,
    pub ordered_only: bool,
    /// Apply the gap filter at all.
    pub gap_filter: bool,
    pub use_encoder_filter: bool,
    pub verbal_only: bool,
    pub noun_compound_detector: bool,
    pub max_candidates_per_entry: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            max_gap: 3,
            ordered_only: true,
            gap_filter: true,
            use_encoder_filter: false,
            verbal_only: false,
            noun_compound_detector: false,
            max_candidates_per_entry: 64,
        }
    }
}

impl PipelineConfig {
    /// Ordered and gap filters only.
    pub fn rule_based() -> Self {
        Self::default()
    }

    /// Rule-based filters restricted to verbal entries.
    pub fn parseme() -> Self {
        PipelineConfig {
            verbal_only: true,
            ..Self::default()
        }
    }

    /// Rule-based filters plus consecutive-noun compounds.
    pub fn dimsum() -> Self {
        PipelineConfig {
            noun_compound_detector: true,
            ..Self::default()
        }
    }

    pub fn preset(name: &str) -> Result<Self, PipelineError> {
        match name {
            "rule-based" | "default" => Ok(Self::rule_based()),
            "parseme" => Ok(Self::parseme()),
            "dimsum" => Ok(Self::dimsum()),
            other => Err(PipelineError::Config(format!("unknown preset {other:?}"))),
        }
    }

    pub fn validate(&self, has_scorer: bool) -> Result<(), PipelineError> {
        if self.max_candidates_per_entry == 0 {
            return Err(PipelineError::Config(
                "max_candidates_per_entry must be at least 1".into(),
            ));
        }
        if self.use_encoder_filter && !has_scorer {
            return Err(PipelineError::Config("encoder filter enabled without a scorer".into()));
        }
        Ok(())
    }
}

/// Everything the pipeline produced for one sentence.
#[derive(Clone, Debug, Default)]
pub struct PipelineOutput {
    pub predictions: Vec<PredictedMwe>,
    /// Entries whose candidates hit the per-entry cap.
    pub truncated_entries: usize,
}

/// detect -> ordered -> gap -> verbal -> encoder -> noun compounds -> resolve.
pub fn run_pipeline(
    sentence: &Sentence,
    lexicon: &Lexicon,
    config: &PipelineConfig,
    scorer: Option<&dyn Scorer>,
) -> Result<Vec<PredictedMwe>, PipelineError> {
    Ok(run_pipeline_detailed(sentence, lexicon, config, scorer)?.predictions)
}

pub fn run_pipeline_detailed(
    sentence: &Sentence,
    lexicon: &Lexicon,
    config: &PipelineConfig,
    scorer: Option<&dyn Scorer>,
) -> Result<PipelineOutput, PipelineError> {
    config.validate(scorer.is_some())?;
    let Detection {
        mut candidates,
        truncated_entries,
    } = detect_exhaustive(sentence, lexicon, config);
    if config.ordered_only {
        candidates = filter_ordered(candidates);
    }
    if config.gap_filter {
        candidates = filter_max_gappiness(candidates, config.max_gap);
    }
    if config.verbal_only {
        candidates = filter_verbal_only(candidates);
    }
    let mut scored: Vec<ScoredCandidate<'_>> = match (config.use_encoder_filter, scorer) {
        (true, Some(s)) => filter_encoder(candidates, sentence, s)?
            .into_iter()
            .map(|(c, sc)| ScoredCandidate {
                candidate: c,
                scores: Some(sc),
            })
            .collect(),
        _ => candidates.into_iter().map(ScoredCandidate::unscored).collect(),
    };
    if config.noun_compound_detector {
        scored.extend(
            detect_consecutive_nouns(sentence)
                .into_iter()
                .map(ScoredCandidate::unscored),
        );
    }
    Ok(PipelineOutput {
        predictions: resolve_overlaps(scored),
        truncated_entries,
    })
}

/// Runs the pipeline over a corpus, one task per sentence. Output order
/// follows input order.
pub fn run_corpus(
    sentences: &[Sentence],
    lexicon: &Lexicon,
    config: &PipelineConfig,
    scorer: Option<&dyn Scorer>,
    exec: Execution,
) -> Result<Vec<Vec<PredictedMwe>>, PipelineError> {
    config.validate(scorer.is_some())?;
    let outputs = par::map(exec, sentences, |s| run_pipeline_detailed(s, lexicon, config, scorer));
    let mut truncated = 0;
    let mut predictions = Vec::with_capacity(sentences.len());
    for out in outputs {
        let out = out?;
        truncated += out.truncated_entries;
        predictions.push(out.predictions);
    }
    if truncated > 0 {
        log::warn!("candidate cap reached for {truncated} entry/sentence pairs");
    }
    Ok(predictions)
}

/// Entry with one placeholder sense, for candidates not backed by the lexicon.
pub(crate) fn synthetic_entry(key: String, constituents: Vec<String>, pos: Pos, sense_id: String) -> LexiconEntry {
    LexiconEntry {
        key,
        constituents,
        pos,
        senses: vec![crate::lexicon::Sense {
            id: sense_id,
            gloss: "compound of consecutive nouns".into(),
            rank: 0,
        }],
    }
}
