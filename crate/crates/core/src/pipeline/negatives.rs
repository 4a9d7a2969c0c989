use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{detect_exhaustive, MweCandidate, PipelineConfig, PipelineError};
use crate::corpus::Sentence;
use crate::lexicon::Lexicon;
use crate::par::{self, Execution};

#[derive(Clone, Debug, PartialEq)]
pub struct NegativeExample<'a> {
    /// Position of the sentence in the input slice.
    pub sentence_index: usize,
    pub candidate: MweCandidate<'a>,
}

#[derive(Clone, Debug)]
pub struct NegativeSample<'a> {
    pub negatives: Vec<NegativeExample<'a>>,
    pub positives: usize,
    pub requested: usize,
    /// Eligible candidates before sampling.
    pub available: usize,
}

impl<'a> NegativeSample<'a> {
    pub fn is_short(&self) -> bool {
        self.available < self.requested
    }

    /// The sample, or `InsufficientNegatives` when the corpus fell short.
    pub fn into_result(self) -> Result<Vec<NegativeExample<'a>>, PipelineError> {
        if self.is_short() {
            Err(PipelineError::InsufficientNegatives {
                available: self.available,
                requested: self.requested,
            })
        } else {
            Ok(self.negatives)
        }
    }
}

/// Number of negatives that makes them `ratio` of all MWE examples.
pub(crate) fn negatives_needed(positives: usize, ratio: f64) -> usize {
    (positives as f64 * ratio / (1.0 - ratio)).round() as usize
}

/// Samples candidates that the rule-based filters would reject (out of order,
/// or gap above `config.max_gap`) so that negatives make up `target_ratio`
/// of the MWE examples. Positives are the sentences' gold MWEs. Candidates
/// whose index set equals a gold MWE are never eligible. When the corpus
/// cannot supply enough, every eligible candidate is returned and the
/// sample reports the shortfall.
pub fn generate_negatives<'a>(
    sentences: &[Sentence],
    lexicon: &'a Lexicon,
    config: &PipelineConfig,
    target_ratio: f64,
    seed: u64,
) -> Result<NegativeSample<'a>, PipelineError> {
    if !(target_ratio > 0.0 && target_ratio < 1.0) {
        return Err(PipelineError::Config(format!(
            "negative ratio must lie in (0, 1), got {target_ratio}"
        )));
    }
    config.validate(false)?;
    let per_sentence = par::map(Execution::default(), sentences, |s| eligible(s, lexicon, config));
    let mut pool = Vec::new();
    for (sentence_index, cands) in per_sentence.into_iter().enumerate() {
        pool.extend(cands.into_iter().map(|candidate| NegativeExample {
            sentence_index,
            candidate,
        }));
    }
    let positives: usize = sentences.iter().map(|s| s.gold_mwes.len()).sum();
    let requested = negatives_needed(positives, target_ratio);
    let available = pool.len();
    let negatives = if available <= requested {
        pool
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked = sample(&mut rng, available, requested).into_vec();
        picked.sort_unstable();
        let mut keep = vec![false; available];
        for i in picked {
            keep[i] = true;
        }
        pool.into_iter().zip(keep).filter_map(|(n, k)| k.then_some(n)).collect()
    };
    if available < requested {
        log::warn!("only {available} negative candidates for {requested} requested");
    }
    Ok(NegativeSample {
        negatives,
        positives,
        requested,
        available,
    })
}

/// Inverted-filter candidates for one sentence, one per (entry, index set).
fn eligible<'a>(sentence: &Sentence, lexicon: &'a Lexicon, config: &PipelineConfig) -> Vec<MweCandidate<'a>> {
    let gold: BTreeSet<Vec<usize>> = sentence.gold_sets().into_iter().collect();
    let mut seen = BTreeSet::new();
    detect_exhaustive(sentence, lexicon, config)
        .candidates
        .into_iter()
        .filter(|c| !c.in_order() || c.gap() > config.max_gap)
        .filter(|c| {
            let set = c.sorted_indices();
            !gold.contains(&set) && seen.insert((c.entry.key.clone(), c.entry.pos, set))
        })
        .collect()
}
