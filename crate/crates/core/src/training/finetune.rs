use std::collections::BTreeSet;

use super::{TrainingData, TrainingExample};
use crate::corpus::Sentence;
use crate::lexicon::Lexicon;
use crate::pipeline::{detect_exhaustive, run_pipeline, PipelineConfig, PipelineError};
use crate::scorer::{Scorer, SenseChoice};

/// Filter training data from an MWE-annotated corpus. Gold MWEs that some
/// lexicon entry matches exactly become positives labeled with that entry's
/// first sense; pipeline predictions matching no gold MWE become
/// not-an-MWE examples.
pub fn build_finetune_set(
    scorer: Option<&dyn Scorer>,
    sentences: &[Sentence],
    lexicon: &Lexicon,
    config: &PipelineConfig,
) -> Result<TrainingData, PipelineError> {
    let mut data = TrainingData::default();
    for (si, sentence) in sentences.iter().enumerate() {
        data.sentences.push(sentence.clone());
        let gold: BTreeSet<Vec<usize>> = sentence.gold_sets().into_iter().collect();
        let mut seen = BTreeSet::new();
        for c in detect_exhaustive(sentence, lexicon, config).candidates {
            let set = c.sorted_indices();
            if !gold.contains(&set) || !seen.insert(set.clone()) {
                continue;
            }
            data.examples.push(TrainingExample {
                sentence: si,
                target_indices: c.token_indices.clone(),
                senses: c.entry.senses.clone(),
                gold: SenseChoice::Sense(c.entry.senses[0].id.clone()),
                is_mwe: true,
            });
        }
        for p in run_pipeline(sentence, lexicon, config, scorer)? {
            let mut set = p.token_indices.clone();
            set.sort_unstable();
            if gold.contains(&set) {
                continue;
            }
            let Some(entry) = lexicon.lookup(&p.entry_key, None) else {
                continue;
            };
            data.examples.push(TrainingExample {
                sentence: si,
                target_indices: p.token_indices,
                senses: entry.senses.clone(),
                gold: SenseChoice::NotMwe,
                is_mwe: true,
            });
        }
    }
    Ok(data)
}
