//! Turning a sense-annotated corpus into MWE training data.
//!
//! Input sentences carry a gold sense on each annotated token. A token whose
//! lemma contains `_` belongs to a multiword lemma; the conversion from the
//! source corpus gives every word of such an annotation the full MWE lemma
//! and its sense. The steps are:
//!
//! 1. [`mark_semcor_mwes`]: one target per sense-annotated word, and one per
//!    group of tokens sharing an MWE lemma and sense.
//! 2. [`attach_stranded_constituents`]: MWE targets with fewer tokens than
//!    constituents pick up the nearest unclaimed tokens that complete them.
//! 3. [`apply_manual_annotations`]: optional hand-labeled extra targets.
//! 4. Automatic negatives from [`generate_negatives`].
//!
//! The processed corpus is JSON lines, one sentence per line:
//!
//! ```text
//! {"sentence": {<canonical sentence>}, "targets": [
//!   {"indices": [0, 3], "key": "take_advantage", "pos": "v",
//!    "gold": "take_advantage.v.01", "is_mwe": true, "source": "attached"}]}
//! ```

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{
    detect_exhaustive, filter_max_gappiness, filter_ordered, generate_negatives, PipelineConfig, PipelineError,
};
use crate::corpus::{sentence_from_json, sentence_to_json, MweAnnotation, Sentence};
use crate::lexicon::{Lexicon, Pos};
use crate::scorer::SenseChoice;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetSource {
    #[default]
    Corpus,
    Attached,
    Manual,
    AutoNeg,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledTarget {
    /// Sorted token indices.
    pub indices: Vec<usize>,
    /// Lemma or lexicon key.
    pub key: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<Pos>,
    pub gold: SenseChoice,
    pub is_mwe: bool,
    #[serde(default)]
    pub source: TargetSource,
    /// Set when constituents were missing and none could be attached.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub unattached: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnnotatedSentence {
    pub sentence: Sentence,
    pub targets: Vec<LabeledTarget>,
}

impl AnnotatedSentence {
    pub fn positive_mwes(&self) -> usize {
        self.targets.iter().filter(|t| t.is_mwe && !t.gold.is_not_mwe()).count()
    }

    pub fn negative_mwes(&self) -> usize {
        self.targets.iter().filter(|t| t.gold.is_not_mwe()).count()
    }

    /// Rewrites the sentence's gold MWEs from the complete positive MWE
    /// targets.
    pub fn sync_gold_mwes(&mut self) {
        let mwes: Vec<MweAnnotation> = self
            .targets
            .iter()
            .filter(|t| t.is_mwe && !t.gold.is_not_mwe() && t.indices.len() >= 2 && !t.unattached)
            .enumerate()
            .map(|(i, t)| MweAnnotation {
                mwe_id: i as u32 + 1,
                token_indices: t.indices.clone(),
                category: None,
            })
            .collect();
        if let Err(e) = self.sentence.set_gold_mwes(mwes) {
            log::warn!("{}: {e}", self.sentence.sent_id);
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MarkReport {
    pub mwe_targets: usize,
    pub word_targets: usize,
    /// MWE lemmas with an empty constituent, such as a bare `_`.
    pub rejected: usize,
}

fn valid_mwe_lemma(lemma: &str) -> bool {
    lemma.split('_').all(|p| !p.trim().is_empty())
}

/// Builds word and MWE targets from gold senses.
pub fn mark_semcor_mwes(sentences: Vec<Sentence>) -> (Vec<AnnotatedSentence>, MarkReport) {
    let mut report = MarkReport::default();
    let mut out = Vec::with_capacity(sentences.len());
    for sentence in sentences {
        let mut targets: Vec<LabeledTarget> = Vec::new();
        // (key, sense) -> open target index
        let mut open: HashMap<(String, String), usize> = HashMap::new();
        for t in &sentence.tokens {
            let Some(sense) = &t.gold_sense else { continue };
            let lemma = t.lemma.to_lowercase();
            let pos = Some(Pos::from_corpus_tag(&t.upos));
            if !lemma.contains('_') {
                report.word_targets += 1;
                targets.push(LabeledTarget {
                    indices: vec![t.index],
                    key: lemma,
                    pos,
                    gold: SenseChoice::Sense(sense.clone()),
                    is_mwe: false,
                    source: TargetSource::Corpus,
                    unattached: false,
                });
                continue;
            }
            if !valid_mwe_lemma(&lemma) {
                report.rejected += 1;
                log::warn!(
                    "{}: token {} has malformed MWE lemma {:?}",
                    sentence.sent_id,
                    t.index,
                    t.lemma
                );
                continue;
            }
            let width = lemma.split('_').count();
            let slot = (lemma.clone(), sense.clone());
            match open.get(&slot) {
                Some(&i) if targets[i].indices.len() < width => targets[i].indices.push(t.index),
                _ => {
                    report.mwe_targets += 1;
                    open.insert(slot, targets.len());
                    targets.push(LabeledTarget {
                        indices: vec![t.index],
                        key: lemma,
                        pos,
                        gold: SenseChoice::Sense(sense.clone()),
                        is_mwe: true,
                        source: TargetSource::Corpus,
                        unattached: false,
                    });
                }
            }
        }
        targets.sort_by(|a, b| a.indices.cmp(&b.indices));
        out.push(AnnotatedSentence { sentence, targets });
    }
    (out, report)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AttachReport {
    pub attached: usize,
    pub unattachable: usize,
    /// (sent_id, key) of every unattachable target.
    pub flagged: Vec<(String, String)>,
}

impl AttachReport {
    fn merge(&mut self, other: AttachReport) {
        self.attached += other.attached;
        self.unattachable += other.unattachable;
        self.flagged.extend(other.flagged);
    }
}

const MAX_ATTACH_COMBINATIONS: usize = 100_000;

/// Completes MWE targets that cover fewer tokens than their entry has
/// constituents. Tokens already in an MWE target are never taken; absorbed
/// single-word targets are dropped. Among completions the smallest gap wins,
/// then the one furthest right.
pub fn attach_stranded_constituents(annotated: &mut AnnotatedSentence, lexicon: &Lexicon) -> AttachReport {
    let mut report = AttachReport::default();
    let n = annotated.sentence.tokens.len();
    let mut in_mwe = vec![false; n];
    for t in annotated.targets.iter().filter(|t| t.is_mwe) {
        for &i in &t.indices {
            in_mwe[i] = true;
        }
    }
    let mut absorbed = vec![false; n];
    for ti in 0..annotated.targets.len() {
        let target = &annotated.targets[ti];
        if !target.is_mwe || target.gold.is_not_mwe() {
            continue;
        }
        let constituents: Vec<String> = match lexicon.lookup(&target.key, target.pos) {
            Some(e) => e.constituents.clone(),
            None => target.key.split('_').map(str::to_owned).collect(),
        };
        if target.indices.len() >= constituents.len() {
            continue;
        }
        let tokens = &annotated.sentence.tokens;
        // constituents not already spelled out by a labeled token's form
        let mut missing: BTreeMap<String, usize> = BTreeMap::new();
        for c in &constituents {
            *missing.entry(c.clone()).or_default() += 1;
        }
        for &i in &target.indices {
            let form = tokens[i].form.to_lowercase();
            if let Some(k) = missing.get_mut(&form).filter(|k| **k > 0) {
                *k -= 1;
            }
        }
        let need = constituents.len() - target.indices.len();
        let pool: Vec<(usize, String)> = tokens
            .iter()
            .filter(|t| !in_mwe[t.index])
            .map(|t| (t.index, t.lemma.to_lowercase()))
            .filter(|(_, l)| missing.get(l).is_some_and(|k| *k > 0))
            .collect();
        match best_completion(&target.indices, &pool, &missing, need) {
            Some(extra) => {
                let t = &mut annotated.targets[ti];
                for &i in &extra {
                    in_mwe[i] = true;
                    absorbed[i] = true;
                }
                t.indices.extend(extra);
                t.indices.sort_unstable();
                t.source = TargetSource::Attached;
                report.attached += 1;
            }
            None => {
                let t = &mut annotated.targets[ti];
                t.unattached = true;
                report.unattachable += 1;
                report.flagged.push((annotated.sentence.sent_id.clone(), t.key.clone()));
            }
        }
    }
    annotated
        .targets
        .retain(|t| t.is_mwe || !t.indices.iter().any(|&i| absorbed[i]));
    annotated.sync_gold_mwes();
    report
}

fn best_completion(
    labeled: &[usize],
    pool: &[(usize, String)],
    missing: &BTreeMap<String, usize>,
    need: usize,
) -> Option<Vec<usize>> {
    if need > pool.len() {
        return None;
    }
    let mut best: Option<(usize, usize, Vec<usize>)> = None;
    let mut chosen = Vec::with_capacity(need);
    let mut budget = MAX_ATTACH_COMBINATIONS;
    let mut counts = missing.clone();
    combos(
        pool,
        0,
        need,
        &mut chosen,
        &mut counts,
        &mut budget,
        &mut |set: &[usize]| {
            let lo = labeled.iter().chain(set).min().copied().unwrap_or(0);
            let hi = labeled.iter().chain(set).max().copied().unwrap_or(0);
            let gap = (hi - lo + 1) - (labeled.len() + set.len());
            let right: usize = set.iter().sum();
            let better = match &best {
                None => true,
                Some((g, r, _)) => gap < *g || (gap == *g && right > *r),
            };
            if better {
                best = Some((gap, right, set.to_vec()));
            }
        },
    );
    best.map(|(_, _, s)| s)
}

fn combos(
    pool: &[(usize, String)],
    start: usize,
    need: usize,
    chosen: &mut Vec<usize>,
    counts: &mut BTreeMap<String, usize>,
    budget: &mut usize,
    visit: &mut dyn FnMut(&[usize]),
) {
    if chosen.len() == need {
        visit(chosen);
        return;
    }
    for j in start..pool.len() {
        if *budget == 0 {
            return;
        }
        *budget -= 1;
        let (idx, lemma) = &pool[j];
        let Some(k) = counts.get_mut(lemma) else { continue };
        if *k == 0 {
            continue;
        }
        *k -= 1;
        chosen.push(*idx);
        combos(pool, j + 1, need, chosen, counts, budget, visit);
        chosen.pop();
        *counts.get_mut(lemma).expect("present") += 1;
    }
}

/// A hand-labeled target keyed by sentence id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManualAnnotation {
    pub sent_id: String,
    pub indices: Vec<usize>,
    pub key: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<Pos>,
    pub gold: SenseChoice,
    /// Free text for annotators; ignored on import.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

pub fn read_manual_annotations<R: BufRead>(reader: R) -> Result<Vec<ManualAnnotation>, PipelineError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| PipelineError::MalformedRecord {
            line: i + 1,
            reason: e.to_string(),
        })?);
    }
    Ok(out)
}

/// Adds manual targets alongside the corpus-derived ones. A record whose
/// index set is already a target is skipped. Returns the number added.
pub fn apply_manual_annotations(
    annotated: &mut [AnnotatedSentence],
    records: &[ManualAnnotation],
) -> Result<usize, PipelineError> {
    let by_id: HashMap<String, usize> = annotated
        .iter()
        .enumerate()
        .map(|(i, a)| (a.sentence.sent_id.clone(), i))
        .collect();
    let mut added = 0;
    for r in records {
        let &si = by_id
            .get(&r.sent_id)
            .ok_or_else(|| PipelineError::UnknownSentence(r.sent_id.clone()))?;
        let a = &mut annotated[si];
        let mut indices = r.indices.clone();
        indices.sort_unstable();
        indices.dedup();
        if indices.is_empty() || indices.iter().any(|&i| i >= a.sentence.tokens.len()) {
            return Err(PipelineError::MalformedRecord {
                line: 0,
                reason: format!("{}: indices {:?} out of range", r.sent_id, r.indices),
            });
        }
        if a.targets.iter().any(|t| t.indices == indices) {
            continue;
        }
        a.targets.push(LabeledTarget {
            is_mwe: indices.len() >= 2 || r.key.contains('_'),
            indices,
            key: r.key.to_lowercase(),
            pos: r.pos,
            gold: r.gold.clone(),
            source: TargetSource::Manual,
            unattached: false,
        });
        a.targets.sort_by(|x, y| x.indices.cmp(&y.indices));
        a.sync_gold_mwes();
        added += 1;
    }
    Ok(added)
}

/// In-order, non-gappy candidates that match no target, for offline
/// labeling. Each record defaults to NOT_MWE.
pub fn export_candidates(
    annotated: &[AnnotatedSentence],
    lexicon: &Lexicon,
    config: &PipelineConfig,
) -> Vec<ManualAnnotation> {
    let mut out = Vec::new();
    for a in annotated {
        let d = detect_exhaustive(&a.sentence, lexicon, config);
        let kept = filter_max_gappiness(filter_ordered(d.candidates), config.max_gap);
        for c in kept {
            let set = c.sorted_indices();
            if a.targets.iter().any(|t| t.indices == set) {
                continue;
            }
            let text: Vec<String> = a
                .sentence
                .tokens
                .iter()
                .map(|t| {
                    if set.contains(&t.index) {
                        format!("[{}]", t.form)
                    } else {
                        t.form.clone()
                    }
                })
                .collect();
            out.push(ManualAnnotation {
                sent_id: a.sentence.sent_id.clone(),
                indices: set,
                key: c.entry.key.clone(),
                pos: Some(c.entry.pos),
                gold: SenseChoice::NotMwe,
                note: Some(text.join(" ")),
            });
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StageCount {
    pub stage: String,
    pub pos_mwe: usize,
    pub neg_mwe: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PreprocessReport {
    pub stages: Vec<StageCount>,
    pub word_targets: usize,
    pub rejected_lemmas: usize,
    pub attached: usize,
    pub unattachable: usize,
    pub negatives_requested: usize,
    pub negatives_available: usize,
    pub insufficient_negatives: bool,
}

#[derive(Clone, Debug)]
pub struct PreprocessOptions {
    pub config: PipelineConfig,
    pub negative_ratio: f64,
    pub seed: u64,
    pub manual: Vec<ManualAnnotation>,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        PreprocessOptions {
            config: PipelineConfig::default(),
            negative_ratio: 0.5,
            seed: 0,
            manual: Vec::new(),
        }
    }
}

fn stage(name: &str, annotated: &[AnnotatedSentence]) -> StageCount {
    StageCount {
        stage: name.to_string(),
        pos_mwe: annotated.iter().map(AnnotatedSentence::positive_mwes).sum(),
        neg_mwe: annotated.iter().map(AnnotatedSentence::negative_mwes).sum(),
    }
}

/// mark -> attach -> manual annotations -> automatic negatives.
pub fn preprocess(
    sentences: Vec<Sentence>,
    lexicon: &Lexicon,
    options: &PreprocessOptions,
) -> Result<(Vec<AnnotatedSentence>, PreprocessReport), PipelineError> {
    let (mut annotated, mark) = mark_semcor_mwes(sentences);
    let mut attach = AttachReport::default();
    for a in &mut annotated {
        attach.merge(attach_stranded_constituents(a, lexicon));
    }
    let mut report = PreprocessReport {
        word_targets: mark.word_targets,
        rejected_lemmas: mark.rejected,
        attached: attach.attached,
        unattachable: attach.unattachable,
        ..PreprocessReport::default()
    };
    report.stages.push(stage("marked", &annotated));
    if !options.manual.is_empty() {
        apply_manual_annotations(&mut annotated, &options.manual)?;
        report.stages.push(stage("+annotation", &annotated));
    }

    let sentences: Vec<Sentence> = annotated.iter().map(|a| a.sentence.clone()).collect();
    let sample = generate_negatives(
        &sentences,
        lexicon,
        &options.config,
        options.negative_ratio,
        options.seed,
    )?;
    report.negatives_requested = sample.requested;
    report.negatives_available = sample.available;
    report.insufficient_negatives = sample.is_short();
    for n in sample.negatives {
        annotated[n.sentence_index].targets.push(LabeledTarget {
            indices: n.candidate.sorted_indices(),
            key: n.candidate.entry.key.clone(),
            pos: Some(n.candidate.entry.pos),
            gold: SenseChoice::NotMwe,
            is_mwe: true,
            source: TargetSource::AutoNeg,
            unattached: false,
        });
    }
    for a in &mut annotated {
        a.targets.sort_by(|x, y| x.indices.cmp(&y.indices));
    }
    report.stages.push(stage("+autoneg", &annotated));
    Ok((annotated, report))
}

#[derive(Serialize, Deserialize)]
struct RawAnnotated {
    sentence: serde_json::Value,
    targets: Vec<LabeledTarget>,
}

pub fn write_annotated<W: Write>(mut out: W, annotated: &[AnnotatedSentence]) -> Result<(), PipelineError> {
    for a in annotated {
        let raw = RawAnnotated {
            sentence: sentence_to_json(&a.sentence),
            targets: a.targets.clone(),
        };
        serde_json::to_writer(&mut out, &raw).map_err(std::io::Error::from)?;
        writeln!(out)?;
    }
    Ok(())
}

pub fn read_annotated<R: BufRead>(reader: R) -> Result<Vec<AnnotatedSentence>, PipelineError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: String| PipelineError::MalformedRecord { line: i + 1, reason };
        let raw: RawAnnotated = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        let sentence = sentence_from_json(raw.sentence).map_err(|e| bad(e.to_string()))?;
        let n = sentence.tokens.len();
        if let Some(t) = raw
            .targets
            .iter()
            .find(|t| t.indices.is_empty() || t.indices.iter().any(|&x| x >= n))
        {
            return Err(bad(format!("target {} has indices {:?}", t.key, t.indices)));
        }
        out.push(AnnotatedSentence {
            sentence,
            targets: raw.targets,
        });
    }
    Ok(out)
}
