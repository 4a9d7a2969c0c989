//! MWE identification and WSD metrics. All counts are micro-averaged over the
//! corpus.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::BufRead;

use serde::Serialize;
use thiserror::Error;

use crate::corpus::Sentence;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("gold and predicted sentences do not line up: {0}")]
    SentenceIdMismatch(String),
    #[error("no prediction for instance {0}")]
    MissingPrediction(String),
    #[error("prediction for unknown instance {0}")]
    UnknownInstance(String),
    #[error("line {line}: {reason}")]
    MalformedKey { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct PRF {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

impl PRF {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> PRF {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        PRF {
            precision,
            recall,
            f1: harmonic(precision, recall),
            tp,
            fp,
            fn_,
        }
    }

    /// For measures where the matches counted on the predicted side differ
    /// from those counted on the gold side. `tp` and `fp` describe the
    /// predicted side, `fn` the unmatched gold items.
    pub fn from_sided_counts(pred_matched: usize, pred_total: usize, gold_matched: usize, gold_total: usize) -> PRF {
        let precision = ratio(pred_matched, pred_total);
        let recall = ratio(gold_matched, gold_total);
        PRF {
            precision,
            recall,
            f1: harmonic(precision, recall),
            tp: pred_matched,
            fp: pred_total - pred_matched,
            fn_: gold_total - gold_matched,
        }
    }
}

/// The MWE index sets of one sentence, sorted and deduplicated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SentenceMwes {
    pub sent_id: String,
    pub mwes: Vec<Vec<usize>>,
}

impl SentenceMwes {
    pub fn new(sent_id: impl Into<String>, mwes: Vec<Vec<usize>>) -> Self {
        let mut mwes: Vec<Vec<usize>> = mwes
            .into_iter()
            .map(|mut m| {
                m.sort_unstable();
                m.dedup();
                m
            })
            .collect();
        mwes.sort();
        mwes.dedup();
        SentenceMwes {
            sent_id: sent_id.into(),
            mwes,
        }
    }
}

impl From<&Sentence> for SentenceMwes {
    fn from(s: &Sentence) -> Self {
        SentenceMwes::new(s.sent_id.clone(), s.gold_sets())
    }
}

pub fn mwes_of(sentences: &[Sentence]) -> Vec<SentenceMwes> {
    sentences.iter().map(SentenceMwes::from).collect()
}

/// Pairs gold and predicted sentences by id. Matching positions are accepted
/// as is; otherwise ids must be unique and identical as sets.
fn align<'a>(
    gold: &'a [SentenceMwes],
    pred: &'a [SentenceMwes],
) -> Result<Vec<(&'a SentenceMwes, &'a SentenceMwes)>, EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::SentenceIdMismatch(format!(
            "{} gold sentences, {} predicted",
            gold.len(),
            pred.len()
        )));
    }
    if gold.iter().zip(pred).all(|(g, p)| g.sent_id == p.sent_id) {
        return Ok(gold.iter().zip(pred).collect());
    }
    let mut by_id: HashMap<&str, &SentenceMwes> = HashMap::with_capacity(pred.len());
    for p in pred {
        if by_id.insert(&p.sent_id, p).is_some() {
            return Err(EvalError::SentenceIdMismatch(format!(
                "duplicate predicted id {}",
                p.sent_id
            )));
        }
    }
    let mut seen = HashSet::with_capacity(gold.len());
    gold.iter()
        .map(|g| {
            if !seen.insert(g.sent_id.as_str()) {
                return Err(EvalError::SentenceIdMismatch(format!(
                    "duplicate gold id {}",
                    g.sent_id
                )));
            }
            by_id
                .get(g.sent_id.as_str())
                .map(|p| (g, *p))
                .ok_or_else(|| EvalError::SentenceIdMismatch(format!("no prediction for sentence {}", g.sent_id)))
        })
        .collect()
}

/// Exact-set matching of predicted MWEs against gold MWEs.
pub fn mwe_based_prf(gold: &[SentenceMwes], pred: &[SentenceMwes]) -> Result<PRF, EvalError> {
    let (mut tp, mut n_gold, mut n_pred) = (0, 0, 0);
    for (g, p) in align(gold, pred)? {
        let gs: BTreeSet<&Vec<usize>> = g.mwes.iter().collect();
        let ps: BTreeSet<&Vec<usize>> = p.mwes.iter().collect();
        tp += gs.intersection(&ps).count();
        n_gold += gs.len();
        n_pred += ps.len();
    }
    Ok(PRF::from_counts(tp, n_pred - tp, n_gold - tp))
}

fn token_union(m: &SentenceMwes) -> BTreeSet<usize> {
    m.mwes.iter().flatten().copied().collect()
}

/// Overlap of the tokens covered by any gold MWE and by any predicted MWE.
pub fn token_based_prf(gold: &[SentenceMwes], pred: &[SentenceMwes]) -> Result<PRF, EvalError> {
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (g, p) in align(gold, pred)? {
        let gt = token_union(g);
        let pt = token_union(p);
        let both = gt.intersection(&pt).count();
        tp += both;
        fp += pt.len() - both;
        fn_ += gt.len() - both;
    }
    Ok(PRF::from_counts(tp, fp, fn_))
}

fn links(m: &SentenceMwes) -> Vec<(usize, usize)> {
    m.mwes.iter().flat_map(|g| g.windows(2).map(|w| (w[0], w[1]))).collect()
}

fn same_group(groups: &[Vec<usize>], a: usize, b: usize) -> bool {
    groups.iter().any(|g| g.contains(&a) && g.contains(&b))
}

/// Link-based measure: each MWE becomes links between consecutive members.
/// A predicted link counts toward precision when both ends share a gold MWE;
/// a gold link counts toward recall when both ends share a predicted MWE.
pub fn dimsum_link_prf(gold: &[SentenceMwes], pred: &[SentenceMwes]) -> Result<PRF, EvalError> {
    let (mut p_ok, mut p_all, mut g_ok, mut g_all) = (0, 0, 0, 0);
    for (g, p) in align(gold, pred)? {
        for (a, b) in links(p) {
            p_all += 1;
            p_ok += usize::from(same_group(&g.mwes, a, b));
        }
        for (a, b) in links(g) {
            g_all += 1;
            g_ok += usize::from(same_group(&p.mwes, a, b));
        }
    }
    Ok(PRF::from_sided_counts(p_ok, p_all, g_ok, g_all))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MweMetric {
    MweBased,
    TokenBased,
    Link,
}

impl MweMetric {
    pub fn name(self) -> &'static str {
        match self {
            MweMetric::MweBased => "mwe-based",
            MweMetric::TokenBased => "token-based",
            MweMetric::Link => "link",
        }
    }

    pub fn compute(self, gold: &[SentenceMwes], pred: &[SentenceMwes]) -> Result<PRF, EvalError> {
        match self {
            MweMetric::MweBased => mwe_based_prf(gold, pred),
            MweMetric::TokenBased => token_based_prf(gold, pred),
            MweMetric::Link => dimsum_link_prf(gold, pred),
        }
    }
}

/// A WSD instance and every sense accepted as correct for it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WsdGold {
    pub id: String,
    pub senses: Vec<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct WsdScore {
    #[serde(flatten)]
    pub prf: PRF,
    /// Missing predictions counted as errors (lenient mode only).
    pub missing: usize,
    /// Set when there were no gold instances.
    pub empty: bool,
}

/// Sense accuracy as P/R/F1. With `lenient`, a missing prediction counts
/// as a false negative instead of failing.
pub fn wsd_f1(gold: &[WsdGold], pred: &[(String, String)], lenient: bool) -> Result<WsdScore, EvalError> {
    let golds: HashMap<&str, &WsdGold> = gold.iter().map(|g| (g.id.as_str(), g)).collect();
    let mut preds: HashMap<&str, &str> = HashMap::with_capacity(pred.len());
    for (id, sense) in pred {
        if !golds.contains_key(id.as_str()) {
            return Err(EvalError::UnknownInstance(id.clone()));
        }
        preds.insert(id, sense);
    }
    let (mut correct, mut wrong, mut missing) = (0, 0, 0);
    for g in gold {
        match preds.get(g.id.as_str()) {
            Some(p) if g.senses.iter().any(|s| s == p) => correct += 1,
            Some(_) => wrong += 1,
            None if lenient => missing += 1,
            None => return Err(EvalError::MissingPrediction(g.id.clone())),
        }
    }
    Ok(WsdScore {
        prf: PRF::from_counts(correct, wrong, wrong + missing),
        missing,
        empty: gold.is_empty(),
    })
}

/// Reads `instance_id sense [sense ...]` lines; blank lines are skipped.
pub fn read_key_file<R: BufRead>(reader: R) -> Result<Vec<WsdGold>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let mut fields = line.split_whitespace();
        let Some(id) = fields.next() else { continue };
        let senses: Vec<String> = fields.map(str::to_string).collect();
        if senses.is_empty() {
            return Err(EvalError::MalformedKey {
                line: i + 1,
                reason: format!("instance {id} has no sense"),
            });
        }
        out.push(WsdGold {
            id: id.to_string(),
            senses,
        });
    }
    Ok(out)
}

/// Predictions in key-file form, one sense per instance.
pub fn read_predictions<R: BufRead>(reader: R) -> Result<Vec<(String, String)>, EvalError> {
    read_key_file(reader)?
        .into_iter()
        .enumerate()
        .map(|(i, g)| match <[String; 1]>::try_from(g.senses) {
            Ok([s]) => Ok((g.id, s)),
            Err(_) => Err(EvalError::MalformedKey {
                line: i + 1,
                reason: format!("instance {} has more than one predicted sense", g.id),
            }),
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub metric: String,
    #[serde(flatten)]
    pub prf: PRF,
}

impl Report {
    pub fn new(metric: &str, prf: PRF) -> Self {
        Report {
            metric: metric.to_string(),
            prf,
        }
    }
}
