//! Cross-entropy training of the scorer with plain SGD.

mod batch;
mod finetune;

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use batch::{build_batches, Batch};
pub use finetune::build_finetune_set;

use crate::corpus::Sentence;
use crate::lexicon::{Lexicon, Sense};
use crate::par::{self, Execution};
use crate::pipeline::{AnnotatedSentence, PipelineError};
use crate::scorer::{
    context_ids, gloss_ids, log_sum_exp, sentence_logits, sentence_loss, Architecture, Dims, Gradients, Model,
    ScorerError, ScorerWeights, SenseChoice, SenseScores, TargetInput,
};

#[derive(Debug, Error)]
pub enum TrainingError {
    #[error("gold label {gold} is not among the candidate labels")]
    GoldNotInLabelSpace { gold: String },
    #[error("batch has no examples")]
    EmptyBatch,
    #[error("loss became {loss} in epoch {epoch}, batch {batch}")]
    DivergedLoss {
        epoch: usize,
        batch: usize,
        loss: f64,
        dump: Option<PathBuf>,
    },
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Scorer(#[from] ScorerError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

/// One scoring target with its candidate senses and label.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingExample {
    /// Index into the owning [`TrainingData::sentences`].
    pub sentence: usize,
    pub target_indices: Vec<usize>,
    pub senses: Vec<Sense>,
    pub gold: SenseChoice,
    pub is_mwe: bool,
}

impl TrainingExample {
    /// Position of the gold label: a sense rank, or `senses.len()` for
    /// not-an-MWE.
    pub fn gold_label(&self) -> Result<usize, TrainingError> {
        match &self.gold {
            SenseChoice::Sense(id) => self
                .senses
                .iter()
                .position(|s| s.id == *id)
                .ok_or_else(|| TrainingError::GoldNotInLabelSpace { gold: id.clone() }),
            SenseChoice::NotMwe if self.is_mwe => Ok(self.senses.len()),
            SenseChoice::NotMwe => Err(TrainingError::GoldNotInLabelSpace {
                gold: self.gold.to_string(),
            }),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainingData {
    pub sentences: Vec<Sentence>,
    pub examples: Vec<TrainingExample>,
}

/// Counts of targets that could not become examples.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ExampleReport {
    pub examples: usize,
    pub missing_entry: usize,
    pub gold_not_in_senses: usize,
}

impl TrainingData {
    /// Examples from processed targets; candidate senses come from the
    /// lexicon entry for the target's key and POS.
    pub fn from_annotated(annotated: &[AnnotatedSentence], lexicon: &Lexicon) -> (TrainingData, ExampleReport) {
        let mut data = TrainingData::default();
        let mut report = ExampleReport::default();
        for (si, a) in annotated.iter().enumerate() {
            data.sentences.push(a.sentence.clone());
            for t in &a.targets {
                let Some(entry) = lexicon.lookup(&t.key, t.pos) else {
                    report.missing_entry += 1;
                    continue;
                };
                let ex = TrainingExample {
                    sentence: si,
                    target_indices: t.indices.clone(),
                    senses: entry.senses.clone(),
                    gold: t.gold.clone(),
                    is_mwe: t.is_mwe,
                };
                if ex.gold_label().is_err() {
                    report.gold_not_in_senses += 1;
                    continue;
                }
                data.examples.push(ex);
            }
        }
        report.examples = data.examples.len();
        (data, report)
    }

    /// Moves a seeded `fraction` of the sentences into a dev set.
    pub fn split_dev(self, fraction: f64, seed: u64) -> (TrainingData, TrainingData) {
        let n = self.sentences.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_dev = if n >= 2 {
            ((n as f64 * fraction).round() as usize).clamp(usize::from(fraction > 0.0), n - 1)
        } else {
            0
        };
        let mut is_dev = vec![false; n];
        for &i in &order[..n_dev] {
            is_dev[i] = true;
        }
        let mut remap = vec![0; n];
        let (mut train, mut dev) = (TrainingData::default(), TrainingData::default());
        for (i, s) in self.sentences.into_iter().enumerate() {
            let part = if is_dev[i] { &mut dev } else { &mut train };
            remap[i] = part.sentences.len();
            part.sentences.push(s);
        }
        for mut e in self.examples {
            let part = if is_dev[e.sentence] { &mut dev } else { &mut train };
            e.sentence = remap[e.sentence];
            part.examples.push(e);
        }
        (train, dev)
    }
}

/// Cross-entropy of `example`'s gold label under `scores`.
pub fn loss(scores: &SenseScores, example: &TrainingExample) -> Result<f64, TrainingError> {
    let gold = match &example.gold {
        SenseChoice::Sense(id) => scores.per_sense.iter().position(|(s, _)| s == id),
        SenseChoice::NotMwe => scores.not_mwe.map(|_| scores.per_sense.len()),
    }
    .ok_or_else(|| TrainingError::GoldNotInLabelSpace {
        gold: example.gold.to_string(),
    })?;
    let logits = scores.logits();
    Ok(log_sum_exp(&logits) - logits[gold])
}

struct Prepared<'e> {
    ctx: Vec<usize>,
    glosses: Vec<Vec<Vec<usize>>>,
    examples: Vec<&'e TrainingExample>,
    gold: Vec<usize>,
}

fn prepare<'e>(
    data: &TrainingData,
    ids: impl Iterator<Item = usize>,
    examples: &'e [TrainingExample],
    dims: Dims,
) -> Result<Vec<Prepared<'e>>, TrainingError> {
    let mut by_sentence: BTreeMap<usize, Vec<&'e TrainingExample>> = BTreeMap::new();
    for id in ids {
        let e = &examples[id];
        by_sentence.entry(e.sentence).or_default().push(e);
    }
    by_sentence
        .into_iter()
        .map(|(s, exs)| {
            let ctx = context_ids(&data.sentences[s], dims)?;
            let mut glosses = Vec::with_capacity(exs.len());
            let mut gold = Vec::with_capacity(exs.len());
            for e in &exs {
                glosses.push(
                    e.senses
                        .iter()
                        .map(|sense| gloss_ids(&sense.gloss, dims))
                        .collect::<Result<Vec<_>, _>>()?,
                );
                gold.push(e.gold_label()?);
            }
            Ok(Prepared {
                ctx,
                glosses,
                examples: exs,
                gold,
            })
        })
        .collect()
}

fn targets<'p>(p: &'p Prepared<'_>) -> Vec<TargetInput<'p>> {
    p.examples
        .iter()
        .zip(&p.glosses)
        .zip(&p.gold)
        .map(|((e, g), &gold)| TargetInput {
            indices: &e.target_indices,
            glosses: g,
            is_mwe: e.is_mwe,
            gold,
        })
        .collect()
}

/// Mean loss and mean gradient over the batch's active examples. An
/// all-masked batch gives zero loss and a zero gradient.
pub fn loss_gradient(
    model: &Model,
    data: &TrainingData,
    batch: &Batch,
    exec: Execution,
) -> Result<(f64, Gradients), TrainingError> {
    if batch.examples.is_empty() {
        return Err(TrainingError::EmptyBatch);
    }
    let dims = model.weights.dims;
    let active = batch.active_count();
    if active == 0 {
        return Ok((0.0, Gradients::zeros(dims)));
    }
    let prepared = prepare(data, batch.active(), &data.examples, dims)?;
    let (total, mut grads) = par::map_reduce(
        exec,
        &prepared,
        || Ok((0.0, Gradients::zeros(dims))),
        |p| {
            let mut g = Gradients::zeros(dims);
            let l = sentence_loss(&model.weights, model.architecture, &p.ctx, &targets(p), Some(&mut g))?;
            Ok((l, g))
        },
        |a: Result<(f64, Gradients), TrainingError>, b| {
            let (la, ga) = a?;
            let (lb, gb) = b?;
            Ok((la + lb, ga.merge(&gb)))
        },
    )?;
    let scale = 1.0 / active as f64;
    grads.scale(scale);
    Ok((total * scale, grads))
}

/// Mean loss over every example, without gradients.
pub fn mean_loss(model: &Model, data: &TrainingData, exec: Execution) -> Result<f64, TrainingError> {
    if data.examples.is_empty() {
        return Ok(0.0);
    }
    let prepared = prepare(data, 0..data.examples.len(), &data.examples, model.weights.dims)?;
    let total = par::map_reduce(
        exec,
        &prepared,
        || Ok(0.0),
        |p| {
            Ok(sentence_loss(
                &model.weights,
                model.architecture,
                &p.ctx,
                &targets(p),
                None,
            )?)
        },
        |a: Result<f64, TrainingError>, b| Ok(a? + b?),
    )?;
    Ok(total / data.examples.len() as f64)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DevMetrics {
    pub loss: f64,
    /// Sense accuracy over examples whose gold is a sense; the not-an-MWE
    /// label is not a candidate here.
    pub wsd_accuracy: f64,
    /// Binary keep/drop accuracy of the filter over MWE examples.
    pub filter_accuracy: f64,
    /// F1 of the filter with kept MWEs as the positive class.
    pub filter_f1: f64,
    pub wsd_examples: usize,
    pub mwe_examples: usize,
}

/// Scores every example and summarizes filter and sense decisions.
pub fn evaluate(model: &Model, data: &TrainingData, exec: Execution) -> Result<DevMetrics, TrainingError> {
    let prepared = prepare(data, 0..data.examples.len(), &data.examples, model.weights.dims)?;
    let per_sentence = par::map(exec, &prepared, |p| {
        sentence_logits(&model.weights, model.architecture, &p.ctx, &targets(p))
    });
    let mut m = DevMetrics::default();
    let (mut loss, mut n) = (0.0, 0usize);
    let (mut wsd_ok, mut filt_ok) = (0usize, 0usize);
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (p, logits) in prepared.iter().zip(per_sentence) {
        for ((e, gold), l) in p.examples.iter().zip(&p.gold).zip(logits?) {
            n += 1;
            loss += log_sum_exp(&l) - l[*gold];
            let k = e.senses.len();
            let mut best = 0;
            for i in 1..k {
                if l[i] > l[best] {
                    best = i;
                }
            }
            let is_positive = !e.gold.is_not_mwe();
            if is_positive {
                m.wsd_examples += 1;
                wsd_ok += usize::from(best == *gold);
            }
            if e.is_mwe {
                m.mwe_examples += 1;
                let kept = l[best] > l[k];
                filt_ok += usize::from(kept == is_positive);
                match (kept, is_positive) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, true) => fn_ += 1,
                    (false, false) => {}
                }
            }
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    m.loss = if n == 0 { 0.0 } else { loss / n as f64 };
    m.wsd_accuracy = ratio(wsd_ok, m.wsd_examples);
    m.filter_accuracy = ratio(filt_ok, m.mwe_examples);
    m.filter_f1 = ratio(2 * tp, 2 * tp + fp + fn_);
    Ok(m)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionMetric {
    #[default]
    WsdAccuracy,
    /// Filter F1 on dev MWE examples; used when fine-tuning.
    MweF1,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Share of training sentences held out when no dev set is given.
    pub dev_fraction: f64,
    pub negative_ratio: f64,
    pub architecture: Architecture,
    pub dims: Dims,
    pub selection: SelectionMetric,
    pub execution: Execution,
    /// Where to write the weights if the loss diverges.
    pub dump_dir: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 15,
            learning_rate: 0.05,
            batch_size: 32,
            seed: 0,
            dev_fraction: 0.1,
            negative_ratio: 0.5,
            architecture: Architecture::BiEncoder,
            dims: Dims::default(),
            selection: SelectionMetric::WsdAccuracy,
            execution: Execution::Parallel,
            dump_dir: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainingError> {
        let bad = |m: &str| Err(TrainingError::Config(m.into()));
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be finite and non-negative");
        }
        if !(0.0..1.0).contains(&self.dev_fraction) {
            return bad("dev_fraction must lie in [0, 1)");
        }
        if !(self.negative_ratio > 0.0 && self.negative_ratio < 1.0) {
            return bad("negative_ratio must lie in (0, 1)");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev: DevMetrics,
    pub selected: bool,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Weights from the best dev epoch.
    pub model: Model,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    /// Sentence ids moved to dev when no dev set was supplied.
    pub auto_dev: Option<Vec<String>>,
}

fn selection_value(m: &DevMetrics, metric: SelectionMetric) -> f64 {
    match metric {
        SelectionMetric::WsdAccuracy => m.wsd_accuracy,
        SelectionMetric::MweF1 => m.filter_f1,
    }
}

/// SGD over seeded batches for `config.epochs` epochs, evaluating on dev
/// after each epoch and keeping the best weights. Ties on the selection
/// metric go to the lower dev loss.
pub fn train(
    model: Model,
    data: TrainingData,
    dev: Option<TrainingData>,
    config: &TrainConfig,
) -> Result<TrainOutcome, TrainingError> {
    config.validate()?;
    let (train_data, dev_data, auto_dev) = match dev {
        Some(d) => (data, d, None),
        None => {
            let (t, d) = data.split_dev(config.dev_fraction, config.seed);
            let ids = d.sentences.iter().map(|s| s.sent_id.clone()).collect();
            log::info!("held out {} sentences as dev", d.sentences.len());
            (t, d, Some(ids))
        }
    };
    if train_data.examples.is_empty() {
        return Err(TrainingError::Config("no training examples".into()));
    }
    let mut model = model;
    let mut best: Option<(f64, f64, usize, ScorerWeights)> = None;
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        let batches = build_batches(
            &train_data.examples,
            config.batch_size,
            config.seed.wrapping_add(epoch as u64),
        );
        let (mut sum, mut count) = (0.0, 0usize);
        for (bi, batch) in batches.iter().enumerate() {
            let (l, grads) = loss_gradient(&model, &train_data, batch, config.execution)?;
            if !l.is_finite() || !grads.max_abs().is_finite() {
                let dump = match &config.dump_dir {
                    Some(dir) => {
                        let path = dir.join(format!("diverged-epoch{epoch}-batch{bi}.bin"));
                        model.save(&path)?;
                        Some(path)
                    }
                    None => None,
                };
                return Err(TrainingError::DivergedLoss {
                    epoch,
                    batch: bi,
                    loss: l,
                    dump,
                });
            }
            grads.apply_sgd(&mut model.weights, config.learning_rate);
            sum += l * batch.active_count() as f64;
            count += batch.active_count();
        }
        let metrics = evaluate(&model, &dev_data, config.execution)?;
        let value = selection_value(&metrics, config.selection);
        let selected = best
            .as_ref()
            .is_none_or(|(b, l, _, _)| value > *b || (value == *b && metrics.loss < *l));
        if selected {
            best = Some((value, metrics.loss, epoch, model.weights.clone()));
        }
        let record = EpochRecord {
            epoch,
            train_loss: sum / count.max(1) as f64,
            dev: metrics,
            selected,
        };
        log::info!(
            "epoch {epoch}: loss {:.4}, dev wsd {:.3}, dev filter acc {:.3}",
            record.train_loss,
            metrics.wsd_accuracy,
            metrics.filter_accuracy
        );
        history.push(record);
    }
    let best_epoch = match best {
        Some((_, _, epoch, weights)) => {
            model.weights = weights;
            epoch
        }
        None => 0,
    };
    Ok(TrainOutcome {
        model,
        history,
        best_epoch,
        auto_dev,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(per: &[f64], n: Option<f64>) -> SenseScores {
        SenseScores {
            per_sense: per.iter().enumerate().map(|(i, s)| (format!("s{i}"), *s)).collect(),
            not_mwe: n,
        }
    }

    fn example(gold: SenseChoice, is_mwe: bool, k: usize) -> TrainingExample {
        TrainingExample {
            sentence: 0,
            target_indices: vec![0],
            senses: (0..k)
                .map(|i| Sense {
                    id: format!("s{i}"),
                    gloss: "g".into(),
                    rank: i,
                })
                .collect(),
            gold,
            is_mwe,
        }
    }

    #[test]
    fn worked_example() {
        let l = loss(
            &scores(&[2.0, 0.0], None),
            &example(SenseChoice::Sense("s0".into()), false, 2),
        )
        .unwrap();
        assert!((l - 0.126928).abs() < 1e-6);
    }

    #[test]
    fn two_equal_labels() {
        let l = loss(&scores(&[0.0], Some(0.0)), &example(SenseChoice::NotMwe, true, 1)).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn label_space_checked() {
        let e = example(SenseChoice::NotMwe, false, 1);
        assert!(matches!(e.gold_label(), Err(TrainingError::GoldNotInLabelSpace { .. })));
        let e = example(SenseChoice::Sense("nope".into()), false, 1);
        assert!(loss(&scores(&[1.0], None), &e).is_err());
        let e = example(SenseChoice::NotMwe, true, 1);
        assert!(loss(&scores(&[1.0], None), &e).is_err());
    }

    #[test]
    fn dev_split_is_seeded_and_complete() {
        let mut data = TrainingData::default();
        for i in 0..20 {
            data.sentences
                .push(Sentence::from_lemmas(&format!("s{i}"), &["a", "b"]));
            data.examples.push(TrainingExample {
                sentence: i,
                ..example(SenseChoice::Sense("s0".into()), false, 1)
            });
        }
        let (t, d) = data.clone().split_dev(0.1, 4);
        assert_eq!(d.sentences.len(), 2);
        assert_eq!(t.examples.len() + d.examples.len(), 20);
        for part in [&t, &d] {
            for e in &part.examples {
                assert!(e.sentence < part.sentences.len());
            }
        }
        let (t2, _) = data.split_dev(0.1, 4);
        assert_eq!(t, t2);
    }
}
