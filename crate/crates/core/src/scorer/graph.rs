//! Forward and backward passes for one sentence's worth of labeled targets.
//! The context is encoded once per sentence; each target encodes its
//! candidate glosses and goes through the architecture's scoring head.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use super::encoder::{encoder_backward, encoder_forward, EncoderPass};
use super::grad::Gradients;
use super::ops::{dot, log_sum_exp, softmax};
use super::poly::{
    code_attention_backward, distinct_codes_query, gloss_attention_backward, poly_code_context_attention,
    poly_gloss_attention, poly_position_attention, target_masks, CodeAttention, GlossAttention,
};
use super::weights::ScorerWeights;
use super::{Architecture, ScorerError};

/// One scoring target inside a sentence, with its label.
#[derive(Clone, Debug)]
pub struct TargetInput<'a> {
    pub indices: &'a [usize],
    /// hashed gloss ids, one list per candidate sense
    pub glosses: &'a [Vec<usize>],
    pub is_mwe: bool,
    /// index into senses, or `glosses.len()` for the not-an-MWE label
    pub gold: usize,
}

pub(crate) enum HeadCache {
    Bi {
        r_w: Array1<f64>,
    },
    Poly {
        attention: CodeAttention,
        per_label: Vec<GlossAttention>,
        target: Vec<bool>,
    },
}

fn check_indices(indices: &[usize], n: usize) -> Result<(), ScorerError> {
    if indices.is_empty() {
        return Err(ScorerError::EmptyTarget);
    }
    match indices.iter().find(|&&i| i >= n) {
        Some(&i) => Err(ScorerError::IndexOutOfRange { index: i, len: n }),
        None => Ok(()),
    }
}

fn code_sets(weights: &ScorerWeights, is_mwe: bool) -> (&Array2<f64>, &Array2<f64>) {
    if is_mwe {
        (&weights.codes_mwe_target, &weights.codes_mwe_nontarget)
    } else {
        (&weights.codes_word_target, &weights.codes_word_nontarget)
    }
}

/// Scores every label (senses, then r_n when `is_mwe`).
pub(crate) fn head_forward(
    weights: &ScorerWeights,
    arch: Architecture,
    ctx: ArrayView2<'_, f64>,
    indices: &[usize],
    senses: &[ArrayView1<'_, f64>],
    is_mwe: bool,
) -> Result<(Vec<f64>, HeadCache), ScorerError> {
    check_indices(indices, ctx.nrows())?;
    let mut labels: Vec<ArrayView1<'_, f64>> = senses.to_vec();
    if is_mwe {
        labels.push(weights.not_mwe.view());
    }
    match arch {
        Architecture::BiEncoder => {
            let mut r_w = Array1::zeros(ctx.ncols());
            for &i in indices {
                r_w += &ctx.row(i);
            }
            r_w /= indices.len() as f64;
            let logits = labels.iter().map(|v| dot(r_w.view(), *v)).collect();
            Ok((logits, HeadCache::Bi { r_w }))
        }
        Architecture::PolyEncoder | Architecture::PolyDistinct => {
            let n = ctx.nrows();
            let (attention, target) = if arch == Architecture::PolyEncoder {
                let codes = if is_mwe {
                    &weights.codes_mwe
                } else {
                    &weights.codes_word
                };
                (poly_code_context_attention(codes.view(), ctx), vec![false; n])
            } else {
                let (t, nt) = target_masks(indices, n);
                let (qt, qnt) = code_sets(weights, is_mwe);
                let queries = distinct_codes_query(&t, &nt, qt.view(), qnt.view())?;
                let target = t.iter().map(|&x| x == 1.0).collect();
                (poly_position_attention(&queries, ctx), target)
            };
            let per_label: Vec<GlossAttention> = labels
                .iter()
                .map(|v| poly_gloss_attention(attention.attended.view(), *v))
                .collect();
            let logits = per_label.iter().map(|g| g.score).collect();
            Ok((
                logits,
                HeadCache::Poly {
                    attention,
                    per_label,
                    target,
                },
            ))
        }
    }
}

/// Backward through the head. Adds context gradients into `d_ctx` and
/// parameter gradients into `grads`; returns gradients for each sense vector.
#[allow(clippy::too_many_arguments)]
fn head_backward(
    weights: &ScorerWeights,
    arch: Architecture,
    ctx: ArrayView2<'_, f64>,
    indices: &[usize],
    senses: &[ArrayView1<'_, f64>],
    is_mwe: bool,
    cache: &HeadCache,
    d_logits: &[f64],
    d_ctx: &mut Array2<f64>,
    grads: &mut Gradients,
) -> Vec<Array1<f64>> {
    let k = senses.len();
    match cache {
        HeadCache::Bi { r_w } => {
            let mut d_rw = Array1::zeros(r_w.len());
            let mut d_senses = Vec::with_capacity(k);
            for (i, s) in senses.iter().enumerate() {
                d_rw.scaled_add(d_logits[i], s);
                d_senses.push(r_w * d_logits[i]);
            }
            if is_mwe {
                d_rw.scaled_add(d_logits[k], &weights.not_mwe);
                grads.not_mwe.scaled_add(d_logits[k], r_w);
            }
            let share = 1.0 / indices.len() as f64;
            for &i in indices {
                d_ctx.row_mut(i).scaled_add(share, &d_rw);
            }
            d_senses
        }
        HeadCache::Poly {
            attention,
            per_label,
            target,
        } => {
            let attended = attention.attended.view();
            let mut d_att = Array2::zeros(attention.attended.raw_dim());
            let mut d_senses = Vec::with_capacity(k);
            for (i, s) in senses.iter().enumerate() {
                d_senses.push(gloss_attention_backward(
                    attended,
                    *s,
                    &per_label[i],
                    d_logits[i],
                    &mut d_att,
                ));
            }
            if is_mwe {
                let d_rn =
                    gloss_attention_backward(attended, weights.not_mwe.view(), &per_label[k], d_logits[k], &mut d_att);
                grads.not_mwe += &d_rn;
            }
            if arch == Architecture::PolyEncoder {
                let codes = if is_mwe {
                    &weights.codes_mwe
                } else {
                    &weights.codes_word
                };
                let g_codes = if is_mwe {
                    &mut grads.codes_mwe
                } else {
                    &mut grads.codes_word
                };
                code_attention_backward(
                    ctx,
                    attention,
                    &d_att,
                    |i, _| codes.row(i),
                    |i, _, c, g| g_codes.row_mut(i).scaled_add(g, &c),
                    d_ctx,
                );
            } else {
                let (qt, qnt) = code_sets(weights, is_mwe);
                let (g_t, g_nt) = if is_mwe {
                    (&mut grads.codes_mwe_target, &mut grads.codes_mwe_nontarget)
                } else {
                    (&mut grads.codes_word_target, &mut grads.codes_word_nontarget)
                };
                code_attention_backward(
                    ctx,
                    attention,
                    &d_att,
                    |i, j| if target[j] { qt.row(i) } else { qnt.row(i) },
                    |i, j, c, g| {
                        let dest = if target[j] { &mut *g_t } else { &mut *g_nt };
                        dest.row_mut(i).scaled_add(g, &c);
                    },
                    d_ctx,
                );
            }
            d_senses
        }
    }
}

/// Cross-entropy of one target given its label logits.
pub(crate) fn label_loss(logits: &[f64], gold: usize) -> f64 {
    log_sum_exp(logits) - logits[gold]
}

/// Label logits for every target in one sentence, sharing one context pass.
/// `gold` is ignored.
pub fn sentence_logits(
    weights: &ScorerWeights,
    arch: Architecture,
    ctx_ids: &[usize],
    targets: &[TargetInput<'_>],
) -> Result<Vec<Vec<f64>>, ScorerError> {
    if ctx_ids.len() > weights.dims.max_len {
        return Err(ScorerError::SentenceTooLong {
            len: ctx_ids.len(),
            max: weights.dims.max_len,
        });
    }
    let ctx = encoder_forward(weights, &weights.context_attention, ctx_ids);
    targets
        .iter()
        .map(|t| {
            if t.glosses.is_empty() {
                return Err(ScorerError::EmptySenses);
            }
            let passes: Vec<EncoderPass> = t
                .glosses
                .iter()
                .map(|ids| encoder_forward(weights, &weights.gloss_attention, ids))
                .collect();
            let senses: Vec<ArrayView1<'_, f64>> = passes.iter().map(|p| p.out.row(0)).collect();
            Ok(head_forward(weights, arch, ctx.out.view(), t.indices, &senses, t.is_mwe)?.0)
        })
        .collect()
}

/// Sum of losses over `targets` in one sentence; accumulates gradients when
/// `grads` is given.
pub fn sentence_loss(
    weights: &ScorerWeights,
    arch: Architecture,
    ctx_ids: &[usize],
    targets: &[TargetInput<'_>],
    mut grads: Option<&mut Gradients>,
) -> Result<f64, ScorerError> {
    if ctx_ids.len() > weights.dims.max_len {
        return Err(ScorerError::SentenceTooLong {
            len: ctx_ids.len(),
            max: weights.dims.max_len,
        });
    }
    let ctx = encoder_forward(weights, &weights.context_attention, ctx_ids);
    let mut d_ctx = Array2::zeros(ctx.out.raw_dim());
    let mut total = 0.0;
    for t in targets {
        if t.glosses.is_empty() {
            return Err(ScorerError::EmptySenses);
        }
        let n_labels = t.glosses.len() + usize::from(t.is_mwe);
        if t.gold >= n_labels {
            return Err(ScorerError::GoldOutOfRange {
                gold: t.gold,
                labels: n_labels,
            });
        }
        let passes: Vec<EncoderPass> = t
            .glosses
            .iter()
            .map(|ids| encoder_forward(weights, &weights.gloss_attention, ids))
            .collect();
        let senses: Vec<ArrayView1<'_, f64>> = passes.iter().map(|p| p.out.row(0)).collect();
        let (logits, cache) = head_forward(weights, arch, ctx.out.view(), t.indices, &senses, t.is_mwe)?;
        total += label_loss(&logits, t.gold);

        if let Some(g) = grads.as_deref_mut() {
            let mut d_logits = softmax(&logits);
            d_logits[t.gold] -= 1.0;
            let d_senses = head_backward(
                weights,
                arch,
                ctx.out.view(),
                t.indices,
                &senses,
                t.is_mwe,
                &cache,
                &d_logits,
                &mut d_ctx,
                g,
            );
            for (pass, d_s) in passes.iter().zip(d_senses) {
                let mut d_out = Array2::zeros(pass.out.raw_dim());
                d_out.row_mut(0).assign(&d_s);
                encoder_backward(
                    &weights.gloss_attention,
                    pass,
                    &d_out,
                    &mut g.token_embeddings,
                    &mut g.position_embeddings,
                    &mut g.gloss_attention,
                );
            }
        }
    }
    if let Some(g) = grads {
        encoder_backward(
            &weights.context_attention,
            &ctx,
            &d_ctx,
            &mut g.token_embeddings,
            &mut g.position_embeddings,
            &mut g.context_attention,
        );
    }
    Ok(total)
}
