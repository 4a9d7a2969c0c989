//! The toy transformer encoder used for both contexts and glosses: hashed
//! word embeddings plus learned positions, one softmax self-attention block
//! with a residual connection. Forward passes keep their intermediates so the
//! training code can backpropagate through them.

use std::collections::BTreeMap;

use ndarray::{s, Array1, Array2, Axis};

use super::ops::{softmax_backward, softmax_in_place};
use super::weights::{AttentionParams, Dims, ScorerWeights};
use super::ScorerError;
use crate::corpus::Sentence;

/// Reserved vocabulary id for the gloss [CLS] position.
pub const CLS_ID: usize = 0;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Stable bucket for a lowercased word in `1..vocab`.
pub fn hash_token(word: &str, vocab: usize) -> usize {
    1 + (fnv1a(word.to_lowercase().as_bytes()) % (vocab as u64 - 1)) as usize
}

pub fn context_ids(sentence: &Sentence, dims: Dims) -> Result<Vec<usize>, ScorerError> {
    if sentence.tokens.len() > dims.max_len {
        return Err(ScorerError::SentenceTooLong {
            len: sentence.tokens.len(),
            max: dims.max_len,
        });
    }
    Ok(sentence
        .tokens
        .iter()
        .map(|t| hash_token(&t.form, dims.vocab))
        .collect())
}

/// Words of a gloss: whitespace split, edge punctuation stripped, lowercased.
pub fn gloss_words(gloss: &str) -> Vec<String> {
    gloss
        .split_whitespace()
        .map(|w| w.trim_matches(|c: char| c.is_ascii_punctuation()).to_lowercase())
        .filter(|w| !w.is_empty())
        .collect()
}

/// `[CLS]` followed by the gloss words, truncated to `max_len` positions.
pub fn gloss_ids(gloss: &str, dims: Dims) -> Result<Vec<usize>, ScorerError> {
    if gloss.trim().is_empty() {
        return Err(ScorerError::EmptyGloss);
    }
    let mut ids = vec![CLS_ID];
    ids.extend(
        gloss_words(gloss)
            .iter()
            .take(dims.max_len - 1)
            .map(|w| hash_token(w, dims.vocab)),
    );
    Ok(ids)
}

/// Intermediates of one encoder pass over `ids`.
#[derive(Clone, Debug)]
pub(crate) struct EncoderPass {
    pub ids: Vec<usize>,
    pub x: Array2<f64>,
    pub q: Array2<f64>,
    pub k: Array2<f64>,
    pub v: Array2<f64>,
    pub attn: Array2<f64>,
    pub h: Array2<f64>,
    pub out: Array2<f64>,
}

pub(crate) fn encoder_forward(weights: &ScorerWeights, block: &AttentionParams, ids: &[usize]) -> EncoderPass {
    let n = ids.len();
    let d = weights.dims.d;
    let mut x = weights.token_embeddings.select(Axis(0), ids);
    x += &weights.position_embeddings.slice(s![..n, ..]);
    let q = x.dot(&block.query);
    let k = x.dot(&block.key);
    let v = x.dot(&block.value);
    let mut attn = q.dot(&k.t()) * (1.0 / (d as f64).sqrt());
    for row in attn.rows_mut() {
        softmax_in_place(row);
    }
    let h = attn.dot(&v);
    let out = &x + &h.dot(&block.output);
    EncoderPass {
        ids: ids.to_vec(),
        x,
        q,
        k,
        v,
        attn,
        h,
        out,
    }
}

/// Accumulates parameter gradients of one encoder pass given `d_out`.
pub(crate) fn encoder_backward(
    block: &AttentionParams,
    pass: &EncoderPass,
    d_out: &Array2<f64>,
    g_embeddings: &mut BTreeMap<usize, Array1<f64>>,
    g_positions: &mut Array2<f64>,
    g_block: &mut AttentionParams,
) {
    let n = pass.ids.len();
    if n == 0 {
        return;
    }
    let d = pass.x.ncols();
    let scale = 1.0 / (d as f64).sqrt();

    g_block.output += &pass.h.t().dot(d_out);
    let dh = d_out.dot(&block.output.t());
    let d_attn = dh.dot(&pass.v.t());
    let dv = pass.attn.t().dot(&dh);
    let mut ds = Array2::zeros((n, n));
    for i in 0..n {
        let row = softmax_backward(pass.attn.row(i), d_attn.row(i));
        ds.row_mut(i).assign(&(row * scale));
    }
    let dq = ds.dot(&pass.k);
    let dk = ds.t().dot(&pass.q);
    g_block.query += &pass.x.t().dot(&dq);
    g_block.key += &pass.x.t().dot(&dk);
    g_block.value += &pass.x.t().dot(&dv);

    let mut dx = d_out.clone();
    dx += &dq.dot(&block.query.t());
    dx += &dk.dot(&block.key.t());
    dx += &dv.dot(&block.value.t());

    for (j, &id) in pass.ids.iter().enumerate() {
        let row = dx.row(j);
        g_embeddings
            .entry(id)
            .and_modify(|g| *g += &row)
            .or_insert_with(|| row.to_owned());
        let mut p = g_positions.row_mut(j);
        p += &row;
    }
}

/// Per-token context representations t_0..t_n.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedContext {
    pub vectors: Array2<f64>,
}

impl EncodedContext {
    pub fn token_count(&self) -> usize {
        self.vectors.nrows()
    }
}

pub fn encode_context(weights: &ScorerWeights, sentence: &Sentence) -> Result<EncodedContext, ScorerError> {
    let ids = context_ids(sentence, weights.dims)?;
    Ok(EncodedContext {
        vectors: encoder_forward(weights, &weights.context_attention, &ids).out,
    })
}

/// Mean of the context rows at `indices`.
pub fn word_representation(ctx: &EncodedContext, indices: &[usize]) -> Result<Array1<f64>, ScorerError> {
    if indices.is_empty() {
        return Err(ScorerError::EmptyTarget);
    }
    let n = ctx.token_count();
    let mut acc = Array1::zeros(ctx.vectors.ncols());
    for &i in indices {
        if i >= n {
            return Err(ScorerError::IndexOutOfRange { index: i, len: n });
        }
        acc += &ctx.vectors.row(i);
    }
    Ok(acc / indices.len() as f64)
}

/// The [CLS] row of the gloss encoder's output.
pub fn gloss_representation(weights: &ScorerWeights, gloss: &str) -> Result<Array1<f64>, ScorerError> {
    let ids = gloss_ids(gloss, weights.dims)?;
    Ok(encoder_forward(weights, &weights.gloss_attention, &ids)
        .out
        .row(0)
        .to_owned())
}
