//! Gradient container congruent to [`ScorerWeights`]. Token-embedding
//! gradients are kept sparse since a batch touches few vocabulary rows.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2};

use super::weights::{AttentionParams, Dims, ScorerWeights, TENSOR_ORDER};

#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub dims: Dims,
    pub token_embeddings: BTreeMap<usize, Array1<f64>>,
    pub position_embeddings: Array2<f64>,
    pub context_attention: AttentionParams,
    pub gloss_attention: AttentionParams,
    pub not_mwe: Array1<f64>,
    pub codes_word: Array2<f64>,
    pub codes_mwe: Array2<f64>,
    pub codes_word_target: Array2<f64>,
    pub codes_word_nontarget: Array2<f64>,
    pub codes_mwe_target: Array2<f64>,
    pub codes_mwe_nontarget: Array2<f64>,
}

fn add_params(a: &mut AttentionParams, b: &AttentionParams) {
    a.query += &b.query;
    a.key += &b.key;
    a.value += &b.value;
    a.output += &b.output;
}

fn scale_params(a: &mut AttentionParams, f: f64) {
    a.query *= f;
    a.key *= f;
    a.value *= f;
    a.output *= f;
}

impl Gradients {
    pub fn zeros(dims: Dims) -> Self {
        let Dims { d, m, max_len, .. } = dims;
        Gradients {
            dims,
            token_embeddings: BTreeMap::new(),
            position_embeddings: Array2::zeros((max_len, d)),
            context_attention: AttentionParams::zeros(d),
            gloss_attention: AttentionParams::zeros(d),
            not_mwe: Array1::zeros(d),
            codes_word: Array2::zeros((m, d)),
            codes_mwe: Array2::zeros((m, d)),
            codes_word_target: Array2::zeros((m, d)),
            codes_word_nontarget: Array2::zeros((m, d)),
            codes_mwe_target: Array2::zeros((m, d)),
            codes_mwe_nontarget: Array2::zeros((m, d)),
        }
    }

    /// Elementwise sum.
    pub fn merge(mut self, other: &Gradients) -> Self {
        for (id, row) in &other.token_embeddings {
            self.token_embeddings
                .entry(*id)
                .and_modify(|g| *g += row)
                .or_insert_with(|| row.clone());
        }
        self.position_embeddings += &other.position_embeddings;
        add_params(&mut self.context_attention, &other.context_attention);
        add_params(&mut self.gloss_attention, &other.gloss_attention);
        self.not_mwe += &other.not_mwe;
        self.codes_word += &other.codes_word;
        self.codes_mwe += &other.codes_mwe;
        self.codes_word_target += &other.codes_word_target;
        self.codes_word_nontarget += &other.codes_word_nontarget;
        self.codes_mwe_target += &other.codes_mwe_target;
        self.codes_mwe_nontarget += &other.codes_mwe_nontarget;
        self
    }

    pub fn scale(&mut self, f: f64) {
        for row in self.token_embeddings.values_mut() {
            *row *= f;
        }
        self.position_embeddings *= f;
        scale_params(&mut self.context_attention, f);
        scale_params(&mut self.gloss_attention, f);
        self.not_mwe *= f;
        for c in self.codes_mut() {
            *c *= f;
        }
    }

    fn codes_mut(&mut self) -> [&mut Array2<f64>; 6] {
        [
            &mut self.codes_word,
            &mut self.codes_mwe,
            &mut self.codes_word_target,
            &mut self.codes_word_nontarget,
            &mut self.codes_mwe_target,
            &mut self.codes_mwe_nontarget,
        ]
    }

    /// Dense flat gradient for a tensor named as in [`TENSOR_ORDER`].
    pub fn dense(&self, name: &str) -> Vec<f64> {
        let flat = |a: &Array2<f64>| a.iter().copied().collect::<Vec<_>>();
        match name {
            "token_embeddings" => {
                let d = self.dims.d;
                let mut out = vec![0.0; self.dims.vocab * d];
                for (id, row) in &self.token_embeddings {
                    out[id * d..(id + 1) * d]
                        .iter_mut()
                        .zip(row.iter())
                        .for_each(|(o, g)| *o = *g);
                }
                out
            }
            "position_embeddings" => flat(&self.position_embeddings),
            "context_attention.query" => flat(&self.context_attention.query),
            "context_attention.key" => flat(&self.context_attention.key),
            "context_attention.value" => flat(&self.context_attention.value),
            "context_attention.output" => flat(&self.context_attention.output),
            "gloss_attention.query" => flat(&self.gloss_attention.query),
            "gloss_attention.key" => flat(&self.gloss_attention.key),
            "gloss_attention.value" => flat(&self.gloss_attention.value),
            "gloss_attention.output" => flat(&self.gloss_attention.output),
            "not_mwe" => self.not_mwe.to_vec(),
            "codes_word" => flat(&self.codes_word),
            "codes_mwe" => flat(&self.codes_mwe),
            "codes_word_target" => flat(&self.codes_word_target),
            "codes_word_nontarget" => flat(&self.codes_word_nontarget),
            "codes_mwe_target" => flat(&self.codes_mwe_target),
            "codes_mwe_nontarget" => flat(&self.codes_mwe_nontarget),
            other => panic!("unknown tensor {other}"),
        }
    }

    pub fn max_abs(&self) -> f64 {
        let sparse = self.token_embeddings.values().flat_map(|r| r.iter());
        TENSOR_ORDER
            .iter()
            .filter(|n| **n != "token_embeddings")
            .flat_map(|n| self.dense(n))
            .chain(sparse.copied())
            .fold(0.0, |m: f64, x| {
                if m.is_nan() || x.is_nan() {
                    f64::NAN
                } else {
                    m.max(x.abs())
                }
            })
    }

    /// Plain SGD step: `w -= lr * g`.
    pub fn apply_sgd(&self, weights: &mut ScorerWeights, lr: f64) {
        for (id, row) in &self.token_embeddings {
            weights.token_embeddings.row_mut(*id).scaled_add(-lr, row);
        }
        weights.position_embeddings.scaled_add(-lr, &self.position_embeddings);
        for (w, g) in [
            (&mut weights.context_attention, &self.context_attention),
            (&mut weights.gloss_attention, &self.gloss_attention),
        ] {
            w.query.scaled_add(-lr, &g.query);
            w.key.scaled_add(-lr, &g.key);
            w.value.scaled_add(-lr, &g.value);
            w.output.scaled_add(-lr, &g.output);
        }
        weights.not_mwe.scaled_add(-lr, &self.not_mwe);
        weights.codes_word.scaled_add(-lr, &self.codes_word);
        weights.codes_mwe.scaled_add(-lr, &self.codes_mwe);
        weights.codes_word_target.scaled_add(-lr, &self.codes_word_target);
        weights.codes_word_nontarget.scaled_add(-lr, &self.codes_word_nontarget);
        weights.codes_mwe_target.scaled_add(-lr, &self.codes_mwe_target);
        weights.codes_mwe_nontarget.scaled_add(-lr, &self.codes_mwe_nontarget);
    }
}
