//! Trainable parameters and their checkpoint format.
//!
//! A checkpoint is two files. `<path>` holds the tensors:
//!
//! ```text
//! magic   8 bytes  "GMWEWTS1"
//! d, m, vocab, max_len   4 x u64 little-endian
//! tensors                f64 little-endian, row-major, in TENSOR_ORDER
//! ```
//!
//! `<path>.json` is a manifest naming the architecture and, for each
//! tensor, its shape and byte offset.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Architecture, ScorerError};

const MAGIC: &[u8; 8] = b"GMWEWTS1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    /// hidden size
    pub d: usize,
    /// code count
    pub m: usize,
    /// hashed vocabulary buckets, including the reserved [CLS] id 0
    pub vocab: usize,
    pub max_len: usize,
}

impl Default for Dims {
    fn default() -> Self {
        Dims {
            d: 64,
            m: 16,
            vocab: 16384,
            max_len: 128,
        }
    }
}

/// Query/key/value/output projections of one self-attention block, each d x d.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionParams {
    pub query: Array2<f64>,
    pub key: Array2<f64>,
    pub value: Array2<f64>,
    pub output: Array2<f64>,
}

impl AttentionParams {
    pub fn zeros(d: usize) -> Self {
        AttentionParams {
            query: Array2::zeros((d, d)),
            key: Array2::zeros((d, d)),
            value: Array2::zeros((d, d)),
            output: Array2::zeros((d, d)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScorerWeights {
    pub dims: Dims,
    pub token_embeddings: Array2<f64>,
    pub position_embeddings: Array2<f64>,
    pub context_attention: AttentionParams,
    pub gloss_attention: AttentionParams,
    /// r_n: the not-an-MWE sense vector
    pub not_mwe: Array1<f64>,
    pub codes_word: Array2<f64>,
    pub codes_mwe: Array2<f64>,
    pub codes_word_target: Array2<f64>,
    pub codes_word_nontarget: Array2<f64>,
    pub codes_mwe_target: Array2<f64>,
    pub codes_mwe_nontarget: Array2<f64>,
}

/// Order of tensors in checkpoints and in [`ScorerWeights::tensors`].
pub const TENSOR_ORDER: [&str; 17] = [
    "token_embeddings",
    "position_embeddings",
    "context_attention.query",
    "context_attention.key",
    "context_attention.value",
    "context_attention.output",
    "gloss_attention.query",
    "gloss_attention.key",
    "gloss_attention.value",
    "gloss_attention.output",
    "not_mwe",
    "codes_word",
    "codes_mwe",
    "codes_word_target",
    "codes_word_nontarget",
    "codes_mwe_target",
    "codes_mwe_nontarget",
];

fn flat_shaped(a: &Array2<f64>) -> (Vec<usize>, &[f64]) {
    (a.shape().to_vec(), a.as_slice().expect("standard layout"))
}

fn flat_mut(a: &mut Array2<f64>) -> &mut [f64] {
    a.as_slice_mut().expect("standard layout")
}

impl ScorerWeights {
    pub fn zeros(dims: Dims) -> Self {
        let Dims { d, m, vocab, max_len } = dims;
        ScorerWeights {
            dims,
            token_embeddings: Array2::zeros((vocab, d)),
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

    /// Gaussian initialisation with standard deviation 1/sqrt(d) for
    /// embeddings, codes and r_n, and a smaller scale for the attention
    /// projections so the untrained encoder stays close to its residual path.
    pub fn random(dims: Dims, seed: u64) -> Result<Self, ScorerError> {
        Self::check_dims(dims)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = Self::zeros(dims);
        let base = 1.0 / (dims.d as f64).sqrt();
        for (name, t) in w.tensors_mut() {
            let std = if name.contains("attention") { 0.5 * base } else { base };
            let normal = Normal::new(0.0, std).expect("positive std");
            for x in t.iter_mut() {
                *x = normal.sample(&mut rng);
            }
        }
        Ok(w)
    }

    fn check_dims(dims: Dims) -> Result<(), ScorerError> {
        if dims.d < 8 || dims.m < 1 || dims.vocab < 2 || dims.max_len < 2 {
            return Err(ScorerError::InvalidWeights(format!(
                "dimensions out of range: {dims:?} (need d >= 8, m >= 1, vocab >= 2, max_len >= 2)"
            )));
        }
        Ok(())
    }

    fn expected_shape(&self, name: &str) -> Vec<usize> {
        let Dims { d, m, vocab, max_len } = self.dims;
        match name {
            "token_embeddings" => vec![vocab, d],
            "position_embeddings" => vec![max_len, d],
            "not_mwe" => vec![d],
            n if n.starts_with("codes") => vec![m, d],
            _ => vec![d, d],
        }
    }

    pub fn validate(&self) -> Result<(), ScorerError> {
        Self::check_dims(self.dims)?;
        for (name, shape, data) in self.shaped_tensors() {
            if shape != self.expected_shape(name) {
                return Err(ScorerError::InvalidWeights(format!(
                    "{name} has shape {shape:?}, expected {:?}",
                    self.expected_shape(name)
                )));
            }
            if data.iter().any(|x| !x.is_finite()) {
                return Err(ScorerError::InvalidWeights(format!("{name} has non-finite values")));
            }
        }
        Ok(())
    }

    fn shaped_tensors(&self) -> Vec<(&'static str, Vec<usize>, &[f64])> {
        let ScorerWeights {
            dims: _,
            token_embeddings,
            position_embeddings,
            context_attention: c,
            gloss_attention: g,
            not_mwe,
            codes_word,
            codes_mwe,
            codes_word_target,
            codes_word_nontarget,
            codes_mwe_target,
            codes_mwe_nontarget,
        } = self;
        let matrices = [
            token_embeddings,
            position_embeddings,
            &c.query,
            &c.key,
            &c.value,
            &c.output,
            &g.query,
            &g.key,
            &g.value,
            &g.output,
        ];
        let codes = [
            codes_word,
            codes_mwe,
            codes_word_target,
            codes_word_nontarget,
            codes_mwe_target,
            codes_mwe_nontarget,
        ];
        let flat = flat_shaped;
        let mut out: Vec<(Vec<usize>, &[f64])> = matrices.into_iter().map(flat).collect();
        out.push((vec![not_mwe.len()], not_mwe.as_slice().expect("standard layout")));
        out.extend(codes.into_iter().map(flat));
        TENSOR_ORDER
            .iter()
            .zip(out)
            .map(|(name, (shape, data))| (*name, shape, data))
            .collect()
    }

    /// All tensors as flat slices, in [`TENSOR_ORDER`].
    pub fn tensors(&self) -> Vec<(&'static str, &[f64])> {
        self.shaped_tensors().into_iter().map(|(n, _, s)| (n, s)).collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        let ScorerWeights {
            dims: _,
            token_embeddings,
            position_embeddings,
            context_attention: c,
            gloss_attention: g,
            not_mwe,
            codes_word,
            codes_mwe,
            codes_word_target,
            codes_word_nontarget,
            codes_mwe_target,
            codes_mwe_nontarget,
        } = self;
        let flat = flat_mut;
        let mut out: Vec<&mut [f64]> = vec![
            flat(token_embeddings),
            flat(position_embeddings),
            flat(&mut c.query),
            flat(&mut c.key),
            flat(&mut c.value),
            flat(&mut c.output),
            flat(&mut g.query),
            flat(&mut g.key),
            flat(&mut g.value),
            flat(&mut g.output),
            not_mwe.as_slice_mut().expect("standard layout"),
        ];
        for a in [
            codes_word,
            codes_mwe,
            codes_word_target,
            codes_word_nontarget,
            codes_mwe_target,
            codes_mwe_nontarget,
        ] {
            out.push(flat(a));
        }
        TENSOR_ORDER.iter().copied().zip(out).collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }
}

#[derive(Serialize, Deserialize)]
struct TensorInfo {
    name: String,
    shape: Vec<usize>,
    offset: u64,
}

#[derive(Serialize, Deserialize)]
struct CheckpointManifest {
    format: String,
    version: u32,
    architecture: Architecture,
    dims: Dims,
    tensors: Vec<TensorInfo>,
}

pub fn manifest_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".json");
    PathBuf::from(p)
}

pub fn save_checkpoint(
    weights: &ScorerWeights,
    architecture: Architecture,
    path: impl AsRef<Path>,
) -> Result<(), ScorerError> {
    let path = path.as_ref();
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(MAGIC)?;
    let Dims { d, m, vocab, max_len } = weights.dims;
    for v in [d, m, vocab, max_len] {
        out.write_all(&(v as u64).to_le_bytes())?;
    }
    let mut offset = (MAGIC.len() + 4 * 8) as u64;
    let mut infos = Vec::new();
    for (name, shape, data) in weights.shaped_tensors() {
        infos.push(TensorInfo {
            name: name.to_string(),
            shape,
            offset,
        });
        for x in data {
            out.write_all(&x.to_le_bytes())?;
        }
        offset += 8 * data.len() as u64;
    }
    out.flush()?;
    let manifest = CheckpointManifest {
        format: "glossmwe-weights".into(),
        version: 1,
        architecture,
        dims: weights.dims,
        tensors: infos,
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| ScorerError::Checkpoint(e.to_string()))?;
    fs::write(manifest_path(path), json)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(ScorerWeights, Architecture), ScorerError> {
    let path = path.as_ref();
    let manifest: CheckpointManifest = serde_json::from_str(&fs::read_to_string(manifest_path(path))?)
        .map_err(|e| ScorerError::Checkpoint(format!("manifest: {e}")))?;
    let mut input = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(ScorerError::Checkpoint("bad magic".into()));
    }
    let mut header = [0usize; 4];
    for h in header.iter_mut() {
        let mut b = [0u8; 8];
        input.read_exact(&mut b)?;
        *h = u64::from_le_bytes(b) as usize;
    }
    let dims = Dims {
        d: header[0],
        m: header[1],
        vocab: header[2],
        max_len: header[3],
    };
    if dims != manifest.dims {
        return Err(ScorerError::Checkpoint("header and manifest dimensions differ".into()));
    }
    ScorerWeights::check_dims(dims)?;
    let mut weights = ScorerWeights::zeros(dims);
    for (_, t) in weights.tensors_mut() {
        let mut b = [0u8; 8];
        for x in t.iter_mut() {
            input.read_exact(&mut b)?;
            *x = f64::from_le_bytes(b);
        }
    }
    let mut rest = Vec::new();
    input.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(ScorerError::Checkpoint(format!("{} trailing bytes", rest.len())));
    }
    weights.validate()?;
    Ok((weights, manifest.architecture))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Dims {
        Dims {
            d: 8,
            m: 2,
            vocab: 16,
            max_len: 6,
        }
    }

    #[test]
    fn tensor_views_cover_all_parameters() {
        let mut w = ScorerWeights::random(small(), 3).unwrap();
        let expected = 16 * 8 + 6 * 8 + 8 * 64 + 8 + 6 * 16;
        assert_eq!(w.parameter_count(), expected);
        for (_, t) in w.tensors_mut() {
            t[0] = 42.0;
        }
        assert_eq!(w.not_mwe[0], 42.0);
        assert_eq!(w.codes_mwe_nontarget[[0, 0]], 42.0);
        assert_eq!(w.gloss_attention.output[[0, 0]], 42.0);
    }

    #[test]
    fn checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.bin");
        let w = ScorerWeights::random(small(), 9).unwrap();
        save_checkpoint(&w, Architecture::PolyDistinct, &path).unwrap();
        let (back, arch) = load_checkpoint(&path).unwrap();
        assert_eq!(back, w);
        assert_eq!(arch, Architecture::PolyDistinct);
        let size = std::fs::metadata(&path).unwrap().len();
        assert_eq!(size, 8 + 32 + 8 * w.parameter_count() as u64);
    }

    #[test]
    fn rejects_tiny_hidden_size() {
        let dims = Dims { d: 4, ..small() };
        assert!(ScorerWeights::random(dims, 0).is_err());
    }

    #[test]
    fn validate_catches_nan() {
        let mut w = ScorerWeights::random(small(), 1).unwrap();
        w.not_mwe[3] = f64::NAN;
        assert!(w.validate().is_err());
    }
}
