pub mod eval;
pub mod export;
pub mod extract;
pub mod preprocess;
pub mod train;
pub mod wsd;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use glossmwe::corpus::{read_corpus, Format};
use glossmwe::pipeline::{read_annotated, AnnotatedSentence};
use glossmwe::scorer::{manifest_path, Model, PrecomputedScorer, Scorer};
use glossmwe::{load_lexicon, Lexicon, Sentence};

use crate::manifest::RunManifest;

pub fn corpus_format(path: &Path, explicit: Option<Format>) -> Result<Format> {
    match explicit {
        Some(f) => Ok(f),
        None => Ok(Format::from_path(path).context("pass --format to name the corpus format")?),
    }
}

pub fn lexicon(path: &Path) -> Result<Lexicon> {
    let lexicon = load_lexicon(path).with_context(|| format!("loading lexicon {}", path.display()))?;
    log::info!("{} lexicon entries", lexicon.len());
    Ok(lexicon)
}

pub fn corpus(path: &Path, format: Format) -> Result<Vec<Sentence>> {
    let sentences = read_corpus(path, format).with_context(|| format!("reading {}", path.display()))?;
    log::info!("{} sentences from {}", sentences.len(), path.display());
    Ok(sentences)
}

pub fn annotated(path: &Path) -> Result<Vec<AnnotatedSentence>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_annotated(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

/// `.json` files hold precomputed vectors; anything else is a checkpoint.
pub fn scorer(path: &Path) -> Result<Box<dyn Scorer>> {
    let what = || format!("loading weights {}", path.display());
    if path.extension().is_some_and(|e| e == "json") {
        Ok(Box::new(PrecomputedScorer::load(path).with_context(what)?))
    } else {
        Ok(Box::new(Model::load(path).with_context(what)?))
    }
}

/// Records the weights and, for checkpoints, their tensor manifest.
pub fn record_weights(manifest: RunManifest, path: &Path) -> Result<RunManifest> {
    let manifest = manifest.input("weights", path)?;
    let sidecar = manifest_path(path);
    if path.extension().is_some_and(|e| e == "json") || !sidecar.exists() {
        return Ok(manifest);
    }
    manifest.input("weights-manifest", &sidecar)
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

pub fn write_jsonl<T: serde::Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut out = create(path)?;
    for row in rows {
        serde_json::to_writer(&mut out, row)?;
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}
