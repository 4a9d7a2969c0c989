use std::io::Write;
use std::path::PathBuf;

use anyhow::Result;
use glossmwe::corpus::{write_predictions, Format};
use glossmwe::pipeline::run_corpus;
use serde_json::json;

use crate::config::{ExecArgs, FileConfig, PipelineArgs};
use crate::manifest::RunManifest;
use crate::InputError;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Lexicon (JSON lines).
    #[arg(long)]
    pub lexicon: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    /// Prediction file; `<output>.manifest.json` is written beside it.
    #[arg(long)]
    pub output: PathBuf,
    /// cupt, dimsum or json. Guessed from the extension when omitted.
    #[arg(long)]
    pub format: Option<Format>,
    /// Defaults to the input format.
    #[arg(long)]
    pub output_format: Option<Format>,
    /// Checkpoint, or a `.json` file of precomputed vectors.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[command(flatten)]
    pub exec: ExecArgs,
}

pub fn run(args: Args) -> Result<()> {
    let file = FileConfig::load(args.pipeline.config.as_deref())?;
    let config = args.pipeline.resolve(&file)?;
    config
        .validate(args.weights.is_some())
        .map_err(|e| InputError(format!("{e}; pass --weights or drop --encoder-filter")))?;
    let in_format = super::corpus_format(&args.input, args.format)?;
    let out_format = args.output_format.unwrap_or(in_format);
    let exec = args.exec.execution();

    let lexicon = super::lexicon(&args.lexicon)?;
    let sentences = super::corpus(&args.input, in_format)?;
    let scorer = args.weights.as_deref().map(super::scorer).transpose()?;

    let snapshot = json!({
        "pipeline": config,
        "input_format": in_format,
        "output_format": out_format,
        "execution": exec,
    });
    let mut manifest = RunManifest::new("extract", snapshot, None)?
        .input("lexicon", &args.lexicon)?
        .input("corpus", &args.input)?;
    if let Some(w) = &args.weights {
        manifest = super::record_weights(manifest, w)?;
    }
    if let Some(c) = &args.pipeline.config {
        manifest = manifest.input("config", c)?;
    }
    manifest.output(&args.output).write_beside(&args.output)?;

    let predictions = run_corpus(&sentences, &lexicon, &config, scorer.as_deref(), exec)?;
    let mut out = super::create(&args.output)?;
    write_predictions(&mut out, &sentences, &predictions, out_format)?;
    out.flush()?;
    let total: usize = predictions.iter().map(Vec::len).sum();
    log::info!("{total} MWEs predicted in {} sentences", sentences.len());
    Ok(())
}
