use std::path::PathBuf;

use anyhow::Result;
use glossmwe::corpus::Format;
use glossmwe::pipeline::{attach_stranded_constituents, export_candidates, mark_semcor_mwes};
use serde_json::json;

use crate::config::{FileConfig, PipelineArgs};
use crate::manifest::RunManifest;
use crate::InputError;

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub format: Option<Format>,
    #[arg(long)]
    pub lexicon: PathBuf,
    /// Candidate records (JSON lines). Set `gold` on each and pass the file
    /// to `preprocess --manual`.
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

pub fn run(args: Args) -> Result<()> {
    let file = FileConfig::load(args.pipeline.config.as_deref())?;
    let config = args.pipeline.resolve(&file)?;
    config.validate(false).map_err(|e| InputError(e.to_string()))?;
    let format = super::corpus_format(&args.input, args.format)?;
    let lexicon = super::lexicon(&args.lexicon)?;
    let sentences = super::corpus(&args.input, format)?;

    let mut manifest = RunManifest::new(
        "export-candidates",
        json!({ "pipeline": config, "format": format }),
        None,
    )?
    .input("lexicon", &args.lexicon)?
    .input("corpus", &args.input)?;
    if let Some(c) = &args.pipeline.config {
        manifest = manifest.input("config", c)?;
    }
    manifest.output(&args.output).write_beside(&args.output)?;

    let (mut annotated, _) = mark_semcor_mwes(sentences);
    for a in &mut annotated {
        attach_stranded_constituents(a, &lexicon);
    }
    let records = export_candidates(&annotated, &lexicon, &config);
    super::write_jsonl(&args.output, &records)?;
    log::info!("{} candidates exported", records.len());
    Ok(())
}
