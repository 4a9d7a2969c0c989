use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::PathBuf;

use anyhow::{Context, Result};
use glossmwe::corpus::Format;
use glossmwe::pipeline::{preprocess, read_manual_annotations, write_annotated, PreprocessOptions, PreprocessReport};
use serde_json::json;

use crate::config::{FileConfig, PipelineArgs};
use crate::manifest::{sibling, RunManifest};
use crate::InputError;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Sense-annotated corpus (tokens carry gold senses).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub format: Option<Format>,
    #[arg(long)]
    pub lexicon: PathBuf,
    /// Processed corpus (JSON lines).
    #[arg(long)]
    pub output: PathBuf,
    /// Hand-labeled targets (JSON lines, as written by export-candidates).
    #[arg(long)]
    pub manual: Option<PathBuf>,
    /// Target share of negatives among MWE examples.
    #[arg(long, default_value_t = 0.5)]
    pub negative_ratio: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Stage counts as JSON. Defaults to `<output>.report.json`.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

fn print_table(report: &PreprocessReport) {
    println!("{:<12} {:>9} {:>9}", "stage", "pos_mwe", "neg_mwe");
    for s in &report.stages {
        println!("{:<12} {:>9} {:>9}", s.stage, s.pos_mwe, s.neg_mwe);
    }
}

pub fn run(args: Args) -> Result<()> {
    if !(args.negative_ratio > 0.0 && args.negative_ratio < 1.0) {
        return Err(InputError(format!("--negative-ratio {} is outside (0, 1)", args.negative_ratio)).into());
    }
    let file = FileConfig::load(args.pipeline.config.as_deref())?;
    let config = args.pipeline.resolve(&file)?;
    config.validate(false).map_err(|e| InputError(e.to_string()))?;
    let format = super::corpus_format(&args.input, args.format)?;
    let report_path = args
        .report
        .clone()
        .unwrap_or_else(|| sibling(&args.output, "report.json"));

    let lexicon = super::lexicon(&args.lexicon)?;
    let sentences = super::corpus(&args.input, format)?;
    let manual = match &args.manual {
        Some(p) => {
            let f = File::open(p).with_context(|| format!("opening {}", p.display()))?;
            read_manual_annotations(BufReader::new(f)).with_context(|| format!("reading {}", p.display()))?
        }
        None => Vec::new(),
    };

    let snapshot = json!({
        "pipeline": config,
        "format": format,
        "negative_ratio": args.negative_ratio,
    });
    let mut manifest = RunManifest::new("preprocess", snapshot, Some(args.seed))?
        .input("lexicon", &args.lexicon)?
        .input("corpus", &args.input)?;
    if let Some(p) = &args.manual {
        manifest = manifest.input("manual", p)?;
    }
    if let Some(c) = &args.pipeline.config {
        manifest = manifest.input("config", c)?;
    }
    manifest
        .output(&args.output)
        .output(&report_path)
        .write_beside(&args.output)?;

    let options = PreprocessOptions {
        config,
        negative_ratio: args.negative_ratio,
        seed: args.seed,
        manual,
    };
    let (annotated, report) = preprocess(sentences, &lexicon, &options)?;
    if report.insufficient_negatives {
        log::warn!(
            "only {} negatives available, {} requested",
            report.negatives_available,
            report.negatives_requested
        );
    }
    let mut out = super::create(&args.output)?;
    write_annotated(&mut out, &annotated)?;
    out.flush()?;
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    fs::write(&report_path, text).with_context(|| format!("writing {}", report_path.display()))?;

    print_table(&report);
    println!(
        "word targets {}, attached {}, unattachable {}, rejected lemmas {}",
        report.word_targets, report.attached, report.unattachable, report.rejected_lemmas
    );
    Ok(())
}
