use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::ValueEnum;
use glossmwe::corpus::Format;
use glossmwe::eval::{mwes_of, read_key_file, read_predictions, wsd_f1, MweMetric, Report, WsdScore};
use serde::Serialize;
use serde_json::json;

use crate::manifest::RunManifest;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    MweBased,
    TokenBased,
    Link,
    Wsd,
}

impl Metric {
    fn mwe(self) -> Option<MweMetric> {
        match self {
            Metric::MweBased => Some(MweMetric::MweBased),
            Metric::TokenBased => Some(MweMetric::TokenBased),
            Metric::Link => Some(MweMetric::Link),
            Metric::Wsd => None,
        }
    }
}

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Gold corpus, or a key file (`id sense...`) for wsd.
    #[arg(long)]
    pub gold: PathBuf,
    /// Predicted corpus, or `id sense` lines for wsd.
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long, value_enum)]
    pub metric: Metric,
    /// Corpus format for both files. Guessed from each extension when omitted.
    #[arg(long)]
    pub format: Option<Format>,
    /// wsd only: count missing predictions as errors instead of failing.
    #[arg(long)]
    pub lenient: bool,
    /// Also write the report here, with a manifest beside it.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Serialize)]
struct WsdReport<'a> {
    metric: &'a str,
    #[serde(flatten)]
    score: WsdScore,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

fn report(args: &Args) -> Result<serde_json::Value> {
    match args.metric.mwe() {
        Some(metric) => {
            let gold = super::corpus(&args.gold, super::corpus_format(&args.gold, args.format)?)?;
            let pred = super::corpus(&args.pred, super::corpus_format(&args.pred, args.format)?)?;
            let prf = metric.compute(&mwes_of(&gold), &mwes_of(&pred))?;
            Ok(serde_json::to_value(Report::new(metric.name(), prf))?)
        }
        None => {
            let gold = read_key_file(open(&args.gold)?).with_context(|| format!("reading {}", args.gold.display()))?;
            let pred =
                read_predictions(open(&args.pred)?).with_context(|| format!("reading {}", args.pred.display()))?;
            let score = wsd_f1(&gold, &pred, args.lenient)?;
            if score.missing > 0 {
                log::warn!("{} instances had no prediction", score.missing);
            }
            Ok(serde_json::to_value(WsdReport { metric: "wsd", score })?)
        }
    }
}

pub fn run(args: Args) -> Result<()> {
    let snapshot = json!({
        "metric": args.metric.to_possible_value().map(|v| v.get_name().to_string()),
        "format": args.format,
        "lenient": args.lenient,
    });
    let manifest = RunManifest::new("eval", snapshot, None)?
        .input("gold", &args.gold)?
        .input("pred", &args.pred)?;
    match &args.output {
        Some(out) => {
            manifest.output(out).write_beside(out)?;
        }
        None => log::info!("manifest: {}", serde_json::to_string(&manifest)?),
    }
    let report = report(&args)?;
    let text = serde_json::to_string_pretty(&report)?;
    println!("{text}");
    if let Some(out) = &args.output {
        fs::write(out, format!("{text}\n")).with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(())
}
