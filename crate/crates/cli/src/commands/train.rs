use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::ValueEnum;
use glossmwe::corpus::Format;
use glossmwe::pipeline::PipelineConfig;
use glossmwe::scorer::{Architecture, Model, Scorer};
use glossmwe::training::{build_finetune_set, train, ExampleReport, SelectionMetric, TrainConfig, TrainingData};
use glossmwe::Lexicon;
use serde_json::json;

use crate::config::{layer, ExecArgs, FileConfig, PipelineArgs};
use crate::manifest::{sibling, RunManifest};
use crate::InputError;

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Selection {
    WsdAccuracy,
    MweF1,
}

impl From<Selection> for SelectionMetric {
    fn from(s: Selection) -> Self {
        match s {
            Selection::WsdAccuracy => SelectionMetric::WsdAccuracy,
            Selection::MweF1 => SelectionMetric::MweF1,
        }
    }
}

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Output of `preprocess`, or an MWE-annotated corpus with --finetune.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Same kind of file as --corpus. Without it a seeded share of the
    /// training sentences is held out.
    #[arg(long)]
    pub dev: Option<PathBuf>,
    /// Corpus format for --finetune inputs.
    #[arg(long)]
    pub format: Option<Format>,
    #[arg(long)]
    pub lexicon: PathBuf,
    /// Checkpoint path. Per-epoch metrics go to `<output>.metrics.jsonl`.
    #[arg(long)]
    pub output: PathBuf,
    /// Train the filter on gold MWEs and pipeline false positives.
    #[arg(long)]
    pub finetune: bool,
    /// Start from this checkpoint instead of random weights.
    #[arg(long)]
    pub init: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub dev_fraction: Option<f64>,
    /// bi-encoder, poly-encoder or poly-distinct.
    #[arg(long)]
    pub architecture: Option<Architecture>,
    #[arg(long, value_enum)]
    pub selection: Option<Selection>,
    /// Where to dump weights if the loss diverges.
    #[arg(long)]
    pub dump_dir: Option<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[command(flatten)]
    pub exec: ExecArgs,
}

impl Args {
    fn train_config(&self, file: &FileConfig) -> Result<TrainConfig> {
        let mut base = TrainConfig::default();
        if self.finetune {
            base.selection = SelectionMetric::MweF1;
        }
        let mut c = layer(&base, &file.train)?;
        if let Some(v) = self.epochs {
            c.epochs = v;
        }
        if let Some(v) = self.learning_rate {
            c.learning_rate = v;
        }
        if let Some(v) = self.batch_size {
            c.batch_size = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.dev_fraction {
            c.dev_fraction = v;
        }
        if let Some(v) = self.architecture {
            c.architecture = v;
        }
        if let Some(v) = self.selection {
            c.selection = v.into();
        }
        if self.dump_dir.is_some() {
            c.dump_dir = self.dump_dir.clone();
        }
        if self.exec.sequential {
            c.execution = self.exec.execution();
        }
        c.validate().map_err(|e| InputError(e.to_string()))?;
        Ok(c)
    }
}

fn load_data(
    path: &Path,
    args: &Args,
    lexicon: &Lexicon,
    pipeline: &PipelineConfig,
    scorer: Option<&dyn Scorer>,
) -> Result<TrainingData> {
    if args.finetune {
        let sentences = super::corpus(path, super::corpus_format(path, args.format)?)?;
        let data = build_finetune_set(scorer, &sentences, lexicon, pipeline)
            .with_context(|| format!("building examples from {}", path.display()))?;
        let neg = data.examples.iter().filter(|e| e.gold.is_not_mwe()).count();
        log::info!(
            "{}: {} positives, {neg} negatives",
            path.display(),
            data.examples.len() - neg
        );
        return Ok(data);
    }
    let (data, report) = TrainingData::from_annotated(&super::annotated(path)?, lexicon);
    log_report(path, &report);
    Ok(data)
}

fn log_report(path: &Path, r: &ExampleReport) {
    log::info!("{}: {} examples", path.display(), r.examples);
    if r.missing_entry > 0 || r.gold_not_in_senses > 0 {
        log::warn!(
            "{}: dropped {} targets without a lexicon entry and {} whose gold sense is not in the entry",
            path.display(),
            r.missing_entry,
            r.gold_not_in_senses
        );
    }
}

pub fn run(args: Args) -> Result<()> {
    let file = FileConfig::load(args.pipeline.config.as_deref())?;
    let mut config = args.train_config(&file)?;
    let pipeline = args.pipeline.resolve(&file)?;
    let lexicon = super::lexicon(&args.lexicon)?;

    let init = args
        .init
        .as_deref()
        .map(|p| Model::load(p).with_context(|| format!("loading {}", p.display())))
        .transpose()?;
    if let Some(m) = &init {
        if m.architecture != config.architecture || m.weights.dims != config.dims {
            log::info!("using the architecture and dimensions of the initial checkpoint");
        }
        config.architecture = m.architecture;
        config.dims = m.weights.dims;
    }
    if args.finetune {
        pipeline
            .validate(init.is_some())
            .map_err(|e| InputError(format!("{e}; pass --init")))?;
    }
    let scorer = init.as_ref().map(|m| m as &dyn Scorer);

    let data = load_data(&args.corpus, &args, &lexicon, &pipeline, scorer)?;
    let (train_data, dev_data, auto_dev) = match &args.dev {
        Some(p) => (data, load_data(p, &args, &lexicon, &pipeline, scorer)?, None),
        None => {
            let (t, d) = data.split_dev(config.dev_fraction, config.seed);
            let ids: Vec<String> = d.sentences.iter().map(|s| s.sent_id.clone()).collect();
            log::info!("no --dev given; held out {} sentences", ids.len());
            (t, d, Some(ids))
        }
    };
    if train_data.examples.is_empty() {
        return Err(InputError(format!("{} yields no training examples", args.corpus.display())).into());
    }

    let metrics_path = sibling(&args.output, "metrics.jsonl");
    let snapshot = json!({
        "train": config,
        "pipeline": if args.finetune { Some(&pipeline) } else { None },
        "finetune": args.finetune,
    });
    let mut manifest = RunManifest::new("train", snapshot, Some(config.seed))?
        .input("lexicon", &args.lexicon)?
        .input("corpus", &args.corpus)?;
    if let Some(p) = &args.dev {
        manifest = manifest.input("dev", p)?;
    }
    if let Some(p) = &args.init {
        manifest = super::record_weights(manifest, p)?;
    }
    if let Some(c) = &args.pipeline.config {
        manifest = manifest.input("config", c)?;
    }
    if let Some(ids) = &auto_dev {
        manifest = manifest.note("auto_dev", json!({ "fraction": config.dev_fraction, "sent_ids": ids }))?;
    }
    manifest
        .note("train_examples", train_data.examples.len())?
        .note("dev_examples", dev_data.examples.len())?
        .output(&args.output)
        .output(&metrics_path)
        .write_beside(&args.output)?;

    let model = match init {
        Some(m) => m,
        None => Model::random(config.dims, config.architecture, config.seed)?,
    };
    let outcome = train(model, train_data, Some(dev_data), &config)?;
    outcome
        .model
        .save(&args.output)
        .with_context(|| format!("saving {}", args.output.display()))?;
    super::write_jsonl(&metrics_path, &outcome.history)?;

    match outcome.history.iter().find(|r| r.epoch == outcome.best_epoch) {
        Some(best) => println!(
            "best epoch {} of {}: dev loss {:.4}, WSD accuracy {:.4}, filter accuracy {:.4}, filter F1 {:.4}",
            best.epoch,
            outcome.history.len(),
            best.dev.loss,
            best.dev.wsd_accuracy,
            best.dev.filter_accuracy,
            best.dev.filter_f1
        ),
        None => println!("no epochs run; saved the initial weights"),
    }
    Ok(())
}
