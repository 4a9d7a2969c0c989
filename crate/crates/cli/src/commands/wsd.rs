use std::io::Write;
use std::path::PathBuf;

use anyhow::Result;
use glossmwe::corpus::Format;
use glossmwe::par;
use glossmwe::pipeline::{mark_semcor_mwes, AnnotatedSentence};
use glossmwe::scorer::{Scorer, ScorerError};
use glossmwe::Lexicon;
use serde_json::json;

use crate::config::ExecArgs;
use crate::manifest::RunManifest;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Sense-annotated corpus; every annotated word or MWE is an instance.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub format: Option<Format>,
    #[arg(long)]
    pub lexicon: PathBuf,
    /// Checkpoint, or a `.json` file of precomputed vectors.
    #[arg(long)]
    pub weights: PathBuf,
    /// `id sense` lines.
    #[arg(long)]
    pub output: PathBuf,
    /// Also write the gold key for every instance, skipped ones included.
    #[arg(long)]
    pub gold_key: Option<PathBuf>,
    #[command(flatten)]
    pub exec: ExecArgs,
}

struct Instance {
    id: String,
    gold: String,
    /// None when the lexicon has no entry for the lemma.
    predicted: Option<String>,
}

fn instances(a: &AnnotatedSentence, lexicon: &Lexicon, scorer: &dyn Scorer) -> Result<Vec<Instance>, ScorerError> {
    let mut out = Vec::new();
    for t in &a.targets {
        let id = format!("{}.t{}", a.sentence.sent_id, t.indices[0]);
        let predicted = match lexicon.lookup(&t.key, t.pos) {
            Some(entry) => {
                let scores = scorer.score(&a.sentence, &t.indices, &entry.senses, false)?;
                scores.best_sense().map(|(i, _)| entry.senses[i].id.clone())
            }
            None => None,
        };
        out.push(Instance {
            id,
            gold: t.gold.to_string(),
            predicted,
        });
    }
    Ok(out)
}

pub fn run(args: Args) -> Result<()> {
    let format = super::corpus_format(&args.corpus, args.format)?;
    let exec = args.exec.execution();
    let lexicon = super::lexicon(&args.lexicon)?;
    let sentences = super::corpus(&args.corpus, format)?;
    let scorer = super::scorer(&args.weights)?;

    let mut manifest = RunManifest::new("wsd", json!({ "format": format, "execution": exec }), None)?
        .input("lexicon", &args.lexicon)?
        .input("corpus", &args.corpus)?;
    manifest = super::record_weights(manifest, &args.weights)?.output(&args.output);
    if let Some(k) = &args.gold_key {
        manifest = manifest.output(k);
    }
    manifest.write_beside(&args.output)?;

    let (annotated, _) = mark_semcor_mwes(sentences);
    let per_sentence = par::map(exec, &annotated, |a| instances(a, &lexicon, scorer.as_ref()));
    let mut out = super::create(&args.output)?;
    let mut key = args.gold_key.as_deref().map(super::create).transpose()?;
    let (mut predicted, mut skipped) = (0usize, 0usize);
    for batch in per_sentence {
        for inst in batch? {
            if let Some(k) = key.as_mut() {
                writeln!(k, "{} {}", inst.id, inst.gold)?;
            }
            match inst.predicted {
                Some(sense) => {
                    writeln!(out, "{} {}", inst.id, sense)?;
                    predicted += 1;
                }
                None => {
                    log::warn!("{}: lemma not in lexicon, skipped", inst.id);
                    skipped += 1;
                }
            }
        }
    }
    out.flush()?;
    if let Some(mut k) = key {
        k.flush()?;
    }
    if skipped > 0 {
        log::warn!("{skipped} instances skipped for lemmas missing from the lexicon");
    }
    eprintln!("{predicted} instances predicted, {skipped} skipped");
    Ok(())
}
