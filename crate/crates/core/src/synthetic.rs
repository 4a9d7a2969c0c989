//! Seeded synthetic corpora and lexicons for tests, benchmarks and smoke
//! runs.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{MweAnnotation, Sentence};
use crate::lexicon::{Lexicon, LexiconEntry, Pos};
use crate::scorer::SenseChoice;
use crate::training::{TrainingData, TrainingExample};

/// Lemmas `l0 .. l{n-1}`.
pub fn lemma_vocab(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("l{i}")).collect()
}

/// `count` sentences of 1 to `max_len` lemmas drawn uniformly from `vocab`.
pub fn random_sentences(seed: u64, count: usize, max_len: usize, vocab: &[String]) -> Vec<Sentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let len = rng.random_range(1..=max_len.max(1));
            let lemmas: Vec<&str> = (0..len).map(|_| vocab.choose(&mut rng).unwrap().as_str()).collect();
            Sentence::from_lemmas(&format!("r{i}"), &lemmas)
        })
        .collect()
}

/// `entries` MWE entries of 2 to `max_constituents` lemmas from `vocab`.
/// Repeated constituents and same-key entries under different POS occur.
pub fn random_lexicon(seed: u64, entries: usize, max_constituents: usize, vocab: &[String]) -> Lexicon {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pos = [Pos::Noun, Pos::Verb, Pos::Adjective, Pos::Adverb];
    let mut out: Vec<LexiconEntry> = Vec::with_capacity(entries);
    let mut keys = std::collections::BTreeSet::new();
    while out.len() < entries {
        let k = rng.random_range(2..=max_constituents.max(2));
        let parts: Vec<&str> = (0..k).map(|_| vocab.choose(&mut rng).unwrap().as_str()).collect();
        let key = parts.join("_");
        let p = *pos.choose(&mut rng).unwrap();
        if !keys.insert((key.clone(), p)) {
            continue;
        }
        let id = format!("{key}.{}.1", p.as_str());
        out.push(LexiconEntry::new(&key, p, [(id.as_str(), "a random gloss")]).unwrap());
    }
    Lexicon::from_entries(out).unwrap()
}

fn mwe(id: u32, indices: Vec<usize>) -> MweAnnotation {
    MweAnnotation {
        mwe_id: id,
        token_indices: indices,
        category: None,
    }
}

/// Ten two-word verbal MWEs `head{t}_tail{t}` with two senses each.
pub fn verbal_lexicon() -> Lexicon {
    let entries = (0..10).map(|t| {
        let key = format!("head{t}_tail{t}");
        let senses = [
            (format!("{key}.1"), format!("topic{t} sun bright")),
            (format!("{key}.2"), format!("topic{t} rain wet")),
        ];
        LexiconEntry::new(&key, Pos::Verb, senses.iter().map(|(a, b)| (a.as_str(), b.as_str()))).unwrap()
    });
    Lexicon::from_entries(entries.collect()).unwrap()
}

fn filler(rng: &mut ChaCha8Rng, n: usize) -> Vec<String> {
    (0..n).map(|_| format!("w{}", rng.random_range(0..30))).collect()
}

/// `count` sentences over [`verbal_lexicon`], each with one gold MWE written
/// in order and, in most sentences, a scrambled or widely gapped second
/// occurrence of the same constituents.
pub fn negative_corpus(seed: u64, count: usize) -> (Vec<Sentence>, Lexicon) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sentences = Vec::with_capacity(count);
    for i in 0..count {
        let t = rng.random_range(0..10);
        let (head, tail) = (format!("head{t}"), format!("tail{t}"));
        let n = rng.random_range(2..6);
        let mut words = filler(&mut rng, n);
        let at = rng.random_range(0..=words.len());
        let gap = rng.random_range(0..2);
        let mut gold = vec![head.clone()];
        gold.extend(filler(&mut rng, gap));
        gold.push(tail.clone());
        words.splice(at..at, gold);
        let gold_idx = [at, at + gap + 1];
        let mut offset = 0;
        match rng.random_range(0..10) {
            0..=5 => {
                // a reversed pair in front of the gold occurrence
                let mut extra = vec![tail.clone()];
                let n = rng.random_range(0..2);
                extra.extend(filler(&mut rng, n));
                extra.push(head.clone());
                offset = extra.len();
                extra.extend(words);
                words = extra;
            }
            6..=7 => {
                // a lone tail far after the gold head
                words.extend(filler(&mut rng, 5));
                words.push(tail);
            }
            _ => {}
        }
        let lemmas: Vec<&str> = words.iter().map(String::as_str).collect();
        let mut s = Sentence::from_lemmas(&format!("n{i}"), &lemmas);
        s.set_gold_mwes(vec![mwe(1, gold_idx.iter().map(|x| x + offset).collect())])
            .unwrap();
        sentences.push(s);
    }
    (sentences, verbal_lexicon())
}

/// Train and held-out sets where sense and MWE status are planted in the
/// context: `sun` selects the first sense, `rain` the second, and
/// `literally` marks a literal, non-MWE use.
#[derive(Clone, Debug)]
pub struct PlantedCorpus {
    pub lexicon: Lexicon,
    pub train: TrainingData,
    pub heldout: TrainingData,
}

pub fn planted_signal(seed: u64, n_train: usize, n_heldout: usize) -> PlantedCorpus {
    let lexicon = verbal_lexicon();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut make = |n: usize, prefix: &str| {
        let mut data = TrainingData::default();
        for i in 0..n {
            let t = rng.random_range(0..10);
            let class = rng.random_range(0..3);
            let cue = ["sun", "rain", "literally"][class];
            let n = rng.random_range(2..6);
            let mut words = filler(&mut rng, n);
            let at = rng.random_range(0..=words.len());
            words.splice(at..at, [format!("head{t}"), format!("tail{t}")]);
            let mut cue_at = rng.random_range(0..=words.len());
            if cue_at > at && cue_at <= at + 1 {
                cue_at = at;
            }
            words.insert(cue_at, cue.to_string());
            let head = words.iter().position(|w| *w == format!("head{t}")).unwrap();
            let lemmas: Vec<&str> = words.iter().map(String::as_str).collect();
            let mut sentence = Sentence::from_lemmas(&format!("{prefix}{i}"), &lemmas);
            let entry = lexicon.lookup(&format!("head{t}_tail{t}"), Some(Pos::Verb)).unwrap();
            let gold = match class {
                2 => SenseChoice::NotMwe,
                k => {
                    sentence.set_gold_mwes(vec![mwe(1, vec![head, head + 1])]).unwrap();
                    SenseChoice::Sense(entry.senses[k].id.clone())
                }
            };
            data.examples.push(TrainingExample {
                sentence: data.sentences.len(),
                target_indices: vec![head, head + 1],
                senses: entry.senses.clone(),
                gold,
                is_mwe: true,
            });
            data.sentences.push(sentence);
        }
        data
    };
    let train = make(n_train, "t");
    let heldout = make(n_heldout, "h");
    PlantedCorpus {
        lexicon,
        train,
        heldout,
    }
}

/// Random MWE annotations for property tests: up to `max_mwes` groups of 2
/// to 4 distinct indices per sentence.
pub fn random_annotations(seed: u64, sentences: usize, len: usize, max_mwes: usize) -> Vec<Vec<Vec<usize>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..sentences)
        .map(|_| {
            let k = rng.random_range(0..=max_mwes);
            (0..k)
                .filter_map(|_| {
                    let size = rng.random_range(2..=4).min(len);
                    if size < 2 {
                        return None;
                    }
                    let mut idx: Vec<usize> = (0..len).collect();
                    idx.shuffle(&mut rng);
                    let mut g = idx[..size].to_vec();
                    g.sort_unstable();
                    Some(g)
                })
                .collect()
        })
        .collect()
}
