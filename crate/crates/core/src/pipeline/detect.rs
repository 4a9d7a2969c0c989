use std::borrow::Cow;
use std::collections::BTreeSet;

use super::{synthetic_entry, MweCandidate, PipelineConfig};
use crate::corpus::Sentence;
use crate::lexicon::{Lexicon, LexiconEntry, Pos};

#[derive(Clone, Debug, Default)]
pub struct Detection<'a> {
    pub candidates: Vec<MweCandidate<'a>>,
    pub truncated_entries: usize,
}

/// Every injective assignment of each MWE entry's constituents to tokens
/// with matching lemmas. Per entry, assignments come in lexicographic order
/// of their index tuples and stop at `max_candidates_per_entry`. Entries are
/// visited in (key, pos) order.
pub fn detect_exhaustive<'a>(sentence: &Sentence, lexicon: &'a Lexicon, config: &PipelineConfig) -> Detection<'a> {
    let lemmas: Vec<String> = sentence.tokens.iter().map(|t| t.lemma.to_lowercase()).collect();
    let mut entries: Vec<&'a LexiconEntry> = Vec::new();
    let mut seen = BTreeSet::new();
    for lemma in lemmas.iter().collect::<BTreeSet<_>>() {
        for e in lexicon.entries_for_constituent(lemma) {
            if seen.insert((e.key.as_str(), e.pos)) {
                entries.push(e);
            }
        }
    }
    entries.sort_by(|a, b| (&a.key, a.pos).cmp(&(&b.key, b.pos)));

    let cap = config.max_candidates_per_entry.max(1);
    let mut out = Detection::default();
    for entry in entries {
        let slots: Vec<Vec<usize>> = entry
            .constituents
            .iter()
            .map(|c| (0..lemmas.len()).filter(|&i| lemmas[i] == *c).collect())
            .collect();
        if slots.iter().any(Vec::is_empty) {
            continue;
        }
        let mut found = Vec::new();
        let truncated = assign(&slots, &mut Vec::new(), &mut vec![false; lemmas.len()], &mut found, cap);
        if truncated {
            out.truncated_entries += 1;
            log::debug!("{}: candidates for {} truncated at {cap}", sentence.sent_id, entry.key);
        }
        out.candidates
            .extend(found.into_iter().map(|token_indices| MweCandidate {
                entry: Cow::Borrowed(entry),
                token_indices,
                sent_id: sentence.sent_id.clone(),
            }));
    }
    out
}

/// Depth-first enumeration; returns true when it stopped at the cap with
/// assignments left over.
fn assign(
    slots: &[Vec<usize>],
    current: &mut Vec<usize>,
    used: &mut [bool],
    found: &mut Vec<Vec<usize>>,
    cap: usize,
) -> bool {
    let depth = current.len();
    if depth == slots.len() {
        if found.len() == cap {
            return true;
        }
        found.push(current.clone());
        return false;
    }
    for &i in &slots[depth] {
        if used[i] {
            continue;
        }
        used[i] = true;
        current.push(i);
        let stop = assign(slots, current, used, found, cap);
        current.pop();
        used[i] = false;
        if stop {
            return true;
        }
    }
    false
}

/// Universal and Penn Treebank noun tags, including proper nouns.
pub fn is_noun_tag(tag: &str) -> bool {
    Pos::from_corpus_tag(tag) == Pos::Noun
}

/// One candidate per maximal run of two or more noun tokens.
pub fn detect_consecutive_nouns(sentence: &Sentence) -> Vec<MweCandidate<'static>> {
    let mut out = Vec::new();
    let mut run: Vec<usize> = Vec::new();
    let flush = |run: &mut Vec<usize>, out: &mut Vec<MweCandidate<'static>>| {
        if run.len() >= 2 {
            let constituents: Vec<String> = run.iter().map(|&i| sentence.tokens[i].lemma.to_lowercase()).collect();
            let key = constituents.join("_");
            let entry = synthetic_entry(key.clone(), constituents, Pos::Noun, format!("{key}.compound"));
            out.push(MweCandidate {
                entry: Cow::Owned(entry),
                token_indices: run.clone(),
                sent_id: sentence.sent_id.clone(),
            });
        }
        run.clear();
    };
    for t in &sentence.tokens {
        if is_noun_tag(&t.upos) {
            run.push(t.index);
        } else {
            flush(&mut run, &mut out);
        }
    }
    flush(&mut run, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lexicon() -> Lexicon {
        Lexicon::from_entries(vec![
            LexiconEntry::new("kick_the_bucket", Pos::Verb, [("ktb.v.01", "pass from physical life")]).unwrap(),
            LexiconEntry::new("take_advantage", Pos::Verb, [("ta.v.01", "make use of")]).unwrap(),
            LexiconEntry::new("bucket", Pos::Noun, [("b.n.01", "a roughly cylindrical vessel")]).unwrap(),
        ])
        .unwrap()
    }

    fn tuples(d: &Detection<'_>) -> Vec<Vec<usize>> {
        d.candidates.iter().map(|c| c.token_indices.clone()).collect()
    }

    #[test]
    fn bucket_down_the_hill() {
        let lex = lexicon();
        let s = Sentence::from_lemmas("s", &["he", "kick", "the", "bucket", "down", "the", "hill"]);
        let d = detect_exhaustive(&s, &lex, &PipelineConfig::default());
        assert_eq!(tuples(&d), vec![vec![1, 2, 3], vec![1, 5, 3]]);
        assert_eq!(d.candidates[1].gap(), 2);
        assert!(!d.candidates[1].in_order());
    }

    #[test]
    fn missing_constituent() {
        let lex = lexicon();
        let s = Sentence::from_lemmas("s", &["bucket", "kick"]);
        assert!(detect_exhaustive(&s, &lex, &PipelineConfig::default())
            .candidates
            .is_empty());
    }

    #[test]
    fn gapped_take_advantage() {
        let lex = lexicon();
        let s = Sentence::from_lemmas("s", &["take", "full", "legal", "advantage"]);
        let d = detect_exhaustive(&s, &lex, &PipelineConfig::default());
        assert_eq!(tuples(&d), vec![vec![0, 3]]);
        assert_eq!(d.candidates[0].gap(), 2);
    }

    #[test]
    fn cap_truncates() {
        let lex = lexicon();
        let s = Sentence::from_lemmas("s", &["take", "take", "advantage", "advantage"]);
        let cfg = PipelineConfig {
            max_candidates_per_entry: 3,
            ..PipelineConfig::default()
        };
        let d = detect_exhaustive(&s, &lex, &cfg);
        assert_eq!(tuples(&d), vec![vec![0, 2], vec![0, 3], vec![1, 2]]);
        assert_eq!(d.truncated_entries, 1);
    }

    #[test]
    fn noun_runs() {
        let s = Sentence::from_triples(
            "s",
            &[
                ("the", "the", "DET"),
                ("bus", "bus", "NOUN"),
                ("stop", "stop", "NOUN"),
                ("is", "be", "VERB"),
            ],
        );
        let c = detect_consecutive_nouns(&s);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].token_indices, vec![1, 2]);
        assert_eq!(c[0].entry.key, "bus_stop");

        let s = Sentence::from_triples("s", &[("a", "a", "NN"), ("b", "b", "NNS"), ("c", "c", "NNP")]);
        assert_eq!(detect_consecutive_nouns(&s)[0].token_indices, vec![0, 1, 2]);

        let s = Sentence::from_triples("s", &[("a", "a", "NOUN"), ("b", "b", "VERB"), ("c", "c", "NOUN")]);
        assert!(detect_consecutive_nouns(&s).is_empty());
    }
}
