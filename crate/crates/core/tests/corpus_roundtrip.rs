use glossmwe::corpus::{read_corpus_from, write_corpus, Format, MweAnnotation, Sentence};
use proptest::prelude::*;

const FORMS: [&str; 8] = ["The", "cat", "kicked", "the", "bucket", "up", "Paris", "runs"];
const TAGS: [&str; 4] = ["NOUN", "VERB", "DET", "ADP"];

/// Sentences with disjoint MWE groups of two or more tokens.
fn sentences() -> impl Strategy<Value = Vec<Sentence>> {
    prop::collection::vec(
        (
            prop::collection::vec((0usize..FORMS.len(), 0usize..TAGS.len()), 2..10),
            prop::collection::vec(0usize..4, 10),
        ),
        0..5,
    )
    .prop_map(|raw| {
        raw.into_iter()
            .enumerate()
            .map(|(si, (toks, groups))| {
                let triples: Vec<(&str, &str, &str)> =
                    toks.iter().map(|&(f, t)| (FORMS[f], FORMS[f], TAGS[t])).collect();
                let mut s = Sentence::from_triples(&format!("s{si}"), &triples);
                // group label 0 means no MWE
                let mut members: Vec<Vec<usize>> = vec![Vec::new(); 4];
                for (i, &g) in groups.iter().take(triples.len()).enumerate() {
                    if g > 0 {
                        members[g].push(i);
                    }
                }
                members.retain(|m| m.len() >= 2);
                // writers number MWEs by first token
                members.sort();
                let mwes = members
                    .into_iter()
                    .enumerate()
                    .map(|(k, token_indices)| MweAnnotation {
                        mwe_id: k as u32 + 1,
                        token_indices,
                        category: None,
                    })
                    .collect();
                s.set_gold_mwes(mwes).unwrap();
                s
            })
            .collect()
    })
}

/// Sentence id, (form, lemma, upos) per token, and MWE index sets.
type View = (String, Vec<(String, String, String)>, Vec<Vec<usize>>);

fn view(s: &Sentence) -> View {
    (
        s.sent_id.clone(),
        s.tokens
            .iter()
            .map(|t| (t.form.clone(), t.lemma.clone(), t.upos.clone()))
            .collect(),
        s.gold_sets(),
    )
}

fn round_trip(sentences: &[Sentence], format: Format) -> Vec<Sentence> {
    let mut buf = Vec::new();
    write_corpus(&mut buf, sentences, format).unwrap();
    read_corpus_from(buf.as_slice(), format).unwrap()
}

proptest! {
    #[test]
    fn cupt_round_trip(corpus in sentences()) {
        let back = round_trip(&corpus, Format::Cupt);
        prop_assert_eq!(back.iter().map(view).collect::<Vec<_>>(), corpus.iter().map(view).collect::<Vec<_>>());
    }

    #[test]
    fn json_round_trip(corpus in sentences()) {
        let back = round_trip(&corpus, Format::Json);
        prop_assert_eq!(back, corpus);
    }

    #[test]
    fn dimsum_round_trip(corpus in sentences()) {
        let back = round_trip(&corpus, Format::Dimsum);
        prop_assert_eq!(back.iter().map(view).collect::<Vec<_>>(), corpus.iter().map(view).collect::<Vec<_>>());
    }
}
