use super::MweCandidate;
use crate::corpus::Sentence;
use crate::lexicon::Pos;
use crate::scorer::{Scorer, ScorerError, SenseScores};

/// Keeps candidates whose indices are strictly increasing.
pub fn filter_ordered(candidates: Vec<MweCandidate<'_>>) -> Vec<MweCandidate<'_>> {
    candidates.into_iter().filter(MweCandidate::in_order).collect()
}

pub fn filter_max_gappiness(candidates: Vec<MweCandidate<'_>>, max_gap: usize) -> Vec<MweCandidate<'_>> {
    candidates.into_iter().filter(|c| c.gap() <= max_gap).collect()
}

pub fn filter_verbal_only(candidates: Vec<MweCandidate<'_>>) -> Vec<MweCandidate<'_>> {
    candidates.into_iter().filter(|c| c.entry.pos == Pos::Verb).collect()
}

/// Scores each candidate and keeps those whose best sense strictly beats
/// the not-an-MWE score.
pub fn filter_encoder<'a>(
    candidates: Vec<MweCandidate<'a>>,
    sentence: &Sentence,
    scorer: &dyn Scorer,
) -> Result<Vec<(MweCandidate<'a>, SenseScores)>, ScorerError> {
    let mut out = Vec::new();
    for c in candidates {
        let scores = scorer.score(sentence, &c.token_indices, &c.entry.senses, true)?;
        if scores.retains() {
            out.push((c, scores));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::borrow::Cow;

    use super::*;
    use crate::lexicon::{LexiconEntry, Sense};

    fn cand(key: &str, pos: Pos, idx: &[usize]) -> MweCandidate<'static> {
        MweCandidate {
            entry: Cow::Owned(LexiconEntry::new(key, pos, [(format!("{key}.1"), "gloss")]).unwrap()),
            token_indices: idx.to_vec(),
            sent_id: "s".into(),
        }
    }

    struct Fixed(Vec<f64>, f64);

    impl Scorer for Fixed {
        fn score(&self, _: &Sentence, _: &[usize], senses: &[Sense], is_mwe: bool) -> Result<SenseScores, ScorerError> {
            Ok(SenseScores {
                per_sense: senses.iter().zip(&self.0).map(|(s, x)| (s.id.clone(), *x)).collect(),
                not_mwe: is_mwe.then_some(self.1),
            })
        }
    }

    #[test]
    fn ordered_and_gap() {
        let c = vec![
            cand("kick_the_bucket", Pos::Verb, &[1, 2, 3]),
            cand("kick_the_bucket", Pos::Verb, &[1, 5, 3]),
        ];
        let kept = filter_ordered(c.clone());
        assert_eq!(kept, vec![c[0].clone()]);
        assert!(filter_ordered(vec![]).is_empty());

        let ta = vec![cand("take_advantage", Pos::Verb, &[0, 3])];
        assert_eq!(filter_max_gappiness(ta.clone(), 2).len(), 1);
        assert!(filter_max_gappiness(ta, 1).is_empty());
    }

    #[test]
    fn verbal() {
        let c = vec![
            cand("kick_the_bucket", Pos::Verb, &[0, 1, 2]),
            cand("bus_stop", Pos::Noun, &[3, 4]),
        ];
        let kept = filter_verbal_only(c);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].entry.key, "kick_the_bucket");
    }

    #[test]
    fn encoder_retention() {
        let s = Sentence::from_lemmas("s", &["a", "b", "c"]);
        let two = MweCandidate {
            entry: Cow::Owned(LexiconEntry::new("a_b", Pos::Verb, [("x", "g1"), ("y", "g2")]).unwrap()),
            token_indices: vec![0, 1],
            sent_id: "s".into(),
        };
        let kept = filter_encoder(vec![two.clone()], &s, &Fixed(vec![2.0, 0.5], 1.0)).unwrap();
        assert_eq!(kept.len(), 1);
        let kept = filter_encoder(vec![two.clone()], &s, &Fixed(vec![0.3, 0.3], 0.3)).unwrap();
        assert!(kept.is_empty());
        let kept = filter_encoder(vec![two], &s, &Fixed(vec![9.0, 9.0], f64::INFINITY)).unwrap();
        assert!(kept.is_empty());
    }
}
