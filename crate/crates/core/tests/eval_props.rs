mod common;

use common::naive_counts;
use glossmwe::eval::{dimsum_link_prf, mwe_based_prf, token_based_prf, MweMetric, SentenceMwes};
use glossmwe::synthetic::random_annotations;
use proptest::prelude::*;

const METRICS: [MweMetric; 3] = [MweMetric::MweBased, MweMetric::TokenBased, MweMetric::Link];

fn wrap(sets: &[Vec<Vec<usize>>]) -> Vec<SentenceMwes> {
    sets.iter()
        .enumerate()
        .map(|(i, m)| SentenceMwes::new(format!("s{i}"), m.clone()))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn counts_match_enumeration(seed in any::<u64>()) {
        let gold = random_annotations(seed, 6, 9, 3);
        let pred = random_annotations(seed ^ 1, 6, 9, 3);
        let (g, p) = (wrap(&gold), wrap(&pred));
        let n = naive_counts(&gold, &pred);
        let m = mwe_based_prf(&g, &p).unwrap();
        prop_assert_eq!((m.tp, m.tp + m.fp, m.tp + m.fn_), n.mwe);
        let t = token_based_prf(&g, &p).unwrap();
        prop_assert_eq!((t.tp, t.fp, t.fn_), n.token);
        let l = dimsum_link_prf(&g, &p).unwrap();
        prop_assert_eq!((l.tp, l.tp + l.fp), (n.link.0, n.link.1));
        prop_assert_eq!(n.link.3 - l.fn_, n.link.2);
    }

    #[test]
    fn self_evaluation_is_perfect(seed in any::<u64>()) {
        let mut gold = random_annotations(seed, 5, 8, 3);
        gold[0].push(vec![0, 1]);
        let g = wrap(&gold);
        for metric in METRICS {
            let r = metric.compute(&g, &g).unwrap();
            prop_assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));
        }
    }

    #[test]
    fn permutation_invariant(seed in any::<u64>(), rot in 0usize..6) {
        let g = wrap(&random_annotations(seed, 6, 8, 3));
        let p = wrap(&random_annotations(seed ^ 7, 6, 8, 3));
        let (mut g2, mut p2) = (g.clone(), p.clone());
        g2.rotate_left(rot);
        p2.reverse();
        for metric in METRICS {
            prop_assert_eq!(metric.compute(&g, &p).unwrap(), metric.compute(&g2, &p2).unwrap());
        }
    }

    #[test]
    fn exact_matches_feed_token_matches(seed in any::<u64>()) {
        let gold = random_annotations(seed, 6, 9, 2);
        let pred = random_annotations(seed ^ 3, 6, 9, 2);
        // tokens of exactly matched predictions, counted directly
        let mut exact_tokens = 0;
        for (g, p) in gold.iter().zip(&pred) {
            let mut covered = std::collections::BTreeSet::new();
            for m in p.iter().filter(|m| g.contains(m)) {
                covered.extend(m.iter().copied());
            }
            exact_tokens += covered.len();
        }
        let t = token_based_prf(&wrap(&gold), &wrap(&pred)).unwrap();
        prop_assert!(exact_tokens <= t.tp);
    }
}

#[test]
fn fixtures() {
    let one = |m: Vec<Vec<usize>>| vec![SentenceMwes::new("s", m)];
    let r = token_based_prf(
        &one(vec![vec![1, 2], vec![4, 5, 6]]),
        &one(vec![vec![1, 2], vec![4, 5]]),
    )
    .unwrap();
    assert_eq!((r.precision, r.recall), (1.0, 0.8));
    assert!((r.f1 - 16.0 / 18.0).abs() < 1e-12);
    let r = dimsum_link_prf(&one(vec![vec![1, 2, 3]]), &one(vec![vec![1, 2]])).unwrap();
    assert_eq!((r.precision, r.recall), (1.0, 0.5));
    assert!((r.f1 - 2.0 / 3.0).abs() < 1e-12);
    let r = mwe_based_prf(&one(vec![vec![1, 2]]), &one(vec![])).unwrap();
    assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));
    let r = token_based_prf(&one(vec![vec![1, 2]]), &one(vec![vec![3, 4]])).unwrap();
    assert_eq!(r.f1, 0.0);
}
