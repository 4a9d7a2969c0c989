use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::TrainingExample;

/// Example ids plus a mask; masked examples ride along with their sentence
/// and become active in a later batch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Batch {
    pub examples: Vec<usize>,
    pub carryover_mask: Vec<bool>,
}

impl Batch {
    pub fn active(&self) -> impl Iterator<Item = usize> + '_ {
        self.examples
            .iter()
            .zip(&self.carryover_mask)
            .filter(|(_, masked)| !**masked)
            .map(|(e, _)| *e)
    }

    pub fn active_count(&self) -> usize {
        self.carryover_mask.iter().filter(|m| !**m).count()
    }

    /// The same examples with every one masked out.
    pub fn all_masked(&self) -> Batch {
        Batch {
            examples: self.examples.clone(),
            carryover_mask: vec![true; self.examples.len()],
        }
    }
}

/// Groups examples by sentence, shuffles the sentence order with `seed`, and
/// fills batches of exactly `batch_size` active examples (the last may be
/// smaller). When a sentence overflows a batch, the overflow is masked there
/// and is active at the front of the next batch.
pub fn build_batches(examples: &[TrainingExample], batch_size: usize, seed: u64) -> Vec<Batch> {
    let batch_size = batch_size.max(1);
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut slot: HashMap<usize, usize> = HashMap::new();
    for (i, e) in examples.iter().enumerate() {
        let g = *slot.entry(e.sentence).or_insert_with(|| {
            groups.push((e.sentence, Vec::new()));
            groups.len() - 1
        });
        groups[g].1.push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    groups.shuffle(&mut rng);

    let mut batches = Vec::new();
    let mut carry: Vec<usize> = Vec::new();
    let mut next = groups.into_iter();
    loop {
        let mut batch = Batch {
            examples: Vec::new(),
            carryover_mask: Vec::new(),
        };
        let take = carry.len().min(batch_size);
        for id in carry.drain(..take) {
            batch.examples.push(id);
            batch.carryover_mask.push(false);
        }
        let mut active = take;
        while active < batch_size {
            let Some((_, ids)) = next.next() else { break };
            for id in ids {
                let masked = active >= batch_size;
                if masked {
                    carry.push(id);
                } else {
                    active += 1;
                }
                batch.examples.push(id);
                batch.carryover_mask.push(masked);
            }
        }
        if active == 0 {
            break;
        }
        batches.push(batch);
    }
    batches
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scorer::SenseChoice;

    fn examples(per_sentence: &[usize]) -> Vec<TrainingExample> {
        let mut out = Vec::new();
        for (s, &k) in per_sentence.iter().enumerate() {
            for i in 0..k {
                out.push(TrainingExample {
                    sentence: s,
                    target_indices: vec![i],
                    senses: Vec::new(),
                    gold: SenseChoice::Sense("x".into()),
                    is_mwe: false,
                });
            }
        }
        out
    }

    #[test]
    fn three_and_three_by_four() {
        let ex = examples(&[3, 3]);
        let b = build_batches(&ex, 4, 0);
        assert_eq!(b.len(), 2);
        assert_eq!(b[0].active_count(), 4);
        assert_eq!(b[0].examples.len(), 6);
        assert_eq!(b[1].active_count(), 2);
        let masked: Vec<usize> = b[0]
            .examples
            .iter()
            .zip(&b[0].carryover_mask)
            .filter(|(_, m)| **m)
            .map(|(e, _)| *e)
            .collect();
        assert_eq!(b[1].active().collect::<Vec<_>>(), masked);
    }

    #[test]
    fn single_batch_when_large() {
        let ex = examples(&[2, 5, 1]);
        let b = build_batches(&ex, 100, 3);
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].active_count(), 8);
    }

    #[test]
    fn seeded() {
        let ex = examples(&[2, 5, 1, 4, 4]);
        assert_eq!(build_batches(&ex, 3, 11), build_batches(&ex, 3, 11));
    }

    #[test]
    fn sentence_larger_than_batch() {
        let ex = examples(&[7]);
        let b = build_batches(&ex, 2, 0);
        let counts: Vec<usize> = b.iter().map(Batch::active_count).collect();
        assert_eq!(counts, vec![2, 2, 2, 1]);
    }
}
