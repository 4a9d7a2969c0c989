use std::cmp::Ordering;

use super::{PredictedMwe, ScoredCandidate};
use crate::scorer::SenseChoice;

/// Greedy overlap resolution: highest margin first, then smaller first
/// index, then more tokens, then the smaller index tuple and entry key. A candidate is kept if it shares no token with
/// anything kept before it. Output is sorted by token indices.
pub fn resolve_overlaps(candidates: Vec<ScoredCandidate<'_>>) -> Vec<PredictedMwe> {
    let mut ranked: Vec<(f64, Vec<usize>, ScoredCandidate<'_>)> = candidates
        .into_iter()
        .map(|c| (c.margin(), c.candidate.sorted_indices(), c))
        .collect();
    ranked.sort_by(|(ma, ia, ca), (mb, ib, cb)| {
        mb.partial_cmp(ma)
            .unwrap_or(Ordering::Equal)
            .then(ia.first().cmp(&ib.first()))
            .then(ib.len().cmp(&ia.len()))
            .then(ia.cmp(ib))
            .then(ca.candidate.entry.key.cmp(&cb.candidate.entry.key))
    });

    let mut taken: Vec<usize> = Vec::new();
    let mut out = Vec::new();
    for (margin, indices, c) in ranked {
        if indices.iter().any(|i| taken.contains(i)) {
            continue;
        }
        taken.extend(&indices);
        let best = c
            .scores
            .as_ref()
            .and_then(|s| s.best_sense().map(|(i, _)| s.per_sense[i].0.clone()));
        let chosen_sense = SenseChoice::Sense(best.unwrap_or_else(|| c.candidate.entry.first_sense().id.clone()));
        out.push(PredictedMwe {
            token_indices: indices,
            entry_key: c.candidate.entry.key.clone(),
            chosen_sense,
            margin,
        });
    }
    out.sort_by(|a, b| a.token_indices.cmp(&b.token_indices));
    out
}
