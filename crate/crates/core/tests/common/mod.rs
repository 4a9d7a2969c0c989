//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use glossmwe::corpus::Sentence;
use glossmwe::lexicon::{Lexicon, Pos, Sense};
use glossmwe::pipeline::ScoredCandidate;
use glossmwe::scorer::{
    context_ids, gloss_ids, sentence_loss, Architecture, Dims, Gradients, Scorer, ScorerError, ScorerWeights,
    SenseScores, TargetInput, TENSOR_ORDER,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// (key, pos, token indices) in detection order.
pub type Found = Vec<(String, Pos, Vec<usize>)>;

/// Walks every index tuple of each MWE entry in lexicographic order and keeps
/// the injective ones whose lemmas match, up to `cap` per entry. Returns the
/// matches and the number of entries that had more than `cap`.
pub fn brute_force_detect(sentence: &Sentence, lexicon: &Lexicon, cap: usize) -> (Found, usize) {
    let lemmas: Vec<String> = sentence.tokens.iter().map(|t| t.lemma.to_lowercase()).collect();
    let n = lemmas.len();
    let mut entries: Vec<_> = lexicon.entries().iter().filter(|e| e.constituents.len() > 1).collect();
    entries.sort_by(|a, b| (&a.key, a.pos).cmp(&(&b.key, b.pos)));
    let mut out = Vec::new();
    let mut truncated = 0;
    for e in entries {
        let k = e.constituents.len();
        let total = n.pow(k as u32);
        let mut hits = 0;
        for code in 0..total {
            // most significant digit first gives lexicographic order
            let mut tuple = vec![0; k];
            let mut c = code;
            for slot in (0..k).rev() {
                tuple[slot] = c % n;
                c /= n;
            }
            let distinct: BTreeSet<_> = tuple.iter().collect();
            if distinct.len() != k {
                continue;
            }
            if !tuple.iter().zip(&e.constituents).all(|(&i, c)| lemmas[i] == *c) {
                continue;
            }
            hits += 1;
            if hits <= cap {
                out.push((e.key.clone(), e.pos, tuple));
            }
        }
        if hits > cap {
            truncated += 1;
        }
    }
    (out, truncated)
}

fn fnv(bytes: impl IntoIterator<Item = u8>) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Deterministic scorer whose scores take five coarse values, so ties
/// between a sense and not-an-MWE are common.
pub struct CoarseScorer {
    pub salt: u64,
}

impl CoarseScorer {
    pub fn value(&self, sentence: &Sentence, indices: &[usize], label: &str) -> f64 {
        let mut key = format!("{}|{}|{label}|", self.salt, sentence.sent_id);
        for i in indices {
            key.push_str(&format!("{i},"));
        }
        (fnv(key.bytes()) % 5) as f64 - 2.0
    }
}

impl Scorer for CoarseScorer {
    fn score(
        &self,
        sentence: &Sentence,
        indices: &[usize],
        senses: &[Sense],
        is_mwe: bool,
    ) -> Result<SenseScores, ScorerError> {
        Ok(SenseScores {
            per_sense: senses
                .iter()
                .map(|s| (s.id.clone(), self.value(sentence, indices, &s.id)))
                .collect(),
            not_mwe: is_mwe.then(|| self.value(sentence, indices, "\u{0}not")),
        })
    }
}

/// Selection by repeated argmax over the still-compatible candidates.
pub fn greedy_oracle(cands: &[ScoredCandidate<'_>]) -> Vec<Vec<usize>> {
    let sets: Vec<Vec<usize>> = cands.iter().map(|c| c.candidate.sorted_indices()).collect();
    let margins: Vec<f64> = cands.iter().map(|c| c.margin()).collect();
    let mut alive: Vec<bool> = vec![true; cands.len()];
    let mut chosen = Vec::new();
    loop {
        let mut best: Option<usize> = None;
        for i in 0..cands.len() {
            if !alive[i] {
                continue;
            }
            best = match best {
                None => Some(i),
                Some(b) => {
                    let rank = |x: usize| {
                        (
                            std::cmp::Reverse(sets[x].len()),
                            sets[x].clone(),
                            cands[x].candidate.entry.key.clone(),
                        )
                    };
                    let better = margins[i] > margins[b]
                        || (margins[i] == margins[b]
                            && (sets[i][0] < sets[b][0] || (sets[i][0] == sets[b][0] && rank(i) < rank(b))));
                    Some(if better { i } else { b })
                }
            };
        }
        let Some(b) = best else { break };
        let picked = sets[b].clone();
        for i in 0..cands.len() {
            if alive[i] && sets[i].iter().any(|x| picked.contains(x)) {
                alive[i] = false;
            }
        }
        chosen.push(picked);
    }
    chosen.sort();
    chosen
}

/// Target indices, hashed glosses, is-MWE flag and gold label.
pub type HashedTarget = (Vec<usize>, Vec<Vec<usize>>, bool, usize);

/// A batch of sentences with scoring targets, already hashed.
pub struct GradProblem {
    pub contexts: Vec<Vec<usize>>,
    pub targets: Vec<Vec<HashedTarget>>,
}

pub const GRAD_DIMS: Dims = Dims {
    d: 8,
    m: 2,
    vocab: 32,
    max_len: 16,
};

pub fn grad_problem(seed: u64, sentences: usize) -> GradProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let words: Vec<String> = (0..12).map(|i| format!("w{i}")).collect();
    let mut contexts = Vec::new();
    let mut targets = Vec::new();
    for s in 0..sentences {
        let len = rng.random_range(3..8);
        let lemmas: Vec<&str> = (0..len)
            .map(|_| words[rng.random_range(0..words.len())].as_str())
            .collect();
        let sentence = Sentence::from_lemmas(&format!("g{s}"), &lemmas);
        contexts.push(context_ids(&sentence, GRAD_DIMS).unwrap());
        let mut ts = Vec::new();
        for _ in 0..rng.random_range(1..3) {
            let k = rng.random_range(1..4);
            let glosses: Vec<Vec<usize>> = (0..k)
                .map(|_| {
                    let g: Vec<&str> = (0..rng.random_range(1..5))
                        .map(|_| words[rng.random_range(0..words.len())].as_str())
                        .collect();
                    gloss_ids(&g.join(" "), GRAD_DIMS).unwrap()
                })
                .collect();
            let is_mwe = rng.random_bool(0.5);
            let width = if is_mwe { 2 } else { 1 };
            let start = rng.random_range(0..len - 1);
            let indices: Vec<usize> = (start..start + width).collect();
            let gold = rng.random_range(0..k + usize::from(is_mwe));
            ts.push((indices, glosses, is_mwe, gold));
        }
        targets.push(ts);
    }
    GradProblem { contexts, targets }
}

pub fn problem_loss(
    weights: &ScorerWeights,
    arch: Architecture,
    p: &GradProblem,
    mut grads: Option<&mut Gradients>,
) -> f64 {
    let mut total = 0.0;
    for (ctx, ts) in p.contexts.iter().zip(&p.targets) {
        let inputs: Vec<TargetInput<'_>> = ts
            .iter()
            .map(|(indices, glosses, is_mwe, gold)| TargetInput {
                indices,
                glosses,
                is_mwe: *is_mwe,
                gold: *gold,
            })
            .collect();
        total += sentence_loss(weights, arch, ctx, &inputs, grads.as_deref_mut()).unwrap();
    }
    total
}

/// Denominator floor for the relative error, so gradients near zero are
/// compared absolutely.
pub const GRAD_FLOOR: f64 = 1e-6;

/// Largest relative error between the analytic gradient and central
/// differences with step `h`, over every parameter.
pub fn max_gradient_error(arch: Architecture, seed: u64, h: f64) -> f64 {
    let p = grad_problem(seed, 3);
    let mut weights = ScorerWeights::random(GRAD_DIMS, seed).unwrap();
    let mut grads = Gradients::zeros(GRAD_DIMS);
    problem_loss(&weights, arch, &p, Some(&mut grads));
    let mut worst: f64 = 0.0;
    for (t, name) in TENSOR_ORDER.iter().enumerate() {
        let analytic = grads.dense(name);
        for (k, &a) in analytic.iter().enumerate() {
            let orig = weights.tensors_mut()[t].1[k];
            weights.tensors_mut()[t].1[k] = orig + h;
            let up = problem_loss(&weights, arch, &p, None);
            weights.tensors_mut()[t].1[k] = orig - h;
            let down = problem_loss(&weights, arch, &p, None);
            weights.tensors_mut()[t].1[k] = orig;
            let numeric = (up - down) / (2.0 * h);
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(GRAD_FLOOR);
            worst = worst.max(err);
        }
    }
    worst
}

/// Direct evaluation of cross-entropy without max-shifting.
pub fn naive_cross_entropy(logits: &[f64], gold: usize) -> f64 {
    let z: f64 = logits.iter().map(|x| x.exp()).sum();
    z.ln() - logits[gold]
}

fn keyed(c: &glossmwe::pipeline::MweCandidate<'_>) -> (String, Pos, Vec<usize>) {
    (c.entry.key.clone(), c.entry.pos, c.token_indices.clone())
}

fn subset(inner: &[(String, Pos, Vec<usize>)], outer: &[(String, Pos, Vec<usize>)]) -> bool {
    let outer: BTreeSet<_> = outer.iter().collect();
    inner.iter().all(|x| outer.contains(x))
}

/// One seeded case of the filter chain and resolver invariants: each stage
/// keeps a subset of its input, the encoder filter keeps exactly the
/// candidates whose best sense strictly beats not-an-MWE, and the resolver
/// output is pairwise disjoint and equals the greedy oracle.
pub fn filter_resolver_case(seed: u64) -> Result<(), String> {
    use glossmwe::pipeline::{
        detect_exhaustive, filter_encoder, filter_max_gappiness, filter_ordered, resolve_overlaps, PipelineConfig,
    };
    use glossmwe::synthetic::{lemma_vocab, random_lexicon, random_sentences};

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab = lemma_vocab(rng.random_range(3..10));
    let lex = random_lexicon(seed, 15, 3, &vocab);
    let sentence = random_sentences(seed ^ 0x77, 1, 12, &vocab).remove(0);
    let max_gap = rng.random_range(0..4);
    let cfg = PipelineConfig {
        max_gap,
        ..PipelineConfig::default()
    };
    let scorer = CoarseScorer { salt: seed };

    let detected = detect_exhaustive(&sentence, &lex, &cfg).candidates;
    let d: Vec<_> = detected.iter().map(keyed).collect();
    let ordered = filter_ordered(detected);
    let o: Vec<_> = ordered.iter().map(keyed).collect();
    let gapped = filter_max_gappiness(ordered, max_gap);
    let g: Vec<_> = gapped.iter().map(keyed).collect();
    let kept = filter_encoder(gapped.clone(), &sentence, &scorer).map_err(|e| e.to_string())?;
    let k: Vec<_> = kept.iter().map(|(c, _)| keyed(c)).collect();
    if !(subset(&o, &d) && subset(&g, &o) && subset(&k, &g)) {
        return Err(format!("seed {seed}: a filter stage added candidates"));
    }
    if o.iter().any(|(_, _, i)| i.windows(2).any(|w| w[0] >= w[1])) {
        return Err(format!("seed {seed}: out-of-order candidate survived"));
    }

    let expected: Vec<_> = gapped
        .iter()
        .filter(|c| {
            let best = c
                .entry
                .senses
                .iter()
                .map(|s| scorer.value(&sentence, &c.token_indices, &s.id))
                .fold(f64::NEG_INFINITY, f64::max);
            best > scorer.value(&sentence, &c.token_indices, "\u{0}not")
        })
        .map(keyed)
        .collect();
    if expected != k {
        return Err(format!("seed {seed}: encoder filter kept {k:?}, expected {expected:?}"));
    }

    let scored: Vec<ScoredCandidate<'_>> = kept
        .into_iter()
        .map(|(candidate, scores)| ScoredCandidate {
            candidate,
            scores: Some(scores),
        })
        .collect();
    let oracle = greedy_oracle(&scored);
    let resolved = resolve_overlaps(scored);
    let mut seen = BTreeSet::new();
    for p in &resolved {
        for i in &p.token_indices {
            if !seen.insert(*i) {
                return Err(format!("seed {seed}: token {i} in two predictions"));
            }
        }
    }
    let got: Vec<Vec<usize>> = resolved.into_iter().map(|p| p.token_indices).collect();
    if got != oracle {
        return Err(format!("seed {seed}: resolver chose {got:?}, greedy oracle {oracle:?}"));
    }
    Ok(())
}

/// Counts for exact-match, token and link measures by direct enumeration:
/// (mwe tp, n_pred, n_gold), (token tp, fp, fn), (link p_ok, p_all, g_ok, g_all).
pub struct NaiveCounts {
    pub mwe: (usize, usize, usize),
    pub token: (usize, usize, usize),
    pub link: (usize, usize, usize, usize),
}

pub fn naive_counts(gold: &[Vec<Vec<usize>>], pred: &[Vec<Vec<usize>>]) -> NaiveCounts {
    let mut c = NaiveCounts {
        mwe: (0, 0, 0),
        token: (0, 0, 0),
        link: (0, 0, 0, 0),
    };
    for (g, p) in gold.iter().zip(pred) {
        let norm = |x: &Vec<Vec<usize>>| {
            let mut v: Vec<Vec<usize>> = x
                .iter()
                .map(|m| {
                    let mut m = m.clone();
                    m.sort();
                    m.dedup();
                    m
                })
                .collect();
            v.sort();
            v.dedup();
            v
        };
        let (g, p) = (norm(g), norm(p));
        c.mwe.0 += p.iter().filter(|m| g.contains(m)).count();
        c.mwe.1 += p.len();
        c.mwe.2 += g.len();
        let max = g.iter().chain(&p).flatten().max().map_or(0, |m| m + 1);
        for t in 0..max {
            let in_g = g.iter().any(|m| m.contains(&t));
            let in_p = p.iter().any(|m| m.contains(&t));
            match (in_g, in_p) {
                (true, true) => c.token.0 += 1,
                (false, true) => c.token.1 += 1,
                (true, false) => c.token.2 += 1,
                _ => {}
            }
        }
        let together =
            |groups: &Vec<Vec<usize>>, a: usize, b: usize| groups.iter().any(|m| m.contains(&a) && m.contains(&b));
        for m in &p {
            for w in m.windows(2) {
                c.link.1 += 1;
                c.link.0 += usize::from(together(&g, w[0], w[1]));
            }
        }
        for m in &g {
            for w in m.windows(2) {
                c.link.3 += 1;
                c.link.2 += usize::from(together(&p, w[0], w[1]));
            }
        }
    }
    c
}

/// One seeded corpus for the batching contract: across an epoch every
/// example is active exactly once, and every batch but the last has exactly
/// `batch_size` active examples.
pub fn batching_case(seed: u64) -> Result<(), String> {
    use glossmwe::scorer::SenseChoice;
    use glossmwe::training::{build_batches, TrainingExample};

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sentences = rng.random_range(1..30);
    let mut examples = Vec::new();
    for s in 0..sentences {
        for i in 0..rng.random_range(1..9) {
            examples.push(TrainingExample {
                sentence: s,
                target_indices: vec![i],
                senses: Vec::new(),
                gold: SenseChoice::Sense("x".into()),
                is_mwe: false,
            });
        }
    }
    let batch_size = rng.random_range(1..20);
    let batches = build_batches(&examples, batch_size, seed);
    let mut active: Vec<usize> = batches.iter().flat_map(|b| b.active()).collect();
    active.sort_unstable();
    if active != (0..examples.len()).collect::<Vec<_>>() {
        return Err(format!("seed {seed}: active multiset differs from the corpus"));
    }
    for (i, b) in batches.iter().enumerate() {
        let last = i + 1 == batches.len();
        let n = b.active_count();
        if (!last && n != batch_size) || n == 0 || n > batch_size {
            return Err(format!("seed {seed}: batch {i} has {n} active of {batch_size}"));
        }
    }
    Ok(())
}
