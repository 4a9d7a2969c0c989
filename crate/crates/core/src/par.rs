//! Data-parallel helpers. With the `parallel` feature these fan out over the
//! rayon global pool; without it, or with [`Execution::Sequential`], they run
//! on the calling thread. Results are always returned in input order.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether work will actually be spread over threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

pub fn map<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Maps over `0..n`.
pub fn map_range<R, F>(exec: Execution, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Items per fold group in [`map_reduce`].
pub const REDUCE_CHUNK: usize = 16;

/// Maps then folds with `combine`. Items are folded in fixed groups of
/// [`REDUCE_CHUNK`] and the group results are folded left to right, on both
/// paths, so floating-point results do not depend on scheduling or on the
/// execution mode.
pub fn map_reduce<T, R, F, C, I>(exec: Execution, items: &[T], identity: I, f: F, combine: C) -> R
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
    C: Fn(R, R) -> R + Sync + Send,
    I: Fn() -> R + Sync + Send,
{
    let fold_chunk = |chunk: &[T]| chunk.iter().map(&f).fold(identity(), &combine);
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        let partial: Vec<R> = items.par_chunks(REDUCE_CHUNK).map(fold_chunk).collect();
        return partial.into_iter().fold(identity(), &combine);
    }
    let _ = exec;
    items.chunks(REDUCE_CHUNK).map(fold_chunk).fold(identity(), &combine)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_paths_agree() {
        let xs: Vec<u64> = (0..1000).collect();
        let a = map(Execution::Sequential, &xs, |x| x * x);
        let b = map(Execution::Parallel, &xs, |x| x * x);
        assert_eq!(a, b);
        let s = map_reduce(Execution::Parallel, &xs, || 0, |x| *x, |a, b| a + b);
        assert_eq!(s, 499_500);
        assert_eq!(map_range(Execution::Parallel, 4, |i| i), vec![0, 1, 2, 3]);
    }

    #[test]
    fn float_reduction_is_mode_independent() {
        let xs: Vec<f64> = (0..1000).map(|i| 1.0 / (i as f64 + 0.3)).collect();
        let seq = map_reduce(Execution::Sequential, &xs, || 0.0, |x| *x, |a, b| a + b);
        for _ in 0..5 {
            let par = map_reduce(Execution::Parallel, &xs, || 0.0, |x| *x, |a, b| a + b);
            assert_eq!(seq.to_bits(), par.to_bits());
        }
    }
}
