//! Execution policy for data-parallel batch work.
//!
//! With the `parallel` feature (on by default) [`Execution::Parallel`] runs on
//! the rayon global pool. Without it every call is sequential, so callers can
//! keep requesting `Parallel` unconditionally.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// True when work will actually be spread over threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Maps `f` over `items`, preserving order.
pub fn map<T, U, F>(exec: Execution, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Maps `f` over `0..n`, preserving order.
pub fn map_range<U, F>(exec: Execution, n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Evaluates `f` for every seed in `seeds` and returns the results in seed
/// order. Used by Monte-Carlo recovery studies.
pub fn over_seeds<U, F>(exec: Execution, seeds: std::ops::Range<u64>, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(u64) -> U + Sync + Send,
{
    let start = seeds.start;
    let n = seeds.end.saturating_sub(start) as usize;
    map_range(exec, n, |i| f(start + i as u64))
}
