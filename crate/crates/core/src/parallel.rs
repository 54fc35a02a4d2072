//! Thin shim over the optional data-parallel runtime.
//!
//! With the `parallel` feature (default) the heavy loops — parameter grids
//! and mixed-state trajectory sums — fan out over a rayon pool; without it
//! the same helpers run plain sequential loops, so callers never branch on
//! the feature themselves. A runtime [`ExecMode`] lets benchmarks force the
//! sequential path even in a parallel build.

/// Runtime choice of execution strategy for the data-parallel regions.
/// `Parallel` uses the worker pool when the crate is built with the
/// `parallel` feature and degrades to a plain loop otherwise; `Sequential`
/// always runs the plain loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    #[default]
    Parallel,
    Sequential,
}

impl ExecMode {
    pub(crate) fn is_parallel(self) -> bool {
        matches!(self, ExecMode::Parallel)
    }
}

impl std::fmt::Display for ExecMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ExecMode::Parallel => "parallel",
            ExecMode::Sequential => "sequential",
        })
    }
}

/// Size the global worker pool. Call before the first parallel region; later
/// calls are ignored (the pool is process-global). No-op without the
/// `parallel` feature.
#[cfg(feature = "parallel")]
pub fn configure_threads(threads: usize) {
    if threads == 0 {
        return;
    }
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
}

#[cfg(not(feature = "parallel"))]
pub fn configure_threads(_threads: usize) {}

/// Map `f` over `0..n`, preserving order.
#[cfg(feature = "parallel")]
pub(crate) fn indexed_map<U: Send>(
    mode: ExecMode,
    n: usize,
    f: impl Fn(usize) -> U + Sync + Send,
) -> Vec<U> {
    use rayon::prelude::*;
    if mode.is_parallel() {
        (0..n).into_par_iter().map(f).collect()
    } else {
        (0..n).map(f).collect()
    }
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn indexed_map<U: Send>(
    _mode: ExecMode,
    n: usize,
    f: impl Fn(usize) -> U + Sync + Send,
) -> Vec<U> {
    (0..n).map(f).collect()
}

/// Fold `0..n` into an accumulator, merging per-worker partials with `merge`.
#[cfg(feature = "parallel")]
pub(crate) fn indexed_fold<A: Send>(
    mode: ExecMode,
    n: usize,
    init: impl Fn() -> A + Sync + Send,
    fold: impl Fn(A, usize) -> A + Sync + Send,
    merge: impl Fn(A, A) -> A + Sync + Send,
) -> A {
    use rayon::prelude::*;
    if mode.is_parallel() {
        (0..n)
            .into_par_iter()
            .fold(&init, &fold)
            .reduce(&init, &merge)
    } else {
        (0..n).fold(init(), fold)
    }
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn indexed_fold<A: Send>(
    _mode: ExecMode,
    n: usize,
    init: impl Fn() -> A + Sync + Send,
    fold: impl Fn(A, usize) -> A + Sync + Send,
    _merge: impl Fn(A, A) -> A + Sync + Send,
) -> A {
    (0..n).fold(init(), fold)
}
