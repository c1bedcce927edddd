//! Replication fan-out. With the `parallel` feature, [`Execution::Parallel`]
//! runs on the rayon pool; without it every execution is serial. Results are
//! always returned in index order, so aggregation is identical either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether this build can actually run in parallel.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Maps `f` over `range` and collects in order.
pub fn map_range<T, F>(execution: Execution, range: std::ops::Range<u64>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if execution.is_parallel() {
        return range.into_par_iter().map(f).collect();
    }
    let _ = execution;
    range.map(f).collect()
}
