//! Data-parallel evaluation with a sequential fallback.
//!
//! Every parallel loop in the crate goes through [`map_indexed`], which
//! returns results in index order whatever the scheduling. Without the
//! `parallel` feature, [`Exec::Parallel`] runs sequentially.

/// Execution strategy for batch evaluations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Exec {
    #[default]
    Parallel,
    Sequential,
}

impl Exec {
    /// Whether this build can actually run work in parallel.
    pub const fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }
}

/// `(0..n).map(f)` collected in index order.
pub fn map_indexed<T, F>(exec: Exec, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}

/// Like [`map_indexed`] but stops at the first error (in index order).
pub fn try_map_indexed<T, E, F>(exec: Exec, n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    map_indexed(exec, n, f).into_iter().collect()
}
