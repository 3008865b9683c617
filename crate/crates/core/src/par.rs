//! Data-parallel fan-out with a sequential fallback.
//!
//! Independent work items (per-prime enumeration runs, per-prime solves,
//! per-point singularity analyses) are mapped through [`par_map`]. With the
//! `parallel` feature the map runs on the rayon pool; without it the same
//! closure runs sequentially. Both paths preserve input order, so results
//! are byte-identical regardless of scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Order-preserving map over independent items.
#[cfg(feature = "parallel")]
pub fn par_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    items.into_par_iter().map(f).collect()
}

/// Order-preserving map over independent items (sequential build).
#[cfg(not(feature = "parallel"))]
pub fn par_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    items.into_iter().map(f).collect()
}

/// Cap the rayon worker pool; no-op without the `parallel` feature or if a
/// global pool already exists.
pub fn limit_threads(n: usize) {
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
}
