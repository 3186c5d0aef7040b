//! Execution helpers: data-parallel maps with a sequential fallback.
//!
//! The crate's hot loops (per-feature Lipschitz constants, candidate
//! scoring, fold/config fan-out) are embarrassingly parallel over
//! read-only inputs. With the `parallel` feature (default) they run on
//! rayon; without it they run sequentially with identical results.
//! Outputs are collected in index order either way, so results are
//! deterministic.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..n`, collecting results in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Map `f` over `0..n`, collecting results in index order.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_indexed_seq(n, f)
}

/// Sequential twin of [`map_indexed`]. Always single-threaded; kept as a
/// public entry point so benchmarks can compare the two directly.
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Map `f` over a slice of work items, collecting results in input order.
#[cfg(feature = "parallel")]
pub fn map_items<I, T, F>(items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    items.par_iter().map(f).collect()
}

/// Map `f` over a slice of work items, collecting results in input order.
#[cfg(not(feature = "parallel"))]
pub fn map_items<I, T, F>(items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    items.iter().map(f).collect()
}
