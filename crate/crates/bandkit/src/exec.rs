//! Execution strategy for the data-parallel sweeps.
//!
//! With the `parallel` feature (default) the helpers below fan work out over
//! rayon; without it they run plain sequential loops with identical results.
//! [`force_sequential`] switches the built-in parallelism off at runtime,
//! which the benchmark suite uses to compare both paths in a single build.

use std::sync::atomic::{AtomicBool, Ordering};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

static FORCE_SEQUENTIAL: AtomicBool = AtomicBool::new(false);

/// Globally disable (or re-enable) the parallel execution paths at runtime.
pub fn force_sequential(on: bool) {
    FORCE_SEQUENTIAL.store(on, Ordering::SeqCst);
}

/// Whether the parallel paths are compiled in and currently active.
pub fn parallel_active() -> bool {
    cfg!(feature = "parallel") && !FORCE_SEQUENTIAL.load(Ordering::SeqCst)
}

/// Does `pred` hold for any index in `0..n`?
///
/// The boolean outcome is deterministic; only the scan order varies.
pub(crate) fn any_index<F>(n: usize, pred: F) -> bool
where
    F: Fn(usize) -> bool + Send + Sync,
{
    #[cfg(feature = "parallel")]
    if parallel_active() {
        return (0..n).into_par_iter().any(pred);
    }
    (0..n).any(pred)
}

/// Smallest `f(i)` over `0..n`, evaluating every index.
///
/// Used where a *minimal* witness is required: parallel tasks each produce
/// candidates and a deterministic reduction keeps the least one.
pub(crate) fn min_map<T, F>(n: usize, f: F) -> Option<T>
where
    T: Ord + Send,
    F: Fn(usize) -> Option<T> + Send + Sync,
{
    #[cfg(feature = "parallel")]
    if parallel_active() {
        return (0..n).into_par_iter().filter_map(f).min();
    }
    (0..n).filter_map(f).min()
}

/// Order-preserving flat-map over `0..n` (deterministic concatenation).
pub(crate) fn flat_map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> Vec<T> + Send + Sync,
{
    #[cfg(feature = "parallel")]
    if parallel_active() {
        return (0..n).into_par_iter().flat_map_iter(f).collect();
    }
    (0..n).flat_map(f).collect()
}

/// Order-preserving map over a slice.
pub(crate) fn map_slice<S, T, F>(items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Send + Sync,
{
    #[cfg(feature = "parallel")]
    if parallel_active() {
        return items.par_iter().map(f).collect();
    }
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_override_round_trip() {
        let before = parallel_active();
        force_sequential(true);
        assert!(!parallel_active());
        assert!(any_index(10, |i| i == 7));
        assert!(!any_index(10, |i| i > 20));
        assert_eq!(min_map(5, |i| if i >= 2 { Some(i) } else { None }), Some(2));
        force_sequential(false);
        assert_eq!(parallel_active(), cfg!(feature = "parallel"));
        let _ = before;
    }

    #[test]
    fn helpers_agree_across_modes() {
        let seq = flat_map_indexed(4, |i| vec![i, i * i]);
        force_sequential(true);
        let seq2 = flat_map_indexed(4, |i| vec![i, i * i]);
        force_sequential(false);
        assert_eq!(seq, seq2);
        assert_eq!(map_slice(&[1, 2, 3], |x| x * 2), vec![2, 4, 6]);
    }
}
