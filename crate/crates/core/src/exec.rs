//! Data-parallel helpers that degrade to sequential iteration when the
//! `parallel` feature is off or the caller asks for sequential execution.
//!
//! Results are always returned in input order, so callers observe the same
//! values whichever path ran.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Whether this build can run work on a thread pool.
pub const PARALLEL_AVAILABLE: bool = cfg!(feature = "parallel");

/// Apply `f` to every element, returning the lowest-index error if any fail.
pub fn try_for_each_mut<T, E, F>(items: &mut [T], parallel: bool, f: F) -> Result<(), E>
where
    T: Send,
    E: Send,
    F: Fn(usize, &mut T) -> Result<(), E> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel && items.len() > 1 {
        let results: Vec<Result<(), E>> = items
            .par_iter_mut()
            .enumerate()
            .map(|(i, item)| f(i, item))
            .collect();
        return results.into_iter().collect();
    }
    let _ = parallel;
    items.iter_mut().enumerate().try_for_each(|(i, item)| f(i, item))
}

/// Map `f` over `items`, preserving order.
pub fn map<T, R, F>(items: &[T], parallel: bool, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        return items.par_iter().map(f).collect();
    }
    let _ = parallel;
    items.iter().map(f).collect()
}
