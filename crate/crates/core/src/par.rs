//! Order-preserving parallel map. Work items are pure functions of their
//! index, so the output does not depend on the thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

pub fn try_map_indexed<T, E, F>(n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Splits `0..n` into fixed chunks, maps each chunk, and folds the partial
/// results left to right. Floating sums come out identical for any schedule.
pub fn fold_chunks<A, F, M>(n: usize, chunk: usize, map: F, merge: M) -> Option<A>
where
    A: Send,
    F: Fn(std::ops::Range<usize>) -> A + Sync + Send,
    M: Fn(A, A) -> A,
{
    let chunk = chunk.max(1);
    let parts = map_indexed(n.div_ceil(chunk), |c| {
        map(c * chunk..((c + 1) * chunk).min(n))
    });
    parts.into_iter().reduce(merge)
}
