//! Data-parallel helpers with a sequential fallback.
//!
//! Every reduction here splits its index range into fixed-size chunks, sums
//! each chunk left to right, then adds the chunk partials in chunk order. The
//! grouping does not depend on the thread count, so sequential and parallel
//! execution produce bit-identical floating-point results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Number of indices folded into one partial sum.
pub const CHUNK: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    Parallel,
}

impl Default for Parallelism {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Parallelism::Parallel
        } else {
            Parallelism::Sequential
        }
    }
}

impl Parallelism {
    /// True when work will actually be spread over the rayon pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Parallelism::Parallel
    }
}

fn chunk_sum<F>(len: usize, c: usize, f: &F) -> f64
where
    F: Fn(usize) -> f64,
{
    let start = c * CHUNK;
    let end = (start + CHUNK).min(len);
    let mut acc = 0.0;
    for i in start..end {
        acc += f(i);
    }
    acc
}

/// Deterministic sum of `f(0) + ... + f(len - 1)`.
pub fn sum<F>(len: usize, mode: Parallelism, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = len.div_ceil(CHUNK);
    if chunks <= 1 || !mode.is_parallel() {
        return (0..chunks).map(|c| chunk_sum(len, c, &f)).sum();
    }
    #[cfg(feature = "parallel")]
    {
        let partials: Vec<f64> = (0..chunks)
            .into_par_iter()
            .map(|c| chunk_sum(len, c, &f))
            .collect();
        partials.into_iter().sum()
    }
    #[cfg(not(feature = "parallel"))]
    unreachable!()
}

/// Order-preserving map over `0..len`.
pub fn map<T, F>(len: usize, mode: Parallelism, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if !mode.is_parallel() || len < 2 {
        return (0..len).map(f).collect();
    }
    #[cfg(feature = "parallel")]
    {
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    unreachable!()
}

/// Order-preserving map over a slice.
pub fn map_slice<S, T, F>(items: &[S], mode: Parallelism, f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    map(items.len(), mode, |i| f(&items[i]))
}
