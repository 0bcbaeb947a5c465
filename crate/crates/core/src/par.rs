//! Chunked data-parallel passes with an ordered reduction.
//!
//! Per-sample work is split into fixed-size chunks. Each chunk produces a
//! partial result and partials are combined in chunk order, so the floating
//! point result is identical whether chunks run on one thread or many. With
//! the `parallel` feature disabled, [`Execution::Parallel`] falls back to the
//! sequential path.

use serde::{Deserialize, Serialize};

/// Samples per chunk. Fixed so that reductions do not depend on thread count.
pub const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Runs `f` on aligned chunks of `input` and `output`; returns one partial per
/// chunk in order.
pub(crate) fn zip_chunks_mut<A, B, R, F>(exec: Execution, input: &[A], output: &mut [B], f: F) -> Vec<R>
where
    A: Sync,
    B: Send,
    R: Send,
    F: Fn(&[A], &mut [B]) -> R + Sync + Send,
{
    debug_assert_eq!(input.len(), output.len());
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return input
            .par_chunks(CHUNK)
            .zip(output.par_chunks_mut(CHUNK))
            .map(|(a, b)| f(a, b))
            .collect();
    }
    let _ = exec;
    input
        .chunks(CHUNK)
        .zip(output.chunks_mut(CHUNK))
        .map(|(a, b)| f(a, b))
        .collect()
}

/// Runs `f` on aligned read-only chunks of two slices.
pub(crate) fn zip_chunks<A, B, R, F>(exec: Execution, a: &[A], b: &[B], f: F) -> Vec<R>
where
    A: Sync,
    B: Sync,
    R: Send,
    F: Fn(&[A], &[B]) -> R + Sync + Send,
{
    debug_assert_eq!(a.len(), b.len());
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return a
            .par_chunks(CHUNK)
            .zip(b.par_chunks(CHUNK))
            .map(|(x, y)| f(x, y))
            .collect();
    }
    let _ = exec;
    a.chunks(CHUNK).zip(b.chunks(CHUNK)).map(|(x, y)| f(x, y)).collect()
}

/// Maps independent jobs, preserving input order in the output.
pub fn map_jobs<T, R, F>(exec: Execution, jobs: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return jobs.par_iter().map(&f).collect();
    }
    let _ = exec;
    jobs.iter().map(f).collect()
}
