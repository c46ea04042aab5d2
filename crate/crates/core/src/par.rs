//! Deterministic parallel map over index chunks.
//!
//! Work is split into fixed-size chunks that do not depend on the number of
//! worker threads; results come back in chunk order so floating-point
//! reductions see the same operand order under any pool size.

use std::ops::Range;

/// Paths per work unit.
pub const CHUNK: usize = 64;

pub fn map_chunks<T, F>(n: usize, chunk: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
{
    let chunk = chunk.max(1);
    let ranges: Vec<Range<usize>> = (0..n.div_ceil(chunk)).map(|c| c * chunk..((c + 1) * chunk).min(n)).collect();
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        ranges.into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        ranges.into_iter().map(f).collect()
    }
}

/// Apply `f` to every index, preserving order.
pub fn map_indices<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_chunks(n, CHUNK, |r| r.map(&f).collect::<Vec<T>>()).into_iter().flatten().collect()
}
