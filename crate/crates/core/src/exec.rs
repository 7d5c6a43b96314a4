//! Data-parallel execution helpers.
//!
//! Every grid-wide loop in the crate goes through these helpers. With the
//! `parallel` feature the work is spread over the rayon pool; without it (or
//! after [`set_parallel(false)`]) the same closures run on the calling thread.
//!
//! Reductions are always evaluated over fixed-size chunks whose partial
//! results are combined sequentially in chunk order, so floating-point sums
//! are bit-identical regardless of thread count or execution mode.

use std::sync::atomic::{AtomicBool, Ordering};

/// Chunk length used for deterministic reductions and chunked maps.
pub const CHUNK: usize = 2048;

/// Below this many elements the parallel path is not worth its overhead.
const PAR_THRESHOLD: usize = 4096;

static PARALLEL: AtomicBool = AtomicBool::new(cfg!(feature = "parallel"));

/// Enables or disables the parallel path at runtime.
///
/// Has no effect when the crate was built without the `parallel` feature.
pub fn set_parallel(on: bool) {
    PARALLEL.store(on && cfg!(feature = "parallel"), Ordering::Relaxed);
}

pub fn is_parallel() -> bool {
    PARALLEL.load(Ordering::Relaxed)
}

#[inline]
fn use_par(len: usize) -> bool {
    is_parallel() && len >= PAR_THRESHOLD
}

/// Builds a vector of `len` elements from an index function.
pub fn map_indexed<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if use_par(len) {
        use rayon::prelude::*;
        return (0..len).into_par_iter().map(f).collect();
    }
    let _ = use_par;
    (0..len).map(f).collect()
}

/// Applies `f(index, &mut value)` to every element.
pub fn for_each_mut<T, F>(data: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if use_par(data.len()) {
        use rayon::prelude::*;
        data.par_iter_mut().enumerate().for_each(|(i, v)| f(i, v));
        return;
    }
    data.iter_mut().enumerate().for_each(|(i, v)| f(i, v));
}

/// Calls `f(chunk_index, chunk)` on consecutive `chunk`-sized pieces.
pub fn for_each_chunk_mut<T, F>(data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if use_par(data.len()) {
        use rayon::prelude::*;
        data.par_chunks_mut(chunk)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
        return;
    }
    data.chunks_mut(chunk)
        .enumerate()
        .for_each(|(i, c)| f(i, c));
}

/// Maps a slice of independent work items (trials, field components,
/// schedule entries). Order of the output matches the input.
pub fn map_items<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() && items.len() > 1 {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    items.iter().map(f).collect()
}

/// Deterministic sum of `f(i)` for `i in 0..len`.
pub fn sum<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let n_chunks = len.div_ceil(CHUNK);
    let partial = map_indexed(n_chunks, |c| {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(len);
        (lo..hi).map(&f).sum::<f64>()
    });
    partial.into_iter().sum()
}

/// Maximum of `f(i)`; NaN propagates. Returns `-inf` for `len == 0`.
pub fn max<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let n_chunks = len.div_ceil(CHUNK);
    let partial = map_indexed(n_chunks, |c| {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(len);
        (lo..hi).map(&f).fold(f64::NEG_INFINITY, nan_max)
    });
    partial.into_iter().fold(f64::NEG_INFINITY, nan_max)
}

/// Minimum of `f(i)`; NaN propagates. Returns `+inf` for `len == 0`.
pub fn min<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    -max(len, |i| -f(i))
}

fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_is_mode_independent() {
        let f = |i: usize| ((i as f64) * 0.37).sin() * 1e-3 + 1.0 / (1.0 + i as f64);
        let n = 100_003;
        set_parallel(true);
        let a = sum(n, f);
        set_parallel(false);
        let b = sum(n, f);
        set_parallel(cfg!(feature = "parallel"));
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn max_min_and_nan() {
        let v = [3.0, -1.0, 7.5, 2.0];
        assert_eq!(max(4, |i| v[i]), 7.5);
        assert_eq!(min(4, |i| v[i]), -1.0);
        assert!(max(2, |i| if i == 1 { f64::NAN } else { 0.0 }).is_nan());
        assert_eq!(max(0, |_| 0.0), f64::NEG_INFINITY);
    }

    #[test]
    fn chunked_map_covers_everything() {
        let mut v = vec![0usize; 10_000];
        for_each_chunk_mut(&mut v, 7, |c, chunk| {
            for (j, x) in chunk.iter_mut().enumerate() {
                *x = c * 7 + j;
            }
        });
        assert!(v.iter().enumerate().all(|(i, &x)| i == x));
    }
}
