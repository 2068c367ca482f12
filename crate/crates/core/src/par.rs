//! Data-parallel helpers. With the `parallel` feature the loops run on the
//! rayon pool; without it they fall back to plain sequential iterators.
//!
//! Every helper writes disjoint outputs, so results are bit-identical
//! between the two builds and across thread counts.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Calls `op(k, chunk)` for each consecutive chunk of `len` items.
pub fn for_each_chunk<T, F>(data: &mut [T], len: usize, op: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    data.par_chunks_mut(len)
        .enumerate()
        .for_each(|(k, c)| op(k, c));
    #[cfg(not(feature = "parallel"))]
    data.chunks_mut(len).enumerate().for_each(|(k, c)| op(k, c));
}

/// Evaluates `op` on `0..n` and collects in index order.
pub fn map_range<T, F>(n: usize, op: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(op).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(op).collect()
    }
}

/// Sum of `op(k)` over `0..n`, accumulated sequentially in index order.
pub fn ordered_sum<F>(n: usize, op: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    map_range(n, op).into_iter().sum()
}

/// Maximum of `op(k)` over `0..n` (0 for an empty range).
pub fn max_over<F>(n: usize, op: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    map_range(n, op).into_iter().fold(0.0, f64::max)
}

/// True when this build dispatches to rayon.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

/// Caps the global pool at `n` workers (`0` keeps rayon's default). Returns
/// false when the pool was already running; always true in sequential builds.
pub fn init_threads(n: usize) -> bool {
    #[cfg(feature = "parallel")]
    {
        n == 0 || rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_ok()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = n;
        true
    }
}

/// A dedicated pool of workers; a no-op wrapper in sequential builds.
pub struct Workers {
    #[cfg(feature = "parallel")]
    pool: rayon::ThreadPool,
}

impl Workers {
    /// `n = 0` picks rayon's default worker count.
    pub fn new(n: usize) -> Self {
        #[cfg(feature = "parallel")]
        {
            Workers {
                pool: rayon::ThreadPoolBuilder::new().num_threads(n).build().expect("thread pool"),
            }
        }
        #[cfg(not(feature = "parallel"))]
        {
            let _ = n;
            Workers {}
        }
    }

    pub fn count(&self) -> usize {
        #[cfg(feature = "parallel")]
        {
            self.pool.current_num_threads()
        }
        #[cfg(not(feature = "parallel"))]
        {
            1
        }
    }

    pub fn run<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        #[cfg(feature = "parallel")]
        {
            self.pool.install(f)
        }
        #[cfg(not(feature = "parallel"))]
        {
            f()
        }
    }
}

/// Runs `f` on a dedicated pool of `n` workers.
pub fn with_threads<R: Send>(n: usize, f: impl FnOnce() -> R + Send) -> R {
    Workers::new(n).run(f)
}
