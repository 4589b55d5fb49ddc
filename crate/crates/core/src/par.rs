//! Order-preserving data-parallel helpers.
//!
//! Every helper returns results in input order, so reductions performed by the
//! caller over the returned vector are independent of the worker count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `items`, returning results in input order.
#[cfg(feature = "parallel")]
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

/// Map `f` over fixed-size chunks of `items`. The chunking does not depend on
/// the number of workers.
#[cfg(feature = "parallel")]
pub fn map_chunks<T, R, F>(items: &[T], chunk: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&[T]) -> R + Sync + Send,
{
    items.par_chunks(chunk.max(1)).map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_chunks<T, R, F>(items: &[T], chunk: usize, f: F) -> Vec<R>
where
    F: Fn(&[T]) -> R,
{
    items.chunks(chunk.max(1)).map(f).collect()
}

/// Run `f` on a pool capped at `workers` threads (`None` = machine default).
#[cfg(feature = "parallel")]
pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match workers {
        Some(n) => match rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
        {
            Ok(pool) => pool.install(f),
            Err(err) => {
                log::warn!("could not build a {n}-thread pool ({err}); using the global pool");
                f()
            }
        },
        None => f(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_workers<R>(_workers: Option<usize>, f: impl FnOnce() -> R) -> R {
    f()
}
