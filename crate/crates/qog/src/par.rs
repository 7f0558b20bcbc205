//! Data-parallel helpers with a sequential fallback.
//!
//! With the default `parallel` feature the mapping helpers fan out over
//! rayon; built with `--no-default-features` they degrade to plain iterator
//! loops with identical results (outputs are ordered by index, and every
//! worklist item is a pure computation).

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map over a slice, in parallel when the `parallel` feature is enabled.
#[cfg(feature = "parallel")]
pub fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.par_iter().map(f).collect()
}

/// Map over a slice, in parallel when the `parallel` feature is enabled.
#[cfg(not(feature = "parallel"))]
pub fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Always-sequential map, kept available so benchmarks can compare.
pub fn map_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Run two closures, concurrently when the `parallel` feature is enabled.
#[cfg(feature = "parallel")]
pub fn join<A, B, RA, RB>(a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA + Send,
    B: FnOnce() -> RB + Send,
    RA: Send,
    RB: Send,
{
    rayon::join(a, b)
}

/// Run two closures, concurrently when the `parallel` feature is enabled.
#[cfg(not(feature = "parallel"))]
pub fn join<A, B, RA, RB>(a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA,
    B: FnOnce() -> RB,
{
    (a(), b())
}

/// Run `f` inside a worker pool of the requested size. `None` uses the
/// default pool; without the `parallel` feature the request is ignored.
#[cfg(feature = "parallel")]
pub fn with_workers<R, F>(workers: Option<usize>, f: F) -> R
where
    F: FnOnce() -> R + Send,
    R: Send,
{
    match workers {
        Some(k) if k > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .expect("worker pool construction cannot fail for k > 0")
            .install(f),
        _ => f(),
    }
}

/// Run `f` inside a worker pool of the requested size. `None` uses the
/// default pool; without the `parallel` feature the request is ignored.
#[cfg(not(feature = "parallel"))]
pub fn with_workers<R, F>(workers: Option<usize>, f: F) -> R
where
    F: FnOnce() -> R,
{
    let _ = workers;
    f()
}
