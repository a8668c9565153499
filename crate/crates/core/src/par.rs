//! Parallel map helpers with a sequential fallback.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Execution mode requested by callers. `Parallel` degrades to sequential
/// when the crate is built without the `parallel` feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

#[cfg(feature = "parallel")]
pub fn map_items_parallel<T, R, F>(items: &[T], func: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.par_iter().map(func).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_items_parallel<T, R, F>(items: &[T], func: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(func).collect()
}

pub fn map_items<T, R, F>(items: &[T], exec: Execution, func: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        Execution::Parallel => map_items_parallel(items, func),
        Execution::Sequential => items.iter().map(func).collect(),
    }
}
