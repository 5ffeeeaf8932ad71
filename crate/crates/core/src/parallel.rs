//! Index-ordered parallel map. Results land at their input position, so
//! output never depends on scheduling.

use crate::error::Result;

#[cfg(feature = "parallel")]
pub fn map_indexed<T, S, I, F>(len: usize, init: I, f: F) -> Vec<T>
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..len).into_par_iter().map_init(init, |state, i| f(state, i)).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, S, I, F>(len: usize, init: I, f: F) -> Vec<T>
where
    I: Fn() -> S,
    F: Fn(&mut S, usize) -> T,
{
    let mut state = init();
    (0..len).map(|i| f(&mut state, i)).collect()
}

/// Runs `op` on a pool of `workers` threads; 0 keeps the ambient pool.
#[cfg(feature = "parallel")]
pub fn with_workers<T: Send>(workers: usize, op: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(op());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| crate::error::invalid("workers", e.to_string()))?;
    Ok(pool.install(op))
}

#[cfg(not(feature = "parallel"))]
pub fn with_workers<T>(_workers: usize, op: impl FnOnce() -> T) -> Result<T> {
    Ok(op())
}

pub fn available_workers() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}
