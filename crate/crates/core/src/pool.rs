//! Worker pools. Results never depend on the number of workers: parallel maps
//! are collected in index order and reduced sequentially.

use rayon::ThreadPoolBuilder;

/// Runs `f` on a pool of `workers` threads (`0` = one per core).
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    match ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}
