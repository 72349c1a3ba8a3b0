//! Index-addressed parallel maps.
//!
//! Results are always written to the slot of their input index, so outputs do
//! not depend on the number of workers or on scheduling.

use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

/// Where independent per-index work runs.
pub enum Executor {
    /// Calling thread only.
    Sequential,
    /// Rayon's global pool.
    Global,
    /// A dedicated pool with a fixed number of threads.
    Pool(ThreadPool),
}

impl Executor {
    /// `0` selects the global pool, `1` runs inline, `n > 1` builds a pool.
    pub fn new(workers: usize) -> Self {
        match workers {
            0 => Executor::Global,
            1 => Executor::Sequential,
            n => match ThreadPoolBuilder::new().num_threads(n).build() {
                Ok(pool) => Executor::Pool(pool),
                Err(e) => {
                    log::warn!("falling back to the global pool: {e}");
                    Executor::Global
                }
            },
        }
    }

    pub fn map<R, F>(&self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        match self {
            Executor::Sequential => (0..n).map(f).collect(),
            Executor::Global => (0..n).into_par_iter().map(f).collect(),
            Executor::Pool(pool) => pool.install(|| (0..n).into_par_iter().map(f).collect()),
        }
    }

    /// Like [`map`](Self::map) but stops at the first error in index order.
    pub fn try_map<R, E, F>(&self, n: usize, f: F) -> Result<Vec<R>, E>
    where
        R: Send,
        E: Send,
        F: Fn(usize) -> Result<R, E> + Sync + Send,
    {
        self.map(n, f).into_iter().collect()
    }
}
