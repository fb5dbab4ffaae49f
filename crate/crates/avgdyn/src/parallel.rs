//! Thread-pool trial runner.

use avgdyn_core::analysis::TrialRunner;
use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

/// Environment variable consulted when no worker count is given.
pub const WORKERS_ENV: &str = "AVGDYN_WORKERS";

/// Explicit count, else `AVGDYN_WORKERS`, else one worker per core.
pub fn resolve_workers(flag: Option<usize>) -> usize {
    flag.or_else(|| std::env::var(WORKERS_ENV).ok()?.trim().parse().ok())
        .filter(|&w| w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs trials on a private pool; results come back in trial order.
pub struct Parallel {
    pool: ThreadPool,
}

impl Parallel {
    pub fn new(workers: usize) -> Self {
        let pool = ThreadPoolBuilder::new().num_threads(workers.max(1)).build().expect("thread pool");
        Parallel { pool }
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl TrialRunner for Parallel {
    fn run<T, F>(&self, count: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        self.pool.install(|| (0..count).into_par_iter().map(f).collect())
    }
}
