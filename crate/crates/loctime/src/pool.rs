use loctime_core::ReplicaRunner;
use rayon::prelude::*;
use rayon::ThreadPool;

/// Replica runner on a dedicated rayon pool. Results come back in replica
/// order and every replica seeds its own stream, so output does not depend
/// on the number of workers.
pub struct PoolRunner {
    pool: ThreadPool,
}

impl PoolRunner {
    pub fn new(workers: usize) -> Self {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build().expect("thread pool");
        PoolRunner { pool }
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl ReplicaRunner for PoolRunner {
    fn map<T, F>(&self, reps: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..reps).into_par_iter().map(f).collect())
    }
}
