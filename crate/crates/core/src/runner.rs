//! Replica scheduling.

use alloc::vec::Vec;

use crate::rng::RngSeed;

/// Maps a function over replica indices, returning results in index order.
///
/// Implementations may evaluate replicas concurrently; because each replica
/// derives its generator from its own index, the output is independent of
/// the schedule.
pub trait ReplicaRunner: Sync {
    fn map<T, F>(&self, reps: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Single-threaded runner.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl ReplicaRunner for Sequential {
    fn map<T, F>(&self, reps: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..reps).map(f).collect()
    }
}

/// Substream for replica `i` under `seed`.
pub fn replica_seed(seed: u64, replica: usize) -> RngSeed {
    RngSeed::new(seed, replica as u64)
}
