//! Executors for the per-user phases.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rayon::ThreadPool;

use ganc_core::rerank::UserExecutor;

use crate::error::{Error, Result};

/// Spreads users over a rayon pool. Results come back in input order, so the
/// output never depends on the thread count.
#[derive(Debug)]
pub struct RayonExecutor {
    pool: ThreadPool,
}

impl RayonExecutor {
    /// `threads = 0` lets rayon pick one thread per core.
    pub fn new(threads: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Usage(format!("cannot start {threads} worker threads: {e}")))?;
        Ok(RayonExecutor { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl UserExecutor for RayonExecutor {
    fn map_users<T, F>(&self, users: &[usize], f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        self.pool
            .install(|| users.par_iter().map(|&u| f(u)).collect())
    }
}

/// Visits users in a seeded random order on the calling thread, then restores
/// input order. Used to check that per-user work is order-independent.
#[derive(Debug, Clone, Copy)]
pub struct PermutedExecutor {
    pub seed: u64,
}

impl UserExecutor for PermutedExecutor {
    fn map_users<T, F>(&self, users: &[usize], f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        let mut order: Vec<usize> = (0..users.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(self.seed));
        let mut slots: Vec<Option<T>> = (0..users.len()).map(|_| None).collect();
        for k in order {
            slots[k] = Some(f(users[k]));
        }
        slots
            .into_iter()
            .map(|s| s.expect("every slot visited"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Mutex;

    #[test]
    fn outputs_follow_input_order() {
        let users = [5, 1, 4, 2];
        let visited = Mutex::new(Vec::new());
        let out = PermutedExecutor { seed: 9 }.map_users(&users, |u| {
            visited.lock().unwrap().push(u);
            u * 10
        });
        assert_eq!(out, vec![50, 10, 40, 20]);
        let mut v = visited.into_inner().unwrap();
        v.sort_unstable();
        assert_eq!(v, vec![1, 2, 4, 5]);

        let pool = RayonExecutor::new(3).unwrap();
        assert_eq!(pool.threads(), 3);
        assert_eq!(pool.map_users(&users, |u| u + 1), vec![6, 2, 5, 3]);
    }
}
