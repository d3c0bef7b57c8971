#![allow(dead_code)]

use ganc_core::rerank::UserExecutor;
use ganc_core::scoring::ScoreMatrix;
use ganc_core::{Rating, SplitDataset};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Instance {
    pub split: SplitDataset,
    pub theta: Vec<f64>,
    pub arec: ScoreMatrix,
}

/// Random split with `1..=max_users` users over at most `max_items` items,
/// where every user keeps at least `n` unseen items. Some users also get
/// test ratings on unseen items.
pub fn random_instance(seed: u64, max_users: usize, max_items: usize, n: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let nu = rng.gen_range(1..=max_users);
        let ni = rng.gen_range((n + 1).max(2)..=max_items);
        let mut train = Vec::new();
        let mut test = Vec::new();
        for u in 0..nu {
            let mut items: Vec<u64> = (0..ni as u64).collect();
            items.shuffle(&mut rng);
            let k = rng.gen_range(1..=ni - n);
            for &i in &items[..k] {
                train.push(Rating::new(
                    u as u64 + 1,
                    i + 10,
                    rng.gen_range(1..=5) as f64,
                ));
            }
            for &i in &items[k..] {
                if rng.gen_bool(0.3) {
                    test.push(Rating::new(
                        u as u64 + 1,
                        i + 10,
                        rng.gen_range(1..=5) as f64,
                    ));
                }
            }
        }
        let split = SplitDataset::from_parts(train, test).expect("non-empty train");
        if (0..split.num_users()).any(|u| split.unseen_items(u).len() < n) {
            continue;
        }
        let theta = (0..split.num_users()).map(|_| rng.gen::<f64>()).collect();
        let values = (0..split.num_users() * split.num_items())
            .map(|_| rng.gen::<f64>())
            .collect();
        let arec = ScoreMatrix::new(split.num_users(), split.num_items(), values).unwrap();
        return Instance { split, theta, arec };
    }
}

/// Visits users in a seeded shuffled order, returning results in input order.
pub struct Shuffled(pub u64);

impl UserExecutor for Shuffled {
    fn map_users<T, F>(&self, users: &[usize], f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        let mut order: Vec<usize> = (0..users.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(self.0));
        let mut out: Vec<Option<T>> = (0..users.len()).map(|_| None).collect();
        for k in order {
            out[k] = Some(f(users[k]));
        }
        out.into_iter().map(Option::unwrap).collect()
    }
}
