//! Exhaustive and randomized checks of the collection-level objective on
//! small instances.
//!
//! The collection value credits accuracy as a plain sum and credits coverage
//! per item: when `k` users share item `i`, their preferences sorted in
//! decreasing order `t_1 >= ... >= t_k` contribute `sum_j t_j / sqrt(j)`.
//! This is the Dyn discount `1 / sqrt(f + 1)` applied to the `(f + 1)`-th
//! copy, with the most eager user credited first. Each item term is a
//! nonnegative combination of top-`j` sums, so the whole value is monotone
//! submodular over user-item pairs.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::SplitDataset;
use crate::error::{Error, Result};
use crate::math;
use crate::rerank::TopNCollection;
use crate::scoring::AccuracyScorer;

pub const MAX_USERS: usize = 4;
pub const MAX_ITEMS: usize = 8;
pub const MAX_N: usize = 2;

/// Value of an arbitrary set of `(user, item)` pairs.
pub fn pair_set_value<A>(
    split: &SplitDataset,
    theta: &[f64],
    arec: &A,
    pairs: &[(usize, usize)],
) -> f64
where
    A: AccuracyScorer + ?Sized,
{
    let mut accuracy = 0.0;
    let mut sharers: Vec<Vec<f64>> = vec![Vec::new(); split.num_items()];
    for &(u, i) in pairs {
        accuracy += (1.0 - theta[u]) * arec.score(u, i);
        sharers[i].push(theta[u]);
    }
    let mut coverage = 0.0;
    for ts in &mut sharers {
        ts.sort_by(|a, b| b.total_cmp(a));
        for (j, t) in ts.iter().enumerate() {
            coverage += t / math::sqrt((j + 1) as f64);
        }
    }
    accuracy + coverage
}

/// Value of a whole collection.
pub fn collection_value<A>(
    split: &SplitDataset,
    theta: &[f64],
    arec: &A,
    coll: &TopNCollection,
) -> f64
where
    A: AccuracyScorer + ?Sized,
{
    let pairs: Vec<(usize, usize)> = coll
        .lists()
        .iter()
        .enumerate()
        .flat_map(|(u, l)| l.iter().map(move |&i| (u, i)))
        .collect();
    pair_set_value(split, theta, arec, &pairs)
}

fn subsets(pool: &[usize], n: usize) -> Vec<Vec<usize>> {
    fn go(pool: &[usize], n: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for k in start..pool.len() {
            cur.push(pool[k]);
            go(pool, n, k + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(pool, n, 0, &mut Vec::new(), &mut out);
    out
}

/// Maximizes the collection value over every feasible collection: each user
/// gets an `n`-subset of unseen items. Refuses instances beyond 4 users,
/// 8 items or `n = 2`.
pub fn brute_force_optimal<A>(
    split: &SplitDataset,
    theta: &[f64],
    arec: &A,
    n: usize,
) -> Result<(f64, TopNCollection)>
where
    A: AccuracyScorer + ?Sized,
{
    let (nu, ni) = (split.num_users(), split.num_items());
    if nu > MAX_USERS || ni > MAX_ITEMS || n > MAX_N {
        return Err(Error::TooLarge(format!(
            "{nu} users, {ni} items, n = {n} (limits {MAX_USERS}, {MAX_ITEMS}, {MAX_N})"
        )));
    }
    if n == 0 || theta.len() != nu {
        return Err(Error::argument(
            "brute force needs n >= 1 and one preference per user",
        ));
    }
    let options: Vec<Vec<Vec<usize>>> = (0..nu)
        .map(|u| {
            let pool = split.unseen_items(u);
            if pool.len() < n {
                return Err(Error::Infeasible {
                    user: split.user_id(u),
                    available: pool.len(),
                    requested: n,
                });
            }
            Ok(subsets(&pool, n))
        })
        .collect::<Result<_>>()?;

    let mut choice = vec![0usize; nu];
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut pairs = Vec::with_capacity(nu * n);
    loop {
        pairs.clear();
        for (u, &k) in choice.iter().enumerate() {
            pairs.extend(options[u][k].iter().map(|&i| (u, i)));
        }
        let v = pair_set_value(split, theta, arec, &pairs);
        if best.as_ref().map_or(true, |(b, _)| v > *b) {
            best = Some((v, choice.clone()));
        }
        // odometer over per-user choices
        let mut u = 0;
        loop {
            if u == nu {
                let (v, ch) = best.expect("at least one collection");
                let lists = ch
                    .iter()
                    .enumerate()
                    .map(|(u, &k)| options[u][k].clone())
                    .collect();
                return Ok((
                    v,
                    TopNCollection::new(n, crate::metrics::Protocol::AllUnrated, lists),
                ));
            }
            choice[u] += 1;
            if choice[u] < options[u].len() {
                break;
            }
            choice[u] = 0;
            u += 1;
        }
    }
}

/// Samples random chains `A ⊆ B` of user-item pairs and a pair `x ∉ B`, and
/// checks `gain(x | A) >= gain(x | B) >= 0` up to rounding.
pub fn submodularity_check<A>(
    split: &SplitDataset,
    theta: &[f64],
    arec: &A,
    trials: usize,
    seed: u64,
) -> bool
where
    A: AccuracyScorer + ?Sized,
{
    const SLACK: f64 = 1e-12;
    let ground: Vec<(usize, usize)> = (0..split.num_users())
        .flat_map(|u| split.unseen_items(u).into_iter().map(move |i| (u, i)))
        .collect();
    if ground.is_empty() {
        return true;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let mut shuffled = ground.clone();
        shuffled.shuffle(&mut rng);
        let x = shuffled.pop().expect("non-empty ground set");
        let b_len = rng.gen_range(0..=shuffled.len());
        let a_len = rng.gen_range(0..=b_len);
        let b = &shuffled[..b_len];
        let a = &shuffled[..a_len];
        let gain = |set: &[(usize, usize)]| {
            let mut with = set.to_vec();
            with.push(x);
            pair_set_value(split, theta, arec, &with) - pair_set_value(split, theta, arec, set)
        };
        let (ga, gb) = (gain(a), gain(b));
        if ga + SLACK < gb || gb < -SLACK {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Rating;
    use crate::scoring::ScoreMatrix;

    // two users who have each seen a private item, sharing candidates 0 and 1
    fn pair_instance() -> SplitDataset {
        let train = vec![
            Rating::new(1, 8, 1.0),
            Rating::new(2, 9, 1.0),
            Rating::new(3, 1, 1.0),
            Rating::new(3, 2, 1.0),
        ];
        SplitDataset::from_parts(train, vec![]).unwrap()
    }

    #[test]
    fn shared_item_is_discounted() {
        let s = pair_instance();
        let a = ScoreMatrix::new(3, 4, vec![0.5; 12]).unwrap();
        let theta = [1.0, 1.0, 0.0];
        let shared = pair_set_value(&s, &theta, &a, &[(0, 0), (1, 0)]);
        let split = pair_set_value(&s, &theta, &a, &[(0, 0), (1, 1)]);
        assert!((shared - (1.0 + core::f64::consts::FRAC_1_SQRT_2)).abs() < 1e-12);
        assert!((split - 2.0).abs() < 1e-12);
    }

    #[test]
    fn brute_force_prefers_split_assignment() {
        let train = vec![Rating::new(1, 9, 1.0), Rating::new(2, 9, 1.0)];
        let s = SplitDataset::from_parts(train, vec![]).unwrap();
        // the only item is already seen by both users
        assert!(brute_force_optimal(
            &s,
            &[1.0, 1.0],
            &ScoreMatrix::new(2, 1, vec![0.0; 2]).unwrap(),
            1
        )
        .is_err());

        let train = vec![
            Rating::new(1, 9, 1.0),
            Rating::new(2, 9, 1.0),
            Rating::new(3, 1, 1.0),
            Rating::new(3, 2, 1.0),
        ];
        let s = SplitDataset::from_parts(train, vec![]).unwrap();
        let a = ScoreMatrix::new(3, 3, vec![1.0; 9]).unwrap();
        let (v, coll) = brute_force_optimal(&s, &[1.0, 1.0, 0.0], &a, 1).unwrap();
        assert_ne!(coll.list(0), coll.list(1));
        assert!((v - (2.0 + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn brute_force_refuses_large_instances() {
        let train: Vec<Rating> = (0..5).map(|u| Rating::new(u, 0, 1.0)).collect();
        let s = SplitDataset::from_parts(train, vec![]).unwrap();
        let a = ScoreMatrix::new(5, 1, vec![0.0; 5]).unwrap();
        assert!(matches!(
            brute_force_optimal(&s, &[0.0; 5], &a, 1),
            Err(Error::TooLarge(_))
        ));
    }

    #[test]
    fn submodularity_on_fixed_instance() {
        let s = pair_instance();
        let a = ScoreMatrix::new(3, 4, (0..12).map(|k| (k % 7) as f64 / 6.0).collect()).unwrap();
        assert!(submodularity_check(&s, &[0.0; 3], &a, 200, 1));
        assert!(submodularity_check(&s, &[1.0; 3], &a, 200, 2));
        assert!(submodularity_check(&s, &[0.2, 0.9, 0.5], &a, 500, 3));
    }
}
