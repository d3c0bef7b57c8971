//! Per-user blending of accuracy and coverage, and top-N assignment.
//!
//! Item and user arguments are dense split indices. Item indices follow
//! ascending item id, so "lower index" and "lower id" tie rules coincide.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::SplitDataset;
use crate::error::{Error, Result};
use crate::math;
use crate::metrics::Protocol;
use crate::scoring::{AccuracyScorer, CoverageScorer, DynCoverage};

/// Running count `f_i^A` of how often each item has been assigned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecFrequency {
    counts: Vec<u32>,
}

impl RecFrequency {
    pub fn new(num_items: usize) -> Self {
        RecFrequency {
            counts: vec![0; num_items],
        }
    }

    pub fn from_counts(counts: Vec<u32>) -> Self {
        RecFrequency { counts }
    }

    pub fn record(&mut self, items: &[usize]) {
        for &i in items {
            self.counts[i] += 1;
        }
    }

    pub fn get(&self, item: usize) -> u32 {
        self.counts[item]
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }
}

/// Which items a user's list is drawn from.
pub fn candidates(split: &SplitDataset, user: usize, protocol: Protocol) -> Vec<usize> {
    match protocol {
        Protocol::AllUnrated => split.unseen_items(user),
        Protocol::RatedTestItems => split.test_items(user).iter().map(|&(i, _)| i).collect(),
    }
}

/// Ordered top-N lists, one per user index.
///
/// Under [`Protocol::RatedTestItems`] a user with fewer than `n` test items is
/// skipped and holds an empty list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopNCollection {
    n: usize,
    protocol: Protocol,
    lists: Vec<Vec<usize>>,
}

impl TopNCollection {
    pub fn new(n: usize, protocol: Protocol, lists: Vec<Vec<usize>>) -> Self {
        TopNCollection { n, protocol, lists }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn protocol(&self) -> Protocol {
        self.protocol
    }

    pub fn lists(&self) -> &[Vec<usize>] {
        &self.lists
    }

    pub fn list(&self, user: usize) -> &[usize] {
        &self.lists[user]
    }

    pub fn num_users(&self) -> usize {
        self.lists.len()
    }

    /// Users holding a list (all of them under `AllUnrated`).
    pub fn evaluated_users(&self) -> impl Iterator<Item = usize> + '_ {
        self.lists
            .iter()
            .enumerate()
            .filter(|(_, l)| !l.is_empty())
            .map(|(u, _)| u)
    }

    pub fn frequencies(&self, num_items: usize) -> RecFrequency {
        let mut f = RecFrequency::new(num_items);
        for l in &self.lists {
            f.record(l);
        }
        f
    }

    /// Every list cut to its first `m` items.
    pub fn truncated(&self, m: usize) -> Result<Self> {
        if m == 0 || m > self.n {
            return Err(Error::argument(format!(
                "cannot truncate a top-{} collection to {m}",
                self.n
            )));
        }
        let lists = self
            .lists
            .iter()
            .map(|l| l.iter().copied().take(m).collect())
            .collect();
        Ok(TopNCollection {
            n: m,
            protocol: self.protocol,
            lists,
        })
    }

    /// Checks list sizes, distinctness, and that no list holds a seen item.
    pub fn validate(&self, split: &SplitDataset) -> Result<()> {
        if self.lists.len() != split.num_users() {
            return Err(Error::contract(format!(
                "collection covers {} users, split has {}",
                self.lists.len(),
                split.num_users()
            )));
        }
        for (u, list) in self.lists.iter().enumerate() {
            let user = split.user_id(u);
            if list.is_empty()
                && self.protocol == Protocol::RatedTestItems
                && split.test_items(u).len() < self.n
            {
                continue;
            }
            if list.len() != self.n {
                return Err(Error::contract(format!(
                    "user {user} has {} items, expected {}",
                    list.len(),
                    self.n
                )));
            }
            for (k, &i) in list.iter().enumerate() {
                if i >= split.num_items() {
                    return Err(Error::contract(format!(
                        "user {user} holds item index {i} outside the train universe"
                    )));
                }
                if split.has_seen(u, i) {
                    return Err(Error::contract(format!(
                        "user {user} is recommended seen item {}",
                        split.item_id(i)
                    )));
                }
                if list[..k].contains(&i) {
                    return Err(Error::contract(format!(
                        "user {user} holds item {} twice",
                        split.item_id(i)
                    )));
                }
            }
        }
        Ok(())
    }
}

fn check_theta(split: &SplitDataset, theta: &[f64]) -> Result<()> {
    if theta.len() != split.num_users() {
        return Err(Error::argument(format!(
            "preference vector has {} entries, split has {} users",
            theta.len(),
            split.num_users()
        )));
    }
    if let Some(u) = theta.iter().position(|t| !(0.0..=1.0).contains(t)) {
        return Err(Error::argument(format!(
            "preference of user {} is {}, outside [0, 1]",
            split.user_id(u),
            theta[u]
        )));
    }
    Ok(())
}

#[inline]
fn blend(theta: f64, a: f64, c: f64) -> f64 {
    (1.0 - theta) * a + theta * c
}

/// `v_u(P_u) = (1 - theta) sum a(u, i) + theta sum c(i)`.
pub fn user_value<A, C>(
    split: &SplitDataset,
    user: usize,
    items: &[usize],
    theta: f64,
    arec: &A,
    crec: &C,
) -> Result<f64>
where
    A: AccuracyScorer + ?Sized,
    C: CoverageScorer + ?Sized,
{
    let mut a = 0.0;
    let mut c = 0.0;
    for &i in items {
        if split.has_seen(user, i) {
            return Err(Error::contract(format!(
                "user {} has already rated item {}",
                split.user_id(user),
                split.item_id(i)
            )));
        }
        a += arec.score(user, i);
        c += crec.score(i);
    }
    Ok((1.0 - theta) * a + theta * c)
}

/// Greedy top-`n` for one user, returning items with their marginal gains.
///
/// The coverage scorer is read but not advanced while a single user's list is
/// built, so each step's gain for item `i` is `(1 - theta) a(u, i) + theta c(i)`.
/// Ties go to the lower item index.
pub fn greedy_topn_user_with_gains<A, C>(
    split: &SplitDataset,
    user: usize,
    theta: f64,
    arec: &A,
    crec: &C,
    n: usize,
    candidates: &[usize],
) -> Result<Vec<(usize, f64)>>
where
    A: AccuracyScorer + ?Sized,
    C: CoverageScorer + ?Sized,
{
    if candidates.len() < n {
        return Err(Error::Infeasible {
            user: split.user_id(user),
            available: candidates.len(),
            requested: n,
        });
    }
    let mut pool: Vec<(usize, f64)> = Vec::with_capacity(candidates.len());
    for &i in candidates {
        if split.has_seen(user, i) {
            return Err(Error::contract(format!(
                "candidate item {} was already rated by user {}",
                split.item_id(i),
                split.user_id(user)
            )));
        }
        pool.push((i, blend(theta, arec.score(user, i), crec.score(i))));
    }
    let mut picked = Vec::with_capacity(n);
    for _ in 0..n {
        let mut best = 0;
        for k in 1..pool.len() {
            let (i, g) = pool[k];
            let (bi, bg) = pool[best];
            if g > bg || (g == bg && i < bi) {
                best = k;
            }
        }
        picked.push(pool.swap_remove(best));
    }
    Ok(picked)
}

/// Greedy top-`n` item indices for one user.
pub fn greedy_topn_user<A, C>(
    split: &SplitDataset,
    user: usize,
    theta: f64,
    arec: &A,
    crec: &C,
    n: usize,
    candidates: &[usize],
) -> Result<Vec<usize>>
where
    A: AccuracyScorer + ?Sized,
    C: CoverageScorer + ?Sized,
{
    let picked = greedy_topn_user_with_gains(split, user, theta, arec, crec, n, candidates)?;
    Ok(picked.into_iter().map(|(i, _)| i).collect())
}

// Skipped users (too few candidates under the rated protocol) get an empty list.
fn build_user<A, C>(
    split: &SplitDataset,
    user: usize,
    theta: f64,
    arec: &A,
    crec: &C,
    n: usize,
    protocol: Protocol,
) -> Result<Vec<usize>>
where
    A: AccuracyScorer + ?Sized,
    C: CoverageScorer + ?Sized,
{
    let cand = candidates(split, user, protocol);
    if protocol == Protocol::RatedTestItems && cand.len() < n {
        return Ok(Vec::new());
    }
    greedy_topn_user(split, user, theta, arec, crec, n, &cand)
}

/// Runs a per-user closure over a list of users, returning results in input
/// order. Implementations may run the closure concurrently.
pub trait UserExecutor {
    fn map_users<T, F>(&self, users: &[usize], f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync;
}

/// Runs users one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl UserExecutor for Sequential {
    fn map_users<T, F>(&self, users: &[usize], f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        users.iter().map(|&u| f(u)).collect()
    }
}

/// Every user gets an independent greedy list against a fixed coverage
/// scorer (Rand or Stat).
pub fn independent_topn<A, C, E>(
    split: &SplitDataset,
    theta: &[f64],
    arec: &A,
    crec: &C,
    n: usize,
    protocol: Protocol,
    executor: &E,
) -> Result<TopNCollection>
where
    A: AccuracyScorer + ?Sized,
    C: CoverageScorer + Sync + ?Sized,
    E: UserExecutor + ?Sized,
{
    check_theta(split, theta)?;
    let users: Vec<usize> = (0..split.num_users()).collect();
    let lists = executor.map_users(&users, |u| {
        build_user(split, u, theta[u], arec, crec, n, protocol)
    });
    let lists = lists.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(TopNCollection::new(n, protocol, lists))
}

/// Order in which the fully sequential locally greedy pass visits users.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UserOrder {
    /// Ascending user index.
    Arbitrary,
    /// Ascending preference, ties by user index.
    IncreasingTheta,
    Explicit(Vec<usize>),
}

fn sort_by_theta(theta: &[f64], users: &mut [usize]) {
    users.sort_by(|&a, &b| theta[a].total_cmp(&theta[b]).then(a.cmp(&b)));
}

/// Visits every user in turn against live Dyn coverage, recording each list
/// before moving on.
pub fn locally_greedy_full<A>(
    split: &SplitDataset,
    theta: &[f64],
    arec: &A,
    n: usize,
    order: &UserOrder,
    protocol: Protocol,
) -> Result<TopNCollection>
where
    A: AccuracyScorer + ?Sized,
{
    check_theta(split, theta)?;
    let order = match order {
        UserOrder::Arbitrary => (0..split.num_users()).collect(),
        UserOrder::IncreasingTheta => {
            let mut v: Vec<usize> = (0..split.num_users()).collect();
            sort_by_theta(theta, &mut v);
            v
        }
        UserOrder::Explicit(v) => {
            let mut seen = vec![false; split.num_users()];
            for &u in v {
                if u >= seen.len() || core::mem::replace(&mut seen[u], true) {
                    return Err(Error::argument("explicit user order must be a permutation"));
                }
            }
            if seen.iter().any(|s| !s) {
                return Err(Error::argument("explicit user order must be a permutation"));
            }
            v.clone()
        }
    };
    let mut freq = RecFrequency::new(split.num_items());
    let mut lists = vec![Vec::new(); split.num_users()];
    for u in order {
        let list = build_user(
            split,
            u,
            theta[u],
            arec,
            &DynCoverage::new(&freq),
            n,
            protocol,
        )?;
        freq.record(&list);
        lists[u] = list;
    }
    Ok(TopNCollection::new(n, protocol, lists))
}

/// Silverman's rule of thumb, `1.06 sigma m^(-1/5)`, floored at `1e-3`.
pub fn silverman_bandwidth(values: &[f64]) -> f64 {
    let m = values.len();
    let sigma = if m < 2 {
        0.0
    } else {
        let mean = values.iter().sum::<f64>() / m as f64;
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        math::sqrt(ss / (m - 1) as f64)
    };
    (1.06 * sigma * math::pow(m as f64, -0.2)).max(1e-3)
}

/// Draws `s` distinct users whose preferences follow a Gaussian KDE of all
/// users' preferences, returned by ascending preference (ties by index).
///
/// Each draw picks a random user's preference plus `h` times a standard normal
/// and is mapped to the nearest user not yet selected; equidistant users
/// resolve to the lower preference, then the lower index.
pub fn kde_sample(theta: &[f64], s: usize, seed: u64) -> Result<Vec<usize>> {
    let m = theta.len();
    if s > m {
        return Err(Error::argument(format!(
            "sample size {s} exceeds the {m} users"
        )));
    }
    if s == 0 {
        return Ok(Vec::new());
    }
    let h = silverman_bandwidth(theta);
    let mut order: Vec<usize> = (0..m).collect();
    sort_by_theta(theta, &mut order);
    let sorted: Vec<f64> = order.iter().map(|&u| theta[u]).collect();
    // positions into `order` still available
    let mut remaining: BTreeSet<usize> = (0..m).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..s {
        let x = theta[rng.gen_range(0..m)] + h * math::standard_normal(&mut rng);
        let p = sorted.partition_point(|&t| t < x);
        let below = remaining.range(..p).next_back().copied();
        let above = remaining.range(p..).next().copied();
        let value = match (below, above) {
            (Some(b), Some(a)) => {
                if x - sorted[b] <= sorted[a] - x {
                    sorted[b]
                } else {
                    sorted[a]
                }
            }
            (Some(b), None) => sorted[b],
            (None, Some(a)) => sorted[a],
            (None, None) => unreachable!("fewer draws than users"),
        };
        let first = sorted.partition_point(|&t| t < value);
        let pos = *remaining
            .range(first..)
            .next()
            .expect("a position holds this value");
        remaining.remove(&pos);
    }
    Ok((0..m)
        .filter(|p| !remaining.contains(p))
        .map(|p| order[p])
        .collect())
}

/// Frequency snapshots captured after each sampled user, in capture order.
#[derive(Debug, Clone, Default)]
pub struct SnapshotStore {
    entries: Vec<(f64, RecFrequency)>,
}

impl SnapshotStore {
    pub fn new() -> Self {
        SnapshotStore::default()
    }

    /// Appends a snapshot; preferences must arrive in non-decreasing order.
    pub fn push(&mut self, theta: f64, freq: RecFrequency) -> Result<()> {
        if let Some(&(last, _)) = self.entries.last() {
            if theta < last {
                return Err(Error::contract(
                    "snapshots must be captured in non-decreasing preference order",
                ));
            }
        }
        self.entries.push((theta, freq));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(f64, RecFrequency)] {
        &self.entries
    }

    /// Index of the snapshot nearest in preference. Equidistant snapshots
    /// resolve to the lower preference; among equal preferences, the earliest.
    pub fn nearest_index(&self, theta: f64) -> Option<usize> {
        let p = self.entries.partition_point(|&(t, _)| t < theta);
        let first_at = |value: f64| self.entries.partition_point(|&(t, _)| t < value);
        let below = p.checked_sub(1).map(|k| first_at(self.entries[k].0));
        let above = (p < self.entries.len()).then_some(p);
        match (below, above) {
            (Some(b), Some(a)) => {
                if theta - self.entries[b].0 <= self.entries[a].0 - theta {
                    Some(b)
                } else {
                    Some(a)
                }
            }
            (b, a) => b.or(a),
        }
    }

    pub fn nearest(&self, theta: f64) -> Option<&RecFrequency> {
        self.nearest_index(theta).map(|k| &self.entries[k].1)
    }
}

/// Output of the sequential phase: lists for sampled users (empty for the
/// rest) plus one snapshot per sampled user.
#[derive(Debug, Clone)]
pub struct SequentialPhase {
    pub lists: Vec<Vec<usize>>,
    pub sampled: Vec<bool>,
    pub snapshots: SnapshotStore,
    pub frequency: RecFrequency,
}

/// Runs the sampled users in the given order against live Dyn coverage,
/// storing the frequency state after each one.
pub fn oslg_sequential_phase<A>(
    split: &SplitDataset,
    theta: &[f64],
    arec: &A,
    n: usize,
    sample: &[usize],
    protocol: Protocol,
) -> Result<SequentialPhase>
where
    A: AccuracyScorer + ?Sized,
{
    check_theta(split, theta)?;
    let mut freq = RecFrequency::new(split.num_items());
    let mut lists = vec![Vec::new(); split.num_users()];
    let mut sampled = vec![false; split.num_users()];
    let mut snapshots = SnapshotStore::new();
    for &u in sample {
        if u >= sampled.len() || core::mem::replace(&mut sampled[u], true) {
            return Err(Error::argument("sample must list distinct user indices"));
        }
        let list = build_user(
            split,
            u,
            theta[u],
            arec,
            &DynCoverage::new(&freq),
            n,
            protocol,
        )?;
        freq.record(&list);
        lists[u] = list;
        snapshots.push(theta[u], freq.clone())?;
    }
    Ok(SequentialPhase {
        lists,
        sampled,
        snapshots,
        frequency: freq,
    })
}

/// Builds each listed user's top-`n` against the frozen snapshot nearest to
/// that user's preference. Results follow `users`.
#[allow(clippy::too_many_arguments)]
pub fn oslg_parallel_phase<A, E>(
    split: &SplitDataset,
    theta: &[f64],
    arec: &A,
    n: usize,
    protocol: Protocol,
    snapshots: &SnapshotStore,
    users: &[usize],
    executor: &E,
) -> Result<Vec<Vec<usize>>>
where
    A: AccuracyScorer + ?Sized,
    E: UserExecutor + ?Sized,
{
    check_theta(split, theta)?;
    let empty = RecFrequency::new(split.num_items());
    let out = executor.map_users(users, |u| {
        let frozen = snapshots.nearest(theta[u]).unwrap_or(&empty);
        build_user(
            split,
            u,
            theta[u],
            arec,
            &DynCoverage::new(frozen),
            n,
            protocol,
        )
    });
    out.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OslgConfig {
    pub n: usize,
    /// Number of users handled sequentially.
    pub s: usize,
    pub seed: u64,
    pub protocol: Protocol,
}

/// Ordered sampling-based locally greedy assignment with Dyn coverage.
pub fn oslg<A, E>(
    split: &SplitDataset,
    theta: &[f64],
    arec: &A,
    config: OslgConfig,
    executor: &E,
) -> Result<TopNCollection>
where
    A: AccuracyScorer + ?Sized,
    E: UserExecutor + ?Sized,
{
    check_theta(split, theta)?;
    let sample = kde_sample(theta, config.s, config.seed)?;
    let seq = oslg_sequential_phase(split, theta, arec, config.n, &sample, config.protocol)?;
    let rest: Vec<usize> = (0..split.num_users())
        .filter(|&u| !seq.sampled[u])
        .collect();
    let built = oslg_parallel_phase(
        split,
        theta,
        arec,
        config.n,
        config.protocol,
        &seq.snapshots,
        &rest,
        executor,
    )?;
    let mut lists = seq.lists;
    for (u, list) in rest.into_iter().zip(built) {
        lists[u] = list;
    }
    Ok(TopNCollection::new(config.n, config.protocol, lists))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Rating;
    use crate::scoring::{ScoreMatrix, StatCoverage};

    // 3 users x 4 items, each user has seen one distinct item.
    fn small() -> SplitDataset {
        let train = vec![
            Rating::new(1, 1, 5.0),
            Rating::new(2, 2, 4.0),
            Rating::new(3, 3, 3.0),
            Rating::new(3, 4, 3.0),
        ];
        SplitDataset::from_parts(train, vec![]).unwrap()
    }

    #[test]
    fn user_value_examples() {
        let s = small();
        let a = ScoreMatrix::new(
            3,
            4,
            vec![0.0, 0.5, 0.3, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        )
        .unwrap();
        let f = RecFrequency::from_counts(vec![0, 3, 8, 0]);
        let c = DynCoverage::new(&f);
        // sum a = 0.8, sum c = 0.5 + 1/3
        let v = user_value(&s, 0, &[1, 2], 0.5, &a, &c).unwrap();
        assert!((v - (0.4 + 0.5 * (0.5 + 1.0 / 3.0))).abs() < 1e-12);
        assert!((user_value(&s, 0, &[1, 2], 0.0, &a, &c).unwrap() - 0.8).abs() < 1e-12);
        assert!(matches!(
            user_value(&s, 0, &[0], 0.5, &a, &c),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn greedy_breaks_ties_by_index_and_reports_infeasible() {
        let s = small();
        let a = ScoreMatrix::new(3, 4, vec![0.5; 12]).unwrap();
        let f = RecFrequency::new(4);
        let c = DynCoverage::new(&f);
        assert_eq!(
            greedy_topn_user(&s, 0, 0.3, &a, &c, 2, &[3, 2, 1]).unwrap(),
            vec![1, 2]
        );
        assert!(matches!(
            greedy_topn_user(&s, 0, 0.3, &a, &c, 4, &[1, 2, 3]),
            Err(Error::Infeasible {
                available: 3,
                requested: 4,
                ..
            })
        ));
    }

    #[test]
    fn gains_are_non_increasing() {
        let s = small();
        let a = ScoreMatrix::new(
            3,
            4,
            vec![0.0, 0.9, 0.1, 0.4, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        )
        .unwrap();
        let f = RecFrequency::from_counts(vec![0, 4, 0, 1]);
        let g = greedy_topn_user_with_gains(&s, 0, 0.5, &a, &DynCoverage::new(&f), 3, &[1, 2, 3])
            .unwrap();
        assert!(g.windows(2).all(|w| w[0].1 >= w[1].1));
    }

    #[test]
    fn locally_greedy_spreads_identical_users() {
        let train = vec![
            Rating::new(1, 9, 1.0),
            Rating::new(2, 9, 1.0),
            Rating::new(1, 1, 1.0),
            Rating::new(2, 2, 1.0),
        ];
        let s = SplitDataset::from_parts(train, vec![]).unwrap();
        // items 1, 2, 9 -> indices 0, 1, 2; user 1 saw 0 and 2, user 2 saw 1 and 2
        let a = ScoreMatrix::new(2, 3, vec![0.0; 6]).unwrap();
        let coll = locally_greedy_full(
            &s,
            &[1.0, 1.0],
            &a,
            1,
            &UserOrder::Arbitrary,
            Protocol::AllUnrated,
        )
        .unwrap();
        assert_eq!(coll.lists(), &[vec![1], vec![0]]);
        coll.validate(&s).unwrap();
        assert_eq!(coll.frequencies(3).total(), 2);
    }

    #[test]
    fn independent_with_zero_theta_is_accuracy_order() {
        let s = small();
        let a = ScoreMatrix::new(3, 4, (0..12).map(|k| (k % 5) as f64 / 4.0).collect()).unwrap();
        let stats = crate::dataset::compute_item_stats(&s);
        let coll = independent_topn(
            &s,
            &[0.0; 3],
            &a,
            &StatCoverage::new(&stats),
            2,
            Protocol::AllUnrated,
            &Sequential,
        )
        .unwrap();
        for u in 0..3 {
            let mut cand = s.unseen_items(u);
            cand.sort_by(|&x, &y| a.score(u, y).total_cmp(&a.score(u, x)).then(x.cmp(&y)));
            assert_eq!(coll.list(u), &cand[..2]);
        }
    }

    #[test]
    fn bandwidth_floor() {
        assert_eq!(silverman_bandwidth(&[0.5; 10]), 1e-3);
        assert_eq!(silverman_bandwidth(&[0.5]), 1e-3);
        let h = silverman_bandwidth(&[0.0, 1.0]);
        assert!((h - 1.06 * core::f64::consts::FRAC_1_SQRT_2 * math::pow(2.0, -0.2)).abs() < 1e-12);
    }

    #[test]
    fn kde_sample_exhausts_and_sorts() {
        let theta = [0.9, 0.1, 0.5, 0.1, 0.7];
        let all = kde_sample(&theta, 5, 3).unwrap();
        assert_eq!(all, vec![1, 3, 2, 4, 0]);
        let some = kde_sample(&theta, 3, 3).unwrap();
        assert_eq!(some.len(), 3);
        assert!(some
            .windows(2)
            .all(|w| (theta[w[0]], w[0]) < (theta[w[1]], w[1])));
        assert!(kde_sample(&theta, 6, 3).is_err());
        assert_eq!(
            kde_sample(&theta, 3, 11).unwrap(),
            kde_sample(&theta, 3, 11).unwrap()
        );
    }

    #[test]
    fn kde_sample_constant_theta() {
        let theta = [0.5; 6];
        let got = kde_sample(&theta, 3, 1).unwrap();
        // every draw lands on the same value, so the lowest free index wins
        assert_eq!(got, vec![0, 1, 2]);
    }

    #[test]
    fn nearest_snapshot_ties() {
        let mut store = SnapshotStore::new();
        store.push(0.2, RecFrequency::from_counts(vec![1])).unwrap();
        store.push(0.4, RecFrequency::from_counts(vec![2])).unwrap();
        store.push(0.4, RecFrequency::from_counts(vec![3])).unwrap();
        store.push(0.8, RecFrequency::from_counts(vec![4])).unwrap();
        assert_eq!(store.nearest_index(0.0), Some(0));
        assert_eq!(store.nearest_index(0.3), Some(0));
        assert_eq!(store.nearest_index(0.4), Some(1));
        assert_eq!(store.nearest_index(0.6), Some(1));
        assert_eq!(store.nearest_index(0.61), Some(3));
        assert_eq!(store.nearest_index(1.0), Some(3));
        assert!(store.push(0.1, RecFrequency::new(1)).is_err());
        assert_eq!(SnapshotStore::new().nearest_index(0.5), None);
    }

    #[test]
    fn rated_protocol_skips_short_users() {
        let train = vec![
            Rating::new(1, 1, 5.0),
            Rating::new(2, 2, 4.0),
            Rating::new(2, 3, 4.0),
        ];
        let test = vec![
            Rating::new(1, 2, 5.0),
            Rating::new(1, 3, 2.0),
            Rating::new(2, 1, 4.0),
        ];
        let s = SplitDataset::from_parts(train, test).unwrap();
        let a = ScoreMatrix::new(2, 3, vec![0.1, 0.2, 0.9, 0.3, 0.3, 0.3]).unwrap();
        let coll = locally_greedy_full(
            &s,
            &[0.0, 0.0],
            &a,
            2,
            &UserOrder::Arbitrary,
            Protocol::RatedTestItems,
        )
        .unwrap();
        assert_eq!(coll.lists(), &[vec![2, 1], vec![]]);
        coll.validate(&s).unwrap();
        assert_eq!(coll.evaluated_users().collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn validate_rejects_bad_lists() {
        let s = small();
        let bad = TopNCollection::new(1, Protocol::AllUnrated, vec![vec![0], vec![0], vec![0]]);
        assert!(bad.validate(&s).is_err());
        let dup = TopNCollection::new(
            2,
            Protocol::AllUnrated,
            vec![vec![1, 1], vec![0, 2], vec![0, 1]],
        );
        assert!(dup.validate(&s).is_err());
        let short = TopNCollection::new(
            2,
            Protocol::AllUnrated,
            vec![vec![1], vec![0, 2], vec![0, 1]],
        );
        assert!(short.validate(&s).is_err());
    }
}
