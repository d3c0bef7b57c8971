//! Ratings, the per-user train/test split and item popularity statistics.
//!
//! Users and items are addressed by dense indices inside a [`SplitDataset`]:
//! index order equals ascending id order, so every "ties by ascending item id"
//! rule elsewhere in the crate is simply "ties by ascending index".

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct UserId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct ItemId(pub u64);

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// One observed rating. The timestamp is carried through but never used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rating {
    pub user: UserId,
    pub item: ItemId,
    pub value: f64,
    pub timestamp: Option<i64>,
}

impl Rating {
    pub fn new(user: u64, item: u64, value: f64) -> Self {
        Rating {
            user: UserId(user),
            item: ItemId(item),
            value,
            timestamp: None,
        }
    }

    pub fn with_timestamp(mut self, ts: i64) -> Self {
        self.timestamp = Some(ts);
        self
    }
}

/// Collapses duplicate `(user, item)` pairs; the last occurrence wins but
/// keeps the position of the first one.
pub fn dedup_last_wins(ratings: Vec<Rating>) -> Vec<Rating> {
    let mut position: BTreeMap<(UserId, ItemId), usize> = BTreeMap::new();
    let mut out: Vec<Rating> = Vec::with_capacity(ratings.len());
    for r in ratings {
        match position.get(&(r.user, r.item)) {
            Some(&at) => out[at] = r,
            None => {
                position.insert((r.user, r.item), out.len());
                out.push(r);
            }
        }
    }
    out
}

/// Ratings partitioned into train and test, with dense per-user and per-item
/// indices over the train universe.
#[derive(Debug, Clone)]
pub struct SplitDataset {
    train: Vec<Rating>,
    test: Vec<Rating>,
    users: Vec<UserId>,
    items: Vec<ItemId>,
    // (item index, rating), sorted by item index
    user_train: Vec<Vec<(usize, f64)>>,
    user_test: Vec<Vec<(usize, f64)>>,
    // (user index, rating), sorted by user index
    item_train: Vec<Vec<(usize, f64)>>,
}

impl SplitDataset {
    /// Builds a split from explicit train and test ratings.
    ///
    /// Test ratings whose user or item never occurs in train are dropped.
    /// A pair present in both train and test is rejected.
    pub fn from_parts(train: Vec<Rating>, test: Vec<Rating>) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptyDataset("train set has no ratings".into()));
        }
        for r in train.iter().chain(&test) {
            if !r.value.is_finite() || r.value < 0.0 {
                return Err(Error::argument(format!(
                    "rating ({}, {}) has invalid value {}",
                    r.user, r.item, r.value
                )));
            }
        }
        let train = dedup_last_wins(train);
        let test = dedup_last_wins(test);

        let mut users: Vec<UserId> = train.iter().map(|r| r.user).collect();
        users.sort_unstable();
        users.dedup();
        let mut items: Vec<ItemId> = train.iter().map(|r| r.item).collect();
        items.sort_unstable();
        items.dedup();

        let mut user_train = vec![Vec::new(); users.len()];
        let mut item_train = vec![Vec::new(); items.len()];
        for r in &train {
            let u = users.binary_search(&r.user).unwrap();
            let i = items.binary_search(&r.item).unwrap();
            user_train[u].push((i, r.value));
            item_train[i].push((u, r.value));
        }
        for list in user_train.iter_mut().chain(item_train.iter_mut()) {
            list.sort_unstable_by_key(|&(k, _)| k);
        }

        let mut user_test = vec![Vec::new(); users.len()];
        let mut kept = Vec::with_capacity(test.len());
        for r in test {
            let (Ok(u), Ok(i)) = (users.binary_search(&r.user), items.binary_search(&r.item))
            else {
                continue;
            };
            if user_train[u].binary_search_by_key(&i, |&(k, _)| k).is_ok() {
                return Err(Error::contract(format!(
                    "pair ({}, {}) appears in both train and test",
                    r.user, r.item
                )));
            }
            user_test[u].push((i, r.value));
            kept.push(r);
        }
        for list in &mut user_test {
            list.sort_unstable_by_key(|&(k, _)| k);
        }

        Ok(SplitDataset {
            train,
            test: kept,
            users,
            items,
            user_train,
            user_test,
            item_train,
        })
    }

    pub fn train(&self) -> &[Rating] {
        &self.train
    }

    pub fn test(&self) -> &[Rating] {
        &self.test
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    pub fn users(&self) -> &[UserId] {
        &self.users
    }

    pub fn items(&self) -> &[ItemId] {
        &self.items
    }

    pub fn user_id(&self, user: usize) -> UserId {
        self.users[user]
    }

    pub fn item_id(&self, item: usize) -> ItemId {
        self.items[item]
    }

    pub fn user_index(&self, user: UserId) -> Option<usize> {
        self.users.binary_search(&user).ok()
    }

    pub fn item_index(&self, item: ItemId) -> Option<usize> {
        self.items.binary_search(&item).ok()
    }

    /// `I_u^R` as (item index, rating), sorted by item index.
    pub fn train_items(&self, user: usize) -> &[(usize, f64)] {
        &self.user_train[user]
    }

    /// `I_u^T` as (item index, rating), sorted by item index.
    pub fn test_items(&self, user: usize) -> &[(usize, f64)] {
        &self.user_test[user]
    }

    /// `U_i^R` as (user index, rating), sorted by user index.
    pub fn item_raters(&self, item: usize) -> &[(usize, f64)] {
        &self.item_train[item]
    }

    pub fn has_seen(&self, user: usize, item: usize) -> bool {
        self.user_train[user]
            .binary_search_by_key(&item, |&(k, _)| k)
            .is_ok()
    }

    /// Items in `I^R \ I_u^R`, ascending.
    pub fn unseen_items(&self, user: usize) -> Vec<usize> {
        let seen = &self.user_train[user];
        let mut out = Vec::with_capacity(self.items.len() - seen.len());
        let mut next = seen.iter().map(|&(i, _)| i).peekable();
        for item in 0..self.items.len() {
            if next.peek() == Some(&item) {
                next.next();
            } else {
                out.push(item);
            }
        }
        out
    }

    pub fn mean_train_rating(&self) -> f64 {
        self.train.iter().map(|r| r.value).sum::<f64>() / self.train.len() as f64
    }

    /// `|D| / (|U| * |I|)` over train and test together.
    pub fn density(&self) -> f64 {
        (self.train.len() + self.test.len()) as f64 / (self.users.len() * self.items.len()) as f64
    }
}

/// Per-user random split keeping `ceil(kappa * n_u)` ratings of each user in
/// train.
///
/// Users with fewer than `tau` ratings are dropped. Each user's ratings are
/// shuffled with a generator seeded by `seed ^ user_id`, so one user's split
/// does not depend on which other users are present.
pub fn split_per_user(
    ratings: &[Rating],
    kappa: f64,
    tau: usize,
    seed: u64,
) -> Result<SplitDataset> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::argument(format!(
            "kappa must lie in (0, 1), got {kappa}"
        )));
    }
    if tau == 0 {
        return Err(Error::argument("tau must be at least 1"));
    }
    let ratings = dedup_last_wins(ratings.to_vec());
    let mut per_user: BTreeMap<UserId, Vec<Rating>> = BTreeMap::new();
    for r in ratings {
        per_user.entry(r.user).or_default().push(r);
    }

    let mut train = Vec::new();
    let mut test = Vec::new();
    for (user, mut list) in per_user {
        let n = list.len();
        if n < tau {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ user.0);
        list.shuffle(&mut rng);
        let keep = train_count(kappa, n);
        test.extend_from_slice(&list[keep..]);
        list.truncate(keep);
        train.extend(list);
    }
    if train.is_empty() {
        return Err(Error::EmptyDataset(format!(
            "no user has at least {tau} ratings"
        )));
    }
    SplitDataset::from_parts(train, test)
}

fn train_count(kappa: f64, n: usize) -> usize {
    // 0.8 * 5 must give 4, not 5: absorb representation error before ceil.
    let k = math::ceil(kappa * n as f64 - 1e-9) as usize;
    k.clamp(1, n)
}

/// Item popularity over train and the Pareto long-tail set.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemStats {
    /// `f_i^R`, indexed by item index.
    pub popularity: Vec<u32>,
    /// `L` as a membership mask, indexed by item index.
    pub long_tail: Vec<bool>,
    pub total_train_ratings: u64,
}

impl ItemStats {
    pub fn is_long_tail(&self, item: usize) -> bool {
        self.long_tail[item]
    }

    pub fn long_tail_items(&self) -> Vec<usize> {
        (0..self.long_tail.len())
            .filter(|&i| self.long_tail[i])
            .collect()
    }

    pub fn long_tail_len(&self) -> usize {
        self.long_tail.iter().filter(|&&b| b).count()
    }

    /// `|L| / |I^R|`.
    pub fn long_tail_share(&self) -> f64 {
        self.long_tail_len() as f64 / self.long_tail.len() as f64
    }

    /// Item indices by decreasing popularity, ties by ascending id.
    pub fn by_popularity(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.popularity.len()).collect();
        order.sort_by(|&a, &b| self.popularity[b].cmp(&self.popularity[a]).then(a.cmp(&b)));
        order
    }
}

/// Popularity `f_i^R = |U_i^R|` and the long-tail set.
///
/// The head is the shortest prefix of items, sorted by (popularity desc, id
/// asc), whose cumulative popularity reaches 80% of all train ratings; the
/// item that crosses the threshold belongs to the head.
pub fn compute_item_stats(split: &SplitDataset) -> ItemStats {
    let popularity: Vec<u32> = (0..split.num_items())
        .map(|i| split.item_raters(i).len() as u32)
        .collect();
    let total: u64 = popularity.iter().map(|&p| p as u64).sum();
    let mut stats = ItemStats {
        long_tail: vec![true; popularity.len()],
        popularity,
        total_train_ratings: total,
    };
    let mut cumulative = 0u64;
    for item in stats.by_popularity() {
        // cumulative >= 0.8 * total, in integers
        if cumulative * 5 >= total * 4 {
            break;
        }
        cumulative += stats.popularity[item] as u64;
        stats.long_tail[item] = false;
    }
    stats
}

/// Min-max scaling to `[0, 1]`; a constant vector maps to all zeros.
pub fn min_max_normalize(x: &[f64]) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::argument("cannot normalize an empty vector"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::argument("cannot normalize non-finite values"));
    }
    let (lo, hi) = min_max(x);
    Ok(x.iter().map(|&v| scale_unit(v, lo, hi)).collect())
}

pub(crate) fn min_max(x: &[f64]) -> (f64, f64) {
    x.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

#[inline]
pub(crate) fn scale_unit(v: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// `I_u^{T+}`: the user's test items rated at least `threshold`, as item
/// indices.
pub fn relevant_test_items(
    split: &SplitDataset,
    user: UserId,
    threshold: f64,
) -> Result<Vec<usize>> {
    let u = split.user_index(user).ok_or(Error::UnknownUser(user))?;
    Ok(relevant_by_index(split, u, threshold))
}

pub(crate) fn relevant_by_index(split: &SplitDataset, user: usize, threshold: f64) -> Vec<usize> {
    split
        .test_items(user)
        .iter()
        .filter(|&&(_, r)| r >= threshold)
        .map(|&(i, _)| i)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivityBin {
    pub center: f64,
    pub mean_popularity: f64,
    pub users: usize,
}

/// Mean popularity of rated items as a function of user activity.
///
/// Users are binned by min-max-normalized `|I_u^R|`; only occupied bins are
/// returned, in increasing activity order.
pub fn activity_popularity_profile(split: &SplitDataset, bins: usize) -> Result<Vec<ActivityBin>> {
    if bins == 0 {
        return Err(Error::argument("bins must be at least 1"));
    }
    let activity: Vec<f64> = (0..split.num_users())
        .map(|u| split.train_items(u).len() as f64)
        .collect();
    let activity = min_max_normalize(&activity)?;
    let mut sums = vec![(0.0f64, 0usize); bins];
    for (u, &x) in activity.iter().enumerate() {
        let items = split.train_items(u);
        let avg = items
            .iter()
            .map(|&(i, _)| split.item_raters(i).len() as f64)
            .sum::<f64>()
            / items.len() as f64;
        let b = (math::floor(x * bins as f64) as usize).min(bins - 1);
        sums[b].0 += avg;
        sums[b].1 += 1;
    }
    Ok(sums
        .into_iter()
        .enumerate()
        .filter(|(_, (_, n))| *n > 0)
        .map(|(b, (s, n))| ActivityBin {
            center: (b as f64 + 0.5) / bins as f64,
            mean_popularity: s / n as f64,
            users: n,
        })
        .collect())
}
