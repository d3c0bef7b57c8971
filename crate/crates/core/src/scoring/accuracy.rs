use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::{min_max, scale_unit, ItemId, ItemStats, SplitDataset, UserId};
use crate::error::{Error, Result};
use crate::metrics::Protocol;
use crate::rerank::candidates;

/// Per-user accuracy score `a(u, i)` in `[0, 1]`, addressed by split indices.
///
/// Callers never ask for items in the user's train set.
pub trait AccuracyScorer: Sync {
    fn score(&self, user: usize, item: usize) -> f64;

    /// Dense scores for every item index; `out.len()` is the item count.
    fn fill_user(&self, user: usize, out: &mut [f64]) {
        for (item, slot) in out.iter_mut().enumerate() {
            *slot = self.score(user, item);
        }
    }

    /// Short label used in run manifests, e.g. `Pop`.
    fn label(&self) -> &'static str;
}

impl<A: AccuracyScorer + ?Sized> AccuracyScorer for &A {
    fn score(&self, user: usize, item: usize) -> f64 {
        (**self).score(user, item)
    }

    fn fill_user(&self, user: usize, out: &mut [f64]) {
        (**self).fill_user(user, out)
    }

    fn label(&self) -> &'static str {
        (**self).label()
    }
}

/// Most-popular: `a(i) = 1` for the user's top-N candidates by train
/// popularity (ties by ascending item id), `0` otherwise.
#[derive(Debug, Clone)]
pub struct PopScorer {
    top: Vec<Vec<usize>>,
}

impl PopScorer {
    /// Top-N over all unseen items.
    pub fn new(split: &SplitDataset, stats: &ItemStats, n: usize) -> Self {
        Self::for_protocol(split, stats, n, Protocol::AllUnrated)
    }

    /// Top-N over the candidate set the protocol ranks for each user.
    pub fn for_protocol(
        split: &SplitDataset,
        stats: &ItemStats,
        n: usize,
        protocol: Protocol,
    ) -> Self {
        let rank = {
            let mut rank = vec![0usize; split.num_items()];
            for (pos, item) in stats.by_popularity().into_iter().enumerate() {
                rank[item] = pos;
            }
            rank
        };
        let top = (0..split.num_users())
            .map(|u| {
                let mut c = candidates(split, u, protocol);
                c.sort_unstable_by_key(|&i| rank[i]);
                c.truncate(n);
                c.sort_unstable();
                c
            })
            .collect();
        PopScorer { top }
    }

    pub fn top_items(&self, user: usize) -> &[usize] {
        &self.top[user]
    }
}

impl AccuracyScorer for PopScorer {
    fn score(&self, user: usize, item: usize) -> f64 {
        if self.top[user].binary_search(&item).is_ok() {
            1.0
        } else {
            0.0
        }
    }

    fn fill_user(&self, user: usize, out: &mut [f64]) {
        out.fill(0.0);
        for &i in &self.top[user] {
            out[i] = 1.0;
        }
    }

    fn label(&self) -> &'static str {
        "Pop"
    }
}

/// Scores imported from another model, min-max normalized per user.
/// Pairs absent from the import score 0.
#[derive(Debug, Clone)]
pub struct ExternalScores {
    // (item index, normalized score), sorted by item index
    rows: Vec<Vec<(usize, f64)>>,
    dropped: usize,
}

impl ExternalScores {
    /// Builds from `(user, item, raw score)` rows. Duplicate pairs keep the
    /// last score; rows naming users or items outside the split are dropped.
    pub fn new<I>(split: &SplitDataset, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (UserId, ItemId, f64)>,
    {
        let mut per_user: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); split.num_users()];
        let mut dropped = 0;
        for (user, item, score) in rows {
            if !score.is_finite() {
                return Err(Error::argument(format!(
                    "score for ({user}, {item}) is not finite"
                )));
            }
            match (split.user_index(user), split.item_index(item)) {
                (Some(u), Some(i)) => {
                    per_user[u].insert(i, score);
                }
                _ => dropped += 1,
            }
        }
        let rows = per_user
            .into_iter()
            .map(|m| {
                let raw: Vec<f64> = m.values().copied().collect();
                let (lo, hi) = min_max(&raw);
                m.into_iter()
                    .map(|(i, s)| (i, scale_unit(s, lo, hi)))
                    .collect()
            })
            .collect();
        Ok(ExternalScores { rows, dropped })
    }

    /// Rows that named a user or item outside the split.
    pub fn dropped_rows(&self) -> usize {
        self.dropped
    }
}

impl AccuracyScorer for ExternalScores {
    fn score(&self, user: usize, item: usize) -> f64 {
        let row = &self.rows[user];
        row.binary_search_by_key(&item, |&(i, _)| i)
            .map_or(0.0, |k| row[k].1)
    }

    fn fill_user(&self, user: usize, out: &mut [f64]) {
        out.fill(0.0);
        for &(i, s) in &self.rows[user] {
            out[i] = s;
        }
    }

    fn label(&self) -> &'static str {
        "External"
    }
}

/// Dense `|U| x |I|` score table, row-major, values already in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    num_items: usize,
    values: Vec<f64>,
}

impl ScoreMatrix {
    pub fn new(num_users: usize, num_items: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != num_users * num_items {
            return Err(Error::argument(format!(
                "expected {} scores, got {}",
                num_users * num_items,
                values.len()
            )));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::argument("scores must lie in [0, 1]"));
        }
        Ok(ScoreMatrix { num_items, values })
    }

    /// Scales every score by `factor`, which must keep them in `[0, 1]`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let values = self.values.iter().map(|v| v * factor).collect();
        ScoreMatrix::new(
            self.values.len() / self.num_items.max(1),
            self.num_items,
            values,
        )
    }
}

impl AccuracyScorer for ScoreMatrix {
    fn score(&self, user: usize, item: usize) -> f64 {
        self.values[user * self.num_items + item]
    }

    fn fill_user(&self, user: usize, out: &mut [f64]) {
        out.copy_from_slice(&self.values[user * self.num_items..(user + 1) * self.num_items]);
    }

    fn label(&self) -> &'static str {
        "Matrix"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{compute_item_stats, Rating};

    // popularity: item 1 -> 5, item 2 -> 3, item 3 -> 1
    fn pop_split() -> SplitDataset {
        let mut train = Vec::new();
        for u in 0..5 {
            train.push(Rating::new(u, 1, 3.0));
        }
        for u in 1..4 {
            train.push(Rating::new(u, 2, 3.0));
        }
        train.push(Rating::new(4, 3, 3.0));
        train.push(Rating::new(9, 1, 3.0));
        let test = vec![Rating::new(9, 2, 5.0), Rating::new(9, 3, 4.0)];
        SplitDataset::from_parts(train, test).unwrap()
    }

    #[test]
    fn pop_skips_seen_items() {
        let s = pop_split();
        let stats = compute_item_stats(&s);
        let pop = PopScorer::new(&s, &stats, 2);
        let u = s.user_index(UserId(9)).unwrap();
        let mut out = vec![0.0; 3];
        pop.fill_user(u, &mut out);
        assert_eq!(out, vec![0.0, 1.0, 1.0]);
    }

    #[test]
    fn pop_cutoffs() {
        // user 0 saw item 1 only
        let s = pop_split();
        let stats = compute_item_stats(&s);
        let pop = PopScorer::new(&s, &stats, 1);
        assert_eq!(pop.top_items(0), &[1]);
        let all = PopScorer::new(&s, &stats, 3);
        assert_eq!(all.top_items(0), &[1, 2]);
    }

    #[test]
    fn pop_under_rated_test_protocol() {
        let s = pop_split();
        let stats = compute_item_stats(&s);
        let pop = PopScorer::for_protocol(&s, &stats, 1, Protocol::RatedTestItems);
        let u = s.user_index(UserId(9)).unwrap();
        assert_eq!(pop.top_items(u), &[1]);
        assert!(pop.top_items(0).is_empty());
    }

    #[test]
    fn external_normalizes_per_user() {
        let s = pop_split();
        let ext = ExternalScores::new(
            &s,
            [
                (UserId(0), ItemId(2), 0.9),
                (UserId(0), ItemId(3), 0.1),
                (UserId(0), ItemId(42), 7.0),
            ],
        )
        .unwrap();
        assert_eq!(ext.score(0, 1), 1.0);
        assert_eq!(ext.score(0, 2), 0.0);
        assert_eq!(ext.score(1, 1), 0.0);
        assert_eq!(ext.dropped_rows(), 1);
    }

    #[test]
    fn external_duplicate_pair_last_wins() {
        let s = pop_split();
        let ext = ExternalScores::new(
            &s,
            [
                (UserId(0), ItemId(2), 0.1),
                (UserId(0), ItemId(3), 0.5),
                (UserId(0), ItemId(2), 0.9),
            ],
        )
        .unwrap();
        assert_eq!(ext.score(0, 1), 1.0);
        assert_eq!(ext.score(0, 2), 0.0);
    }

    #[test]
    fn matrix_validates_range() {
        assert!(ScoreMatrix::new(1, 2, vec![0.5, 1.5]).is_err());
        assert!(ScoreMatrix::new(1, 2, vec![0.5]).is_err());
        let m = ScoreMatrix::new(2, 2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(m.score(1, 0), 0.3);
    }
}
