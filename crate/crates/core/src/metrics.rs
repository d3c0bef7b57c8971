//! Accuracy, novelty and coverage metrics over a [`TopNCollection`].
//!
//! Averages run over the users holding a list. Under
//! [`Protocol::RatedTestItems`] users with fewer than `n` test items hold none
//! and drop out of every average.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::dataset::{relevant_by_index, ItemStats, SplitDataset, UserId};
use crate::error::{Error, Result};
use crate::math;
use crate::rerank::TopNCollection;

/// Which candidate items are ranked for each user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Protocol {
    /// Every train item the user has not rated.
    #[default]
    AllUnrated,
    /// Only the items the user rated in the test set.
    RatedTestItems,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::AllUnrated => "all_unrated",
            Protocol::RatedTestItems => "rated_test_items",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "all_unrated" => Ok(Protocol::AllUnrated),
            "rated_test_items" => Ok(Protocol::RatedTestItems),
            other => Err(Error::argument(format!("unknown protocol `{other}`"))),
        }
    }
}

pub const DEFAULT_THRESHOLD: f64 = 4.0;
pub const DEFAULT_BETA: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UserMetrics {
    pub user: UserId,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalReport {
    pub n: usize,
    pub protocol: Protocol,
    pub users_evaluated: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub lt_accuracy: f64,
    pub strat_recall: f64,
    pub coverage: f64,
    pub gini: f64,
    #[cfg_attr(
        feature = "serde",
        serde(default, skip_serializing_if = "Option::is_none")
    )]
    pub per_user: Option<Vec<UserMetrics>>,
}

fn hits(list: &[usize], relevant: &[usize]) -> usize {
    list.iter()
        .filter(|i| relevant.binary_search(i).is_ok())
        .count()
}

fn users_or_err(coll: &TopNCollection) -> Result<Vec<usize>> {
    let users: Vec<usize> = coll.evaluated_users().collect();
    if users.is_empty() {
        return Err(Error::UndefinedMetric(
            "no user holds a recommendation list".into(),
        ));
    }
    Ok(users)
}

/// Total number of relevant items retrieved.
pub fn hit_count(coll: &TopNCollection, split: &SplitDataset, threshold: f64) -> usize {
    coll.evaluated_users()
        .map(|u| hits(coll.list(u), &relevant_by_index(split, u, threshold)))
        .sum()
}

/// Precision, recall and F-measure at `n`. A user without relevant test
/// items counts with recall 0.
pub fn precision_recall_at_n(
    coll: &TopNCollection,
    split: &SplitDataset,
    threshold: f64,
) -> Result<(f64, f64, f64)> {
    let (p, r, _) = precision_recall_per_user(coll, split, threshold)?;
    Ok((p, r, f_measure(p, r)))
}

fn precision_recall_per_user(
    coll: &TopNCollection,
    split: &SplitDataset,
    threshold: f64,
) -> Result<(f64, f64, Vec<UserMetrics>)> {
    let users = users_or_err(coll)?;
    let n = coll.n() as f64;
    let mut total_hits = 0usize;
    let mut recall_sum = 0.0;
    let mut per_user = Vec::with_capacity(users.len());
    for &u in &users {
        let rel = relevant_by_index(split, u, threshold);
        let h = hits(coll.list(u), &rel);
        let recall = if rel.is_empty() {
            0.0
        } else {
            h as f64 / rel.len() as f64
        };
        total_hits += h;
        recall_sum += recall;
        per_user.push(UserMetrics {
            user: split.user_id(u),
            precision: h as f64 / n,
            recall,
        });
    }
    let m = users.len() as f64;
    Ok((total_hits as f64 / (n * m), recall_sum / m, per_user))
}

/// Harmonic mean, 0 when both inputs are 0.
pub fn f_measure(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Pooled hits over pooled relevant items.
pub fn micro_recall(coll: &TopNCollection, split: &SplitDataset, threshold: f64) -> Result<f64> {
    let mut h = 0usize;
    let mut rel_total = 0usize;
    for u in coll.evaluated_users() {
        let rel = relevant_by_index(split, u, threshold);
        h += hits(coll.list(u), &rel);
        rel_total += rel.len();
    }
    if rel_total == 0 {
        return Err(Error::UndefinedMetric("no relevant test items".into()));
    }
    Ok(h as f64 / rel_total as f64)
}

/// Share of recommended slots holding long-tail items.
pub fn lt_accuracy_at_n(coll: &TopNCollection, stats: &ItemStats) -> Result<f64> {
    let users = users_or_err(coll)?;
    let lt: usize = users
        .iter()
        .map(|&u| {
            coll.list(u)
                .iter()
                .filter(|&&i| stats.is_long_tail(i))
                .count()
        })
        .sum();
    Ok(lt as f64 / (coll.n() * users.len()) as f64)
}

/// Recall with each relevant item weighted by `f_i^R ^ -beta`, pooled over
/// users. Zero popularity counts as 1.
pub fn strat_recall_at_n(
    coll: &TopNCollection,
    split: &SplitDataset,
    stats: &ItemStats,
    beta: f64,
    threshold: f64,
) -> Result<f64> {
    if !(beta >= 0.0) {
        return Err(Error::argument(format!(
            "beta must be non-negative, got {beta}"
        )));
    }
    let weight = |i: usize| math::pow(stats.popularity[i].max(1) as f64, -beta);
    let mut num = 0.0;
    let mut den = 0.0;
    for u in coll.evaluated_users() {
        let rel = relevant_by_index(split, u, threshold);
        for &i in &rel {
            den += weight(i);
        }
        for &i in coll.list(u) {
            if rel.binary_search(&i).is_ok() {
                num += weight(i);
            }
        }
    }
    if den == 0.0 {
        return Err(Error::UndefinedMetric(
            "stratified recall has no relevant test items".into(),
        ));
    }
    Ok(num / den)
}

/// Distinct recommended items over the train item universe.
pub fn coverage_at_n(coll: &TopNCollection, split: &SplitDataset) -> f64 {
    let freq = coll.frequencies(split.num_items());
    let distinct = freq.counts().iter().filter(|&&c| c > 0).count();
    distinct as f64 / split.num_items() as f64
}

/// Gini index of item recommendation frequencies, never-recommended items
/// included as zeros.
pub fn gini(frequencies: &[u32]) -> Result<f64> {
    let mut f: Vec<u64> = frequencies.iter().map(|&x| x as u64).collect();
    let total: u64 = f.iter().sum();
    if total == 0 {
        return Err(Error::UndefinedMetric(
            "gini of an all-zero frequency vector".into(),
        ));
    }
    f.sort_unstable();
    let m = f.len() as u128;
    let weighted: u128 = f
        .iter()
        .enumerate()
        .map(|(j, &x)| (m - j as u128) * x as u128)
        .sum();
    let ratio = weighted as f64 / total as f64;
    Ok((m as f64 + 1.0 - 2.0 * ratio) / m as f64)
}

/// Every metric at once. `n` may be smaller than the collection's list
/// length, in which case lists are cut to their first `n` items.
pub fn evaluate(
    coll: &TopNCollection,
    split: &SplitDataset,
    stats: &ItemStats,
    protocol: Protocol,
    n: usize,
    beta: f64,
    threshold: f64,
) -> Result<EvalReport> {
    if coll.protocol() != protocol {
        return Err(Error::contract(format!(
            "collection was generated under {}, evaluation requested {}",
            coll.protocol(),
            protocol
        )));
    }
    if n > coll.n() || n == 0 {
        return Err(Error::contract(format!(
            "cannot evaluate a top-{} collection at {n}",
            coll.n()
        )));
    }
    if split.test().is_empty() {
        return Err(Error::UndefinedMetric(
            "recall over an empty test set".into(),
        ));
    }
    let cut;
    let coll = if n < coll.n() {
        cut = coll.truncated(n)?;
        &cut
    } else {
        coll
    };
    coll.validate(split)?;
    let (precision, recall, per_user) = precision_recall_per_user(coll, split, threshold)?;
    Ok(EvalReport {
        n,
        protocol,
        users_evaluated: per_user.len(),
        precision,
        recall,
        f_measure: f_measure(precision, recall),
        lt_accuracy: lt_accuracy_at_n(coll, stats)?,
        strat_recall: strat_recall_at_n(coll, split, stats, beta, threshold)?,
        coverage: coverage_at_n(coll, split),
        gini: gini(coll.frequencies(split.num_items()).counts())?,
        per_user: Some(per_user),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{compute_item_stats, Rating};
    use alloc::vec;

    #[test]
    fn gini_examples() {
        assert_eq!(gini(&[7; 13]).unwrap(), 0.0);
        assert_eq!(gini(&[1, 3]).unwrap(), 0.25);
        assert_eq!(gini(&[3, 1]).unwrap(), 0.25);
        assert_eq!(gini(&[0, 0, 0, 12]).unwrap(), 0.75);
        assert!(matches!(gini(&[0, 0]), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn f_measure_examples() {
        assert!((f_measure(0.4, 0.5) - 0.4 / 0.9).abs() < 1e-12);
        assert_eq!(f_measure(0.0, 0.0), 0.0);
    }

    #[test]
    fn protocol_round_trip() {
        for p in [Protocol::AllUnrated, Protocol::RatedTestItems] {
            assert_eq!(p.as_str().parse::<Protocol>().unwrap(), p);
        }
        assert!("most_popular".parse::<Protocol>().is_err());
    }

    #[test]
    fn single_user_precision_recall() {
        // user 1 has 6 test items, 4 of them relevant
        let train = vec![Rating::new(1, 0, 3.0)]
            .into_iter()
            .chain((1..=9).map(|i| Rating::new(2, i, 3.0)))
            .chain((10..=15).map(|i| Rating::new(3, i, 3.0)))
            .collect();
        let test = vec![
            Rating::new(1, 1, 5.0),
            Rating::new(1, 2, 4.0),
            Rating::new(1, 3, 4.0),
            Rating::new(1, 4, 5.0),
            Rating::new(1, 5, 2.0),
            Rating::new(1, 6, 1.0),
        ];
        let s = SplitDataset::from_parts(train, test).unwrap();
        let lists = vec![
            vec![1, 2, 5, 7, 8],
            s.unseen_items(1)[..5].to_vec(),
            s.unseen_items(2)[..5].to_vec(),
        ];
        let coll = TopNCollection::new(5, Protocol::AllUnrated, lists);
        let stats = compute_item_stats(&s);
        let r = evaluate(&coll, &s, &stats, Protocol::AllUnrated, 5, 0.5, 4.0).unwrap();
        // users without relevant test items keep recall 0 and stay in the average
        assert!((r.precision - 2.0 / 15.0).abs() < 1e-12);
        assert!((r.recall - 0.5 / 3.0).abs() < 1e-12);
        assert_eq!(r.per_user.as_ref().unwrap()[0].precision, 0.4);
        assert_eq!(r.per_user.as_ref().unwrap()[0].recall, 0.5);
        assert_eq!(hit_count(&coll, &s, 4.0), 2);
        assert!(matches!(
            evaluate(&coll, &s, &stats, Protocol::RatedTestItems, 5, 0.5, 4.0),
            Err(Error::Contract(_))
        ));
    }
}
