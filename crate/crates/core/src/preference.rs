//! Per-user long-tail novelty preference estimators.
//!
//! Every estimator returns a [`PreferenceVector`] with one value in `[0, 1]`
//! per user index of the split it was computed on.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{min_max, min_max_normalize, scale_unit, ItemStats, SplitDataset};
use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PreferenceModel {
    Activity,
    NormalizedLongTail,
    Tfidf,
    Generalized,
    Constant,
    Random,
}

impl PreferenceModel {
    pub fn as_str(self) -> &'static str {
        match self {
            PreferenceModel::Activity => "activity",
            PreferenceModel::NormalizedLongTail => "normalized_long_tail",
            PreferenceModel::Tfidf => "tfidf",
            PreferenceModel::Generalized => "generalized",
            PreferenceModel::Constant => "constant",
            PreferenceModel::Random => "random",
        }
    }
}

impl fmt::Display for PreferenceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PreferenceModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "activity" | "A" => PreferenceModel::Activity,
            "normalized_long_tail" | "normalized" | "N" => PreferenceModel::NormalizedLongTail,
            "tfidf" | "T" => PreferenceModel::Tfidf,
            "generalized" | "G" => PreferenceModel::Generalized,
            "constant" | "C" => PreferenceModel::Constant,
            "random" | "R" => PreferenceModel::Random,
            other => {
                return Err(Error::argument(format!(
                    "unknown preference model `{other}`"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceVector {
    pub model: PreferenceModel,
    /// `theta_u`, indexed by user index.
    pub theta: Vec<f64>,
    /// `w_i`, indexed by item index; only set by the generalized estimator.
    pub weights: Option<Vec<f64>>,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
}

impl PreferenceVector {
    pub fn new(model: PreferenceModel, theta: Vec<f64>) -> Self {
        PreferenceVector {
            model,
            theta,
            weights: None,
            iterations: None,
            converged: None,
        }
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.theta.iter().sum::<f64>() / self.theta.len() as f64
    }

    /// Population variance.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.theta.iter().map(|t| (t - m) * (t - m)).sum::<f64>() / self.theta.len() as f64
    }
}

/// `theta_u^A = |I_u^R|`, min-max normalized across users.
pub fn theta_activity(split: &SplitDataset) -> PreferenceVector {
    let counts: Vec<f64> = (0..split.num_users())
        .map(|u| split.train_items(u).len() as f64)
        .collect();
    // a split always has at least one user
    let theta = min_max_normalize(&counts).expect("split has users");
    PreferenceVector::new(PreferenceModel::Activity, theta)
}

/// `theta_u^N = |I_u^R ∩ L| / |I_u^R|`.
pub fn theta_normalized_longtail(split: &SplitDataset, stats: &ItemStats) -> PreferenceVector {
    let theta = (0..split.num_users())
        .map(|u| {
            let items = split.train_items(u);
            let lt = items
                .iter()
                .filter(|&&(i, _)| stats.is_long_tail(i))
                .count();
            lt as f64 / items.len() as f64
        })
        .collect();
    PreferenceVector::new(PreferenceModel::NormalizedLongTail, theta)
}

/// Per-user-item preference `theta_ui`, stored for observed train pairs only,
/// aligned with [`SplitDataset::train_items`].
#[derive(Debug, Clone, PartialEq)]
pub struct PerUserItemPreference {
    values: Vec<Vec<f64>>,
}

impl PerUserItemPreference {
    /// Wraps precomputed values; `values[u][k]` belongs to the `k`-th entry of
    /// `split.train_items(u)`.
    pub fn from_values(split: &SplitDataset, values: Vec<Vec<f64>>) -> Result<Self> {
        let aligned = values.len() == split.num_users()
            && values
                .iter()
                .enumerate()
                .all(|(u, v)| v.len() == split.train_items(u).len());
        if !aligned {
            return Err(Error::argument(
                "per-user-item values do not match the split",
            ));
        }
        Ok(PerUserItemPreference { values })
    }

    pub fn user(&self, user: usize) -> &[f64] {
        &self.values[user]
    }

    pub fn get(&self, split: &SplitDataset, user: usize, item: usize) -> Option<f64> {
        split
            .train_items(user)
            .binary_search_by_key(&item, |&(i, _)| i)
            .ok()
            .map(|k| self.values[user][k])
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().flatten().copied()
    }
}

/// `theta_ui = r_ui * ln(|U| / |U_i^R|)`, then jointly min-max projected to
/// `[0, 1]` over all train pairs.
pub fn compute_theta_ui(split: &SplitDataset) -> PerUserItemPreference {
    let n_users = split.num_users() as f64;
    let raw: Vec<Vec<f64>> = (0..split.num_users())
        .map(|u| {
            split
                .train_items(u)
                .iter()
                .map(|&(i, r)| r * math::ln(n_users / split.item_raters(i).len() as f64))
                .collect()
        })
        .collect();
    let (lo, hi) = min_max(&raw.iter().flatten().copied().collect::<Vec<_>>());
    let values = raw
        .into_iter()
        .map(|row| row.into_iter().map(|v| scale_unit(v, lo, hi)).collect())
        .collect();
    PerUserItemPreference { values }
}

/// `theta_u^T`: the plain mean of the user's projected `theta_ui`.
pub fn theta_tfidf(split: &SplitDataset) -> PreferenceVector {
    let theta_ui = compute_theta_ui(split);
    let theta = weighted_user_means(split, &theta_ui, None);
    PreferenceVector::new(PreferenceModel::Tfidf, theta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GeneralizedConfig {
    pub lambda1: f64,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for GeneralizedConfig {
    fn default() -> Self {
        GeneralizedConfig {
            lambda1: 1.0,
            tol: 1e-6,
            max_iters: 100,
        }
    }
}

/// Generalized preference `theta_u^G` with item weights `w_i`.
pub fn theta_generalized(
    split: &SplitDataset,
    config: GeneralizedConfig,
) -> Result<PreferenceVector> {
    let theta_ui = compute_theta_ui(split);
    theta_generalized_from(split, &theta_ui, config)
}

/// Alternating solver for
/// `min_w max_theta  sum_i w_i eps_i(theta) - lambda1 sum_i ln w_i`,
/// with `eps_i = sum_{u in U_i} 1 - (theta_ui - theta_u)^2`.
///
/// Starts from `w = 1` (so the first iterate is `theta^T`). Each iteration
/// sets `w_i = lambda1 / eps_i` and then `theta_u` to the `w`-weighted mean of
/// the user's `theta_ui`; it stops once the largest per-user change drops
/// below `tol`.
pub fn theta_generalized_from(
    split: &SplitDataset,
    theta_ui: &PerUserItemPreference,
    config: GeneralizedConfig,
) -> Result<PreferenceVector> {
    if !(config.lambda1 > 0.0) {
        return Err(Error::argument("lambda1 must be positive"));
    }
    if !(config.tol > 0.0) {
        return Err(Error::argument("tol must be positive"));
    }
    let mut weights = vec![1.0; split.num_items()];
    let mut theta = weighted_user_means(split, theta_ui, None);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iters {
        iterations += 1;
        let eps = mediocrity(split, theta_ui, &theta);
        weights = weights_from_mediocrity(split, &eps, config.lambda1)?;
        let next = weighted_user_means(split, theta_ui, Some(&weights));
        let delta = theta
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        theta = next;
        if delta < config.tol {
            converged = true;
            break;
        }
    }
    for t in &mut theta {
        *t = t.clamp(0.0, 1.0);
    }
    Ok(PreferenceVector {
        model: PreferenceModel::Generalized,
        theta,
        weights: Some(weights),
        iterations: Some(iterations),
        converged: Some(converged),
    })
}

/// Item mediocrity coefficients `eps_i` for the given user preferences.
pub fn mediocrity(
    split: &SplitDataset,
    theta_ui: &PerUserItemPreference,
    theta: &[f64],
) -> Vec<f64> {
    let mut eps = vec![0.0; split.num_items()];
    for (u, &t) in theta.iter().enumerate() {
        for (&(i, _), &v) in split.train_items(u).iter().zip(theta_ui.user(u)) {
            let d = v - t;
            eps[i] += 1.0 - d * d;
        }
    }
    eps
}

fn weights_from_mediocrity(split: &SplitDataset, eps: &[f64], lambda1: f64) -> Result<Vec<f64>> {
    eps.iter()
        .enumerate()
        .map(|(item, &e)| {
            if e > 0.0 {
                Ok(lambda1 / e)
            } else {
                Err(Error::DegenerateMediocrity(split.item_id(item), e))
            }
        })
        .collect()
}

/// `O(w, theta) - lambda1 * sum_i ln w_i`.
pub fn minimax_objective(
    split: &SplitDataset,
    theta_ui: &PerUserItemPreference,
    weights: &[f64],
    theta: &[f64],
    lambda1: f64,
) -> f64 {
    let eps = mediocrity(split, theta_ui, theta);
    weights
        .iter()
        .zip(&eps)
        .map(|(w, e)| w * e - lambda1 * math::ln(*w))
        .sum()
}

fn weighted_user_means(
    split: &SplitDataset,
    theta_ui: &PerUserItemPreference,
    weights: Option<&[f64]>,
) -> Vec<f64> {
    (0..split.num_users())
        .map(|u| {
            let (mut num, mut den) = (0.0, 0.0);
            for (&(i, _), &v) in split.train_items(u).iter().zip(theta_ui.user(u)) {
                let w = weights.map_or(1.0, |w| w[i]);
                num += w * v;
                den += w;
            }
            num / den
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Baseline {
    Constant(f64),
    Random(u64),
}

/// Non-learned preferences: one constant for everyone, or seeded uniform draws.
pub fn theta_baseline(num_users: usize, kind: Baseline) -> Result<PreferenceVector> {
    match kind {
        Baseline::Constant(c) => {
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::argument(format!(
                    "constant preference {c} outside [0, 1]"
                )));
            }
            Ok(PreferenceVector::new(
                PreferenceModel::Constant,
                vec![c; num_users],
            ))
        }
        Baseline::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let theta = (0..num_users).map(|_| rng.gen::<f64>()).collect();
            Ok(PreferenceVector::new(PreferenceModel::Random, theta))
        }
    }
}
