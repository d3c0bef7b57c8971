use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{scale_unit, ItemId, Rating, SplitDataset, UserId};
use crate::error::{Error, Result};
use crate::math::{dot, sqrt};
use crate::scoring::AccuracyScorer;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RsvdConfig {
    /// Latent dimension `g`.
    pub dim: usize,
    pub lambda: f64,
    /// Learning rate `eta`.
    pub eta: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for RsvdConfig {
    fn default() -> Self {
        RsvdConfig {
            dim: 100,
            lambda: 0.05,
            eta: 0.03,
            epochs: 30,
            seed: 0,
        }
    }
}

/// Latent factor model without bias terms: `r_ui ≈ p_u · q_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MfModel {
    users: Vec<UserId>,
    items: Vec<ItemId>,
    dim: usize,
    // row-major |U| x dim and |I| x dim
    user_factors: Vec<f64>,
    item_factors: Vec<f64>,
    global_mean: f64,
}

impl MfModel {
    /// Reassembles a model from stored factors. `users` and `items` must be
    /// strictly ascending.
    pub fn from_parts(
        users: Vec<UserId>,
        items: Vec<ItemId>,
        dim: usize,
        user_factors: Vec<f64>,
        item_factors: Vec<f64>,
        global_mean: f64,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::argument("latent dimension must be positive"));
        }
        if user_factors.len() != users.len() * dim || item_factors.len() != items.len() * dim {
            return Err(Error::argument("factor tables do not match the id lists"));
        }
        if !users.windows(2).all(|w| w[0] < w[1]) || !items.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::argument("model ids must be strictly ascending"));
        }
        if user_factors
            .iter()
            .chain(&item_factors)
            .any(|v| !v.is_finite())
        {
            return Err(Error::argument("factor tables contain non-finite entries"));
        }
        Ok(MfModel {
            users,
            items,
            dim,
            user_factors,
            item_factors,
            global_mean,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn users(&self) -> &[UserId] {
        &self.users
    }

    pub fn items(&self) -> &[ItemId] {
        &self.items
    }

    pub fn global_mean(&self) -> f64 {
        self.global_mean
    }

    pub fn user_factors(&self, user: usize) -> &[f64] {
        &self.user_factors[user * self.dim..(user + 1) * self.dim]
    }

    pub fn item_factors(&self, item: usize) -> &[f64] {
        &self.item_factors[item * self.dim..(item + 1) * self.dim]
    }

    /// Raw prediction, or `None` when either id is unknown to the model.
    pub fn predict(&self, user: UserId, item: ItemId) -> Option<f64> {
        let u = self.users.binary_search(&user).ok()?;
        let i = self.items.binary_search(&item).ok()?;
        Some(dot(self.user_factors(u), self.item_factors(i)))
    }
}

/// Regularized SVD trained by SGD over shuffled train ratings.
///
/// Per rating: `e = r - p·q`, `p += eta (e q - lambda p)`,
/// `q += eta (e p - lambda q)`, both from the pre-update factors.
/// Factors start i.i.d. uniform in `[-0.05, 0.05]`.
pub fn rsvd_train(split: &SplitDataset, config: RsvdConfig) -> Result<MfModel> {
    if config.dim == 0 || !(config.eta > 0.0) || !(config.lambda >= 0.0) || config.epochs == 0 {
        return Err(Error::argument(
            "rsvd needs dim >= 1, eta > 0, lambda >= 0, epochs >= 1",
        ));
    }
    let g = config.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut init =
        |n: usize| -> Vec<f64> { (0..n * g).map(|_| rng.gen_range(-0.05..=0.05)).collect() };
    let mut p = init(split.num_users());
    let mut q = init(split.num_items());

    let mut triples: Vec<(usize, usize, f64)> = (0..split.num_users())
        .flat_map(|u| split.train_items(u).iter().map(move |&(i, r)| (u, i, r)))
        .collect();
    let mut pu_old = vec![0.0; g];
    for epoch in 1..=config.epochs {
        triples.shuffle(&mut rng);
        for &(u, i, r) in &triples {
            let pu = &mut p[u * g..(u + 1) * g];
            let qi = &mut q[i * g..(i + 1) * g];
            let e = r - dot(pu, qi);
            pu_old.copy_from_slice(pu);
            for k in 0..g {
                pu[k] += config.eta * (e * qi[k] - config.lambda * pu[k]);
                qi[k] += config.eta * (e * pu_old[k] - config.lambda * qi[k]);
            }
        }
        if p.iter().chain(&q).any(|v| !v.is_finite()) {
            return Err(Error::Divergence(epoch));
        }
    }
    Ok(MfModel {
        users: split.users().to_vec(),
        items: split.items().to_vec(),
        dim: g,
        user_factors: p,
        item_factors: q,
        global_mean: split.mean_train_rating(),
    })
}

/// Root mean squared error of raw predictions; pairs unknown to the model are
/// predicted with the global train mean.
pub fn rmse(model: &MfModel, ratings: &[Rating]) -> Result<f64> {
    if ratings.is_empty() {
        return Err(Error::argument("rmse needs at least one rating"));
    }
    let sse: f64 = ratings
        .iter()
        .map(|r| {
            let pred = model.predict(r.user, r.item).unwrap_or(model.global_mean);
            (r.value - pred) * (r.value - pred)
        })
        .sum();
    Ok(sqrt(sse / ratings.len() as f64))
}

/// Factor model re-indexed to a split, with per-user normalization bounds.
#[derive(Debug, Clone)]
pub struct MfScorer {
    dim: usize,
    user_factors: Vec<f64>,
    item_factors: Vec<f64>,
    bounds: Vec<(f64, f64)>,
}

/// Accuracy scorer from a factor model: raw predictions over each user's
/// unseen items, min-max normalized per user.
pub fn mf_accuracy_scorer(model: &MfModel, split: &SplitDataset) -> Result<MfScorer> {
    let g = model.dim;
    let mut user_factors = Vec::with_capacity(split.num_users() * g);
    for &user in split.users() {
        let u = model
            .users
            .binary_search(&user)
            .map_err(|_| Error::UnknownUser(user))?;
        user_factors.extend_from_slice(model.user_factors(u));
    }
    let mut item_factors = Vec::with_capacity(split.num_items() * g);
    for &item in split.items() {
        let i = model
            .items
            .binary_search(&item)
            .map_err(|_| Error::UnknownItem(item))?;
        item_factors.extend_from_slice(model.item_factors(i));
    }
    let mut scorer = MfScorer {
        dim: g,
        user_factors,
        item_factors,
        bounds: Vec::with_capacity(split.num_users()),
    };
    let mut raw = vec![0.0; split.num_items()];
    for u in 0..split.num_users() {
        scorer.raw_user(u, &mut raw);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in split.unseen_items(u) {
            lo = lo.min(raw[i]);
            hi = hi.max(raw[i]);
        }
        scorer.bounds.push((lo, hi));
    }
    Ok(scorer)
}

impl MfScorer {
    fn raw(&self, user: usize, item: usize) -> f64 {
        let g = self.dim;
        dot(
            &self.user_factors[user * g..(user + 1) * g],
            &self.item_factors[item * g..(item + 1) * g],
        )
    }

    fn raw_user(&self, user: usize, out: &mut [f64]) {
        for (item, slot) in out.iter_mut().enumerate() {
            *slot = self.raw(user, item);
        }
    }

    /// Raw `p_u · q_i` for split indices.
    pub fn raw_prediction(&self, user: usize, item: usize) -> f64 {
        self.raw(user, item)
    }
}

impl AccuracyScorer for MfScorer {
    fn score(&self, user: usize, item: usize) -> f64 {
        let (lo, hi) = self.bounds[user];
        scale_unit(self.raw(user, item), lo, hi)
    }

    fn fill_user(&self, user: usize, out: &mut [f64]) {
        self.raw_user(user, out);
        let (lo, hi) = self.bounds[user];
        for v in out.iter_mut() {
            *v = scale_unit(*v, lo, hi);
        }
    }

    fn label(&self) -> &'static str {
        "RSVD"
    }
}
