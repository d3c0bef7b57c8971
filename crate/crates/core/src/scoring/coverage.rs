use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::ItemStats;
use crate::error::{Error, Result};
use crate::math;
use crate::rerank::RecFrequency;

/// Per-item coverage score `c(i)`.
pub trait CoverageScorer {
    fn score(&self, item: usize) -> f64;
}

impl<C: CoverageScorer + ?Sized> CoverageScorer for &C {
    fn score(&self, item: usize) -> f64 {
        (**self).score(item)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CoverageKind {
    Rand,
    Stat,
    Dyn,
}

impl CoverageKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CoverageKind::Rand => "rand",
            CoverageKind::Stat => "stat",
            CoverageKind::Dyn => "dyn",
        }
    }
}

impl fmt::Display for CoverageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CoverageKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rand" | "random" => Ok(CoverageKind::Rand),
            "stat" | "static" => Ok(CoverageKind::Stat),
            "dyn" | "dynamic" => Ok(CoverageKind::Dyn),
            other => Err(Error::argument(format!(
                "unknown coverage recommender `{other}`"
            ))),
        }
    }
}

/// `c(i) = 1 / sqrt(f_i^R + 1)`, fixed for the run.
#[derive(Debug, Clone)]
pub struct StatCoverage {
    scores: Vec<f64>,
}

impl StatCoverage {
    pub fn new(stats: &ItemStats) -> Self {
        StatCoverage {
            scores: stats
                .popularity
                .iter()
                .map(|&f| inverse_sqrt_count(f))
                .collect(),
        }
    }
}

impl CoverageScorer for StatCoverage {
    fn score(&self, item: usize) -> f64 {
        self.scores[item]
    }
}

/// `c(i) ~ U[0, 1)`, drawn once per item in index order.
#[derive(Debug, Clone)]
pub struct RandCoverage {
    scores: Vec<f64>,
}

impl RandCoverage {
    pub fn new(num_items: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        RandCoverage {
            scores: (0..num_items).map(|_| rng.gen::<f64>()).collect(),
        }
    }
}

impl CoverageScorer for RandCoverage {
    fn score(&self, item: usize) -> f64 {
        self.scores[item]
    }
}

/// `c(i) = 1 / sqrt(f_i^A + 1)` over the recommendations assigned so far.
/// Reads the frequency at call time.
#[derive(Debug, Clone, Copy)]
pub struct DynCoverage<'a> {
    freq: &'a RecFrequency,
}

impl<'a> DynCoverage<'a> {
    pub fn new(freq: &'a RecFrequency) -> Self {
        DynCoverage { freq }
    }
}

impl CoverageScorer for DynCoverage<'_> {
    fn score(&self, item: usize) -> f64 {
        inverse_sqrt_count(self.freq.get(item))
    }
}

#[inline]
pub(crate) fn inverse_sqrt_count(f: u32) -> f64 {
    1.0 / math::sqrt(f as f64 + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn stat_formula() {
        let stats = ItemStats {
            popularity: vec![0, 3, 99],
            long_tail: vec![true, true, true],
            total_train_ratings: 102,
        };
        let c = StatCoverage::new(&stats);
        assert_eq!(c.score(0), 1.0);
        assert_eq!(c.score(1), 0.5);
        assert!((c.score(2) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn dyn_reads_live_frequency() {
        let mut freq = RecFrequency::new(2);
        assert_eq!(DynCoverage::new(&freq).score(0), 1.0);
        let mut last = 1.0;
        for k in 1..20 {
            freq.record(&[0]);
            let c = DynCoverage::new(&freq).score(0);
            if k == 1 {
                assert!((c - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
            }
            assert!(c < last);
            last = c;
        }
        assert_eq!(DynCoverage::new(&freq).score(1), 1.0);
    }

    #[test]
    fn stat_equals_dyn_on_equal_counts() {
        let stats = ItemStats {
            popularity: vec![4, 0, 7],
            long_tail: vec![false; 3],
            total_train_ratings: 11,
        };
        let mut freq = RecFrequency::new(3);
        for (i, &p) in stats.popularity.iter().enumerate() {
            for _ in 0..p {
                freq.record(&[i]);
            }
        }
        let (s, d) = (StatCoverage::new(&stats), DynCoverage::new(&freq));
        for i in 0..3 {
            assert_eq!(s.score(i), d.score(i));
        }
    }

    #[test]
    fn rand_is_seeded_and_stable() {
        let a = RandCoverage::new(1000, 5);
        let b = RandCoverage::new(1000, 5);
        let c = RandCoverage::new(1000, 6);
        assert_eq!(a.score(17), a.score(17));
        assert_eq!(a.scores, b.scores);
        assert_ne!(a.scores, c.scores);
        assert!(a.scores.iter().all(|s| (0.0..1.0).contains(s)));
    }

    #[test]
    fn rand_mean_is_one_half() {
        let c = RandCoverage::new(100_000, 11);
        let mean = c.scores.iter().sum::<f64>() / c.scores.len() as f64;
        assert!((0.49..=0.51).contains(&mean), "mean {mean}");
    }
}
