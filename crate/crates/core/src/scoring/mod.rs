//! Accuracy scorers `a(u, i)` and coverage scorers `c(i)`, all in `[0, 1]`.

mod accuracy;
mod coverage;
mod mf;

pub use accuracy::{AccuracyScorer, ExternalScores, PopScorer, ScoreMatrix};
pub use coverage::{CoverageKind, CoverageScorer, DynCoverage, RandCoverage, StatCoverage};
pub use mf::{mf_accuracy_scorer, rmse, rsvd_train, MfModel, MfScorer, RsvdConfig};
