//! Long-tail novelty preference learning and coverage-aware top-N re-ranking.
//!
//! The crate is `no_std` and only needs `alloc`. Everything here is a pure
//! function of in-memory data: rating ingestion, artifact formats and thread
//! pools live in the `ganc` companion crate.
//!
//! The pipeline, bottom-up:
//!
//! * [`dataset`] splits ratings per user and derives item popularity and the
//!   long-tail item set.
//! * [`preference`] estimates one long-tail preference value per user, up to
//!   the generalized estimator solved by alternating updates.
//! * [`scoring`] provides accuracy scorers (Pop, matrix factorization,
//!   imported scores) and coverage scorers (Rand, Stat, Dyn).
//! * [`rerank`] blends the two per user and assigns top-N sets, either
//!   independently or through the ordered sampling-based locally greedy
//!   procedure.
//! * [`oracle`] holds exhaustive and property-style checks for small instances.
//! * [`metrics`] evaluates a top-N collection.
#![no_std]
// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![warn(missing_debug_implementations)]

extern crate alloc;

pub mod dataset;
pub mod error;
pub mod metrics;
pub mod oracle;
pub mod preference;
pub mod rerank;
pub mod scoring;

mod math;

pub use dataset::{ItemId, ItemStats, Rating, SplitDataset, UserId};
pub use error::{Error, Result};
pub use metrics::{EvalReport, Protocol};
pub use preference::{PreferenceModel, PreferenceVector};
pub use rerank::{RecFrequency, TopNCollection};
