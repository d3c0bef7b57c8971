use alloc::string::String;

use crate::dataset::{ItemId, UserId};

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("dataset is empty: {0}")]
    EmptyDataset(String),

    #[error("unknown user {0}")]
    UnknownUser(UserId),

    #[error("unknown item {0}")]
    UnknownItem(ItemId),

    #[error("item {0} has non-positive mediocrity coefficient {1}")]
    DegenerateMediocrity(ItemId, f64),

    #[error("factor training diverged at epoch {0}")]
    Divergence(usize),

    #[error("user {user} has only {available} candidate items, {requested} requested")]
    Infeasible {
        user: UserId,
        available: usize,
        requested: usize,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),
}

impl Error {
    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
