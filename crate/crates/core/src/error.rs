use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate document id {0}")]
    DuplicateId(u64),

    #[error("unknown document id {0}")]
    UnknownDocument(u64),

    #[error("unknown category {0:?}")]
    UnknownCategory(String),

    #[error("malformed dump at byte {offset}: {message}")]
    Ingest { offset: u64, message: String },

    #[error("shard {shard} ({path}): {message}")]
    Shard {
        shard: usize,
        path: PathBuf,
        message: String,
    },

    #[error("corpus store {path}: {message}")]
    Store { path: PathBuf, message: String },

    #[error("training set has no positive documents")]
    EmptyPositives,

    #[error("document {0} is both a positive and a negative training case")]
    OverlappingTrainingSets(u64),

    #[error("token {0:?} is not a model feature")]
    UnknownFeature(String),

    #[error("training case index {index} out of range ({len} cases)")]
    CaseOutOfRange { index: usize, len: usize },

    #[error("invalid hyperparameter {name} = {value}: must be finite and positive")]
    InvalidHyperparameter { name: &'static str, value: f64 },

    #[error("cell ({x}, {y}) lies outside the {size}x{size} grid")]
    CellOutOfBounds { x: usize, y: usize, size: usize },

    #[error("value {0} is not on the hyperparameter grid")]
    NotOnGrid(f64),

    #[error("need {needed} non-member documents, corpus has {available}")]
    NotEnoughNegatives { needed: usize, available: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
