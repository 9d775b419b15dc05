//! Learning naive Bayes prior pseudo-counts from labeled documents.
//!
//! The search scores each `(λ₋, λ₊)` pair on a fixed 203×203 grid by
//! leave-one-out PPV over a balanced training set, hill-climbs that
//! surface from several starts, averages the explored terrain over seeds
//! and then ranks a whole corpus under the winning pair.

pub mod corpus;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod nb_model;
pub mod prior_search;
pub mod rng;
pub mod stats;
pub mod synthetic;

pub use error::{Error, Result};
