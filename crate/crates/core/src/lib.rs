//! Contrastive domain adaptation of sentence embeddings with generated hard
//! negatives, plus the evaluation and analysis tooling around it.

pub mod analysis;
pub mod benchfilter;
pub mod contrastive;
pub mod corpus;
pub mod encoder;
pub mod error;
pub mod metrics;
pub mod negativegen;
pub mod pos;
pub mod toydomain;

pub use error::{Error, Result};
