//! Concept-based abductive and contrastive explanations for classifiers that
//! read image embeddings.

pub mod analytics;
pub mod bundle;
pub mod cli;
pub mod domain;
pub mod erasure;
pub mod error;
pub mod explain;
pub mod linalg;
pub mod records;
pub mod synthetic;

pub use error::{Error, Result};
