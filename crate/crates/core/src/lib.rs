pub mod classifiers;
pub mod cli;
pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod synthgen;
pub mod textnorm;
pub mod topics;
pub mod util;

pub use error::{Error, Result};
