//! File formats, stage drivers and the pipeline runner around `curate-core`.

pub mod analysis;
pub mod config;
pub mod corpus;
pub mod decont;
pub mod error;
pub mod formats;
pub mod hash;
pub mod pipeline;
pub mod scores;
pub mod selection;
pub mod stages;
pub mod trainset;

pub use error::{Error, Result};
