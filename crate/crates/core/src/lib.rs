//! Algorithmic core for model-based pretraining-corpus curation.
//!
//! Everything here is pure and allocation-only (`no_std` + `alloc`): text
//! statistics, the hashed n-gram classifier, the embedding MLP and cosine
//! scorers, score-based selection, n-gram decontamination and rank
//! aggregation. File formats, corpus streaming and the CLI live in the
//! `curate` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(any(feature = "std", test))]
extern crate std;

pub mod cosine;
pub mod decont;
pub mod document;
pub mod embedding;
pub mod error;
pub mod fnv;
pub mod mlp;
pub mod ngram;
pub mod rank;
pub mod rng;
pub mod select;
pub mod stats;
pub mod trainset;

pub use document::{ws_token_count, Document};
pub use error::{Error, Result};
