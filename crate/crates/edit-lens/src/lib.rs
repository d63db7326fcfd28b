//! Post-edit based machine translation error analysis.
//!
//! Given tokenized MT outputs and their human post-edits, this crate
//! computes TER-family scores (HTER against the targeted post-edit, mTER
//! against the closest of all post-edits, free-shift variants on words and
//! lemmas), BLEU, PER and the Kendall reordering score; decomposes errors
//! into morphology / lexical / word-order indicators; classifies shifted
//! blocks by POS and dependency label; breaks scores down by sentence
//! length and document; and runs paired bootstrap, z-score and approximate
//! randomization significance tests.
//!
//! Per-segment scoring and resampling fan out over rayon (the `parallel`
//! feature, on by default); a sequential fallback compiles without it.
//! Results are deterministic either way.
//!
//! The `edit-lens` binary drives everything from a TOML manifest; see
//! [`manifest`] for the schema and [`report`] for the command entry points.

pub mod config;
pub mod corpus;
pub mod error;
pub mod exec;
pub mod manifest;
pub mod metrics;
pub mod profile;
pub mod report;
pub mod stats;
pub mod synth;
pub mod ter;

pub use error::{Error, Result};
