//! Pre-retrieval predictors of personalization performance.
//!
//! The crate covers the whole experimental pipeline: an inverted index with
//! term statistics ([`index`]), the 37 predictors ([`predictors`]),
//! original vs. personalized retrieval scored with NDCG ([`retrieval`],
//! [`eval`]), predictor/diffPerso correlations ([`stats`]) and per-profile
//! random-forest gating models with gain accounting ([`decision`]).

pub mod decision;
pub mod error;
pub mod eval;
pub mod forest;
pub mod index;
pub mod io;
pub mod observation;
pub mod pipeline;
pub mod predictors;
pub mod retrieval;
pub mod stats;
pub mod synth;
pub mod text;

pub use error::{Error, Result};
