//! Script-based MPAA rating prediction.
//!
//! The crate covers the whole pipeline: corpus ingestion and stratified
//! splitting, lexicon features, tokenization and embeddings, a small dense
//! numerics core with hand-written backward passes, the attention LSTM
//! classifier, three comparison baselines, and the evaluation/analysis
//! tables.

pub mod baselines;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod lexicon;
pub mod model;
pub mod numerics;
pub mod text;

pub use error::{Error, Result};
