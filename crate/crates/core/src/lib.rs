//! Topic modelling toolkit for comparing lemmatized and surface-form
//! corpus views: corpus ingestion, document-frequency vocabularies, LDA
//! trained by stochastic variational inference, and word-intrusion
//! evaluation.

pub mod corpus;
pub mod error;
pub mod intrusion;
pub mod jsonl;
pub mod lda;
pub mod pipeline;
pub mod vocab;

pub use error::{Error, Result};
