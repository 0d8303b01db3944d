//! Edit-level evaluation of grammatical error correction.
//!
//! Hypothesis and reference corrections are reduced to edits over the source
//! sentence, each edit is embedded as the change it causes in a sentence encoder's
//! output, and the two sets of edit vectors are aligned with entropic unbalanced
//! optimal transport. Transported mass counts as true positives; mass left behind
//! on either side becomes false positives or false negatives. A meta-evaluation
//! layer turns sentence scores into system rankings and correlates them with
//! human judgements.

pub mod editvec;
pub mod embed;
pub mod extract;
pub mod fixtures;
pub mod matrix;
pub mod metaeval;
pub mod pipeline;
pub mod scoring;
pub mod textspan;
pub mod uot;

pub use editvec::{CostMode, MassMode, Vectorization};
pub use embed::{Embedder, EmbeddingVector};
pub use matrix::Matrix;
pub use pipeline::{EmbedderSpec, Report, RunConfig};
pub use scoring::{DegenerateCase, ScoringConfig, SentenceScore};
pub use textspan::{apply_edits, apply_edits_excluding, Edit, EditSet, TokenSeq};
pub use uot::{solve_uot, TransportPlan, UotConfig};
