//! Sentence encoders behind one interface.
//!
//! Three backends: a deterministic hashing embedder for tests, an in-memory store
//! loaded from the JSON Lines interchange file, and an HTTP client for a remote
//! `/embed` service.

mod hashing;
mod remote;
mod store;

pub use hashing::{token_vector, HashingEmbedder, DEFAULT_TEST_DIM};
pub use remote::{RemoteEmbedder, RemoteOptions};
pub use store::{EmbeddingStore, STORE_FORMAT};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("no embedding stored for sentence {0:?}")]
    MissingEmbedding(String),
    #[error("embedding service error: {0}")]
    Service(String),
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("dimension mismatch: expected {expected}, found {found}{}", .line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    DimMismatch {
        expected: usize,
        found: usize,
        line: Option<usize>,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A finite real vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    /// Returns `None` if any entry is NaN or infinite.
    pub fn new(values: Vec<f64>) -> Option<Self> {
        values.iter().all(|v| v.is_finite()).then_some(EmbeddingVector(values))
    }

    pub fn zeros(dim: usize) -> Self {
        EmbeddingVector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, other: &EmbeddingVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn sub(&self, other: &EmbeddingVector) -> EmbeddingVector {
        EmbeddingVector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn distance(&self, other: &EmbeddingVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&self, k: f64) -> EmbeddingVector {
        EmbeddingVector(self.0.iter().map(|v| v * k).collect())
    }
}

/// A sentence encoder. Implementations must be deterministic and safe to share
/// across threads.
pub trait Embedder: Send + Sync {
    fn dim(&self) -> usize;

    /// Human-readable identifier recorded in reports.
    fn describe(&self) -> String;

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError>;

    /// Embeds many sentences, preserving order.
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        texts.iter().map(|t| self.embed(t)).collect()
    }
}

impl<E: Embedder + ?Sized> Embedder for Box<E> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn describe(&self) -> String {
        (**self).describe()
    }
    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        (**self).embed(text)
    }
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        (**self).embed_batch(texts)
    }
}
