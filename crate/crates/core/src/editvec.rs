//! Edit vectors, edit masses and the hypothesis-by-reference cost matrix.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::{EmbedError, Embedder, EmbeddingVector};
use crate::matrix::Matrix;
use crate::textspan::{apply_edits, EditSet, SpanError, TokenSeq};

/// Lower bound on an edit's mass so that no row or column vanishes from the
/// relaxed marginals.
pub const MASS_FLOOR: f64 = 1e-12;

const COSINE_NORM_EPS: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum EditVecError {
    #[error(transparent)]
    Span(#[from] SpanError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error("vector dimensions differ: {0} vs {1}")]
    DimMismatch(usize, usize),
}

/// How an edit's effect on the sentence embedding is measured.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Vectorization {
    /// `Enc(S_E) - Enc(S_{E \ {e}})`: the edit in the context of the others.
    #[default]
    Remove,
    /// `Enc(S_{{e}}) - Enc(S)`: the edit applied alone to the source.
    Add,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MassMode {
    #[default]
    #[serde(alias = "l2norm")]
    L2,
    Uniform,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostMode {
    #[default]
    Euclidean,
    #[serde(alias = "cosinedistance")]
    Cosine,
}

/// The sentences whose embeddings [`edit_vectors`] needs, in request order.
///
/// Remove mode: `S_E` first, then `S_{E \ {e_i}}` for each edit. Add mode: `S` first,
/// then `S_{{e_i}}` for each edit. Empty edit sets need nothing.
pub fn intermediate_sentences(
    src: &TokenSeq,
    edits: &EditSet,
    mode: Vectorization,
) -> Result<Vec<String>, SpanError> {
    if edits.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::with_capacity(edits.len() + 1);
    match mode {
        Vectorization::Remove => {
            out.push(apply_edits(src, edits)?.detokenize());
            for i in 0..edits.len() {
                out.push(apply_edits(src, &edits.without(i))?.detokenize());
            }
        }
        Vectorization::Add => {
            edits.check_bounds(src.len())?;
            out.push(src.detokenize());
            for i in 0..edits.len() {
                out.push(apply_edits(src, &edits.singleton(i))?.detokenize());
            }
        }
    }
    Ok(out)
}

/// One vector per edit, in edit order.
pub fn edit_vectors(
    src: &TokenSeq,
    edits: &EditSet,
    provider: &dyn Embedder,
    mode: Vectorization,
) -> Result<Vec<EmbeddingVector>, EditVecError> {
    let sentences = intermediate_sentences(src, edits, mode)?;
    if sentences.is_empty() {
        return Ok(Vec::new());
    }
    let embedded = provider.embed_batch(&sentences)?;
    let (anchor, rest) = embedded.split_first().expect("non-empty");
    Ok(rest
        .iter()
        .map(|other| match mode {
            Vectorization::Remove => anchor.sub(other),
            Vectorization::Add => other.sub(anchor),
        })
        .collect())
}

pub fn masses(vectors: &[EmbeddingVector], mode: MassMode) -> Vec<f64> {
    match mode {
        MassMode::L2 => vectors.iter().map(|v| v.norm().max(MASS_FLOOR)).collect(),
        MassMode::Uniform => vec![1.0; vectors.len()],
    }
}

/// `C[i][j]` between hypothesis vector `i` and reference vector `j`.
pub fn cost_matrix(
    hyp: &[EmbeddingVector],
    refs: &[EmbeddingVector],
    mode: CostMode,
) -> Result<Matrix, EditVecError> {
    for v in hyp.iter().chain(refs) {
        let d0 = hyp.first().or(refs.first()).map_or(0, |f| f.dim());
        if v.dim() != d0 {
            return Err(EditVecError::DimMismatch(d0, v.dim()));
        }
    }
    Ok(Matrix::from_fn(hyp.len(), refs.len(), |i, j| {
        let (v, u) = (&hyp[i], &refs[j]);
        match mode {
            CostMode::Euclidean => v.distance(u),
            CostMode::Cosine => {
                let (nv, nu) = (v.norm(), u.norm());
                let cos = if nv < COSINE_NORM_EPS || nu < COSINE_NORM_EPS {
                    0.0
                } else {
                    (v.dot(u) / (nv * nu)).clamp(-1.0, 1.0)
                };
                1.0 - cos
            }
        }
    }))
}

/// Edits of one sentence together with their vectors and masses.
#[derive(Debug, Clone)]
pub struct EditVectorSet {
    pub edits: EditSet,
    pub vectors: Vec<EmbeddingVector>,
    pub masses: Vec<f64>,
}

impl EditVectorSet {
    pub fn build(
        src: &TokenSeq,
        edits: EditSet,
        provider: &dyn Embedder,
        vectorization: Vectorization,
        mass: MassMode,
    ) -> Result<Self, EditVecError> {
        let vectors = edit_vectors(src, &edits, provider, vectorization)?;
        let masses = masses(&vectors, mass);
        Ok(EditVectorSet {
            edits,
            vectors,
            masses,
        })
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }
}
