use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{EmbedError, Embedder, EmbeddingVector};

pub const STORE_FORMAT: &str = "editvec-emb/v1";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    dim: usize,
    encoder: String,
    pooling: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct Record {
    text: String,
    v: Vec<f64>,
}

/// Precomputed sentence embeddings keyed by exact sentence text.
#[derive(Debug, Clone)]
pub struct EmbeddingStore {
    dim: usize,
    encoder: String,
    pooling: String,
    map: IndexMap<String, EmbeddingVector>,
}

impl EmbeddingStore {
    pub fn new(dim: usize, encoder: impl Into<String>, pooling: impl Into<String>) -> Self {
        EmbeddingStore {
            dim,
            encoder: encoder.into(),
            pooling: pooling.into(),
            map: IndexMap::new(),
        }
    }

    pub fn encoder(&self) -> &str {
        &self.encoder
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn get(&self, text: &str) -> Option<&EmbeddingVector> {
        self.map.get(text)
    }

    /// Inserts or replaces. Returns the previous vector when the key existed.
    pub fn insert(
        &mut self,
        text: impl Into<String>,
        v: EmbeddingVector,
    ) -> Result<Option<EmbeddingVector>, EmbedError> {
        if v.dim() != self.dim {
            return Err(EmbedError::DimMismatch {
                expected: self.dim,
                found: v.dim(),
                line: None,
            });
        }
        Ok(self.map.insert(text.into(), v))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EmbedError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| EmbedError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, EmbedError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let Some((hidx, hline)) = lines.next() else {
            return Err(EmbedError::Format {
                line: 1,
                msg: "missing header".into(),
            });
        };
        let header: Header = serde_json::from_str(hline).map_err(|e| EmbedError::Format {
            line: hidx + 1,
            msg: format!("bad header: {e}"),
        })?;
        if header.format != STORE_FORMAT {
            return Err(EmbedError::Format {
                line: hidx + 1,
                msg: format!("unsupported format {:?}", header.format),
            });
        }
        if header.dim == 0 {
            return Err(EmbedError::Format {
                line: hidx + 1,
                msg: "dim must be positive".into(),
            });
        }
        let mut store = EmbeddingStore::new(header.dim, header.encoder, header.pooling);
        for (idx, line) in lines {
            let line_no = idx + 1;
            let rec: Record = serde_json::from_str(line).map_err(|e| EmbedError::Format {
                line: line_no,
                msg: e.to_string(),
            })?;
            if rec.v.len() != store.dim {
                return Err(EmbedError::DimMismatch {
                    expected: store.dim,
                    found: rec.v.len(),
                    line: Some(line_no),
                });
            }
            let v = EmbeddingVector::new(rec.v).ok_or_else(|| EmbedError::Format {
                line: line_no,
                msg: "non-finite value".into(),
            })?;
            if store.map.insert(rec.text, v).is_some() {
                log::warn!("line {line_no}: duplicate sentence, keeping the later vector");
            }
        }
        Ok(store)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), EmbedError> {
        let path = path.as_ref();
        let io = |source| EmbedError::Io {
            path: path.display().to_string(),
            source,
        };
        let file = fs::File::create(path).map_err(io)?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w).map_err(io)?;
        w.flush().map_err(io)
    }

    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        let header = Header {
            format: STORE_FORMAT.into(),
            dim: self.dim,
            encoder: self.encoder.clone(),
            pooling: self.pooling.clone(),
        };
        serde_json::to_writer(&mut *w, &header)?;
        w.write_all(b"\n")?;
        for (text, v) in &self.map {
            let rec = Record {
                text: text.clone(),
                v: v.as_slice().to_vec(),
            };
            serde_json::to_writer(&mut *w, &rec)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

impl Embedder for EmbeddingStore {
    fn dim(&self) -> usize {
        self.dim
    }

    fn describe(&self) -> String {
        format!("store:{}/{}", self.encoder, self.pooling)
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        self.map
            .get(text)
            .cloned()
            .ok_or_else(|| EmbedError::MissingEmbedding(text.to_owned()))
    }
}
