use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{EmbedError, Embedder, EmbeddingVector};

#[derive(Debug, Clone)]
pub struct RemoteOptions {
    /// Sentences per POST.
    pub batch_size: usize,
    /// Concurrent requests issued by [`Embedder::embed_batch`].
    pub max_in_flight: usize,
    pub timeout: Duration,
}

impl Default for RemoteOptions {
    fn default() -> Self {
        RemoteOptions {
            batch_size: 64,
            max_in_flight: 4,
            timeout: Duration::from_secs(120),
        }
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    dim: usize,
    vectors: Vec<Vec<f64>>,
}

/// Client for a service answering `POST /embed` with
/// `{"texts": [...]}` → `{"dim": D, "vectors": [[...], ...]}`.
pub struct RemoteEmbedder {
    endpoint: String,
    dim: usize,
    opts: RemoteOptions,
    client: reqwest::blocking::Client,
}

impl RemoteEmbedder {
    /// Connects to `base_url` and learns the dimension from an empty request.
    pub fn connect(base_url: &str, opts: RemoteOptions) -> Result<Self, EmbedError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(opts.timeout)
            .build()
            .map_err(|e| EmbedError::Service(e.to_string()))?;
        let endpoint = format!("{}/embed", base_url.trim_end_matches('/'));
        let mut this = RemoteEmbedder {
            endpoint,
            dim: 0,
            opts,
            client,
        };
        let (dim, vectors) = this.post(&[])?;
        if !vectors.is_empty() {
            return Err(EmbedError::Service("empty request returned vectors".into()));
        }
        if dim == 0 {
            return Err(EmbedError::Service("service reported dim 0".into()));
        }
        this.dim = dim;
        Ok(this)
    }

    fn post(&self, texts: &[String]) -> Result<(usize, Vec<Vec<f64>>), EmbedError> {
        let resp = self
            .client
            .post(&self.endpoint)
            .json(&EmbedRequest { texts })
            .send()
            .map_err(|e| EmbedError::Service(format!("{}: {e}", self.endpoint)))?;
        let status = resp.status();
        let body = resp
            .text()
            .map_err(|e| EmbedError::Service(format!("reading response: {e}")))?;
        if status != reqwest::StatusCode::OK {
            return Err(EmbedError::Service(format!("HTTP {status}: {}", body.trim())));
        }
        let parsed: EmbedResponse = serde_json::from_str(&body)
            .map_err(|e| EmbedError::Service(format!("malformed response: {e}")))?;
        Ok((parsed.dim, parsed.vectors))
    }

    fn request(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let (dim, vectors) = self.post(texts)?;
        if dim != self.dim {
            return Err(EmbedError::DimMismatch {
                expected: self.dim,
                found: dim,
                line: None,
            });
        }
        if vectors.len() != texts.len() {
            return Err(EmbedError::Service(format!(
                "sent {} texts, received {} vectors",
                texts.len(),
                vectors.len()
            )));
        }
        vectors
            .into_iter()
            .zip(texts)
            .map(|(v, t)| {
                if v.len() != self.dim {
                    return Err(EmbedError::DimMismatch {
                        expected: self.dim,
                        found: v.len(),
                        line: None,
                    });
                }
                EmbeddingVector::new(v)
                    .ok_or_else(|| EmbedError::Service(format!("non-finite vector for {t:?}")))
            })
            .collect()
    }
}

impl Embedder for RemoteEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn describe(&self) -> String {
        format!("remote:{}", self.endpoint)
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        let mut v = self.request(&[text.to_owned()])?;
        Ok(v.remove(0))
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let chunks: Vec<&[String]> = texts.chunks(self.opts.batch_size.max(1)).collect();
        let mut out = Vec::with_capacity(texts.len());
        for wave in chunks.chunks(self.opts.max_in_flight.max(1)) {
            let results: Vec<Result<Vec<EmbeddingVector>, EmbedError>> = std::thread::scope(|s| {
                let handles: Vec<_> = wave
                    .iter()
                    .map(|chunk| s.spawn(move || self.request(chunk)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("embedding request thread panicked"))
                    .collect()
            });
            for r in results {
                out.extend(r?);
            }
        }
        Ok(out)
    }
}
