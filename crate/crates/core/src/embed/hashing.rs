use super::{EmbedError, Embedder, EmbeddingVector};

pub const DEFAULT_TEST_DIM: usize = 32;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, b| (h ^ u64::from(*b)).wrapping_mul(FNV_PRIME))
}

struct SplitMix64(u64);

impl SplitMix64 {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform on [0, 1) from the top 53 bits.
    fn next_unit(&mut self) -> f64 {
        (self.next() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Unit-norm pseudo-random vector seeded by the FNV-1a hash of `token`.
pub fn token_vector(token: &str, dim: usize) -> EmbeddingVector {
    assert!(dim >= 1, "dimension must be positive");
    let mut rng = SplitMix64(fnv1a64(token.as_bytes()));
    let mut v: Vec<f64> = (0..dim).map(|_| 2.0 * rng.next_unit() - 1.0).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    // An all-zero draw needs 53·dim zero bits in a row; treat it as unreachable.
    for x in &mut v {
        *x /= norm;
    }
    EmbeddingVector(v)
}

/// Mean of per-token hash vectors. Stands in for a neural encoder in tests.
#[derive(Debug, Clone)]
pub struct HashingEmbedder {
    dim: usize,
}

impl HashingEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        HashingEmbedder { dim }
    }
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        HashingEmbedder::new(DEFAULT_TEST_DIM)
    }
}

impl Embedder for HashingEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn describe(&self) -> String {
        format!("test-hash/d{}", self.dim)
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        let mut acc = vec![0.0; self.dim];
        let mut n = 0usize;
        for tok in text.split_whitespace() {
            for (a, v) in acc.iter_mut().zip(token_vector(tok, self.dim).as_slice()) {
                *a += v;
            }
            n += 1;
        }
        if n > 0 {
            for a in &mut acc {
                *a /= n as f64;
            }
        }
        Ok(EmbeddingVector(acc))
    }
}
