use std::time::Duration;

use thiserror::Error;

pub const HASHED_DIM: usize = 512;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("embedding service unavailable: {0}")]
    Unavailable(String),
    #[error("embedding service returned a malformed response: {0}")]
    Malformed(String),
}

/// Text to a unit vector (or the zero vector for empty text).
pub trait Embedder: Send + Sync {
    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError>;
    /// Identifies the vector space, so cached vectors are not mixed across providers.
    fn id(&self) -> String;
}

pub fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

/// Cosine similarity; 0 when either side is the zero vector.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Character-trigram counts hashed into a fixed number of buckets.
/// Deterministic and offline.
#[derive(Debug, Clone, Copy, Default)]
pub struct HashedTrigramEmbedder;

impl Embedder for HashedTrigramEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        let words: Vec<String> = text.split_whitespace().map(str::to_lowercase).collect();
        let mut v = vec![0.0; HASHED_DIM];
        if words.is_empty() {
            return Ok(v);
        }
        let padded: Vec<char> = format!(" {} ", words.join(" ")).chars().collect();
        for w in padded.windows(3) {
            let gram: String = w.iter().collect();
            v[(fnv1a(gram.as_bytes()) % HASHED_DIM as u64) as usize] += 1.0;
        }
        Ok(normalize(v))
    }

    fn id(&self) -> String {
        format!("hashed-trigram-fnv1a/{HASHED_DIM}")
    }
}

/// Client for an external embedding service: POST `{"input": text}`,
/// expects `{"embedding": [numbers]}`.
#[derive(Debug, Clone)]
pub struct HttpEmbedder {
    pub endpoint: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
}

impl Embedder for HttpEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(self.timeout))
            .build()
            .new_agent();
        let mut req = agent.post(&self.endpoint);
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req
            .send_json(serde_json::json!({ "input": text }))
            .map_err(|e| EmbedError::Unavailable(e.to_string()))?;
        let body: serde_json::Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| EmbedError::Malformed(e.to_string()))?;
        let values = body
            .get("embedding")
            .and_then(|v| v.as_array())
            .ok_or_else(|| EmbedError::Malformed("missing \"embedding\" array".into()))?;
        let v = values
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| EmbedError::Malformed("non-numeric component".into())))
            .collect::<Result<Vec<f64>, _>>()?;
        Ok(normalize(v))
    }

    fn id(&self) -> String {
        format!("http:{}", self.endpoint)
    }
}
