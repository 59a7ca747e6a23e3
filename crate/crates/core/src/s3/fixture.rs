use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{is_valid_bucket_name, BucketRecord, S3State};

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureDoc {
    pub buckets: Vec<FixtureBucket>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureBucket {
    pub name: String,
    pub region: String,
    #[serde(default)]
    pub objects: Vec<FixtureObject>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FixtureObject {
    Literal { key: String, body: String },
    /// `bytes` bytes of deterministic text derived from `fill`.
    Synthetic { key: String, bytes: usize, fill: String },
}

impl FixtureObject {
    pub fn key(&self) -> &str {
        match self {
            FixtureObject::Literal { key, .. } | FixtureObject::Synthetic { key, .. } => key,
        }
    }

    pub fn body(&self) -> Vec<u8> {
        match self {
            FixtureObject::Literal { body, .. } => body.as_bytes().to_vec(),
            FixtureObject::Synthetic { bytes, fill, .. } => synthesize(fill, *bytes),
        }
    }
}

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("malformed fixture: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed fixture: {0}")]
    Invalid(String),
}

/// Lowercase hex of SHA-256(seed || counter) blocks, cut to length.
fn synthesize(seed: &str, len: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(len + 64);
    let mut counter = 0u64;
    while out.len() < len {
        let mut h = Sha256::new();
        h.update(seed.as_bytes());
        h.update(counter.to_le_bytes());
        out.extend_from_slice(hex::encode(h.finalize()).as_bytes());
        counter += 1;
    }
    out.truncate(len);
    out
}

pub fn load_fixture(text: &str) -> Result<S3State, FixtureError> {
    let doc: FixtureDoc = serde_json::from_str(text)?;
    doc.build()
}

pub fn load_fixture_value(value: serde_json::Value) -> Result<S3State, FixtureError> {
    let doc: FixtureDoc = serde_json::from_value(value)?;
    doc.build()
}

impl FixtureDoc {
    pub fn build(&self) -> Result<S3State, FixtureError> {
        let mut state = S3State::new();
        for b in &self.buckets {
            if !is_valid_bucket_name(&b.name) {
                return Err(FixtureError::Invalid(format!("invalid bucket name {:?}", b.name)));
            }
            if b.region.is_empty() {
                return Err(FixtureError::Invalid(format!("bucket {:?} has an empty region", b.name)));
            }
            let mut objects = BTreeMap::new();
            for o in &b.objects {
                if o.key().is_empty() {
                    return Err(FixtureError::Invalid(format!("empty object key in bucket {:?}", b.name)));
                }
                if objects.insert(o.key().to_string(), o.body()).is_some() {
                    return Err(FixtureError::Invalid(format!(
                        "duplicate key {:?} in bucket {:?}",
                        o.key(),
                        b.name
                    )));
                }
            }
            let record = BucketRecord {
                region: b.region.clone(),
                objects,
            };
            if state.buckets.insert(b.name.clone(), record).is_some() {
                return Err(FixtureError::Invalid(format!("duplicate bucket {:?}", b.name)));
            }
        }
        Ok(state)
    }
}
