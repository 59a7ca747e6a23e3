//! Deterministic in-memory S3 emulation.
//!
//! Only what the dialogue programs can observe is modelled: buckets with a
//! region, and objects with a key and a body. Timestamps, owners, ETags and
//! pagination are deliberately absent so that every state is reproducible.

mod api;
mod fixture;
mod signature;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use api::{ApiError, ApiErrorCode, CallError, API_NAMES};
pub use fixture::{load_fixture, load_fixture_value, FixtureBucket, FixtureDoc, FixtureError, FixtureObject};
pub use signature::{canonical_bytes, canonical_json, signature, Signature, SignatureError};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketRecord {
    pub region: String,
    /// Key to body. Body length is the object's `Size`.
    pub objects: BTreeMap<String, Vec<u8>>,
}

/// The whole account: bucket name to bucket. Ordered maps keep every
/// listing lexicographic without extra sorting.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct S3State {
    pub buckets: BTreeMap<String, BucketRecord>,
}

/// Immutable copy of a state, restorable any number of times.
#[derive(Debug, Clone)]
pub struct SnapshotToken(Arc<S3State>);

impl SnapshotToken {
    pub fn restore(&self) -> S3State {
        self.0.as_ref().clone()
    }
}

impl S3State {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn snapshot(&self) -> SnapshotToken {
        SnapshotToken(Arc::new(self.clone()))
    }

    pub fn object_count(&self) -> usize {
        self.buckets.values().map(|b| b.objects.len()).sum()
    }

    /// Back to the fixture document form (bodies as literal text).
    pub fn to_fixture(&self) -> FixtureDoc {
        FixtureDoc {
            buckets: self
                .buckets
                .iter()
                .map(|(name, b)| FixtureBucket {
                    name: name.clone(),
                    region: b.region.clone(),
                    objects: b
                        .objects
                        .iter()
                        .map(|(key, body)| FixtureObject::Literal {
                            key: key.clone(),
                            body: String::from_utf8_lossy(body).into_owned(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

/// 3 to 63 characters of lowercase letters, digits, dots and hyphens,
/// starting and ending with a letter or digit.
pub fn is_valid_bucket_name(name: &str) -> bool {
    let bytes = name.as_bytes();
    let alnum = |b: &u8| b.is_ascii_lowercase() || b.is_ascii_digit();
    (3..=63).contains(&bytes.len())
        && bytes
            .iter()
            .all(|b| alnum(b) || *b == b'.' || *b == b'-')
        && alnum(&bytes[0])
        && alnum(&bytes[bytes.len() - 1])
}
