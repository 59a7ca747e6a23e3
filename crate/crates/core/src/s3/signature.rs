use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::S3State;
use crate::lang::Outcome;

const DOMAIN: &[u8] = b"d2a-signature/v1\0";
const NO_OUTCOME: &[u8] = b"\0no-outcome";
const HAS_OUTCOME: &[u8] = b"\x01outcome";

/// Eight lowercase hex characters identifying a state plus last outcome.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Signature(String);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid signature {0:?}: expected 8 lowercase hex characters")]
pub struct SignatureError(pub String);

impl Signature {
    pub fn parse(text: &str) -> Result<Self, SignatureError> {
        let ok = text.len() == 8 && text.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'));
        if ok {
            Ok(Self(text.to_string()))
        } else {
            Err(SignatureError(text.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Signature {
    type Error = SignatureError;
    fn try_from(s: String) -> Result<Self, SignatureError> {
        Self::parse(&s)
    }
}

impl From<Signature> for String {
    fn from(s: Signature) -> String {
        s.0
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// JSON with object keys sorted and no insignificant whitespace.
pub fn canonical_json(v: &Json) -> String {
    let mut out = String::new();
    write_canonical(v, &mut out);
    out
}

fn write_canonical(v: &Json, out: &mut String) {
    match v {
        Json::Object(m) => {
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Json::String(k.clone()).to_string());
                out.push(':');
                write_canonical(&m[k], out);
            }
            out.push('}');
        }
        Json::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        scalar => out.push_str(&scalar.to_string()),
    }
}

fn field(out: &mut Vec<u8>, bytes: &[u8]) {
    out.extend_from_slice(&(bytes.len() as u64).to_le_bytes());
    out.extend_from_slice(bytes);
}

/// The exact byte string that the signature hashes. Every variable-length
/// piece is length-prefixed so distinct inputs never serialize alike.
pub fn canonical_bytes(state: &S3State, outcome: Option<&Outcome>) -> Vec<u8> {
    let mut out = DOMAIN.to_vec();
    out.extend_from_slice(&(state.buckets.len() as u64).to_le_bytes());
    for (name, bucket) in &state.buckets {
        field(&mut out, name.as_bytes());
        field(&mut out, bucket.region.as_bytes());
        out.extend_from_slice(&(bucket.objects.len() as u64).to_le_bytes());
        for (key, body) in &bucket.objects {
            field(&mut out, key.as_bytes());
            out.extend_from_slice(&(body.len() as u64).to_le_bytes());
            out.extend_from_slice(&Sha256::digest(body));
        }
    }
    match outcome {
        None => out.extend_from_slice(NO_OUTCOME),
        Some(o) => {
            out.extend_from_slice(HAS_OUTCOME);
            field(&mut out, canonical_json(&o.return_value).as_bytes());
            let (name, message) = o
                .error
                .as_ref()
                .map(|e| (e.name.as_str(), e.message.as_str()))
                .unwrap_or(("", ""));
            field(&mut out, name.as_bytes());
            field(&mut out, message.as_bytes());
        }
    }
    out
}

pub fn signature(state: &S3State, outcome: Option<&Outcome>) -> Signature {
    let digest = Sha256::digest(canonical_bytes(state, outcome));
    Signature(hex::encode(&digest[..4]))
}
