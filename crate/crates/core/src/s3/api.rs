use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde_json::{json, Map, Value as Json};

use super::{is_valid_bucket_name, BucketRecord, S3State};
use crate::lang::{ApiDispatcher, DispatchError, ErrorRecord};

pub const API_NAMES: [&str; 11] = [
    "get_object",
    "put_object",
    "delete_object",
    "list_objects",
    "create_bucket",
    "copy_object",
    "list_buckets",
    "delete_bucket",
    "delete_objects",
    "get_bucket_location",
    "head_bucket",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApiErrorCode {
    NoSuchBucket,
    NoSuchKey,
    BucketAlreadyOwnedByYou,
    InvalidBucketName,
    BucketNotEmpty,
    MissingParameter,
    MalformedInput,
}

impl fmt::Display for ApiErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub code: ApiErrorCode,
    /// Operation name in service casing, e.g. `ListObjects`.
    pub operation: String,
    pub detail: String,
}

impl ApiError {
    pub fn message(&self) -> String {
        format!(
            "An error occurred ({}) when calling the {} operation: {}",
            self.code, self.operation, self.detail
        )
    }

    pub fn to_record(&self) -> ErrorRecord {
        ErrorRecord {
            name: self.code.to_string(),
            message: self.message(),
        }
    }
}

impl fmt::Display for ApiError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message())
    }
}

impl std::error::Error for ApiError {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CallError {
    UnknownApi(String),
    Api(ApiError),
}

fn operation_name(api: &str) -> String {
    api.split('_')
        .map(|w| {
            let mut c = w.chars();
            match c.next() {
                Some(first) => first.to_ascii_uppercase().to_string() + c.as_str(),
                None => String::new(),
            }
        })
        .collect()
}

struct Call<'a> {
    op: String,
    kwargs: &'a Map<String, Json>,
}

impl<'a> Call<'a> {
    fn err(&self, code: ApiErrorCode, detail: impl Into<String>) -> ApiError {
        ApiError {
            code,
            operation: self.op.clone(),
            detail: detail.into(),
        }
    }

    fn allow(&self, names: &[&str]) -> Result<(), ApiError> {
        for k in self.kwargs.keys() {
            if !names.contains(&k.as_str()) {
                return Err(self.err(
                    ApiErrorCode::MalformedInput,
                    format!("Unknown parameter \"{k}\""),
                ));
            }
        }
        Ok(())
    }

    fn required(&self, name: &str) -> Result<&'a Json, ApiError> {
        match self.kwargs.get(name) {
            Some(Json::Null) | None => Err(self.err(
                ApiErrorCode::MissingParameter,
                format!("Missing required parameter: \"{name}\""),
            )),
            Some(v) => Ok(v),
        }
    }

    fn text(&self, name: &str, v: &'a Json) -> Result<&'a str, ApiError> {
        v.as_str().ok_or_else(|| {
            self.err(
                ApiErrorCode::MalformedInput,
                format!("Invalid type for parameter {name}, expected text"),
            )
        })
    }

    fn req_str(&self, name: &str) -> Result<&'a str, ApiError> {
        let v = self.required(name)?;
        self.text(name, v)
    }

    fn opt_str(&self, name: &str) -> Result<Option<&'a str>, ApiError> {
        match self.kwargs.get(name) {
            None | Some(Json::Null) => Ok(None),
            Some(v) => self.text(name, v).map(Some),
        }
    }

    fn bucket<'s>(&self, state: &'s S3State, name: &str) -> Result<&'s BucketRecord, ApiError> {
        state
            .buckets
            .get(name)
            .ok_or_else(|| self.err(ApiErrorCode::NoSuchBucket, "The specified bucket does not exist"))
    }

    fn bucket_mut<'s>(
        &self,
        state: &'s mut S3State,
        name: &str,
    ) -> Result<&'s mut BucketRecord, ApiError> {
        state
            .buckets
            .get_mut(name)
            .ok_or_else(|| self.err(ApiErrorCode::NoSuchBucket, "The specified bucket does not exist"))
    }

    fn no_such_key(&self) -> ApiError {
        self.err(ApiErrorCode::NoSuchKey, "The specified key does not exist.")
    }
}

impl S3State {
    /// Runs one API call. Every call validates fully before mutating, so a
    /// failed call leaves the state untouched.
    pub fn call_api(&mut self, api: &str, kwargs: &Map<String, Json>) -> Result<Json, CallError> {
        if !API_NAMES.contains(&api) {
            return Err(CallError::UnknownApi(api.to_string()));
        }
        let call = Call {
            op: operation_name(api),
            kwargs,
        };
        let result = match api {
            "get_object" => self.get_object(&call),
            "put_object" => self.put_object(&call),
            "delete_object" => self.delete_object(&call),
            "list_objects" => self.list_objects(&call),
            "create_bucket" => self.create_bucket(&call),
            "copy_object" => self.copy_object(&call),
            "list_buckets" => self.list_buckets(&call),
            "delete_bucket" => self.delete_bucket(&call),
            "delete_objects" => self.delete_objects(&call),
            "get_bucket_location" => self.get_bucket_location(&call),
            "head_bucket" => self.head_bucket(&call),
            _ => unreachable!(),
        };
        result.map_err(CallError::Api)
    }

    fn get_object(&self, c: &Call) -> Result<Json, ApiError> {
        c.allow(&["Bucket", "Key"])?;
        let bucket = c.req_str("Bucket")?;
        let key = c.req_str("Key")?;
        let body = c.bucket(self, bucket)?.objects.get(key).ok_or_else(|| c.no_such_key())?;
        Ok(json!({ "Body": String::from_utf8_lossy(body) }))
    }

    fn put_object(&mut self, c: &Call) -> Result<Json, ApiError> {
        c.allow(&["Bucket", "Key", "Body"])?;
        let bucket = c.req_str("Bucket")?;
        let key = c.req_str("Key")?;
        let body = c.opt_str("Body")?.unwrap_or("");
        if key.is_empty() {
            return Err(c.err(ApiErrorCode::MalformedInput, "Object key must not be empty"));
        }
        c.bucket_mut(self, bucket)?
            .objects
            .insert(key.to_string(), body.as_bytes().to_vec());
        Ok(json!({}))
    }

    fn delete_object(&mut self, c: &Call) -> Result<Json, ApiError> {
        c.allow(&["Bucket", "Key"])?;
        let bucket = c.req_str("Bucket")?;
        let key = c.req_str("Key")?;
        c.bucket_mut(self, bucket)?.objects.remove(key);
        Ok(json!({}))
    }

    fn list_objects(&self, c: &Call) -> Result<Json, ApiError> {
        c.allow(&["Bucket", "Prefix", "Delimiter"])?;
        let name = c.req_str("Bucket")?;
        let prefix = c.opt_str("Prefix")?.unwrap_or("");
        let delimiter = c.opt_str("Delimiter")?.unwrap_or("");
        let bucket = c.bucket(self, name)?;

        let mut contents = Vec::new();
        let mut common = BTreeSet::new();
        for (key, body) in bucket.objects.range(prefix.to_string()..) {
            let Some(rest) = key.strip_prefix(prefix) else {
                break;
            };
            if !delimiter.is_empty() {
                if let Some(at) = rest.find(delimiter) {
                    common.insert(format!("{prefix}{}", &rest[..at + delimiter.len()]));
                    continue;
                }
            }
            contents.push(json!({ "Key": key, "Size": body.len() }));
        }

        let mut out = Map::new();
        out.insert("Name".into(), json!(name));
        out.insert("Prefix".into(), json!(prefix));
        if !delimiter.is_empty() {
            out.insert("Delimiter".into(), json!(delimiter));
        }
        if !contents.is_empty() {
            out.insert("Contents".into(), Json::Array(contents));
        }
        if !common.is_empty() {
            let prefixes = common.into_iter().map(|p| json!({ "Prefix": p })).collect();
            out.insert("CommonPrefixes".into(), Json::Array(prefixes));
        }
        Ok(Json::Object(out))
    }

    fn create_bucket(&mut self, c: &Call) -> Result<Json, ApiError> {
        c.allow(&["Bucket", "CreateBucketConfiguration"])?;
        let name = c.req_str("Bucket")?;
        let config = c.required("CreateBucketConfiguration")?;
        let Some(config) = config.as_object() else {
            return Err(c.err(
                ApiErrorCode::MalformedInput,
                "Invalid type for parameter CreateBucketConfiguration, expected a map",
            ));
        };
        let region = match config.get("LocationConstraint") {
            None | Some(Json::Null) => {
                return Err(c.err(
                    ApiErrorCode::MissingParameter,
                    "Missing required parameter: \"CreateBucketConfiguration.LocationConstraint\"",
                ))
            }
            Some(v) => c.text("CreateBucketConfiguration.LocationConstraint", v)?,
        };
        if config.len() > 1 {
            return Err(c.err(
                ApiErrorCode::MalformedInput,
                "CreateBucketConfiguration accepts only LocationConstraint",
            ));
        }
        if region.is_empty() {
            return Err(c.err(ApiErrorCode::MalformedInput, "LocationConstraint must not be empty"));
        }
        if !is_valid_bucket_name(name) {
            return Err(c.err(ApiErrorCode::InvalidBucketName, "The specified bucket is not valid."));
        }
        if self.buckets.contains_key(name) {
            return Err(c.err(
                ApiErrorCode::BucketAlreadyOwnedByYou,
                "Your previous request to create the named bucket succeeded and you already own it.",
            ));
        }
        self.buckets.insert(
            name.to_string(),
            BucketRecord {
                region: region.to_string(),
                objects: BTreeMap::new(),
            },
        );
        Ok(json!({ "Location": format!("/{name}") }))
    }

    fn copy_object(&mut self, c: &Call) -> Result<Json, ApiError> {
        c.allow(&["Bucket", "Key", "CopySource"])?;
        let bucket = c.req_str("Bucket")?;
        let key = c.req_str("Key")?;
        let source = c.required("CopySource")?;
        let (src_bucket, src_key) = match source {
            Json::String(s) => s
                .trim_start_matches('/')
                .split_once('/')
                .filter(|(b, k)| !b.is_empty() && !k.is_empty())
                .ok_or_else(|| {
                    c.err(
                        ApiErrorCode::MalformedInput,
                        "CopySource must have the form bucket/key",
                    )
                })?,
            Json::Object(m) => {
                let inner = Call {
                    op: c.op.clone(),
                    kwargs: m,
                };
                inner.allow(&["Bucket", "Key"])?;
                (inner.req_str("Bucket")?, inner.req_str("Key")?)
            }
            _ => {
                return Err(c.err(
                    ApiErrorCode::MalformedInput,
                    "Invalid type for parameter CopySource, expected text or a map",
                ))
            }
        };
        if key.is_empty() {
            return Err(c.err(ApiErrorCode::MalformedInput, "Object key must not be empty"));
        }
        let body = c
            .bucket(self, src_bucket)?
            .objects
            .get(src_key)
            .ok_or_else(|| c.no_such_key())?
            .clone();
        c.bucket_mut(self, bucket)?.objects.insert(key.to_string(), body);
        Ok(json!({ "CopyObjectResult": {} }))
    }

    fn list_buckets(&self, c: &Call) -> Result<Json, ApiError> {
        c.allow(&[])?;
        let buckets: Vec<Json> = self.buckets.keys().map(|n| json!({ "Name": n })).collect();
        Ok(json!({ "Buckets": buckets }))
    }

    fn delete_bucket(&mut self, c: &Call) -> Result<Json, ApiError> {
        c.allow(&["Bucket"])?;
        let name = c.req_str("Bucket")?;
        if !c.bucket(self, name)?.objects.is_empty() {
            return Err(c.err(
                ApiErrorCode::BucketNotEmpty,
                "The bucket you tried to delete is not empty",
            ));
        }
        self.buckets.remove(name);
        Ok(json!({}))
    }

    fn delete_objects(&mut self, c: &Call) -> Result<Json, ApiError> {
        c.allow(&["Bucket", "Delete"])?;
        let name = c.req_str("Bucket")?;
        let delete = c.required("Delete")?;
        let malformed = || {
            c.err(
                ApiErrorCode::MalformedInput,
                "Delete must be a map with a non-empty Objects list of {\"Key\": text}",
            )
        };
        let objects = delete
            .as_object()
            .filter(|m| m.keys().all(|k| k == "Objects"))
            .and_then(|m| m.get("Objects"))
            .and_then(Json::as_array)
            .filter(|a| !a.is_empty())
            .ok_or_else(malformed)?;
        let mut keys = Vec::with_capacity(objects.len());
        for o in objects {
            let key = o
                .as_object()
                .filter(|m| m.len() == 1)
                .and_then(|m| m.get("Key"))
                .and_then(Json::as_str)
                .ok_or_else(malformed)?;
            keys.push(key);
        }
        let bucket = c.bucket_mut(self, name)?;
        let mut deleted = Vec::with_capacity(keys.len());
        for key in keys {
            bucket.objects.remove(key);
            deleted.push(json!({ "Key": key }));
        }
        Ok(json!({ "Deleted": deleted }))
    }

    fn get_bucket_location(&self, c: &Call) -> Result<Json, ApiError> {
        c.allow(&["Bucket"])?;
        let name = c.req_str("Bucket")?;
        let region = &c.bucket(self, name)?.region;
        Ok(json!({ "LocationConstraint": region }))
    }

    fn head_bucket(&self, c: &Call) -> Result<Json, ApiError> {
        c.allow(&["Bucket"])?;
        let name = c.req_str("Bucket")?;
        c.bucket(self, name)?;
        Ok(json!({}))
    }
}

impl ApiDispatcher for S3State {
    fn call(&mut self, api: &str, kwargs: Map<String, Json>) -> Result<Json, DispatchError> {
        self.call_api(api, &kwargs).map_err(|e| match e {
            CallError::UnknownApi(name) => DispatchError::UnknownApi(name),
            CallError::Api(err) => DispatchError::Api(err.to_record()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state() -> S3State {
        let mut s = S3State::new();
        let mut b = BucketRecord {
            region: "us-west-2".into(),
            objects: BTreeMap::new(),
        };
        for (k, v) in [
            ("a/one.txt", "1"),
            ("a/sub/two.txt", "22"),
            ("a/sub/three.txt", "333"),
            ("b.txt", "bbbb"),
        ] {
            b.objects.insert(k.into(), v.as_bytes().to_vec());
        }
        s.buckets.insert("data-bucket".into(), b);
        s
    }

    fn call(s: &mut S3State, api: &str, kwargs: Json) -> Result<Json, CallError> {
        s.call_api(api, kwargs.as_object().unwrap())
    }

    fn code(r: Result<Json, CallError>) -> ApiErrorCode {
        match r {
            Err(CallError::Api(e)) => e.code,
            other => panic!("expected api error, got {other:?}"),
        }
    }

    #[test]
    fn operation_names() {
        assert_eq!(operation_name("list_objects"), "ListObjects");
        assert_eq!(operation_name("get_bucket_location"), "GetBucketLocation");
    }

    #[test]
    fn error_message_format() {
        let mut s = state();
        let Err(CallError::Api(e)) = call(&mut s, "list_objects", json!({"Bucket": "zoology bucket"})) else {
            panic!()
        };
        assert_eq!(
            e.message(),
            "An error occurred (NoSuchBucket) when calling the ListObjects operation: The specified bucket does not exist"
        );
        assert_eq!(e.to_record().name, "NoSuchBucket");
    }

    #[test]
    fn unknown_api() {
        let mut s = state();
        assert_eq!(
            call(&mut s, "list_bucket", json!({})),
            Err(CallError::UnknownApi("list_bucket".into()))
        );
    }

    #[test]
    fn listing_with_prefix_and_delimiter() {
        let mut s = state();
        let r = call(&mut s, "list_objects", json!({"Bucket": "data-bucket", "Prefix": "a/"})).unwrap();
        let keys: Vec<_> = r["Contents"].as_array().unwrap().iter().map(|o| o["Key"].as_str().unwrap()).collect();
        assert_eq!(keys, ["a/one.txt", "a/sub/three.txt", "a/sub/two.txt"]);
        let r = call(&mut s, "list_objects", json!({"Bucket": "data-bucket", "Prefix": "a/", "Delimiter": "/"})).unwrap();
        assert_eq!(r["Contents"], json!([{"Key": "a/one.txt", "Size": 1}]));
        assert_eq!(r["CommonPrefixes"], json!([{"Prefix": "a/sub/"}]));
        let r = call(&mut s, "list_objects", json!({"Bucket": "data-bucket", "Prefix": "zzz"})).unwrap();
        assert!(r.get("Contents").is_none());
        assert!(r.get("CommonPrefixes").is_none());
    }

    #[test]
    fn object_roundtrip() {
        let mut s = state();
        call(&mut s, "put_object", json!({"Bucket": "data-bucket", "Key": "new.txt", "Body": "hi"})).unwrap();
        let r = call(&mut s, "get_object", json!({"Bucket": "data-bucket", "Key": "new.txt"})).unwrap();
        assert_eq!(r, json!({"Body": "hi"}));
        call(&mut s, "put_object", json!({"Bucket": "data-bucket", "Key": "empty.txt"})).unwrap();
        assert_eq!(s.buckets["data-bucket"].objects["empty.txt"], b"");
        call(&mut s, "delete_object", json!({"Bucket": "data-bucket", "Key": "new.txt"})).unwrap();
        let before = s.clone();
        call(&mut s, "delete_object", json!({"Bucket": "data-bucket", "Key": "new.txt"})).unwrap();
        assert_eq!(s, before);
        assert_eq!(code(call(&mut s, "get_object", json!({"Bucket": "data-bucket", "Key": "new.txt"}))), ApiErrorCode::NoSuchKey);
    }

    #[test]
    fn create_bucket_rules() {
        let mut s = state();
        let cfg = json!({"LocationConstraint": "eu-west-1"});
        assert_eq!(code(call(&mut s, "create_bucket", json!({"Bucket": "fresh"}))), ApiErrorCode::MissingParameter);
        assert_eq!(
            code(call(&mut s, "create_bucket", json!({"Bucket": "fresh", "CreateBucketConfiguration": {}}))),
            ApiErrorCode::MissingParameter
        );
        assert_eq!(
            code(call(&mut s, "create_bucket", json!({"Bucket": "bad name", "CreateBucketConfiguration": cfg}))),
            ApiErrorCode::InvalidBucketName
        );
        assert_eq!(
            code(call(&mut s, "create_bucket", json!({"Bucket": "data-bucket", "CreateBucketConfiguration": cfg}))),
            ApiErrorCode::BucketAlreadyOwnedByYou
        );
        let r = call(&mut s, "create_bucket", json!({"Bucket": "fresh", "CreateBucketConfiguration": cfg})).unwrap();
        assert_eq!(r, json!({"Location": "/fresh"}));
        let r = call(&mut s, "get_bucket_location", json!({"Bucket": "fresh"})).unwrap();
        assert_eq!(r, json!({"LocationConstraint": "eu-west-1"}));
        let r = call(&mut s, "list_buckets", json!({})).unwrap();
        assert_eq!(r, json!({"Buckets": [{"Name": "data-bucket"}, {"Name": "fresh"}]}));
    }

    #[test]
    fn copy_forms() {
        let mut s = state();
        call(&mut s, "copy_object", json!({"Bucket": "data-bucket", "Key": "c1", "CopySource": "data-bucket/b.txt"})).unwrap();
        call(
            &mut s,
            "copy_object",
            json!({"Bucket": "data-bucket", "Key": "c2", "CopySource": {"Bucket": "data-bucket", "Key": "a/one.txt"}}),
        )
        .unwrap();
        assert_eq!(s.buckets["data-bucket"].objects["c1"], b"bbbb");
        assert_eq!(s.buckets["data-bucket"].objects["c2"], b"1");
        assert_eq!(
            code(call(&mut s, "copy_object", json!({"Bucket": "data-bucket", "Key": "c3", "CopySource": "nokey"}))),
            ApiErrorCode::MalformedInput
        );
        assert_eq!(
            code(call(&mut s, "copy_object", json!({"Bucket": "data-bucket", "Key": "c3", "CopySource": "data-bucket/missing"}))),
            ApiErrorCode::NoSuchKey
        );
    }

    #[test]
    fn bucket_deletion() {
        let mut s = state();
        assert_eq!(code(call(&mut s, "delete_bucket", json!({"Bucket": "data-bucket"}))), ApiErrorCode::BucketNotEmpty);
        let objects: Vec<Json> = s.buckets["data-bucket"].objects.keys().map(|k| json!({"Key": k})).collect();
        let r = call(&mut s, "delete_objects", json!({"Bucket": "data-bucket", "Delete": {"Objects": objects.clone()}})).unwrap();
        assert_eq!(r["Deleted"].as_array().unwrap().len(), 4);
        call(&mut s, "delete_objects", json!({"Bucket": "data-bucket", "Delete": {"Objects": objects}})).unwrap();
        assert_eq!(
            code(call(&mut s, "delete_objects", json!({"Bucket": "data-bucket", "Delete": {"Objects": []}}))),
            ApiErrorCode::MalformedInput
        );
        assert_eq!(call(&mut s, "head_bucket", json!({"Bucket": "data-bucket"})).unwrap(), json!({}));
        call(&mut s, "delete_bucket", json!({"Bucket": "data-bucket"})).unwrap();
        assert_eq!(code(call(&mut s, "head_bucket", json!({"Bucket": "data-bucket"}))), ApiErrorCode::NoSuchBucket);
    }

    #[test]
    fn failed_calls_do_not_mutate() {
        let mut s = state();
        let before = s.clone();
        let bad = [
            ("put_object", json!({"Bucket": "data-bucket", "Key": "x", "Body": 3})),
            ("put_object", json!({"Bucket": "data-bucket", "Key": "x", "Extra": 1})),
            ("delete_objects", json!({"Bucket": "data-bucket", "Delete": {"Objects": [{"Key": "b.txt"}, {"Nope": 1}]}})),
            ("copy_object", json!({"Bucket": "missing", "Key": "x", "CopySource": "data-bucket/b.txt"})),
            ("create_bucket", json!({"Bucket": "ok-name", "CreateBucketConfiguration": {"LocationConstraint": 5}})),
        ];
        for (api, kwargs) in bad {
            assert!(call(&mut s, api, kwargs).is_err(), "{api}");
            assert_eq!(s, before, "{api}");
        }
    }
}
