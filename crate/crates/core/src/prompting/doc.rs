use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    /// Type annotation as it should appear, e.g. `Optional[str]`.
    pub ty: String,
    /// Default value source text, e.g. `""`.
    #[serde(default)]
    pub default: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiEntry {
    pub name: String,
    pub params: Vec<Param>,
    pub docstring: String,
}

/// API reference shown to the model inside a `<def>` block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiDocument {
    pub entries: Vec<ApiEntry>,
}

fn p(name: &str, ty: &str) -> Param {
    Param {
        name: name.into(),
        ty: ty.into(),
        default: None,
    }
}

fn opt(name: &str, ty: &str, default: &str) -> Param {
    Param {
        name: name.into(),
        ty: ty.into(),
        default: Some(default.into()),
    }
}

fn entry(name: &str, params: Vec<Param>, docstring: &str) -> ApiEntry {
    ApiEntry {
        name: name.into(),
        params,
        docstring: docstring.into(),
    }
}

impl ApiDocument {
    /// The storage API the agent drives.
    pub fn s3() -> Self {
        let bucket = || p("Bucket", "str");
        Self {
            entries: vec![
                entry("get_object", vec![bucket(), p("Key", "str")], "Retrieves objects from Amazon S3."),
                entry(
                    "put_object",
                    vec![bucket(), p("Key", "str"), opt("Body", "Optional[str]", "\"\"")],
                    "Adds an object to a bucket.",
                ),
                entry("delete_object", vec![bucket(), p("Key", "str")], "Delete an object from a bucket."),
                entry(
                    "list_objects",
                    vec![bucket(), opt("Prefix", "Optional[str]", "\"\""), opt("Delimiter", "Optional[str]", "\"\"")],
                    "Returns some or all of the objects in a bucket.",
                ),
                entry(
                    "create_bucket",
                    vec![bucket(), p("CreateBucketConfiguration", "Dict")],
                    "Creates a new S3 bucket.",
                ),
                entry(
                    "copy_object",
                    vec![bucket(), p("CopySource", "Union[Dict, str]"), p("Key", "str")],
                    "Creates a copy of an object that is already stored in Amazon S3.",
                ),
                entry(
                    "list_buckets",
                    vec![],
                    "Returns a list of all buckets owned by the authenticated sender of the request.",
                ),
                entry("delete_bucket", vec![bucket()], "Deletes the S3 bucket."),
                entry(
                    "delete_objects",
                    vec![bucket(), p("Delete", "Dict")],
                    "Delete multiple objects from a bucket.",
                ),
                entry("get_bucket_location", vec![bucket()], "Returns the Region the bucket resides in."),
                entry(
                    "head_bucket",
                    vec![bucket()],
                    "Determine if a bucket exists and you have permission to access it.",
                ),
            ],
        }
    }

    /// Unrelated toy API used to show the output format without in-domain examples.
    pub fn calendar() -> Self {
        Self {
            entries: vec![
                entry("list_events", vec![p("Day", "str")], "Returns the events scheduled on a day."),
                entry(
                    "create_event",
                    vec![p("Day", "str"), p("Title", "str"), opt("Time", "Optional[str]", "\"09:00\"")],
                    "Adds an event to the calendar.",
                ),
                entry("delete_event", vec![p("Day", "str"), p("Title", "str")], "Removes an event from the calendar."),
            ],
        }
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.name.as_str()).collect()
    }

    pub fn render(&self) -> String {
        let blocks: Vec<String> = self
            .entries
            .iter()
            .map(|e| {
                let mut params = vec!["self".to_string()];
                params.extend(e.params.iter().map(|p| match &p.default {
                    Some(d) => format!("{}: {} = {d}", p.name, p.ty),
                    None => format!("{}: {}", p.name, p.ty),
                }));
                format!("def {}({}):\n\"\"\"{}\"\"\"\n", e.name, params.join(", "), e.docstring)
            })
            .collect();
        format!("<def>\n{}</def>", blocks.join("\n"))
    }
}
