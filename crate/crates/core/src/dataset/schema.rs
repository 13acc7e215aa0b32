//! The three dataset record shapes and a key-by-key validator for them.

use std::fmt;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub const USER_PREFIX: &str = "Summary of the Doctor-Patient Dialogue: ";
pub const VAL_PROMPT_PREFIX: &str = "User: Summary of the Doctor-Patient Dialogue: ";
pub const VAL_PROMPT_SUFFIX: &str = "\nSummary:\n\nAssistant:";
pub const SUMMARY_CUE: &str = "\nSummary:";
pub const PATIENT: &str = "[Patient]";
pub const DOCTOR: &str = "[Doctor]";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatypusRecord {
    pub input: String,
    pub output: String,
    pub instruction: String,
    pub data_source: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EsftTrainRecord {
    pub id: u64,
    pub dataset: String,
    pub messages: Vec<Message>,
    pub length: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expert_tags: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EsftValRecord {
    pub idx: u64,
    pub prompt: String,
    pub raw_answers: Vec<String>,
    pub answers: Vec<String>,
    pub length: usize,
}

/// Character count as used by the `length` fields: Unicode scalar values.
pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schema {
    Platypus,
    EsftTrain,
    EsftVal,
}

impl FromStr for Schema {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "platypus" => Ok(Schema::Platypus),
            "esft_train" | "esft-train" => Ok(Schema::EsftTrain),
            "esft_val" | "esft-val" => Ok(Schema::EsftVal),
            other => Err(format!("unknown schema `{other}` (expected platypus, esft_train or esft_val)")),
        }
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Schema::Platypus => "platypus",
            Schema::EsftTrain => "esft_train",
            Schema::EsftVal => "esft_val",
        })
    }
}

/// A record type bound to its schema.
pub trait SchemaRecord: Serialize + DeserializeOwned {
    const SCHEMA: Schema;
}

impl SchemaRecord for PlatypusRecord {
    const SCHEMA: Schema = Schema::Platypus;
}

impl SchemaRecord for EsftTrainRecord {
    const SCHEMA: Schema = Schema::EsftTrain;
}

impl SchemaRecord for EsftValRecord {
    const SCHEMA: Schema = Schema::EsftVal;
}

/// One problem with a record, located by a JSON path such as `messages[1].role`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            f.write_str(&self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

struct Checker {
    found: Vec<Violation>,
}

impl Checker {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.found.push(Violation { path: path.into(), message: message.into() });
    }

    /// Exact key set: reports unknown keys, then missing required keys.
    fn keys(&mut self, prefix: &str, obj: &Map<String, Value>, required: &[&str], optional: &[&str]) {
        for key in obj.keys() {
            if !required.contains(&key.as_str()) && !optional.contains(&key.as_str()) {
                self.push(join(prefix, key), format!("unknown key {key}"));
            }
        }
        for key in required {
            if !obj.contains_key(*key) {
                self.push(join(prefix, key), format!("missing key {key}"));
            }
        }
    }

    fn string<'v>(&mut self, prefix: &str, obj: &'v Map<String, Value>, key: &str) -> Option<&'v str> {
        match obj.get(key)? {
            Value::String(s) if s.trim().is_empty() => {
                self.push(join(prefix, key), "must not be empty");
                Some(s)
            }
            Value::String(s) => Some(s),
            other => {
                self.push(join(prefix, key), format!("expected a string, found {}", kind(other)));
                None
            }
        }
    }

    fn count(&mut self, prefix: &str, obj: &Map<String, Value>, key: &str) -> Option<u64> {
        match obj.get(key)? {
            Value::Number(n) if n.as_u64().is_some() => n.as_u64(),
            other => {
                self.push(join(prefix, key), format!("expected a non-negative integer, found {}", kind(other)));
                None
            }
        }
    }

    fn strings<'v>(&mut self, obj: &'v Map<String, Value>, key: &str, allow_empty: bool) -> Option<Vec<&'v str>> {
        match obj.get(key)? {
            Value::Array(items) => {
                if items.is_empty() && !allow_empty {
                    self.push(key, "must not be empty");
                }
                let mut out = Vec::new();
                for (i, item) in items.iter().enumerate() {
                    match item {
                        Value::String(s) if s.trim().is_empty() => self.push(format!("{key}[{i}]"), "must not be empty"),
                        Value::String(s) => out.push(s.as_str()),
                        other => self.push(format!("{key}[{i}]"), format!("expected a string, found {}", kind(other))),
                    }
                }
                (out.len() == items.len()).then_some(out)
            }
            other => {
                self.push(key, format!("expected an array, found {}", kind(other)));
                None
            }
        }
    }

    fn dialogue(&mut self, path: &str, text: &str) {
        for marker in [PATIENT, DOCTOR] {
            if !text.contains(marker) {
                self.push(path, format!("missing role marker {marker}"));
            }
        }
        if !text.contains('\n') {
            self.push(path, "missing turn separator \\n");
        }
    }

    fn length(&mut self, obj: &Map<String, Value>, measured: Option<usize>, of: &str) {
        if let (Some(stated), Some(measured)) = (self.count("", obj, "length"), measured) {
            if stated != measured as u64 {
                self.push("length", format!("is {stated} but {of} has {measured} characters"));
            }
        }
    }
}

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

fn kind(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

/// Checks a parsed JSON value against `schema`; an empty list means valid.
pub fn validate_value(value: &Value, schema: Schema) -> Vec<Violation> {
    let mut c = Checker { found: Vec::new() };
    let Value::Object(obj) = value else {
        c.push("", format!("expected a JSON object, found {}", kind(value)));
        return c.found;
    };
    match schema {
        Schema::Platypus => {
            c.keys("", obj, &["input", "output", "instruction", "data_source"], &[]);
            if let Some(input) = c.string("", obj, "input") {
                c.dialogue("input", input);
            }
            for key in ["output", "instruction", "data_source"] {
                c.string("", obj, key);
            }
        }
        Schema::EsftTrain => {
            c.keys("", obj, &["id", "dataset", "messages", "length"], &["expert_tags"]);
            c.count("", obj, "id");
            c.string("", obj, "dataset");
            let assistant = check_messages(&mut c, obj);
            c.length(obj, assistant.map(char_len), "messages[1].content");
            c.strings(obj, "expert_tags", false);
        }
        Schema::EsftVal => {
            c.keys("", obj, &["idx", "prompt", "raw_answers", "answers", "length"], &[]);
            c.count("", obj, "idx");
            if let Some(prompt) = c.string("", obj, "prompt") {
                if !prompt.starts_with(VAL_PROMPT_PREFIX) {
                    c.push("prompt", format!("must start with {VAL_PROMPT_PREFIX:?}"));
                }
                if !prompt.ends_with(VAL_PROMPT_SUFFIX) {
                    c.push("prompt", format!("must end with {VAL_PROMPT_SUFFIX:?}"));
                }
                c.dialogue("prompt", prompt);
            }
            c.strings(obj, "raw_answers", false);
            let answers = c.strings(obj, "answers", false);
            c.length(obj, answers.and_then(|a| a.first().map(|s| char_len(s))), "answers[0]");
        }
    }
    c.found
}

fn check_messages<'v>(c: &mut Checker, obj: &'v Map<String, Value>) -> Option<&'v str> {
    let messages = match obj.get("messages")? {
        Value::Array(m) => m,
        other => {
            c.push("messages", format!("expected an array, found {}", kind(other)));
            return None;
        }
    };
    if messages.len() != 2 {
        c.push("messages", format!("expected exactly 2 messages, found {}", messages.len()));
    }
    let mut assistant = None;
    for (i, (m, role)) in messages.iter().zip(["user", "assistant"]).enumerate() {
        let path = format!("messages[{i}]");
        let Value::Object(m) = m else {
            c.push(path, format!("expected an object, found {}", kind(m)));
            continue;
        };
        c.keys(&path, m, &["role", "content"], &[]);
        if let Some(found) = c.string(&path, m, "role") {
            if found != role {
                c.push(format!("{path}.role"), format!("expected {role:?}, found {found:?}"));
            }
        }
        if let Some(content) = c.string(&path, m, "content") {
            if i == 0 {
                c.dialogue(&format!("{path}.content"), content);
            } else {
                assistant = Some(content);
            }
        }
    }
    assistant
}

/// Parses and checks one JSON text. Unparseable input gives a single
/// "malformed JSON" violation.
pub fn validate_record(raw_json: &str, schema: Schema) -> Result<(), Vec<Violation>> {
    let value: Value = match serde_json::from_str(raw_json) {
        Ok(v) => v,
        Err(e) => return Err(vec![Violation { path: String::new(), message: format!("malformed JSON: {e}") }]),
    };
    let found = validate_value(&value, schema);
    if found.is_empty() {
        Ok(())
    } else {
        Err(found)
    }
}
