//! Machine-readable report envelope shared by the CLI and the FFI layer.

use serde::ser::{SerializeSeq, Serializer};
use serde::Serialize;
use serde_json::{json, Value};

use crate::linalg::C64;

/// Schema tag written into every report.
pub const REPORT_SCHEMA: &str = "specbound.report/1";

/// JSON value for a float: the number itself, or `"inf"`, `"-inf"`, `"nan"`.
pub fn number(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

/// `[re, im]` pairs.
pub fn complex_list(values: &[C64]) -> Value {
    Value::Array(values.iter().map(|z| json!([number(z.re), number(z.im)])).collect())
}

pub(crate) fn serialize_complex_list<S: Serializer>(values: &[C64], s: S) -> std::result::Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(values.len()))?;
    for z in values {
        seq.serialize_element(&[z.re, z.im])?;
    }
    seq.end()
}

pub(crate) fn serialize_display<T: std::fmt::Display, S: Serializer>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

/// Wall-clock phases, reported only on request so that default output is
/// byte-identical across runs.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Timings {
    pub phases: Vec<(String, f64)>,
}

impl Timings {
    pub fn record<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = std::time::Instant::now();
        let out = f();
        self.phases.push((name.to_string(), start.elapsed().as_secs_f64()));
        out
    }
}

/// One command result: a free-form payload plus warnings.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub command: String,
    pub payload: Value,
    pub warnings: Vec<String>,
    pub timings: Option<Timings>,
}

impl BoundReport {
    pub fn new(command: impl Into<String>, payload: Value) -> Self {
        Self {
            command: command.into(),
            payload,
            warnings: Vec::new(),
            timings: None,
        }
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }

    pub fn to_value(&self) -> Value {
        let mut obj = serde_json::Map::new();
        obj.insert("schema".into(), json!(REPORT_SCHEMA));
        obj.insert("tool_version".into(), json!(env!("CARGO_PKG_VERSION")));
        obj.insert("command".into(), json!(self.command));
        obj.insert("result".into(), self.payload.clone());
        obj.insert("warnings".into(), json!(self.warnings));
        if let Some(t) = &self.timings {
            let phases: serde_json::Map<String, Value> = t.phases.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
            obj.insert("timings".into(), Value::Object(phases));
        }
        Value::Object(obj)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).expect("report values are serializable")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;

    #[test]
    fn non_finite_numbers_become_strings() {
        assert_eq!(number(1.5), json!(1.5));
        assert_eq!(number(f64::INFINITY), json!("inf"));
        assert_eq!(number(f64::NEG_INFINITY), json!("-inf"));
        assert_eq!(number(f64::NAN), json!("nan"));
    }

    #[test]
    fn envelope_shape() {
        let mut r = BoundReport::new("gauge", json!({"value": number(2.0), "z": complex_list(&[c64(1.0, -1.0)])}));
        r.warn("careful");
        let v = r.to_value();
        assert_eq!(v["schema"], REPORT_SCHEMA);
        assert_eq!(v["result"]["z"], json!([[1.0, -1.0]]));
        assert_eq!(v["warnings"][0], "careful");
        assert!(v.get("timings").is_none());
        assert_eq!(r.to_json(), r.to_json());
    }
}
