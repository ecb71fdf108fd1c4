//! Experiment records and their canonical JSON-lines encoding.
//!
//! Canonical form: object keys sorted bytewise, no whitespace, integers
//! verbatim, floats in scientific notation with 17 significant digits
//! (`7.7015115293406988e-1`). The same value always encodes to the same bytes.

use std::fmt::Write as _;
use std::fs::OpenOptions;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// Field excluded from determinism comparisons.
pub const TIMESTAMP_FIELD: &str = "timestamp";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub command: String,
    pub version: String,
    pub config: Value,
    pub outcome: Value,
    pub timestamp: String,
}

impl ExperimentReport {
    pub fn new(command: &str, config: Value, outcome: Value) -> Self {
        ExperimentReport {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            outcome,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Micros, true),
        }
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("report serializes")
    }

    /// One canonical JSON line, without the trailing newline.
    pub fn to_line(&self) -> String {
        canonical_json(&self.to_value())
    }

    /// Canonical encoding with the timestamp removed.
    pub fn content_line(&self) -> String {
        let mut v = self.to_value();
        if let Value::Object(map) = &mut v {
            map.remove(TIMESTAMP_FIELD);
        }
        canonical_json(&v)
    }

    pub fn parse_line(line: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(line)
    }
}

/// Appends `line` plus a newline with a single `write` on an `O_APPEND`
/// handle, so concurrent writers never interleave within a record.
pub fn append_line(path: &Path, line: &str) -> io::Result<()> {
    let mut buf = String::with_capacity(line.len() + 1);
    buf.push_str(line);
    buf.push('\n');
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    file.write_all(buf.as_bytes())
}

pub fn canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, value);
    out
}

/// `%.16e` with a JSON-compatible exponent.
pub fn format_float(v: f64) -> String {
    if !v.is_finite() {
        return "null".to_string();
    }
    format!("{v:.16e}")
}

fn write_value(out: &mut String, value: &Value) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&format_float(n.as_f64().expect("f64 number")));
            } else {
                let _ = write!(out, "{n}");
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(out, item);
            }
            out.push(']');
        }
        Value::Object(map) => write_object(out, map),
    }
}

fn write_object(out: &mut String, map: &Map<String, Value>) {
    let mut keys: Vec<&String> = map.keys().collect();
    keys.sort();
    out.push('{');
    for (i, k) in keys.into_iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&Value::String(k.clone()).to_string());
        out.push(':');
        write_value(out, &map[k]);
    }
    out.push('}');
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_have_seventeen_significant_digits() {
        assert_eq!(format_float(0.5), "5.0000000000000000e-1");
        assert_eq!(
            format_float(0.770_151_152_934_069_9),
            "7.7015115293406988e-1"
        );
        assert_eq!(format_float(1234.0), "1.2340000000000000e3");
        assert_eq!(format_float(f64::NAN), "null");
        for v in [0.1, 1.0 / 3.0, 2f64.powi(-60), 123456.789e200] {
            let s = format_float(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn keys_are_sorted_recursively() {
        let v = json!({"b": 1, "a": {"z": [1.5, {"y": 2, "x": null}], "T": true}});
        assert_eq!(
            canonical_json(&v),
            r#"{"a":{"T":true,"z":[1.5000000000000000e0,{"x":null,"y":2}]},"b":1}"#
        );
    }

    #[test]
    fn canonical_form_reparses_to_the_same_value() {
        let v = json!({"s": "quote \" and \\ and é", "n": -3, "f": -0.25, "big": u64::MAX});
        let line = canonical_json(&v);
        let back: Value = serde_json::from_str(&line).unwrap();
        assert_eq!(canonical_json(&back), line);
    }

    #[test]
    fn content_line_drops_only_the_timestamp() {
        let mut a = ExperimentReport::new("measure", json!({"x": 0}), json!({"bit": 1}));
        let mut b = a.clone();
        a.timestamp = "t1".into();
        b.timestamp = "t2".into();
        assert_ne!(a.to_line(), b.to_line());
        assert_eq!(a.content_line(), b.content_line());
        assert!(!a.content_line().contains("timestamp"));
        assert_eq!(ExperimentReport::parse_line(&a.to_line()).unwrap(), a);
    }

    #[test]
    fn append_writes_whole_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        append_line(&path, "{\"a\":1}").unwrap();
        append_line(&path, "{\"a\":2}").unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "{\"a\":1}\n{\"a\":2}\n"
        );
    }

    proptest::proptest! {
        #[test]
        fn canonical_floats_reparse_exactly(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL) {
            let line = canonical_json(&json!({ "v": v }));
            let back: Value = serde_json::from_str(&line).unwrap();
            proptest::prop_assert_eq!(back["v"].as_f64().unwrap().to_bits(), v.to_bits());
            proptest::prop_assert_eq!(canonical_json(&back), line);
        }
    }
}
