//! The JSON envelope shared by every command, and its CSV flattening.

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Default, Serialize)]
pub struct Metadata {
    pub epsilon: Option<f64>,
    pub epsilon0: Option<f64>,
    pub n1: Option<usize>,
    pub n2: Option<usize>,
    pub d: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Serialize)]
pub struct Envelope {
    pub command: &'static str,
    pub metadata: Metadata,
    pub result: Value,
}

impl Envelope {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("envelope serializes");
        s.push('\n');
        s
    }

    /// `field,value` rows with dotted paths; arrays use numeric segments.
    pub fn to_csv(&self) -> String {
        let value = serde_json::to_value(self).expect("envelope serializes");
        let mut rows = Vec::new();
        flatten("", &value, &mut rows);
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["field", "value"]).expect("in-memory write");
        for (k, v) in rows {
            w.write_record([k, v]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let join = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                flatten(&join(k), child, out);
            }
        }
        Value::Array(items) => {
            for (i, child) in items.iter().enumerate() {
                flatten(&join(&i.to_string()), child, out);
            }
        }
        Value::Null => out.push((prefix.to_string(), String::new())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_flattening() {
        let e = Envelope {
            command: "schedule",
            metadata: Metadata {
                epsilon: Some(0.5),
                ..Default::default()
            },
            result: serde_json::json!({"a": [1, {"b": "x"}], "c": null}),
        };
        let csv = e.to_csv();
        assert!(csv.starts_with("field,value\ncommand,schedule\n"));
        assert!(csv.contains("metadata.epsilon,0.5\n"));
        assert!(csv.contains("metadata.n1,\n"));
        assert!(csv.contains("result.a.0,1\n"));
        assert!(csv.contains("result.a.1.b,x\n"));
    }
}
