use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Number, Value};

use super::FormatError;
use crate::canonical::quantize6;

/// Deserializes with a field path attached to any error.
pub(crate) fn from_str_with_path<T: DeserializeOwned>(text: &str) -> Result<T, FormatError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        FormatError::Schema {
            file: None,
            path: if path.is_empty() { "$".into() } else { path },
            message: strip_location(&inner.to_string()),
            line: inner.line(),
            column: inner.column(),
        }
    })?;
    de.end().map_err(|e| FormatError::Schema {
        file: None,
        path: "$".into(),
        message: strip_location(&e.to_string()),
        line: e.line(),
        column: e.column(),
    })?;
    Ok(value)
}

fn strip_location(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_owned(),
        None => msg.to_owned(),
    }
}

fn quantize_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(q) = n.as_f64().map(quantize6).and_then(Number::from_f64) {
                *n = q;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(quantize_value),
        Value::Object(map) => map.values_mut().for_each(quantize_value),
        _ => {}
    }
}

/// Pretty JSON with every float quantized to six fractional digits.
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("plain data serializes");
    quantize_value(&mut v);
    let mut out = serde_json::to_string_pretty(&v).expect("value serializes");
    out.push('\n');
    out
}
