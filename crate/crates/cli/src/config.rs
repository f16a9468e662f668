//! Layering of defaults, presets, config files and flags.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::CliError;

/// Recursively overlays `top` onto `base`; non-object values replace.
pub fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Applies the JSON object in `path` (if any) on top of `base`. The result
/// is re-parsed, so unknown keys and wrong types are reported.
pub fn overlay<T: Serialize + DeserializeOwned>(base: T, path: Option<&Path>) -> Result<T, CliError> {
    let Some(path) = path else { return Ok(base) };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let top: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("config {} is not valid JSON: {e}", path.display())))?;
    if !top.is_object() {
        return Err(CliError::Usage(format!("config {} must hold a JSON object", path.display())));
    }
    let mut value = serde_json::to_value(base).map_err(|e| CliError::Runtime(e.into()))?;
    merge(&mut value, top);
    serde_json::from_value(value).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;
    use serde_json::json;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Inner {
        a: f64,
        b: f64,
    }

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Outer {
        n: usize,
        inner: Inner,
    }

    fn write(text: &str) -> tempfile::NamedTempFile {
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(f.path(), text).unwrap();
        f
    }

    #[test]
    fn nested_overlay() {
        let base = Outer { n: 1, inner: Inner { a: 1.0, b: 2.0 } };
        let f = write(&json!({"inner": {"b": 5.0}}).to_string());
        let got = overlay(base, Some(f.path())).unwrap();
        assert_eq!(got, Outer { n: 1, inner: Inner { a: 1.0, b: 5.0 } });
    }

    #[test]
    fn unknown_keys_rejected() {
        let base = Outer { n: 1, inner: Inner { a: 1.0, b: 2.0 } };
        let f = write(r#"{"inner": {"c": 1}}"#);
        assert!(matches!(overlay(base, Some(f.path())), Err(CliError::Usage(_))));
    }
}
