//! JSON overrides for registry entries.
//!
//! ```json
//! { "ridge": 1e-6, "benchmarks": { "metr-la": { "scope": "per_location" } } }
//! ```
//!
//! Top-level keys apply to every benchmark; entries under `benchmarks` apply
//! to one id and win over the top level. Nested objects are merged key by key.

use std::path::Path;

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::registry::BenchmarkSpec;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    global: Map<String, Value>,
    per_id: Map<String, Value>,
}

impl Overrides {
    pub fn from_value(value: Value) -> Result<Self> {
        let Value::Object(mut global) = value else {
            return Err(Error::Config("top level must be a JSON object".into()));
        };
        let per_id = match global.remove("benchmarks") {
            None => Map::new(),
            Some(Value::Object(m)) => m,
            Some(_) => return Err(Error::Config("`benchmarks` must map ids to objects".into())),
        };
        if global.contains_key("id") {
            return Err(Error::Config("`id` cannot be overridden".into()));
        }
        for (id, v) in &per_id {
            if !v.is_object() {
                return Err(Error::Config(format!("`benchmarks.{id}` must be an object")));
            }
            if v.get("id").is_some() {
                return Err(Error::Config(format!("`benchmarks.{id}.id` cannot be overridden")));
            }
        }
        Ok(Self { global, per_id })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_value(crate::io::read_json(path)?)
    }

    /// Ids named under `benchmarks`, to flag typos against the registry.
    pub fn named_ids(&self) -> impl Iterator<Item = &str> {
        self.per_id.keys().map(String::as_str)
    }

    pub fn apply(&self, spec: &BenchmarkSpec) -> Result<BenchmarkSpec> {
        let mut value = serde_json::to_value(spec).map_err(|e| Error::Config(e.to_string()))?;
        merge(&mut value, &Value::Object(self.global.clone()));
        if let Some(local) = self.per_id.get(&spec.id) {
            merge(&mut value, local);
        }
        let out: BenchmarkSpec =
            serde_json::from_value(value).map_err(|e| Error::Config(format!("benchmark `{}`: {e}", spec.id)))?;
        out.validate()?;
        Ok(out)
    }
}

fn merge(base: &mut Value, patch: &Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(k) {
                    // Tagged enums (splits) are replaced wholesale so a kind
                    // change does not inherit stale fields.
                    Some(slot) if slot.is_object() && v.is_object() && v.get("kind").is_none() => merge(slot, v),
                    _ => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, p) => *b = p.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::find;
    use mobench_core::arres::Scope;
    use mobench_core::panel::SplitSpec;
    use serde_json::json;

    #[test]
    fn global_then_per_id() {
        let o = Overrides::from_value(json!({
            "ridge": 1e-6,
            "benchmarks": { "metr-la": { "scope": "per_location", "ridge": 0.5 } }
        }))
        .unwrap();
        let m = o.apply(&find("metr-la").unwrap()).unwrap();
        assert_eq!((m.scope, m.ridge), (Scope::PerLocation, 0.5));
        let p = o.apply(&find("pems-bay").unwrap()).unwrap();
        assert_eq!((p.scope, p.ridge), (Scope::Pooled, 1e-6));
    }

    #[test]
    fn split_replaced_wholesale() {
        let o = Overrides::from_value(json!({"split": {"kind": "days", "train": 2, "val": 0, "test": 1}})).unwrap();
        let s = o.apply(&find("metr-la").unwrap()).unwrap();
        assert_eq!(s.split, SplitSpec::Days { train: 2, val: 0, test: 1 });
    }

    #[test]
    fn rejects_unknown_fields_and_bad_shapes() {
        let o = Overrides::from_value(json!({"rigde": 1.0})).unwrap();
        assert!(matches!(o.apply(&find("metr-la").unwrap()), Err(Error::Config(_))));
        assert!(Overrides::from_value(json!([1])).is_err());
        assert!(Overrides::from_value(json!({"benchmarks": {"x": 1}})).is_err());
        assert!(Overrides::from_value(json!({"id": "x"})).is_err());
    }

    #[test]
    fn invalid_values_fail_validation() {
        let o = Overrides::from_value(json!({"lag_h": 0})).unwrap();
        assert!(o.apply(&find("sz-taxi").unwrap()).is_err());
    }
}
