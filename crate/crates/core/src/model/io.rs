// SPDX-License-Identifier: Apache-2.0

//! JSON persistence for [`GbdtModel`].
//!
//! ```json
//! {"version": 1, "base_score": 0.0, "learning_rate": 0.1,
//!  "feature_schema": ["x"],
//!  "trees": [{"feature": "x", "threshold": 0.5, "default": "left", "gain": 3.2,
//!             "left": {"leaf": -0.4}, "right": {"leaf": 0.4}}]}
//! ```
//!
//! Floats are written in shortest round-trip form, so predictions after a
//! reload are bit-identical.

use std::path::Path;

use serde_json::{json, Map, Value};

use super::{GbdtModel, TreeNode};
use crate::{Error, Result};

pub const MODEL_FORMAT_VERSION: u64 = 1;

fn node_to_json(node: &TreeNode, schema: &[String]) -> Value {
    match node {
        TreeNode::Leaf { weight } => json!({ "leaf": weight }),
        TreeNode::Split { feature, threshold, default_left, gain, left, right } => json!({
            "feature": schema[*feature],
            "threshold": threshold,
            "default": if *default_left { "left" } else { "right" },
            "gain": gain,
            "left": node_to_json(left, schema),
            "right": node_to_json(right, schema),
        }),
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::ModelFormat(msg.into())
}

fn number(obj: &Map<String, Value>, key: &str) -> Result<f64> {
    obj.get(key)
        .and_then(Value::as_f64)
        .ok_or_else(|| bad(format!("missing or non-numeric {key:?}")))
}

fn node_from_json(v: &Value, schema: &[String], depth: usize) -> Result<TreeNode> {
    if depth > 256 {
        return Err(bad("tree nesting too deep"));
    }
    let obj = v.as_object().ok_or_else(|| bad("tree node is not an object"))?;
    if obj.contains_key("leaf") {
        return Ok(TreeNode::Leaf { weight: number(obj, "leaf")? });
    }
    let name = obj.get("feature").and_then(Value::as_str).ok_or_else(|| bad("split without \"feature\""))?;
    let feature = schema
        .iter()
        .position(|s| s == name)
        .ok_or_else(|| bad(format!("feature {name:?} is not in the schema")))?;
    let default_left = match obj.get("default").and_then(Value::as_str) {
        Some("left") | None => true,
        Some("right") => false,
        Some(other) => return Err(bad(format!("default branch {other:?}"))),
    };
    let child = |k: &str| -> Result<Box<TreeNode>> {
        let c = obj.get(k).ok_or_else(|| bad(format!("split without {k:?} child")))?;
        Ok(Box::new(node_from_json(c, schema, depth + 1)?))
    };
    Ok(TreeNode::Split {
        feature,
        threshold: number(obj, "threshold")?,
        default_left,
        gain: obj.get("gain").and_then(Value::as_f64).unwrap_or(0.0),
        left: child("left")?,
        right: child("right")?,
    })
}

impl GbdtModel {
    pub fn to_json(&self) -> Value {
        json!({
            "version": MODEL_FORMAT_VERSION,
            "base_score": self.base_score,
            "learning_rate": self.learning_rate,
            "feature_schema": self.feature_schema,
            "trees": self.trees.iter().map(|t| node_to_json(t, &self.feature_schema)).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let obj = v.as_object().ok_or_else(|| bad("model is not a JSON object"))?;
        match obj.get("version").and_then(Value::as_u64) {
            Some(MODEL_FORMAT_VERSION) => {}
            Some(other) => return Err(bad(format!("version {other}, expected {MODEL_FORMAT_VERSION}"))),
            None => return Err(bad("missing \"version\"")),
        }
        let feature_schema: Vec<String> = obj
            .get("feature_schema")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing \"feature_schema\""))?
            .iter()
            .map(|s| s.as_str().map(str::to_string).ok_or_else(|| bad("non-string feature name")))
            .collect::<Result<_>>()?;
        let trees = obj
            .get("trees")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing \"trees\""))?
            .iter()
            .map(|t| node_from_json(t, &feature_schema, 0))
            .collect::<Result<_>>()?;
        Ok(GbdtModel {
            trees,
            base_score: number(obj, "base_score")?,
            learning_rate: number(obj, "learning_rate")?,
            feature_schema,
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("model serializes")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        Self::from_json(&v)
    }
}

pub fn save_model(model: &GbdtModel, path: &Path) -> Result<()> {
    std::fs::write(path, model.to_json_string() + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<GbdtModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    GbdtModel::from_json_str(&text)
}
