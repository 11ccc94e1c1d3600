//! Certificates and their text format.
//!
//! A certificate binds a program (by digest of its canonical encoding) to one
//! symbolic execution tree per function. The file is a JSON document:
//!
//! ```text
//! { "version": 1,
//!   "digest": "<64 hex chars>",
//!   "functions": [ { "name": "main", "tree": <node> }, ... ] }
//! ```
//!
//! with nodes `{"step":"consume","k":N,"next":..}`,
//! `{"step":"auto_open","k":N,"next":..}`, `{"step":"done"}`,
//! `{"branch":{"then":..,"else":..}}` and `{"success":true}`.

use std::fmt;

use serde::Deserialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::lang::{canonical_encoding, Program};

pub const FORMAT_VERSION: u32 = 1;

/// A replay hint recorded at a leaf consumption.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SymexStep {
    /// Consume the chunk at index `k` of the current heap.
    ConsumeChunk(usize),
    /// Turn the `points_to` chunk at `k` into `points_to_(l, some(v))` at the
    /// front of the heap.
    AutoOpenPointsTo(usize),
}

impl fmt::Display for SymexStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymexStep::ConsumeChunk(k) => write!(f, "ConsumeChunk({k})"),
            SymexStep::AutoOpenPointsTo(k) => write!(f, "AutoOpen({k})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SymexTree {
    Step(SymexStep, Box<SymexTree>),
    /// The path is infeasible; terminal.
    Done,
    Branch(Box<SymexTree>, Box<SymexTree>),
    Success,
}

impl SymexTree {
    /// Prepends `steps` (in order) to `rest`.
    pub fn with_steps(steps: Vec<SymexStep>, rest: SymexTree) -> SymexTree {
        steps
            .into_iter()
            .rev()
            .fold(rest, |acc, s| SymexTree::Step(s, Box::new(acc)))
    }

    pub fn node_count(&self) -> usize {
        let mut n = 0;
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            n += 1;
            match t {
                SymexTree::Step(_, next) => stack.push(next),
                SymexTree::Branch(a, b) => {
                    stack.push(a);
                    stack.push(b);
                }
                SymexTree::Done | SymexTree::Success => {}
            }
        }
        n
    }

    /// All steps in the tree, depth first, then-branch before else-branch.
    pub fn steps(&self) -> Vec<SymexStep> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            match t {
                SymexTree::Step(s, next) => {
                    out.push(*s);
                    stack.push(next);
                }
                SymexTree::Branch(a, b) => {
                    stack.push(b);
                    stack.push(a);
                }
                SymexTree::Done | SymexTree::Success => {}
            }
        }
        out
    }

    /// Step sequences along every root-to-leaf path.
    pub fn paths(&self) -> Vec<Vec<SymexStep>> {
        match self {
            SymexTree::Step(s, next) => next
                .paths()
                .into_iter()
                .map(|mut p| {
                    p.insert(0, *s);
                    p
                })
                .collect(),
            SymexTree::Branch(a, b) => {
                let mut v = a.paths();
                v.extend(b.paths());
                v
            }
            SymexTree::Done | SymexTree::Success => vec![Vec::new()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub version: u32,
    pub digest: [u8; 32],
    /// One tree per function, in source order.
    pub trees: Vec<(String, SymexTree)>,
}

impl Certificate {
    pub fn tree(&self, name: &str) -> Option<&SymexTree> {
        self.trees.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn tree_mut(&mut self, name: &str) -> Option<&mut SymexTree> {
        self.trees.iter_mut().find(|(n, _)| n == name).map(|(_, t)| t)
    }
}

pub fn program_digest(p: &Program) -> [u8; 32] {
    Sha256::digest(canonical_encoding(p).as_bytes()).into()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CertFormatError {
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error("{0}")]
    Schema(String),
}

fn schema<T>(msg: impl Into<String>) -> Result<T, CertFormatError> {
    Err(CertFormatError::Schema(msg.into()))
}

fn tree_to_json(t: &SymexTree) -> Value {
    match t {
        SymexTree::Step(s, next) => {
            let (kind, k) = match s {
                SymexStep::ConsumeChunk(k) => ("consume", k),
                SymexStep::AutoOpenPointsTo(k) => ("auto_open", k),
            };
            let mut m = Map::new();
            m.insert("step".into(), json!(kind));
            m.insert("k".into(), json!(k));
            m.insert("next".into(), tree_to_json(next));
            Value::Object(m)
        }
        SymexTree::Done => json!({ "step": "done" }),
        SymexTree::Branch(a, b) => {
            let mut inner = Map::new();
            inner.insert("then".into(), tree_to_json(a));
            inner.insert("else".into(), tree_to_json(b));
            let mut m = Map::new();
            m.insert("branch".into(), Value::Object(inner));
            Value::Object(m)
        }
        SymexTree::Success => json!({ "success": true }),
    }
}

fn keys_exactly(m: &Map<String, Value>, keys: &[&str]) -> Result<(), CertFormatError> {
    if m.len() != keys.len() || !keys.iter().all(|k| m.contains_key(*k)) {
        let got: Vec<&str> = m.keys().map(String::as_str).collect();
        return schema(format!("tree node has keys {got:?}, expected {keys:?}"));
    }
    Ok(())
}

fn tree_from_json(v: &Value) -> Result<SymexTree, CertFormatError> {
    let Value::Object(m) = v else {
        return schema("tree node must be an object");
    };
    if let Some(step) = m.get("step") {
        let kind = step.as_str().unwrap_or_default();
        if kind == "done" {
            keys_exactly(m, &["step"])?;
            return Ok(SymexTree::Done);
        }
        keys_exactly(m, &["step", "k", "next"])?;
        let k = m["k"]
            .as_u64()
            .and_then(|k| usize::try_from(k).ok())
            .ok_or_else(|| CertFormatError::Schema("`k` must be a non-negative integer".into()))?;
        let step = match kind {
            "consume" => SymexStep::ConsumeChunk(k),
            "auto_open" => SymexStep::AutoOpenPointsTo(k),
            other => return schema(format!("unknown step kind {other:?}")),
        };
        return Ok(SymexTree::Step(step, Box::new(tree_from_json(&m["next"])?)));
    }
    if let Some(b) = m.get("branch") {
        keys_exactly(m, &["branch"])?;
        let Value::Object(inner) = b else {
            return schema("`branch` must be an object");
        };
        keys_exactly(inner, &["then", "else"])?;
        return Ok(SymexTree::Branch(
            Box::new(tree_from_json(&inner["then"])?),
            Box::new(tree_from_json(&inner["else"])?),
        ));
    }
    if m.get("success") == Some(&Value::Bool(true)) {
        keys_exactly(m, &["success"])?;
        return Ok(SymexTree::Success);
    }
    schema("unrecognized tree node")
}

impl Certificate {
    pub fn to_text(&self) -> String {
        let functions: Vec<Value> = self
            .trees
            .iter()
            .map(|(name, tree)| {
                let mut m = Map::new();
                m.insert("name".into(), json!(name));
                m.insert("tree".into(), tree_to_json(tree));
                Value::Object(m)
            })
            .collect();
        let mut doc = Map::new();
        doc.insert("version".into(), json!(self.version));
        doc.insert("digest".into(), json!(hex::encode(self.digest)));
        doc.insert("functions".into(), Value::Array(functions));
        let mut s = serde_json::to_string_pretty(&Value::Object(doc)).expect("JSON values always serialize");
        s.push('\n');
        s
    }

    pub fn from_text(text: &str) -> Result<Certificate, CertFormatError> {
        let mut de = serde_json::Deserializer::from_str(text);
        de.disable_recursion_limit();
        let v = Value::deserialize(&mut de).map_err(|e| CertFormatError::Json(e.to_string()))?;
        de.end().map_err(|e| CertFormatError::Json(e.to_string()))?;

        let Value::Object(doc) = v else {
            return schema("certificate must be a JSON object");
        };
        let version = doc
            .get("version")
            .and_then(Value::as_u64)
            .and_then(|v| u32::try_from(v).ok())
            .ok_or_else(|| CertFormatError::Schema("missing or invalid `version`".into()))?;
        let digest_hex = doc
            .get("digest")
            .and_then(Value::as_str)
            .ok_or_else(|| CertFormatError::Schema("missing `digest`".into()))?;
        if digest_hex.len() != 64 {
            return schema("`digest` must be 64 hex characters");
        }
        let mut digest = [0u8; 32];
        hex::decode_to_slice(digest_hex, &mut digest)
            .map_err(|e| CertFormatError::Schema(format!("bad digest: {e}")))?;
        let Some(Value::Array(functions)) = doc.get("functions") else {
            return schema("missing `functions` array");
        };
        let mut trees = Vec::with_capacity(functions.len());
        for f in functions {
            let name = f
                .get("name")
                .and_then(Value::as_str)
                .ok_or_else(|| CertFormatError::Schema("function entry without `name`".into()))?;
            let tree = f
                .get("tree")
                .ok_or_else(|| CertFormatError::Schema(format!("function `{name}` has no `tree`")))?;
            trees.push((name.to_string(), tree_from_json(tree)?));
        }
        Ok(Certificate { version, digest, trees })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_tree() -> impl Strategy<Value = SymexTree> {
        let leaf = prop_oneof![Just(SymexTree::Success), Just(SymexTree::Done)];
        leaf.prop_recursive(8, 64, 2, |inner| {
            prop_oneof![
                (0usize..5, inner.clone()).prop_map(|(k, t)| SymexTree::Step(SymexStep::ConsumeChunk(k), Box::new(t))),
                (0usize..5, inner.clone()).prop_map(|(k, t)| SymexTree::Step(SymexStep::AutoOpenPointsTo(k), Box::new(t))),
                (inner.clone(), inner).prop_map(|(a, b)| SymexTree::Branch(Box::new(a), Box::new(b))),
            ]
        })
    }

    proptest! {
        #[test]
        fn text_round_trip(trees in proptest::collection::vec(arb_tree(), 0..4), digest in any::<[u8; 32]>()) {
            let cert = Certificate {
                version: FORMAT_VERSION,
                digest,
                trees: trees.into_iter().enumerate().map(|(i, t)| (format!("f{i}"), t)).collect(),
            };
            let text = cert.to_text();
            let back = Certificate::from_text(&text).unwrap();
            prop_assert_eq!(&back, &cert);
            prop_assert_eq!(back.to_text(), text);
        }
    }

    #[test]
    fn node_encoding() {
        let t = SymexTree::with_steps(
            vec![SymexStep::ConsumeChunk(1)],
            SymexTree::Branch(Box::new(SymexTree::Done), Box::new(SymexTree::Success)),
        );
        let v = tree_to_json(&t);
        assert_eq!(
            serde_json::to_string(&v).unwrap(),
            r#"{"step":"consume","k":1,"next":{"branch":{"then":{"step":"done"},"else":{"success":true}}}}"#
        );
    }

    #[test]
    fn rejects_malformed() {
        assert!(Certificate::from_text("{").is_err());
        assert!(Certificate::from_text(r#"{"version":1,"digest":"00","functions":[]}"#).is_err());
        let d = "0".repeat(64);
        let ok = format!(r#"{{"version":1,"digest":"{d}","functions":[]}}"#);
        assert!(Certificate::from_text(&ok).is_ok());
        let bad = format!(r#"{{"version":1,"digest":"{d}","functions":[{{"name":"f","tree":{{"step":"consume","k":-1,"next":{{"success":true}}}}}}]}}"#);
        assert!(Certificate::from_text(&bad).is_err());
        let extra = format!(r#"{{"version":1,"digest":"{d}","functions":[{{"name":"f","tree":{{"success":true,"x":1}}}}]}}"#);
        assert!(Certificate::from_text(&extra).is_err());
    }

    #[test]
    fn deep_trees_parse() {
        let t = SymexTree::with_steps(vec![SymexStep::ConsumeChunk(0); 600], SymexTree::Success);
        let cert = Certificate { version: 1, digest: [7; 32], trees: vec![("f".into(), t)] };
        assert_eq!(Certificate::from_text(&cert.to_text()).unwrap(), cert);
    }
}
