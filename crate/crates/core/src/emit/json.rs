use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::spec::{Atom, AtomSet, Case, Specification};

/// Value of the `schema` field.
pub const SCHEMA: &str = "snf-v1";

/// A document that does not follow the schema; `pointer` locates the offending value.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{pointer}: {message}")]
pub struct SchemaError {
    pub pointer: String,
    pub message: String,
}

fn fail<T>(pointer: &str, message: impl Into<String>) -> Result<T, SchemaError> {
    Err(SchemaError { pointer: if pointer.is_empty() { "/".into() } else { pointer.into() }, message: message.into() })
}

fn node(spec: &Specification) -> Value {
    let texts = |s: &AtomSet| Value::from(s.texts());
    match spec {
        Specification::Disjunction(alts) => {
            json!({"kind": "disjunction", "alternatives": alts.iter().map(node).collect::<Vec<_>>()})
        }
        Specification::Leaf(c) => json!({"kind": "case", "pre": texts(&c.pre), "rest": texts(&c.rest)}),
        Specification::Distrib { pre, body } => json!({"kind": "distrib", "pre": texts(pre), "body": node(body)}),
    }
}

/// The document as a JSON value: `{"schema": "snf-v1", "spec": …}`.
pub fn emit_json_value(spec: &Specification) -> Value {
    json!({"schema": SCHEMA, "spec": node(spec)})
}

pub fn emit_json(spec: &Specification) -> String {
    let mut text = serde_json::to_string_pretty(&emit_json_value(spec)).expect("values serialize");
    text.push('\n');
    text
}

pub fn parse_json(text: &str) -> Result<Specification, SchemaError> {
    let v: Value = serde_json::from_str(text).or_else(|e| fail("", format!("invalid JSON: {e}")))?;
    parse_json_value(&v)
}

/// Reads a document. Top-level `method` and `assignable` fields are allowed and ignored.
pub fn parse_json_value(v: &Value) -> Result<Specification, SchemaError> {
    let obj = object(v, "")?;
    for key in obj.keys() {
        if !matches!(key.as_str(), "schema" | "spec" | "method" | "assignable") {
            return fail(&format!("/{key}"), "unknown field");
        }
    }
    match obj.get("schema") {
        Some(Value::String(s)) if s == SCHEMA => {}
        Some(_) => return fail("/schema", format!("expected \"{SCHEMA}\"")),
        None => return fail("", "missing field `schema`"),
    }
    let spec = obj.get("spec").map_or_else(|| fail("", "missing field `spec`"), Ok)?;
    parse_node(spec, "/spec")
}

fn object<'a>(v: &'a Value, at: &str) -> Result<&'a Map<String, Value>, SchemaError> {
    v.as_object().map_or_else(|| fail(at, "expected an object"), Ok)
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, at: &str) -> Result<&'a Value, SchemaError> {
    obj.get(key).map_or_else(|| fail(at, format!("missing field `{key}`")), Ok)
}

fn atoms(v: &Value, at: &str) -> Result<AtomSet, SchemaError> {
    let Some(items) = v.as_array() else { return fail(at, "expected an array of atoms") };
    let mut out = AtomSet::new();
    for (i, item) in items.iter().enumerate() {
        let here = format!("{at}/{i}");
        let Some(text) = item.as_str() else { return fail(&here, "expected a string") };
        match Atom::parse(text) {
            Ok(a) => {
                out.insert(a);
            }
            Err(e) => return fail(&here, format!("bad atom: {}", e.message)),
        }
    }
    Ok(out)
}

fn parse_node(v: &Value, at: &str) -> Result<Specification, SchemaError> {
    let obj = object(v, at)?;
    let kind = field(obj, "kind", at)?;
    let allowed: &[&str] = match kind.as_str() {
        Some("disjunction") => &["kind", "alternatives"],
        Some("case") => &["kind", "pre", "rest"],
        Some("distrib") => &["kind", "pre", "body"],
        _ => return fail(&format!("{at}/kind"), "expected \"disjunction\", \"case\" or \"distrib\""),
    };
    if let Some(key) = obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        return fail(&format!("{at}/{key}"), "unknown field");
    }
    match kind.as_str() {
        Some("disjunction") => {
            let here = format!("{at}/alternatives");
            let Some(items) = field(obj, "alternatives", at)?.as_array() else {
                return fail(&here, "expected an array");
            };
            let alts = items
                .iter()
                .enumerate()
                .map(|(i, x)| parse_node(x, &format!("{here}/{i}")))
                .collect::<Result<_, _>>()?;
            Ok(Specification::Disjunction(alts))
        }
        Some("case") => {
            let pre = atoms(field(obj, "pre", at)?, &format!("{at}/pre"))?;
            let rest = atoms(field(obj, "rest", at)?, &format!("{at}/rest"))?;
            Ok(Specification::Leaf(Case::new(pre, rest)))
        }
        _ => {
            let pre = atoms(field(obj, "pre", at)?, &format!("{at}/pre"))?;
            let body = parse_node(field(obj, "body", at)?, &format!("{at}/body"))?;
            Ok(Specification::distrib(pre, body))
        }
    }
}
