//! Rendering specifications: contracts, single postconditions, JSON, and size metrics.
//!
//! Contracts use one clause per line, so line counts are a stable size measure:
//!
//! ```text
//! contract  = [ "/*@ pure */" ] behavior { "also" behavior }
//! behavior  = "normal_behavior" [ "assignable" name { "," name } ";" ] clauses
//! clauses   = { "requires" atom ";" } ( { "ensures" atom ";" } | group )
//! group     = "{|" clauses { "also" clauses } "|}"
//! ```
//!
//! Top-level alternatives become behaviors; a distributed precondition becomes `requires` lines
//! followed by a group of its alternatives.

mod json;
mod lint;
mod metrics;
mod tr;

pub use json::{emit_json, emit_json_value, parse_json, parse_json_value, SchemaError, SCHEMA};
pub use lint::{lint, LintIssue};
pub use metrics::{metrics, metrics_csv, MethodMetrics, Metrics, CSV_HEADER};
pub use tr::{emit_tr, tr};

use crate::refine::Frame;
use crate::spec::Specification;

const STEP: usize = 2;

/// Renders a contract. `frame` decides between the `pure` marker and `assignable` clauses.
pub fn emit_contract(spec: &Specification, frame: &Frame) -> String {
    let mut out = Vec::new();
    if frame.is_pure() {
        out.push("/*@ pure */".to_string());
    }
    let alternatives: Vec<&Specification> = match spec {
        Specification::Disjunction(alts) if !alts.is_empty() => alts.iter().collect(),
        Specification::Disjunction(_) => Vec::new(),
        other => vec![other],
    };
    if alternatives.is_empty() {
        behavior_header(frame, &mut out);
    }
    for (i, alt) in alternatives.into_iter().enumerate() {
        if i > 0 {
            out.push("also".to_string());
        }
        behavior_header(frame, &mut out);
        clauses(alt, STEP, &mut out);
    }
    let mut text = out.join("\n");
    text.push('\n');
    text
}

fn behavior_header(frame: &Frame, out: &mut Vec<String>) {
    out.push("normal_behavior".to_string());
    if !frame.is_pure() {
        out.push(format!("{}assignable {};", pad(STEP), frame.assignable.join(", ")));
    }
}

fn pad(n: usize) -> String {
    " ".repeat(n)
}

fn clauses(spec: &Specification, indent: usize, out: &mut Vec<String>) {
    match spec {
        Specification::Leaf(c) => {
            out.extend(c.pre.iter().map(|a| format!("{}requires {};", pad(indent), a)));
            out.extend(c.rest.iter().map(|a| format!("{}ensures {};", pad(indent), a)));
        }
        Specification::Distrib { pre, body } => {
            out.extend(pre.iter().map(|a| format!("{}requires {};", pad(indent), a)));
            clauses(body, indent, out);
        }
        Specification::Disjunction(alts) => match alts.as_slice() {
            [] => {}
            [only] => clauses(only, indent, out),
            _ => {
                out.push(format!("{}{{|", pad(indent)));
                for (i, a) in alts.iter().enumerate() {
                    if i > 0 {
                        out.push(format!("{}also", pad(indent)));
                    }
                    clauses(a, indent + STEP, out);
                }
                out.push(format!("{}|}}", pad(indent)));
            }
        },
    }
}

/// Depth of `{| … |}` groups below `spec` in the rendered contract.
pub(crate) fn group_depth(spec: &Specification) -> usize {
    match spec {
        Specification::Leaf(_) => 0,
        Specification::Distrib { body, .. } => group_depth(body),
        Specification::Disjunction(alts) => match alts.as_slice() {
            [] => 0,
            [only] => group_depth(only),
            _ => 1 + alts.iter().map(group_depth).max().unwrap_or(0),
        },
    }
}
