use serde::Serialize;

use super::{emit_contract, group_depth};
use crate::refine::Frame;
use crate::spec::Specification;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Metrics {
    /// Lines of the rendered contract.
    pub length: usize,
    /// One more than the deepest `{| … |}` nesting; a flat specification has nesting 1.
    pub nesting: usize,
    pub cases: usize,
}

pub fn metrics(spec: &Specification, frame: &Frame) -> Metrics {
    let top = match spec {
        Specification::Disjunction(alts) => alts.iter().map(group_depth).max().unwrap_or(0),
        other => group_depth(other),
    };
    Metrics { length: emit_contract(spec, frame).lines().count(), nesting: 1 + top, cases: spec.leaf_count() }
}

/// Raw and final measurements of one method.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MethodMetrics {
    pub method: String,
    pub before: Metrics,
    pub after: Metrics,
}

pub const CSV_HEADER: &str =
    "method,length_before,length_after,nesting_before,nesting_after,length_reduction_pct,nesting_reduction_pct";

fn reduction(before: f64, after: f64) -> String {
    if before == 0.0 {
        "0.0".to_string()
    } else {
        format!("{:.1}", 100.0 * (1.0 - after / before))
    }
}

/// One row per method and a final `TOTAL` row whose percentages compare the means.
pub fn metrics_csv(rows: &[MethodMetrics]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.method,
            r.before.length,
            r.after.length,
            r.before.nesting,
            r.after.nesting,
            reduction(r.before.length as f64, r.after.length as f64),
            reduction(r.before.nesting as f64, r.after.nesting as f64),
        ));
    }
    let n = rows.len().max(1) as f64;
    let mean = |f: &dyn Fn(&MethodMetrics) -> usize| rows.iter().map(f).sum::<usize>() as f64 / n;
    let (lb, la) = (mean(&|r| r.before.length), mean(&|r| r.after.length));
    let (nb, na) = (mean(&|r| r.before.nesting), mean(&|r| r.after.nesting));
    out.push_str(&format!("TOTAL,{lb:.1},{la:.1},{nb:.1},{na:.1},{},{}\n", reduction(lb, la), reduction(nb, na)));
    out
}
