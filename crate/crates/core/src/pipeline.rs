//! One method from source to final specification, with a status for every outcome.

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::emit::{metrics, MethodMetrics, Metrics};
use crate::far::{far_within, FarError, Lexical};
use crate::lang::TypedMethod;
use crate::oracle::Domain;
use crate::passive::{passivize, PassiveMethod};
use crate::refine::{dedupe_cases, infer_frame, refine, Frame, RefineOptions};
use crate::sp::{infer, Budget, SpError, SpOptions};
use crate::spec::Specification;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Options {
    pub max_cfg: usize,
    pub timeout: Duration,
    pub simplify: bool,
    pub far: bool,
    pub deep_prune: Option<Domain>,
}

impl Default for Options {
    fn default() -> Self {
        Options { max_cfg: 500, timeout: Duration::from_millis(300_000), simplify: true, far: true, deep_prune: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    Inferred,
    Timeout,
    Refused,
    Error,
}

/// Size of the specification after one pass.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PassMetrics {
    pub pass: &'static str,
    #[serde(flatten)]
    pub metrics: Metrics,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Timings {
    pub passive_ms: f64,
    pub sp_ms: f64,
    pub refine_ms: f64,
    pub far_ms: f64,
}

#[derive(Debug, Clone)]
pub struct MethodResult {
    pub method: String,
    pub status: Status,
    pub message: Option<String>,
    pub frame: Frame,
    pub passive: PassiveMethod,
    /// Transformer output before any cleanup; absent unless inference finished.
    pub raw: Option<Specification>,
    /// Final specification; present only for [`Status::Inferred`].
    pub spec: Option<Specification>,
    pub warnings: Vec<String>,
    pub timings: Timings,
    pub passes: Vec<PassMetrics>,
}

impl MethodResult {
    /// Raw and final sizes, when inference succeeded.
    pub fn metrics(&self) -> Option<MethodMetrics> {
        let (raw, spec) = (self.raw.as_ref()?, self.spec.as_ref()?);
        Some(MethodMetrics {
            method: self.method.clone(),
            before: metrics(raw, &self.frame),
            after: metrics(spec, &self.frame),
        })
    }
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// Runs passivization, inference, refinement and compaction under one time budget.
/// Partial results of a run that times out are discarded.
pub fn run_method(method: &TypedMethod, opts: &Options) -> MethodResult {
    let start = Instant::now();
    let budget = Budget::until(start + opts.timeout);
    let frame = infer_frame(method);
    let mut timings = Timings::default();
    let passive = passivize(method);
    timings.passive_ms = ms(start);
    let mut out = MethodResult {
        method: method.name().to_string(),
        status: Status::Error,
        message: None,
        frame,
        passive,
        raw: None,
        spec: None,
        warnings: Vec::new(),
        timings: Timings::default(),
        passes: Vec::new(),
    };
    let fail = |out: &mut MethodResult, status: Status, message: String| {
        out.status = status;
        out.message = Some(message);
        out.raw = None;
        out.passes.clear();
    };

    let t = Instant::now();
    let inferred = match infer(&out.passive, &SpOptions { max_cfg: opts.max_cfg, budget }) {
        Ok(i) => i,
        Err(e) => {
            let status = match e {
                SpError::Refused { .. } => Status::Refused,
                SpError::Timeout => Status::Timeout,
            };
            fail(&mut out, status, e.to_string());
            out.timings = timings;
            return out;
        }
    };
    timings.sp_ms = ms(t);
    out.warnings = inferred.warnings.clone();
    out.passes.push(PassMetrics { pass: "sp", metrics: metrics(&inferred.spec, &out.frame) });
    out.raw = Some(inferred.spec.clone());

    let t = Instant::now();
    let refined =
        refine(&inferred, &out.passive, RefineOptions { simplify: opts.simplify, deep_prune: opts.deep_prune });
    timings.refine_ms = ms(t);
    let refined = match refined {
        Ok(r) => r,
        Err(e) => {
            fail(&mut out, Status::Error, e.to_string());
            out.timings = timings;
            return out;
        }
    };
    if refined.dropped > 0 {
        let noun = if refined.dropped == 1 { "atom" } else { "atoms" };
        out.warnings.push(format!("{} postcondition {noun} over loop-internal values dropped", refined.dropped));
    }
    out.passes.push(PassMetrics {
        pass: if opts.simplify { "refine" } else { "externalize" },
        metrics: metrics(&refined.spec, &out.frame),
    });
    let mut spec = refined.spec;

    if opts.far {
        let t = Instant::now();
        match far_within(&spec, &Lexical, budget) {
            Ok(s) => spec = if opts.simplify { dedupe_cases(&s) } else { s },
            Err(FarError::Budget(e)) => {
                fail(&mut out, Status::Timeout, e.to_string());
                out.timings = timings;
                return out;
            }
            Err(FarError::NotNormalForm(e)) => unreachable!("refined specifications are flat: {e}"),
        }
        timings.far_ms = ms(t);
        out.passes.push(PassMetrics { pass: "far", metrics: metrics(&spec, &out.frame) });
    }
    if budget.check().is_err() {
        fail(&mut out, Status::Timeout, SpError::Timeout.to_string());
        out.timings = timings;
        return out;
    }
    out.status = Status::Inferred;
    out.spec = Some(spec);
    out.timings = timings;
    out
}
