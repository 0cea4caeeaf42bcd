//! Strongest-postcondition symbolic execution over passive form.
//!
//! Every execution path becomes one case. Branch conditions and assignment equations collect in
//! the case's precondition; `\result` and final global values land in its rest. The raw output
//! mirrors the branch structure as nested disjunctions; [`Specification::cases`] flattens it.
//!
//! Loops use their declared invariant: variables assigned in the body get fresh versions,
//! and the path continues assuming the invariant and the negated condition. Facts about those
//! versions are not facts about the pre-state, so they go to the rest of the case, and later
//! branches on them become guards `G ==> atom` on the rest instead of precondition atoms.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use thiserror::Error;

use crate::lang::{BinOp, Expr};
use crate::passive::{cfg_size, split_version, ExitBinding, PStmt, PassiveMethod};
use crate::spec::{Atom, AtomSet, Case, Specification};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpError {
    #[error("refused: control-flow graph has {size} nodes, limit is {limit}")]
    Refused { size: usize, limit: usize },
    #[error("timed out")]
    Timeout,
}

/// Wall-clock budget shared by the stages of one method's pipeline.
#[derive(Debug, Clone, Copy, Default)]
pub struct Budget {
    deadline: Option<Instant>,
}

impl Budget {
    pub fn unlimited() -> Budget {
        Budget { deadline: None }
    }

    pub fn until(deadline: Instant) -> Budget {
        Budget { deadline: Some(deadline) }
    }

    pub fn check(&self) -> Result<(), SpError> {
        match self.deadline {
            Some(d) if Instant::now() >= d => Err(SpError::Timeout),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SpOptions {
    pub max_cfg: usize,
    pub budget: Budget,
}

impl Default for SpOptions {
    fn default() -> Self {
        SpOptions { max_cfg: 500, budget: Budget::unlimited() }
    }
}

/// What externalization needs to know about one path.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PathTrace {
    /// Defining right-hand side of each version assigned on the path.
    pub defs: BTreeMap<String, Expr>,
    /// Versions introduced by loops; they have no definition.
    pub havoc: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InferredSpec {
    /// Raw specification over passive names, nested along the branch structure.
    pub spec: Specification,
    /// One trace per leaf, in leaf order.
    pub traces: Vec<PathTrace>,
    pub warnings: Vec<String>,
}

/// Runs the transformer over a whole method with the default precondition `true`.
pub fn infer(method: &PassiveMethod, opts: &SpOptions) -> Result<InferredSpec, SpError> {
    let size = cfg_size(method);
    if size > opts.max_cfg {
        return Err(SpError::Refused { size, limit: opts.max_cfg });
    }
    let engine = Engine::new(method, opts.budget);
    let mut start = Path::default();
    start.pre.insert(Atom::new(Expr::Bool(true)));
    let tree = engine.run(start, vec![&method.body])?;
    let mut traces = Vec::new();
    let spec = match tree.into_spec(&mut traces) {
        leaf @ Specification::Leaf(_) => Specification::Disjunction(vec![leaf]),
        other => other,
    };
    Ok(InferredSpec { spec, traces, warnings: engine.warnings(&method.body) })
}

/// Applies the transformer to a statement list, starting from each case of `pre`.
///
/// Paths that fall off the end of `stmts` stay open and are returned alongside finished ones.
pub fn sp(stmts: &[PStmt], pre: &Specification, method: &PassiveMethod) -> Result<Specification, SpError> {
    let engine = Engine::new(method, Budget::unlimited());
    let mut alts = Vec::new();
    let mut traces = Vec::new();
    let cases = pre.flatten().cases().expect("flattened");
    for c in cases {
        let path = Path { pre: c.pre, rest: c.rest, ..Path::default() };
        alts.push(engine.run(path, vec![stmts])?.into_spec(&mut traces));
    }
    Ok(match alts.len() {
        1 => alts.pop().expect("one"),
        _ => Specification::Disjunction(alts),
    })
}

#[derive(Debug, Clone, Default)]
struct Path {
    pre: AtomSet,
    rest: AtomSet,
    guards: Vec<Expr>,
    tainted: BTreeSet<String>,
    trace: PathTrace,
}

impl Path {
    fn is_tainted(&self, e: &Expr) -> bool {
        let mut hit = false;
        e.for_each_var(&mut |v| hit |= self.tainted.contains(v));
        hit
    }

    fn guarded(&self, atom: Expr) -> Expr {
        if self.guards.is_empty() {
            atom
        } else {
            Expr::bin(BinOp::Implies, Expr::conjunction(self.guards.iter().cloned()), atom)
        }
    }

    /// Adds a fact: to the precondition when it only concerns the pre-state, else to the rest.
    fn assume(&mut self, fact: Expr) {
        if self.is_tainted(&fact) {
            let g = self.guarded(fact);
            self.rest.insert(Atom::new(g));
        } else {
            self.pre.insert(Atom::new(fact));
        }
    }

    fn ensure(&mut self, fact: Expr) {
        let g = self.guarded(fact);
        self.rest.insert(Atom::new(g));
    }
}

enum Tree {
    Leaf(Path),
    Branch(Vec<Tree>),
}

impl Tree {
    fn into_spec(self, traces: &mut Vec<PathTrace>) -> Specification {
        match self {
            Tree::Leaf(p) => {
                traces.push(p.trace);
                Specification::Leaf(Case::new(p.pre, p.rest))
            }
            Tree::Branch(kids) => Specification::Disjunction(kids.into_iter().map(|k| k.into_spec(traces)).collect()),
        }
    }
}

struct Engine<'a> {
    exits: &'a [ExitBinding],
    written: Vec<String>,
    budget: Budget,
}

impl<'a> Engine<'a> {
    fn new(method: &'a PassiveMethod, budget: Budget) -> Self {
        Engine { exits: &method.exits, written: method.original.globals_written.iter().cloned().collect(), budget }
    }

    fn run(&self, mut path: Path, mut stack: Vec<&[PStmt]>) -> Result<Tree, SpError> {
        loop {
            self.budget.check()?;
            let Some(top) = stack.last_mut() else {
                return Ok(Tree::Leaf(path));
            };
            let Some((s, tail)) = top.split_first() else {
                stack.pop();
                continue;
            };
            *top = tail;
            match s {
                PStmt::Skip => {}
                PStmt::Assign { target, rhs } => {
                    if path.is_tainted(rhs) {
                        path.tainted.insert(target.clone());
                    }
                    path.trace.defs.insert(target.clone(), rhs.clone());
                    path.assume(Expr::eq(Expr::var(target), rhs.clone()));
                }
                PStmt::If { cond, then_branch, else_branch } => {
                    let mut then_path = path.clone();
                    let mut else_path = path;
                    if then_path.is_tainted(cond) {
                        then_path.guards.push(cond.clone());
                        else_path.guards.push(cond.clone().negate());
                    } else {
                        then_path.pre.insert(Atom::new(cond.clone()));
                        else_path.pre.insert(Atom::new(cond.clone().negate()));
                    }
                    let mut then_stack = stack.clone();
                    then_stack.push(then_branch);
                    let mut else_stack = stack;
                    else_stack.push(else_branch);
                    let t = self.run(then_path, then_stack)?;
                    let e = self.run(else_path, else_stack)?;
                    return Ok(Tree::Branch(vec![t, e]));
                }
                PStmt::While { cond, invariant, havoc, .. } => {
                    for h in havoc {
                        path.tainted.insert(h.version.clone());
                        path.trace.havoc.insert(h.version.clone());
                    }
                    path.assume(invariant.clone());
                    path.assume(cond.clone().negate());
                }
                PStmt::Return { value, exit } => {
                    if let Some(v) = value {
                        path.ensure(Expr::eq(Expr::Result, v.clone()));
                    }
                    let binding = &self.exits[*exit];
                    for g in &self.written {
                        path.ensure(Expr::eq(Expr::var(g), Expr::var(&binding.globals[g])));
                    }
                    return Ok(Tree::Leaf(path));
                }
            }
        }
    }

    fn warnings(&self, body: &[PStmt]) -> Vec<String> {
        let mut out = Vec::new();
        collect_loop_warnings(body, &mut out);
        out
    }
}

fn collect_loop_warnings(stmts: &[PStmt], out: &mut Vec<String>) {
    for s in stmts {
        match s {
            PStmt::If { then_branch, else_branch, .. } => {
                collect_loop_warnings(then_branch, out);
                collect_loop_warnings(else_branch, out);
            }
            PStmt::While { invariant, body, .. } => {
                let invariant = invariant.map_vars(&mut |n| Expr::var(split_version(n).0));
                out.push(format!(
                    "loop invariant `{invariant}` is assumed; its initiation and preservation are not checked"
                ));
                collect_loop_warnings(body, out);
            }
            _ => {}
        }
    }
}
