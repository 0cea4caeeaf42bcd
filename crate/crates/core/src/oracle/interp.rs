//! Big-step interpreters for source methods and their passive form.

use std::collections::BTreeMap;

use thiserror::Error;

use super::eval::{boolean, eval, EvalError, Position, State, Valuation, Value};
use crate::lang::{Expr, Stmt, TypedMethod, VarKind};
use crate::passive::{PStmt, PassiveMethod};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InterpError {
    /// Division by zero or a similar partial operation; such inputs are excluded from checks.
    #[error("stuck: {0}")]
    Stuck(#[from] EvalError),
    #[error("loop fuel exhausted")]
    OutOfFuel,
}

/// Final state of one run: globals after the call, parameters as passed, and the result.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub post: State,
    pub result: Option<Value>,
}

/// Default number of loop iterations one run may perform.
pub const DEFAULT_FUEL: u64 = 10_000;

/// Runs a method from `pre`, which must bind every parameter and global.
pub fn interpret(method: &TypedMethod, pre: &State, fuel: u64) -> Result<Outcome, InterpError> {
    let mut run = Run { vars: pre.clone(), fuel };
    let result = match run.block(method.decl.body_stmts())? {
        Flow::Return(v) => v,
        Flow::Normal => None,
    };
    Ok(Outcome { post: project(method, pre, &run.vars), result })
}

/// Parameters keep their passed values in the post-state; globals take their final values.
fn project(method: &TypedMethod, pre: &State, vars: &State) -> State {
    method
        .env
        .names()
        .filter_map(|(n, _, k)| match k {
            VarKind::Global => vars.get(n).map(|v| (n.to_string(), *v)),
            VarKind::Param => pre.get(n).map(|v| (n.to_string(), *v)),
            VarKind::Local => None,
        })
        .collect()
}

enum Flow {
    Normal,
    Return(Option<Value>),
}

struct Run {
    vars: State,
    fuel: u64,
}

impl Run {
    fn value(&self, e: &Expr) -> Result<Value, EvalError> {
        // program expressions never contain `old`, so one state suffices
        eval(e, &Valuation { pre: State::new(), post: self.vars.clone(), result: None }, Position::Rest)
    }

    fn block(&mut self, stmts: &[Stmt]) -> Result<Flow, InterpError> {
        for s in stmts {
            if let Flow::Return(v) = self.stmt(s)? {
                return Ok(Flow::Return(v));
            }
        }
        Ok(Flow::Normal)
    }

    fn stmt(&mut self, s: &Stmt) -> Result<Flow, InterpError> {
        match s {
            Stmt::Skip { .. } => {}
            Stmt::Local { name, init, .. } => {
                if let Some(e) = init {
                    let v = self.value(e)?;
                    self.vars.insert(name.clone(), v);
                }
            }
            Stmt::Assign { target, rhs, .. } => {
                let v = self.value(rhs)?;
                self.vars.insert(target.clone(), v);
            }
            Stmt::Block { stmts, .. } => return self.block(stmts),
            Stmt::If { cond, then_branch, else_branch, .. } => {
                if boolean(self.value(cond)?)? {
                    return self.stmt(then_branch);
                } else if let Some(e) = else_branch {
                    return self.stmt(e);
                }
            }
            Stmt::While { cond, body, .. } => {
                while boolean(self.value(cond)?)? {
                    if self.fuel == 0 {
                        return Err(InterpError::OutOfFuel);
                    }
                    self.fuel -= 1;
                    if let Flow::Return(v) = self.stmt(body)? {
                        return Ok(Flow::Return(v));
                    }
                }
            }
            Stmt::Return { value, .. } => {
                let v = match value {
                    Some(e) => Some(self.value(e)?),
                    None => None,
                };
                return Ok(Flow::Return(v));
            }
        }
        Ok(Flow::Normal)
    }
}

/// Runs the passive form. Version `x$0` starts with the value of `x` in `pre`.
pub fn interpret_passive(method: &PassiveMethod, pre: &State, fuel: u64) -> Result<Outcome, InterpError> {
    let mut vars: State = pre.iter().map(|(k, v)| (format!("{k}$0"), *v)).collect();
    let mut fuel = fuel;
    let exit = passive_block(&method.body, &mut vars, &mut fuel)?;
    let Some((result, exit)) = exit else { unreachable!("passive bodies end in a return on every path") };
    let mut post: State = BTreeMap::new();
    for (n, _, k) in method.original.env.names() {
        match k {
            VarKind::Global => {
                let version = &method.exits[exit].globals[n];
                post.insert(n.to_string(), vars[version]);
            }
            VarKind::Param => {
                post.insert(n.to_string(), pre[n]);
            }
            VarKind::Local => {}
        }
    }
    Ok(Outcome { post, result })
}

type Exit = Option<(Option<Value>, usize)>;

fn passive_value(e: &Expr, vars: &State) -> Result<Value, EvalError> {
    eval(e, &Valuation { pre: State::new(), post: vars.clone(), result: None }, Position::Rest)
}

fn passive_block(stmts: &[PStmt], vars: &mut State, fuel: &mut u64) -> Result<Exit, InterpError> {
    for s in stmts {
        match s {
            PStmt::Skip => {}
            PStmt::Assign { target, rhs } => {
                let v = passive_value(rhs, vars)?;
                vars.insert(target.clone(), v);
            }
            PStmt::If { cond, then_branch, else_branch } => {
                let taken = if boolean(passive_value(cond, vars)?)? { then_branch } else { else_branch };
                if let Some(exit) = passive_block(taken, vars, fuel)? {
                    return Ok(Some(exit));
                }
            }
            PStmt::While { cond, havoc, body, .. } => {
                for h in havoc {
                    if let Some(entry) = &h.entry {
                        let v = vars[entry];
                        vars.insert(h.version.clone(), v);
                    }
                }
                while boolean(passive_value(cond, vars)?)? {
                    if *fuel == 0 {
                        return Err(InterpError::OutOfFuel);
                    }
                    *fuel -= 1;
                    if let Some(exit) = passive_block(body, vars, fuel)? {
                        return Ok(Some(exit));
                    }
                    for h in havoc {
                        let v = vars[&h.back];
                        vars.insert(h.version.clone(), v);
                    }
                }
            }
            PStmt::Return { value, exit } => {
                let v = match value {
                    Some(e) => Some(passive_value(e, vars)?),
                    None => None,
                };
                return Ok(Some((v, *exit)));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse, typecheck};
    use crate::passive::passivize;

    fn method(src: &str) -> TypedMethod {
        typecheck(&parse(src).unwrap()).unwrap().methods.remove(0)
    }

    fn ints(pairs: &[(&str, i64)]) -> State {
        pairs.iter().map(|(n, v)| (n.to_string(), Value::Int(*v))).collect()
    }

    const CMP: &str =
        "int cmp(int a, int b){ int c; c = a; if (c < b) { return -1; } else { if (c > b) { return 1; } } return 0; }";

    #[test]
    fn cmp_results() {
        let m = method(CMP);
        assert_eq!(interpret(&m, &ints(&[("a", 1), ("b", 2)]), DEFAULT_FUEL).unwrap().result, Some(Value::Int(-1)));
        for x in -2..=2 {
            assert_eq!(interpret(&m, &ints(&[("a", x), ("b", x)]), DEFAULT_FUEL).unwrap().result, Some(Value::Int(0)));
        }
    }

    #[test]
    fn globals_update() {
        let m = method("global int g; void inc(int d) { g = g + d; }");
        let out = interpret(&m, &ints(&[("g", 1), ("d", 2)]), DEFAULT_FUEL).unwrap();
        assert_eq!(out.post, ints(&[("d", 2), ("g", 3)]));
    }

    #[test]
    fn division_by_zero_is_stuck() {
        let m = method("int f(int a) { return 1 / a; }");
        assert_eq!(interpret(&m, &ints(&[("a", 0)]), DEFAULT_FUEL), Err(InterpError::Stuck(EvalError::DivByZero)));
    }

    #[test]
    fn fuel_bounds_loops() {
        let m = method("void f(int a) { while (true) invariant (true) { a = a + 1; } }");
        assert_eq!(interpret(&m, &ints(&[("a", 0)]), 50), Err(InterpError::OutOfFuel));
    }

    #[test]
    fn passive_agrees_with_source_on_loops() {
        let src = "global int g; int f(int n) { int i = 0; int s = 0; while (i < n) invariant (true) { if (i > 1) { s = s + i; } else { g = g + 1; } i = i + 1; } return s; }";
        let m = method(src);
        let pm = passivize(&m);
        for n in -2..=4 {
            for g in -2..=2 {
                let pre = ints(&[("n", n), ("g", g)]);
                assert_eq!(interpret(&m, &pre, DEFAULT_FUEL), interpret_passive(&pm, &pre, DEFAULT_FUEL));
            }
        }
    }
}
