//! Bounded-domain checking: run a method on every small input and test a specification against
//! the observed behaviour.
//!
//! Inputs range over parameters and globals, integers in `[-bound, bound]` and both Booleans.
//! Runs that divide by zero or exhaust their loop fuel are skipped. A case whose precondition
//! gets stuck is treated as not applying; a rest atom that gets stuck is a violation.

mod eval;
mod interp;
mod prop;

use std::fmt;

use thiserror::Error;

pub use eval::{eval, eval_atom, EvalError, Position, State, Valuation, Value};
pub use interp::{interpret, interpret_passive, InterpError, Outcome, DEFAULT_FUEL};
pub use prop::{prop_equiv, prop_equiv_with_limit, PropError, DEFAULT_ATOM_LIMIT};

use crate::lang::{Ty, TypeEnv, TypedMethod, VarKind};
use crate::spec::{AtomSet, Case, Specification};

/// Largest number of input states one check will enumerate.
pub const MAX_STATES: u64 = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Domain {
    pub bound: i64,
}

impl Default for Domain {
    fn default() -> Self {
        Domain { bound: 2 }
    }
}

impl Domain {
    pub fn new(bound: i64) -> Domain {
        Domain { bound }
    }

    /// Every assignment of domain values to `vars`, in lexicographic order.
    pub fn states(&self, vars: &[(String, Ty)]) -> Result<Vec<State>, OracleError> {
        let width = |t: Ty| match t {
            Ty::Int => 2 * self.bound as u64 + 1,
            Ty::Bool => 2,
        };
        let total = vars.iter().try_fold(1u64, |acc, (_, t)| acc.checked_mul(width(*t)));
        match total {
            Some(n) if n <= MAX_STATES => {}
            _ => return Err(OracleError::DomainTooLarge { vars: vars.len(), bound: self.bound }),
        }
        let mut out = vec![State::new()];
        for (name, ty) in vars {
            let values: Vec<Value> = match ty {
                Ty::Int => (-self.bound..=self.bound).map(Value::Int).collect(),
                Ty::Bool => vec![Value::Bool(false), Value::Bool(true)],
            };
            out = out
                .into_iter()
                .flat_map(|s| {
                    values.iter().map(move |v| {
                        let mut s = s.clone();
                        s.insert(name.clone(), *v);
                        s
                    })
                })
                .collect();
        }
        Ok(out)
    }
}

/// A run that a specification case does not describe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub input: State,
    pub outcome: Outcome,
    /// The violated case with distributed preconditions pushed down.
    pub case: Case,
    /// The rest atom that failed.
    pub atom: String,
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let input: Vec<String> = self.input.iter().map(|(k, v)| format!("{k} = {v}")).collect();
        write!(f, "input {{{}}}", input.join(", "))?;
        if let Some(r) = self.outcome.result {
            write!(f, " returns {r}")?;
        }
        write!(f, " but case {} requires `{}`", self.case, self.atom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("{vars} variables over [-{bound}, {bound}] give too many input states")]
    DomainTooLarge { vars: usize, bound: i64 },
    #[error("specification violated: {0}")]
    Violation(Box<Counterexample>),
}

/// Summary of a successful check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Report {
    /// Inputs on which the method ran to completion.
    pub checked: usize,
    /// Inputs skipped because the run got stuck or ran out of fuel.
    pub skipped: usize,
    /// Completed runs that no case applied to.
    pub uncovered: usize,
}

/// Parameters and globals of a method with their types.
pub fn inputs(method: &TypedMethod) -> Vec<(String, Ty)> {
    method.env.names().filter(|(_, _, k)| *k != VarKind::Local).map(|(n, t, _)| (n.to_string(), t)).collect()
}

/// Checks that every bounded run of `method` satisfies every case of `spec` that applies to it.
pub fn satisfies(method: &TypedMethod, spec: &Specification, domain: Domain) -> Result<Report, OracleError> {
    let cases = spec.flatten().cases().expect("flattened specifications are in normal form");
    let mut report = Report::default();
    for input in domain.states(&inputs(method))? {
        let outcome = match interpret(method, &input, DEFAULT_FUEL) {
            Ok(o) => o,
            Err(_) => {
                report.skipped += 1;
                continue;
            }
        };
        report.checked += 1;
        let pre = Valuation::at_pre(&input);
        let post = Valuation { pre: input.clone(), post: outcome.post.clone(), result: outcome.result };
        let mut covered = false;
        for case in &cases {
            if !holds_all(&case.pre, &pre, Position::Pre) {
                continue;
            }
            covered = true;
            for a in &case.rest {
                if eval_atom(a.expr(), &post, Position::Rest) != Ok(true) {
                    return Err(OracleError::Violation(Box::new(Counterexample {
                        input,
                        outcome,
                        case: case.clone(),
                        atom: a.text().to_string(),
                    })));
                }
            }
        }
        if !covered {
            report.uncovered += 1;
        }
    }
    Ok(report)
}

fn holds_all(atoms: &AtomSet, v: &Valuation, pos: Position) -> bool {
    atoms.iter().all(|a| eval_atom(a.expr(), v, pos) == Ok(true))
}

/// Whether some bounded input makes every atom true. Atoms naming variables outside `env`
/// cannot be evaluated, so they count as satisfiable.
pub fn satisfiable(atoms: &AtomSet, env: &TypeEnv, domain: Domain) -> bool {
    let mut names: Vec<(String, Ty)> = Vec::new();
    for a in atoms {
        for n in a.expr().vars() {
            match env.lookup(n) {
                Some(t) if env.kind(n) != Some(VarKind::Local) => {
                    if !names.iter().any(|(m, _)| m == n) {
                        names.push((n.to_string(), t));
                    }
                }
                _ => return true,
            }
        }
    }
    let Ok(states) = domain.states(&names) else {
        return true;
    };
    states.iter().any(|s| holds_all(atoms, &Valuation::at_pre(s), Position::Pre))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse, typecheck};

    fn method(src: &str) -> TypedMethod {
        typecheck(&parse(src).unwrap()).unwrap().methods.remove(0)
    }

    const CMP: &str =
        "int cmp(int a, int b){ int c; c = a; if (c < b) { return -1; } else { if (c > b) { return 1; } } return 0; }";

    fn cmp_spec(zero: &str) -> Specification {
        Specification::from_cases([
            Case::of(&["a < b"], &["\\result == -1"]),
            Case::of(&["!(a < b)", "a > b"], &["\\result == 1"]),
            Case::of(&["!(a < b)", "!(a > b)"], &[zero]),
        ])
    }

    #[test]
    fn cmp_contract_holds() {
        let r = satisfies(&method(CMP), &cmp_spec("\\result == 0"), Domain::default()).unwrap();
        assert_eq!(r, Report { checked: 25, skipped: 0, uncovered: 0 });
    }

    #[test]
    fn wrong_contract_yields_counterexample() {
        let err = satisfies(&method(CMP), &cmp_spec("\\result == 1"), Domain::default()).unwrap_err();
        let OracleError::Violation(cex) = err else { panic!("expected a violation") };
        assert_eq!(cex.input["a"], cex.input["b"]);
        assert_eq!(cex.atom, "\\result == 1");
    }

    #[test]
    fn old_refers_to_the_input() {
        let m = method("global int g; void inc() { g = g + 1; }");
        let good = Specification::from_cases([Case::of(&[], &["g == old(g) + 1"])]);
        let bad = Specification::from_cases([Case::of(&[], &["g == old(g)"])]);
        assert!(satisfies(&m, &good, Domain::default()).is_ok());
        assert!(satisfies(&m, &bad, Domain::default()).is_err());
    }

    #[test]
    fn stuck_inputs_are_skipped() {
        let m = method("int f(int a) { return 6 / a; }");
        let s = Specification::from_cases([Case::of(&["a == 2"], &["\\result == 3"])]);
        let r = satisfies(&m, &s, Domain::default()).unwrap();
        assert_eq!((r.checked, r.skipped, r.uncovered), (4, 1, 3));
    }

    #[test]
    fn bool_inputs_enumerate_both_values() {
        let d = Domain::new(1);
        let states = d.states(&[("p".into(), Ty::Bool), ("x".into(), Ty::Int)]).unwrap();
        assert_eq!(states.len(), 6);
        assert!(d.states(&vec![("x".into(), Ty::Int); 40]).is_err());
    }

    #[test]
    fn satisfiability_over_the_domain() {
        let m = method("int f(int a, int b) { return a; }");
        assert!(satisfiable(&AtomSet::of(&["a < b", "b < 0"]), &m.env, Domain::default()));
        assert!(!satisfiable(&AtomSet::of(&["a < b", "b < a"]), &m.env, Domain::default()));
        assert!(satisfiable(&AtomSet::of(&["z == 1"]), &m.env, Domain::default()));
    }
}
