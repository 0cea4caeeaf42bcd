use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::lang::{BinOp, Expr, UnOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Int(i64),
    Bool(bool),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => n.fmt(f),
            Value::Bool(b) => b.fmt(f),
        }
    }
}

/// A program state: variable name to value.
pub type State = BTreeMap<String, Value>;

/// A pair of states plus the returned value, the context in which specification atoms are read.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Valuation {
    pub pre: State,
    pub post: State,
    pub result: Option<Value>,
}

impl Valuation {
    /// The valuation `(s, s)` used for preconditions.
    pub fn at_pre(s: &State) -> Valuation {
        Valuation { pre: s.clone(), post: s.clone(), result: None }
    }
}

/// Where an atom sits: preconditions read the pre-state, other atoms read the post-state except
/// under `old`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Position {
    Pre,
    Rest,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound name `{0}`")]
    Unbound(String),
    #[error("division by zero")]
    DivByZero,
    #[error("ill-typed operand")]
    Type,
}

pub fn eval(e: &Expr, v: &Valuation, pos: Position) -> Result<Value, EvalError> {
    let state = match pos {
        Position::Pre => &v.pre,
        Position::Rest => &v.post,
    };
    match e {
        Expr::Int(n) => Ok(Value::Int(*n)),
        Expr::Bool(b) => Ok(Value::Bool(*b)),
        Expr::Var(n) => state.get(n).copied().ok_or_else(|| EvalError::Unbound(n.clone())),
        Expr::Result => v.result.ok_or_else(|| EvalError::Unbound("\\result".into())),
        Expr::Old(inner) => eval(inner, v, Position::Pre),
        Expr::Unary(UnOp::Neg, inner) => Ok(Value::Int(int(eval(inner, v, pos)?)?.wrapping_neg())),
        Expr::Unary(UnOp::Not, inner) => Ok(Value::Bool(!boolean(eval(inner, v, pos)?)?)),
        Expr::Binary(op, l, r) => {
            // `&&`, `||` and `==>` short-circuit so a guarded division cannot get stuck
            match op {
                BinOp::And => {
                    return Ok(Value::Bool(boolean(eval(l, v, pos)?)? && boolean(eval(r, v, pos)?)?));
                }
                BinOp::Or => {
                    return Ok(Value::Bool(boolean(eval(l, v, pos)?)? || boolean(eval(r, v, pos)?)?));
                }
                BinOp::Implies => {
                    return Ok(Value::Bool(!boolean(eval(l, v, pos)?)? || boolean(eval(r, v, pos)?)?));
                }
                _ => {}
            }
            let a = eval(l, v, pos)?;
            let b = eval(r, v, pos)?;
            apply(*op, a, b)
        }
    }
}

pub(crate) fn apply(op: BinOp, a: Value, b: Value) -> Result<Value, EvalError> {
    use BinOp::*;
    Ok(match op {
        Add => Value::Int(int(a)?.wrapping_add(int(b)?)),
        Sub => Value::Int(int(a)?.wrapping_sub(int(b)?)),
        Mul => Value::Int(int(a)?.wrapping_mul(int(b)?)),
        Div => {
            let d = int(b)?;
            if d == 0 {
                return Err(EvalError::DivByZero);
            }
            Value::Int(int(a)?.wrapping_div(d))
        }
        Lt => Value::Bool(int(a)? < int(b)?),
        Le => Value::Bool(int(a)? <= int(b)?),
        Gt => Value::Bool(int(a)? > int(b)?),
        Ge => Value::Bool(int(a)? >= int(b)?),
        Eq => Value::Bool(a == b),
        Ne => Value::Bool(a != b),
        And => Value::Bool(boolean(a)? && boolean(b)?),
        Or => Value::Bool(boolean(a)? || boolean(b)?),
        Implies => Value::Bool(!boolean(a)? || boolean(b)?),
    })
}

pub(crate) fn int(v: Value) -> Result<i64, EvalError> {
    match v {
        Value::Int(n) => Ok(n),
        Value::Bool(_) => Err(EvalError::Type),
    }
}

pub(crate) fn boolean(v: Value) -> Result<bool, EvalError> {
    match v {
        Value::Bool(b) => Ok(b),
        Value::Int(_) => Err(EvalError::Type),
    }
}

/// Evaluates a Boolean atom.
pub fn eval_atom(e: &Expr, v: &Valuation, pos: Position) -> Result<bool, EvalError> {
    boolean(eval(e, v, pos)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_expr;

    fn state(pairs: &[(&str, i64)]) -> State {
        pairs.iter().map(|(n, v)| (n.to_string(), Value::Int(*v))).collect()
    }

    #[test]
    fn reads_pre_state_in_preconditions() {
        let v = Valuation::at_pre(&state(&[("a", 1), ("b", 2)]));
        assert_eq!(eval_atom(&parse_expr("a < b").unwrap(), &v, Position::Pre), Ok(true));
    }

    #[test]
    fn reads_result() {
        let v = Valuation { result: Some(Value::Int(-1)), ..Valuation::default() };
        assert_eq!(eval_atom(&parse_expr("\\result == -1").unwrap(), &v, Position::Rest), Ok(true));
    }

    #[test]
    fn old_reads_pre_state_in_rest() {
        let v = Valuation { pre: state(&[("g", 0)]), post: state(&[("g", 1)]), result: None };
        assert_eq!(eval_atom(&parse_expr("old(g) + 1 == g").unwrap(), &v, Position::Rest), Ok(true));
        assert_eq!(eval_atom(&parse_expr("g == 0").unwrap(), &v, Position::Pre), Ok(true));
    }

    #[test]
    fn errors() {
        let v = Valuation::at_pre(&state(&[("a", 1)]));
        assert_eq!(eval(&parse_expr("a / 0").unwrap(), &v, Position::Pre), Err(EvalError::DivByZero));
        assert_eq!(eval(&parse_expr("z").unwrap(), &v, Position::Pre), Err(EvalError::Unbound("z".into())));
        assert_eq!(
            eval_atom(
                &parse_expr("a != 0 ==> 1 / a == 1").unwrap(),
                &Valuation::at_pre(&state(&[("a", 0)])),
                Position::Pre
            ),
            Ok(true)
        );
    }
}
