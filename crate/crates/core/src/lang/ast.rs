//! Abstract syntax of the toy imperative language and of specification atoms.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A source position, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(line: u32, col: u32) -> Self {
        Span { line, col }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Ty {
    Int,
    Bool,
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Int => f.write_str("int"),
            Ty::Bool => f.write_str("bool"),
        }
    }
}

/// Method return type; `Void` has no value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RetTy {
    Value(Ty),
    Void,
}

impl fmt::Display for RetTy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RetTy::Value(t) => t.fmt(f),
            RetTy::Void => f.write_str("void"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
    /// Logical implication; only legal inside specification text.
    Implies,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
            BinOp::Implies => "==>",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Implies => 1,
            BinOp::Or => 2,
            BinOp::And => 3,
            BinOp::Eq | BinOp::Ne => 4,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 5,
            BinOp::Add | BinOp::Sub => 6,
            BinOp::Mul | BinOp::Div => 7,
        }
    }

    pub fn is_right_assoc(self) -> bool {
        matches!(self, BinOp::Implies)
    }
}

/// Expressions. `Old` and `Result` only occur in specification atoms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    Var(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Old(Box<Expr>),
    Result,
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: Expr) -> Expr {
        Expr::Unary(UnOp::Not, Box::new(e))
    }

    pub fn bin(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn eq(l: Expr, r: Expr) -> Expr {
        Expr::bin(BinOp::Eq, l, r)
    }

    /// Logical negation that cancels an outer `!` instead of stacking a second one.
    pub fn negate(self) -> Expr {
        match self {
            Expr::Unary(UnOp::Not, inner) => *inner,
            other => Expr::not(other),
        }
    }

    /// Conjunction of a list; `true` when empty.
    pub fn conjunction(items: impl IntoIterator<Item = Expr>) -> Expr {
        let mut iter = items.into_iter();
        match iter.next() {
            None => Expr::Bool(true),
            Some(first) => iter.fold(first, |acc, e| Expr::bin(BinOp::And, acc, e)),
        }
    }

    /// Visits every variable name in the expression, including names under `old`.
    pub fn for_each_var<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            Expr::Var(n) => f(n),
            Expr::Unary(_, e) | Expr::Old(e) => e.for_each_var(f),
            Expr::Binary(_, l, r) => {
                l.for_each_var(f);
                r.for_each_var(f);
            }
            Expr::Int(_) | Expr::Bool(_) | Expr::Result => {}
        }
    }

    pub fn vars(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.for_each_var(&mut |n| {
            if !out.contains(&n) {
                out.push(n)
            }
        });
        out
    }

    pub fn mentions_result(&self) -> bool {
        match self {
            Expr::Result => true,
            Expr::Unary(_, e) | Expr::Old(e) => e.mentions_result(),
            Expr::Binary(_, l, r) => l.mentions_result() || r.mentions_result(),
            _ => false,
        }
    }

    pub fn mentions_old(&self) -> bool {
        match self {
            Expr::Old(_) => true,
            Expr::Unary(_, e) => e.mentions_old(),
            Expr::Binary(_, l, r) => l.mentions_old() || r.mentions_old(),
            _ => false,
        }
    }

    /// Rebuilds the expression bottom-up, replacing variables through `f`.
    pub fn map_vars(&self, f: &mut impl FnMut(&str) -> Expr) -> Expr {
        match self {
            Expr::Var(n) => f(n),
            Expr::Unary(op, e) => Expr::Unary(*op, Box::new(e.map_vars(f))),
            Expr::Binary(op, l, r) => Expr::Binary(*op, Box::new(l.map_vars(f)), Box::new(r.map_vars(f))),
            Expr::Old(e) => Expr::Old(Box::new(e.map_vars(f))),
            Expr::Int(_) | Expr::Bool(_) | Expr::Result => self.clone(),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::pretty::expr(self))
    }
}

/// Statements. Block sequencing stands in for the binary `S1; S2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    Skip {
        span: Span,
    },
    /// Local declaration, optionally initialized.
    Local {
        ty: Ty,
        name: String,
        init: Option<Expr>,
        span: Span,
    },
    Assign {
        target: String,
        rhs: Expr,
        span: Span,
    },
    Block {
        stmts: Vec<Stmt>,
        span: Span,
    },
    If {
        cond: Expr,
        then_branch: Box<Stmt>,
        else_branch: Option<Box<Stmt>>,
        span: Span,
    },
    While {
        cond: Expr,
        invariant: Expr,
        body: Box<Stmt>,
        span: Span,
    },
    Return {
        value: Option<Expr>,
        span: Span,
    },
}

impl Stmt {
    pub fn span(&self) -> Span {
        match self {
            Stmt::Skip { span }
            | Stmt::Local { span, .. }
            | Stmt::Assign { span, .. }
            | Stmt::Block { span, .. }
            | Stmt::If { span, .. }
            | Stmt::While { span, .. }
            | Stmt::Return { span, .. } => *span,
        }
    }

    /// Structural equality ignoring source positions.
    pub fn same_shape(&self, other: &Stmt) -> bool {
        match (self, other) {
            (Stmt::Skip { .. }, Stmt::Skip { .. }) => true,
            (Stmt::Local { ty: t1, name: n1, init: i1, .. }, Stmt::Local { ty: t2, name: n2, init: i2, .. }) => {
                t1 == t2 && n1 == n2 && i1 == i2
            }
            (Stmt::Assign { target: t1, rhs: r1, .. }, Stmt::Assign { target: t2, rhs: r2, .. }) => {
                t1 == t2 && r1 == r2
            }
            (Stmt::Block { stmts: a, .. }, Stmt::Block { stmts: b, .. }) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.same_shape(y))
            }
            (
                Stmt::If { cond: c1, then_branch: t1, else_branch: e1, .. },
                Stmt::If { cond: c2, then_branch: t2, else_branch: e2, .. },
            ) => {
                c1 == c2
                    && t1.same_shape(t2)
                    && match (e1, e2) {
                        (None, None) => true,
                        (Some(a), Some(b)) => a.same_shape(b),
                        _ => false,
                    }
            }
            (
                Stmt::While { cond: c1, invariant: i1, body: b1, .. },
                Stmt::While { cond: c2, invariant: i2, body: b2, .. },
            ) => c1 == c2 && i1 == i2 && b1.same_shape(b2),
            (Stmt::Return { value: v1, .. }, Stmt::Return { value: v2, .. }) => v1 == v2,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub ty: Ty,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlobalDecl {
    pub name: String,
    pub ty: Ty,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodDecl {
    pub name: String,
    pub params: Vec<Param>,
    pub ret: RetTy,
    /// Always a `Stmt::Block`.
    pub body: Stmt,
    pub span: Span,
}

impl MethodDecl {
    pub fn body_stmts(&self) -> &[Stmt] {
        match &self.body {
            Stmt::Block { stmts, .. } => stmts,
            other => std::slice::from_ref(other),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Program {
    pub globals: Vec<GlobalDecl>,
    pub methods: Vec<MethodDecl>,
}

impl Program {
    pub fn method(&self, name: &str) -> Option<&MethodDecl> {
        self.methods.iter().find(|m| m.name == name)
    }

    /// Structural equality ignoring source positions.
    pub fn same_shape(&self, other: &Program) -> bool {
        self.globals.len() == other.globals.len()
            && self.globals.iter().zip(&other.globals).all(|(a, b)| a.name == b.name && a.ty == b.ty)
            && self.methods.len() == other.methods.len()
            && self
                .methods
                .iter()
                .zip(&other.methods)
                .all(|(a, b)| a.name == b.name && a.params == b.params && a.ret == b.ret && a.body.same_shape(&b.body))
    }
}
