//! Type checking, scoping, definite assignment and return-path checks.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use super::ast::*;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("{span}: type mismatch in {context}: expected {expected}, found {found}")]
    Mismatch { span: Span, context: String, expected: Ty, found: Ty },
    #[error("{span}: undeclared variable `{name}`")]
    Undeclared { span: Span, name: String },
    #[error("{span}: condition of `{keyword}` must be bool, found {found}")]
    NonBoolCondition { span: Span, keyword: &'static str, found: Ty },
    #[error("{span}: duplicate declaration of `{name}`")]
    Duplicate { span: Span, name: String },
    #[error("{span}: `{what}` is only allowed in specifications")]
    SpecOnly { span: Span, what: &'static str },
    #[error("{span}: local `{name}` may be read before it is assigned")]
    Unassigned { span: Span, name: String },
    #[error("{span}: method `{method}` may finish without returning a value")]
    MissingReturn { span: Span, method: String },
    #[error("{span}: {message}")]
    BadReturn { span: Span, message: String },
    #[error("{span}: unreachable statement after `return`")]
    Unreachable { span: Span },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeErrors(pub Vec<TypeError>);

impl fmt::Display for TypeErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for TypeErrors {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKind {
    Global,
    Param,
    Local,
}

/// Names visible in one method. Local names are unique per method, so one flat map suffices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TypeEnv {
    vars: BTreeMap<String, (Ty, VarKind)>,
    /// Return type of the method; `\result` has this type.
    pub ret: Option<Ty>,
}

impl TypeEnv {
    pub fn lookup(&self, name: &str) -> Option<Ty> {
        self.vars.get(name).map(|(t, _)| *t)
    }

    pub fn kind(&self, name: &str) -> Option<VarKind> {
        self.vars.get(name).map(|(_, k)| *k)
    }

    pub fn insert(&mut self, name: impl Into<String>, ty: Ty, kind: VarKind) {
        self.vars.insert(name.into(), (ty, kind));
    }

    pub fn names(&self) -> impl Iterator<Item = (&str, Ty, VarKind)> {
        self.vars.iter().map(|(n, (t, k))| (n.as_str(), *t, *k))
    }

    /// Type of an expression, deterministic. `allow_spec` admits `old`, `\result` and `==>`, and
    /// resolves passive names `x$k` to the type of `x`.
    pub fn type_of(&self, e: &Expr, allow_spec: bool, span: Span) -> Result<Ty, TypeError> {
        match e {
            Expr::Int(_) => Ok(Ty::Int),
            Expr::Bool(_) => Ok(Ty::Bool),
            Expr::Var(n) => {
                let base = if allow_spec { n.split('$').next().unwrap_or(n) } else { n.as_str() };
                self.lookup(base).ok_or_else(|| TypeError::Undeclared { span, name: n.clone() })
            }
            Expr::Result => {
                if !allow_spec {
                    return Err(TypeError::SpecOnly { span, what: "\\result" });
                }
                self.ret
                    .ok_or_else(|| TypeError::BadReturn { span, message: "`\\result` used in a void method".into() })
            }
            Expr::Old(inner) => {
                if !allow_spec {
                    return Err(TypeError::SpecOnly { span, what: "old" });
                }
                self.type_of(inner, allow_spec, span)
            }
            Expr::Unary(op, inner) => {
                let want = match op {
                    UnOp::Neg => Ty::Int,
                    UnOp::Not => Ty::Bool,
                };
                self.expect(inner, want, allow_spec, span, "unary operand")?;
                Ok(want)
            }
            Expr::Binary(op, l, r) => {
                let ctx = format!("operand of `{}`", op.symbol());
                match op {
                    BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => {
                        self.expect(l, Ty::Int, allow_spec, span, &ctx)?;
                        self.expect(r, Ty::Int, allow_spec, span, &ctx)?;
                        Ok(Ty::Int)
                    }
                    BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                        self.expect(l, Ty::Int, allow_spec, span, &ctx)?;
                        self.expect(r, Ty::Int, allow_spec, span, &ctx)?;
                        Ok(Ty::Bool)
                    }
                    BinOp::Eq | BinOp::Ne => {
                        let lt = self.type_of(l, allow_spec, span)?;
                        self.expect(r, lt, allow_spec, span, &ctx)?;
                        Ok(Ty::Bool)
                    }
                    BinOp::And | BinOp::Or | BinOp::Implies => {
                        if *op == BinOp::Implies && !allow_spec {
                            return Err(TypeError::SpecOnly { span, what: "==>" });
                        }
                        self.expect(l, Ty::Bool, allow_spec, span, &ctx)?;
                        self.expect(r, Ty::Bool, allow_spec, span, &ctx)?;
                        Ok(Ty::Bool)
                    }
                }
            }
        }
    }

    fn expect(&self, e: &Expr, want: Ty, allow_spec: bool, span: Span, ctx: &str) -> Result<(), TypeError> {
        let found = self.type_of(e, allow_spec, span)?;
        if found == want {
            Ok(())
        } else {
            Err(TypeError::Mismatch { span, context: ctx.to_string(), expected: want, found })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedMethod {
    pub decl: MethodDecl,
    pub env: TypeEnv,
    pub globals_read: BTreeSet<String>,
    pub globals_written: BTreeSet<String>,
}

impl TypedMethod {
    pub fn name(&self) -> &str {
        &self.decl.name
    }

    /// Globals visible to the method, in declaration order of the program.
    pub fn globals(&self) -> Vec<&str> {
        self.env.names().filter(|(_, _, k)| *k == VarKind::Global).map(|(n, _, _)| n).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedProgram {
    pub program: Program,
    pub methods: Vec<TypedMethod>,
}

impl TypedProgram {
    pub fn method(&self, name: &str) -> Option<&TypedMethod> {
        self.methods.iter().find(|m| m.decl.name == name)
    }
}

pub fn typecheck(program: &Program) -> Result<TypedProgram, TypeErrors> {
    let mut errors = Vec::new();
    let mut methods = Vec::new();
    for m in &program.methods {
        let mut env = TypeEnv {
            ret: match m.ret {
                RetTy::Value(t) => Some(t),
                RetTy::Void => None,
            },
            ..TypeEnv::default()
        };
        for g in &program.globals {
            env.insert(&g.name, g.ty, VarKind::Global);
        }
        for p in &m.params {
            env.insert(&p.name, p.ty, VarKind::Param);
        }
        let mut ck = Checker {
            env,
            method: m,
            errors: Vec::new(),
            read: BTreeSet::new(),
            written: BTreeSet::new(),
            scopes: vec![Vec::new()],
            loop_depth: 0,
        };
        let mut assigned = Some(BTreeSet::new());
        ck.stmts(m.body_stmts(), &mut assigned);
        if matches!(m.ret, RetTy::Value(_)) && assigned.is_some() {
            ck.errors.push(TypeError::MissingReturn { span: m.span, method: m.name.clone() });
        }
        if ck.errors.is_empty() {
            methods.push(TypedMethod {
                decl: m.clone(),
                env: ck.env,
                globals_read: ck.read,
                globals_written: ck.written,
            });
        }
        errors.extend(ck.errors);
    }
    if errors.is_empty() {
        Ok(TypedProgram { program: program.clone(), methods })
    } else {
        Err(TypeErrors(errors))
    }
}

/// Set of definitely assigned locals; `None` once control cannot reach this point.
type Assigned = Option<BTreeSet<String>>;

struct Checker<'a> {
    env: TypeEnv,
    method: &'a MethodDecl,
    errors: Vec<TypeError>,
    read: BTreeSet<String>,
    written: BTreeSet<String>,
    /// Locals declared per open block, for scoping.
    scopes: Vec<Vec<String>>,
    loop_depth: usize,
}

impl Checker<'_> {
    fn in_scope(&self, name: &str) -> bool {
        match self.env.kind(name) {
            Some(VarKind::Local) => self.scopes.iter().any(|s| s.iter().any(|n| n == name)),
            Some(_) => true,
            None => false,
        }
    }

    fn use_expr(&mut self, e: &Expr, span: Span, assigned: &Assigned) -> Option<Ty> {
        let mut ok = true;
        e.for_each_var(&mut |n| {
            if !self.in_scope(n) {
                self.errors.push(TypeError::Undeclared { span, name: n.to_string() });
                ok = false;
                return;
            }
            match self.env.kind(n) {
                Some(VarKind::Global) => {
                    self.read.insert(n.to_string());
                }
                Some(VarKind::Local) => {
                    if let Some(a) = assigned {
                        if !a.contains(n) {
                            self.errors.push(TypeError::Unassigned { span, name: n.to_string() });
                        }
                    }
                }
                _ => {}
            }
        });
        if !ok {
            return None;
        }
        match self.env.type_of(e, false, span) {
            Ok(t) => Some(t),
            Err(err) => {
                self.errors.push(err);
                None
            }
        }
    }

    fn stmts(&mut self, stmts: &[Stmt], assigned: &mut Assigned) {
        self.scopes.push(Vec::new());
        let mut reported = false;
        for s in stmts {
            if assigned.is_none() && !reported {
                self.errors.push(TypeError::Unreachable { span: s.span() });
                reported = true;
            }
            self.stmt(s, assigned);
        }
        self.scopes.pop();
    }

    fn stmt(&mut self, s: &Stmt, assigned: &mut Assigned) {
        match s {
            Stmt::Skip { .. } => {}
            Stmt::Local { ty, name, init, span } => {
                if self.env.lookup(name).is_some() {
                    self.errors.push(TypeError::Duplicate { span: *span, name: name.clone() });
                    return;
                }
                if let Some(e) = init {
                    if let Some(t) = self.use_expr(e, *span, assigned) {
                        if t != *ty {
                            self.errors.push(TypeError::Mismatch {
                                span: *span,
                                context: format!("initializer of `{name}`"),
                                expected: *ty,
                                found: t,
                            });
                        }
                    }
                }
                self.env.insert(name, *ty, VarKind::Local);
                if let Some(scope) = self.scopes.last_mut() {
                    scope.push(name.clone());
                }
                if init.is_some() {
                    if let Some(a) = assigned {
                        a.insert(name.clone());
                    }
                }
            }
            Stmt::Assign { target, rhs, span } => {
                let rt = self.use_expr(rhs, *span, assigned);
                if !self.in_scope(target) {
                    self.errors.push(TypeError::Undeclared { span: *span, name: target.clone() });
                    return;
                }
                let tt = self.env.lookup(target).expect("in scope");
                if let Some(rt) = rt {
                    if rt != tt {
                        self.errors.push(TypeError::Mismatch {
                            span: *span,
                            context: format!("assignment to `{target}`"),
                            expected: tt,
                            found: rt,
                        });
                    }
                }
                match self.env.kind(target) {
                    Some(VarKind::Global) => {
                        self.written.insert(target.clone());
                    }
                    Some(VarKind::Local) => {
                        if let Some(a) = assigned {
                            a.insert(target.clone());
                        }
                    }
                    _ => {}
                }
            }
            Stmt::Block { stmts, .. } => self.stmts(stmts, assigned),
            Stmt::If { cond, then_branch, else_branch, span } => {
                self.condition(cond, *span, "if", assigned);
                let mut a_then = assigned.clone();
                self.stmt(then_branch, &mut a_then);
                let mut a_else = assigned.clone();
                if let Some(e) = else_branch {
                    self.stmt(e, &mut a_else);
                }
                *assigned = match (a_then, a_else) {
                    (None, x) | (x, None) => x,
                    (Some(x), Some(y)) => Some(x.intersection(&y).cloned().collect()),
                };
            }
            Stmt::While { cond, invariant, body, span } => {
                self.condition(cond, *span, "while", assigned);
                self.condition(invariant, *span, "invariant", assigned);
                self.loop_depth += 1;
                let mut a_body = assigned.clone();
                self.stmt(body, &mut a_body);
                self.loop_depth -= 1;
            }
            Stmt::Return { value, span } => {
                if self.loop_depth > 0 {
                    self.errors.push(TypeError::BadReturn {
                        span: *span,
                        message: "`return` inside a loop body is not supported".into(),
                    });
                }
                match (self.method.ret, value) {
                    (RetTy::Void, Some(_)) => self.errors.push(TypeError::BadReturn {
                        span: *span,
                        message: format!("void method `{}` returns a value", self.method.name),
                    }),
                    (RetTy::Value(_), None) => self.errors.push(TypeError::BadReturn {
                        span: *span,
                        message: format!("method `{}` must return a value", self.method.name),
                    }),
                    (RetTy::Value(want), Some(e)) => {
                        if let Some(found) = self.use_expr(e, *span, assigned) {
                            if found != want {
                                self.errors.push(TypeError::Mismatch {
                                    span: *span,
                                    context: "return value".into(),
                                    expected: want,
                                    found,
                                });
                            }
                        }
                    }
                    (RetTy::Void, None) => {}
                }
                *assigned = None;
            }
        }
    }

    fn condition(&mut self, e: &Expr, span: Span, keyword: &'static str, assigned: &Assigned) {
        if let Some(t) = self.use_expr(e, span, assigned) {
            if t != Ty::Bool {
                self.errors.push(TypeError::NonBoolCondition { span, keyword, found: t });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parser::{parse, parse_expr};

    fn check(src: &str) -> Result<TypedProgram, TypeErrors> {
        typecheck(&parse(src).unwrap())
    }

    fn env_ab() -> TypeEnv {
        let mut env = TypeEnv::default();
        env.insert("a", Ty::Int, VarKind::Param);
        env.insert("b", Ty::Int, VarKind::Param);
        env
    }

    #[test]
    fn operator_signatures() {
        let env = env_ab();
        let sp = Span::default();
        assert_eq!(env.type_of(&parse_expr("a < b").unwrap(), false, sp), Ok(Ty::Bool));
        assert!(matches!(
            env.type_of(&parse_expr("a + true").unwrap(), false, sp),
            Err(TypeError::Mismatch { expected: Ty::Int, found: Ty::Bool, .. })
        ));
    }

    #[test]
    fn cmp_checks_with_int_local() {
        let tp = check("int cmp(int a, int b){ int c; c = a; if (c < b) { return -1; } else { if (c > b) { return 1; } } return 0; }").unwrap();
        let m = &tp.methods[0];
        assert_eq!(m.env.lookup("c"), Some(Ty::Int));
        assert_eq!(m.env.kind("c"), Some(VarKind::Local));
        assert!(m.globals_written.is_empty());
    }

    #[test]
    fn typing_is_deterministic() {
        let src = "global int g; int f(int a) { g = g + a; return g; }";
        assert_eq!(check(src).unwrap(), check(src).unwrap());
    }

    #[test]
    fn rejects_common_mistakes() {
        let cases = [
            ("int f() { return x; }", "undeclared"),
            ("int f(int a) { if (a) { return 1; } return 0; }", "must be bool"),
            ("int f(int a) { if (a > 0) { return 1; } }", "without returning"),
            ("int f() { int c; return c; }", "before it is assigned"),
            ("int f(int a) { return old(a); }", "only allowed in specifications"),
            ("int f(int a) { return 0; a = 1; }", "unreachable"),
            ("void f(int a) { while (a > 0) invariant (true) { return; } }", "inside a loop"),
            ("int f(int a) { int a; return 0; }", "duplicate"),
            ("int f(int a) { if (a > 0) { int t = 1; } return t; }", "undeclared"),
        ];
        for (src, needle) in cases {
            let errs = check(src).unwrap_err();
            assert!(errs.to_string().contains(needle), "{src}: {errs}");
        }
    }

    #[test]
    fn globals_read_and_written() {
        let tp = check("global int g; global int h; void f() { g = h; }").unwrap();
        let m = &tp.methods[0];
        assert_eq!(m.globals_read.iter().collect::<Vec<_>>(), vec!["h"]);
        assert_eq!(m.globals_written.iter().collect::<Vec<_>>(), vec!["g"]);
    }

    #[test]
    fn spec_atoms_resolve_versions() {
        let mut env = env_ab();
        env.ret = Some(Ty::Int);
        let sp = Span::default();
        assert_eq!(env.type_of(&parse_expr("\\result == a$0 + b$2").unwrap(), true, sp), Ok(Ty::Bool));
    }
}
