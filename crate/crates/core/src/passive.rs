//! Passive form: every assignment writes a fresh version `x$k` of its variable.
//!
//! Version numbers count assignments along the current path, so two branches that each assign
//! `x` once both produce `x$1`. A name is therefore assigned at most once on every execution
//! path, though it may be assigned in both arms of an `if`. Where the arms disagree on the live
//! version of a variable that is still needed, the arm holding the older version gets a copy
//! `x$j = x$i` so both arms leave the same name behind.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write};

use crate::lang::{pretty, Expr, Stmt, TypedMethod, VarKind};

/// One variable havocked by a loop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Havoc {
    pub var: String,
    /// Version that holds the loop-carried value inside the condition, invariant and body.
    pub version: String,
    /// Live version on loop entry; `None` for a local first assigned inside the loop.
    pub entry: Option<String>,
    /// Live version at the end of the body, copied back into `version` before the next test.
    pub back: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PStmt {
    Skip,
    Assign {
        target: String,
        rhs: Expr,
    },
    If {
        cond: Expr,
        then_branch: Vec<PStmt>,
        else_branch: Vec<PStmt>,
    },
    While {
        cond: Expr,
        invariant: Expr,
        havoc: Vec<Havoc>,
        body: Vec<PStmt>,
    },
    /// Leaves the method. `exit` indexes [`PassiveMethod::exits`].
    Return {
        value: Option<Expr>,
        exit: usize,
    },
}

/// Live versions at one exit of the method.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExitBinding {
    pub result: Option<Expr>,
    /// Final version of every global visible to the method.
    pub globals: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PassiveMethod {
    pub original: TypedMethod,
    pub body: Vec<PStmt>,
    /// Version names per variable in creation order; version 0 is the initial value.
    pub versions: BTreeMap<String, Vec<String>>,
    pub exits: Vec<ExitBinding>,
}

pub fn version_name(var: &str, k: u32) -> String {
    format!("{var}${k}")
}

/// Splits `x$3` into `("x", Some(3))`; plain names give `None`.
pub fn split_version(name: &str) -> (&str, Option<u32>) {
    match name.rsplit_once('$') {
        Some((base, k)) => match k.parse() {
            Ok(k) => (base, Some(k)),
            Err(_) => (name, None),
        },
        None => (name, None),
    }
}

/// Converts a type-checked method to passive form.
pub fn passivize(method: &TypedMethod) -> PassiveMethod {
    let mut p = Passivizer {
        versions: BTreeMap::new(),
        exits: Vec::new(),
        globals: method.globals().into_iter().map(String::from).collect(),
    };
    let mut st = State::default();
    for (name, _, kind) in method.env.names() {
        if kind != VarKind::Local {
            st.cur.insert(name.to_string(), 0);
            st.count.insert(name.to_string(), 0);
            p.record(name, 0);
        }
    }
    let live_out: BTreeSet<String> = p.globals.iter().cloned().collect();
    let mut body = Vec::new();
    p.block(method.decl.body_stmts(), &mut st, &live_out, &mut body);
    if st.reachable {
        let exit = p.exit(&st, None);
        body.push(PStmt::Return { value: None, exit });
    }
    PassiveMethod { original: method.clone(), body, versions: p.versions, exits: p.exits }
}

/// Number of statement and branch nodes in the source body; drives the refusal gate.
pub fn cfg_size(method: &PassiveMethod) -> usize {
    method.original.decl.body_stmts().iter().map(stmt_size).sum()
}

fn stmt_size(s: &Stmt) -> usize {
    match s {
        Stmt::Skip { .. } | Stmt::Local { .. } | Stmt::Assign { .. } | Stmt::Return { .. } => 1,
        Stmt::Block { stmts, .. } => stmts.iter().map(stmt_size).sum(),
        Stmt::If { then_branch, else_branch, .. } => {
            1 + stmt_size(then_branch) + else_branch.as_deref().map_or(0, stmt_size)
        }
        Stmt::While { body, .. } => 1 + stmt_size(body),
    }
}

#[derive(Debug, Clone)]
struct State {
    /// Live version number per variable; absent for unassigned locals.
    cur: BTreeMap<String, u32>,
    /// Highest version number used so far on this path.
    count: BTreeMap<String, u32>,
    reachable: bool,
}

impl Default for State {
    fn default() -> Self {
        State { cur: BTreeMap::new(), count: BTreeMap::new(), reachable: true }
    }
}

impl State {
    fn rename(&self, e: &Expr) -> Expr {
        e.map_vars(&mut |v| match self.cur.get(v) {
            Some(k) => Expr::Var(version_name(v, *k)),
            // unreachable on type-checked input; keep the plain name so the fault is visible
            None => Expr::var(v),
        })
    }
}

struct Passivizer {
    versions: BTreeMap<String, Vec<String>>,
    exits: Vec<ExitBinding>,
    globals: Vec<String>,
}

impl Passivizer {
    fn record(&mut self, var: &str, k: u32) -> String {
        let name = version_name(var, k);
        let list = self.versions.entry(var.to_string()).or_default();
        if !list.contains(&name) {
            list.push(name.clone());
        }
        name
    }

    fn exit(&mut self, st: &State, result: Option<Expr>) -> usize {
        let globals = self.globals.iter().map(|g| (g.clone(), version_name(g, st.cur[g]))).collect();
        self.exits.push(ExitBinding { result, globals });
        self.exits.len() - 1
    }

    fn assign(&mut self, var: &str, rhs: Expr, st: &mut State, out: &mut Vec<PStmt>) {
        let k = st.count.get(var).copied().unwrap_or(0) + 1;
        st.count.insert(var.to_string(), k);
        st.cur.insert(var.to_string(), k);
        let target = self.record(var, k);
        out.push(PStmt::Assign { target, rhs });
    }

    fn block(&mut self, stmts: &[Stmt], st: &mut State, live_out: &BTreeSet<String>, out: &mut Vec<PStmt>) {
        for (i, s) in stmts.iter().enumerate() {
            if !st.reachable {
                break;
            }
            let mut live = live_out.clone();
            for later in &stmts[i + 1..] {
                mentions(later, &mut live);
            }
            self.stmt(s, st, &live, out);
        }
    }

    fn stmt(&mut self, s: &Stmt, st: &mut State, live: &BTreeSet<String>, out: &mut Vec<PStmt>) {
        match s {
            Stmt::Skip { .. } => out.push(PStmt::Skip),
            Stmt::Local { name, init, .. } => {
                if let Some(e) = init {
                    let rhs = st.rename(e);
                    self.assign(name, rhs, st, out);
                }
            }
            Stmt::Assign { target, rhs, .. } => {
                let rhs = st.rename(rhs);
                self.assign(target, rhs, st, out);
            }
            Stmt::Block { stmts, .. } => self.block(stmts, st, live, out),
            Stmt::If { cond, then_branch, else_branch, .. } => {
                let cond = st.rename(cond);
                let mut st_then = st.clone();
                let mut then_out = Vec::new();
                self.stmt(then_branch, &mut st_then, live, &mut then_out);
                let mut st_else = st.clone();
                let mut else_out = Vec::new();
                if let Some(e) = else_branch {
                    self.stmt(e, &mut st_else, live, &mut else_out);
                }
                *st = self.join(st_then, &mut then_out, st_else, &mut else_out, live);
                out.push(PStmt::If { cond, then_branch: then_out, else_branch: else_out });
            }
            Stmt::While { cond, invariant, body, .. } => {
                let mut targets = BTreeSet::new();
                assigned_outside_decls(body, &mut targets);
                let mut havoc = Vec::new();
                for v in &targets {
                    let entry = st.cur.get(v).map(|k| version_name(v, *k));
                    let k = st.count.get(v).copied().unwrap_or(0) + 1;
                    st.count.insert(v.clone(), k);
                    st.cur.insert(v.clone(), k);
                    let version = self.record(v, k);
                    havoc.push(Havoc { var: v.clone(), version, entry, back: String::new() });
                }
                let cond = st.rename(cond);
                let invariant = st.rename(invariant);
                let mut body_live = live.clone();
                mentions(s, &mut body_live);
                let mut st_body = st.clone();
                let mut body_out = Vec::new();
                self.stmt(body, &mut st_body, &body_live, &mut body_out);
                for h in &mut havoc {
                    h.back = version_name(&h.var, st_body.cur[&h.var]);
                }
                for (v, k) in st_body.count {
                    let c = st.count.entry(v).or_insert(0);
                    *c = (*c).max(k);
                }
                out.push(PStmt::While { cond, invariant, havoc, body: body_out });
            }
            Stmt::Return { value, .. } => {
                let value = value.as_ref().map(|e| st.rename(e));
                let exit = self.exit(st, value.clone());
                out.push(PStmt::Return { value, exit });
                st.reachable = false;
            }
        }
    }

    fn join(
        &mut self,
        a: State,
        a_out: &mut Vec<PStmt>,
        b: State,
        b_out: &mut Vec<PStmt>,
        live: &BTreeSet<String>,
    ) -> State {
        if !a.reachable {
            let mut b = b;
            for (v, k) in a.count {
                let c = b.count.entry(v).or_insert(0);
                *c = (*c).max(k);
            }
            return b;
        }
        if !b.reachable {
            let mut a = a;
            for (v, k) in b.count {
                let c = a.count.entry(v).or_insert(0);
                *c = (*c).max(k);
            }
            return a;
        }
        let mut joined = State::default();
        let vars: BTreeSet<String> = a.count.keys().chain(b.count.keys()).cloned().collect();
        for v in vars {
            let ca = a.count.get(&v).copied().unwrap_or(0);
            let cb = b.count.get(&v).copied().unwrap_or(0);
            let mut count = ca.max(cb);
            match (a.cur.get(&v).copied(), b.cur.get(&v).copied()) {
                (Some(x), Some(y)) if x == y => {
                    joined.cur.insert(v.clone(), x);
                }
                (Some(x), Some(y)) if live.contains(&v) => {
                    let (hi, lo_count) = if x > y { (x, cb) } else { (y, ca) };
                    let target = if lo_count < hi {
                        hi
                    } else {
                        count += 1;
                        count
                    };
                    let name = self.record(&v, target);
                    if x != target {
                        a_out.push(PStmt::Assign { target: name.clone(), rhs: Expr::Var(version_name(&v, x)) });
                    }
                    if y != target {
                        b_out.push(PStmt::Assign { target: name, rhs: Expr::Var(version_name(&v, y)) });
                    }
                    joined.cur.insert(v.clone(), target);
                }
                _ => {}
            }
            joined.count.insert(v, count);
        }
        joined
    }
}

/// Every source-level variable read or written by the statement.
fn mentions(s: &Stmt, out: &mut BTreeSet<String>) {
    let expr = |e: &Expr, out: &mut BTreeSet<String>| {
        e.for_each_var(&mut |v| {
            out.insert(v.to_string());
        })
    };
    match s {
        Stmt::Skip { .. } => {}
        Stmt::Local { name, init, .. } => {
            out.insert(name.clone());
            if let Some(e) = init {
                expr(e, out);
            }
        }
        Stmt::Assign { target, rhs, .. } => {
            out.insert(target.clone());
            expr(rhs, out);
        }
        Stmt::Block { stmts, .. } => stmts.iter().for_each(|s| mentions(s, out)),
        Stmt::If { cond, then_branch, else_branch, .. } => {
            expr(cond, out);
            mentions(then_branch, out);
            if let Some(e) = else_branch {
                mentions(e, out);
            }
        }
        Stmt::While { cond, invariant, body, .. } => {
            expr(cond, out);
            expr(invariant, out);
            mentions(body, out);
        }
        Stmt::Return { value, .. } => {
            if let Some(e) = value {
                expr(e, out);
            }
        }
    }
}

/// Assignment targets of a loop body, minus locals declared inside it.
fn assigned_outside_decls(s: &Stmt, out: &mut BTreeSet<String>) {
    fn walk(s: &Stmt, declared: &mut BTreeSet<String>, out: &mut BTreeSet<String>) {
        match s {
            Stmt::Local { name, .. } => {
                declared.insert(name.clone());
            }
            Stmt::Assign { target, .. } => {
                if !declared.contains(target) {
                    out.insert(target.clone());
                }
            }
            Stmt::Block { stmts, .. } => stmts.iter().for_each(|s| walk(s, declared, out)),
            Stmt::If { then_branch, else_branch, .. } => {
                walk(then_branch, declared, out);
                if let Some(e) = else_branch {
                    walk(e, declared, out);
                }
            }
            Stmt::While { body, .. } => walk(body, declared, out),
            Stmt::Skip { .. } | Stmt::Return { .. } => {}
        }
    }
    walk(s, &mut BTreeSet::new(), out);
}

impl fmt::Display for PassiveMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = &self.original.decl;
        let params: Vec<String> = d.params.iter().map(|p| format!("{} {}$0", p.ty, p.name)).collect();
        let mut out = format!("{} {}({}) ", d.ret, d.name, params.join(", "));
        write_block(&mut out, &self.body, 0);
        writeln!(f, "{out}")
    }
}

fn write_block(out: &mut String, stmts: &[PStmt], depth: usize) {
    out.push_str("{\n");
    for s in stmts {
        for _ in 0..=depth {
            out.push_str("    ");
        }
        match s {
            PStmt::Skip => out.push_str("skip;"),
            PStmt::Assign { target, rhs } => {
                let _ = write!(out, "{target} = {};", pretty::expr(rhs));
            }
            PStmt::If { cond, then_branch, else_branch } => {
                let _ = write!(out, "if ({}) ", pretty::expr(cond));
                write_block(out, then_branch, depth + 1);
                if !else_branch.is_empty() {
                    out.push_str(" else ");
                    write_block(out, else_branch, depth + 1);
                }
            }
            PStmt::While { cond, invariant, havoc, body } => {
                let hv: Vec<String> = havoc
                    .iter()
                    .map(|h| format!("{} <- {} | {}", h.version, h.entry.as_deref().unwrap_or("?"), h.back))
                    .collect();
                let _ = write!(
                    out,
                    "while ({}) invariant ({}) havoc [{}] ",
                    pretty::expr(cond),
                    pretty::expr(invariant),
                    hv.join(", ")
                );
                write_block(out, body, depth + 1);
            }
            PStmt::Return { value: Some(v), .. } => {
                let _ = write!(out, "return {};", pretty::expr(v));
            }
            PStmt::Return { value: None, .. } => out.push_str("return;"),
        }
        out.push('\n');
    }
    for _ in 0..depth {
        out.push_str("    ");
    }
    out.push('}');
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse, typecheck};

    fn passive_of(src: &str) -> PassiveMethod {
        let tp = typecheck(&parse(src).unwrap()).unwrap();
        passivize(&tp.methods[0])
    }

    fn assigns(body: &[PStmt]) -> Vec<String> {
        body.iter()
            .filter_map(|s| match s {
                PStmt::Assign { target, rhs } => Some(format!("{target} = {rhs}")),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn sequential_numbering() {
        let pm = passive_of("int f(int a) { int c; c = a; c = c + 1; return c; }");
        assert_eq!(assigns(&pm.body), vec!["c$1 = a$0", "c$2 = c$1 + 1"]);
        assert_eq!(pm.versions["c"], vec!["c$1", "c$2"]);
        assert!(matches!(&pm.body[2], PStmt::Return { value: Some(Expr::Var(v)), .. } if v == "c$2"));
    }

    #[test]
    fn cmp_branches_read_first_version() {
        let pm = passive_of("int cmp(int a, int b){ int c; c = a; if (c < b) { return -1; } else { if (c > b) { return 1; } } return 0; }");
        assert_eq!(assigns(&pm.body), vec!["c$1 = a$0"]);
        match &pm.body[1] {
            PStmt::If { cond, else_branch, .. } => {
                assert_eq!(cond.to_string(), "c$1 < b$0");
                assert!(matches!(&else_branch[0], PStmt::If { cond, .. } if cond.to_string() == "c$1 > b$0"));
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(pm.exits.len(), 3);
        assert_eq!(cfg_size(&pm), 7);
    }

    #[test]
    fn join_copies_into_older_arm() {
        let pm = passive_of("int f(int a) { int x = 0; if (a > 0) { x = 1; x = x + 1; } else { x = 2; } return x; }");
        match &pm.body[1] {
            PStmt::If { then_branch, else_branch, .. } => {
                assert_eq!(assigns(then_branch), vec!["x$2 = 1", "x$3 = x$2 + 1"]);
                assert_eq!(assigns(else_branch), vec!["x$2 = 2", "x$3 = x$2"]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dead_variables_are_not_reconciled() {
        let pm = passive_of("int f(int a) { int x = 0; if (a > 0) { x = 1; } return a; }");
        match &pm.body[1] {
            PStmt::If { else_branch, .. } => assert!(else_branch.is_empty()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn globals_are_live_at_exit() {
        let pm = passive_of("global int g; void f(int a) { if (a > 0) { g = g + 1; } }");
        match &pm.body[0] {
            PStmt::If { else_branch, .. } => assert_eq!(assigns(else_branch), vec!["g$1 = g$0"]),
            other => panic!("{other:?}"),
        }
        assert_eq!(pm.exits[0].globals["g"], "g$1");
    }

    #[test]
    fn loop_havocs_body_targets() {
        let pm = passive_of(
            "int f(int n) { int i = 0; while (i < n) invariant (i <= n || n < 0) { i = i + 1; } return i; }",
        );
        match &pm.body[1] {
            PStmt::While { cond, havoc, body, .. } => {
                assert_eq!(cond.to_string(), "i$2 < n$0");
                assert_eq!(
                    havoc[0],
                    Havoc { var: "i".into(), version: "i$2".into(), entry: Some("i$1".into()), back: "i$3".into() }
                );
                assert_eq!(assigns(body), vec!["i$3 = i$2 + 1"]);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(&pm.body[2], PStmt::Return { value: Some(Expr::Var(v)), .. } if v == "i$2"));
    }

    #[test]
    fn sizes() {
        assert_eq!(cfg_size(&passive_of("void f() { skip; }")), 1);
        let two_ifs = "void f(int a) { if (a > 0) { skip; } else { skip; } if (a > 1) { skip; } }";
        assert_eq!(cfg_size(&passive_of(two_ifs)), 3 + 2);
    }

    #[test]
    fn implicit_return_for_void() {
        let pm = passive_of("void f() { skip; }");
        assert!(matches!(pm.body.last(), Some(PStmt::Return { value: None, .. })));
    }

    #[test]
    fn split_versions() {
        assert_eq!(split_version("x$3"), ("x", Some(3)));
        assert_eq!(split_version("x"), ("x", None));
    }
}
