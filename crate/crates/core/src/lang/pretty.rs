//! Printers for expressions and programs.
//!
//! The expression printer inserts only the parentheses needed to parse back to the same tree,
//! so `parse_expr(&expr(e)) == e` for every `e`. Atom identity elsewhere relies on this.

use std::fmt::Write;

use super::ast::*;

pub fn expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e);
    out
}

fn write_expr(out: &mut String, e: &Expr) {
    match e {
        Expr::Int(n) => {
            let _ = write!(out, "{n}");
        }
        Expr::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Expr::Var(n) => out.push_str(n),
        Expr::Result => out.push_str("\\result"),
        Expr::Old(inner) => {
            out.push_str("old(");
            write_expr(out, inner);
            out.push(')');
        }
        Expr::Unary(op, inner) => {
            out.push(match op {
                UnOp::Neg => '-',
                UnOp::Not => '!',
            });
            // `-(1)` must not collapse into the literal `-1`
            let wrap = matches!(**inner, Expr::Binary(..)) || (*op == UnOp::Neg && matches!(**inner, Expr::Int(_)));
            write_operand(out, inner, wrap);
        }
        Expr::Binary(op, l, r) => {
            let prec = op.precedence();
            let wrap_l = match &**l {
                Expr::Binary(lop, ..) => lop.precedence() < prec || (lop.precedence() == prec && op.is_right_assoc()),
                _ => false,
            };
            let wrap_r = match &**r {
                Expr::Binary(rop, ..) => rop.precedence() < prec || (rop.precedence() == prec && !op.is_right_assoc()),
                _ => false,
            };
            write_operand(out, l, wrap_l);
            let _ = write!(out, " {} ", op.symbol());
            write_operand(out, r, wrap_r);
        }
    }
}

fn write_operand(out: &mut String, e: &Expr, wrap: bool) {
    if wrap {
        out.push('(');
        write_expr(out, e);
        out.push(')');
    } else {
        write_expr(out, e);
    }
}

/// Renders a whole program in the layout used by the bundled corpus.
pub fn program(p: &Program) -> String {
    let mut out = String::new();
    for g in &p.globals {
        let _ = writeln!(out, "global {} {};", g.ty, g.name);
    }
    for (i, m) in p.methods.iter().enumerate() {
        if i > 0 || !p.globals.is_empty() {
            out.push('\n');
        }
        out.push_str(&method(m));
    }
    out
}

pub fn method(m: &MethodDecl) -> String {
    let mut out = String::new();
    let params: Vec<String> = m.params.iter().map(|p| format!("{} {}", p.ty, p.name)).collect();
    let _ = write!(out, "{} {}({}) ", m.ret, m.name, params.join(", "));
    write_block(&mut out, m.body_stmts(), 0);
    out.push('\n');
    out
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("    ");
    }
}

fn write_block(out: &mut String, stmts: &[Stmt], depth: usize) {
    out.push_str("{\n");
    for s in stmts {
        write_stmt(out, s, depth + 1);
    }
    indent(out, depth);
    out.push('}');
}

fn block_stmts(s: &Stmt) -> &[Stmt] {
    match s {
        Stmt::Block { stmts, .. } => stmts,
        other => std::slice::from_ref(other),
    }
}

fn write_stmt(out: &mut String, s: &Stmt, depth: usize) {
    indent(out, depth);
    match s {
        Stmt::Skip { .. } => out.push_str("skip;\n"),
        Stmt::Local { ty, name, init, .. } => {
            match init {
                Some(e) => {
                    let _ = write!(out, "{ty} {name} = {};", expr(e));
                }
                None => {
                    let _ = write!(out, "{ty} {name};");
                }
            }
            out.push('\n');
        }
        Stmt::Assign { target, rhs, .. } => {
            let _ = writeln!(out, "{target} = {};", expr(rhs));
        }
        Stmt::Block { stmts, .. } => {
            write_block(out, stmts, depth);
            out.push('\n');
        }
        Stmt::If { .. } => {
            write_if(out, s, depth);
            out.push('\n');
        }
        Stmt::While { cond, invariant, body, .. } => {
            let _ = write!(out, "while ({}) invariant ({}) ", expr(cond), expr(invariant));
            write_block(out, block_stmts(body), depth);
            out.push('\n');
        }
        Stmt::Return { value, .. } => match value {
            Some(e) => {
                let _ = writeln!(out, "return {};", expr(e));
            }
            None => out.push_str("return;\n"),
        },
    }
}

fn write_if(out: &mut String, s: &Stmt, depth: usize) {
    if let Stmt::If { cond, then_branch, else_branch, .. } = s {
        let _ = write!(out, "if ({}) ", expr(cond));
        write_block(out, block_stmts(then_branch), depth);
        match else_branch.as_deref() {
            None => {}
            Some(e @ Stmt::If { .. }) => {
                out.push_str(" else ");
                write_if(out, e, depth);
            }
            Some(e) => {
                out.push_str(" else ");
                write_block(out, block_stmts(e), depth);
            }
        }
    }
}
