//! The toy imperative language: syntax, parsing, printing and type checking.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod pretty;
pub mod typeck;

pub use ast::{BinOp, Expr, GlobalDecl, MethodDecl, Param, Program, RetTy, Span, Stmt, Ty, UnOp};
pub use parser::{parse, parse_expr, ParseErrors, SyntaxError};
pub use typeck::{typecheck, TypeEnv, TypeError, TypeErrors, TypedMethod, TypedProgram, VarKind};
