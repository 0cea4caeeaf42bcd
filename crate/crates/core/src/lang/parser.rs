//! Recursive descent parser for `.imp` sources and for specification atoms.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use super::ast::*;
use super::lexer::{tokenize, LexMode, Token, TokenKind};

/// A syntax error with its position and, when known, the set of tokens that would have been accepted.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {message}")]
pub struct SyntaxError {
    pub span: Span,
    pub message: String,
    pub expected: Vec<String>,
}

/// All syntax errors found in one file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseErrors(pub Vec<SyntaxError>);

impl fmt::Display for ParseErrors {
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

impl std::error::Error for ParseErrors {}

/// Parses a whole source file.
pub fn parse(source: &str) -> Result<Program, ParseErrors> {
    let tokens = tokenize(source, LexMode::Source).map_err(|e| ParseErrors(vec![e]))?;
    let mut p = Parser { tokens, pos: 0, errors: Vec::new() };
    let program = p.program();
    if p.errors.is_empty() {
        Ok(program)
    } else {
        Err(ParseErrors(p.errors))
    }
}

/// Parses a single specification expression (atoms may use `old`, `\result`, `==>` and versioned names).
pub fn parse_expr(text: &str) -> Result<Expr, SyntaxError> {
    let tokens = tokenize(text, LexMode::Spec)?;
    let mut p = Parser { tokens, pos: 0, errors: Vec::new() };
    let e = p.expr()?;
    p.expect(TokenKind::Eof)?;
    Ok(e)
}

type PResult<T> = Result<T, SyntaxError>;

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    errors: Vec<SyntaxError>,
}

impl Parser {
    fn peek(&self) -> &TokenKind {
        &self.tokens[self.pos].kind
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek() == kind {
            self.advance();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, expected: &[&str]) -> SyntaxError {
        let expected: Vec<String> = expected.iter().map(|s| s.to_string()).collect();
        SyntaxError {
            span: self.span(),
            message: format!("unexpected {}, expected {}", self.peek(), expected.join(" or ")),
            expected,
        }
    }

    fn expect(&mut self, kind: TokenKind) -> PResult<Token> {
        if *self.peek() == kind {
            Ok(self.advance())
        } else {
            Err(self.unexpected(&[&kind.to_string()]))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            TokenKind::Ident(n) => {
                self.advance();
                Ok(n)
            }
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    fn ty(&mut self) -> PResult<Ty> {
        match self.peek() {
            TokenKind::KwInt => {
                self.advance();
                Ok(Ty::Int)
            }
            TokenKind::KwBool => {
                self.advance();
                Ok(Ty::Bool)
            }
            _ => Err(self.unexpected(&["`int`", "`bool`"])),
        }
    }

    fn program(&mut self) -> Program {
        let mut program = Program::default();
        let mut names: BTreeSet<String> = BTreeSet::new();
        while *self.peek() != TokenKind::Eof {
            let start = self.span();
            let item = if *self.peek() == TokenKind::KwGlobal {
                self.global().map(|g| {
                    if !names.insert(g.name.clone()) {
                        self.errors.push(SyntaxError {
                            span: g.span,
                            message: format!("duplicate declaration of `{}`", g.name),
                            expected: Vec::new(),
                        });
                    }
                    program.globals.push(g);
                })
            } else {
                self.method().map(|m| {
                    if !names.insert(m.name.clone()) {
                        self.errors.push(SyntaxError {
                            span: m.span,
                            message: format!("duplicate declaration of `{}`", m.name),
                            expected: Vec::new(),
                        });
                    }
                    program.methods.push(m);
                })
            };
            if let Err(e) = item {
                self.errors.push(e);
                self.sync_top_level(start);
            }
        }
        program
    }

    /// Skips to the next plausible top-level item.
    fn sync_top_level(&mut self, start: Span) {
        let mut depth = 0i32;
        if self.span() == start {
            self.advance();
        }
        loop {
            match self.peek() {
                TokenKind::Eof => return,
                TokenKind::LBrace => depth += 1,
                TokenKind::RBrace => {
                    depth -= 1;
                    if depth <= 0 {
                        self.advance();
                        return;
                    }
                }
                TokenKind::KwGlobal if depth == 0 => return,
                _ => {}
            }
            self.advance();
        }
    }

    fn global(&mut self) -> PResult<GlobalDecl> {
        let span = self.expect(TokenKind::KwGlobal)?.span;
        let ty = self.ty()?;
        let name = self.ident()?;
        self.expect(TokenKind::Semi)?;
        Ok(GlobalDecl { name, ty, span })
    }

    fn method(&mut self) -> PResult<MethodDecl> {
        let span = self.span();
        let ret = match self.peek() {
            TokenKind::KwVoid => {
                self.advance();
                RetTy::Void
            }
            TokenKind::KwInt | TokenKind::KwBool => RetTy::Value(self.ty()?),
            _ => return Err(self.unexpected(&["`global`", "`int`", "`bool`", "`void`"])),
        };
        let name = self.ident()?;
        self.expect(TokenKind::LParen)?;
        let mut params: Vec<Param> = Vec::new();
        if *self.peek() != TokenKind::RParen {
            loop {
                let pspan = self.span();
                let ty = self.ty()?;
                let pname = self.ident()?;
                if params.iter().any(|p| p.name == pname) {
                    self.errors.push(SyntaxError {
                        span: pspan,
                        message: format!("duplicate declaration of parameter `{pname}`"),
                        expected: Vec::new(),
                    });
                }
                params.push(Param { name: pname, ty });
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
        }
        self.expect(TokenKind::RParen)?;
        let body = self.block()?;
        Ok(MethodDecl { name, params, ret, body, span })
    }

    fn block(&mut self) -> PResult<Stmt> {
        let span = self.expect(TokenKind::LBrace)?.span;
        let mut stmts = Vec::new();
        while !matches!(self.peek(), TokenKind::RBrace | TokenKind::Eof) {
            match self.stmt() {
                Ok(s) => stmts.push(s),
                Err(e) => {
                    self.errors.push(e);
                    self.sync_stmt();
                }
            }
        }
        self.expect(TokenKind::RBrace)?;
        Ok(Stmt::Block { stmts, span })
    }

    /// Skips past the next `;`, stopping early at a `}` that closes the current block.
    fn sync_stmt(&mut self) {
        let mut depth = 0i32;
        loop {
            match self.peek() {
                TokenKind::Eof => return,
                TokenKind::Semi if depth == 0 => {
                    self.advance();
                    return;
                }
                TokenKind::LBrace => depth += 1,
                TokenKind::RBrace => {
                    if depth == 0 {
                        return;
                    }
                    depth -= 1;
                    if depth == 0 {
                        self.advance();
                        return;
                    }
                }
                _ => {}
            }
            self.advance();
        }
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let span = self.span();
        match self.peek().clone() {
            TokenKind::LBrace => self.block(),
            TokenKind::KwSkip => {
                self.advance();
                self.expect(TokenKind::Semi)?;
                Ok(Stmt::Skip { span })
            }
            TokenKind::KwInt | TokenKind::KwBool => {
                let ty = self.ty()?;
                let name = self.ident()?;
                let init = if self.eat(&TokenKind::Assign) { Some(self.expr()?) } else { None };
                self.expect(TokenKind::Semi)?;
                Ok(Stmt::Local { ty, name, init, span })
            }
            TokenKind::Ident(target) => {
                self.advance();
                self.expect(TokenKind::Assign)?;
                let rhs = self.expr()?;
                self.expect(TokenKind::Semi)?;
                Ok(Stmt::Assign { target, rhs, span })
            }
            TokenKind::KwIf => {
                self.advance();
                self.expect(TokenKind::LParen)?;
                let cond = self.expr()?;
                self.expect(TokenKind::RParen)?;
                let then_branch = Box::new(self.block()?);
                let else_branch = if self.eat(&TokenKind::KwElse) {
                    if *self.peek() == TokenKind::KwIf {
                        Some(Box::new(self.stmt()?))
                    } else {
                        Some(Box::new(self.block()?))
                    }
                } else {
                    None
                };
                Ok(Stmt::If { cond, then_branch, else_branch, span })
            }
            TokenKind::KwWhile => {
                self.advance();
                self.expect(TokenKind::LParen)?;
                let cond = self.expr()?;
                self.expect(TokenKind::RParen)?;
                self.expect(TokenKind::KwInvariant)?;
                self.expect(TokenKind::LParen)?;
                let invariant = self.expr()?;
                self.expect(TokenKind::RParen)?;
                let body = Box::new(self.block()?);
                Ok(Stmt::While { cond, invariant, body, span })
            }
            TokenKind::KwReturn => {
                self.advance();
                let value = if *self.peek() == TokenKind::Semi { None } else { Some(self.expr()?) };
                self.expect(TokenKind::Semi)?;
                Ok(Stmt::Return { value, span })
            }
            _ => Err(self.unexpected(&["statement"])),
        }
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn binop(&self) -> Option<BinOp> {
        Some(match self.peek() {
            TokenKind::Implies => BinOp::Implies,
            TokenKind::OrOr => BinOp::Or,
            TokenKind::AndAnd => BinOp::And,
            TokenKind::EqEq => BinOp::Eq,
            TokenKind::NotEq => BinOp::Ne,
            TokenKind::Lt => BinOp::Lt,
            TokenKind::Le => BinOp::Le,
            TokenKind::Gt => BinOp::Gt,
            TokenKind::Ge => BinOp::Ge,
            TokenKind::Plus => BinOp::Add,
            TokenKind::Minus => BinOp::Sub,
            TokenKind::Star => BinOp::Mul,
            TokenKind::Slash => BinOp::Div,
            _ => return None,
        })
    }

    /// Precedence climbing; all operators are left-associative except `==>`.
    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.advance();
            let next_min = if op.is_right_assoc() { prec } else { prec + 1 };
            let rhs = self.binary(next_min)?;
            lhs = Expr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        match self.peek() {
            TokenKind::Bang => {
                self.advance();
                Ok(Expr::Unary(UnOp::Not, Box::new(self.unary()?)))
            }
            TokenKind::Minus => {
                self.advance();
                if let TokenKind::Int(n) = *self.peek() {
                    self.advance();
                    return Ok(Expr::Int(n.wrapping_neg()));
                }
                Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary()?)))
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            TokenKind::Int(n) => {
                self.advance();
                Ok(Expr::Int(n))
            }
            TokenKind::KwTrue => {
                self.advance();
                Ok(Expr::Bool(true))
            }
            TokenKind::KwFalse => {
                self.advance();
                Ok(Expr::Bool(false))
            }
            TokenKind::Ident(n) => {
                self.advance();
                Ok(Expr::Var(n))
            }
            TokenKind::Result => {
                self.advance();
                Ok(Expr::Result)
            }
            TokenKind::KwOld => {
                self.advance();
                self.expect(TokenKind::LParen)?;
                let e = self.expr()?;
                self.expect(TokenKind::RParen)?;
                Ok(Expr::Old(Box::new(e)))
            }
            TokenKind::LParen => {
                self.advance();
                let e = self.expr()?;
                self.expect(TokenKind::RParen)?;
                Ok(e)
            }
            _ => Err(self.unexpected(&["expression"])),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CMP: &str =
        "int cmp(int a, int b){ int c; c = a; if (c < b) { return -1; } else { if (c > b) { return 1; } } return 0; }";

    #[test]
    fn parses_cmp() {
        let p = parse(CMP).unwrap();
        assert_eq!(p.methods.len(), 1);
        let m = &p.methods[0];
        assert_eq!(m.name, "cmp");
        assert_eq!(m.params.len(), 2);
        let body = m.body_stmts();
        assert_eq!(body.len(), 4);
        assert!(matches!(body[0], Stmt::Local { init: None, .. }));
        assert!(matches!(body[1], Stmt::Assign { .. }));
        match &body[2] {
            Stmt::If { else_branch: Some(e), .. } => match &**e {
                Stmt::Block { stmts, .. } => assert!(matches!(stmts[0], Stmt::If { else_branch: None, .. })),
                other => panic!("unexpected else branch {other:?}"),
            },
            other => panic!("expected if, got {other:?}"),
        }
        assert!(matches!(body[3], Stmt::Return { value: Some(Expr::Int(0)), .. }));
    }

    #[test]
    fn empty_file_is_empty_program() {
        assert_eq!(parse("").unwrap(), Program::default());
        assert_eq!(parse("  // nothing here\n").unwrap(), Program::default());
    }

    #[test]
    fn missing_rhs_reports_semicolon() {
        let src = "int f() {\n  int x;\n  x = ;\n  return 0;\n}";
        let errs = parse(src).unwrap_err().0;
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].span, Span::new(3, 7));
        assert!(errs[0].message.contains("`;`"), "{}", errs[0].message);
        assert_eq!(errs[0].expected, vec!["expression".to_string()]);
    }

    #[test]
    fn recovers_and_reports_several_errors() {
        let src = "int f() { x = ; y = ; return 0; }";
        assert_eq!(parse(src).unwrap_err().0.len(), 2);
    }

    #[test]
    fn duplicate_declarations() {
        let errs = parse("global int g; global int g; void f(int a, int a) { }").unwrap_err().0;
        assert_eq!(errs.len(), 2);
        assert!(errs.iter().all(|e| e.message.contains("duplicate")));
    }

    #[test]
    fn precedence_and_negative_literals() {
        let e = parse_expr("a + b * 2 < -1 && !p || q ==> r ==> s").unwrap();
        assert_eq!(e.to_string(), "a + b * 2 < -1 && !p || q ==> r ==> s");
        match e {
            Expr::Binary(BinOp::Implies, _, r) => assert!(matches!(*r, Expr::Binary(BinOp::Implies, _, _))),
            other => panic!("{other:?}"),
        }
        assert_eq!(parse_expr("a - -1").unwrap(), Expr::bin(BinOp::Sub, Expr::var("a"), Expr::Int(-1)));
    }

    #[test]
    fn spec_atoms() {
        let e = parse_expr("g == old(g) + 1").unwrap();
        assert!(e.mentions_old());
        assert!(parse_expr("\\result == c$1").unwrap().mentions_result());
    }
}
