use std::fmt;

use super::ast::Span;
use super::parser::SyntaxError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Int(i64),
    Ident(String),
    // keywords
    KwInt,
    KwBool,
    KwVoid,
    KwGlobal,
    KwIf,
    KwElse,
    KwWhile,
    KwInvariant,
    KwReturn,
    KwSkip,
    KwTrue,
    KwFalse,
    KwOld,
    Result,
    // punctuation
    LParen,
    RParen,
    LBrace,
    RBrace,
    Semi,
    Comma,
    Assign,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    AndAnd,
    OrOr,
    Bang,
    Implies,
    Eof,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TokenKind::Int(n) => return write!(f, "integer `{n}`"),
            TokenKind::Ident(n) => return write!(f, "identifier `{n}`"),
            TokenKind::KwInt => "`int`",
            TokenKind::KwBool => "`bool`",
            TokenKind::KwVoid => "`void`",
            TokenKind::KwGlobal => "`global`",
            TokenKind::KwIf => "`if`",
            TokenKind::KwElse => "`else`",
            TokenKind::KwWhile => "`while`",
            TokenKind::KwInvariant => "`invariant`",
            TokenKind::KwReturn => "`return`",
            TokenKind::KwSkip => "`skip`",
            TokenKind::KwTrue => "`true`",
            TokenKind::KwFalse => "`false`",
            TokenKind::KwOld => "`old`",
            TokenKind::Result => "`\\result`",
            TokenKind::LParen => "`(`",
            TokenKind::RParen => "`)`",
            TokenKind::LBrace => "`{`",
            TokenKind::RBrace => "`}`",
            TokenKind::Semi => "`;`",
            TokenKind::Comma => "`,`",
            TokenKind::Assign => "`=`",
            TokenKind::EqEq => "`==`",
            TokenKind::NotEq => "`!=`",
            TokenKind::Lt => "`<`",
            TokenKind::Le => "`<=`",
            TokenKind::Gt => "`>`",
            TokenKind::Ge => "`>=`",
            TokenKind::Plus => "`+`",
            TokenKind::Minus => "`-`",
            TokenKind::Star => "`*`",
            TokenKind::Slash => "`/`",
            TokenKind::AndAnd => "`&&`",
            TokenKind::OrOr => "`||`",
            TokenKind::Bang => "`!`",
            TokenKind::Implies => "`==>`",
            TokenKind::Eof => "end of input",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

/// Whether `$`-versioned names (`x$3`) are accepted. Source files never contain them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LexMode {
    Source,
    Spec,
}

pub fn tokenize(src: &str, mode: LexMode) -> Result<Vec<Token>, SyntaxError> {
    let chars: Vec<char> = src.chars().collect();
    let mut toks = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        let span = Span::new(line, col);
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                bump!();
            }
            let text: String = chars[start..i].iter().collect();
            let n = text.parse::<i64>().map_err(|_| SyntaxError {
                span,
                message: format!("integer literal `{text}` out of range"),
                expected: Vec::new(),
            })?;
            toks.push(Token { kind: TokenKind::Int(n), span });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                bump!();
            }
            // version suffixes: `x$3`, possibly repeated (`x$3$1`)
            while i < chars.len() && chars[i] == '$' {
                if mode == LexMode::Source {
                    return Err(SyntaxError {
                        span: Span::new(line, col),
                        message: "`$` is not allowed in source identifiers".into(),
                        expected: Vec::new(),
                    });
                }
                bump!();
                let digits = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    bump!();
                }
                if digits == i {
                    return Err(SyntaxError {
                        span: Span::new(line, col),
                        message: "expected version number after `$`".into(),
                        expected: Vec::new(),
                    });
                }
            }
            let word: String = chars[start..i].iter().collect();
            let kind = match word.as_str() {
                "int" => TokenKind::KwInt,
                "bool" => TokenKind::KwBool,
                "void" => TokenKind::KwVoid,
                "global" => TokenKind::KwGlobal,
                "if" => TokenKind::KwIf,
                "else" => TokenKind::KwElse,
                "while" => TokenKind::KwWhile,
                "invariant" => TokenKind::KwInvariant,
                "return" => TokenKind::KwReturn,
                "skip" => TokenKind::KwSkip,
                "true" => TokenKind::KwTrue,
                "false" => TokenKind::KwFalse,
                "old" => TokenKind::KwOld,
                _ => TokenKind::Ident(word),
            };
            toks.push(Token { kind, span });
            continue;
        }
        if c == '\\' {
            let start = i;
            bump!();
            while i < chars.len() && chars[i].is_ascii_alphabetic() {
                bump!();
            }
            let word: String = chars[start..i].iter().collect();
            if word == "\\result" {
                toks.push(Token { kind: TokenKind::Result, span });
                continue;
            }
            return Err(SyntaxError { span, message: format!("unknown keyword `{word}`"), expected: Vec::new() });
        }
        let next = chars.get(i + 1).copied();
        let next2 = chars.get(i + 2).copied();
        let (kind, len) = match (c, next) {
            ('=', Some('=')) if next2 == Some('>') => (TokenKind::Implies, 3),
            ('=', Some('=')) => (TokenKind::EqEq, 2),
            ('!', Some('=')) => (TokenKind::NotEq, 2),
            ('<', Some('=')) => (TokenKind::Le, 2),
            ('>', Some('=')) => (TokenKind::Ge, 2),
            ('&', Some('&')) => (TokenKind::AndAnd, 2),
            ('|', Some('|')) => (TokenKind::OrOr, 2),
            ('=', _) => (TokenKind::Assign, 1),
            ('<', _) => (TokenKind::Lt, 1),
            ('>', _) => (TokenKind::Gt, 1),
            ('!', _) => (TokenKind::Bang, 1),
            ('+', _) => (TokenKind::Plus, 1),
            ('-', _) => (TokenKind::Minus, 1),
            ('*', _) => (TokenKind::Star, 1),
            ('/', _) => (TokenKind::Slash, 1),
            ('(', _) => (TokenKind::LParen, 1),
            (')', _) => (TokenKind::RParen, 1),
            ('{', _) => (TokenKind::LBrace, 1),
            ('}', _) => (TokenKind::RBrace, 1),
            (';', _) => (TokenKind::Semi, 1),
            (',', _) => (TokenKind::Comma, 1),
            _ => {
                return Err(SyntaxError { span, message: format!("unexpected character `{c}`"), expected: Vec::new() })
            }
        };
        for _ in 0..len {
            bump!();
        }
        toks.push(Token { kind, span });
    }
    toks.push(Token { kind: TokenKind::Eof, span: Span::new(line, col) });
    Ok(toks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src, LexMode::Spec).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn versioned_names_only_in_spec_mode() {
        assert_eq!(kinds("c$1"), vec![TokenKind::Ident("c$1".into()), TokenKind::Eof]);
        assert!(tokenize("c$1", LexMode::Source).is_err());
    }

    #[test]
    fn implication_and_result() {
        assert_eq!(
            kinds("a ==> \\result == b"),
            vec![
                TokenKind::Ident("a".into()),
                TokenKind::Implies,
                TokenKind::Result,
                TokenKind::EqEq,
                TokenKind::Ident("b".into()),
                TokenKind::Eof
            ]
        );
    }

    #[test]
    fn positions_track_lines() {
        let toks = tokenize("int\n  x;", LexMode::Source).unwrap();
        assert_eq!(toks[1].span, Span::new(2, 3));
    }
}
