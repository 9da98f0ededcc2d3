use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::diag::{codes, Diagnostic};
use crate::span::Span;

pub const KEYWORDS: &[&str] = &[
    "interface",
    "var",
    "event",
    "op",
    "machine",
    "requires",
    "clock",
    "initial",
    "final",
    "state",
    "entry",
    "during",
    "exit",
    "transition",
    "on",
    "operation",
    "pre",
    "post",
    "module",
    "platform",
    "controller",
    "boolean",
    "int",
    "real",
    "vector2d",
    "true",
    "false",
    "and",
    "or",
    "not",
    "since",
    "vec2",
];

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Kw(&'static str),
    Int(i64),
    Real(f64),
    Sym(&'static str),
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Kw(k) => format!("keyword `{k}`"),
            Tok::Int(i) => format!("integer `{i}`"),
            Tok::Real(r) => format!("real `{r:?}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => String::from("end of input"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

// Longest first so that `:=` wins over `:` and `->` over `-`.
const SYMBOLS: &[&str] = &[
    ":=", "->", "==", "!=", "<=", ">=", "{", "}", "(", ")", "[", "]", ",", ";", ":", "=", "/", "#",
    "?", "+", "-", "*", "<", ">",
];

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    col: u32,
}

impl Cursor<'_> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.src[self.pos..].chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn mark(&self) -> (usize, u32, u32) {
        (self.pos, self.line, self.col)
    }

    fn span_from(&self, (start, line, col): (usize, u32, u32)) -> Span {
        Span {
            start,
            end: self.pos,
            line,
            col,
            end_line: self.line,
            end_col: self.col,
        }
    }
}

/// Split `src` into tokens. The final token is always `Eof`.
pub fn tokenize(src: &str) -> Result<Vec<Token>, Vec<Diagnostic>> {
    let mut cur = Cursor {
        src,
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut tokens = Vec::new();
    let mut errors = Vec::new();

    while let Some(c) = cur.peek() {
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == '/' && cur.peek2() == Some('/') {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }
        let start = cur.mark();
        if c.is_ascii_alphabetic() || c == '_' {
            while matches!(cur.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                cur.bump();
            }
            let text = &src[start.0..cur.pos];
            let tok = match KEYWORDS.iter().find(|k| **k == text) {
                Some(k) => Tok::Kw(k),
                None => Tok::Ident(String::from(text)),
            };
            tokens.push(Token {
                tok,
                span: cur.span_from(start),
            });
            continue;
        }
        if c.is_ascii_digit() {
            match lex_number(&mut cur) {
                Ok(tok) => tokens.push(Token {
                    tok,
                    span: cur.span_from(start),
                }),
                Err(msg) => {
                    errors.push(Diagnostic::error(codes::LEXICAL, cur.span_from(start), msg))
                }
            }
            continue;
        }
        let rest = &src[cur.pos..];
        if let Some(sym) = SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            for _ in 0..sym.len() {
                cur.bump();
            }
            tokens.push(Token {
                tok: Tok::Sym(sym),
                span: cur.span_from(start),
            });
            continue;
        }
        cur.bump();
        errors.push(Diagnostic::error(
            codes::LEXICAL,
            cur.span_from(start),
            format!("unexpected character `{}`", c.escape_default()),
        ));
    }

    let start = cur.mark();
    tokens.push(Token {
        tok: Tok::Eof,
        span: cur.span_from(start),
    });
    if errors.is_empty() {
        Ok(tokens)
    } else {
        Err(errors)
    }
}

fn lex_number(cur: &mut Cursor<'_>) -> Result<Tok, String> {
    let start = cur.pos;
    let mut is_real = false;
    while matches!(cur.peek(), Some(c) if c.is_ascii_digit()) {
        cur.bump();
    }
    if cur.peek() == Some('.') && matches!(cur.peek2(), Some(c) if c.is_ascii_digit()) {
        is_real = true;
        cur.bump();
        while matches!(cur.peek(), Some(c) if c.is_ascii_digit()) {
            cur.bump();
        }
    }
    if matches!(cur.peek(), Some('e' | 'E')) {
        let save = (cur.pos, cur.line, cur.col);
        cur.bump();
        if matches!(cur.peek(), Some('+' | '-')) {
            cur.bump();
        }
        if matches!(cur.peek(), Some(c) if c.is_ascii_digit()) {
            is_real = true;
            while matches!(cur.peek(), Some(c) if c.is_ascii_digit()) {
                cur.bump();
            }
        } else {
            (cur.pos, cur.line, cur.col) = save;
        }
    }
    if matches!(cur.peek(), Some(c) if c.is_ascii_alphabetic() || c == '_') {
        while matches!(cur.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
            cur.bump();
        }
        return Err(format!("malformed number `{}`", &cur.src[start..cur.pos]));
    }
    let text = &cur.src[start..cur.pos];
    if is_real {
        text.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(Tok::Real)
            .ok_or_else(|| format!("real literal `{text}` out of range"))
    } else {
        text.parse::<i64>()
            .map(Tok::Int)
            .map_err(|_| format!("integer literal `{text}` out of range"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn symbols_prefer_longest_match() {
        assert_eq!(
            toks("a := b -> c <= 1.5"),
            [
                Tok::Ident("a".into()),
                Tok::Sym(":="),
                Tok::Ident("b".into()),
                Tok::Sym("->"),
                Tok::Ident("c".into()),
                Tok::Sym("<="),
                Tok::Real(1.5),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn reals_need_a_point_or_exponent() {
        assert_eq!(
            toks("25 25.0 1e-7"),
            [Tok::Int(25), Tok::Real(25.0), Tok::Real(1e-7), Tok::Eof]
        );
    }

    #[test]
    fn comments_and_positions() {
        let t = tokenize("// hello\n  state").unwrap();
        assert_eq!(t[0].tok, Tok::Kw("state"));
        assert_eq!((t[0].span.line, t[0].span.col), (2, 3));
        assert_eq!((t[0].span.start, t[0].span.end), (11, 16));
    }

    #[test]
    fn bad_character_is_reported_with_span() {
        let errs = tokenize("state A @ {}").unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].code, codes::LEXICAL);
        assert_eq!((errs[0].span.start, errs[0].span.end), (8, 9));
    }

    #[test]
    fn integer_overflow_is_lexical() {
        assert!(tokenize("99999999999999999999").is_err());
        assert!(tokenize("12abc").is_err());
    }
}
