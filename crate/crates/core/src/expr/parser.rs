use super::{BinOp, Constant, Expr, Func};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    /// Next token and the byte offset where it starts.
    fn next(&mut self) -> Result<(Tok, usize)> {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.src[start..];
        let Some(c) = rest.chars().next() else {
            return Ok((Tok::End, start));
        };
        let tok = match c {
            '0'..='9' | '.' => return self.number(start),
            'a'..='z' | 'A'..='Z' | '_' => {
                let len = rest
                    .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_'))
                    .unwrap_or(rest.len());
                self.pos += len;
                return Ok((Tok::Ident(rest[..len].to_string()), start));
            }
            '+' | '*' | '/' | '^' | '-' => Tok::Op(c),
            '\u{2212}' => Tok::Op('-'),
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            other => {
                return Err(Error::Parse {
                    offset: start,
                    message: format!("unexpected character '{other}'"),
                })
            }
        };
        self.pos += c.len_utf8();
        Ok((tok, start))
    }

    fn number(&mut self, start: usize) -> Result<(Tok, usize)> {
        let bytes = self.src.as_bytes();
        let mut i = start;
        let digits = |i: &mut usize| {
            while *i < bytes.len() && bytes[*i].is_ascii_digit() {
                *i += 1;
            }
        };
        digits(&mut i);
        if i < bytes.len() && bytes[i] == b'.' {
            i += 1;
            digits(&mut i);
        }
        // exponent only when digits follow; `2*e` is the constant
        if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
            let mut j = i + 1;
            if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                j += 1;
            }
            if j < bytes.len() && bytes[j].is_ascii_digit() {
                i = j;
                digits(&mut i);
            }
        }
        let text = &self.src[start..i];
        let value: f64 = text.parse().map_err(|_| Error::Parse {
            offset: start,
            message: format!("malformed number '{text}'"),
        })?;
        self.pos = i;
        Ok((Tok::Num(value), start))
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    at: usize,
    vars: &'a [String],
}

impl<'a> Parser<'a> {
    fn bump(&mut self) -> Result<()> {
        let (tok, at) = self.lexer.next()?;
        self.tok = tok;
        self.at = at;
        Ok(())
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse { offset: self.at, message: message.into() })
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.tok {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.tok {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.tok == Tok::Op('-') {
            self.bump()?;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if self.tok == Tok::Op('^') {
            self.bump()?;
            let exponent = self.unary()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.tok.clone() {
            Tok::Num(x) => {
                self.bump()?;
                Ok(Expr::Num(x))
            }
            Tok::Ident(name) => {
                let at = self.at;
                self.bump()?;
                if let Some(func) = Func::from_name(&name) {
                    if self.tok != Tok::LParen {
                        return self.error(format!("function {name} requires an argument"));
                    }
                    self.bump()?;
                    if self.tok == Tok::RParen {
                        return self.error(format!("empty argument to {name}"));
                    }
                    let arg = self.expr()?;
                    self.expect_close()?;
                    return Ok(Expr::Call(func, Box::new(arg)));
                }
                if self.tok == Tok::LParen {
                    return Err(Error::Parse { offset: at, message: format!("unknown function {name}") });
                }
                if let Some(i) = self.vars.iter().position(|v| *v == name) {
                    return Ok(Expr::Var(i));
                }
                match name.as_str() {
                    "pi" => Ok(Expr::Const(Constant::Pi)),
                    "e" => Ok(Expr::Const(Constant::E)),
                    _ => Err(Error::Parse { offset: at, message: format!("undeclared identifier {name}") }),
                }
            }
            Tok::LParen => {
                self.bump()?;
                if self.tok == Tok::RParen {
                    return self.error("empty parentheses");
                }
                let inner = self.expr()?;
                self.expect_close()?;
                Ok(inner)
            }
            Tok::RParen => self.error("unbalanced parentheses: unexpected ')'"),
            Tok::End => self.error("unexpected end of expression"),
            Tok::Op(c) => self.error(format!("unexpected operator '{c}'")),
        }
    }

    fn expect_close(&mut self) -> Result<()> {
        if self.tok != Tok::RParen {
            return self.error("unbalanced parentheses: expected ')'");
        }
        self.bump()
    }
}

/// Parses `source` against the declared variable names.
///
/// Variable names shadow the constants `pi` and `e`; function names are
/// reserved.
pub fn parse_expression(source: &str, vars: &[String]) -> Result<Expr> {
    if source.trim().is_empty() {
        return Err(Error::Parse { offset: 0, message: "empty expression".into() });
    }
    for v in vars {
        if Func::from_name(v).is_some() {
            return Err(Error::InvalidParams(format!("variable name {v} is a function name")));
        }
    }
    let mut parser = Parser { lexer: Lexer { src: source, pos: 0 }, tok: Tok::End, at: 0, vars };
    parser.bump()?;
    let expr = parser.expr()?;
    match parser.tok {
        Tok::End => Ok(expr),
        Tok::RParen => parser.error("unbalanced parentheses: unexpected ')'"),
        _ => parser.error("unexpected trailing input"),
    }
}
