//! Pratt parser for the expression grammar. Precedence, tightest first:
//! `^`, unary `-`, `*` `/`, `+` `-`; all binary operators associate left.

use super::ast::{BinOp, Expr, FuncOp, VarRef};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn tokens(mut self) -> Result<Vec<(usize, Tok)>> {
        let mut out = Vec::new();
        while self.pos < self.src.len() {
            let start = self.pos;
            let c = self.src[self.pos];
            match c {
                b' ' | b'\t' | b'\r' | b'\n' => {
                    self.pos += 1;
                }
                b'+' => {
                    self.pos += 1;
                    out.push((start, Tok::Plus));
                }
                b'-' => {
                    self.pos += 1;
                    out.push((start, Tok::Minus));
                }
                b'*' => {
                    self.pos += 1;
                    out.push((start, Tok::Star));
                }
                b'/' => {
                    self.pos += 1;
                    out.push((start, Tok::Slash));
                }
                b'^' => {
                    self.pos += 1;
                    out.push((start, Tok::Caret));
                }
                b'(' => {
                    self.pos += 1;
                    out.push((start, Tok::LParen));
                }
                b')' => {
                    self.pos += 1;
                    out.push((start, Tok::RParen));
                }
                b'0'..=b'9' | b'.' => {
                    out.push((start, self.number(start)?));
                }
                c if c.is_ascii_alphabetic() || c == b'_' => {
                    while self.pos < self.src.len()
                        && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                    {
                        self.pos += 1;
                    }
                    let name = std::str::from_utf8(&self.src[start..self.pos])
                        .unwrap()
                        .to_string();
                    out.push((start, Tok::Ident(name)));
                }
                other => {
                    return Err(Error::Parse {
                        pos: start,
                        msg: format!("unexpected character `{}`", other as char),
                    })
                }
            }
        }
        Ok(out)
    }

    fn number(&mut self, start: usize) -> Result<Tok> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        if self.pos < self.src.len() && (self.src[self.pos] | 0x20) == b'e' {
            let mark = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && (self.src[self.pos] == b'+' || self.src[self.pos] == b'-')
            {
                self.pos += 1;
            }
            if self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                // Not an exponent after all (e.g. an identifier follows).
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<f64>().map(Tok::Num).map_err(|_| Error::Parse {
            pos: start,
            msg: format!("invalid numeric literal `{text}`"),
        })
    }
}

/// Resolution context: number of freedoms plus the declared parameter names.
pub struct VarContext<'a> {
    pub n: usize,
    pub param_names: &'a [String],
}

impl VarContext<'_> {
    /// Coordinate names `q1..qn`, `p1..pn` win; anything else (including
    /// out-of-range coordinate-shaped names) falls through to the declared
    /// parameters.
    fn resolve(&self, name: &str, pos: usize) -> Result<VarRef> {
        if let Some((is_q, i)) = parse_coord(name) {
            if i >= 1 && i <= self.n {
                return Ok(if is_q { VarRef::Q(i - 1) } else { VarRef::P(i - 1) });
            }
        }
        if let Some(i) = self.param_names.iter().position(|p| p == name) {
            return Ok(VarRef::Param(i));
        }
        Err(Error::UnknownIdentifier {
            name: name.to_string(),
            pos,
        })
    }
}

/// `q<digits>` / `p<digits>` coordinate names (1-based).
fn parse_coord(name: &str) -> Option<(bool, usize)> {
    let mut chars = name.chars();
    let head = chars.next()?;
    let rest = chars.as_str();
    if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    match head {
        'q' => Some((true, rest.parse().ok()?)),
        'p' => Some((false, rest.parse().ok()?)),
        _ => None,
    }
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    cursor: usize,
    ctx: &'a VarContext<'a>,
    src_len: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.cursor).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks
            .get(self.cursor)
            .map(|(p, _)| *p)
            .unwrap_or(self.src_len)
    }

    fn bump(&mut self) -> Option<(usize, Tok)> {
        let t = self.toks.get(self.cursor).cloned();
        self.cursor += 1;
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        match self.bump() {
            Some((_, t)) if t == tok => Ok(()),
            Some((p, t)) => Err(Error::Parse {
                pos: p,
                msg: format!("expected {what}, found {t:?}"),
            }),
            None => Err(Error::Parse {
                pos: self.src_len,
                msg: format!("expected {what}, found end of input"),
            }),
        }
    }

    fn expr(&mut self, min_bp: u8) -> Result<Expr> {
        let mut lhs = self.prefix()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => BinOp::Add,
                Some(Tok::Minus) => BinOp::Sub,
                Some(Tok::Star) => BinOp::Mul,
                Some(Tok::Slash) => BinOp::Div,
                Some(Tok::Caret) => BinOp::Pow,
                _ => break,
            };
            let (lbp, rbp) = match op {
                BinOp::Add | BinOp::Sub => (1, 2),
                BinOp::Mul | BinOp::Div => (3, 4),
                BinOp::Pow => (7, 8),
            };
            if lbp < min_bp {
                break;
            }
            self.bump();
            let rhs = self.expr(rbp)?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Expr> {
        match self.bump() {
            Some((_, Tok::Num(x))) => Ok(Expr::Number(x)),
            Some((_, Tok::Minus)) => {
                // Unary minus binds tighter than * and / but looser than ^.
                let operand = self.expr(5)?;
                // A minus applied directly to a literal is part of the literal.
                Ok(match operand {
                    Expr::Number(x) => Expr::Number(-x),
                    other => Expr::Neg(Box::new(other)),
                })
            }
            Some((_, Tok::LParen)) => {
                let inner = self.expr(0)?;
                self.expect(Tok::RParen, "closing parenthesis")?;
                Ok(inner)
            }
            Some((p, Tok::Ident(name))) => {
                if self.peek() == Some(&Tok::LParen) {
                    let func = FuncOp::from_name(&name).ok_or_else(|| Error::Parse {
                        pos: p,
                        msg: format!("unknown function `{name}`"),
                    })?;
                    self.bump();
                    let arg = self.expr(0)?;
                    self.expect(Tok::RParen, "closing parenthesis")?;
                    Ok(Expr::Func(func, Box::new(arg)))
                } else if FuncOp::from_name(&name).is_some() {
                    Err(Error::Parse {
                        pos: p,
                        msg: format!("function `{name}` requires an argument list"),
                    })
                } else {
                    Ok(Expr::Var(self.ctx.resolve(&name, p)?))
                }
            }
            Some((p, t)) => Err(Error::Parse {
                pos: p,
                msg: format!("unexpected token {t:?}"),
            }),
            None => Err(Error::Parse {
                pos: self.src_len,
                msg: "unexpected end of input".into(),
            }),
        }
    }
}

/// Parse a complete expression; trailing tokens are an error. Constant
/// exponents are folded into `PowInt`/`PowReal` nodes.
pub fn parse(source: &str, ctx: &VarContext) -> Result<Expr> {
    let toks = Lexer::new(source).tokens()?;
    if toks.is_empty() {
        return Err(Error::Parse {
            pos: 0,
            msg: "empty expression".into(),
        });
    }
    let mut parser = Parser {
        toks,
        cursor: 0,
        ctx,
        src_len: source.len(),
    };
    let expr = parser.expr(0)?;
    if parser.cursor != parser.toks.len() {
        return Err(Error::Parse {
            pos: parser.pos(),
            msg: "trailing input after expression".into(),
        });
    }
    Ok(expr.fold_powers())
}
