use std::sync::Arc;

use num::{BigInt, One, Zero};

use super::poly::SuperPoly;
use super::variable::VarTable;
use super::Q;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigInt),
    Ident(String),
    Op(char),
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].1.is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().map(|&(_, c)| c).collect();
            out.push((pos, Tok::Num(s.parse().expect("digits"))));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_ascii_alphanumeric() || chars[i].1 == '_') {
                i += 1;
            }
            out.push((
                pos,
                Tok::Ident(chars[start..i].iter().map(|&(_, c)| c).collect()),
            ));
        } else if "+-*/^()".contains(c) || c == '\u{2212}' {
            out.push((pos, Tok::Op(if c == '\u{2212}' { '-' } else { c })));
            i += 1;
        } else {
            return Err(Error::Syntax {
                pos,
                msg: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
    table: &'a Arc<VarTable>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<SuperPoly> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = &acc + &self.term()?;
            } else if self.eat('-') {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<SuperPoly> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = &acc * &self.unary()?;
            } else if self.peek() == Some(&Tok::Op('/')) {
                let pos = self.pos();
                self.at += 1;
                let d = self.unary()?;
                match d.as_constant() {
                    Some(c) if !c.is_zero() => acc = acc.scale(&(Q::one() / c)),
                    _ => {
                        return Err(Error::Syntax {
                            pos,
                            msg: "division by a non-constant or zero".into(),
                        })
                    }
                }
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<SuperPoly> {
        if self.eat('-') {
            return Ok(-&self.unary()?);
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<SuperPoly> {
        let start = self.at;
        let base = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let pos = self.pos();
        let e = match self.toks.get(self.at) {
            Some((_, Tok::Num(n))) => {
                let n = n.clone();
                self.at += 1;
                u32::try_from(n).map_err(|_| Error::Syntax {
                    pos,
                    msg: "exponent too large".into(),
                })?
            }
            _ => {
                return Err(Error::Syntax {
                    pos,
                    msg: "expected a non-negative integer exponent".into(),
                })
            }
        };
        if let Some((p, Tok::Ident(name))) = self.toks.get(start) {
            if self.at == start + 3 && e > 1 {
                let v = self.table.id(name);
                if self.table.is_nilpotent(v) {
                    return Err(Error::OddPower {
                        pos: *p,
                        name: name.clone(),
                    });
                }
            }
        }
        Ok(base.pow(e))
    }

    fn atom(&mut self) -> Result<SuperPoly> {
        let pos = self.pos();
        match self.toks.get(self.at).cloned() {
            Some((_, Tok::Num(n))) => {
                self.at += 1;
                Ok(SuperPoly::constant(self.table, Q::from_integer(n)))
            }
            Some((_, Tok::Ident(name))) => {
                self.at += 1;
                match self.table.lookup(&name) {
                    Some(v) => Ok(SuperPoly::var(self.table, v)),
                    None => Err(Error::UnknownIdentifier { pos, name }),
                }
            }
            Some((_, Tok::Op('('))) => {
                self.at += 1;
                let inner = self.expr()?;
                if !self.eat(')') {
                    return Err(Error::Syntax {
                        pos: self.pos(),
                        msg: "expected `)`".into(),
                    });
                }
                Ok(inner)
            }
            Some((_, t)) => Err(Error::Syntax {
                pos,
                msg: format!("unexpected token {t:?}"),
            }),
            None => Err(Error::Syntax {
                pos,
                msg: "unexpected end of input".into(),
            }),
        }
    }
}

/// Parses an expression over the generators of `table`.
///
/// Grammar: rationals, identifiers, `+ - * / ^` and parentheses. Division is
/// only by nonzero constants; products keep the written order of generators.
pub fn parse_expression(text: &str, table: &Arc<VarTable>) -> Result<SuperPoly> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        at: 0,
        end: text.len(),
        table,
    };
    let out = p.expr()?;
    if p.at != p.toks.len() {
        return Err(Error::Syntax {
            pos: p.pos(),
            msg: "trailing input".into(),
        });
    }
    Ok(out)
}
