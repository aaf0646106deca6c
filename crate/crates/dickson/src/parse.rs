//! The expression grammar shared by the CLI and the text serialization:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := ['-'] factor ('*'? factor)*
//! factor := atom ('^' hat)? ('^' INT)?
//! atom   := INT | ('x'|'y') INT | NAME '[' args ']' | '(' expr ')'
//! ```
//!
//! A `^` not followed by a digit is the hat mark (`h[1]^` is `hhat[1]`).
//! Generator names: `h`, `hhat`, `homit`, `hswap`, `L`, `Lhat`, `d`,
//! `dhat` (with `d[m,i;I=1,m-1]` for the parabolic truncation), `M`,
//! `Mhat`. Integer coefficients reduce mod p. Errors carry the byte
//! offset.

use crate::genexpr::{GenExpr, GenSymbol};
use crate::superpoly::SuperPoly;
use crate::{Error, Result};

/// Exponents past this are rejected at parse time.
const MAX_EXPONENT: u32 = 9999;

/// A parsed expression: formal when no raw variables occur, expanded
/// otherwise.
#[derive(Debug, Clone)]
pub enum Parsed {
    Gen(GenExpr),
    Super(SuperPoly),
}

impl Parsed {
    pub fn into_superpoly(self) -> Result<SuperPoly> {
        match self {
            Parsed::Gen(g) => g.expand(),
            Parsed::Super(s) => Ok(s),
        }
    }

    pub fn into_genexpr(self) -> Result<GenExpr> {
        match self {
            Parsed::Gen(g) => Ok(g),
            Parsed::Super(_) => Err(Error::MixedExpression),
        }
    }
}

/// Parse under the grammar; the result is a `GenExpr` exactly when the text
/// contains no raw `x`/`y` variables.
pub fn parse_expr(text: &str, p: u32, n: usize) -> Result<Parsed> {
    let mut parser = Parser { bytes: text.as_bytes(), pos: 0, n };
    parser.skip_ws();
    if parser.at_end() {
        return Err(parser.err("empty expression"));
    }
    let ast = parser.expr()?;
    parser.skip_ws();
    if !parser.at_end() {
        return Err(parser.err("trailing input"));
    }
    if ast_has_vars(&ast) {
        Ok(Parsed::Super(eval_super(&ast, p, n)?))
    } else {
        Ok(Parsed::Gen(eval_gen(&ast, p, n)?))
    }
}

pub fn parse_superpoly(text: &str, p: u32, n: usize) -> Result<SuperPoly> {
    parse_expr(text, p, n)?.into_superpoly()
}

pub fn parse_genexpr(text: &str, p: u32, n: usize) -> Result<GenExpr> {
    parse_expr(text, p, n)?.into_genexpr()
}

#[derive(Debug, Clone)]
enum Ast {
    Int(i64),
    VarX(usize),
    VarY(usize),
    Gen(GenSymbol),
    Neg(Box<Ast>),
    Add(Box<Ast>, Box<Ast>),
    Sub(Box<Ast>, Box<Ast>),
    Mul(Box<Ast>, Box<Ast>),
    Pow(Box<Ast>, u32),
}

fn ast_has_vars(a: &Ast) -> bool {
    match a {
        Ast::Int(_) | Ast::Gen(_) => false,
        Ast::VarX(_) | Ast::VarY(_) => true,
        Ast::Neg(x) | Ast::Pow(x, _) => ast_has_vars(x),
        Ast::Add(x, y) | Ast::Sub(x, y) | Ast::Mul(x, y) => {
            ast_has_vars(x) || ast_has_vars(y)
        }
    }
}

fn eval_super(a: &Ast, p: u32, n: usize) -> Result<SuperPoly> {
    match a {
        Ast::Int(v) => SuperPoly::scalar(p, n, *v),
        Ast::VarX(i) => SuperPoly::var_x(p, n, *i),
        Ast::VarY(i) => SuperPoly::var_y(p, n, *i),
        Ast::Gen(sym) => sym.expand(p, n),
        Ast::Neg(x) => Ok(eval_super(x, p, n)?.scale(-1)),
        Ast::Add(x, y) => eval_super(x, p, n)?.add(&eval_super(y, p, n)?),
        Ast::Sub(x, y) => eval_super(x, p, n)?.sub(&eval_super(y, p, n)?),
        Ast::Mul(x, y) => eval_super(x, p, n)?.mul(&eval_super(y, p, n)?),
        Ast::Pow(x, e) => eval_super(x, p, n)?.pow(*e),
    }
}

fn eval_gen(a: &Ast, p: u32, n: usize) -> Result<GenExpr> {
    match a {
        Ast::Int(v) => GenExpr::scalar(p, n, *v),
        Ast::VarX(_) | Ast::VarY(_) => Err(Error::MixedExpression),
        Ast::Gen(sym) => {
            // Validate the symbol by expanding it once (cached).
            sym.expand(p, n)?;
            GenExpr::symbol(p, n, sym.clone())
        }
        Ast::Neg(x) => Ok(eval_gen(x, p, n)?.scale(-1)),
        Ast::Add(x, y) => eval_gen(x, p, n)?.add(&eval_gen(y, p, n)?),
        Ast::Sub(x, y) => eval_gen(x, p, n)?.sub(&eval_gen(y, p, n)?),
        Ast::Mul(x, y) => eval_gen(x, p, n)?.mul(&eval_gen(y, p, n)?),
        Ast::Pow(x, e) => eval_gen(x, p, n)?.pow(*e),
    }
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    n: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse { offset: self.pos, msg: msg.to_string() }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.bytes.len()
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn peek_at(&self, off: usize) -> Option<u8> {
        self.bytes.get(self.pos + off).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ') | Some(b'\t') | Some(b'\n') | Some(b'\r')) {
            self.pos += 1;
        }
    }

    fn expect(&mut self, b: u8) -> Result<()> {
        self.skip_ws();
        if self.peek() == Some(b) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected '{}'", b as char)))
        }
    }

    fn integer(&mut self) -> Result<u64> {
        self.skip_ws();
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.err("expected an integer"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse { offset: start, msg: "integer out of range".into() })
    }

    fn expr(&mut self) -> Result<Ast> {
        let mut acc = self.term()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = Ast::Add(Box::new(acc), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = Ast::Sub(Box::new(acc), Box::new(self.term()?));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Ast> {
        self.skip_ws();
        let mut negate = false;
        while self.peek() == Some(b'-') {
            self.pos += 1;
            negate = !negate;
            self.skip_ws();
        }
        let mut acc = self.factor()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    acc = Ast::Mul(Box::new(acc), Box::new(self.factor()?));
                }
                // Implicit multiplication by juxtaposition.
                Some(b'(') | Some(b'0'..=b'9') => {
                    acc = Ast::Mul(Box::new(acc), Box::new(self.factor()?));
                }
                Some(c) if c.is_ascii_alphabetic() => {
                    acc = Ast::Mul(Box::new(acc), Box::new(self.factor()?));
                }
                _ => break,
            }
        }
        Ok(if negate { Ast::Neg(Box::new(acc)) } else { acc })
    }

    fn factor(&mut self) -> Result<Ast> {
        let mut base = self.atom()?;
        // Optional hat mark: '^' not followed by a digit.
        self.skip_ws();
        if self.peek() == Some(b'^') && !matches!(self.peek_at(1), Some(b'0'..=b'9')) {
            self.pos += 1;
            base = Ast::Gen(self.hat_of(base)?);
        }
        self.skip_ws();
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let e = self.integer()?;
            if e > MAX_EXPONENT as u64 {
                return Err(self.err(&format!("exponent exceeds {MAX_EXPONENT}")));
            }
            base = Ast::Pow(Box::new(base), e as u32);
        }
        Ok(base)
    }

    fn hat_of(&self, base: Ast) -> Result<GenSymbol> {
        let sym = match base {
            Ast::Gen(sym) => sym,
            _ => return Err(self.err("the hat mark applies to named generators only")),
        };
        Ok(match sym {
            GenSymbol::H { i } => GenSymbol::HHat { i },
            GenSymbol::L { m } => GenSymbol::LHat { m },
            GenSymbol::D { m, i } => GenSymbol::DHat { m, i },
            GenSymbol::M { m, s } => GenSymbol::MHat { m, s },
            other => {
                return Err(self.err(&format!("no hatted form for {other}")));
            }
        })
    }

    fn atom(&mut self) -> Result<Ast> {
        self.skip_ws();
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(b')')?;
                Ok(inner)
            }
            Some(b'0'..=b'9') => {
                let v = self.integer()?;
                Ok(Ast::Int(v as i64))
            }
            Some(c) if c.is_ascii_alphabetic() => self.name(),
            Some(c) => Err(self.err(&format!("unexpected character '{}'", c as char))),
        }
    }

    fn name(&mut self) -> Result<Ast> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphabetic()) {
            self.pos += 1;
        }
        let word = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii");
        // Raw variables: x<i>, y<i>.
        if (word == "x" || word == "y") && matches!(self.peek(), Some(b'0'..=b'9')) {
            let i = self.integer()? as usize;
            if i < 1 || i > self.n {
                return Err(Error::Parse {
                    offset: start,
                    msg: format!("variable index {i} not in 1..={}", self.n),
                });
            }
            return Ok(if word == "x" { Ast::VarX(i) } else { Ast::VarY(i) });
        }
        let sym = self.bracket_args(start, word)?;
        Ok(Ast::Gen(sym))
    }

    fn bracket_args(&mut self, start: usize, word: &str) -> Result<GenSymbol> {
        self.expect(b'[').map_err(|_| Error::Parse {
            offset: start,
            msg: format!("unknown name '{word}' (generators need [..] arguments)"),
        })?;
        let sym = match word {
            "h" | "hhat" => {
                let i = self.integer()? as usize;
                self.expect(b']')?;
                if word == "h" {
                    GenSymbol::H { i }
                } else {
                    GenSymbol::HHat { i }
                }
            }
            "homit" | "hswap" => {
                let i = self.integer()? as usize;
                self.expect(b',')?;
                let j = self.integer()? as usize;
                self.expect(b']')?;
                if word == "homit" {
                    GenSymbol::HOmit { i, j }
                } else {
                    GenSymbol::HSwap { i, j }
                }
            }
            "L" | "Lhat" => {
                let m = self.integer()? as usize;
                self.skip_ws();
                if self.peek() == Some(b',') {
                    self.pos += 1;
                    let i = self.integer()? as usize;
                    self.expect(b']')?;
                    if word == "Lhat" {
                        return Err(Error::Parse {
                            offset: start,
                            msg: "Lhat takes a single index".into(),
                        });
                    }
                    GenSymbol::LSub { m, i }
                } else {
                    self.expect(b']')?;
                    if word == "L" {
                        GenSymbol::L { m }
                    } else {
                        GenSymbol::LHat { m }
                    }
                }
            }
            "d" | "dhat" => {
                let m = self.integer()? as usize;
                self.expect(b',')?;
                let i = self.integer()? as usize;
                self.skip_ws();
                if self.peek() == Some(b';') {
                    if word == "dhat" {
                        return Err(Error::Parse {
                            offset: start,
                            msg: "parabolic truncations have no hatted short form".into(),
                        });
                    }
                    self.pos += 1;
                    self.skip_ws();
                    if self.peek() == Some(b'I') {
                        self.pos += 1;
                        self.expect(b'=')?;
                    }
                    let a = self.integer()? as usize;
                    self.expect(b',')?;
                    let b = self.integer()? as usize;
                    self.expect(b']')?;
                    if a != 1 || b != m - 1 {
                        return Err(Error::Parse {
                            offset: start,
                            msg: format!(
                                "unsupported composition ({a},{b}); only I=1,{} is available",
                                m - 1
                            ),
                        });
                    }
                    GenSymbol::DParab { m, i }
                } else {
                    self.expect(b']')?;
                    if word == "d" {
                        GenSymbol::D { m, i }
                    } else {
                        GenSymbol::DHat { m, i }
                    }
                }
            }
            "M" | "Mhat" => {
                let m = self.integer()? as usize;
                self.expect(b';')?;
                let mut s = vec![self.integer()? as usize];
                loop {
                    self.skip_ws();
                    if self.peek() == Some(b',') {
                        self.pos += 1;
                        s.push(self.integer()? as usize);
                    } else {
                        break;
                    }
                }
                self.expect(b']')?;
                if word == "M" {
                    GenSymbol::M { m, s }
                } else {
                    GenSymbol::MHat { m, s }
                }
            }
            other => {
                return Err(Error::Parse {
                    offset: start,
                    msg: format!("unknown generator name '{other}'"),
                })
            }
        };
        Ok(sym)
    }
}
