//! Text form of operator expressions.
//!
//! Canonical output looks like `(0.0,1.0)*[ad^2 a^1]@a + (1.0,0.0)`. The
//! parser accepts that form plus ordinary infix arithmetic:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := atom ('^' unary)?
//! atom    := number | '(' num ',' num ')' | '(' expr ')' | func '(' expr ')'
//!          | 'i' | 'pi' | param | op ('@' mode)? | '[' factor* ']' '@' mode
//! op      := 'a' | 'ad' | 'n' | 'x' | 'p'
//! factor  := ('a' | 'ad') ('^' integer)?
//! func    := 'sqrt' | 'exp' | 'cos' | 'sin'
//! ```
//!
//! A bare `a` or `ad` (no `@mode`) is only allowed when exactly one mode is
//! registered and no parameter shadows the name.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;

use super::{Monomial, ModeRegistry, OperatorExpr};
use crate::error::{Error, Result};

pub fn format_complex(c: Complex64) -> String {
    format!("({:?},{:?})", c.re, c.im)
}

pub fn format_monomial(registry: &ModeRegistry, m: &Monomial) -> String {
    let mut parts = Vec::new();
    for (idx, &(p, q)) in m.powers().iter().enumerate() {
        if p == 0 && q == 0 {
            continue;
        }
        let mut factors = Vec::new();
        if p > 0 {
            factors.push(format!("ad^{p}"));
        }
        if q > 0 {
            factors.push(format!("a^{q}"));
        }
        parts.push(format!("[{}]@{}", factors.join(" "), registry.label(idx)));
    }
    parts.join("*")
}

pub fn format_expr(expr: &OperatorExpr) -> String {
    if expr.is_empty() {
        return "0".to_string();
    }
    let reg = expr.registry();
    expr.terms()
        .map(|(m, c)| {
            if m.is_identity() {
                format_complex(*c)
            } else {
                format!("{}*{}", format_complex(*c), format_monomial(reg, m))
            }
        })
        .collect::<Vec<_>>()
        .join(" + ")
}

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
    LBracket,
    RBracket,
    Comma,
    At,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number `{v}`"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::At => "`@`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

/// Tokens with 1-based column positions.
fn tokenize(text: &str, line: usize, col0: usize) -> Result<Vec<(Tok, usize)>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = col0 + i;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let simple = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            ',' => Some(Tok::Comma),
            '@' => Some(Tok::At),
            _ => None,
        };
        if let Some(t) = simple {
            out.push((t, col));
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let s: String = chars[start..i].iter().collect();
            let v: f64 = s
                .parse()
                .map_err(|_| Error::parse(line, col, format!("malformed number `{s}`")))?;
            out.push((Tok::Num(v), col));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), col));
        } else {
            return Err(Error::parse(line, col, format!("unexpected character `{c}`")));
        }
    }
    out.push((Tok::End, col0 + chars.len()));
    Ok(out)
}

#[derive(Clone, Debug)]
pub enum Value {
    Scalar(Complex64),
    Operator(OperatorExpr),
}

impl Value {
    fn into_operator(self, registry: &Arc<ModeRegistry>) -> OperatorExpr {
        match self {
            Value::Scalar(c) => OperatorExpr::scalar(registry, c),
            Value::Operator(op) => op,
        }
    }
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    line: usize,
    registry: Option<&'a Arc<ModeRegistry>>,
    params: &'a BTreeMap<String, f64>,
}

const FUNCTIONS: [&str; 4] = ["sqrt", "exp", "cos", "sin"];
const OPERATORS: [&str; 5] = ["a", "ad", "n", "x", "p"];

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.pos + offset).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn col(&self) -> usize {
        self.toks[self.pos].1
    }

    fn next(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, col: usize, msg: impl Into<String>) -> Error {
        Error::parse(self.line, col, msg)
    }

    fn expect(&mut self, want: Tok) -> Result<()> {
        let (t, col) = self.next();
        if t == want {
            Ok(())
        } else {
            Err(self.err(col, format!("expected {}, found {}", want.describe(), t.describe())))
        }
    }

    fn registry(&self, col: usize, what: &str) -> Result<&'a Arc<ModeRegistry>> {
        self.registry
            .ok_or_else(|| self.err(col, format!("operator {what} not allowed in a scalar expression")))
    }

    fn expr(&mut self) -> Result<Value> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    let (_, col) = self.next();
                    let rhs = self.term()?;
                    acc = self.combine(acc, rhs, col, |x, y| x + y, |x, y| x + y)?;
                }
                Tok::Minus => {
                    let (_, col) = self.next();
                    let rhs = self.term()?;
                    acc = self.combine(acc, rhs, col, |x, y| x - y, |x, y| x - y)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn combine(
        &self,
        lhs: Value,
        rhs: Value,
        col: usize,
        scalar: fn(Complex64, Complex64) -> Complex64,
        op: fn(&OperatorExpr, &OperatorExpr) -> OperatorExpr,
    ) -> Result<Value> {
        match (lhs, rhs) {
            (Value::Scalar(x), Value::Scalar(y)) => Ok(Value::Scalar(scalar(x, y))),
            (x, y) => {
                let reg = self.registry(col, "arithmetic")?;
                let x = x.into_operator(reg);
                let y = y.into_operator(reg);
                Ok(Value::Operator(op(&x, &y)))
            }
        }
    }

    fn term(&mut self) -> Result<Value> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    let (_, col) = self.next();
                    let rhs = self.unary()?;
                    acc = self.combine(acc, rhs, col, |x, y| x * y, |x, y| x * y)?;
                }
                Tok::Slash => {
                    let (_, col) = self.next();
                    let rhs = self.unary()?;
                    let d = match rhs {
                        Value::Scalar(d) => d,
                        Value::Operator(_) => return Err(self.err(col, "cannot divide by an operator")),
                    };
                    if d.norm() == 0.0 {
                        return Err(self.err(col, "division by zero"));
                    }
                    acc = match acc {
                        Value::Scalar(x) => Value::Scalar(x / d),
                        Value::Operator(op) => Value::Operator(op.scale(Complex64::new(1.0, 0.0) / d)),
                    };
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Value> {
        match self.peek() {
            Tok::Minus => {
                self.next();
                Ok(match self.unary()? {
                    Value::Scalar(x) => Value::Scalar(-x),
                    Value::Operator(op) => Value::Operator(-op),
                })
            }
            Tok::Plus => {
                self.next();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Value> {
        let base = self.atom()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        let (_, col) = self.next();
        let exp = match self.unary()? {
            Value::Scalar(e) => e,
            Value::Operator(_) => return Err(self.err(col, "exponent must be a scalar")),
        };
        match base {
            Value::Scalar(b) => {
                if exp.im == 0.0 && b.im == 0.0 && (b.re >= 0.0 || exp.re.fract() == 0.0) {
                    Ok(Value::Scalar(Complex64::new(b.re.powf(exp.re), 0.0)))
                } else {
                    Ok(Value::Scalar(b.powc(exp)))
                }
            }
            Value::Operator(op) => {
                if exp.im != 0.0 || exp.re < 0.0 || exp.re.fract() != 0.0 || exp.re > 64.0 {
                    return Err(self.err(col, "operator exponent must be a non-negative integer"));
                }
                Ok(Value::Operator(op.powi(exp.re as u32)))
            }
        }
    }

    fn signed_number(&mut self) -> Result<f64> {
        let neg = match self.peek() {
            Tok::Minus => {
                self.next();
                true
            }
            Tok::Plus => {
                self.next();
                false
            }
            _ => false,
        };
        match self.next() {
            (Tok::Num(v), _) => Ok(if neg { -v } else { v }),
            (t, col) => Err(self.err(col, format!("expected a number, found {}", t.describe()))),
        }
    }

    fn is_complex_literal(&self) -> bool {
        let mut k = 1;
        if matches!(self.peek_at(k), Tok::Minus | Tok::Plus) {
            k += 1;
        }
        matches!(self.peek_at(k), Tok::Num(_)) && *self.peek_at(k + 1) == Tok::Comma
    }

    fn atom(&mut self) -> Result<Value> {
        let col = self.col();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.next();
                Ok(Value::Scalar(Complex64::new(v, 0.0)))
            }
            Tok::LParen if self.is_complex_literal() => {
                self.next();
                let re = self.signed_number()?;
                self.expect(Tok::Comma)?;
                let im = self.signed_number()?;
                self.expect(Tok::RParen)?;
                Ok(Value::Scalar(Complex64::new(re, im)))
            }
            Tok::LParen => {
                self.next();
                let v = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(v)
            }
            Tok::LBracket => self.bracket_monomial(),
            Tok::Ident(name) => {
                self.next();
                self.identifier(&name, col)
            }
            t => Err(self.err(col, format!("unexpected {}", t.describe()))),
        }
    }

    fn mode_suffix(&mut self) -> Result<usize> {
        self.expect(Tok::At)?;
        let reg = self.registry(self.col(), "suffix")?;
        match self.next() {
            (Tok::Ident(label), col) => reg
                .index_of(&label)
                .ok_or_else(|| self.err(col, format!("unknown mode `{label}`"))),
            (t, col) => Err(self.err(col, format!("expected a mode label, found {}", t.describe()))),
        }
    }

    fn identifier(&mut self, name: &str, col: usize) -> Result<Value> {
        if FUNCTIONS.contains(&name) && *self.peek() == Tok::LParen {
            self.next();
            let arg = self.expr()?;
            self.expect(Tok::RParen)?;
            let x = match arg {
                Value::Scalar(x) => x,
                Value::Operator(_) => return Err(self.err(col, format!("`{name}` takes a scalar argument"))),
            };
            let real = x.im == 0.0;
            let y = match name {
                "sqrt" if real && x.re >= 0.0 => Complex64::new(x.re.sqrt(), 0.0),
                "sqrt" => x.sqrt(),
                "exp" if real => Complex64::new(x.re.exp(), 0.0),
                "exp" => x.exp(),
                "cos" if real => Complex64::new(x.re.cos(), 0.0),
                "cos" => x.cos(),
                "sin" if real => Complex64::new(x.re.sin(), 0.0),
                _ => x.sin(),
            };
            return Ok(Value::Scalar(y));
        }
        if *self.peek() == Tok::At {
            if !OPERATORS.contains(&name) {
                return Err(self.err(col, format!("`{name}` is not an operator name")));
            }
            let mode = self.mode_suffix()?;
            return self.mode_operator(name, mode, col);
        }
        if let Some(&v) = self.params.get(name) {
            return Ok(Value::Scalar(Complex64::new(v, 0.0)));
        }
        match name {
            "i" => return Ok(Value::Scalar(Complex64::new(0.0, 1.0))),
            "pi" => return Ok(Value::Scalar(Complex64::new(std::f64::consts::PI, 0.0))),
            _ => {}
        }
        if OPERATORS.contains(&name) {
            let reg = self.registry(col, &format!("`{name}`"))?;
            if reg.len() != 1 {
                return Err(self.err(
                    col,
                    format!("`{name}` needs a mode suffix (`{name}@label`) with several modes declared"),
                ));
            }
            if name == "a" || name == "ad" {
                return self.mode_operator(name, 0, col);
            }
        }
        Err(self.err(col, format!("unknown identifier `{name}`")))
    }

    fn mode_operator(&self, name: &str, mode: usize, col: usize) -> Result<Value> {
        let reg = self.registry(col, &format!("`{name}`"))?;
        let label = reg.label(mode).to_string();
        let op = match name {
            "a" => OperatorExpr::annihilator(reg, &label)?,
            "ad" => OperatorExpr::creator(reg, &label)?,
            "n" => OperatorExpr::number(reg, &label)?,
            "x" => OperatorExpr::position(reg, &label)?,
            _ => OperatorExpr::momentum(reg, &label)?,
        };
        Ok(Value::Operator(op))
    }

    fn bracket_monomial(&mut self) -> Result<Value> {
        let (_, col) = self.next();
        let mut p = 0u32;
        let mut q = 0u32;
        let mut seen_a = false;
        loop {
            match self.next() {
                (Tok::RBracket, _) => break,
                (Tok::Ident(name), fcol) if name == "a" || name == "ad" => {
                    let power = if *self.peek() == Tok::Caret {
                        self.next();
                        match self.next() {
                            (Tok::Num(v), _) if v >= 0.0 && v.fract() == 0.0 && v <= 64.0 => v as u32,
                            (t, c) => {
                                return Err(self.err(c, format!("expected an integer power, found {}", t.describe())))
                            }
                        }
                    } else {
                        1
                    };
                    if name == "ad" {
                        if seen_a {
                            return Err(self.err(fcol, "`ad` after `a` inside a normal-ordered monomial"));
                        }
                        p += power;
                    } else {
                        seen_a = true;
                        q += power;
                    }
                }
                (t, c) => return Err(self.err(c, format!("unexpected {} in monomial", t.describe()))),
            }
        }
        let mode = self.mode_suffix()?;
        let reg = self.registry(col, "monomial")?;
        Ok(Value::Operator(OperatorExpr::from_monomial(
            reg,
            Monomial::single(reg.len(), mode, p, q),
            Complex64::new(1.0, 0.0),
        )))
    }
}

fn run_parser<'a>(
    text: &str,
    line: usize,
    col0: usize,
    registry: Option<&'a Arc<ModeRegistry>>,
    params: &'a BTreeMap<String, f64>,
) -> Result<Value> {
    let toks = tokenize(text, line, col0)?;
    let mut p = Parser {
        toks,
        pos: 0,
        line,
        registry,
        params,
    };
    if *p.peek() == Tok::End {
        return Err(p.err(p.col(), "empty expression"));
    }
    let v = p.expr()?;
    if *p.peek() != Tok::End {
        let col = p.col();
        return Err(p.err(col, format!("unexpected {} after expression", p.peek().describe())));
    }
    Ok(v)
}

/// Parses an operator expression. `line` and `col0` anchor diagnostics when
/// the text is a slice of a larger document.
pub fn parse_expr_at(
    text: &str,
    registry: &Arc<ModeRegistry>,
    params: &BTreeMap<String, f64>,
    line: usize,
    col0: usize,
) -> Result<OperatorExpr> {
    Ok(run_parser(text, line, col0, Some(registry), params)?.into_operator(registry))
}

pub fn parse_expr(text: &str, registry: &Arc<ModeRegistry>) -> Result<OperatorExpr> {
    parse_expr_at(text, registry, &BTreeMap::new(), 1, 1)
}

/// Parses an expression that must evaluate to a complex number.
pub fn parse_scalar_at(text: &str, params: &BTreeMap<String, f64>, line: usize, col0: usize) -> Result<Complex64> {
    match run_parser(text, line, col0, None, params)? {
        Value::Scalar(c) => Ok(c),
        Value::Operator(_) => Err(Error::parse(line, col0, "expected a scalar")),
    }
}
