//! Closed-form scalar fields: a small expression language over `x` (and `y`
//! in 2d) with exact symbolic differentiation.
//!
//! Grammar (EBNF, whitespace free between tokens):
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := factor (("*" | "/") factor)*
//! factor := "-" factor | power
//! power  := atom ("^" factor)?
//! atom   := number | "pi" | "x" | "y"
//!         | name "(" expr ("," expr)? ")"
//!         | "(" expr ")"
//! name   := "abs" | "sign" | "min" | "max" | "exp" | "log" | "sin" | "cos" | "sqrt"
//! ```
//!
//! `log` is the natural logarithm. `sign` is an extension beyond the usual
//! calculator set so that derivatives of `abs`, `min`, `max` stay inside the
//! grammar; the convention `sign(0) = +1` fixes a deterministic one-sided
//! derivative at every kink, and differentiation flags such inputs.

// guards like `z == 0.0` stay guards: float literals in match patterns are
// on their way out of the language
#![allow(clippy::redundant_guards)]

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("parse error at position {position}: expected {expected}, found {found}")]
    Parse { position: usize, expected: &'static str, found: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Pi,
    Var(Axis),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Abs(Box<Expr>),
    Sign(Box<Expr>),
    Sqrt(Box<Expr>),
    Exp(Box<Expr>),
    Log(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Min(Box<Expr>, Box<Expr>),
    Max(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, ExprError> {
        Parser::new(src).parse_all()
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Pi => std::f64::consts::PI,
            Expr::Var(Axis::X) => x,
            Expr::Var(Axis::Y) => y,
            Expr::Add(u, v) => u.eval(x, y) + v.eval(x, y),
            Expr::Sub(u, v) => u.eval(x, y) - v.eval(x, y),
            Expr::Mul(u, v) => u.eval(x, y) * v.eval(x, y),
            Expr::Div(u, v) => u.eval(x, y) / v.eval(x, y),
            Expr::Pow(u, v) => u.eval(x, y).powf(v.eval(x, y)),
            Expr::Neg(u) => -u.eval(x, y),
            Expr::Abs(u) => u.eval(x, y).abs(),
            Expr::Sign(u) => {
                if u.eval(x, y) < 0.0 {
                    -1.0
                } else {
                    1.0
                }
            }
            Expr::Sqrt(u) => u.eval(x, y).sqrt(),
            Expr::Exp(u) => u.eval(x, y).exp(),
            Expr::Log(u) => u.eval(x, y).ln(),
            Expr::Sin(u) => u.eval(x, y).sin(),
            Expr::Cos(u) => u.eval(x, y).cos(),
            Expr::Min(u, v) => u.eval(x, y).min(v.eval(x, y)),
            Expr::Max(u, v) => u.eval(x, y).max(v.eval(x, y)),
        }
    }

    pub fn eval_1d(&self, x: f64) -> f64 {
        self.eval(x, 0.0)
    }

    pub fn uses_axis(&self, axis: Axis) -> bool {
        match self {
            Expr::Num(_) | Expr::Pi => false,
            Expr::Var(a) => *a == axis,
            Expr::Add(u, v)
            | Expr::Sub(u, v)
            | Expr::Mul(u, v)
            | Expr::Div(u, v)
            | Expr::Pow(u, v)
            | Expr::Min(u, v)
            | Expr::Max(u, v) => u.uses_axis(axis) || v.uses_axis(axis),
            Expr::Neg(u)
            | Expr::Abs(u)
            | Expr::Sign(u)
            | Expr::Sqrt(u)
            | Expr::Exp(u)
            | Expr::Log(u)
            | Expr::Sin(u)
            | Expr::Cos(u) => u.uses_axis(axis),
        }
    }

    pub fn has_kink(&self) -> bool {
        match self {
            Expr::Num(_) | Expr::Pi | Expr::Var(_) => false,
            Expr::Abs(_) | Expr::Sign(_) | Expr::Min(_, _) | Expr::Max(_, _) => true,
            Expr::Add(u, v)
            | Expr::Sub(u, v)
            | Expr::Mul(u, v)
            | Expr::Div(u, v)
            | Expr::Pow(u, v) => u.has_kink() || v.has_kink(),
            Expr::Neg(u) | Expr::Sqrt(u) | Expr::Exp(u) | Expr::Log(u) | Expr::Sin(u)
            | Expr::Cos(u) => u.has_kink(),
        }
    }

    // precedence scale: +,- are 2; *,/ are 4; unary minus 5; ^ is 6
    // (right assoc); negative literals 6; atoms 8
    fn prec(&self) -> u8 {
        match self {
            Expr::Add(_, _) | Expr::Sub(_, _) => 2,
            Expr::Mul(_, _) | Expr::Div(_, _) => 4,
            Expr::Neg(_) => 5,
            Expr::Pow(_, _) => 6,
            Expr::Num(v) if *v < 0.0 => 6,
            _ => 8,
        }
    }

    fn fmt_prec(&self, f: &mut std::fmt::Formatter<'_>, required: u8) -> std::fmt::Result {
        let p = self.prec();
        if p < required {
            write!(f, "(")?;
            self.fmt_prec(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Pi => write!(f, "pi"),
            Expr::Var(Axis::X) => write!(f, "x"),
            Expr::Var(Axis::Y) => write!(f, "y"),
            Expr::Add(u, v) => {
                u.fmt_prec(f, 2)?;
                write!(f, " + ")?;
                v.fmt_prec(f, 3)
            }
            Expr::Sub(u, v) => {
                u.fmt_prec(f, 2)?;
                write!(f, " - ")?;
                v.fmt_prec(f, 3)
            }
            Expr::Mul(u, v) => {
                u.fmt_prec(f, 4)?;
                write!(f, "*")?;
                v.fmt_prec(f, 5)
            }
            Expr::Div(u, v) => {
                u.fmt_prec(f, 4)?;
                write!(f, "/")?;
                v.fmt_prec(f, 5)
            }
            Expr::Pow(u, v) => {
                u.fmt_prec(f, 7)?;
                write!(f, "^")?;
                v.fmt_prec(f, 6)
            }
            Expr::Neg(u) => {
                write!(f, "-")?;
                u.fmt_prec(f, 8)
            }
            Expr::Abs(u) => write_call(f, "abs", u, None),
            Expr::Sign(u) => write_call(f, "sign", u, None),
            Expr::Sqrt(u) => write_call(f, "sqrt", u, None),
            Expr::Exp(u) => write_call(f, "exp", u, None),
            Expr::Log(u) => write_call(f, "log", u, None),
            Expr::Sin(u) => write_call(f, "sin", u, None),
            Expr::Cos(u) => write_call(f, "cos", u, None),
            Expr::Min(u, v) => write_call(f, "min", u, Some(v)),
            Expr::Max(u, v) => write_call(f, "max", u, Some(v)),
        }
    }
}

fn write_call(
    f: &mut std::fmt::Formatter<'_>,
    name: &str,
    u: &Expr,
    v: Option<&Expr>,
) -> std::fmt::Result {
    write!(f, "{name}(")?;
    u.fmt_prec(f, 0)?;
    if let Some(v) = v {
        write!(f, ", ")?;
        v.fmt_prec(f, 0)?;
    }
    write!(f, ")")
}

impl std::fmt::Display for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl std::str::FromStr for Expr {
    type Err = ExprError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expr::parse(s)
    }
}

// Simplifying constructors. Differentiation and manufactured right-hand
// sides go through these so printed derivatives stay readable; the parser
// does not (raw input round-trips unchanged).

pub(crate) fn num(v: f64) -> Expr {
    Expr::Num(v)
}

pub(crate) fn add(u: Expr, v: Expr) -> Expr {
    match (u, v) {
        (Expr::Num(a), Expr::Num(b)) if (a + b).is_finite() => Expr::Num(a + b),
        (Expr::Num(z), v) if z == 0.0 => v,
        (u, Expr::Num(z)) if z == 0.0 => u,
        (u, v) => Expr::Add(Box::new(u), Box::new(v)),
    }
}

pub(crate) fn sub(u: Expr, v: Expr) -> Expr {
    match (u, v) {
        (Expr::Num(a), Expr::Num(b)) if (a - b).is_finite() => Expr::Num(a - b),
        (u, Expr::Num(z)) if z == 0.0 => u,
        (Expr::Num(z), v) if z == 0.0 => neg(v),
        (u, v) => Expr::Sub(Box::new(u), Box::new(v)),
    }
}

pub(crate) fn neg(u: Expr) -> Expr {
    match u {
        Expr::Num(v) => Expr::Num(-v),
        Expr::Neg(inner) => *inner,
        Expr::Mul(a, b) => match *a {
            Expr::Num(c) => mul(Expr::Num(-c), *b),
            a => Expr::Neg(Box::new(Expr::Mul(Box::new(a), b))),
        },
        u => Expr::Neg(Box::new(u)),
    }
}

pub(crate) fn mul(u: Expr, v: Expr) -> Expr {
    match (u, v) {
        (Expr::Num(a), Expr::Num(b)) if (a * b).is_finite() => Expr::Num(a * b),
        (Expr::Num(z), _) | (_, Expr::Num(z)) if z == 0.0 => Expr::Num(0.0),
        (Expr::Num(one), v) if one == 1.0 => v,
        (u, Expr::Num(one)) if one == 1.0 => u,
        (u, Expr::Num(c)) => Expr::Mul(Box::new(Expr::Num(c)), Box::new(u)),
        (u, v) => Expr::Mul(Box::new(u), Box::new(v)),
    }
}

pub(crate) fn div(u: Expr, v: Expr) -> Expr {
    match (u, v) {
        (Expr::Num(a), Expr::Num(b)) if b != 0.0 && (a / b).is_finite() => Expr::Num(a / b),
        (Expr::Num(z), _) if z == 0.0 => Expr::Num(0.0),
        (u, Expr::Num(one)) if one == 1.0 => u,
        (u, v) => Expr::Div(Box::new(u), Box::new(v)),
    }
}

pub(crate) fn pow(u: Expr, v: Expr) -> Expr {
    match (u, v) {
        (Expr::Num(a), Expr::Num(b)) if a.powf(b).is_finite() => Expr::Num(a.powf(b)),
        (u, Expr::Num(one)) if one == 1.0 => u,
        (_, Expr::Num(z)) if z == 0.0 => Expr::Num(1.0),
        (u, v) => Expr::Pow(Box::new(u), Box::new(v)),
    }
}

pub(crate) fn abs(u: Expr) -> Expr {
    Expr::Abs(Box::new(u))
}

pub(crate) fn sign(u: Expr) -> Expr {
    Expr::Sign(Box::new(u))
}

pub(crate) fn sqrt(u: Expr) -> Expr {
    Expr::Sqrt(Box::new(u))
}

pub(crate) fn exp(u: Expr) -> Expr {
    Expr::Exp(Box::new(u))
}

pub(crate) fn log(u: Expr) -> Expr {
    Expr::Log(Box::new(u))
}

pub(crate) fn sin(u: Expr) -> Expr {
    Expr::Sin(Box::new(u))
}

pub(crate) fn cos(u: Expr) -> Expr {
    Expr::Cos(Box::new(u))
}

pub(crate) fn emin(u: Expr, v: Expr) -> Expr {
    Expr::Min(Box::new(u), Box::new(v))
}

pub(crate) fn emax(u: Expr, v: Expr) -> Expr {
    Expr::Max(Box::new(u), Box::new(v))
}

/// Exact symbolic derivative plus a flag set when the input contains
/// `abs`, `sign`, `min`, or `max`: there the result uses the one-sided
/// convention `sign(0) = +1` and is only valid away from the kink set.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivative {
    pub expr: Expr,
    pub kink_warning: bool,
}

pub fn differentiate(e: &Expr, axis: Axis) -> Derivative {
    let mut kink = false;
    let expr = d(e, axis, &mut kink);
    Derivative { expr, kink_warning: kink }
}

fn d(e: &Expr, ax: Axis, kink: &mut bool) -> Expr {
    match e {
        Expr::Num(_) | Expr::Pi => num(0.0),
        Expr::Var(a) => num(if *a == ax { 1.0 } else { 0.0 }),
        Expr::Add(u, v) => add(d(u, ax, kink), d(v, ax, kink)),
        Expr::Sub(u, v) => sub(d(u, ax, kink), d(v, ax, kink)),
        Expr::Mul(u, v) => {
            let du = d(u, ax, kink);
            let dv = d(v, ax, kink);
            add(mul(du, (**v).clone()), mul((**u).clone(), dv))
        }
        Expr::Div(u, v) => {
            let du = d(u, ax, kink);
            let dv = d(v, ax, kink);
            div(
                sub(mul(du, (**v).clone()), mul((**u).clone(), dv)),
                pow((**v).clone(), num(2.0)),
            )
        }
        Expr::Pow(u, v) => {
            let du = d(u, ax, kink);
            if let Expr::Num(c) = **v {
                // power rule; valid for negative bases at integer c
                mul(mul(num(c), pow((**u).clone(), num(c - 1.0))), du)
            } else {
                // u^v = exp(v log u)
                let dv = d(v, ax, kink);
                mul(
                    pow((**u).clone(), (**v).clone()),
                    add(
                        mul(dv, log((**u).clone())),
                        mul((**v).clone(), div(du, (**u).clone())),
                    ),
                )
            }
        }
        Expr::Neg(u) => neg(d(u, ax, kink)),
        Expr::Abs(u) => {
            *kink = true;
            mul(sign((**u).clone()), d(u, ax, kink))
        }
        Expr::Sign(u) => {
            *kink = true;
            let _ = d(u, ax, kink);
            num(0.0)
        }
        Expr::Sqrt(u) => div(d(u, ax, kink), mul(num(2.0), sqrt((**u).clone()))),
        Expr::Exp(u) => mul(exp((**u).clone()), d(u, ax, kink)),
        Expr::Log(u) => div(d(u, ax, kink), (**u).clone()),
        Expr::Sin(u) => mul(cos((**u).clone()), d(u, ax, kink)),
        Expr::Cos(u) => neg(mul(sin((**u).clone()), d(u, ax, kink))),
        // min = (u+v)/2 - |u-v|/2 with sign(0) = +1: ties take the second
        // branch for min and the first for max
        Expr::Min(u, v) => {
            *kink = true;
            let du = d(u, ax, kink);
            let dv = d(v, ax, kink);
            let s = sign(sub((**u).clone(), (**v).clone()));
            sub(
                mul(num(0.5), add(du.clone(), dv.clone())),
                mul(num(0.5), mul(s, sub(du, dv))),
            )
        }
        Expr::Max(u, v) => {
            *kink = true;
            let du = d(u, ax, kink);
            let dv = d(v, ax, kink);
            let s = sign(sub((**u).clone(), (**v).clone()));
            add(
                mul(num(0.5), add(du.clone(), dv.clone())),
                mul(num(0.5), mul(s, sub(du, dv))),
            )
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser { src: src.as_bytes(), pos: 0 }
    }

    fn parse_all(&mut self) -> Result<Expr, ExprError> {
        let e = self.parse_expr()?;
        self.skip_ws();
        if self.pos < self.src.len() {
            return Err(self.err("end of input"));
        }
        Ok(e)
    }

    fn err(&self, expected: &'static str) -> ExprError {
        let found = if self.pos >= self.src.len() {
            "end of input".to_string()
        } else {
            let rest = &self.src[self.pos..];
            let n = rest.len().min(8);
            format!("{:?}", String::from_utf8_lossy(&rest[..n]))
        };
        ExprError::Parse { position: self.pos, expected, found }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn parse_expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.parse_term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let rhs = self.parse_term()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
                }
                Some(b'-') => {
                    self.pos += 1;
                    let rhs = self.parse_term()?;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.parse_factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let rhs = self.parse_factor()?;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
                }
                Some(b'/') => {
                    self.pos += 1;
                    let rhs = self.parse_factor()?;
                    lhs = Expr::Div(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_factor(&mut self) -> Result<Expr, ExprError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            let inner = self.parse_factor()?;
            // fold a negated literal so "-2" is one node in every position
            return Ok(match inner {
                Expr::Num(v) => Expr::Num(-v),
                other => Expr::Neg(Box::new(other)),
            });
        }
        self.parse_power()
    }

    fn parse_power(&mut self) -> Result<Expr, ExprError> {
        let base = self.parse_atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.parse_factor()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn parse_atom(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            None => Err(self.err("a value")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.parse_expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("')'"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => self.parse_number(),
            Some(c) if c.is_ascii_alphabetic() => self.parse_name(),
            Some(_) => Err(self.err("a value")),
        }
    }

    fn parse_number(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
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
                // "2e" was the start of an identifier boundary, back off
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Expr::Num(v)),
            _ => {
                self.pos = start;
                Err(self.err("a finite number"))
            }
        }
    }

    fn parse_name(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii name");
        match name {
            "pi" => Ok(Expr::Pi),
            "x" => Ok(Expr::Var(Axis::X)),
            "y" => Ok(Expr::Var(Axis::Y)),
            "abs" | "sign" | "sqrt" | "exp" | "log" | "sin" | "cos" => {
                let arg = self.parse_call_args(start, false)?;
                Ok(match name {
                    "abs" => Expr::Abs(Box::new(arg.0)),
                    "sign" => Expr::Sign(Box::new(arg.0)),
                    "sqrt" => Expr::Sqrt(Box::new(arg.0)),
                    "exp" => Expr::Exp(Box::new(arg.0)),
                    "log" => Expr::Log(Box::new(arg.0)),
                    "sin" => Expr::Sin(Box::new(arg.0)),
                    _ => Expr::Cos(Box::new(arg.0)),
                })
            }
            "min" | "max" => {
                let (a, b) = self.parse_call_args(start, true)?;
                let b = b.expect("two-argument call");
                Ok(if name == "min" {
                    Expr::Min(Box::new(a), Box::new(b))
                } else {
                    Expr::Max(Box::new(a), Box::new(b))
                })
            }
            _ => {
                self.pos = start;
                Err(self.err("a variable, 'pi', or a function name"))
            }
        }
    }

    fn parse_call_args(
        &mut self,
        name_start: usize,
        two: bool,
    ) -> Result<(Expr, Option<Expr>), ExprError> {
        if self.peek() != Some(b'(') {
            self.pos = name_start;
            return Err(self.err("'(' after function name"));
        }
        self.pos += 1;
        let first = self.parse_expr()?;
        let second = if two {
            if self.peek() != Some(b',') {
                return Err(self.err("','"));
            }
            self.pos += 1;
            Some(self.parse_expr()?)
        } else {
            None
        };
        if self.peek() != Some(b')') {
            return Err(self.err("')'"));
        }
        self.pos += 1;
        Ok((first, second))
    }
}
