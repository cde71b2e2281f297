//! Closed-form expressions in the variables `t` and `x`: parsing, strict
//! evaluation, and exact symbolic differentiation.
//!
//! The grammar is deliberately small — polynomials, `sin`, `cos`, `exp`,
//! the constant `pi`, and `^` with nonnegative integer exponents — so that
//! it is closed under differentiation and every derivative the solver needs
//! stays inside the grammar.

use std::fmt;
use thiserror::Error;

/// Highest single-call derivative order supported by [`differentiate`].
pub const MAX_DERIVATIVE_ORDER: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    T,
    X,
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::T => write!(f, "t"),
            Var::X => write!(f, "x"),
        }
    }
}

/// Expression tree. `Pow` exponents are nonnegative integer literals.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Pi,
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: expected {expected}")]
    Syntax { offset: usize, expected: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvalError {
    #[error("division by zero at (t = {t}, x = {x})")]
    DivisionByZero { t: f64, x: f64 },
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum DeriveError {
    #[error("derivative order {requested} exceeds the supported maximum {MAX_DERIVATIVE_ORDER}")]
    OrderTooHigh { requested: usize },
}

// ---------------------------------------------------------------------------
// Tokenizer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
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

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    /// Next token together with its starting byte offset; `None` at end.
    fn next(&mut self) -> Result<Option<(usize, Tok)>, ParseError> {
        self.skip_ws();
        if self.pos >= self.src.len() {
            return Ok(None);
        }
        let start = self.pos;
        let c = self.src[start];
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' => {
                return Ok(Some((start, self.lex_number(start)?)));
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let mut end = start;
                while end < self.src.len()
                    && (self.src[end].is_ascii_alphanumeric() || self.src[end] == b'_')
                {
                    end += 1;
                }
                self.pos = end;
                let name = std::str::from_utf8(&self.src[start..end]).unwrap().to_owned();
                return Ok(Some((start, Tok::Ident(name))));
            }
            _ => {
                return Err(ParseError::Syntax {
                    offset: start,
                    expected: "a number, identifier, operator, or parenthesis".into(),
                })
            }
        };
        self.pos += 1;
        Ok(Some((start, tok)))
    }

    fn lex_number(&mut self, start: usize) -> Result<Tok, ParseError> {
        let mut end = start;
        while end < self.src.len() && self.src[end].is_ascii_digit() {
            end += 1;
        }
        if end < self.src.len() && self.src[end] == b'.' {
            end += 1;
            while end < self.src.len() && self.src[end].is_ascii_digit() {
                end += 1;
            }
        }
        if end < self.src.len() && (self.src[end] == b'e' || self.src[end] == b'E') {
            let mut cursor = end + 1;
            if cursor < self.src.len() && (self.src[cursor] == b'+' || self.src[cursor] == b'-') {
                cursor += 1;
            }
            if cursor < self.src.len() && self.src[cursor].is_ascii_digit() {
                while cursor < self.src.len() && self.src[cursor].is_ascii_digit() {
                    cursor += 1;
                }
                end = cursor;
            }
        }
        self.pos = end;
        let text = std::str::from_utf8(&self.src[start..end]).unwrap();
        text.parse::<f64>()
            .map(Tok::Num)
            .map_err(|_| ParseError::Syntax {
                offset: start,
                expected: "a numeric literal".into(),
            })
    }
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser {
    toks: Vec<(usize, Tok)>,
    cursor: usize,
    end_offset: usize,
}

impl Parser {
    fn peek(&self) -> Option<&(usize, Tok)> {
        self.toks.get(self.cursor)
    }

    fn bump(&mut self) -> Option<(usize, Tok)> {
        let t = self.toks.get(self.cursor).cloned();
        if t.is_some() {
            self.cursor += 1;
        }
        t
    }

    fn here(&self) -> usize {
        self.peek().map(|(o, _)| *o).unwrap_or(self.end_offset)
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        match self.bump() {
            Some((_, Tok::RParen)) => Ok(()),
            Some((offset, _)) => Err(ParseError::Syntax {
                offset,
                expected: "`)`".into(),
            }),
            None => Err(ParseError::Syntax {
                offset: self.end_offset,
                expected: "`)`".into(),
            }),
        }
    }

    // expr := term (('+' | '-') term)*
    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some((_, Tok::Plus)) => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some((_, Tok::Minus)) => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    // term := unary (('*' | '/') unary)*
    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some((_, Tok::Star)) => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some((_, Tok::Slash)) => {
                    self.bump();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    // unary := '-' unary | power
    fn unary(&mut self) -> Result<Expr, ParseError> {
        if let Some((_, Tok::Minus)) = self.peek() {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    // power := atom ('^' uint)*
    fn power(&mut self) -> Result<Expr, ParseError> {
        let mut base = self.atom()?;
        while let Some((_, Tok::Caret)) = self.peek() {
            self.bump();
            let offset = self.here();
            match self.bump() {
                Some((_, Tok::Num(v))) if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 => {
                    base = Expr::Pow(Box::new(base), v as u32);
                }
                _ => {
                    return Err(ParseError::Syntax {
                        offset,
                        expected: "a nonnegative integer exponent".into(),
                    })
                }
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let offset = self.here();
        match self.bump() {
            Some((_, Tok::Num(v))) => Ok(Expr::Num(v)),
            Some((_, Tok::LParen)) => {
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Some((ident_offset, Tok::Ident(name))) => match name.as_str() {
                "t" => Ok(Expr::Var(Var::T)),
                "x" => Ok(Expr::Var(Var::X)),
                "pi" => Ok(Expr::Pi),
                "sin" | "cos" | "exp" => {
                    match self.bump() {
                        Some((_, Tok::LParen)) => {}
                        _ => {
                            return Err(ParseError::Syntax {
                                offset: self.toks.get(self.cursor.saturating_sub(1)).map(|(o, _)| *o).unwrap_or(self.end_offset),
                                expected: format!("`(` after `{name}`"),
                            })
                        }
                    }
                    let arg = Box::new(self.expr()?);
                    self.expect_rparen()?;
                    Ok(match name.as_str() {
                        "sin" => Expr::Sin(arg),
                        "cos" => Expr::Cos(arg),
                        _ => Expr::Exp(arg),
                    })
                }
                _ => Err(ParseError::UnknownIdentifier {
                    offset: ident_offset,
                    name,
                }),
            },
            _ => Err(ParseError::Syntax {
                offset,
                expected: "an expression".into(),
            }),
        }
    }
}

/// Parse an expression in the variables `t` and `x`.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let mut lexer = Lexer::new(text);
    let mut toks = Vec::new();
    while let Some(tok) = lexer.next()? {
        toks.push(tok);
    }
    let mut parser = Parser {
        toks,
        cursor: 0,
        end_offset: text.len(),
    };
    let e = parser.expr()?;
    if let Some((offset, _)) = parser.peek() {
        return Err(ParseError::Syntax {
            offset: *offset,
            expected: "end of input or a binary operator".into(),
        });
    }
    Ok(e)
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Strict evaluation; division by an exact zero is an error, not infinity.
pub fn eval(e: &Expr, t: f64, x: f64) -> Result<f64, EvalError> {
    match e {
        Expr::Num(v) => Ok(*v),
        Expr::Pi => Ok(std::f64::consts::PI),
        Expr::Var(Var::T) => Ok(t),
        Expr::Var(Var::X) => Ok(x),
        Expr::Neg(u) => Ok(-eval(u, t, x)?),
        Expr::Add(a, b) => Ok(eval(a, t, x)? + eval(b, t, x)?),
        Expr::Sub(a, b) => Ok(eval(a, t, x)? - eval(b, t, x)?),
        Expr::Mul(a, b) => Ok(eval(a, t, x)? * eval(b, t, x)?),
        Expr::Div(a, b) => {
            let den = eval(b, t, x)?;
            if den == 0.0 {
                return Err(EvalError::DivisionByZero { t, x });
            }
            Ok(eval(a, t, x)? / den)
        }
        Expr::Pow(u, n) => Ok(eval(u, t, x)?.powi(*n as i32)),
        Expr::Sin(u) => Ok(eval(u, t, x)?.sin()),
        Expr::Cos(u) => Ok(eval(u, t, x)?.cos()),
        Expr::Exp(u) => Ok(eval(u, t, x)?.exp()),
    }
}

// ---------------------------------------------------------------------------
// Differentiation
// ---------------------------------------------------------------------------

/// Exact symbolic derivative of order `order` with respect to `var`,
/// with constant folding applied after each single differentiation.
pub fn differentiate(e: &Expr, var: Var, order: usize) -> Result<Expr, DeriveError> {
    if order > MAX_DERIVATIVE_ORDER {
        return Err(DeriveError::OrderTooHigh { requested: order });
    }
    let mut cur = e.clone();
    for _ in 0..order {
        cur = fold(d1(&cur, var));
    }
    Ok(cur)
}

fn d1(e: &Expr, var: Var) -> Expr {
    let zero = || Expr::Num(0.0);
    match e {
        Expr::Num(_) | Expr::Pi => zero(),
        Expr::Var(v) => {
            if *v == var {
                Expr::Num(1.0)
            } else {
                zero()
            }
        }
        Expr::Neg(u) => Expr::Neg(Box::new(d1(u, var))),
        Expr::Add(a, b) => Expr::Add(Box::new(d1(a, var)), Box::new(d1(b, var))),
        Expr::Sub(a, b) => Expr::Sub(Box::new(d1(a, var)), Box::new(d1(b, var))),
        Expr::Mul(a, b) => Expr::Add(
            Box::new(Expr::Mul(Box::new(d1(a, var)), b.clone())),
            Box::new(Expr::Mul(a.clone(), Box::new(d1(b, var)))),
        ),
        Expr::Div(a, b) => Expr::Div(
            Box::new(Expr::Sub(
                Box::new(Expr::Mul(Box::new(d1(a, var)), b.clone())),
                Box::new(Expr::Mul(a.clone(), Box::new(d1(b, var)))),
            )),
            Box::new(Expr::Pow(b.clone(), 2)),
        ),
        Expr::Pow(u, n) => {
            if *n == 0 {
                zero()
            } else {
                Expr::Mul(
                    Box::new(Expr::Mul(
                        Box::new(Expr::Num(*n as f64)),
                        Box::new(Expr::Pow(u.clone(), n - 1)),
                    )),
                    Box::new(d1(u, var)),
                )
            }
        }
        Expr::Sin(u) => Expr::Mul(Box::new(Expr::Cos(u.clone())), Box::new(d1(u, var))),
        Expr::Cos(u) => Expr::Neg(Box::new(Expr::Mul(
            Box::new(Expr::Sin(u.clone())),
            Box::new(d1(u, var)),
        ))),
        Expr::Exp(u) => Expr::Mul(Box::new(Expr::Exp(u.clone())), Box::new(d1(u, var))),
    }
}

fn is_zero(e: &Expr) -> bool {
    matches!(e, Expr::Num(v) if *v == 0.0)
}

fn is_one(e: &Expr) -> bool {
    matches!(e, Expr::Num(v) if *v == 1.0)
}

/// Wrap a finite constant, keeping negative values as `Neg(Num)` so that
/// printed trees reparse to structurally identical ASTs.
fn num(v: f64) -> Expr {
    if v.is_sign_negative() && v != 0.0 {
        Expr::Neg(Box::new(Expr::Num(-v)))
    } else {
        Expr::Num(v)
    }
}

/// Bottom-up constant folding: `0*e -> 0`, `e+0 -> e`, `1*e -> e`,
/// literal arithmetic, and trivial powers.
pub fn fold(e: Expr) -> Expr {
    match e {
        Expr::Num(_) | Expr::Pi | Expr::Var(_) => e,
        Expr::Neg(u) => {
            let u = fold(*u);
            match u {
                Expr::Num(v) if v == 0.0 => Expr::Num(0.0),
                Expr::Neg(inner) => *inner,
                other => Expr::Neg(Box::new(other)),
            }
        }
        Expr::Add(a, b) => {
            let a = fold(*a);
            let b = fold(*b);
            match (&a, &b) {
                (_, _) if is_zero(&a) => b,
                (_, _) if is_zero(&b) => a,
                (Expr::Num(x), Expr::Num(y)) if (x + y).is_finite() => num(x + y),
                _ => Expr::Add(Box::new(a), Box::new(b)),
            }
        }
        Expr::Sub(a, b) => {
            let a = fold(*a);
            let b = fold(*b);
            match (&a, &b) {
                (_, _) if is_zero(&b) => a,
                (_, _) if is_zero(&a) => fold(Expr::Neg(Box::new(b))),
                (Expr::Num(x), Expr::Num(y)) if (x - y).is_finite() => num(x - y),
                _ => Expr::Sub(Box::new(a), Box::new(b)),
            }
        }
        Expr::Mul(a, b) => {
            let a = fold(*a);
            let b = fold(*b);
            match (&a, &b) {
                (_, _) if is_zero(&a) || is_zero(&b) => Expr::Num(0.0),
                (_, _) if is_one(&a) => b,
                (_, _) if is_one(&b) => a,
                (Expr::Num(x), Expr::Num(y)) if (x * y).is_finite() => num(x * y),
                _ => Expr::Mul(Box::new(a), Box::new(b)),
            }
        }
        Expr::Div(a, b) => {
            let a = fold(*a);
            let b = fold(*b);
            match (&a, &b) {
                (_, _) if is_one(&b) => a,
                (Expr::Num(x), Expr::Num(y)) if *y != 0.0 && (x / y).is_finite() => num(x / y),
                _ => Expr::Div(Box::new(a), Box::new(b)),
            }
        }
        Expr::Pow(u, n) => {
            let u = fold(*u);
            match n {
                0 => Expr::Num(1.0),
                1 => u,
                _ => match &u {
                    Expr::Num(x) if x.powi(n as i32).is_finite() => num(x.powi(n as i32)),
                    _ => Expr::Pow(Box::new(u), n),
                },
            }
        }
        Expr::Sin(u) => Expr::Sin(Box::new(fold(*u))),
        Expr::Cos(u) => Expr::Cos(Box::new(fold(*u))),
        Expr::Exp(u) => Expr::Exp(Box::new(fold(*u))),
    }
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

// Precedence levels used for minimal parenthesization:
// add/sub = 1, mul/div = 2, unary neg = 3, pow = 4, atoms = 5.
fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 1,
        Expr::Mul(..) | Expr::Div(..) => 2,
        Expr::Neg(..) => 3,
        Expr::Pow(..) => 4,
        _ => 5,
    }
}

fn write_prec(e: &Expr, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let p = precedence(e);
    if p < min {
        write!(f, "(")?;
    }
    match e {
        Expr::Num(v) => write!(f, "{v}")?,
        Expr::Pi => write!(f, "pi")?,
        Expr::Var(v) => write!(f, "{v}")?,
        Expr::Neg(u) => {
            write!(f, "-")?;
            write_prec(u, 3, f)?;
        }
        Expr::Add(a, b) => {
            write_prec(a, 1, f)?;
            write!(f, " + ")?;
            write_prec(b, 2, f)?;
        }
        Expr::Sub(a, b) => {
            write_prec(a, 1, f)?;
            write!(f, " - ")?;
            write_prec(b, 2, f)?;
        }
        Expr::Mul(a, b) => {
            write_prec(a, 2, f)?;
            write!(f, "*")?;
            write_prec(b, 3, f)?;
        }
        Expr::Div(a, b) => {
            write_prec(a, 2, f)?;
            write!(f, "/")?;
            write_prec(b, 3, f)?;
        }
        Expr::Pow(u, n) => {
            write_prec(u, 5, f)?;
            write!(f, "^{n}")?;
        }
        Expr::Sin(u) => write!(f, "sin({u})")?,
        Expr::Cos(u) => write!(f, "cos({u})")?,
        Expr::Exp(u) => write!(f, "exp({u})")?,
    }
    if p < min {
        write!(f, ")")?;
    }
    Ok(())
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_prec(self, 0, f)
    }
}
