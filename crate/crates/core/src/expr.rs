//! A small expression language for right-hand sides `f_i(t, x)`, weights and
//! moduli.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | 't' | 'x1'..'xn' | 'pi' | 'e' | call | '(' expr ')'
//! ```
//!
//! So `^` is right-associative and binds tighter than unary minus:
//! `-2^2 = -4`. Calls: `sin cos exp log sqrt abs sign heaviside` (one
//! argument), `min max` (two), `norm_inf(x)` and `omega_k(k, expr)` with an
//! integer literal `k` in `1..=3`. `heaviside(s)` is 1 for `s > 0`, else 0.

use std::fmt;

use crate::error::{Error, Result};
use crate::moduli::{omega_k, OMEGA_K_MAX};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
    Sign,
    Heaviside,
    Min,
    Max,
}

impl Func {
    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "sign" => Func::Sign,
            "heaviside" => Func::Heaviside,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sign => "sign",
            Func::Heaviside => "heaviside",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Constant {
    Pi,
    E,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Const(Constant),
    Time,
    /// `x_i`, 1-based.
    Var(usize),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
    NormInf,
    OmegaK(u32, Box<Expr>),
}

/// A syntax tree node with the byte range it was parsed from.
/// Equality ignores spans.
#[derive(Debug, Clone)]
pub struct Expr {
    pub node: Node,
    pub span: Span,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.node == other.node
    }
}

/// A parsed expression over `t` and `x1..xn`.
#[derive(Debug, Clone)]
pub struct ExprTree {
    root: Expr,
    dim: usize,
    source: String,
}

impl PartialEq for ExprTree {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.root == other.root
    }
}

/// Parses `src` over `t` and `x1..xn`, `n ≥ 1`.
pub fn parse(src: &str, n: usize) -> Result<ExprTree> {
    if n == 0 {
        return Err(Error::config("expressions over x need n >= 1"));
    }
    parse_with_dim(src, n)
}

/// Parses a function of `t` alone (weights and moduli).
pub fn parse_scalar(src: &str) -> Result<ExprTree> {
    parse_with_dim(src, 0)
}

fn parse_with_dim(src: &str, dim: usize) -> Result<ExprTree> {
    let tokens = lex(src)?;
    let mut p = Parser { tokens, pos: 0, dim };
    let root = p.expr()?;
    let tok = p.peek();
    if tok.kind != Tok::End {
        return Err(Error::Parse {
            offset: tok.span.start,
            message: format!("unexpected {}; expected one of: operator, end of input", tok.kind),
        });
    }
    Ok(ExprTree {
        root,
        dim,
        source: src.to_string(),
    })
}

/// Evaluates a tree at `(t, x)`.
pub fn eval_expr(e: &ExprTree, t: f64, x: &[f64]) -> Result<f64> {
    e.eval(t, x)
}

impl ExprTree {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn root(&self) -> &Expr {
        &self.root
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Value at `(t, x)`; never NaN or infinite.
    pub fn eval(&self, t: f64, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::config(format!(
                "expression expects {} state components, got {}",
                self.dim,
                x.len()
            )));
        }
        self.eval_node(&self.root, t, x)
    }

    /// Value of a function of `t` alone.
    pub fn eval_scalar(&self, t: f64) -> Result<f64> {
        self.eval(t, &[])
    }

    fn fail(&self, e: &Expr, message: impl Into<String>) -> Error {
        Error::Eval {
            expr: self.source.get(e.span.start..e.span.end).unwrap_or("").to_string(),
            start: e.span.start,
            end: e.span.end,
            message: message.into(),
        }
    }

    fn eval_node(&self, e: &Expr, t: f64, x: &[f64]) -> Result<f64> {
        let v = match &e.node {
            Node::Num(v) => *v,
            Node::Const(Constant::Pi) => std::f64::consts::PI,
            Node::Const(Constant::E) => std::f64::consts::E,
            Node::Time => t,
            Node::Var(i) => x[i - 1],
            Node::NormInf => x.iter().fold(0.0, |m: f64, v| m.max(v.abs())),
            Node::Neg(a) => -self.eval_node(a, t, x)?,
            Node::Binary(op, a, b) => {
                let a = self.eval_node(a, t, x)?;
                let b = self.eval_node(b, t, x)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(self.fail(e, "division by zero"));
                        }
                        a / b
                    }
                    BinOp::Pow => {
                        if a < 0.0 && b.fract() != 0.0 {
                            return Err(self.fail(e, format!("negative base {a} with non-integer exponent {b}")));
                        }
                        if a == 0.0 && b < 0.0 {
                            return Err(self.fail(e, "zero raised to a negative power"));
                        }
                        a.powf(b)
                    }
                }
            }
            Node::Call(f, args) => {
                let a = self.eval_node(&args[0], t, x)?;
                match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Log => {
                        if !(a > 0.0) {
                            return Err(self.fail(e, format!("log of nonpositive value {a}")));
                        }
                        a.ln()
                    }
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(self.fail(e, format!("sqrt of negative value {a}")));
                        }
                        a.sqrt()
                    }
                    Func::Abs => a.abs(),
                    Func::Sign => {
                        if a > 0.0 {
                            1.0
                        } else if a < 0.0 {
                            -1.0
                        } else {
                            0.0
                        }
                    }
                    Func::Heaviside => {
                        if a > 0.0 {
                            1.0
                        } else {
                            0.0
                        }
                    }
                    Func::Min => a.min(self.eval_node(&args[1], t, x)?),
                    Func::Max => a.max(self.eval_node(&args[1], t, x)?),
                }
            }
            Node::OmegaK(k, a) => {
                let a = self.eval_node(a, t, x)?;
                if a < 0.0 {
                    return Err(self.fail(e, format!("omega_k of negative value {a}")));
                }
                omega_k(*k, a).map_err(|err| self.fail(e, err.to_string()))?
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.fail(e, format!("result {v} is not finite")))
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.node {
            Node::Num(v) => write!(f, "{v:?}"),
            Node::Const(Constant::Pi) => f.write_str("pi"),
            Node::Const(Constant::E) => f.write_str("e"),
            Node::Time => f.write_str("t"),
            Node::Var(i) => write!(f, "x{i}"),
            Node::NormInf => f.write_str("norm_inf(x)"),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Node::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            Node::OmegaK(k, a) => write!(f, "omega_k({k}, {a})"),
        }
    }
}

/// Fully parenthesised; re-parses to an equal tree.
impl fmt::Display for ExprTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

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
    Comma,
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(v) => write!(f, "number {v}"),
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Plus => f.write_str("'+'"),
            Tok::Minus => f.write_str("'-'"),
            Tok::Star => f.write_str("'*'"),
            Tok::Slash => f.write_str("'/'"),
            Tok::Caret => f.write_str("'^'"),
            Tok::LParen => f.write_str("'('"),
            Tok::RParen => f.write_str("')'"),
            Tok::Comma => f.write_str("','"),
            Tok::End => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: Tok,
    span: Span,
}

fn lex(src: &str) -> Result<Vec<Token>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let single = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(kind) = single {
            i += 1;
            out.push(Token {
                kind,
                span: Span { start, end: i },
            });
            continue;
        }
        if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| Error::Parse {
                offset: start,
                message: format!("malformed number `{text}`"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    offset: start,
                    message: format!("number `{text}` is out of range"),
                });
            }
            out.push(Token {
                kind: Tok::Num(v),
                span: Span { start, end: i },
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                kind: Tok::Ident(src[start..i].to_string()),
                span: Span { start, end: i },
            });
            continue;
        }
        let ch = src[start..].chars().next().unwrap_or('?');
        return Err(Error::Parse {
            offset: start,
            message: format!("unexpected character `{ch}`"),
        });
    }
    out.push(Token {
        kind: Tok::End,
        span: Span {
            start: src.len(),
            end: src.len(),
        },
    });
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    dim: usize,
}

const PRIMARY_START: &str = "expected one of: number, identifier, '(', '-'";

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if t.kind != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, kind: Tok) -> Result<Token> {
        let t = self.next();
        if t.kind == kind {
            Ok(t)
        } else {
            Err(Error::Parse {
                offset: t.span.start,
                message: format!("unexpected {}; expected {kind}", t.kind),
            })
        }
    }

    fn binary(op: BinOp, a: Expr, b: Expr) -> Expr {
        let span = Span {
            start: a.span.start,
            end: b.span.end,
        };
        Expr {
            node: Node::Binary(op, Box::new(a), Box::new(b)),
            span,
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().kind {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.next();
            let rhs = self.term()?;
            lhs = Self::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().kind {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.next();
            let rhs = self.unary()?;
            lhs = Self::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek().kind == Tok::Minus {
            let start = self.next().span.start;
            let inner = self.unary()?;
            let end = inner.span.end;
            return Ok(Expr {
                node: Node::Neg(Box::new(inner)),
                span: Span { start, end },
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if self.peek().kind == Tok::Caret {
            self.next();
            let exponent = self.unary()?;
            return Ok(Self::binary(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        let tok = self.next();
        let span = tok.span;
        match tok.kind {
            Tok::Num(v) => Ok(Expr {
                node: Node::Num(v),
                span,
            }),
            Tok::LParen => {
                let inner = self.expr()?;
                let close = self.expect(Tok::RParen)?;
                Ok(Expr {
                    node: inner.node,
                    span: Span {
                        start: span.start,
                        end: close.span.end,
                    },
                })
            }
            Tok::Ident(name) => {
                if self.peek().kind == Tok::LParen {
                    self.call(&name, span)
                } else {
                    self.atom(&name, span)
                }
            }
            other => Err(Error::Parse {
                offset: span.start,
                message: format!("unexpected {other}; {PRIMARY_START}"),
            }),
        }
    }

    fn atom(&mut self, name: &str, span: Span) -> Result<Expr> {
        let node = match name {
            "t" => Node::Time,
            "pi" => Node::Const(Constant::Pi),
            "e" => Node::Const(Constant::E),
            "x" => {
                return Err(Error::Parse {
                    offset: span.start,
                    message: "the state vector `x` may only appear as norm_inf(x)".into(),
                })
            }
            _ => match var_index(name) {
                Some(i) if i >= 1 && i <= self.dim => Node::Var(i),
                Some(i) if i >= 1 => {
                    return Err(Error::Parse {
                        offset: span.start,
                        message: format!("variable `{name}` exceeds the dimension {}", self.dim),
                    })
                }
                _ => {
                    return Err(Error::Parse {
                        offset: span.start,
                        message: format!("unknown identifier `{name}`"),
                    })
                }
            },
        };
        Ok(Expr { node, span })
    }

    fn call(&mut self, name: &str, name_span: Span) -> Result<Expr> {
        self.expect(Tok::LParen)?;
        let node = match name {
            "norm_inf" => {
                let arg = self.next();
                if arg.kind != Tok::Ident("x".into()) {
                    return Err(Error::Parse {
                        offset: arg.span.start,
                        message: format!(
                            "unexpected {}; norm_inf takes exactly the bare state vector `x`",
                            arg.kind
                        ),
                    });
                }
                if self.dim == 0 {
                    return Err(Error::Parse {
                        offset: arg.span.start,
                        message: "norm_inf(x) needs a state vector".into(),
                    });
                }
                Node::NormInf
            }
            "omega_k" => {
                let k_tok = self.next();
                let k = match k_tok.kind {
                    Tok::Num(v) if v.fract() == 0.0 && v >= 1.0 && v <= OMEGA_K_MAX as f64 => v as u32,
                    other => return Err(Error::Parse {
                        offset: k_tok.span.start,
                        message: format!(
                            "unexpected {other}; omega_k needs an integer literal 1..={OMEGA_K_MAX} as first argument"
                        ),
                    }),
                };
                self.expect(Tok::Comma)?;
                Node::OmegaK(k, Box::new(self.expr()?))
            }
            _ => {
                let func = Func::lookup(name).ok_or_else(|| Error::Parse {
                    offset: name_span.start,
                    message: format!("unknown function `{name}`"),
                })?;
                let mut args = vec![self.expr()?];
                while self.peek().kind == Tok::Comma {
                    self.next();
                    args.push(self.expr()?);
                }
                if args.len() != func.arity() {
                    return Err(Error::Parse {
                        offset: name_span.start,
                        message: format!("{} takes {} argument(s), got {}", func.name(), func.arity(), args.len()),
                    });
                }
                Node::Call(func, args)
            }
        };
        let close = self.expect(Tok::RParen)?;
        Ok(Expr {
            node,
            span: Span {
                start: name_span.start,
                end: close.span.end,
            },
        })
    }
}

/// `Some(i)` for identifiers of the form `x<digits>` without a leading zero.
fn var_index(name: &str) -> Option<usize> {
    let digits = name.strip_prefix('x')?;
    if digits.is_empty() || digits.starts_with('0') || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return if digits == "0" { Some(0) } else { None };
    }
    digits.parse().ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str) -> f64 {
        parse(src, 1).unwrap().eval(0.0, &[0.0]).unwrap()
    }

    #[test]
    fn precedence_golden_values() {
        assert_eq!(ev("2+3*4"), 14.0);
        assert_eq!(ev("2+3*4^2"), 50.0);
        assert_eq!(ev("-2^2"), -4.0);
        assert_eq!(ev("2^3^2"), 512.0);
        assert_eq!(ev("2^-1"), 0.5);
        assert_eq!(ev("8/4/2"), 1.0);
        assert_eq!(ev("1-2-3"), -4.0);
        assert_eq!(ev("(1+2)*3"), 9.0);
        assert_eq!(ev("1.5e1 + .5"), 15.5);
    }

    #[test]
    fn variables_and_functions() {
        let e = parse("x1", 1).unwrap();
        assert_eq!(e.root().node, Node::Var(1));
        let e = parse("norm_inf(x)", 3).unwrap();
        assert_eq!(e.eval(0.0, &[1.0, -3.0, 2.0]).unwrap(), 3.0);
        assert_eq!(parse("omega_k(1, 0)", 1).unwrap().eval(0.0, &[0.0]).unwrap(), 0.0);
        let e = parse("min(t, x2) + max(sign(-t), heaviside(x1))", 2).unwrap();
        assert_eq!(e.eval(0.5, &[0.0, 2.0]).unwrap(), 0.5);
        assert!((ev("sqrt(4) + exp(0) + log(e) + cos(pi) + abs(-2)") - 5.0).abs() < 1e-15);
    }

    #[test]
    fn golden_tree_for_weighted_omega_k() {
        let e = parse("t*omega_k(1, norm_inf(x))", 3).unwrap();
        let expected = Node::Binary(
            BinOp::Mul,
            Box::new(Expr {
                node: Node::Time,
                span: Span { start: 0, end: 1 },
            }),
            Box::new(Expr {
                node: Node::OmegaK(
                    1,
                    Box::new(Expr {
                        node: Node::NormInf,
                        span: Span { start: 13, end: 24 },
                    }),
                ),
                span: Span { start: 2, end: 25 },
            }),
        );
        assert_eq!(e.root().node, expected);
        assert_eq!(e.root().span, Span { start: 0, end: 25 });
        assert_eq!(e.to_string(), "(t * omega_k(1, norm_inf(x)))");
    }

    #[test]
    fn parse_errors() {
        let err = |s: &str, n| match parse(s, n) {
            Err(Error::Parse { offset, message }) => (offset, message),
            other => panic!("{s}: unexpected {other:?}"),
        };
        assert!(err("phi(t)", 1).1.contains("unknown function"));
        assert!(err("y + 1", 1).1.contains("unknown identifier"));
        assert_eq!(err("x4", 3).0, 0);
        assert!(err("x0", 3).1.contains("unknown identifier"));
        assert!(err("sin(1, 2)", 1).1.contains("argument"));
        assert!(err("max(1)", 1).1.contains("argument"));
        assert_eq!(err("2 + * 3", 1).0, 4);
        assert!(err("(1 + 2", 1).1.contains("expected ')'"));
        assert!(err("omega_k(4, t)", 1).1.contains("integer literal"));
        assert!(err("norm_inf(x1)", 1).1.contains("bare state vector"));
        assert!(err("x", 1).1.contains("norm_inf"));
        assert!(err("1 2", 1).1.contains("expected one of"));
        assert!(err("1e999", 1).1.contains("out of range"));
        assert!(err("2 $ 3", 1).1.contains("unexpected character"));
        assert!(parse("t", 0).is_err());
        assert!(parse_scalar("x1").is_err());
    }

    #[test]
    fn evaluation_errors_carry_locations() {
        let e = parse("1 + log(x1 - 1)", 1).unwrap();
        match e.eval(0.0, &[1.0]).unwrap_err() {
            Error::Eval { expr, start, end, .. } => {
                assert_eq!(expr, "log(x1 - 1)");
                assert_eq!((start, end), (4, 15));
            }
            other => panic!("{other:?}"),
        }
        assert!(parse("1/t", 1).unwrap().eval(0.0, &[0.0]).is_err());
        assert!(parse("exp(t)", 1).unwrap().eval(1e3, &[0.0]).is_err());
        assert!(parse("(-1)^0.5", 1).unwrap().eval(0.0, &[0.0]).is_err());
        assert!(parse("sqrt(t)", 1).unwrap().eval(-1.0, &[0.0]).is_err());
        assert!(parse("x1", 1).unwrap().eval(0.0, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn printing_round_trips() {
        for src in [
            "-2^2",
            "2+3*4^2",
            "t*omega_k(2, norm_inf(x)) - x2/(1+x1^2)",
            "min(-t, 1e-10) + max(pi, e)",
            "--x1",
            "heaviside(t - 0.5) * 0.1",
        ] {
            let a = parse(src, 2).unwrap();
            let b = parse(&a.to_string(), 2).unwrap();
            assert_eq!(a, b, "{src} -> {a}");
        }
    }

    #[test]
    fn scalar_expressions() {
        let e = parse_scalar("t^2 + omega_k(1, t)").unwrap();
        assert_eq!(e.eval_scalar(0.0).unwrap(), 0.0);
        assert!(parse_scalar("norm_inf(x)").is_err());
    }
}
