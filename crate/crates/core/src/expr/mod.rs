//! A small real-valued expression language for chart components.
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := "-" unary | power
//! power   := primary ("^" unary)?
//! primary := NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")"
//! ```
//!
//! Negation binds looser than `^`, so `-u^2` is `-(u^2)`, and `^` is right
//! associative. Identifiers are declared chart variables, the constants `pi`
//! and `e`, or one of the functions in [`Func`].

mod parser;

pub use parser::parse_expression;

use std::fmt;

use crate::error::{Error, Result};

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
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    pub const ALL: [Func; 10] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    /// Value, first and second derivative at `x`.
    pub fn eval2(self, x: f64) -> (f64, f64, f64) {
        match self {
            Func::Sin => (x.sin(), x.cos(), -x.sin()),
            Func::Cos => (x.cos(), -x.sin(), -x.cos()),
            Func::Tan => {
                let t = x.tan();
                let sec2 = 1.0 + t * t;
                (t, sec2, 2.0 * t * sec2)
            }
            Func::Sinh => (x.sinh(), x.cosh(), x.sinh()),
            Func::Cosh => (x.cosh(), x.sinh(), x.cosh()),
            Func::Tanh => {
                let t = x.tanh();
                let sech2 = 1.0 - t * t;
                (t, sech2, -2.0 * t * sech2)
            }
            Func::Exp => {
                let e = x.exp();
                (e, e, e)
            }
            Func::Log => (x.ln(), 1.0 / x, -1.0 / (x * x)),
            Func::Sqrt => {
                let s = x.sqrt();
                (s, 0.5 / s, -0.25 / (s * x))
            }
            Func::Abs => (x.abs(), if x < 0.0 { -1.0 } else { 1.0 }, 0.0),
        }
    }

    pub fn eval(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
            Func::Tanh => x.tanh(),
            Func::Exp => x.exp(),
            Func::Log => x.ln(),
            Func::Sqrt => x.sqrt(),
            Func::Abs => x.abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constant {
    Pi,
    E,
}

impl Constant {
    pub fn value(self) -> f64 {
        match self {
            Constant::Pi => std::f64::consts::PI,
            Constant::E => std::f64::consts::E,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Constant::Pi => "pi",
            Constant::E => "e",
        }
    }
}

/// Expression tree. Variables are indices into the chart's declared names.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Const(Constant),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    /// Canonical, fully parenthesised text that parses back to the same tree.
    pub fn to_source(&self, vars: &[String]) -> String {
        Printer { expr: self, vars }.to_string()
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Num(_) | Expr::Const(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Neg(a) | Expr::Call(_, a) => a.max_var(),
            Expr::Binary(_, a, b) => match (a.max_var(), b.max_var()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
        }
    }

    /// Plain floating-point evaluation.
    pub fn eval(&self, point: &[f64], vars: &[String]) -> Result<f64> {
        let v = match self {
            Expr::Num(x) => *x,
            Expr::Var(i) => point[*i],
            Expr::Const(c) => c.value(),
            Expr::Neg(a) => -a.eval(point, vars)?,
            Expr::Binary(op, a, b) => {
                let x = a.eval(point, vars)?;
                let y = b.eval(point, vars)?;
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => x / y,
                    BinOp::Pow => real_pow(x, y).map_err(|m| self.eval_error(vars, m))?,
                }
            }
            Expr::Call(f, a) => f.eval(a.eval(point, vars)?),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.eval_error(vars, format!("non-finite value {v}")))
        }
    }

    pub(crate) fn eval_error(&self, vars: &[String], message: impl Into<String>) -> Error {
        Error::Evaluation { node: self.to_source(vars), message: message.into() }
    }
}

/// `x^y` restricted to real results: negative bases need integer exponents.
pub(crate) fn real_pow(x: f64, y: f64) -> std::result::Result<f64, String> {
    if x < 0.0 {
        if y.fract() != 0.0 {
            return Err(format!("negative base {x} with non-integer exponent {y}"));
        }
        if y.abs() <= i32::MAX as f64 {
            return Ok(x.powi(y as i32));
        }
    }
    Ok(x.powf(y))
}

struct Printer<'a> {
    expr: &'a Expr,
    vars: &'a [String],
}

impl<'a> fmt::Display for Printer<'a> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sub = |e: &'a Expr| Printer { expr: e, vars: self.vars };
        match self.expr {
            Expr::Num(x) => write!(f, "{x:?}"),
            Expr::Var(i) => match self.vars.get(*i) {
                Some(name) => f.write_str(name),
                None => write!(f, "${i}"),
            },
            Expr::Const(c) => f.write_str(c.name()),
            Expr::Neg(a) => write!(f, "(-{})", sub(a)),
            Expr::Binary(op, a, b) => write!(f, "({} {} {})", sub(a), op.symbol(), sub(b)),
            Expr::Call(func, a) => write!(f, "{}({})", func.name(), sub(a)),
        }
    }
}
