//! Expression language for integrands L(t, u, v, w).
//!
//! Sources are parsed by recursive descent with the usual precedence,
//! tightest first: `^` (right associative), unary minus, `*` `/`, `+` `-`
//! (all left associative). Free names beyond the four variables `t`, `u`,
//! `v`, `w` are parameters, bound to numbers at evaluation time. The function
//! set is `sin`, `cos`, `exp`, `log`, `sqrt`.
//!
//! Integer exponents (any variable-free exponent with an integral value) are
//! evaluated by repeated multiplication; other exponents require a positive
//! base. Evaluation reports domain violations instead of producing IEEE
//! specials: division by zero, `log` of a non-positive value, `sqrt` of a
//! negative value, and non-integer powers of a non-positive base.
//!
//! [`Expression::eval_with_partials`] carries a second-order forward-mode
//! value through the same evaluation, yielding the exact gradient and Hessian
//! with respect to (u, v, w) at the point.

mod jet;
mod parser;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use jet::Jet2;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown function '{name}' at byte {offset}")]
    UnknownFunction { offset: usize, name: String },
}

impl ParseError {
    /// Byte offset into the source where the error was detected.
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } => *offset,
            ParseError::UnknownFunction { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error: {0}")]
    Domain(&'static str),
    #[error("parameter '{0}' is not bound")]
    UnboundParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Var {
    T,
    U,
    V,
    W,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Node {
    Number(f64),
    Var(Var),
    Param(String),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// Parsed expression in the variables t, u, v, w and named parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Node,
}

/// Value with exact first and second partial derivatives in (u, v, w).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrderValue {
    pub value: f64,
    /// Partial derivatives (d/du, d/dv, d/dw).
    pub grad: [f64; 3],
    /// Symmetric second partials, rows and columns ordered (u, v, w).
    pub hess: [[f64; 3]; 3],
}

pub fn parse(source: &str) -> Result<Expression, ParseError> {
    parser::parse(source).map(|root| Expression { root })
}

impl FromStr for Expression {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Expression, ParseError> {
        parse(s)
    }
}

impl Expression {
    pub fn eval(
        &self,
        t: f64,
        u: f64,
        v: f64,
        w: f64,
        params: &BTreeMap<String, f64>,
    ) -> Result<f64, EvalError> {
        eval_node(&self.root, t, u, v, w, params)
    }

    pub fn eval_with_partials(
        &self,
        t: f64,
        u: f64,
        v: f64,
        w: f64,
        params: &BTreeMap<String, f64>,
    ) -> Result<SecondOrderValue, EvalError> {
        let jet: Jet2 = eval_node(
            &self.root,
            Jet2::constant(t),
            Jet2::variable(u, 0),
            Jet2::variable(v, 1),
            Jet2::variable(w, 2),
            params,
        )?;
        Ok(SecondOrderValue {
            value: jet.val,
            grad: jet.grad,
            hess: jet.hessian(),
        })
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(f, &self.root, 0)
    }
}

/// Scalar arithmetic shared by the plain and the forward-mode evaluation.
trait Scalar:
    Copy
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
    + std::ops::Neg<Output = Self>
{
    fn from_f64(c: f64) -> Self;
    fn value(self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn powi(self, n: i32) -> Self;
}

impl Scalar for f64 {
    fn from_f64(c: f64) -> f64 {
        c
    }
    fn value(self) -> f64 {
        self
    }
    fn sin(self) -> f64 {
        f64::sin(self)
    }
    fn cos(self) -> f64 {
        f64::cos(self)
    }
    fn exp(self) -> f64 {
        f64::exp(self)
    }
    fn ln(self) -> f64 {
        f64::ln(self)
    }
    fn sqrt(self) -> f64 {
        f64::sqrt(self)
    }
    fn powi(self, n: i32) -> f64 {
        f64::powi(self, n)
    }
}

impl Scalar for Jet2 {
    fn from_f64(c: f64) -> Jet2 {
        Jet2::constant(c)
    }
    fn value(self) -> f64 {
        self.val
    }
    fn sin(self) -> Jet2 {
        Jet2::sin(self)
    }
    fn cos(self) -> Jet2 {
        Jet2::cos(self)
    }
    fn exp(self) -> Jet2 {
        Jet2::exp(self)
    }
    fn ln(self) -> Jet2 {
        Jet2::ln(self)
    }
    fn sqrt(self) -> Jet2 {
        Jet2::sqrt(self)
    }
    fn powi(self, n: i32) -> Jet2 {
        Jet2::powi(self, n)
    }
}

impl Node {
    fn is_variable_free(&self) -> bool {
        match self {
            Node::Number(_) | Node::Param(_) => true,
            Node::Var(_) => false,
            Node::Neg(e) => e.is_variable_free(),
            Node::Bin(_, a, b) => a.is_variable_free() && b.is_variable_free(),
            Node::Call(_, e) => e.is_variable_free(),
        }
    }
}

fn eval_node<S: Scalar>(
    node: &Node,
    t: S,
    u: S,
    v: S,
    w: S,
    params: &BTreeMap<String, f64>,
) -> Result<S, EvalError> {
    match node {
        Node::Number(c) => Ok(S::from_f64(*c)),
        Node::Var(Var::T) => Ok(t),
        Node::Var(Var::U) => Ok(u),
        Node::Var(Var::V) => Ok(v),
        Node::Var(Var::W) => Ok(w),
        Node::Param(name) => params
            .get(name)
            .map(|&c| S::from_f64(c))
            .ok_or_else(|| EvalError::UnboundParameter(name.clone())),
        Node::Neg(e) => Ok(-eval_node(e, t, u, v, w, params)?),
        Node::Bin(op, a, b) => {
            let lhs = eval_node(a, t, u, v, w, params)?;
            let rhs = eval_node(b, t, u, v, w, params)?;
            match op {
                BinOp::Add => Ok(lhs + rhs),
                BinOp::Sub => Ok(lhs - rhs),
                BinOp::Mul => Ok(lhs * rhs),
                BinOp::Div => {
                    if rhs.value() == 0.0 {
                        Err(EvalError::Domain("division by zero"))
                    } else {
                        Ok(lhs / rhs)
                    }
                }
                BinOp::Pow => {
                    let e = rhs.value();
                    if b.is_variable_free() && e.fract() == 0.0 && e.abs() <= i32::MAX as f64 {
                        let n = e as i32;
                        if n < 0 && lhs.value() == 0.0 {
                            return Err(EvalError::Domain("zero base with a negative exponent"));
                        }
                        Ok(lhs.powi(n))
                    } else if lhs.value() <= 0.0 {
                        Err(EvalError::Domain(
                            "non-integer exponent needs a positive base",
                        ))
                    } else {
                        Ok((rhs * lhs.ln()).exp())
                    }
                }
            }
        }
        Node::Call(func, e) => {
            let arg = eval_node(e, t, u, v, w, params)?;
            match func {
                Func::Sin => Ok(arg.sin()),
                Func::Cos => Ok(arg.cos()),
                Func::Exp => Ok(arg.exp()),
                Func::Log => {
                    if arg.value() <= 0.0 {
                        Err(EvalError::Domain("log of a non-positive value"))
                    } else {
                        Ok(arg.ln())
                    }
                }
                Func::Sqrt => {
                    if arg.value() < 0.0 {
                        Err(EvalError::Domain("square root of a negative value"))
                    } else {
                        Ok(arg.sqrt())
                    }
                }
            }
        }
    }
}

// Printer precedence levels; parent passes the minimum level a child may
// print at without parentheses.
fn node_prec(node: &Node) -> u8 {
    match node {
        Node::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
        Node::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
        Node::Neg(_) => 3,
        Node::Bin(BinOp::Pow, ..) => 4,
        Node::Number(c) if *c < 0.0 => 3,
        Node::Number(_) | Node::Var(_) | Node::Param(_) | Node::Call(..) => 5,
    }
}

fn write_node(f: &mut fmt::Formatter<'_>, node: &Node, min_prec: u8) -> fmt::Result {
    let prec = node_prec(node);
    if prec < min_prec {
        write!(f, "(")?;
        write_node(f, node, 0)?;
        return write!(f, ")");
    }
    match node {
        Node::Number(c) => write!(f, "{c}"),
        Node::Var(Var::T) => write!(f, "t"),
        Node::Var(Var::U) => write!(f, "u"),
        Node::Var(Var::V) => write!(f, "v"),
        Node::Var(Var::W) => write!(f, "w"),
        Node::Param(name) => write!(f, "{name}"),
        Node::Neg(e) => {
            write!(f, "-")?;
            write_node(f, e, 3)
        }
        Node::Bin(op, a, b) => {
            let (sym, lp, rp) = match op {
                BinOp::Add => (" + ", 1, 2),
                BinOp::Sub => (" - ", 1, 2),
                BinOp::Mul => (" * ", 2, 3),
                BinOp::Div => (" / ", 2, 3),
                BinOp::Pow => ("^", 5, 4),
            };
            write_node(f, a, lp)?;
            write!(f, "{sym}")?;
            write_node(f, b, rp)
        }
        Node::Call(func, e) => {
            let name = match func {
                Func::Sin => "sin",
                Func::Cos => "cos",
                Func::Exp => "exp",
                Func::Log => "log",
                Func::Sqrt => "sqrt",
            };
            write!(f, "{name}(")?;
            write_node(f, e, 0)?;
            write!(f, ")")
        }
    }
}
