//! Closed-form scalar expressions over the coordinates `x1..xN`.
//!
//! Grammar, with the usual precedence (`^` binds tighter than unary minus,
//! which binds tighter than `*`/`/`, which bind tighter than `+`/`-`) and left
//! associativity:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ['^' ['-'] integer]
//! atom   := number | 'x' digits | func '(' expr ')' | '(' expr ')'
//! func   := sin | cos | exp | ln | sqrt
//! ```
//!
//! Evaluation with [`Expr::eval_with_gradient`] carries exact first partial
//! derivatives through every node using [`Dual`] numbers.

mod dual;
mod parse;

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

pub use dual::Dual;
pub use parse::{ParseError, ParseErrorKind};

use crate::MAX_DIM;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
}

impl UnaryOp {
    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Exp => "exp",
            UnaryOp::Ln => "ln",
            UnaryOp::Sqrt => "sqrt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
        }
    }
}

/// A node of an expression tree. Variables are stored zero-based.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(usize),
    Unary(UnaryOp, Box<Node>),
    Binary(BinaryOp, Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
}

impl Node {
    fn max_var(&self) -> Option<usize> {
        match self {
            Node::Const(_) => None,
            Node::Var(k) => Some(*k),
            Node::Unary(_, a) | Node::Pow(a, _) => a.max_var(),
            Node::Binary(_, a, b) => match (a.max_var(), b.max_var()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
        }
    }

    fn is_const(&self, c: f64) -> bool {
        matches!(self, Node::Const(v) if *v == c)
    }
}

impl fmt::Display for Node {
    /// Fully parenthesized; parsing the output yields a tree that evaluates
    /// bit-for-bit identically.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Const(c) => {
                if c.is_sign_negative() {
                    write!(f, "(-{:?})", -c)
                } else {
                    write!(f, "{c:?}")
                }
            }
            Node::Var(k) => write!(f, "x{}", k + 1),
            Node::Unary(UnaryOp::Neg, a) => write!(f, "(-{a})"),
            Node::Unary(op, a) => write!(f, "{}({a})", op.name()),
            Node::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Node::Pow(a, n) => write!(f, "({a})^{n}"),
        }
    }
}

/// Domain failure raised while evaluating an expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalErrorKind {
    LogOfNonPositive,
    DivisionByZero,
    SqrtOfNegative,
    /// `sqrt` at zero has no finite derivative.
    SqrtNotDifferentiable,
    NonFinite,
    PointDimension {
        expected: usize,
        found: usize,
    },
}

impl fmt::Display for EvalErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalErrorKind::LogOfNonPositive => f.write_str("logarithm of a non-positive value"),
            EvalErrorKind::DivisionByZero => f.write_str("division by zero"),
            EvalErrorKind::SqrtOfNegative => f.write_str("square root of a negative value"),
            EvalErrorKind::SqrtNotDifferentiable => {
                f.write_str("square root is not differentiable at zero")
            }
            EvalErrorKind::NonFinite => f.write_str("non-finite value"),
            EvalErrorKind::PointDimension { expected, found } => {
                write!(f, "point has {found} coordinates, expected {expected}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{kind} in `{node}`")]
pub struct EvalError {
    pub kind: EvalErrorKind,
    /// The offending sub-expression, printed.
    pub node: String,
}

impl EvalError {
    fn at(kind: EvalErrorKind, node: &Node) -> Self {
        EvalError {
            kind,
            node: node.to_string(),
        }
    }
}

/// Arithmetic needed to evaluate a tree. Implemented for plain `f64` and for
/// [`Dual`]; both go through the same walk so their values agree exactly.
pub(crate) trait Scalar: Copy {
    fn constant(c: f64) -> Self;
    fn variable(index: usize, value: f64) -> Self;
    fn value(&self) -> f64;
    fn add(self, rhs: Self) -> Self;
    fn sub(self, rhs: Self) -> Self;
    fn mul(self, rhs: Self) -> Self;
    fn div(self, rhs: Self) -> Self;
    fn neg(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    /// Whether `sqrt` may be applied at zero (plain values only).
    const SQRT_AT_ZERO: bool;
    fn is_finite(&self) -> bool;
}

impl Scalar for f64 {
    const SQRT_AT_ZERO: bool = true;
    fn constant(c: f64) -> Self {
        c
    }
    fn variable(_: usize, value: f64) -> Self {
        value
    }
    fn value(&self) -> f64 {
        *self
    }
    fn add(self, rhs: Self) -> Self {
        self + rhs
    }
    fn sub(self, rhs: Self) -> Self {
        self - rhs
    }
    fn mul(self, rhs: Self) -> Self {
        self * rhs
    }
    fn div(self, rhs: Self) -> Self {
        self / rhs
    }
    fn neg(self) -> Self {
        -self
    }
    fn sin(self) -> Self {
        libm::sin(self)
    }
    fn cos(self) -> Self {
        libm::cos(self)
    }
    fn exp(self) -> Self {
        libm::exp(self)
    }
    fn ln(self) -> Self {
        libm::log(self)
    }
    fn sqrt(self) -> Self {
        libm::sqrt(self)
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

fn eval_node<S: Scalar>(node: &Node, p: &[f64]) -> Result<S, EvalError> {
    let out = match node {
        Node::Const(c) => S::constant(*c),
        Node::Var(k) => S::variable(*k, p[*k]),
        Node::Unary(op, a) => {
            let a = eval_node::<S>(a, p)?;
            match op {
                UnaryOp::Neg => a.neg(),
                UnaryOp::Sin => a.sin(),
                UnaryOp::Cos => a.cos(),
                UnaryOp::Exp => a.exp(),
                UnaryOp::Ln => {
                    if a.value() <= 0.0 {
                        return Err(EvalError::at(EvalErrorKind::LogOfNonPositive, node));
                    }
                    a.ln()
                }
                UnaryOp::Sqrt => {
                    let v = a.value();
                    if v < 0.0 {
                        return Err(EvalError::at(EvalErrorKind::SqrtOfNegative, node));
                    }
                    if v == 0.0 && !S::SQRT_AT_ZERO {
                        return Err(EvalError::at(EvalErrorKind::SqrtNotDifferentiable, node));
                    }
                    a.sqrt()
                }
            }
        }
        Node::Binary(op, a, b) => {
            let a = eval_node::<S>(a, p)?;
            let b = eval_node::<S>(b, p)?;
            match op {
                BinaryOp::Add => a.add(b),
                BinaryOp::Sub => a.sub(b),
                BinaryOp::Mul => a.mul(b),
                BinaryOp::Div => {
                    if b.value() == 0.0 {
                        return Err(EvalError::at(EvalErrorKind::DivisionByZero, node));
                    }
                    a.div(b)
                }
            }
        }
        Node::Pow(a, n) => {
            let base = eval_node::<S>(a, p)?;
            if *n < 0 && base.value() == 0.0 {
                return Err(EvalError::at(EvalErrorKind::DivisionByZero, node));
            }
            let mag = powi(base, n.unsigned_abs());
            if *n < 0 {
                S::constant(1.0).div(mag)
            } else {
                mag
            }
        }
    };
    if !out.is_finite() {
        return Err(EvalError::at(EvalErrorKind::NonFinite, node));
    }
    Ok(out)
}

fn powi<S: Scalar>(base: S, mut exp: u32) -> S {
    let mut acc = S::constant(1.0);
    let mut sq = base;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc.mul(sq);
        }
        exp >>= 1;
        if exp > 0 {
            sq = sq.mul(sq);
        }
    }
    acc
}

/// A parsed expression together with the dimension it was declared for.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    dim: usize,
    root: Node,
}

impl Expr {
    /// Parses `text` against a space of dimension `dim`.
    pub fn parse(text: &str, dim: usize) -> Result<Self, ParseError> {
        let root = parse::parse(text, dim)?;
        Ok(Expr { dim, root })
    }

    /// Wraps a tree. Panics if the tree references a variable outside
    /// `0..dim`, contains a non-finite constant, or `dim` is unsupported.
    pub fn from_node(dim: usize, root: Node) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "unsupported dimension {dim}");
        if let Some(k) = root.max_var() {
            assert!(k < dim, "variable x{} outside dimension {dim}", k + 1);
        }
        assert!(consts_finite(&root), "non-finite constant in expression");
        Expr { dim, root }
    }

    pub fn constant(dim: usize, value: f64) -> Self {
        Self::from_node(dim, Node::Const(value))
    }

    /// The coordinate function `x^(index+1)` (zero-based index).
    pub fn coordinate(dim: usize, index: usize) -> Self {
        Self::from_node(dim, Node::Var(index))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn is_zero(&self) -> bool {
        self.root.is_const(0.0)
    }

    fn check_point(&self, p: &[f64]) -> Result<(), EvalError> {
        if p.len() != self.dim {
            return Err(EvalError::at(
                EvalErrorKind::PointDimension {
                    expected: self.dim,
                    found: p.len(),
                },
                &self.root,
            ));
        }
        Ok(())
    }

    pub fn eval(&self, p: &[f64]) -> Result<f64, EvalError> {
        self.check_point(p)?;
        eval_node::<f64>(&self.root, p)
    }

    /// Value and exact gradient `∂/∂x^k` for `k = 1..N`.
    pub fn eval_with_gradient(&self, p: &[f64]) -> Result<(f64, Vec<f64>), EvalError> {
        let d = self.eval_dual(p)?;
        Ok((d.re, d.eps[..self.dim].to_vec()))
    }

    pub fn eval_dual(&self, p: &[f64]) -> Result<Dual, EvalError> {
        self.check_point(p)?;
        eval_node::<Dual>(&self.root, p)
    }

    fn combine(op: BinaryOp, a: &Expr, b: &Expr) -> Expr {
        assert_eq!(a.dim, b.dim, "combining expressions of different dimension");
        let node = match op {
            BinaryOp::Add if a.is_zero() => b.root.clone(),
            BinaryOp::Add | BinaryOp::Sub if b.is_zero() => a.root.clone(),
            BinaryOp::Sub if a.is_zero() => Node::Unary(UnaryOp::Neg, Box::new(b.root.clone())),
            BinaryOp::Mul if a.is_zero() || b.is_zero() => Node::Const(0.0),
            BinaryOp::Mul if a.root.is_const(1.0) => b.root.clone(),
            BinaryOp::Mul | BinaryOp::Div if b.root.is_const(1.0) => a.root.clone(),
            _ => Node::Binary(op, Box::new(a.root.clone()), Box::new(b.root.clone())),
        };
        Expr {
            dim: a.dim,
            root: node,
        }
    }

    /// `self + other`, skipping additions of a literal zero.
    pub fn plus(&self, other: &Expr) -> Expr {
        Self::combine(BinaryOp::Add, self, other)
    }

    pub fn minus(&self, other: &Expr) -> Expr {
        Self::combine(BinaryOp::Sub, self, other)
    }

    pub fn times(&self, other: &Expr) -> Expr {
        Self::combine(BinaryOp::Mul, self, other)
    }

    pub fn scaled(&self, factor: f64) -> Expr {
        Self::combine(BinaryOp::Mul, &Expr::constant(self.dim, factor), self)
    }

    pub fn negated(&self) -> Expr {
        if self.is_zero() {
            return self.clone();
        }
        Expr {
            dim: self.dim,
            root: Node::Unary(UnaryOp::Neg, Box::new(self.root.clone())),
        }
    }
}

fn consts_finite(node: &Node) -> bool {
    match node {
        Node::Const(c) => c.is_finite(),
        Node::Var(_) => true,
        Node::Unary(_, a) | Node::Pow(a, _) => consts_finite(a),
        Node::Binary(_, a, b) => consts_finite(a) && consts_finite(b),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-14 * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn evaluates_grammar_example() {
        let e = Expr::parse("x1^2 + sin(x2)", 2).unwrap();
        assert_eq!(e.eval(&[2.0, 0.0]).unwrap(), 4.0);
        let (v, g) = e.eval_with_gradient(&[2.0, 0.0]).unwrap();
        assert_eq!(v, 4.0);
        assert_eq!(g, vec![4.0, 1.0]);
    }

    #[test]
    fn constant_has_zero_gradient() {
        let e = Expr::parse("7", 3).unwrap();
        assert_eq!(e.eval(&[0.3, -1.0, 9.0]).unwrap(), 7.0);
        let (_, g) = e.eval_with_gradient(&[0.3, -1.0, 9.0]).unwrap();
        assert_eq!(g, vec![0.0; 3]);
    }

    #[test]
    fn product_rule() {
        let e = Expr::parse("x1*x2", 2).unwrap();
        let (v, g) = e.eval_with_gradient(&[3.0, 5.0]).unwrap();
        assert_eq!(v, 15.0);
        assert_eq!(g, vec![5.0, 3.0]);
    }

    #[test]
    fn log_domain_error_names_node() {
        let e = Expr::parse("1 + ln(x1)", 2).unwrap();
        let err = e.eval(&[0.0, 1.0]).unwrap_err();
        assert_eq!(err.kind, EvalErrorKind::LogOfNonPositive);
        assert_eq!(err.node, "ln(x1)");
        assert!(e.eval_with_gradient(&[-1.0, 1.0]).is_err());
    }

    #[test]
    fn division_by_zero_and_negative_powers() {
        let e = Expr::parse("1/(x1 - x2)", 2).unwrap();
        assert_eq!(
            e.eval(&[1.0, 1.0]).unwrap_err().kind,
            EvalErrorKind::DivisionByZero
        );
        let e = Expr::parse("x1^-2", 2).unwrap();
        assert_eq!(e.eval(&[2.0, 0.0]).unwrap(), 0.25);
        let (_, g) = e.eval_with_gradient(&[2.0, 0.0]).unwrap();
        assert!(close(g[0], -0.25));
        assert_eq!(
            e.eval(&[0.0, 0.0]).unwrap_err().kind,
            EvalErrorKind::DivisionByZero
        );
    }

    #[test]
    fn sqrt_at_zero_has_value_but_no_gradient() {
        let e = Expr::parse("sqrt(x1)", 2).unwrap();
        assert_eq!(e.eval(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(
            e.eval_with_gradient(&[0.0, 0.0]).unwrap_err().kind,
            EvalErrorKind::SqrtNotDifferentiable
        );
        assert_eq!(
            e.eval(&[-1.0, 0.0]).unwrap_err().kind,
            EvalErrorKind::SqrtOfNegative
        );
    }

    #[test]
    fn overflow_is_reported() {
        let e = Expr::parse("exp(x1)", 2).unwrap();
        assert_eq!(
            e.eval(&[1000.0, 0.0]).unwrap_err().kind,
            EvalErrorKind::NonFinite
        );
    }

    #[test]
    fn wrong_point_length() {
        let e = Expr::parse("x1", 2).unwrap();
        assert!(matches!(
            e.eval(&[1.0]).unwrap_err().kind,
            EvalErrorKind::PointDimension {
                expected: 2,
                found: 1
            }
        ));
    }

    #[test]
    fn unary_minus_binds_looser_than_power() {
        let e = Expr::parse("-x1^2", 2).unwrap();
        assert_eq!(e.eval(&[3.0, 0.0]).unwrap(), -9.0);
        let e = Expr::parse("2*-x1 - -x2", 2).unwrap();
        assert_eq!(e.eval(&[1.0, 4.0]).unwrap(), 2.0);
    }

    #[test]
    fn left_associative() {
        let e = Expr::parse("8 / 4 / 2 - 1 - 1", 2).unwrap();
        assert_eq!(e.eval(&[0.0, 0.0]).unwrap(), -1.0);
    }

    #[test]
    fn printing_round_trips() {
        for text in [
            "x1^2 + sin(x2)",
            "-x1^2 - -3.25e-7 * x2",
            "exp(-x1) / (1 + x2^2)",
            "sqrt(2 + cos(x1*x2))^-3",
            "ln(1.5 + x1^2) - 0.1",
        ] {
            let e = Expr::parse(text, 2).unwrap();
            let again = Expr::parse(&e.to_string(), 2).unwrap();
            for p in [[0.3, -0.7], [1.1, 0.2], [-0.9, 0.95]] {
                assert_eq!(e.eval(&p).unwrap(), again.eval(&p).unwrap(), "{text}");
            }
        }
    }

    #[test]
    fn negative_constant_prints_parseably() {
        let e = Expr::constant(2, -0.5).times(&Expr::coordinate(2, 1));
        let again = Expr::parse(&e.to_string(), 2).unwrap();
        assert_eq!(again.eval(&[0.0, 4.0]).unwrap(), -2.0);
    }

    #[test]
    fn combinators_skip_literal_zeros() {
        let z = Expr::constant(3, 0.0);
        let x = Expr::coordinate(3, 2);
        assert_eq!(z.plus(&x), x);
        assert_eq!(x.minus(&z), x);
        assert!(x.times(&z).is_zero());
        assert_eq!(x.scaled(1.0), x);
        assert_eq!(x.scaled(2.0).eval(&[0.0, 0.0, 1.5]).unwrap(), 3.0);
    }
}
