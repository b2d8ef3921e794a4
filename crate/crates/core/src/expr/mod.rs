//! Smooth scalar pieces: a small formula language with exact gradients.
//!
//! Formulas are parsed into an [`Expr`] tree and evaluated as written, with no
//! simplification. Gradients come from forward-mode dual numbers, one sweep
//! per coordinate.

mod eval;
mod parse;

use std::fmt;

pub use eval::{Dual, EvalError};
pub use parse::{parse, ParseError};

/// Unary operators of the formula language.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl UnaryOp {
    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sqrt => "sqrt",
        }
    }

    pub(crate) fn from_function_name(name: &str) -> Option<Self> {
        match name {
            "sin" => Some(UnaryOp::Sin),
            "cos" => Some(UnaryOp::Cos),
            "exp" => Some(UnaryOp::Exp),
            "log" => Some(UnaryOp::Log),
            "sqrt" => Some(UnaryOp::Sqrt),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    /// Power with a variable-free exponent.
    Pow,
}

impl BinaryOp {
    pub fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
            BinaryOp::Pow => '^',
        }
    }
}

/// Expression tree for a scalar function of `x1..xn`.
///
/// Variables are stored zero-based: `x1` is `Var(0)`.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn constant(value: f64) -> Self {
        Expr::Const(value)
    }

    pub fn var(index: usize) -> Self {
        Expr::Var(index)
    }

    pub fn unary(op: UnaryOp, arg: Expr) -> Self {
        Expr::Unary(op, Box::new(arg))
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    /// Largest zero-based variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Unary(_, a) => a.max_var(),
            Expr::Binary(_, a, b) => match (a.max_var(), b.max_var()) {
                (Some(p), Some(q)) => Some(p.max(q)),
                (p, q) => p.or(q),
            },
        }
    }

    pub fn is_constant(&self) -> bool {
        self.max_var().is_none()
    }
}

/// Prints with full parenthesisation of binary nodes, so the output parses
/// back to a structurally identical tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => {
                if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) {
                    write!(f, "(-{:?})", -c)
                } else {
                    write!(f, "{:?}", c)
                }
            }
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Unary(UnaryOp::Neg, a) => write!(f, "(-{})", a),
            Expr::Unary(op, a) => write!(f, "{}({})", op.name(), a),
            Expr::Binary(op, a, b) => write!(f, "({} {} {})", a, op.symbol(), b),
        }
    }
}

/// A parsed C¹ piece together with its input dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothFn {
    expr: Expr,
    dim: usize,
}

impl SmoothFn {
    /// Wraps an expression; fails if it references a variable beyond `dim`.
    pub fn new(expr: Expr, dim: usize) -> Result<Self, ParseError> {
        if let Some(i) = expr.max_var() {
            if i >= dim {
                return Err(ParseError::VariableOutOfRange {
                    name: format!("x{}", i + 1),
                    dim,
                    offset: 0,
                });
            }
        }
        Ok(SmoothFn { expr, dim })
    }

    pub fn parse(text: &str, dim: usize) -> Result<Self, ParseError> {
        Ok(SmoothFn {
            expr: parse(text, dim)?,
            dim,
        })
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, EvalError> {
        self.check_len(x)?;
        eval::evaluate(&self.expr, &|i| x[i])
    }

    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        Ok(self.value_and_grad(x)?.1)
    }

    /// Value and gradient, one dual sweep per coordinate.
    pub fn value_and_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>), EvalError> {
        self.check_len(x)?;
        let value = eval::evaluate(&self.expr, &|i| x[i])?;
        let mut grad = Vec::with_capacity(self.dim);
        for l in 0..self.dim {
            let seeded = |i: usize| Dual::new(x[i], if i == l { 1.0 } else { 0.0 });
            grad.push(eval::evaluate(&self.expr, &seeded)?.eps);
        }
        Ok((value, grad))
    }

    fn check_len(&self, x: &[f64]) -> Result<(), EvalError> {
        if x.len() != self.dim {
            return Err(EvalError::Dimension {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for SmoothFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.expr.fmt(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sf(text: &str, dim: usize) -> SmoothFn {
        SmoothFn::parse(text, dim).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(sf("x1^2", 1).eval(&[3.0]).unwrap(), 9.0);
        assert_eq!(sf("x1 - x2", 2).eval(&[5.0, 5.0]).unwrap(), 0.0);
    }

    #[test]
    fn grad_examples() {
        assert_eq!(sf("x1^2", 1).grad(&[3.0]).unwrap(), vec![6.0]);
        assert_eq!(
            sf("2*x1 + x2^2", 2).grad(&[1.0, 2.0]).unwrap(),
            vec![2.0, 4.0]
        );
    }

    #[test]
    fn sin_matches_series_evaluation() {
        // Taylor series summed to convergence, independent of libm.
        let x: f64 = 0.7;
        let mut term = x;
        let mut sum = 0.0;
        for k in 0..30 {
            sum += term;
            let a = (2 * k + 2) as f64;
            let b = (2 * k + 3) as f64;
            term *= -x * x / (a * b);
        }
        let got = sf("sin(x1)", 1).eval(&[x]).unwrap();
        assert!((got - sum).abs() <= 1e-12, "{got} vs {sum}");
    }

    #[test]
    fn transcendental_gradients() {
        let f = sf("sin(x1)*exp(x2) - 3", 2);
        let g = f.grad(&[0.3, -0.2]).unwrap();
        assert!((g[0] - 0.3f64.cos() * (-0.2f64).exp()).abs() < 1e-15);
        assert!((g[1] - 0.3f64.sin() * (-0.2f64).exp()).abs() < 1e-15);

        let f = sf("log(x1) + sqrt(x2) + x1/x2", 2);
        let g = f.grad(&[2.0, 4.0]).unwrap();
        assert!((g[0] - (0.5 + 0.25)).abs() < 1e-15);
        assert!((g[1] - (0.25 - 2.0 / 16.0)).abs() < 1e-15);
    }

    #[test]
    fn fractional_power_needs_positive_base() {
        let f = sf("x1^0.5", 1);
        assert!((f.eval(&[4.0]).unwrap() - 2.0).abs() < 1e-15);
        assert!((f.grad(&[4.0]).unwrap()[0] - 0.25).abs() < 1e-15);
        assert!(matches!(f.eval(&[-1.0]), Err(EvalError::Domain { .. })));
        assert!(matches!(f.eval(&[0.0]), Err(EvalError::Domain { .. })));
    }

    #[test]
    fn integer_power_of_negative_base() {
        let f = sf("x1^3", 1);
        assert_eq!(f.eval(&[-2.0]).unwrap(), -8.0);
        assert_eq!(f.grad(&[-2.0]).unwrap(), vec![12.0]);
        let f = sf("x1^-1", 1);
        assert!(matches!(f.eval(&[0.0]), Err(EvalError::Domain { .. })));
    }

    #[test]
    fn domain_errors_name_the_subexpression() {
        let err = sf("1 + log(x1 - 1)", 1).eval(&[0.5]).unwrap_err();
        match err {
            EvalError::Domain { expr, .. } => assert_eq!(expr, "log((x1 - 1.0))"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            sf("1 / x1", 1).eval(&[0.0]),
            Err(EvalError::Domain { .. })
        ));
        assert!(matches!(
            sf("sqrt(x1)", 1).eval(&[-1.0]),
            Err(EvalError::Domain { .. })
        ));
        // sqrt is defined at zero but has no derivative there.
        assert_eq!(sf("sqrt(x1)", 1).eval(&[0.0]).unwrap(), 0.0);
        assert!(sf("sqrt(x1)", 1).grad(&[0.0]).is_err());
    }

    #[test]
    fn wrong_point_length() {
        assert!(matches!(
            sf("x1", 2).eval(&[1.0]),
            Err(EvalError::Dimension {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn display_round_trips() {
        for text in [
            "x1",
            "2*x1 + x2^2",
            "-x1^2",
            "sin(x1)*exp(x2) - 3",
            "x1^-0.5 / (1 - x2) - -2.5e-3",
            "2^3^2",
            "1e300 * x1",
        ] {
            let e = parse(text, 2).unwrap();
            let printed = e.to_string();
            assert_eq!(parse(&printed, 2).unwrap(), e, "{text} -> {printed}");
        }
    }
}
