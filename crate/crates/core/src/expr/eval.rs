use std::ops::{Add, Div, Mul, Neg, Sub};

use thiserror::Error;

use super::{BinaryOp, Expr, UnaryOp};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error in `{expr}`: {reason}")]
    Domain { expr: String, reason: String },
    #[error("point has length {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
}

/// First-order dual number `re + eps·ε` with `ε² = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual {
    pub re: f64,
    pub eps: f64,
}

impl Dual {
    pub fn new(re: f64, eps: f64) -> Self {
        Dual { re, eps }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual::new(self.re + o.re, self.eps + o.eps)
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual::new(self.re - o.re, self.eps - o.eps)
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual::new(self.re * o.re, self.eps * o.re + self.re * o.eps)
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        Dual::new(
            self.re / o.re,
            (self.eps * o.re - self.re * o.eps) / (o.re * o.re),
        )
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual::new(-self.re, -self.eps)
    }
}

/// Arithmetic the evaluator needs. Partial functions return `None` outside
/// the set where the value (and, for duals, the derivative) exists.
pub(crate) trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn lift(c: f64) -> Self;
    fn value(self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt_checked(self) -> Option<Self>;
    fn powi(self, k: i32) -> Self;
    fn powf(self, c: f64) -> Self;
    fn is_finite(self) -> bool;
}

impl Scalar for f64 {
    fn lift(c: f64) -> Self {
        c
    }
    fn value(self) -> f64 {
        self
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt_checked(self) -> Option<Self> {
        (self >= 0.0).then(|| self.sqrt())
    }
    fn powi(self, k: i32) -> Self {
        f64::powi(self, k)
    }
    fn powf(self, c: f64) -> Self {
        f64::powf(self, c)
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl Scalar for Dual {
    fn lift(c: f64) -> Self {
        Dual::new(c, 0.0)
    }
    fn value(self) -> f64 {
        self.re
    }
    fn sin(self) -> Self {
        Dual::new(self.re.sin(), self.eps * self.re.cos())
    }
    fn cos(self) -> Self {
        Dual::new(self.re.cos(), -self.eps * self.re.sin())
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        Dual::new(e, self.eps * e)
    }
    fn ln(self) -> Self {
        Dual::new(self.re.ln(), self.eps / self.re)
    }
    fn sqrt_checked(self) -> Option<Self> {
        (self.re > 0.0).then(|| {
            let s = self.re.sqrt();
            Dual::new(s, self.eps / (2.0 * s))
        })
    }
    fn powi(self, k: i32) -> Self {
        let d = if k == 0 {
            0.0
        } else {
            k as f64 * self.re.powi(k - 1)
        };
        Dual::new(self.re.powi(k), self.eps * d)
    }
    fn powf(self, c: f64) -> Self {
        Dual::new(self.re.powf(c), self.eps * c * self.re.powf(c - 1.0))
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.eps.is_finite()
    }
}

fn domain(expr: &Expr, reason: &str) -> EvalError {
    EvalError::Domain {
        expr: expr.to_string(),
        reason: reason.to_string(),
    }
}

/// Integer exponents small enough for `powi`.
fn as_small_integer(c: f64) -> Option<i32> {
    (c.fract() == 0.0 && c.abs() <= i32::MAX as f64).then_some(c as i32)
}

pub(crate) fn evaluate<S: Scalar>(expr: &Expr, var: &dyn Fn(usize) -> S) -> Result<S, EvalError> {
    let out = match expr {
        Expr::Const(c) => S::lift(*c),
        Expr::Var(i) => var(*i),
        Expr::Unary(op, a) => {
            let v = evaluate(a, var)?;
            match op {
                UnaryOp::Neg => -v,
                UnaryOp::Sin => v.sin(),
                UnaryOp::Cos => v.cos(),
                UnaryOp::Exp => v.exp(),
                UnaryOp::Log => {
                    if v.value() <= 0.0 {
                        return Err(domain(expr, "logarithm of a non-positive value"));
                    }
                    v.ln()
                }
                UnaryOp::Sqrt => v.sqrt_checked().ok_or_else(|| {
                    domain(
                        expr,
                        "square root of a negative value, or of zero when differentiating",
                    )
                })?,
            }
        }
        Expr::Binary(op, a, b) => {
            let l = evaluate(a, var)?;
            match op {
                BinaryOp::Add => l + evaluate(b, var)?,
                BinaryOp::Sub => l - evaluate(b, var)?,
                BinaryOp::Mul => l * evaluate(b, var)?,
                BinaryOp::Div => {
                    let r = evaluate(b, var)?;
                    if r.value() == 0.0 {
                        return Err(domain(expr, "division by zero"));
                    }
                    l / r
                }
                BinaryOp::Pow => {
                    // The exponent is variable-free; evaluate it as a plain number.
                    let c = evaluate::<f64>(b, &|_| 0.0)?;
                    match as_small_integer(c) {
                        Some(k) if k < 0 && l.value() == 0.0 => {
                            return Err(domain(expr, "zero raised to a negative power"))
                        }
                        Some(k) => l.powi(k),
                        None => {
                            if l.value() <= 0.0 {
                                return Err(domain(
                                    expr,
                                    "non-integer power of a non-positive base",
                                ));
                            }
                            l.powf(c)
                        }
                    }
                }
            }
        }
    };
    if !out.is_finite() {
        return Err(domain(expr, "non-finite result"));
    }
    Ok(out)
}
