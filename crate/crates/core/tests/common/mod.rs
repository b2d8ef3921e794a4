//! Test-side generators, independent of the library's own instance code.

#![allow(dead_code)]

use dcjac::expr::{BinaryOp, UnaryOp};
use dcjac::Expr;
use rand::Rng;

fn leaf<R: Rng>(rng: &mut R, n: usize) -> Expr {
    if rng.random_bool(0.6) {
        Expr::var(rng.random_range(0..n))
    } else {
        Expr::constant((rng.random_range(-2.0..2.0_f64) * 100.0).round() / 100.0)
    }
}

fn one_plus_square(e: Expr) -> Expr {
    Expr::binary(
        BinaryOp::Add,
        Expr::constant(1.0),
        Expr::binary(BinaryOp::Pow, e, Expr::constant(2.0)),
    )
}

/// Random smooth expression in `n` variables whose operations stay inside
/// their domains everywhere: divisors, log and sqrt arguments and fractional
/// power bases are bounded away from zero by construction.
pub fn random_expr<R: Rng>(rng: &mut R, n: usize, depth: usize) -> Expr {
    if depth == 0 || rng.random_bool(0.2) {
        return leaf(rng, n);
    }
    let a = random_expr(rng, n, depth - 1);
    match rng.random_range(0..12) {
        0 => Expr::binary(BinaryOp::Add, a, random_expr(rng, n, depth - 1)),
        1 => Expr::binary(BinaryOp::Sub, a, random_expr(rng, n, depth - 1)),
        2 | 3 => Expr::binary(BinaryOp::Mul, a, random_expr(rng, n, depth - 1)),
        4 => {
            let b = random_expr(rng, n, depth - 1);
            let den = Expr::binary(
                BinaryOp::Add,
                Expr::constant(1.5),
                Expr::unary(UnaryOp::Sin, b),
            );
            Expr::binary(BinaryOp::Div, a, den)
        }
        5 => Expr::unary(UnaryOp::Neg, a),
        6 => Expr::unary(UnaryOp::Sin, a),
        7 => Expr::unary(UnaryOp::Cos, a),
        8 => Expr::unary(UnaryOp::Exp, Expr::unary(UnaryOp::Sin, a)),
        9 => Expr::unary(UnaryOp::Log, one_plus_square(a)),
        10 => Expr::unary(UnaryOp::Sqrt, one_plus_square(a)),
        _ => {
            if rng.random_bool(0.5) {
                let k = rng.random_range(2..=3) as f64;
                Expr::binary(BinaryOp::Pow, a, Expr::constant(k))
            } else {
                let p = [0.5, -0.5, 1.5, -1.0][rng.random_range(0..4)];
                Expr::binary(BinaryOp::Pow, one_plus_square(a), Expr::constant(p))
            }
        }
    }
}

pub fn random_point<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.5..1.5)).collect()
}

/// Central differences `(f(x + h e_l) − f(x − h e_l)) / 2h`.
pub fn central_differences(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|l| {
            let mut p = x.to_vec();
            let mut q = x.to_vec();
            p[l] += h;
            q[l] -= h;
            (f(&p) - f(&q)) / (2.0 * h)
        })
        .collect()
}

/// Affine piece text `Σ a_l x_l + b` from integer coefficients.
pub fn affine_text(coeffs: &[i32], constant: i32) -> String {
    let mut s: Vec<String> = coeffs
        .iter()
        .enumerate()
        .map(|(l, a)| format!("{a}*x{}", l + 1))
        .collect();
    s.push(constant.to_string());
    s.join(" + ")
}
