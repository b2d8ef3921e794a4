//! Semismooth Newton iteration `x_{k+1} = x_k + d_k`, `ξ_k d_k = −F(x_k)`,
//! with `ξ_k` from [`algorithm_a1`]. Local method: no line search.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dcmax::{DcMaxFn, MaxFn, Tolerances};
use crate::error::{Error, Result};
use crate::expr::SmoothFn;
use crate::jacobian::{algorithm_a1, Convention};
use crate::linalg::{norm_inf, Matrix};

const PIVOT_TOL: f64 = 1e-12;
const DIVERGENCE_FACTOR: f64 = 10.0;
const DIVERGENCE_RUN: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iters: usize,
    pub tolerances: Tolerances,
    pub convention: Convention,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-10,
            max_iters: 50,
            tolerances: Tolerances::default(),
            convention: Convention::Min,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NewtonStatus {
    Converged,
    MaxIters,
    Singular,
    Diverged,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonIterate {
    pub k: usize,
    pub x: Vec<f64>,
    pub fx: Vec<f64>,
    pub residual: f64,
    /// Absent on the final iterate of a converged run.
    pub xi: Option<Matrix>,
    pub step: Option<Vec<f64>>,
    /// Convention that produced a nonsingular `ξ`.
    pub convention: Option<Convention>,
    /// `‖ξd + F(x)‖∞` for the accepted step.
    pub linear_residual: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonTrace {
    pub iterates: Vec<NewtonIterate>,
    pub status: NewtonStatus,
}

impl NewtonTrace {
    pub fn last(&self) -> &NewtonIterate {
        self.iterates
            .last()
            .expect("a trace has at least one iterate")
    }

    /// Number of Newton steps taken.
    pub fn steps(&self) -> usize {
        self.iterates.iter().filter(|it| it.step.is_some()).count()
    }

    /// One JSON object per iterate, newline-terminated.
    pub fn to_json_lines(&self) -> Result<String> {
        let mut out = String::new();
        for it in &self.iterates {
            out.push_str(&serde_json::to_string(it)?);
            out.push('\n');
        }
        Ok(out)
    }
}

/// Solves `a·d = b` by LU with partial pivoting; `None` if a pivot falls
/// below `1e-12·max|a_ij|`.
fn solve_checked(a: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    let lu = a.to_nalgebra().lu();
    let u = lu.u();
    if u.diagonal().iter().any(|p| p.abs() < PIVOT_TOL * scale) || a.max_abs() == 0.0 {
        return None;
    }
    lu.solve(&DVector::from_column_slice(b))
        .map(|d| d.iter().copied().collect())
}

pub fn solve(f: &DcMaxFn, x0: &[f64], options: NewtonOptions) -> Result<NewtonTrace> {
    if f.m() != f.n() {
        return Err(Error::DimensionMismatch {
            what: "F (Newton needs m = n)",
            expected: f.n(),
            got: f.m(),
        });
    }
    if options.tol.is_nan() || options.tol <= 0.0 {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    f.check_point(x0)?;
    let mut x = x0.to_vec();
    let mut iterates = Vec::new();
    let mut initial = None;
    let mut run_above = 0;
    for k in 0..=options.max_iters {
        let fx = f.eval(&x)?;
        let residual = norm_inf(&fx);
        let initial = *initial.get_or_insert(residual);
        let mut it = NewtonIterate {
            k,
            x: x.clone(),
            fx: fx.clone(),
            residual,
            xi: None,
            step: None,
            convention: None,
            linear_residual: None,
        };
        if residual <= options.tol {
            iterates.push(it);
            return Ok(NewtonTrace {
                iterates,
                status: NewtonStatus::Converged,
            });
        }
        if residual > DIVERGENCE_FACTOR * initial {
            run_above += 1;
            if run_above >= DIVERGENCE_RUN {
                iterates.push(it);
                return Ok(NewtonTrace {
                    iterates,
                    status: NewtonStatus::Diverged,
                });
            }
        } else {
            run_above = 0;
        }
        if k == options.max_iters {
            iterates.push(it);
            break;
        }
        let rhs: Vec<f64> = fx.iter().map(|v| -v).collect();
        let mut accepted = None;
        for convention in [options.convention, options.convention.opposite()] {
            let xi = algorithm_a1(f, &x, options.tolerances, convention)?.xi;
            if let Some(d) = solve_checked(&xi, &rhs) {
                accepted = Some((convention, xi, d));
                break;
            }
        }
        let Some((convention, xi, d)) = accepted else {
            it.xi = Some(algorithm_a1(f, &x, options.tolerances, options.convention)?.xi);
            iterates.push(it);
            return Ok(NewtonTrace {
                iterates,
                status: NewtonStatus::Singular,
            });
        };
        let lin: Vec<f64> = xi.mul_vec(&d).iter().zip(&fx).map(|(a, b)| a + b).collect();
        it.linear_residual = Some(norm_inf(&lin));
        for (xi_, di) in x.iter_mut().zip(&d) {
            *xi_ += di;
        }
        it.xi = Some(xi);
        it.step = Some(d);
        it.convention = Some(convention);
        iterates.push(it);
    }
    Ok(NewtonTrace {
        iterates,
        status: NewtonStatus::MaxIters,
    })
}

fn format_number(v: f64) -> String {
    format!("{v:?}")
}

/// Linear form `Σ_j a_j·x_j + c` in the formula language.
fn affine_text(row: &[f64], constant: f64) -> String {
    let mut terms: Vec<String> = row
        .iter()
        .enumerate()
        .map(|(j, a)| format!("{}*x{}", format_number(*a), j + 1))
        .collect();
    terms.push(format_number(constant));
    terms.join(" + ")
}

/// Encodes the complementarity problem `x ≥ 0, Mx + q ≥ 0, xᵀ(Mx + q) = 0`
/// as `F_i(x) = min(x_i, (Mx + q)_i) = 0 − max(−x_i, −(Mx + q)_i)`.
pub fn build_ncp(m: &Matrix, q: &[f64]) -> Result<DcMaxFn> {
    let n = q.len();
    if n == 0 {
        return Err(Error::EmptyInput("NCP vector q"));
    }
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch {
            what: "NCP matrix M",
            expected: n,
            got: if m.nrows() != n { m.nrows() } else { m.ncols() },
        });
    }
    let mut g = Vec::with_capacity(n);
    let mut h = Vec::with_capacity(n);
    for (i, qi) in q.iter().enumerate() {
        g.push(MaxFn::zero(n));
        h.push(MaxFn::new(vec![
            SmoothFn::parse(&format!("-x{}", i + 1), n)?,
            SmoothFn::parse(&format!("-({})", affine_text(m.row(i), *qi)), n)?,
        ])?);
    }
    DcMaxFn::new(n, g, h)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NcpResidual {
    /// `‖min(x, Mx + q)‖∞`.
    pub natural: f64,
    /// Largest violation of `x ≥ 0`.
    pub x_negativity: f64,
    /// Largest violation of `Mx + q ≥ 0`.
    pub w_negativity: f64,
    /// `|xᵀ(Mx + q)|`.
    pub complementarity: f64,
    /// Maximum of the above.
    pub total: f64,
}

/// Substitutes `x` back into the complementarity conditions.
pub fn ncp_residual(m: &Matrix, q: &[f64], x: &[f64]) -> NcpResidual {
    let w: Vec<f64> = m.mul_vec(x).iter().zip(q).map(|(a, b)| a + b).collect();
    let natural = x
        .iter()
        .zip(&w)
        .map(|(a, b)| a.min(*b).abs())
        .fold(0.0, f64::max);
    let x_negativity = x.iter().map(|v| (-v).max(0.0)).fold(0.0, f64::max);
    let w_negativity = w.iter().map(|v| (-v).max(0.0)).fold(0.0, f64::max);
    let complementarity = x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>().abs();
    NcpResidual {
        natural,
        x_negativity,
        w_negativity,
        complementarity,
        total: natural
            .max(x_negativity)
            .max(w_negativity)
            .max(complementarity),
    }
}
