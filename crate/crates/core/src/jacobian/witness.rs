//! Difference vectors between rejected and selected active gradients, and a
//! direction `ȳ` that every one of them strictly separates.

use serde::{Deserialize, Serialize};

use super::{Convention, MaxSelection, SelectionResult};
use crate::dcmax::{DcMaxFn, MaxFn, Side};
use crate::error::{Error, Result};
use crate::linalg::{dot, max_abs_diff};

const DEDUP_TOL: f64 = 1e-12;

/// `∇φ_j(x) − ∇φ_t(x)` for a rejected active piece `j` and a survivor `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaVector {
    pub alpha: Vec<f64>,
    /// Coordinate at which `j` was filtered out. Entries before it are tied
    /// (exactly zero in exact arithmetic), so this is the leading nonzero.
    pub lead: usize,
    pub component: usize,
    pub side: char,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaSet {
    pub convention: Convention,
    pub vectors: Vec<GammaVector>,
}

impl GammaSet {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// `true` when `αᵀy < 0` for every vector, i.e. `y` lies in the open cone.
    pub fn contains_direction(&self, y: &[f64]) -> bool {
        self.vectors.iter().all(|v| dot(&v.alpha, y) < 0.0)
    }
}

fn push_side(
    out: &mut Vec<GammaVector>,
    f: &MaxFn,
    x: &[f64],
    sel: &MaxSelection,
    component: usize,
    side: Side,
) -> Result<()> {
    let kept = f.grads(sel.selected(), x)?;
    for j in sel.rejected() {
        let gj = f.piece_grad(j, x)?;
        let lead = sel
            .elimination_level(j)
            .expect("rejected pieces leave the chain");
        for gt in &kept {
            let alpha: Vec<f64> = gj.iter().zip(gt).map(|(a, b)| a - b).collect();
            let duplicate = out
                .iter()
                .any(|v| max_abs_diff(&v.alpha, &alpha) <= DEDUP_TOL);
            if !duplicate {
                out.push(GammaVector {
                    alpha,
                    lead,
                    component,
                    side: side.name().chars().next().unwrap_or('?'),
                });
            }
        }
    }
    Ok(())
}

/// Builds the difference-vector set from a selection made at `(f, x)`.
pub fn gamma_set(f: &DcMaxFn, x: &[f64], sel: &SelectionResult) -> Result<GammaSet> {
    f.check_point(x)?;
    let mut vectors = Vec::new();
    for (i, c) in sel.components.iter().enumerate() {
        push_side(&mut vectors, f.g(i), x, &c.g, i, Side::G)?;
        push_side(&mut vectors, f.h(i), x, &c.h, i, Side::H)?;
    }
    Ok(GammaSet {
        convention: sel.convention,
        vectors,
    })
}

/// Direction `ȳ = ∓(λ_1, …, λ_n)` with geometrically decaying weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessDirection {
    pub y_bar: Vec<f64>,
    pub epsilon: f64,
    #[serde(rename = "M")]
    pub m_bound: f64,
    pub lambda: Vec<f64>,
    pub convention: Convention,
}

/// Outcome of checking `αᵀȳ < 0` with the guaranteed margin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessCheck {
    pub valid: bool,
    pub checked: usize,
    /// Largest `αᵀȳ` over the set (negative when valid); `None` if empty.
    pub max_inner_product: Option<f64>,
    /// Smallest ratio of achieved to guaranteed margin; ≥ 1 − 1e-9 when valid.
    pub min_margin_ratio: Option<f64>,
}

/// Constructs `ȳ` for `gamma`: `ε` is half the smallest leading magnitude
/// (1 when the set is empty), `M = 2·max(1, max |α_l|)`, `λ_1 = 1` and
/// `λ_{l+1} = ½·λ_l·(ε/M)/(1 + ε/M)`.
pub fn witness_direction(
    gamma: &GammaSet,
    n: usize,
    convention: Convention,
) -> Result<WitnessDirection> {
    if gamma.convention != convention {
        return Err(Error::ConventionMismatch(format!(
            "set built under {} convention, witness requested for {}",
            gamma.convention.as_str(),
            convention.as_str()
        )));
    }
    let want = -convention.witness_sign();
    let mut min_lead = f64::INFINITY;
    let mut max_entry = 0.0_f64;
    for v in &gamma.vectors {
        if v.alpha.len() != n {
            return Err(Error::DimensionMismatch {
                what: "difference vector",
                expected: n,
                got: v.alpha.len(),
            });
        }
        let lead = v.alpha[v.lead];
        if lead * want <= 0.0 {
            return Err(Error::ConventionMismatch(format!(
                "difference vector {:?} (component {}, {}) has leading entry {} of the wrong sign for the {} convention",
                v.alpha,
                v.component,
                v.side,
                lead,
                convention.as_str()
            )));
        }
        min_lead = min_lead.min(lead.abs());
        max_entry = v.alpha.iter().fold(max_entry, |m, a| m.max(a.abs()));
    }
    let epsilon = if gamma.is_empty() {
        1.0
    } else {
        0.5 * min_lead
    };
    let m_bound = 2.0 * max_entry.max(1.0);
    let q = epsilon / m_bound;
    let ratio = 0.5 * q / (1.0 + q);
    let mut lambda = Vec::with_capacity(n);
    let mut current = 1.0;
    for _ in 0..n {
        lambda.push(current);
        current *= ratio;
    }
    let sign = convention.witness_sign();
    Ok(WitnessDirection {
        y_bar: lambda.iter().map(|l| sign * l).collect(),
        epsilon,
        m_bound,
        lambda,
        convention,
    })
}

impl WitnessDirection {
    /// Checks `αᵀȳ < 0` for every vector, and that the achieved margin
    /// `−αᵀȳ` is at least `λ_k(|α_k| − ε)(1 − 1e-9)` with `k` the leading
    /// coordinate.
    pub fn check(&self, gamma: &GammaSet) -> WitnessCheck {
        let mut valid = true;
        let mut max_ip: Option<f64> = None;
        let mut min_ratio: Option<f64> = None;
        for v in &gamma.vectors {
            let ip = dot(&v.alpha, &self.y_bar);
            let k = v.lead;
            let guaranteed = self.lambda[k] * (v.alpha[k].abs() - self.epsilon);
            let ratio = -ip / guaranteed;
            if !(ip < 0.0 && guaranteed > 0.0 && -ip >= guaranteed * (1.0 - 1e-9)) {
                valid = false;
            }
            max_ip = Some(max_ip.map_or(ip, |m: f64| m.max(ip)));
            min_ratio = Some(min_ratio.map_or(ratio, |m: f64| m.min(ratio)));
        }
        WitnessCheck {
            valid,
            checked: gamma.len(),
            max_inner_product: max_ip,
            min_margin_ratio: min_ratio,
        }
    }
}
