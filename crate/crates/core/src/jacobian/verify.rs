//! Runtime checks that `ξ` behaves as the proof says it must: `F′(x; ·)` is
//! the linear map `y ↦ ξy` on the cone around `ȳ`, and classical Jacobians
//! along the ray `x + tȳ` converge to `ξ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{GammaSet, JacobianElement};
use crate::dcmax::{DcMaxFn, Tolerances};
use crate::error::Result;
use crate::linalg::norm;

pub const DEFAULT_T_SCHEDULE: [f64; 5] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];

const LINEARITY_TOL: f64 = 1e-8;
const LIMIT_TOL: f64 = 1e-6;
const REJECTS_BEFORE_SHRINK: usize = 32;
const MIN_RADIUS: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeLinearityReport {
    pub samples_requested: usize,
    pub samples_kept: usize,
    pub draws: usize,
    /// Perturbation radius when sampling stopped.
    pub final_radius: f64,
    /// Per component, the largest `|F′_i(x; y) − (ξy)_i|` over kept samples.
    pub max_discrepancy: Vec<f64>,
    /// Largest discrepancy divided by its allowance `1e-8·(1 + ‖y‖)`.
    pub worst_ratio: f64,
    pub passed: bool,
    pub inconclusive: bool,
}

fn unit_ball_sample(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let r = norm(&v);
        if r > 0.0 {
            let scale = rng.random::<f64>().powf(1.0 / n as f64) / r;
            return v.into_iter().map(|c| c * scale).collect();
        }
    }
}

/// Samples directions `y = ȳ/‖ȳ‖ + ρu` (`u` uniform in the unit ball), keeps
/// those in the open cone `{y : αᵀy < 0 ∀α ∈ Γ}`, and compares the directional
/// derivative with `ξy` on each. The radius halves after a run of rejections.
#[allow(clippy::too_many_arguments)]
pub fn verify_cone_linearity(
    f: &DcMaxFn,
    x: &[f64],
    element: &JacobianElement,
    gamma: &GammaSet,
    y_bar: &[f64],
    samples: usize,
    seed: u64,
    tol: Tolerances,
) -> Result<ConeLinearityReport> {
    f.check_point(x)?;
    let n = f.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = norm(y_bar);
    let center: Vec<f64> = y_bar.iter().map(|v| v / scale).collect();
    let mut radius = 1.0;
    let mut max_discrepancy = vec![0.0; f.m()];
    let mut worst_ratio = 0.0_f64;
    let mut kept = 0;
    let mut draws = 0;
    let mut rejects = 0;
    let max_draws = samples.saturating_mul(100).max(1000);
    while kept < samples && draws < max_draws && radius >= MIN_RADIUS {
        let u = unit_ball_sample(&mut rng, n);
        let y: Vec<f64> = center.iter().zip(&u).map(|(c, p)| c + radius * p).collect();
        draws += 1;
        if !gamma.contains_direction(&y) {
            rejects += 1;
            if rejects >= REJECTS_BEFORE_SHRINK {
                radius *= 0.5;
                rejects = 0;
            }
            continue;
        }
        rejects = 0;
        kept += 1;
        let dd = f.directional_derivative(x, &y, tol.act)?;
        let lin = element.xi.mul_vec(&y);
        let allowance = LINEARITY_TOL * (1.0 + norm(&y));
        for i in 0..f.m() {
            let d = (dd[i] - lin[i]).abs();
            max_discrepancy[i] = f64::max(max_discrepancy[i], d);
            worst_ratio = worst_ratio.max(d / allowance);
        }
    }
    let inconclusive = kept == 0;
    Ok(ConeLinearityReport {
        samples_requested: samples,
        samples_kept: kept,
        draws,
        final_radius: radius,
        max_discrepancy,
        worst_ratio,
        passed: !inconclusive && worst_ratio <= 1.0,
        inconclusive,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitPoint {
    pub t: f64,
    pub point: Vec<f64>,
    /// Frobenius distance from the classical Jacobian to `ξ`; `None` when `F`
    /// is not differentiable at the point.
    pub distance: Option<f64>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitInclusionReport {
    pub points: Vec<LimitPoint>,
    pub lipschitz_scale: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Every schedule point was a kink.
    pub inconclusive: bool,
}

impl LimitInclusionReport {
    /// Largest distance over the differentiable schedule points.
    pub fn max_distance(&self) -> Option<f64> {
        self.points
            .iter()
            .filter_map(|p| p.distance)
            .fold(None, |acc, d| Some(acc.map_or(d, |a: f64| a.max(d))))
    }
}

/// Evaluates the classical Jacobian at `x + tȳ` for each `t` of the
/// (decreasing) schedule and measures its distance to `ξ`. Passes when the
/// distances are non-increasing up to the tolerance `1e-6·(1 + L)` and the
/// last one is within it. `L` estimates how fast the Jacobian moves along the
/// ray, `max ‖J(t_a) − J(t_b)‖ / |t_a − t_b|` over consecutive differentiable
/// schedule points, so curved pieces converging like `O(t)` are not rejected.
pub fn verify_limit_inclusion(
    f: &DcMaxFn,
    x: &[f64],
    element: &JacobianElement,
    y_bar: &[f64],
    t_schedule: &[f64],
    tol: Tolerances,
) -> Result<LimitInclusionReport> {
    f.check_point(x)?;
    let mut points = Vec::with_capacity(t_schedule.len());
    let mut jacobians = Vec::new();
    for &t in t_schedule {
        let point: Vec<f64> = x.iter().zip(y_bar).map(|(a, b)| a + t * b).collect();
        match f.smooth_jacobian(&point, tol)? {
            Some(sj) => {
                points.push(LimitPoint {
                    t,
                    distance: Some(sj.jacobian.frobenius_distance(&element.xi)),
                    point,
                    note: None,
                });
                jacobians.push((t, sj.jacobian));
            }
            None => points.push(LimitPoint {
                t,
                point,
                distance: None,
                note: Some("skipped: active gradients differ (not differentiable)".into()),
            }),
        }
    }
    let scale = jacobians
        .windows(2)
        .map(|w| w[0].1.frobenius_distance(&w[1].1) / (w[0].0 - w[1].0).abs())
        .filter(|r| r.is_finite())
        .fold(0.0_f64, f64::max);
    let tolerance = LIMIT_TOL * (1.0 + scale);
    let distances: Vec<f64> = points.iter().filter_map(|p| p.distance).collect();
    let inconclusive = distances.is_empty();
    let monotone = distances.windows(2).all(|w| w[1] <= w[0] + tolerance);
    let last_ok = distances.last().is_some_and(|d| *d <= tolerance);
    Ok(LimitInclusionReport {
        points,
        lipschitz_scale: scale,
        tolerance,
        passed: !inconclusive && monotone && last_ok,
        inconclusive,
    })
}
