//! Wolfe's algorithm for the minimum-norm point of a convex hull.
//!
//! Maintains an affinely independent corral `S` and convex weights on it.
//! Major steps add the point minimising `⟨x, p⟩`; minor steps project onto the
//! affine hull of `S` and walk back into the simplex when the projection
//! leaves it.

use nalgebra::{DMatrix, DVector};

use crate::linalg::dot;

#[derive(Clone, Debug, PartialEq)]
pub struct MinNormPoint {
    pub point: Vec<f64>,
    /// Convex weights over the input points, indexed like the input.
    pub weights: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

impl MinNormPoint {
    pub fn norm(&self) -> f64 {
        dot(&self.point, &self.point).sqrt()
    }
}

fn combine(points: &[Vec<f64>], corral: &[usize], w: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; points[0].len()];
    for (&s, &ws) in corral.iter().zip(w) {
        for (xi, pi) in x.iter_mut().zip(&points[s]) {
            *xi += ws * pi;
        }
    }
    x
}

/// Affine weights of the minimum-norm point of `aff{points[s] : s ∈ corral}`.
fn affine_minimizer(points: &[Vec<f64>], corral: &[usize]) -> Vec<f64> {
    let k = corral.len();
    if k == 1 {
        return vec![1.0];
    }
    let d = points[0].len();
    let base = &points[corral[0]];
    let diffs = DMatrix::from_fn(d, k - 1, |r, c| points[corral[c + 1]][r] - base[r]);
    let rhs = DVector::from_iterator(d, base.iter().map(|v| -v));
    let coeffs = diffs
        .svd(true, true)
        .solve(&rhs, 1e-13)
        .expect("both singular vector sets requested");
    let mut v = Vec::with_capacity(k);
    v.push(1.0 - coeffs.sum());
    v.extend(coeffs.iter());
    v
}

/// Minimum-norm point of the convex hull of `points` (nonempty, equal
/// lengths). `max_iters` bounds the total number of major and minor steps.
pub fn min_norm_point(points: &[Vec<f64>], max_iters: usize) -> MinNormPoint {
    assert!(
        !points.is_empty(),
        "min_norm_point needs at least one point"
    );
    let scale = points
        .iter()
        .map(|p| dot(p, p))
        .fold(0.0_f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let start = (0..points.len())
        .min_by(|&a, &b| dot(&points[a], &points[a]).total_cmp(&dot(&points[b], &points[b])))
        .expect("nonempty");
    let mut corral = vec![start];
    let mut w = vec![1.0];
    let mut x = points[start].clone();
    let mut iterations = 0;
    let mut converged = false;

    'major: while iterations < max_iters {
        iterations += 1;
        let xx = dot(&x, &x);
        let (j, xp) = points
            .iter()
            .enumerate()
            .map(|(j, p)| (j, dot(&x, p)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        if xx - xp <= 1e-12 * scale || corral.contains(&j) {
            converged = true;
            break;
        }
        corral.push(j);
        w.push(0.0);

        loop {
            if iterations >= max_iters {
                break 'major;
            }
            iterations += 1;
            let v = affine_minimizer(points, &corral);
            if v.iter().all(|&vi| vi > 1e-14) {
                w = v;
                x = combine(points, &corral, &w);
                break;
            }
            let theta = w
                .iter()
                .zip(&v)
                .filter(|(_, &vi)| vi <= 1e-14)
                .map(|(&wi, &vi)| wi / (wi - vi))
                .fold(1.0_f64, f64::min);
            for (wi, vi) in w.iter_mut().zip(&v) {
                *wi = (1.0 - theta) * *wi + theta * vi;
            }
            let mut keep_w = Vec::with_capacity(w.len());
            let mut keep_c = Vec::with_capacity(w.len());
            for (&s, &ws) in corral.iter().zip(&w) {
                if ws > 1e-14 {
                    keep_c.push(s);
                    keep_w.push(ws);
                }
            }
            if keep_c.is_empty() {
                // Numerical breakdown; restart from the best vertex of the corral.
                let best = *corral
                    .iter()
                    .min_by(|&&a, &&b| {
                        dot(&points[a], &points[a]).total_cmp(&dot(&points[b], &points[b]))
                    })
                    .expect("nonempty corral");
                keep_c.push(best);
                keep_w.push(1.0);
            }
            let total: f64 = keep_w.iter().sum();
            corral = keep_c;
            w = keep_w.into_iter().map(|v| v / total).collect();
            x = combine(points, &corral, &w);
        }
    }

    let mut weights = vec![0.0; points.len()];
    for (&s, &ws) in corral.iter().zip(&w) {
        weights[s] += ws;
    }
    MinNormPoint {
        point: x,
        weights,
        converged,
        iterations,
    }
}
