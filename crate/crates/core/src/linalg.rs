//! Dense row-major matrices and the few vector helpers the crate needs.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Row-major dense matrix; serializes as nested arrays `[[...], ...]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Matrix(Vec<Vec<f64>>);

impl Matrix {
    /// Builds from rows; all rows must have the same length.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        if let Some(first) = rows.first() {
            assert!(
                rows.iter().all(|r| r.len() == first.len()),
                "ragged matrix rows"
            );
        }
        Matrix(rows)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix(vec![vec![0.0; cols]; rows])
    }

    pub fn nrows(&self) -> usize {
        self.0.len()
    }

    pub fn ncols(&self) -> usize {
        self.0.first().map_or(0, Vec::len)
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.0[i]
    }

    pub fn into_rows(self) -> Vec<Vec<f64>> {
        self.0
    }

    pub fn mul_vec(&self, y: &[f64]) -> Vec<f64> {
        self.0.iter().map(|r| dot(r, y)).collect()
    }

    /// Row-major flattening.
    pub fn flatten(&self) -> Vec<f64> {
        self.0.iter().flatten().copied().collect()
    }

    pub fn scaled(&self, s: f64) -> Matrix {
        Matrix(
            self.0
                .iter()
                .map(|r| r.iter().map(|v| v * s).collect())
                .collect(),
        )
    }

    pub fn frobenius_distance(&self, other: &Matrix) -> f64 {
        norm(&sub(&self.flatten(), &other.flatten()))
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        max_abs_diff(&self.flatten(), &other.flatten())
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.nrows(), self.ncols(), |i, j| self.0[i][j])
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(p, q)| p - q).collect()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0_f64, |acc, (p, q)| acc.max((p - q).abs()))
}

/// `|value − reference| ≤ tol·(1 + |reference|)`.
pub(crate) fn within(value: f64, reference: f64, tol: f64) -> bool {
    (value - reference).abs() <= tol * (1.0 + reference.abs())
}

/// True when every coordinate of the vectors agrees to within
/// `tol·(1 + magnitude)`.
pub(crate) fn vectors_coincide(vectors: &[Vec<f64>], tol: f64) -> bool {
    let Some(first) = vectors.first() else {
        return true;
    };
    (0..first.len()).all(|l| {
        let (lo, hi, mag) = vectors.iter().fold(
            (f64::INFINITY, f64::NEG_INFINITY, 0.0_f64),
            |(lo, hi, mag), v| (lo.min(v[l]), hi.max(v[l]), mag.max(v[l].abs())),
        );
        hi - lo <= tol * (1.0 + mag)
    })
}

/// Largest coordinate spread among `vectors`, relative to `1 + magnitude`.
pub(crate) fn relative_spread(vectors: &[Vec<f64>]) -> f64 {
    let Some(first) = vectors.first() else {
        return 0.0;
    };
    (0..first.len())
        .map(|l| {
            let (lo, hi, mag) = vectors.iter().fold(
                (f64::INFINITY, f64::NEG_INFINITY, 0.0_f64),
                |(lo, hi, mag), v| (lo.min(v[l]), hi.max(v[l]), mag.max(v[l].abs())),
            );
            (hi - lo) / (1.0 + mag)
        })
        .fold(0.0, f64::max)
}
