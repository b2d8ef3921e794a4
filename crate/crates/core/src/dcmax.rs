//! Differences of max-type functions.
//!
//! `F = G − H` with `f_i(x) = max_j g_ij(x) − max_k h_ik(x)`. Index sets are
//! list positions. Problems are loaded from a JSON document:
//!
//! ```json
//! { "n": 1, "m": 1, "components": [ { "g": ["x1", "-x1"], "h": ["0"] } ] }
//! ```
//!
//! `"h"` may be omitted, in which case it is the single zero piece.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::SmoothFn;
use crate::linalg::{dot, vectors_coincide, Matrix};

pub const DEFAULT_TOL_ACT: f64 = 1e-9;
pub const DEFAULT_TOL_TIE: f64 = 1e-9;

/// Tolerances of the hybrid rule `|v − v*| ≤ tol·(1 + |v*|)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Active-set tolerance.
    pub act: f64,
    /// Tie tolerance of the lexicographic filtration.
    pub tie: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            act: DEFAULT_TOL_ACT,
            tie: DEFAULT_TOL_TIE,
        }
    }
}

/// Indices of the pieces attaining the maximum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActiveSet {
    pub indices: Vec<usize>,
    pub max_value: f64,
    pub tolerance_used: f64,
}

/// `max_j f_j(x)` over a nonempty list of C¹ pieces sharing one dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct MaxFn {
    pieces: Vec<SmoothFn>,
}

impl MaxFn {
    pub fn new(pieces: Vec<SmoothFn>) -> Result<Self> {
        let Some(first) = pieces.first() else {
            return Err(Error::EmptyInput("max function with no pieces"));
        };
        let dim = first.dim();
        if let Some(bad) = pieces.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch {
                what: "piece",
                expected: dim,
                got: bad.dim(),
            });
        }
        Ok(MaxFn { pieces })
    }

    /// Parses each formula as a piece in `dim` variables.
    pub fn parse(texts: &[&str], dim: usize) -> Result<Self> {
        let pieces = texts
            .iter()
            .map(|t| SmoothFn::parse(t, dim))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        MaxFn::new(pieces)
    }

    /// The zero function, as a single piece.
    pub fn zero(dim: usize) -> Self {
        MaxFn {
            pieces: vec![SmoothFn::parse("0", dim).expect("constant parses")],
        }
    }

    pub fn pieces(&self) -> &[SmoothFn] {
        &self.pieces
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.pieces[0].dim()
    }

    pub fn piece_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.pieces
            .iter()
            .map(|p| p.eval(x).map_err(Error::from))
            .collect()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(self
            .piece_values(x)?
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max))
    }

    pub fn piece_grad(&self, piece: usize, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.pieces[piece].grad(x)?)
    }

    /// Gradients of the listed pieces, in order.
    pub fn grads(&self, indices: &[usize], x: &[f64]) -> Result<Vec<Vec<f64>>> {
        indices.iter().map(|&j| self.piece_grad(j, x)).collect()
    }

    pub fn active_set(&self, x: &[f64], tol_act: f64) -> Result<ActiveSet> {
        Ok(active_from_values(&self.piece_values(x)?, tol_act))
    }

    /// `max_{j ∈ J(x)} ∇f_j(x)ᵀy`.
    pub fn directional_derivative(&self, x: &[f64], y: &[f64], tol_act: f64) -> Result<f64> {
        if y.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                what: "direction",
                expected: self.dim(),
                got: y.len(),
            });
        }
        let active = self.active_set(x, tol_act)?;
        let mut best = f64::NEG_INFINITY;
        for &j in &active.indices {
            best = best.max(dot(&self.piece_grad(j, x)?, y));
        }
        Ok(best)
    }

    /// If all active gradients coincide, returns that gradient and the
    /// smallest active index; `None` when the max has a kink at `x`.
    pub fn smooth_gradient(&self, x: &[f64], tol: Tolerances) -> Result<Option<(usize, Vec<f64>)>> {
        let active = self.active_set(x, tol.act)?;
        let lead = active.indices[0];
        let g = self.piece_grad(lead, x)?;
        if active.indices.len() == 1 {
            return Ok(Some((lead, g)));
        }
        let grads = self.grads(&active.indices, x)?;
        Ok(vectors_coincide(&grads, tol.tie).then_some((lead, g)))
    }
}

/// Active indices for precomputed piece values.
pub fn active_from_values(values: &[f64], tol_act: f64) -> ActiveSet {
    let max_value = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let threshold = max_value - tol_act * (1.0 + max_value.abs());
    ActiveSet {
        indices: values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v >= threshold)
            .map(|(j, _)| j)
            .collect(),
        max_value,
        tolerance_used: tol_act,
    }
}

/// Which side of a component a max function belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    G,
    H,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::G => "g",
            Side::H => "h",
        }
    }
}

/// `F = G − H` with `m` components in `n` variables.
#[derive(Clone, Debug, PartialEq)]
pub struct DcMaxFn {
    n: usize,
    g: Vec<MaxFn>,
    h: Vec<MaxFn>,
}

/// A classical Jacobian together with the piece used in every component.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothJacobian {
    pub jacobian: Matrix,
    /// `(g piece, h piece)` per component; the smallest active index.
    pub profile: Vec<(usize, usize)>,
}

impl DcMaxFn {
    pub fn new(n: usize, g: Vec<MaxFn>, h: Vec<MaxFn>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Schema("n must be positive".into()));
        }
        if g.is_empty() {
            return Err(Error::Schema("m must be positive".into()));
        }
        if g.len() != h.len() {
            return Err(Error::DimensionMismatch {
                what: "H",
                expected: g.len(),
                got: h.len(),
            });
        }
        for f in g.iter().chain(&h) {
            if f.dim() != n {
                return Err(Error::DimensionMismatch {
                    what: "piece",
                    expected: n,
                    got: f.dim(),
                });
            }
        }
        Ok(DcMaxFn { n, g, h })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.g.len()
    }

    pub fn g(&self, i: usize) -> &MaxFn {
        &self.g[i]
    }

    pub fn h(&self, i: usize) -> &MaxFn {
        &self.h[i]
    }

    pub fn side(&self, i: usize, side: Side) -> &MaxFn {
        match side {
            Side::G => &self.g[i],
            Side::H => &self.h[i],
        }
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                what: "point",
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        self.g
            .iter()
            .zip(&self.h)
            .map(|(g, h)| Ok(g.eval(x)? - h.eval(x)?))
            .collect()
    }

    /// Component-wise `g_i′(x; y) − h_i′(x; y)`.
    pub fn directional_derivative(&self, x: &[f64], y: &[f64], tol_act: f64) -> Result<Vec<f64>> {
        self.check_point(x)?;
        self.g
            .iter()
            .zip(&self.h)
            .map(|(g, h)| {
                Ok(g.directional_derivative(x, y, tol_act)?
                    - h.directional_derivative(x, y, tol_act)?)
            })
            .collect()
    }

    /// True when every piece is a formula with a constant gradient, judged
    /// at three fixed probe points.
    pub fn is_affine(&self) -> bool {
        self.first_non_affine().is_none()
    }

    pub(crate) fn first_non_affine(&self) -> Option<(usize, Side, usize)> {
        let probes: Vec<Vec<f64>> = [0.37, -1.21, 2.03]
            .iter()
            .map(|s| (0..self.n).map(|l| s * (1.0 + 0.61 * l as f64)).collect())
            .collect();
        for i in 0..self.m() {
            for side in [Side::G, Side::H] {
                for (k, piece) in self.side(i, side).pieces().iter().enumerate() {
                    let grads: Option<Vec<Vec<f64>>> =
                        probes.iter().map(|p| piece.grad(p).ok()).collect();
                    let affine = grads.is_some_and(|gs| {
                        gs.iter()
                            .all(|g| g.iter().zip(&gs[0]).all(|(a, b)| (a - b).abs() <= 1e-10))
                    });
                    if !affine {
                        return Some((i, side, k));
                    }
                }
            }
        }
        None
    }

    /// Classical Jacobian at `x` when every component's active gradients
    /// coincide on both sides (so `F` is differentiable there); `None`
    /// otherwise.
    pub fn smooth_jacobian(&self, x: &[f64], tol: Tolerances) -> Result<Option<SmoothJacobian>> {
        self.check_point(x)?;
        let mut rows = Vec::with_capacity(self.m());
        let mut profile = Vec::with_capacity(self.m());
        for (g, h) in self.g.iter().zip(&self.h) {
            let (Some((j, gg)), Some((k, hg))) =
                (g.smooth_gradient(x, tol)?, h.smooth_gradient(x, tol)?)
            else {
                return Ok(None);
            };
            rows.push(gg.iter().zip(&hg).map(|(a, b)| a - b).collect());
            profile.push((j, k));
        }
        Ok(Some(SmoothJacobian {
            jacobian: Matrix::from_rows(rows),
            profile,
        }))
    }

    pub fn to_document(&self) -> ProblemDocument {
        ProblemDocument {
            n: self.n,
            m: self.m(),
            components: self
                .g
                .iter()
                .zip(&self.h)
                .map(|(g, h)| ComponentDocument {
                    g: g.pieces().iter().map(|p| p.to_string()).collect(),
                    h: Some(h.pieces().iter().map(|p| p.to_string()).collect()),
                })
                .collect(),
        }
    }
}

/// On-disk problem schema.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDocument {
    pub n: usize,
    pub m: usize,
    pub components: Vec<ComponentDocument>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentDocument {
    pub g: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<String>>,
}

impl ProblemDocument {
    pub fn into_problem(self) -> Result<DcMaxFn> {
        if self.n == 0 {
            return Err(Error::Schema("\"n\" must be positive".into()));
        }
        if self.m == 0 {
            return Err(Error::Schema("\"m\" must be positive".into()));
        }
        if self.components.len() != self.m {
            return Err(Error::DimensionMismatch {
                what: "components",
                expected: self.m,
                got: self.components.len(),
            });
        }
        let n = self.n;
        let parse_side = |i: usize, side: Side, texts: &[String]| -> Result<MaxFn> {
            if texts.is_empty() {
                return Err(Error::EmptyPieceList {
                    component: i,
                    side: side.name(),
                });
            }
            let pieces = texts
                .iter()
                .enumerate()
                .map(|(k, t)| {
                    SmoothFn::parse(t, n).map_err(|source| Error::Piece {
                        component: i,
                        side: side.name(),
                        piece: k,
                        source,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            MaxFn::new(pieces)
        };
        let mut g = Vec::with_capacity(self.m);
        let mut h = Vec::with_capacity(self.m);
        for (i, c) in self.components.iter().enumerate() {
            g.push(parse_side(i, Side::G, &c.g)?);
            h.push(match &c.h {
                Some(texts) => parse_side(i, Side::H, texts)?,
                None => MaxFn::zero(n),
            });
        }
        DcMaxFn::new(n, g, h)
    }
}

/// Parses and validates a problem document.
pub fn load_problem(json: &str) -> Result<DcMaxFn> {
    let doc: ProblemDocument =
        serde_json::from_str(json).map_err(|e| Error::Schema(e.to_string()))?;
    doc.into_problem()
}

pub fn load_problem_file(path: impl AsRef<Path>) -> Result<DcMaxFn> {
    load_problem(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abs_problem() -> DcMaxFn {
        load_problem(r#"{"n":1,"m":1,"components":[{"g":["x1","-x1"],"h":["0"]}]}"#).unwrap()
    }

    #[test]
    fn load_abs_and_evaluate() {
        let f = abs_problem();
        assert_eq!((f.n(), f.m()), (1, 1));
        assert_eq!(f.eval(&[-3.0]).unwrap(), vec![3.0]);
        assert_eq!(f.eval(&[2.5]).unwrap(), vec![2.5]);
    }

    #[test]
    fn missing_h_defaults_to_zero() {
        let f = load_problem(r#"{"n":1,"m":1,"components":[{"g":["x1","2*x1"]}]}"#).unwrap();
        assert_eq!(f.h(0).len(), 1);
        assert_eq!(f.eval(&[1.0]).unwrap(), vec![2.0]);
        let f =
            load_problem(r#"{"n":1,"m":1,"components":[{"g":["x1","2*x1"],"h":["x1"]}]}"#).unwrap();
        assert_eq!(f.eval(&[1.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn smooth_problem_has_singleton_active_sets() {
        let f = load_problem(
            r#"{"n":2,"m":2,"components":[{"g":["x1*x2"],"h":["x1"]},{"g":["sin(x2)"],"h":["x2^2"]}]}"#,
        )
        .unwrap();
        for i in 0..2 {
            assert_eq!(
                f.g(i).active_set(&[0.3, 0.4], 1e-9).unwrap().indices,
                vec![0]
            );
            assert_eq!(
                f.h(i).active_set(&[0.3, 0.4], 1e-9).unwrap().indices,
                vec![0]
            );
        }
    }

    #[test]
    fn schema_errors() {
        let empty = load_problem(r#"{"n":1,"m":1,"components":[{"g":[],"h":["0"]}]}"#);
        assert!(matches!(
            empty,
            Err(Error::EmptyPieceList {
                component: 0,
                side: "g"
            })
        ));
        assert!(empty.unwrap_err().to_string().contains("empty piece list"));
        assert!(matches!(
            load_problem(r#"{"n":1,"m":1,"components":[{"g":["x1"],"h":[]}]}"#),
            Err(Error::EmptyPieceList { side: "h", .. })
        ));
        assert!(matches!(
            load_problem(r#"{"n":1,"m":2,"components":[{"g":["x1"]}]}"#),
            Err(Error::DimensionMismatch {
                what: "components",
                ..
            })
        ));
        assert!(matches!(
            load_problem(r#"{"n":1,"m":1,"components":[{"g":["x2"]}]}"#),
            Err(Error::Piece { .. })
        ));
        assert!(matches!(
            load_problem(r#"{"n":1,"m":1,"components":[{"g":["x1"],"k":[]}]}"#),
            Err(Error::Schema(_))
        ));
        assert!(matches!(load_problem("not json"), Err(Error::Schema(_))));
        assert!(matches!(
            load_problem(r#"{"n":0,"m":1,"components":[{"g":["1"]}]}"#),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn eval_max_minus_max() {
        let f =
            load_problem(r#"{"n":1,"m":1,"components":[{"g":["x1","2*x1"],"h":["x1"]}]}"#).unwrap();
        assert_eq!(f.eval(&[1.0]).unwrap(), vec![1.0]);
        assert!(matches!(
            f.eval(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { what: "point", .. })
        ));
    }

    #[test]
    fn active_set_examples() {
        let abs = MaxFn::parse(&["x1", "-x1"], 1).unwrap();
        assert_eq!(abs.active_set(&[0.0], 1e-9).unwrap().indices, vec![0, 1]);
        assert_eq!(abs.active_set(&[1.0], 1e-9).unwrap().indices, vec![0]);
        let near = MaxFn::parse(&["x1 + 1e-12", "x1"], 1).unwrap();
        let a = near.active_set(&[0.0], 1e-9).unwrap();
        assert_eq!(a.indices, vec![0, 1]);
        assert_eq!(a.max_value, 1e-12);
        assert_eq!(a.tolerance_used, 1e-9);
        assert_eq!(near.active_set(&[0.0], 0.0).unwrap().indices, vec![0]);
    }

    #[test]
    fn hybrid_rule_scales_with_magnitude() {
        // Gap 1e-2: outside 1e-9·(1 + 1e6) = 1e-3, inside 1e-6·(1 + 1e6).
        let f = MaxFn::parse(&["1e6", "1e6 - 1e-2"], 1).unwrap();
        assert_eq!(f.active_set(&[0.0], 1e-9).unwrap().indices, vec![0]);
        assert_eq!(
            f.active_set(&[0.0], 1e-9 * 1000.0).unwrap().indices,
            vec![0, 1]
        );
    }

    #[test]
    fn max_directional_derivative_examples() {
        let abs = MaxFn::parse(&["x1", "-x1"], 1).unwrap();
        assert_eq!(
            abs.directional_derivative(&[0.0], &[1.0], 1e-9).unwrap(),
            1.0
        );
        assert_eq!(
            abs.directional_derivative(&[0.0], &[-1.0], 1e-9).unwrap(),
            1.0
        );
        let single = MaxFn::parse(&["x1^2 + 3*x2"], 2).unwrap();
        assert_eq!(
            single
                .directional_derivative(&[2.0, 1.0], &[0.5, -1.0], 1e-9)
                .unwrap(),
            4.0 * 0.5 - 3.0
        );
    }

    #[test]
    fn dd_of_abs_minus_twice_abs() {
        let f =
            load_problem(r#"{"n":1,"m":1,"components":[{"g":["x1","-x1"],"h":["2*x1","-2*x1"]}]}"#)
                .unwrap();
        assert_eq!(
            f.directional_derivative(&[0.0], &[1.0], 1e-9).unwrap(),
            vec![-1.0]
        );
        assert_eq!(
            f.directional_derivative(&[0.0], &[-3.0], 1e-9).unwrap(),
            vec![-3.0]
        );
    }

    #[test]
    fn smooth_dd_is_jacobian_times_direction() {
        let f = load_problem(
            r#"{"n":2,"m":2,"components":[{"g":["x1*x2"],"h":["x1"]},{"g":["exp(x2)"],"h":["x2^2"]}]}"#,
        )
        .unwrap();
        let x = [0.5, -0.25];
        let jac = f
            .smooth_jacobian(&x, Tolerances::default())
            .unwrap()
            .unwrap();
        for l in 0..2 {
            let mut e = [0.0; 2];
            e[l] = 1.0;
            let dd = f.directional_derivative(&x, &e, 1e-9).unwrap();
            for (i, d) in dd.iter().enumerate() {
                assert!((d - jac.jacobian.row(i)[l]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn smooth_jacobian_detects_kinks_and_duplicate_pieces() {
        let abs = abs_problem();
        assert!(abs
            .smooth_jacobian(&[0.0], Tolerances::default())
            .unwrap()
            .is_none());
        let sj = abs
            .smooth_jacobian(&[-2.0], Tolerances::default())
            .unwrap()
            .unwrap();
        assert_eq!(sj.jacobian.rows(), &[vec![-1.0]]);
        assert_eq!(sj.profile, vec![(1, 0)]);
        // Identical pieces tie everywhere but F is still differentiable.
        let dup = load_problem(r#"{"n":1,"m":1,"components":[{"g":["2*x1","2*x1"]}]}"#).unwrap();
        let sj = dup
            .smooth_jacobian(&[0.3], Tolerances::default())
            .unwrap()
            .unwrap();
        assert_eq!(sj.jacobian.rows(), &[vec![2.0]]);
        assert_eq!(sj.profile, vec![(0, 0)]);
    }

    #[test]
    fn affinity_check() {
        assert!(abs_problem().is_affine());
        let curved = load_problem(r#"{"n":1,"m":1,"components":[{"g":["x1^2","0"]}]}"#).unwrap();
        assert!(!curved.is_affine());
        assert_eq!(curved.first_non_affine(), Some((0, Side::G, 0)));
    }

    #[test]
    fn document_round_trip() {
        let f = abs_problem();
        let doc = f.to_document();
        let json = serde_json::to_string(&doc).unwrap();
        assert_eq!(load_problem(&json).unwrap(), f);
    }
}
