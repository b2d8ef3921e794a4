//! Lexicographic gradient selection and the resulting Clarke Jacobian element.
//!
//! For every component `f_i = g_i − h_i` the active gradients of `g_i` and of
//! `h_i` are filtered coordinate by coordinate, keeping at step `l` only the
//! indices whose `l`-th gradient entry is extremal. The survivors have equal
//! gradients, and the row `∇g_{i,j_i}(x) − ∇h_{i,k_i}(x)` built from any
//! survivor pair is the `i`-th row of an element of `∂F(x)`.
//!
//! Both extremal rules are supported. [`Convention::Min`] keeps the smallest
//! entries and pairs with the witness direction `ȳ = −λ`; [`Convention::Max`]
//! keeps the largest and pairs with `ȳ = +λ`. The same convention must be used
//! for every `g_i` and `h_i` so that all selections share one cone of
//! directions.

mod verify;
mod witness;

use serde::{Deserialize, Serialize};

pub use verify::{
    verify_cone_linearity, verify_limit_inclusion, ConeLinearityReport, LimitInclusionReport,
    LimitPoint, DEFAULT_T_SCHEDULE,
};
pub use witness::{
    gamma_set, witness_direction, GammaSet, GammaVector, WitnessCheck, WitnessDirection,
};

use crate::dcmax::{ActiveSet, DcMaxFn, MaxFn, Tolerances};
use crate::error::{Error, Result};
use crate::linalg::{relative_spread, within, Matrix};

/// Which extremum the filtration keeps at each coordinate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    #[default]
    Min,
    Max,
}

impl Convention {
    pub fn opposite(self) -> Self {
        match self {
            Convention::Min => Convention::Max,
            Convention::Max => Convention::Min,
        }
    }

    /// Sign of the witness direction's entries.
    pub fn witness_sign(self) -> f64 {
        match self {
            Convention::Min => -1.0,
            Convention::Max => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Convention::Min => "min",
            Convention::Max => "max",
        }
    }
}

impl std::str::FromStr for Convention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min" => Ok(Convention::Min),
            "max" => Ok(Convention::Max),
            other => Err(Error::InvalidArgument(format!(
                "unknown convention `{other}` (expected min or max)"
            ))),
        }
    }
}

/// Full filtration over list positions `0..grads.len()`.
///
/// Level 0 is every position; level `l` keeps the positions of level `l − 1`
/// whose `l`-th entry lies within `tol_tie·(1 + |extremum|)` of the extremum.
/// The result has `n + 1` levels, each nonempty and nested in the previous.
pub fn s1_chain(
    grads: &[Vec<f64>],
    convention: Convention,
    tol_tie: f64,
) -> Result<Vec<Vec<usize>>> {
    let Some(first) = grads.first() else {
        return Err(Error::EmptyInput("gradient list"));
    };
    let n = first.len();
    if let Some(bad) = grads.iter().find(|g| g.len() != n) {
        return Err(Error::DimensionMismatch {
            what: "gradient",
            expected: n,
            got: bad.len(),
        });
    }
    let mut levels = Vec::with_capacity(n + 1);
    levels.push((0..grads.len()).collect::<Vec<_>>());
    #[allow(clippy::needless_range_loop)]
    for l in 0..n {
        let prev = levels.last().expect("level 0 exists");
        let entries = prev.iter().map(|&t| grads[t][l]);
        let extremum = match convention {
            Convention::Min => entries.fold(f64::INFINITY, f64::min),
            Convention::Max => entries.fold(f64::NEG_INFINITY, f64::max),
        };
        let next: Vec<usize> = prev
            .iter()
            .copied()
            .filter(|&t| within(grads[t][l], extremum, tol_tie))
            .collect();
        levels.push(next);
    }
    Ok(levels)
}

/// Final set of the filtration (positions into `grads`).
pub fn s1_select(grads: &[Vec<f64>], convention: Convention, tol_tie: f64) -> Result<Vec<usize>> {
    Ok(s1_chain(grads, convention, tol_tie)?
        .pop()
        .expect("chain has n + 1 levels"))
}

/// Selection for a single max function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxSelection {
    pub active: ActiveSet,
    /// Filtration levels as piece indices; `chain[0]` is the active set.
    pub chain: Vec<Vec<usize>>,
    /// Smallest index of the final level.
    pub chosen: usize,
}

impl MaxSelection {
    /// The final filtered set.
    pub fn selected(&self) -> &[usize] {
        self.chain.last().expect("chain is never empty")
    }

    /// Piece indices in the active set but not in the final set.
    pub fn rejected(&self) -> impl Iterator<Item = usize> + '_ {
        let kept = self.selected();
        self.active
            .indices
            .iter()
            .copied()
            .filter(move |j| !kept.contains(j))
    }

    /// Coordinate (zero-based) at which `piece` left the filtration.
    pub fn elimination_level(&self, piece: usize) -> Option<usize> {
        (1..self.chain.len())
            .find(|&l| !self.chain[l].contains(&piece))
            .map(|l| l - 1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentSelection {
    pub g: MaxSelection,
    pub h: MaxSelection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub convention: Convention,
    pub components: Vec<ComponentSelection>,
}

/// `ξ ∈ ∂F(x)` together with how it was selected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JacobianElement {
    pub xi: Matrix,
    pub selection: SelectionResult,
}

fn select_max(
    f: &MaxFn,
    x: &[f64],
    tol: Tolerances,
    convention: Convention,
) -> Result<(MaxSelection, Vec<f64>)> {
    let active = f.active_set(x, tol.act)?;
    let grads = f.grads(&active.indices, x)?;
    let chain: Vec<Vec<usize>> = s1_chain(&grads, convention, tol.tie)?
        .into_iter()
        .map(|level| level.into_iter().map(|p| active.indices[p]).collect())
        .collect();
    let chosen = chain.last().expect("nonempty chain")[0];
    let pos = active
        .indices
        .iter()
        .position(|&j| j == chosen)
        .expect("chosen index is active");
    let grad = grads[pos].clone();
    Ok((
        MaxSelection {
            active,
            chain,
            chosen,
        },
        grad,
    ))
}

/// Computes one element of the Clarke generalized Jacobian of `F` at `x`.
///
/// Row `i` is `∇g_{i,j_i}(x) − ∇h_{i,k_i}(x)` where `j_i`, `k_i` are the
/// smallest indices surviving the lexicographic filtration.
pub fn algorithm_a1(
    f: &DcMaxFn,
    x: &[f64],
    tol: Tolerances,
    convention: Convention,
) -> Result<JacobianElement> {
    f.check_point(x)?;
    let mut rows = Vec::with_capacity(f.m());
    let mut components = Vec::with_capacity(f.m());
    for i in 0..f.m() {
        let (g, gg) = select_max(f.g(i), x, tol, convention)?;
        let (h, hg) = select_max(f.h(i), x, tol, convention)?;
        rows.push(gg.iter().zip(&hg).map(|(a, b)| a - b).collect());
        components.push(ComponentSelection { g, h });
    }
    Ok(JacobianElement {
        xi: Matrix::from_rows(rows),
        selection: SelectionResult {
            convention,
            components,
        },
    })
}

/// Every row obtainable from an admissible index choice, per component:
/// `∇g_{ij}(x) − ∇h_{ik}(x)` for all `j ∈ T_i(x)`, `k ∈ S_i(x)`.
pub fn admissible_rows(
    f: &DcMaxFn,
    x: &[f64],
    sel: &SelectionResult,
) -> Result<Vec<Vec<Vec<f64>>>> {
    sel.components
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let gs = f.g(i).grads(c.g.selected(), x)?;
            let hs = f.h(i).grads(c.h.selected(), x)?;
            Ok(gs
                .iter()
                .flat_map(|g| {
                    hs.iter()
                        .map(move |h| g.iter().zip(h).map(|(a, b)| a - b).collect())
                })
                .collect())
        })
        .collect()
}

/// Largest relative coordinate spread among the gradients of any final
/// filtered set; zero when all survivors share one gradient exactly.
pub fn survivor_spread(f: &DcMaxFn, x: &[f64], sel: &SelectionResult) -> Result<f64> {
    let mut worst = 0.0_f64;
    for (i, c) in sel.components.iter().enumerate() {
        worst = worst.max(relative_spread(&f.g(i).grads(c.g.selected(), x)?));
        worst = worst.max(relative_spread(&f.h(i).grads(c.h.selected(), x)?));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dcmax::load_problem;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn s1_single_coordinate() {
        let grads = vec![vec![1.0], vec![-1.0]];
        assert_eq!(s1_select(&grads, Convention::Min, 1e-9).unwrap(), vec![1]);
        assert_eq!(s1_select(&grads, Convention::Max, 1e-9).unwrap(), vec![0]);
    }

    #[test]
    fn s1_hand_filtration() {
        let grads = vec![vec![1.0, 2.0], vec![1.0, 3.0], vec![2.0, 0.0]];
        let chain = s1_chain(&grads, Convention::Min, 1e-9).unwrap();
        assert_eq!(chain, vec![vec![0, 1, 2], vec![0, 1], vec![0]]);
    }

    #[test]
    fn s1_tie_survives() {
        let grads = vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![3.0, -9.0]];
        assert_eq!(
            s1_select(&grads, Convention::Min, 1e-9).unwrap(),
            vec![0, 1]
        );
    }

    #[test]
    fn s1_errors() {
        assert!(matches!(
            s1_select(&[], Convention::Min, 1e-9),
            Err(Error::EmptyInput(_))
        ));
        assert!(matches!(
            s1_select(&[vec![1.0], vec![1.0, 2.0]], Convention::Min, 1e-9),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn a1_on_abs() {
        let f = load_problem(r#"{"n":1,"m":1,"components":[{"g":["x1","-x1"]}]}"#).unwrap();
        let min = algorithm_a1(&f, &[0.0], tol(), Convention::Min).unwrap();
        assert_eq!(min.xi.rows(), &[vec![-1.0]]);
        let c = &min.selection.components[0];
        assert_eq!(c.g.chain, vec![vec![0, 1], vec![1]]);
        assert_eq!(c.g.chosen, 1);
        assert_eq!(c.h.chosen, 0);
        let max = algorithm_a1(&f, &[0.0], tol(), Convention::Max).unwrap();
        assert_eq!(max.xi.rows(), &[vec![1.0]]);
    }

    #[test]
    fn a1_on_negative_abs_uses_minus_sign() {
        let f =
            load_problem(r#"{"n":1,"m":1,"components":[{"g":["x1","-x1"],"h":["2*x1","-2*x1"]}]}"#)
                .unwrap();
        let e = algorithm_a1(&f, &[0.0], tol(), Convention::Min).unwrap();
        assert_eq!(e.selection.components[0].g.chosen, 1);
        assert_eq!(e.selection.components[0].h.chosen, 1);
        assert_eq!(e.xi.rows(), &[vec![1.0]]);
    }

    #[test]
    fn a1_smooth_is_classical_jacobian() {
        let f = load_problem(
            r#"{"n":2,"m":2,"components":[{"g":["x1*x2"],"h":["x1"]},{"g":["exp(x2)"],"h":["x2^2"]}]}"#,
        )
        .unwrap();
        let x = [0.5, -0.25];
        let e = algorithm_a1(&f, &x, tol(), Convention::Min).unwrap();
        let classical = f.smooth_jacobian(&x, tol()).unwrap().unwrap().jacobian;
        assert!(e.xi.max_abs_diff(&classical) == 0.0);
    }

    #[test]
    fn admissible_choices_agree() {
        let f = load_problem(
            r#"{"n":2,"m":1,"components":[{"g":["x1 + x2","x1 + x2","2*x1"],"h":["x1","x2","x1"]}]}"#,
        )
        .unwrap();
        let e = algorithm_a1(&f, &[0.0, 0.0], tol(), Convention::Min).unwrap();
        let c = &e.selection.components[0];
        assert_eq!(c.g.selected(), &[0, 1]);
        assert_eq!(c.h.selected(), &[1]);
        let rows = admissible_rows(&f, &[0.0, 0.0], &e.selection).unwrap();
        assert_eq!(rows[0].len(), 2);
        for r in &rows[0] {
            assert_eq!(r.as_slice(), e.xi.row(0));
        }
        assert_eq!(survivor_spread(&f, &[0.0, 0.0], &e.selection).unwrap(), 0.0);
    }

    #[test]
    fn elimination_levels() {
        let f =
            load_problem(r#"{"n":2,"m":1,"components":[{"g":["x1 + 2*x2","x1 + 3*x2","2*x1"]}]}"#)
                .unwrap();
        let e = algorithm_a1(&f, &[0.0, 0.0], tol(), Convention::Min).unwrap();
        let g = &e.selection.components[0].g;
        assert_eq!(g.elimination_level(2), Some(0));
        assert_eq!(g.elimination_level(1), Some(1));
        assert_eq!(g.elimination_level(0), None);
        assert_eq!(g.rejected().collect::<Vec<_>>(), vec![1, 2]);
    }

    #[test]
    fn convention_parsing() {
        assert_eq!("min".parse::<Convention>().unwrap(), Convention::Min);
        assert_eq!("max".parse::<Convention>().unwrap(), Convention::Max);
        assert!("mid".parse::<Convention>().is_err());
        assert_eq!(serde_json::to_string(&Convention::Max).unwrap(), "\"max\"");
    }
}
