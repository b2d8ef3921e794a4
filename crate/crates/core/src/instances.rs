//! Seeded random piecewise-affine problems.
//!
//! Pieces are `a·x + b` with integer coefficients in `[−5, 5]`; the constant
//! `b` is zero half of the time so that many pieces tie at the origin.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dcmax::{ComponentDocument, DcMaxFn, ProblemDocument};
use crate::error::{Error, Result};

pub const COEFFICIENT_BOUND: i32 = 5;

/// Shape of a random instance: each max function gets between 1 and
/// `pieces` pieces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomSpec {
    pub n: usize,
    pub m: usize,
    pub pieces: usize,
    pub seed: u64,
}

impl std::str::FromStr for RandomSpec {
    type Err = Error;

    /// Parses `n=3,m=2,pieces=4,seed=7`; `seed` defaults to 42.
    fn from_str(s: &str) -> Result<Self> {
        let mut spec = RandomSpec {
            n: 0,
            m: 0,
            pieces: 0,
            seed: 42,
        };
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part.split_once('=').ok_or_else(|| {
                Error::InvalidArgument(format!("expected key=value, got `{part}`"))
            })?;
            let bad = || Error::InvalidArgument(format!("invalid value in `{part}`"));
            match key.trim() {
                "n" => spec.n = value.trim().parse().map_err(|_| bad())?,
                "m" => spec.m = value.trim().parse().map_err(|_| bad())?,
                "pieces" => spec.pieces = value.trim().parse().map_err(|_| bad())?,
                "seed" => spec.seed = value.trim().parse().map_err(|_| bad())?,
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "unknown random-instance key `{other}`"
                    )))
                }
            }
        }
        if spec.n == 0 || spec.m == 0 || spec.pieces == 0 {
            return Err(Error::InvalidArgument(
                "random instance needs positive n, m and pieces".into(),
            ));
        }
        Ok(spec)
    }
}

fn affine_piece(rng: &mut ChaCha8Rng, n: usize) -> String {
    let mut terms: Vec<String> = (1..=n)
        .map(|l| {
            let a = rng.random_range(-COEFFICIENT_BOUND..=COEFFICIENT_BOUND);
            format!("{a}*x{l}")
        })
        .collect();
    let b = if rng.random_bool(0.5) {
        0
    } else {
        rng.random_range(-COEFFICIENT_BOUND..=COEFFICIENT_BOUND)
    };
    terms.push(b.to_string());
    terms.join(" + ")
}

fn side(rng: &mut ChaCha8Rng, n: usize, max_pieces: usize) -> Vec<String> {
    let count = rng.random_range(1..=max_pieces);
    (0..count).map(|_| affine_piece(rng, n)).collect()
}

/// Random problem document for `spec`.
pub fn random_affine_document(spec: RandomSpec) -> ProblemDocument {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let components = (0..spec.m)
        .map(|_| ComponentDocument {
            g: side(&mut rng, spec.n, spec.pieces),
            h: Some(side(&mut rng, spec.n, spec.pieces)),
        })
        .collect();
    ProblemDocument {
        n: spec.n,
        m: spec.m,
        components,
    }
}

pub fn random_affine_problem(spec: RandomSpec) -> Result<DcMaxFn> {
    random_affine_document(spec).into_problem()
}

/// `count` instances with `n ∈ 1..=4`, `m ∈ 1..=3` and at most 5 pieces per
/// max function.
pub fn affine_corpus(count: usize, seed: u64) -> Result<Vec<(RandomSpec, DcMaxFn)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let spec = RandomSpec {
                n: rng.random_range(1..=4),
                m: rng.random_range(1..=3),
                pieces: 5,
                seed: rng.random(),
            };
            Ok((spec, random_affine_problem(spec)?))
        })
        .collect()
}
