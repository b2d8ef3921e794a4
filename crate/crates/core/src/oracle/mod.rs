//! Independent checks that a matrix belongs to the Clarke generalized
//! Jacobian `∂F(x) = co{lim ∇F(x_k) : x_k → x, x_k ∈ D_F}`.
//!
//! Nothing here uses the lexicographic selection. Limiting Jacobians are
//! found by sampling differentiability points near `x` and, for
//! piecewise-affine problems, by enumerating every combination of active
//! pieces whose selection region is a full-dimensional cone. Membership in the
//! convex hull is decided with a minimum-norm-point solver.

mod minnorm;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use minnorm::{min_norm_point, MinNormPoint};

use crate::dcmax::{active_from_values, DcMaxFn, MaxFn, Side, Tolerances};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, vectors_coincide, Matrix};

pub const DEFAULT_PROBE_RADIUS: f64 = 1e-3;
pub const DEFAULT_PROBE_COUNT: usize = 4096;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_MEMBERSHIP_TOL: f64 = 1e-8;

/// Samples drawn per RNG substream; fixes the partition of the sample
/// stream independently of the number of worker threads.
const CHUNK: usize = 256;
/// Jacobians closer than this (max entry) are the same.
const SAME_JACOBIAN: f64 = 1e-10;

/// `(g piece, h piece)` per component.
pub type Profile = Vec<(usize, usize)>;

/// A differentiable sample point tagged with its active profile.
type ProfiledPoint = (Profile, Vec<f64>);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitingSample {
    pub point: Vec<f64>,
    pub jacobian: Matrix,
    pub active_profile: Profile,
}

fn ball_point(rng: &mut ChaCha8Rng, center: &[f64], radius: f64) -> Vec<f64> {
    let n = center.len();
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let r = norm(&v);
        if r > 0.0 {
            let s = radius * rng.random::<f64>().powf(1.0 / n as f64) / r;
            return center.iter().zip(&v).map(|(c, d)| c + s * d).collect();
        }
    }
}

/// Smallest active index if `F`'s max is smooth at `x` judged by values only;
/// `None` when ties need a gradient comparison.
fn singleton_active(f: &MaxFn, x: &[f64], tol_act: f64) -> Result<Option<usize>> {
    let a = active_from_values(&f.piece_values(x)?, tol_act);
    Ok((a.indices.len() == 1).then(|| a.indices[0]))
}

fn profile_at(f: &DcMaxFn, x: &[f64], tol: Tolerances) -> Result<Option<Profile>> {
    let mut profile = Vec::with_capacity(f.m());
    for i in 0..f.m() {
        match (
            singleton_active(f.g(i), x, tol.act)?,
            singleton_active(f.h(i), x, tol.act)?,
        ) {
            (Some(j), Some(k)) => profile.push((j, k)),
            _ => return Ok(f.smooth_jacobian(x, tol)?.map(|sj| sj.profile)),
        }
    }
    Ok(Some(profile))
}

/// Uniform samples in `B(x, radius)` at which `F` is differentiable, one per
/// distinct active profile (first occurrence in sample order). The stream is
/// split into fixed-size chunks with their own ChaCha substream and the
/// chunks run in parallel; the output does not depend on the thread count.
pub fn sample_limiting_jacobians(
    f: &DcMaxFn,
    x: &[f64],
    radius: f64,
    count: usize,
    seed: u64,
    tol: Tolerances,
) -> Result<Vec<LimitingSample>> {
    Ok(sample_profiles(f, x, radius, count, seed, tol)?.0)
}

/// Samples plus the number of points that were differentiability points.
fn sample_profiles(
    f: &DcMaxFn,
    x: &[f64],
    radius: f64,
    count: usize,
    seed: u64,
    tol: Tolerances,
) -> Result<(Vec<LimitingSample>, usize)> {
    f.check_point(x)?;
    if radius.is_nan() || radius <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "probe radius must be positive, got {radius}"
        )));
    }
    let chunks = count.div_ceil(CHUNK);
    let per_chunk: Vec<Result<Vec<ProfiledPoint>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = CHUNK.min(count - c * CHUNK);
            let mut out = Vec::new();
            for _ in 0..len {
                let p = ball_point(&mut rng, x, radius);
                if let Some(profile) = profile_at(f, &p, tol)? {
                    out.push((profile, p));
                }
            }
            Ok(out)
        })
        .collect();
    let mut kept = 0;
    let mut first: BTreeMap<Profile, Vec<f64>> = BTreeMap::new();
    let mut order = Vec::new();
    for chunk in per_chunk {
        for (profile, p) in chunk? {
            kept += 1;
            if let std::collections::btree_map::Entry::Vacant(e) = first.entry(profile) {
                order.push(e.key().clone());
                e.insert(p);
            }
        }
    }
    let mut samples = Vec::with_capacity(order.len());
    for profile in order {
        let point = first.remove(&profile).expect("recorded");
        let sj = f
            .smooth_jacobian(&point, tol)?
            .expect("profile points are differentiability points");
        samples.push(LimitingSample {
            point,
            jacobian: sj.jacobian,
            active_profile: profile,
        });
    }
    Ok((samples, kept))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HullStatus {
    Member,
    NotMember,
    /// The solver hit its iteration cap before deciding.
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HullCertificate {
    pub status: HullStatus,
    pub member: bool,
    /// Convex weights over the candidates realising the closest hull point.
    pub weights: Vec<f64>,
    /// Frobenius distance from the query to the hull. When positive it is
    /// also the value of the separating functional along the min-norm
    /// direction.
    pub violation: f64,
    pub iterations: usize,
}

/// Decides whether `query` lies within `tol` (Frobenius) of `co(candidates)`.
///
/// Runs Wolfe's method on `{c − query}`, capped at
/// `10·|candidates|·m·n` iterations.
pub fn hull_membership(query: &Matrix, candidates: &[Matrix], tol: f64) -> Result<HullCertificate> {
    if candidates.is_empty() {
        return Err(Error::EmptyInput("hull candidates"));
    }
    let q = query.flatten();
    let shifted: Vec<Vec<f64>> = candidates
        .iter()
        .map(|c| {
            if c.nrows() != query.nrows() || c.ncols() != query.ncols() {
                return Err(Error::DimensionMismatch {
                    what: "candidate matrix",
                    expected: q.len(),
                    got: c.nrows() * c.ncols(),
                });
            }
            Ok(c.flatten().iter().zip(&q).map(|(a, b)| a - b).collect())
        })
        .collect::<Result<_>>()?;
    let cap = (10 * candidates.len() * q.len()).max(1);
    let mnp = min_norm_point(&shifted, cap);
    let distance = mnp.norm();
    let status = if distance <= tol {
        HullStatus::Member
    } else if mnp.converged {
        HullStatus::NotMember
    } else {
        HullStatus::Inconclusive
    };
    Ok(HullCertificate {
        status,
        member: status == HullStatus::Member,
        weights: mnp.weights,
        violation: distance,
        iterations: mnp.iterations,
    })
}

/// Distinct active gradients of one max function at `x`, each with the
/// smallest piece index realising it.
fn gradient_classes(f: &MaxFn, x: &[f64], tol: Tolerances) -> Result<Vec<(usize, Vec<f64>)>> {
    let active = f.active_set(x, tol.act)?;
    let mut classes: Vec<(usize, Vec<f64>)> = Vec::new();
    for &j in &active.indices {
        let g = f.piece_grad(j, x)?;
        let known = classes
            .iter()
            .any(|(_, c)| vectors_coincide(&[c.clone(), g.clone()], tol.tie));
        if !known {
            classes.push((j, g));
        }
    }
    Ok(classes)
}

/// `{d : a_rᵀd > 0 ∀r}` is nonempty iff `0 ∉ co{a_r}` (Gordan). The
/// min-norm point `p` of the hull is then itself a strict solution.
fn open_cone_nonempty(rows: &[Vec<f64>]) -> bool {
    if rows.is_empty() {
        return true;
    }
    let scale = rows.iter().map(|r| norm(r)).fold(0.0_f64, f64::max);
    let mnp = min_norm_point(rows, 100 * rows.len() * rows[0].len() + 100);
    mnp.norm() > 1e-9 * (1.0 + scale) && rows.iter().all(|r| dot(r, &mnp.point) > 0.0)
}

struct Slot {
    classes: Vec<(usize, Vec<f64>)>,
}

/// Every assignment of one gradient class per max function whose
/// selection region `{d : chosen gradient strictly beats the others}` is a
/// nonempty open cone, found by depth-first search with pruning.
fn enumerate_regions(f: &DcMaxFn, x: &[f64], tol: Tolerances) -> Result<Vec<(Profile, Matrix)>> {
    let mut slots = Vec::with_capacity(2 * f.m());
    for i in 0..f.m() {
        for side in [Side::G, Side::H] {
            slots.push(Slot {
                classes: gradient_classes(f.side(i, side), x, tol)?,
            });
        }
    }
    let mut out = Vec::new();
    let mut picks = Vec::with_capacity(slots.len());
    let mut rows = Vec::new();
    descend(&slots, &mut picks, &mut rows, &mut out);
    Ok(out
        .into_iter()
        .map(|picks: Vec<usize>| {
            let mut profile = Vec::with_capacity(f.m());
            let mut jac = Vec::with_capacity(f.m());
            for i in 0..f.m() {
                let (j, gg) = &slots[2 * i].classes[picks[2 * i]];
                let (k, hg) = &slots[2 * i + 1].classes[picks[2 * i + 1]];
                profile.push((*j, *k));
                jac.push(gg.iter().zip(hg).map(|(a, b)| a - b).collect());
            }
            (profile, Matrix::from_rows(jac))
        })
        .collect())
}

fn descend(
    slots: &[Slot],
    picks: &mut Vec<usize>,
    rows: &mut Vec<Vec<f64>>,
    out: &mut Vec<Vec<usize>>,
) {
    let depth = picks.len();
    if depth == slots.len() {
        out.push(picks.clone());
        return;
    }
    let classes = &slots[depth].classes;
    for (c, (_, chosen)) in classes.iter().enumerate() {
        let before = rows.len();
        for (c2, (_, other)) in classes.iter().enumerate() {
            if c2 != c {
                rows.push(chosen.iter().zip(other).map(|(a, b)| a - b).collect());
            }
        }
        if open_cone_nonempty(rows) {
            picks.push(c);
            descend(slots, picks, rows, out);
            picks.pop();
        }
        rows.truncate(before);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BruteForceResult {
    /// Distinct limiting Jacobians, in profile order.
    pub jacobians: Vec<Matrix>,
    pub profiles: Vec<Profile>,
    /// Distinct profiles seen by random sampling.
    pub profiles_found: usize,
    /// Sample points that were differentiability points.
    pub samples_kept: usize,
    /// Profiles produced by region enumeration.
    pub regions_enumerated: usize,
}

/// Limiting Jacobians of a piecewise-affine `F` at `x`: the Jacobians of the
/// selections that are active on full-dimensional regions near `x`. Their
/// convex hull is `∂F(x)`.
///
/// Sampling in `B(x, probe_radius)` and exact region enumeration are both
/// run and their results merged. Rejects problems with a non-affine piece.
pub fn brute_force_subdifferential(
    f: &DcMaxFn,
    x: &[f64],
    probe_radius: f64,
    probe_count: usize,
    seed: u64,
    tol: Tolerances,
) -> Result<BruteForceResult> {
    if let Some((component, side, piece)) = f.first_non_affine() {
        return Err(Error::NonAffine {
            component,
            side: side.name(),
            piece,
        });
    }
    let (samples, samples_kept) = sample_profiles(f, x, probe_radius, probe_count, seed, tol)?;
    let profiles_found = samples.len();
    let regions = enumerate_regions(f, x, tol)?;
    let regions_enumerated = regions.len();

    let mut merged: BTreeMap<Profile, Matrix> = BTreeMap::new();
    for (profile, jac) in regions {
        merged.insert(profile, jac);
    }
    for s in samples {
        merged.entry(s.active_profile).or_insert(s.jacobian);
    }
    let mut jacobians: Vec<Matrix> = Vec::new();
    let mut profiles = Vec::new();
    for (profile, jac) in merged {
        if !jacobians
            .iter()
            .any(|j| j.max_abs_diff(&jac) <= SAME_JACOBIAN)
        {
            jacobians.push(jac);
            profiles.push(profile);
        }
    }
    Ok(BruteForceResult {
        jacobians,
        profiles,
        profiles_found,
        samples_kept,
        regions_enumerated,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteDiffDd {
    /// `(F(x + ty) − F(x))/t` at the smallest `t`.
    pub value: Vec<f64>,
    pub t: f64,
    /// Per component, change between the last two schedule estimates.
    pub convergence: Vec<f64>,
}

/// One-sided difference quotients of `F` along `y` over a decreasing
/// schedule of step sizes.
pub fn finite_diff_dd(
    f: &DcMaxFn,
    x: &[f64],
    y: &[f64],
    t_schedule: &[f64],
) -> Result<FiniteDiffDd> {
    f.check_point(x)?;
    if y.len() != f.n() {
        return Err(Error::DimensionMismatch {
            what: "direction",
            expected: f.n(),
            got: y.len(),
        });
    }
    if t_schedule.is_empty() || t_schedule.iter().any(|t| t.is_nan() || *t <= 0.0) {
        return Err(Error::InvalidArgument(
            "step schedule must be nonempty and positive".into(),
        ));
    }
    let fx = f.eval(x)?;
    let mut estimates = Vec::with_capacity(t_schedule.len());
    for &t in t_schedule {
        let p: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + t * b).collect();
        let fp = f.eval(&p)?;
        estimates.push(
            fp.iter()
                .zip(&fx)
                .map(|(a, b)| (a - b) / t)
                .collect::<Vec<f64>>(),
        );
    }
    let last = estimates.last().expect("nonempty").clone();
    let convergence = match estimates.len() {
        1 => vec![f64::NAN; f.m()],
        k => last
            .iter()
            .zip(&estimates[k - 2])
            .map(|(a, b)| (a - b).abs())
            .collect(),
    };
    Ok(FiniteDiffDd {
        value: last,
        t: *t_schedule.last().expect("nonempty"),
        convergence,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub probe_radius: f64,
    pub probe_count: usize,
    pub seed: u64,
    pub membership_tol: f64,
    pub tol: Tolerances,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            probe_radius: DEFAULT_PROBE_RADIUS,
            probe_count: DEFAULT_PROBE_COUNT,
            seed: DEFAULT_SEED,
            membership_tol: DEFAULT_MEMBERSHIP_TOL,
            tol: Tolerances::default(),
        }
    }
}

/// Stable JSON summary of a membership check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub member: bool,
    pub status: HullStatus,
    pub weights: Vec<f64>,
    pub violation: f64,
    pub profiles_found: usize,
    pub samples_kept: usize,
    pub candidates: Vec<Matrix>,
}

/// Brute-force hull check of `xi` against `∂F(x)` for piecewise-affine `F`.
pub fn check_membership(
    f: &DcMaxFn,
    x: &[f64],
    xi: &Matrix,
    config: OracleConfig,
) -> Result<OracleReport> {
    let bf = brute_force_subdifferential(
        f,
        x,
        config.probe_radius,
        config.probe_count,
        config.seed,
        config.tol,
    )?;
    let cert = hull_membership(xi, &bf.jacobians, config.membership_tol)?;
    Ok(OracleReport {
        member: cert.member,
        status: cert.status,
        weights: cert.weights,
        violation: cert.violation,
        profiles_found: bf.jacobians.len(),
        samples_kept: bf.samples_kept,
        candidates: bf.jacobians,
    })
}
