//! One-call verification of `ξ` at a point, with a stable JSON form.

use serde::{Deserialize, Serialize};

use crate::dcmax::{DcMaxFn, Tolerances};
use crate::error::Result;
use crate::jacobian::{
    algorithm_a1, gamma_set, verify_cone_linearity, verify_limit_inclusion, witness_direction,
    ConeLinearityReport, Convention, GammaSet, JacobianElement, LimitInclusionReport, WitnessCheck,
    WitnessDirection, DEFAULT_T_SCHEDULE,
};
use crate::oracle::{check_membership, HullStatus, OracleConfig, OracleReport};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub tol: Tolerances,
    pub convention: Convention,
    pub seed: u64,
    /// Cone directions to sample.
    pub samples: usize,
    pub oracle: OracleConfig,
    pub t_schedule: Vec<f64>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            tol: Tolerances::default(),
            convention: Convention::Min,
            seed: 42,
            samples: 200,
            oracle: OracleConfig::default(),
            t_schedule: DEFAULT_T_SCHEDULE.to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum HullCheck {
    Checked(OracleReport),
    Skipped { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub element: JacobianElement,
    pub gamma: GammaSet,
    pub witness: WitnessDirection,
    pub witness_check: WitnessCheck,
    pub cone_linearity: ConeLinearityReport,
    pub limit_inclusion: LimitInclusionReport,
    pub hull: HullCheck,
    /// Names of checks that failed.
    pub failures: Vec<String>,
    /// Names of checks that could not decide.
    pub inconclusive: Vec<String>,
    pub passed: bool,
}

/// Computes `ξ` and runs the witness, cone-linearity, limit-inclusion and
/// (for affine problems) hull-membership checks.
pub fn verify_point(f: &DcMaxFn, x: &[f64], options: &VerifyOptions) -> Result<VerifyReport> {
    let element = algorithm_a1(f, x, options.tol, options.convention)?;
    let gamma = gamma_set(f, x, &element.selection)?;
    let witness = witness_direction(&gamma, f.n(), options.convention)?;
    let witness_check = witness.check(&gamma);
    let cone_linearity = verify_cone_linearity(
        f,
        x,
        &element,
        &gamma,
        &witness.y_bar,
        options.samples,
        options.seed,
        options.tol,
    )?;
    let limit_inclusion = verify_limit_inclusion(
        f,
        x,
        &element,
        &witness.y_bar,
        &options.t_schedule,
        options.tol,
    )?;
    let hull = if f.is_affine() {
        let config = OracleConfig {
            seed: options.seed,
            tol: options.tol,
            ..options.oracle
        };
        HullCheck::Checked(check_membership(f, x, &element.xi, config)?)
    } else {
        HullCheck::Skipped {
            reason: "non-affine".into(),
        }
    };

    let mut failures = Vec::new();
    let mut inconclusive = Vec::new();
    if !witness_check.valid {
        failures.push("witness".to_string());
    }
    if cone_linearity.inconclusive {
        inconclusive.push("cone_linearity".to_string());
    } else if !cone_linearity.passed {
        failures.push("cone_linearity".to_string());
    }
    if limit_inclusion.inconclusive {
        inconclusive.push("limit_inclusion".to_string());
    } else if !limit_inclusion.passed {
        failures.push("limit_inclusion".to_string());
    }
    if let HullCheck::Checked(r) = &hull {
        match r.status {
            HullStatus::Member => {}
            HullStatus::NotMember => failures.push("hull_membership".to_string()),
            HullStatus::Inconclusive => inconclusive.push("hull_membership".to_string()),
        }
    }
    Ok(VerifyReport {
        passed: failures.is_empty(),
        element,
        gamma,
        witness,
        witness_check,
        cone_linearity,
        limit_inclusion,
        hull,
        failures,
        inconclusive,
    })
}
