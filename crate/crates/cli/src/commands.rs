use std::path::Path;

use dcjac::dcmax::load_problem_file;
use dcjac::instances::{random_affine_problem, RandomSpec};
use dcjac::jacobian::{gamma_set, witness_direction};
use dcjac::newton::{build_ncp, ncp_residual, solve, NcpResidual, NewtonOptions, NewtonStatus};
use dcjac::oracle::{finite_diff_dd, OracleConfig};
use dcjac::report::{verify_point, VerifyOptions};
use dcjac::{algorithm_a1, DcMaxFn, Matrix, Tolerances};
use serde::Serialize;

use crate::output::{self, DdReport, JacReport, NewtonSummary};
use crate::{exit, Common, DdArgs, NewtonArgs, VerifyArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] dcjac::Error),
    #[error("{0}")]
    Input(String),
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_domain() => exit::DOMAIN,
            CliError::Core(dcjac::Error::ConventionMismatch(_)) => exit::CHECK_FAILED,
            _ => exit::INPUT,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub struct Output {
    pub text: String,
    pub code: u8,
}

fn parse_vector(text: &str, what: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            let s = s.trim();
            match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(CliError::Input(format!(
                    "{what}: `{s}` is not a finite decimal"
                ))),
            }
        })
        .collect()
}

fn tolerances(common: &Common) -> Result<Tolerances> {
    if !(common.tol_act > 0.0 && common.tol_tie > 0.0) {
        return Err(CliError::Input("tolerances must be positive".into()));
    }
    Ok(Tolerances {
        act: common.tol_act,
        tie: common.tol_tie,
    })
}

fn load(common: &Common) -> Result<DcMaxFn> {
    match (&common.problem, &common.random) {
        (Some(path), _) => Ok(load_problem_file(path)?),
        (None, Some(spec)) => Ok(random_affine_problem(spec.parse::<RandomSpec>()?)?),
        (None, None) => Err(CliError::Input(
            "a problem is required (--problem or --random)".into(),
        )),
    }
}

fn point(text: Option<&str>, n: usize, what: &str) -> Result<Vec<f64>> {
    let x = match text {
        Some(t) => parse_vector(t, what)?,
        None => vec![0.0; n],
    };
    if x.len() != n {
        return Err(CliError::Input(format!(
            "{what} has length {}, problem dimension is {n}",
            x.len()
        )));
    }
    Ok(x)
}

fn render<T: Serialize>(json: bool, value: &T, text: impl FnOnce(&T) -> String) -> Result<String> {
    if json {
        let mut s = serde_json::to_string_pretty(value).map_err(dcjac::Error::from)?;
        s.push('\n');
        Ok(s)
    } else {
        Ok(text(value))
    }
}

pub fn jac(args: &Common) -> Result<Output> {
    let tol = tolerances(args)?;
    let f = load(args)?;
    let x = point(args.point.as_deref(), f.n(), "point")?;
    let convention = args.convention.into();
    let e = algorithm_a1(&f, &x, tol, convention)?;
    let gamma = gamma_set(&f, &x, &e.selection)?;
    let w = witness_direction(&gamma, f.n(), convention)?;
    let report = JacReport {
        xi: e.xi,
        selection: e.selection,
        gamma_count: gamma.len(),
        y_bar: w.y_bar,
    };
    Ok(Output {
        text: render(args.json, &report, output::jac_text)?,
        code: exit::OK,
    })
}

pub fn verify(args: &VerifyArgs) -> Result<Output> {
    let common = &args.common;
    let tol = tolerances(common)?;
    if !(args.radius > 0.0 && args.membership_tol > 0.0) {
        return Err(CliError::Input(
            "--radius and --membership-tol must be positive".into(),
        ));
    }
    let f = load(common)?;
    let x = point(common.point.as_deref(), f.n(), "point")?;
    let options = VerifyOptions {
        tol,
        convention: common.convention.into(),
        seed: common.seed,
        samples: args.samples,
        oracle: OracleConfig {
            probe_radius: args.radius,
            probe_count: args.probes,
            seed: common.seed,
            membership_tol: args.membership_tol,
            tol,
        },
        ..VerifyOptions::default()
    };
    let report = verify_point(&f, &x, &options)?;
    Ok(Output {
        code: if report.passed {
            exit::OK
        } else {
            exit::CHECK_FAILED
        },
        text: render(common.json, &report, output::verify_text)?,
    })
}

fn read_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let csv_err = |source| CliError::Csv {
        path: path.display().to_string(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let row = record
            .iter()
            .filter(|s| !s.is_empty())
            .map(|s| match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(CliError::Input(format!(
                    "{}: `{s}` is not a finite decimal",
                    path.display()
                ))),
            })
            .collect::<Result<Vec<f64>>>()?;
        if !row.is_empty() {
            rows.push(row);
        }
    }
    Ok(rows)
}

fn load_ncp(paths: &[std::path::PathBuf]) -> Result<(Matrix, Vec<f64>)> {
    let m = read_csv(&paths[0])?;
    let q: Vec<f64> = read_csv(&paths[1])?.into_iter().flatten().collect();
    if m.iter().any(|r| r.len() != m[0].len()) || m.is_empty() {
        return Err(CliError::Input(format!(
            "{}: rows must be nonempty and of equal length",
            paths[0].display()
        )));
    }
    Ok((Matrix::from_rows(m), q))
}

pub fn newton(args: &NewtonArgs) -> Result<Output> {
    let common = &args.common;
    let tol = tolerances(common)?;
    if args.tol.is_nan() || args.tol <= 0.0 {
        return Err(CliError::Input("--tol must be positive".into()));
    }
    let (f, ncp) = match &args.ncp {
        Some(paths) => {
            let (m, q) = load_ncp(paths)?;
            (build_ncp(&m, &q)?, Some((m, q)))
        }
        None => (load(common)?, None),
    };
    let start = args.x0.as_deref().or(common.point.as_deref());
    let x0 = point(start, f.n(), "starting point")?;
    let options = NewtonOptions {
        tol: args.tol,
        max_iters: args.max_iters,
        tolerances: tol,
        convention: common.convention.into(),
    };
    let trace = solve(&f, &x0, options)?;
    let last = trace.last();
    let ncp_residual: Option<NcpResidual> = ncp.as_ref().map(|(m, q)| ncp_residual(m, q, &last.x));
    let summary = NewtonSummary {
        status: trace.status,
        steps: trace.steps(),
        x: last.x.clone(),
        residual: last.residual,
        ncp_residual,
    };
    let code = match trace.status {
        NewtonStatus::Converged => exit::OK,
        NewtonStatus::Singular => exit::SINGULAR,
        NewtonStatus::Diverged | NewtonStatus::MaxIters => exit::NOT_CONVERGED,
    };
    let text = if common.json {
        let mut s = trace.to_json_lines()?;
        s.push_str(&serde_json::to_string(&summary).map_err(dcjac::Error::from)?);
        s.push('\n');
        s
    } else {
        output::newton_text(&trace, &summary)
    };
    Ok(Output { text, code })
}

pub fn dd(args: &DdArgs) -> Result<Output> {
    let common = &args.common;
    let tol = tolerances(common)?;
    let f = load(common)?;
    let x = point(common.point.as_deref(), f.n(), "point")?;
    let y = point(Some(&args.direction), f.n(), "direction")?;
    let report = DdReport {
        dd: f.directional_derivative(&x, &y, tol.act)?,
        finite_difference: finite_diff_dd(&f, &x, &y, &dcjac::jacobian::DEFAULT_T_SCHEDULE)?,
    };
    Ok(Output {
        text: render(common.json, &report, output::dd_text)?,
        code: exit::OK,
    })
}
