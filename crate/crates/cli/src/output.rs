//! Text renderings; each mirrors the JSON form of the same report.

use std::fmt::Write;

use dcjac::jacobian::MaxSelection;
use dcjac::newton::{NcpResidual, NewtonStatus, NewtonTrace};
use dcjac::oracle::FiniteDiffDd;
use dcjac::report::{HullCheck, VerifyReport};
use dcjac::{Matrix, SelectionResult};
use serde::Serialize;

#[derive(Serialize)]
pub struct JacReport {
    pub xi: Matrix,
    pub selection: SelectionResult,
    pub gamma_count: usize,
    pub y_bar: Vec<f64>,
}

#[derive(Serialize)]
pub struct NewtonSummary {
    pub status: NewtonStatus,
    pub steps: usize,
    pub x: Vec<f64>,
    pub residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ncp_residual: Option<NcpResidual>,
}

#[derive(Serialize)]
pub struct DdReport {
    pub dd: Vec<f64>,
    pub finite_difference: FiniteDiffDd,
}

fn vector(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("[{}]", items.join(", "))
}

fn indices(v: &[usize]) -> String {
    let items: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("{{{}}}", items.join(", "))
}

fn matrix(out: &mut String, m: &Matrix) {
    for row in m.rows() {
        let _ = writeln!(out, "  {}", vector(row));
    }
}

fn selection(out: &mut String, side: &str, s: &MaxSelection) {
    let chain: Vec<String> = s.chain.iter().map(|l| indices(l)).collect();
    let _ = writeln!(
        out,
        "    {side}: active {} chain {} chosen {}",
        indices(&s.active.indices),
        chain.join(" > "),
        s.chosen
    );
}

pub fn jac_text(r: &JacReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "convention: {}", r.selection.convention.as_str());
    out.push_str("xi:\n");
    matrix(&mut out, &r.xi);
    out.push_str("selection:\n");
    for (i, c) in r.selection.components.iter().enumerate() {
        let _ = writeln!(out, "  component {i}:");
        selection(&mut out, "g", &c.g);
        selection(&mut out, "h", &c.h);
    }
    let _ = writeln!(out, "gamma_count: {}", r.gamma_count);
    let _ = writeln!(out, "y_bar: {}", vector(&r.y_bar));
    out
}

fn verdict(passed: bool) -> &'static str {
    if passed {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn verify_text(r: &VerifyReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "convention: {}",
        r.element.selection.convention.as_str()
    );
    out.push_str("xi:\n");
    matrix(&mut out, &r.element.xi);
    let _ = writeln!(out, "y_bar: {}", vector(&r.witness.y_bar));
    let w = &r.witness_check;
    let _ = writeln!(
        out,
        "witness: {} ({} vectors, max inner product {})",
        verdict(w.valid),
        w.checked,
        w.max_inner_product
            .map_or("n/a".to_string(), |v| v.to_string())
    );
    let c = &r.cone_linearity;
    let _ = writeln!(
        out,
        "cone_linearity: {} ({}/{} samples, {} draws, worst ratio {:e})",
        if c.inconclusive {
            "INCONCLUSIVE"
        } else {
            verdict(c.passed)
        },
        c.samples_kept,
        c.samples_requested,
        c.draws,
        c.worst_ratio
    );
    let l = &r.limit_inclusion;
    let _ = writeln!(
        out,
        "limit_inclusion: {} (max distance {}, tolerance {:e})",
        if l.inconclusive {
            "INCONCLUSIVE"
        } else {
            verdict(l.passed)
        },
        l.max_distance()
            .map_or("n/a".to_string(), |d| format!("{d:e}")),
        l.tolerance
    );
    match &r.hull {
        HullCheck::Checked(h) => {
            let _ = writeln!(
                out,
                "hull_membership: {} ({:?}, {} limiting Jacobians, violation {:e})",
                verdict(h.member),
                h.status,
                h.candidates.len(),
                h.violation
            );
            for cand in &h.candidates {
                let rows: Vec<String> = cand.rows().iter().map(|row| vector(row)).collect();
                let _ = writeln!(out, "  candidate [{}]", rows.join(", "));
            }
        }
        HullCheck::Skipped { reason } => {
            let _ = writeln!(out, "hull_membership: skipped: {reason}");
        }
    }
    let _ = writeln!(
        out,
        "inconclusive: {}",
        if r.inconclusive.is_empty() {
            "none".to_string()
        } else {
            r.inconclusive.join(", ")
        }
    );
    let _ = writeln!(out, "result: {}", verdict(r.passed));
    out
}

pub fn newton_text(trace: &NewtonTrace, summary: &NewtonSummary) -> String {
    let mut out = String::new();
    for it in &trace.iterates {
        let _ = writeln!(
            out,
            "k={} residual={:e} x={}",
            it.k,
            it.residual,
            vector(&it.x)
        );
    }
    let status = serde_json::to_value(summary.status)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default();
    let _ = writeln!(out, "status: {status} after {} steps", summary.steps);
    if let Some(r) = &summary.ncp_residual {
        let _ = writeln!(
            out,
            "ncp residual: total {:e} (natural {:e}, complementarity {:e}, x violation {:e}, Mx+q violation {:e})",
            r.total, r.natural, r.complementarity, r.x_negativity, r.w_negativity
        );
    }
    out
}

pub fn dd_text(r: &DdReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "dd: {}", vector(&r.dd));
    let _ = writeln!(
        out,
        "finite difference (t = {:e}): {}",
        r.finite_difference.t,
        vector(&r.finite_difference.value)
    );
    out
}
