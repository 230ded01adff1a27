//! `flow`: the transverse Ricci flow with monitors, written as a CSV trace.

use serde::Serialize;
use transverse_core::flow::{run_flow_with, FlowTrace, MonitorSet, RightHandSide, Verdict};
use transverse_core::scenario::{Provenance, ScenarioKind};

use crate::config::{FlowRhs, RunConfig};
use crate::output::sig17;
use crate::report::{Header, ScenarioInfo};
use crate::CliError;

pub const TRACE_COLUMNS: [&str; 7] =
    ["t", "min_S_Q", "max_S_Q", "lambda_Q", "normalized_lambda_Q", "monotonicity_flag", "spd_ok"];
pub const CLOSED_FORM_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Serialize)]
pub struct ClosedForm {
    pub description: &'static str,
    pub provenance: &'static str,
    pub t: f64,
    pub expected_scale: f64,
    pub error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowReport {
    #[serde(flatten)]
    pub header: Header,
    pub t_end: f64,
    pub h: f64,
    pub rhs: &'static str,
    pub rows: usize,
    pub completed: bool,
    pub blow_up_time: Option<f64>,
    pub last_good_time: f64,
    pub tautness: &'static str,
    pub homogeneous: bool,
    pub lambda_monotone: bool,
    pub violations: Vec<f64>,
    pub kappa_drift: f64,
    pub final_metric_at_first_node: Vec<Vec<f64>>,
    pub closed_form: Option<ClosedForm>,
    pub pass: bool,
}

pub struct FlowRun {
    pub report: FlowReport,
    pub trace: Vec<Vec<String>>,
}

fn opt(v: Option<f64>) -> String {
    v.map(sig17).unwrap_or_default()
}

/// g_Q(t) = c(t) g_Q(0) for the built-in scenarios while the solution exists.
fn closed_form(kind: ScenarioKind, log_rho: Option<f64>, tr: &FlowTrace) -> Option<ClosedForm> {
    let t = tr.final_state.time;
    let (description, provenance, scale) = match kind {
        ScenarioKind::FlatTorus => ("g_Q(t) = g_Q(0)", Provenance::Trivial, 1.0),
        ScenarioKind::ProductSphere => ("g_Q(t) = (1 - 2t) g_Q(0)", Provenance::Derived, 1.0 - 2.0 * t),
        ScenarioKind::Carriere { .. } => {
            let l = log_rho?;
            ("g_Q(t) = (1 + 2 (ln rho)^2 t) g_Q(0)", Provenance::Derived, 1.0 + 2.0 * l * l * t)
        }
    };
    if !tr.homogeneous {
        return None;
    }
    let g = tr.final_state.value(0);
    let error = (g - nalgebra::DMatrix::<f64>::identity(g.nrows(), g.ncols()) * scale).amax();
    Some(ClosedForm {
        description,
        provenance: provenance.tag(),
        t,
        expected_scale: scale,
        error,
        tolerance: CLOSED_FORM_TOL,
        pass: error < CLOSED_FORM_TOL,
    })
}

pub fn run(cfg: &RunConfig, header: Header) -> Result<FlowRun, CliError> {
    let s = cfg.scenario()?;
    let p = &cfg.flow;
    let kind = match p.rhs {
        FlowRhs::Ricci => RightHandSide::Ricci,
        FlowRhs::DeTurck => RightHandSide::DeTurck,
    };
    let monitors = MonitorSet { lambda_q: true, mu_sigma: p.mu_sigma };
    let tr = run_flow_with(&s, p.t_end, p.h, monitors, kind)?;
    let trace = tr
        .rows
        .iter()
        .map(|r| {
            vec![
                sig17(r.t),
                sig17(r.min_scalar),
                sig17(r.max_scalar),
                opt(r.lambda_q),
                opt(r.normalized_lambda_q),
                r.monotonicity_flag().to_string(),
                r.spd_ok.to_string(),
            ]
        })
        .collect();
    let violations: Vec<f64> = tr
        .rows
        .iter()
        .filter(|r| r.lambda_verdict == Verdict::Violated || r.normalized_verdict == Verdict::Violated)
        .map(|r| r.t)
        .collect();
    let g = tr.final_state.value(0);
    let closed = closed_form(s.kind(), s.log_rho(), &tr);
    let completed = tr.completed();
    let report = FlowReport {
        header: header.with_scenario(ScenarioInfo::of(&s)),
        t_end: p.t_end,
        h: p.h,
        rhs: match p.rhs {
            FlowRhs::Ricci => "ricci",
            FlowRhs::DeTurck => "deturck",
        },
        rows: tr.rows.len(),
        completed,
        blow_up_time: tr.blow_up,
        last_good_time: tr.rows.last().map(|r| r.t).unwrap_or(0.0),
        tautness: tr.tautness.as_str(),
        homogeneous: tr.homogeneous,
        lambda_monotone: tr.monotone(),
        pass: completed && violations.is_empty() && closed.as_ref().is_none_or(|c| c.pass),
        violations,
        kappa_drift: tr.kappa_drift(),
        final_metric_at_first_node: (0..g.nrows()).map(|i| g.row(i).iter().copied().collect()).collect(),
        closed_form: closed,
    };
    Ok(FlowRun { report, trace })
}
