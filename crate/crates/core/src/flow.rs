//! The transverse Ricci flow dg_Q/dt = −2Ric^Q with the leaf metric frozen.
//!
//! The transverse block is carried as frame components at the nodes of the
//! scenario's basic grid and re-interpolated spectrally at every stage. When the
//! block and its Ricci tensor are constant across the nodes the flow collapses to
//! a q×q matrix ODE evaluated at a single point.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::chart::ScalarField;
use crate::error::{Error, Result};
use crate::frame::{MetricField, VectorField};
use crate::functionals::{lambda_q, mu_q, normalized_lambda_q, BasicProblem};
use crate::grid::BasicGrid;
use crate::jet::Jet;
use crate::local::Local;
use crate::scenario::Scenario;
use crate::transverse::{deturck_jets, mean_curvature, tautness_diagnostic, Tautness};

pub const HOMOGENEOUS_TOL: f64 = 1e-12;
pub const SPD_FLOOR: f64 = 1e-8;
pub const MAX_RETRIES: usize = 10;
pub const MONOTONICITY_TOL: f64 = -1e-7;

/// Classical RK4 step for y' = f(t, y).
pub fn rk4_step<F>(t: f64, y: &DVector<f64>, h: f64, mut f: F) -> Result<DVector<f64>>
where
    F: FnMut(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    let k1 = f(t, y)?;
    let k2 = f(t + h / 2.0, &(y + &k1 * (h / 2.0)))?;
    let k3 = f(t + h / 2.0, &(y + &k2 * (h / 2.0)))?;
    let k4 = f(t + h, &(y + &k3 * h))?;
    Ok(y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RightHandSide {
    #[default]
    Ricci,
    /// −2Ric^Q − L_X g_Q with X the DeTurck field relative to the initial metric.
    DeTurck,
}

#[derive(Debug, Clone)]
pub struct FlowState {
    pub time: f64,
    base: Arc<MetricField>,
    grid: BasicGrid,
    homogeneous: bool,
    /// g_Q frame components per node; a single entry on the homogeneous path.
    values: Vec<DMatrix<f64>>,
    metric: Arc<MetricField>,
    /// Smallest eigenvalue of g_Q at t = 0.
    scale: f64,
}

impl FlowState {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        Self::from_metric(scenario.metric().clone(), scenario.basic_grid()?)
    }

    pub fn from_metric(metric: Arc<MetricField>, grid: BasicGrid) -> Result<Self> {
        let p = metric.frame().p();
        let q = metric.frame().q();
        let points = grid.points();
        let values: Vec<DMatrix<f64>> = points
            .iter()
            .map(|x| Ok(metric.matrix(x)?.view((p, p), (q, q)).into_owned()))
            .collect::<Result<_>>()?;
        let ricci: Vec<DMatrix<f64>> = points.par_iter().map(|x| ricci_at(&metric, x)).collect::<Result<_>>()?;
        let homogeneous = spread(&values) < HOMOGENEOUS_TOL && spread(&ricci) < HOMOGENEOUS_TOL;
        let scale = values.iter().map(min_eigenvalue).fold(f64::INFINITY, f64::min);
        if !(scale > 0.0) {
            return Err(Error::Numeric("initial transverse metric is not positive definite".into()));
        }
        let mut state = FlowState { time: 0.0, base: metric.clone(), grid, homogeneous, values, metric, scale };
        if state.homogeneous {
            state.values.truncate(1);
        }
        Ok(state)
    }

    pub fn metric(&self) -> &Arc<MetricField> {
        &self.metric
    }

    pub fn grid(&self) -> &BasicGrid {
        &self.grid
    }

    pub fn is_homogeneous(&self) -> bool {
        self.homogeneous
    }

    /// g_Q frame components at node `i`.
    pub fn value(&self, i: usize) -> &DMatrix<f64> {
        if self.homogeneous {
            &self.values[0]
        } else {
            &self.values[i]
        }
    }

    pub fn node_count(&self) -> usize {
        self.grid.len()
    }

    fn q(&self) -> usize {
        self.base.frame().q()
    }

    fn flatten(&self) -> DVector<f64> {
        let q = self.q();
        DVector::from_iterator(self.values.len() * q * q, self.values.iter().flat_map(|m| m.iter().copied()))
    }

    fn unflatten(&self, y: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let q = self.q();
        (0..self.values.len())
            .map(|i| {
                let m = DMatrix::from_column_slice(q, q, &y.as_slice()[i * q * q..(i + 1) * q * q]);
                (&m + m.transpose()) * 0.5
            })
            .collect()
    }

    /// The metric with transverse block given by nodal values.
    fn metric_for(&self, values: &[DMatrix<f64>]) -> Result<MetricField> {
        let q = self.q();
        let chart = self.base.chart();
        let block = (0..q)
            .map(|a| {
                (0..q)
                    .map(|b| {
                        if self.homogeneous {
                            Ok(ScalarField::constant(chart, values[0][(a, b)]))
                        } else {
                            let v: Vec<f64> = values.iter().map(|m| m[(a, b)]).collect();
                            self.grid.interpolant(&v)
                        }
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        self.base.with_transverse_block(block)
    }

    fn evaluation_points(&self) -> Vec<Vec<f64>> {
        if self.homogeneous {
            vec![self.grid.point(0)]
        } else {
            self.grid.points()
        }
    }

    fn spd_ok(&self, values: &[DMatrix<f64>]) -> bool {
        values.iter().all(|m| m.iter().all(|x| x.is_finite()) && min_eigenvalue(m) > SPD_FLOOR * self.scale)
    }

    /// dg_Q/dt at each evaluation point.
    fn rhs(&self, values: &[DMatrix<f64>], kind: RightHandSide) -> Result<Vec<DMatrix<f64>>> {
        if !self.spd_ok(values) {
            return Err(Error::Numeric("stage metric lost positive definiteness".into()));
        }
        let metric = self.metric_for(values)?;
        let q = self.q();
        self.evaluation_points()
            .par_iter()
            .map(|x| {
                let loc = Local::new(&metric, x, 2)?;
                let ric = loc.ricci_q();
                let mut out = DMatrix::from_fn(q, q, |a, b| -2.0 * ric[a * q + b].value());
                if kind == RightHandSide::DeTurck {
                    let reference = Local::new(&self.base, x, 2)?;
                    let xs = deturck_jets(&reference, &loc);
                    let lie = loc.lie_metric(&xs);
                    out -= DMatrix::from_fn(q, q, |a, b| lie[a * q + b].value());
                }
                Ok(out)
            })
            .collect()
    }

    fn advance(&self, h: f64, kind: RightHandSide) -> Result<Vec<DMatrix<f64>>> {
        let y0 = self.flatten();
        let y = rk4_step(self.time, &y0, h, |_, y| {
            let vals = self.unflatten(y);
            let r = self.rhs(&vals, kind)?;
            Ok(DVector::from_iterator(y.len(), r.iter().flat_map(|m| m.iter().copied())))
        })?;
        Ok(self.unflatten(&y))
    }

    fn accept(&self, values: Vec<DMatrix<f64>>, h: f64) -> Result<FlowState> {
        let metric = Arc::new(self.metric_for(&values)?);
        Ok(FlowState { time: self.time + h, values, metric, ..self.clone() })
    }
}

/// Outcome of one accepted step: the new state and the step size used.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: FlowState,
    pub h: f64,
    pub rejections: usize,
}

/// One RK4 step of the flow; on loss of positive definiteness h is halved and
/// the step retried up to ten times before a blow-up error.
pub fn flow_step(state: &FlowState, h: f64) -> Result<StepOutcome> {
    flow_step_with(state, h, RightHandSide::Ricci)
}

pub fn flow_step_with(state: &FlowState, h: f64, kind: RightHandSide) -> Result<StepOutcome> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Usage(format!("step size must be positive, got {h}")));
    }
    let mut h = h;
    for rejections in 0..=MAX_RETRIES {
        let ok = state.advance(h, kind).ok().filter(|v| state.spd_ok(v));
        if let Some(values) = ok {
            return Ok(StepOutcome { state: state.accept(values, h)?, h, rejections });
        }
        if rejections < MAX_RETRIES {
            h *= 0.5;
        }
    }
    Err(Error::BlowUp { time: state.time, retries: MAX_RETRIES })
}

/// Which monitors to record along a flow.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MonitorSet {
    pub lambda_q: bool,
    /// σ at which μ^Q is recorded.
    pub mu_sigma: Option<f64>,
}

impl MonitorSet {
    pub fn all() -> Self {
        MonitorSet { lambda_q: true, mu_sigma: None }
    }

    pub fn none() -> Self {
        MonitorSet::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Start,
    Holds,
    Violated,
    NotApplicable,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Start => "start",
            Verdict::Holds => "ok",
            Verdict::Violated => "violated",
            Verdict::NotApplicable => "n/a",
        }
    }
}

#[derive(Debug, Clone)]
pub struct TraceRow {
    pub t: f64,
    pub min_scalar: f64,
    pub max_scalar: f64,
    pub lambda_q: Option<f64>,
    pub normalized_lambda_q: Option<f64>,
    pub mu_q: Option<f64>,
    /// κ_B in transverse coframe components at the grid's first node.
    pub kappa_b: Vec<f64>,
    /// sup over nodes of leaf derivatives of the g_Q components.
    pub leaf_residual: f64,
    pub spd_ok: bool,
    /// λ^Q nondecreasing since the previous row.
    pub lambda_verdict: Verdict,
    /// Normalized λ^Q nondecreasing since the previous row; applicable on taut
    /// foliations while λ^Q ≤ 0.
    pub normalized_verdict: Verdict,
}

impl TraceRow {
    /// Combined monotonicity flag over the applicable verdicts.
    pub fn monotonicity_flag(&self) -> &'static str {
        let vs = [self.lambda_verdict, self.normalized_verdict];
        if vs.contains(&Verdict::Violated) {
            "violated"
        } else if vs.contains(&Verdict::Holds) {
            "ok"
        } else if vs.contains(&Verdict::Start) {
            "start"
        } else {
            "n/a"
        }
    }
}

#[derive(Debug, Clone)]
pub struct FlowTrace {
    pub rows: Vec<TraceRow>,
    pub tautness: Tautness,
    pub homogeneous: bool,
    /// Time of the last accepted step when the flow halted on a blow-up.
    pub blow_up: Option<f64>,
    pub final_state: FlowState,
}

impl FlowTrace {
    pub fn completed(&self) -> bool {
        self.blow_up.is_none()
    }

    pub fn monotone(&self) -> bool {
        self.rows.iter().all(|r| r.lambda_verdict != Verdict::Violated && r.normalized_verdict != Verdict::Violated)
    }

    /// sup over rows of |κ_B(t) − κ_B(0)|.
    pub fn kappa_drift(&self) -> f64 {
        let k0 = &self.rows[0].kappa_b;
        self.rows
            .iter()
            .flat_map(|r| r.kappa_b.iter().zip(k0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max)
    }
}

fn monitor_row(state: &FlowState, monitors: MonitorSet, taut: bool, prev: Option<&TraceRow>) -> Result<TraceRow> {
    let metric = state.metric();
    let q = state.q();
    let p = metric.frame().p();
    let scalars: Vec<f64> = state
        .evaluation_points()
        .par_iter()
        .map(|x| Ok(Local::new(metric, x, 2)?.scalar_q().value()))
        .collect::<Result<_>>()?;
    let (lambda, normalized) = if monitors.lambda_q {
        let problem = BasicProblem::with_grid(metric, state.grid.clone())?;
        let rep = lambda_q(&problem)?;
        let nl = normalized_lambda_q(&problem, &rep)?;
        (Some(rep.value), Some(nl))
    } else {
        (None, None)
    };
    let mu = match monitors.mu_sigma {
        Some(sigma) => Some(mu_q(&BasicProblem::with_grid(metric, state.grid.clone())?, sigma)?.value),
        None => None,
    };
    let x0 = state.grid.point(0);
    let loc = Local::new(metric, &x0, 1)?;
    let kappa_b = loc.kappa().iter().map(Jet::value).collect();
    let leaf_residual = state
        .evaluation_points()
        .par_iter()
        .map(|x| {
            let loc = Local::new(metric, x, 1)?;
            let mut m: f64 = 0.0;
            for u in 0..p {
                for a in 0..q {
                    for b in 0..q {
                        m = m.max(loc.d(u, &loc.gq(a, b)).value().abs());
                    }
                }
            }
            Ok(m)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let (lambda_verdict, normalized_verdict) = match prev {
        None => (
            if lambda.is_some() { Verdict::Start } else { Verdict::NotApplicable },
            if taut && lambda.is_some_and(|l| l <= 0.0) { Verdict::Start } else { Verdict::NotApplicable },
        ),
        Some(prev) => {
            let lv = match (prev.lambda_q, lambda) {
                (Some(a), Some(b)) => judge(b - a),
                _ => Verdict::NotApplicable,
            };
            let nv = match (prev.normalized_lambda_q, normalized, prev.lambda_q, lambda) {
                (Some(a), Some(b), Some(la), Some(lb)) if taut && la <= 0.0 && lb <= 0.0 => judge(b - a),
                _ => Verdict::NotApplicable,
            };
            (lv, nv)
        }
    };
    Ok(TraceRow {
        t: state.time,
        min_scalar: scalars.iter().copied().fold(f64::INFINITY, f64::min),
        max_scalar: scalars.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        lambda_q: lambda,
        normalized_lambda_q: normalized,
        mu_q: mu,
        kappa_b,
        leaf_residual,
        spd_ok: state.spd_ok(&state.values),
        lambda_verdict,
        normalized_verdict,
    })
}

fn judge(increment: f64) -> Verdict {
    if increment >= MONOTONICITY_TOL {
        Verdict::Holds
    } else {
        Verdict::Violated
    }
}

/// Integrates to `t_end` with nominal step `h`, recording monitors at every
/// accepted step. A blow-up halts the run and is reported in the trace.
pub fn run_flow(scenario: &Scenario, t_end: f64, h: f64, monitors: MonitorSet) -> Result<FlowTrace> {
    run_flow_with(scenario, t_end, h, monitors, RightHandSide::Ricci)
}

pub fn run_flow_with(
    scenario: &Scenario,
    t_end: f64,
    h: f64,
    monitors: MonitorSet,
    kind: RightHandSide,
) -> Result<FlowTrace> {
    if !(t_end >= 0.0) || !(h > 0.0) {
        return Err(Error::Usage(format!("need t_end ≥ 0 and h > 0, got t_end = {t_end}, h = {h}")));
    }
    let mc = mean_curvature(scenario.metric(), &scenario.check_rule(8)?)?;
    let tautness = tautness_diagnostic(&mc, 1e-8)?;
    let taut = tautness == Tautness::Taut;
    let mut state = FlowState::new(scenario)?;
    let mut rows = vec![monitor_row(&state, monitors, taut, None)?];
    let mut blow_up = None;
    let eps = 1e-12 * t_end.max(1.0);
    while t_end - state.time > eps {
        let step = h.min(t_end - state.time);
        match flow_step_with(&state, step, kind) {
            Ok(out) => {
                state = out.state;
                if t_end - state.time <= eps {
                    state.time = t_end;
                }
                let row = monitor_row(&state, monitors, taut, rows.last())?;
                rows.push(row);
            }
            Err(Error::BlowUp { time, .. }) => {
                blow_up = Some(time);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(FlowTrace { rows, tautness, homogeneous: state.homogeneous, blow_up, final_state: state })
}

#[derive(Debug, Clone)]
pub struct SelfSimilarReport {
    /// true when the integrated flow was compared with (1 − 2λt)g_Q(0); false
    /// when only the algebraic soliton equation was checked.
    pub dynamic: bool,
    pub lambda: f64,
    pub residual: f64,
    pub t_end: f64,
    pub steps: usize,
}

/// Compares the flow with the self-similar profile (1 − 2λt)g_Q(0) when X is
/// absent; for a given X checks Ric^Q + ½L_X g_Q − λg_Q = 0 instead.
pub fn self_similar_check(
    scenario: &Scenario,
    lambda: f64,
    x: Option<&VectorField>,
    t_end: f64,
    h: f64,
) -> Result<SelfSimilarReport> {
    if let Some(x) = x {
        let c = crate::soliton::SolitonCandidate::with_field(scenario.clone(), x.clone()).with_lambda(lambda);
        let report = crate::soliton::soliton_residual(&c)?;
        return Ok(SelfSimilarReport { dynamic: false, lambda, residual: report.sup, t_end: 0.0, steps: 0 });
    }
    let initial = FlowState::new(scenario)?;
    let mut state = initial.clone();
    let mut residual: f64 = 0.0;
    let mut steps = 0;
    let eps = 1e-12 * t_end.max(1.0);
    while t_end - state.time > eps {
        let out = flow_step(&state, h.min(t_end - state.time))?;
        state = out.state;
        steps += 1;
        let factor = 1.0 - 2.0 * lambda * state.time;
        for i in 0..state.values.len() {
            residual = residual.max((&state.values[i] - initial.value(i) * factor).amax());
        }
    }
    Ok(SelfSimilarReport { dynamic: true, lambda, residual, t_end: state.time, steps })
}

fn ricci_at(metric: &MetricField, x: &[f64]) -> Result<DMatrix<f64>> {
    let loc = Local::new(metric, x, 2)?;
    let q = loc.q;
    let ric = loc.ricci_q();
    Ok(DMatrix::from_fn(q, q, |a, b| ric[a * q + b].value()))
}

/// Largest deviation of any entry from its value at the first node.
fn spread(values: &[DMatrix<f64>]) -> f64 {
    values.iter().map(|m| (m - &values[0]).amax()).fold(0.0, f64::max)
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.min()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rk4_is_fourth_order_on_a_nonlinear_ode() {
        let err = |h: f64| {
            let mut y = DVector::from_element(1, 1.0);
            let n = (1.0 / h).round() as usize;
            for i in 0..n {
                y = rk4_step(i as f64 * h, &y, h, |_, y| Ok(y.map(|v| -v * v))).unwrap();
            }
            (y[0] - 0.5).abs()
        };
        let order = (err(0.1) / err(0.05)).log2();
        assert!((3.7..=4.3).contains(&order), "order {order}");
    }

    #[test]
    fn flat_torus_is_a_fixed_point() {
        let s = Scenario::flat_torus().with_resolution(8).unwrap();
        let st = FlowState::new(&s).unwrap();
        assert!(st.is_homogeneous());
        let out = flow_step(&st, 0.3).unwrap();
        assert!((out.state.value(0) - st.value(0)).amax() < 1e-14);
    }

    #[test]
    fn carriere_grows_linearly() {
        let s = Scenario::carriere_default().with_resolution(16).unwrap();
        let l = s.log_rho().unwrap();
        let mut st = FlowState::new(&s).unwrap();
        for _ in 0..4 {
            st = flow_step(&st, 0.1).unwrap().state;
        }
        let expect = 1.0 + 2.0 * l * l * 0.4;
        assert_relative_eq!(st.value(0)[(0, 0)], expect, epsilon = 1e-12);
        assert_relative_eq!(st.value(0)[(0, 1)], 0.0, epsilon = 1e-12);
    }
}
