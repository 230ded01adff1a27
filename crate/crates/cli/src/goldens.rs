//! Recomputes each registry golden from the scenario and compares.

use serde::Serialize;
use transverse_core::basic::{integrate_volume, BasicForm};
use transverse_core::functionals::{f_q, lambda_q, BasicProblem};
use transverse_core::local::Local;
use transverse_core::scenario::{Golden, Scenario, ScenarioKind};
use transverse_core::soliton::{soliton_residual, SolitonCandidate};
use transverse_core::transverse::{einstein_residual, mean_curvature};
use transverse_core::Result;

/// Pointwise and quadrature values are exact up to round-off.
pub const ANALYTIC_GOLDEN_TOL: f64 = 1e-8;
/// The basic eigenproblem carries discretization error.
pub const SPECTRAL_GOLDEN_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct GoldenCheck {
    pub name: String,
    pub expected: f64,
    pub computed: f64,
    pub error: f64,
    pub tolerance: f64,
    pub provenance: &'static str,
    pub note: String,
    pub pass: bool,
}

pub fn tolerance(name: &str) -> f64 {
    if name == "lambda_q" {
        SPECTRAL_GOLDEN_TOL
    } else {
        ANALYTIC_GOLDEN_TOL
    }
}

pub fn compute(s: &Scenario, name: &str) -> Result<Option<f64>> {
    let metric = s.metric();
    let rule = s.check_rule(8)?;
    let at = s.representative();
    let zero = || BasicForm::zero(s.chart(), 0, s.q());
    let v = match name {
        "log_rho" => match s.kind() {
            ScenarioKind::Carriere { a, .. } => {
                let m = nalgebra::Matrix2::new(a[0][0] as f64, a[0][1] as f64, a[1][0] as f64, a[1][1] as f64);
                m.complex_eigenvalues().iter().map(|z| z.re).fold(f64::MIN, f64::max).ln()
            }
            _ => return Ok(None),
        },
        "ambient_sectional_e1_e2" => Local::new(metric, &at, 2)?.ambient_riemann_lowered(0, 1, 0, 1).value(),
        "ambient_sectional_e2_e3" => Local::new(metric, &at, 2)?.ambient_riemann_lowered(1, 2, 1, 2).value(),
        "transverse_sectional" => Local::new(metric, &at, 2)?.riemann_q_lowered(0, 1, 0, 1).value(),
        "ricci_q_eigenvalue" => einstein_residual(metric, &rule)?.0,
        "scalar_q" => Local::new(metric, &at, 2)?.scalar_q().value(),
        "tau_b_norm" => mean_curvature(metric, &rule)?
            .tau
            .iter()
            .map(|t| t.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max),
        "tau_b_e3" => Local::new(metric, &at, 1)?.tau()[1].value(),
        "kappa_t_loop" => {
            let mc = mean_curvature(metric, &rule)?;
            match mc.loop_integrals.iter().find(|(n, _)| n == "t-loop") {
                Some((_, v)) => *v,
                None => return Ok(None),
            }
        }
        "volume" => integrate_volume(metric, &rule, |_| Ok(1.0))?,
        "f_q_zero" => f_q(metric, &zero(), &s.quadrature()?)?,
        "lambda_q" => lambda_q(&BasicProblem::new(s)?)?.value,
        "soliton_lambda" => soliton_residual(&SolitonCandidate::new(s.clone()))?.fitted_lambda,
        _ => return Ok(None),
    };
    Ok(Some(v))
}

pub fn compare(g: &Golden, computed: f64) -> GoldenCheck {
    let error = (computed - g.value).abs();
    let tolerance = tolerance(&g.name);
    GoldenCheck {
        name: g.name.clone(),
        expected: g.value,
        computed,
        error,
        tolerance,
        provenance: g.provenance.tag(),
        note: g.note.clone(),
        pass: error < tolerance,
    }
}

pub fn check(s: &Scenario, g: &Golden) -> Result<Option<GoldenCheck>> {
    Ok(compute(s, &g.name)?.map(|computed| compare(g, computed)))
}

/// Golden checks for the named subset (all when `names` is empty).
pub fn check_all(s: &Scenario, names: &[&str]) -> Result<Vec<GoldenCheck>> {
    let mut out = Vec::new();
    for g in s.goldens().iter().filter(|g| names.is_empty() || names.contains(&g.name.as_str())) {
        if let Some(c) = check(s, g)? {
            out.push(c);
        }
    }
    Ok(out)
}
