//! `functional`: F^Q, W^Q at f = 0 and the infima λ^Q, μ^Q over the σ list.

use serde::Serialize;
use transverse_core::basic::BasicForm;
use transverse_core::functionals::{f_q, lambda_q, mu_q_with, normalized_lambda_q, w_q, BasicProblem, FunctionalReport};
use transverse_core::scenario::Scenario;
use transverse_core::Error;

use crate::config::{Functional, RunConfig};
use crate::goldens::{compare, GoldenCheck};
use crate::report::{Header, ScenarioInfo};
use crate::CliError;

/// Most minimizer samples written per entry.
pub const MAX_SAMPLES: usize = 64;

#[derive(Debug, Clone, Serialize)]
pub struct Sample {
    pub point: Vec<f64>,
    pub f: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Entry {
    pub name: &'static str,
    pub sigma: Option<f64>,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalized: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub constraint_residual: f64,
    pub minimizer: Vec<Sample>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FunctionalRunReport {
    #[serde(flatten)]
    pub header: Header,
    pub sigmas: Vec<f64>,
    pub entries: Vec<Entry>,
    pub goldens: Vec<GoldenCheck>,
    pub error: Option<String>,
    pub converged: bool,
    pub pass: bool,
}

fn sampled(problem: &BasicProblem, values: &[f64]) -> Vec<Sample> {
    let n = values.len();
    if n == 0 {
        return Vec::new();
    }
    let stride = n.div_ceil(MAX_SAMPLES);
    (0..n).step_by(stride).map(|i| Sample { point: problem.grid().point(i), f: values[i] }).collect()
}

fn entry(problem: &BasicProblem, name: &'static str, sigma: Option<f64>, r: &FunctionalReport) -> Entry {
    Entry {
        name,
        sigma,
        value: r.value,
        normalized: None,
        converged: r.converged,
        iterations: r.iterations,
        constraint_residual: r.constraint_residual,
        minimizer: sampled(problem, &r.minimizer_values),
    }
}

fn direct(name: &'static str, sigma: Option<f64>, value: f64) -> Entry {
    Entry {
        name,
        sigma,
        value,
        normalized: None,
        converged: true,
        iterations: 0,
        constraint_residual: 0.0,
        minimizer: Vec::new(),
    }
}

fn evaluate(
    s: &Scenario,
    cfg: &RunConfig,
    entries: &mut Vec<Entry>,
    goldens: &mut Vec<GoldenCheck>,
) -> Result<(), Error> {
    let rule = s.quadrature()?;
    let zero = BasicForm::zero(s.chart(), 0, s.q());
    let problem = BasicProblem::new(s)?;
    for f in &cfg.functionals {
        match f {
            Functional::FQ => {
                let v = f_q(s.metric(), &zero, &rule)?;
                entries.push(direct("F_Q", None, v));
                goldens.extend(s.golden("f_q_zero").map(|g| compare(g, v)));
            }
            Functional::WQ => {
                for &sigma in &cfg.sigmas {
                    entries.push(direct("W_Q", Some(sigma), w_q(s.metric(), &zero, sigma, &rule)?));
                }
            }
            Functional::LambdaQ => {
                let r = lambda_q(&problem)?;
                let mut e = entry(&problem, "lambda_Q", None, &r);
                e.normalized = Some(normalized_lambda_q(&problem, &r)?);
                goldens.extend(s.golden("lambda_q").map(|g| compare(g, r.value)));
                entries.push(e);
            }
            Functional::MuQ => {
                for &sigma in &cfg.sigmas {
                    let r = mu_q_with(&problem, sigma, cfg.max_iterations)?;
                    entries.push(entry(&problem, "mu_Q", Some(sigma), &r));
                }
            }
        }
    }
    Ok(())
}

pub fn run(cfg: &RunConfig, header: Header) -> Result<FunctionalRunReport, CliError> {
    let s = cfg.scenario()?;
    let mut entries = Vec::new();
    let mut goldens = Vec::new();
    let error = match evaluate(&s, cfg, &mut entries, &mut goldens) {
        Ok(()) => None,
        Err(e @ Error::Numeric(_)) => Some(e.to_string()),
        Err(e) => return Err(e.into()),
    };
    let converged = error.is_none() && entries.iter().all(|e| e.converged);
    Ok(FunctionalRunReport {
        header: header.with_scenario(ScenarioInfo::of(&s)),
        sigmas: cfg.sigmas.clone(),
        pass: converged && goldens.iter().all(|g| g.pass),
        entries,
        goldens,
        error,
        converged,
    })
}
