//! `verify`: curvature, operator, soliton and theorem-consistency suites.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use transverse_core::basic::{
    adjointness_gap, bochner_residual, integration_identity_suite, rough_pairing_residual, weitzenbock_residual,
    BasicForm, BasicTensor, IdentityInputs,
};
use transverse_core::chart::ScalarField;
use transverse_core::frame::{ambient_curvature, ConnectionCoefficients, ConnectionVariant};
use transverse_core::expr::Expr;
use transverse_core::scenario::{Scenario, ScenarioKind};
use transverse_core::soliton::{
    gradient_identity_suite, soliton_residual, theorem_consistency_report, twisted_identity_suite, SolitonCandidate,
};
use transverse_core::transverse::{
    bundle_like_residual, contracted_bianchi_residual, curvature_leaf_residual, mean_curvature, second_bianchi_defect,
    tautness_diagnostic, BASIC_TOL,
};

use crate::config::RunConfig;
use crate::goldens::{self, GoldenCheck};
use crate::report::{Header, ScenarioInfo};
use crate::CliError;

pub const FD_POINTS: usize = 100;
pub const BIANCHI_POINTS: usize = 20;
/// Gap allowed between the twisted and plain suites on taut scenarios.
pub const COLLAPSE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolitonSummary {
    pub fitted_lambda: f64,
    pub sup_residual: f64,
    pub l2_residual: f64,
    pub classification: &'static str,
    pub tautness: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoremRow {
    pub implication: String,
    pub applicable: bool,
    pub consistent: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    #[serde(flatten)]
    pub header: Header,
    pub samples: usize,
    pub checks: Vec<Check>,
    pub goldens: Vec<GoldenCheck>,
    pub soliton: SolitonSummary,
    pub theorems: Vec<TheoremRow>,
    pub failed: Vec<String>,
    pub pass: bool,
}

struct Checks(Vec<Check>);

impl Checks {
    fn push(&mut self, suite: &'static str, name: impl Into<String>, value: f64, tolerance: f64) {
        self.0.push(Check { suite, name: name.into(), value, tolerance, pass: value < tolerance, detail: String::new() });
    }

    fn flag(&mut self, suite: &'static str, name: impl Into<String>, ok: bool, detail: impl Into<String>) {
        let value = if ok { 0.0 } else { 1.0 };
        self.0.push(Check { suite, name: name.into(), value, tolerance: 0.5, pass: ok, detail: detail.into() });
    }
}

/// A uniformly random chart point, kept away from open-axis ends.
fn random_point<R: Rng>(s: &Scenario, rng: &mut R, end_margin: f64) -> Vec<f64> {
    s.chart()
        .axes()
        .iter()
        .map(|a| {
            let m = if a.kind == transverse_core::chart::AxisKind::Open { end_margin } else { 0.0 };
            a.lo + m + rng.random::<f64>() * (a.length() - 2.0 * m)
        })
        .collect()
}

fn random_symmetric<R: Rng>(s: &Scenario, rng: &mut R) -> Result<BasicTensor, CliError> {
    let a = s.random_one_form(rng);
    let b = s.random_one_form(rng);
    let phi = s.random_function(rng);
    let (p, q) = (s.p(), s.q());
    let entries = (0..q)
        .map(|i| {
            (0..q)
                .map(|j| {
                    let ab = a.component(i).mul(b.component(j));
                    let ba = a.component(j).mul(b.component(i));
                    ab.add(&ba).add(&phi.mul(s.metric().entry(p + i, p + j)))
                })
                .collect()
        })
        .collect();
    Ok(BasicTensor::symmetric(entries)?)
}

/// A random field whose derivatives are of unit size, as the FD bound assumes.
fn unit_scale_function<R: Rng>(s: &Scenario, rng: &mut R) -> ScalarField {
    if s.kind() == ScenarioKind::ProductSphere {
        return s.random_function(rng);
    }
    let mut c = || rng.random_range(-1.0..1.0);
    let e = (Expr::var(1) + c()).sin() * c() + (Expr::var(2) * c()).cos() * (Expr::var(0) * c());
    ScalarField::analytic(s.chart(), e)
}

fn fd_consistency(s: &Scenario, cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Result<f64, CliError> {
    let step = cfg.tolerances.fd_step;
    let mut fields: Vec<ScalarField> = s.frame().frame().iter().flat_map(|v| v.coeffs().to_vec()).collect();
    fields.push(unit_scale_function(s, rng));
    let mut worst: f64 = 0.0;
    for f in fields.iter().filter(|f| f.has_exact_gradient()) {
        let f = f.clone().with_fd_step(step)?;
        for _ in 0..FD_POINTS {
            let x = random_point(s, rng, PI / 4.0);
            let exact = f.gradient(&x)?;
            let fd = f.fd_gradient(&x)?;
            for (a, b) in exact.iter().zip(&fd) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    Ok(worst)
}

fn ambient_first_bianchi(s: &Scenario) -> Result<f64, CliError> {
    let rule = s.check_rule(4)?;
    let conn = ConnectionCoefficients::new(s.metric(), ConnectionVariant::Ambient);
    let n = s.p() + s.q();
    let mut worst: f64 = 0.0;
    for node in rule.nodes() {
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let r1 = ambient_curvature(&conn, a, b, c, &node.point)?;
                    let r2 = ambient_curvature(&conn, b, c, a, &node.point)?;
                    let r3 = ambient_curvature(&conn, c, a, b, &node.point)?;
                    for m in 0..n {
                        worst = worst.max((r1[m] + r2[m] + r3[m]).abs());
                    }
                }
            }
        }
    }
    Ok(worst)
}

pub fn run(cfg: &RunConfig, header: Header) -> Result<VerifyReport, CliError> {
    let s = cfg.scenario()?;
    let tol = &cfg.tolerances;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut checks = Checks(Vec::new());
    let check_rule = s.check_rule(8)?;

    let fd = fd_consistency(&s, cfg, &mut rng)?;
    checks.push("chart", "fd_gradient_consistency", fd, 10.0 * tol.fd_step * tol.fd_step);

    checks.push("structure", "bundle_like", bundle_like_residual(s.metric(), &check_rule)?, BASIC_TOL);
    checks.push("structure", "curvature_basic", curvature_leaf_residual(s.metric(), &check_rule)?, BASIC_TOL);
    let mc = mean_curvature(s.metric(), &check_rule)?;
    checks.push("structure", "mean_curvature_basic", mc.leaf_residual, BASIC_TOL);
    checks.push("structure", "mean_curvature_closed", mc.closed_residual, tol.analytic);
    let tautness = tautness_diagnostic(&mc, tol.analytic)?;

    checks.push("curvature", "ambient_first_bianchi", ambient_first_bianchi(&s)?, tol.analytic);
    checks.push(
        "curvature",
        "contracted_bianchi",
        contracted_bianchi_residual(s.metric(), &s.check_rule(6)?)?,
        tol.analytic,
    );
    let mut second: f64 = 0.0;
    for _ in 0..BIANCHI_POINTS {
        second = second.max(second_bianchi_defect(s.metric(), &random_point(&s, &mut rng, 0.2))?);
    }
    checks.push("curvature", "second_bianchi", second, tol.analytic);

    let pointwise = s.check_rule(4)?;
    let quadrature = s.quadrature()?;
    let mut worst = [0.0f64; 4];
    let mut integrated: Vec<(String, f64)> = Vec::new();
    for _ in 0..cfg.samples {
        let eta = s.random_one_form(&mut rng);
        worst[0] = worst[0].max(weitzenbock_residual(s.metric(), &eta, &pointwise)?);
        worst[1] = worst[1].max(bochner_residual(s.metric(), &eta, &pointwise)?);
        worst[2] = worst[2].max(rough_pairing_residual(s.metric(), &eta, &pointwise)?);
        let inputs = IdentityInputs {
            f: BasicForm::function(s.random_function(&mut rng)),
            eta,
            h: random_symmetric(&s, &mut rng)?,
            f_dot: BasicForm::function(s.random_function(&mut rng)),
        };
        worst[3] = worst[3].max(adjointness_gap(s.metric(), &inputs.f, &inputs.eta, &quadrature)?);
        for g in integration_identity_suite(s.metric(), &inputs, &quadrature)? {
            match integrated.iter_mut().find(|(n, _)| *n == g.name) {
                Some((_, v)) => *v = v.max(g.gap()),
                None => integrated.push((g.name.clone(), g.gap())),
            }
        }
    }
    for (name, v) in ["weitzenbock", "bochner", "rough_pairing", "adjointness"].iter().zip(worst) {
        checks.push("operators", *name, v, tol.analytic);
    }
    for (name, v) in integrated {
        checks.push("integration", name, v, tol.analytic);
    }

    let zero = BasicForm::zero(s.chart(), 0, s.q());
    let base = soliton_residual(&SolitonCandidate::new(s.clone()))?;
    checks.push("soliton", "soliton_equation", base.sup, tol.soliton);
    let gradient = gradient_identity_suite(&SolitonCandidate::gradient(s.clone(), zero.clone()))?;
    let twisted = twisted_identity_suite(&SolitonCandidate::twisted(s.clone(), zero))?;
    if gradient.applicable {
        for id in &gradient.identities {
            checks.push("soliton", format!("gradient_{}", id.name), id.sup, tol.analytic);
        }
    } else {
        checks.flag("soliton", "gradient_suite_applicable", false, gradient.note.clone());
    }
    match tautness {
        transverse_core::transverse::Tautness::Taut => {
            let mut gap: f64 = if twisted.applicable { 0.0 } else { f64::INFINITY };
            for id in &gradient.identities {
                match twisted.identity(&id.name) {
                    Some(t) => gap = gap.max((t.sup - id.sup).abs()),
                    None => gap = f64::INFINITY,
                }
            }
            checks.push("soliton", "twisted_collapses_to_gradient", gap, COLLAPSE_TOL);
        }
        _ => checks.flag(
            "soliton",
            "twisted_attempt_rejected",
            !twisted.applicable,
            format!("non-taut: twisted residual {:e}; {}", twisted.sup, twisted.note),
        ),
    }

    let consistency = theorem_consistency_report(&SolitonCandidate::new(s.clone()))?;
    for v in consistency.verdicts.iter().filter(|v| v.applicable) {
        checks.flag("theorems", v.implication.clone(), v.consistent, v.detail.clone());
    }

    let golden_checks = goldens::check_all(&s, &[])?;
    let mut failed: Vec<String> =
        checks.0.iter().filter(|c| !c.pass).map(|c| format!("{}/{}", c.suite, c.name)).collect();
    failed.extend(golden_checks.iter().filter(|g| !g.pass).map(|g| format!("golden/{}", g.name)));

    Ok(VerifyReport {
        header: header.with_scenario(ScenarioInfo::of(&s)),
        samples: cfg.samples,
        pass: failed.is_empty(),
        checks: checks.0,
        goldens: golden_checks,
        soliton: SolitonSummary {
            fitted_lambda: base.fitted_lambda,
            sup_residual: base.sup,
            l2_residual: base.l2,
            classification: base.classification.as_str(),
            tautness: tautness.as_str(),
        },
        theorems: consistency
            .verdicts
            .iter()
            .map(|v| TheoremRow {
                implication: v.implication.clone(),
                applicable: v.applicable,
                consistent: v.consistent,
                detail: v.detail.clone(),
            })
            .collect(),
        failed,
    })
}
