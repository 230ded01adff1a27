//! Transverse Ricci solitons Ric^Q + ½L_X g_Q = λg_Q: residuals, λ fitting and
//! classification, the identity suites of gradient and twisted gradient
//! solitons, and consistency checks of the structure theorems on instances.

use std::sync::Arc;

use rayon::prelude::*;

use crate::basic::{sup_over, BasicForm, BasicTensor};
use crate::chart::{QuadratureRule, ScalarField};
use crate::error::{Error, Result};
use crate::frame::{MetricField, VectorField};
use crate::jet::Jet;
use crate::local::Local;
use crate::scenario::Scenario;
use crate::transverse::{frame_components, mean_curvature, tautness_diagnostic, Tautness};

pub const SOLITON_TOL: f64 = 1e-6;
pub const STEADY_DEAD_ZONE: f64 = 1e-8;
pub const BASIC_FIELD_TOL: f64 = 1e-8;
/// Nodes per basic axis for the fourth-order identity suites.
pub const SUITE_RESOLUTION: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KindHint {
    Generic,
    Gradient,
    TwistedGradient,
}

impl KindHint {
    pub fn as_str(self) -> &'static str {
        match self {
            KindHint::Generic => "generic",
            KindHint::Gradient => "gradient",
            KindHint::TwistedGradient => "twisted-gradient",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolitonCandidate {
    scenario: Scenario,
    x: Option<VectorField>,
    f: Option<BasicForm>,
    lambda: Option<f64>,
    kind: KindHint,
}

impl SolitonCandidate {
    /// X = 0.
    pub fn new(scenario: Scenario) -> Self {
        SolitonCandidate { scenario, x: None, f: None, lambda: None, kind: KindHint::Generic }
    }

    pub fn with_field(scenario: Scenario, x: VectorField) -> Self {
        SolitonCandidate { scenario, x: Some(x), f: None, lambda: None, kind: KindHint::Generic }
    }

    /// X = ∇f.
    pub fn gradient(scenario: Scenario, f: BasicForm) -> Self {
        SolitonCandidate { scenario, x: None, f: Some(f), lambda: None, kind: KindHint::Gradient }
    }

    /// X = ∇f + τ_B.
    pub fn twisted(scenario: Scenario, f: BasicForm) -> Self {
        SolitonCandidate { scenario, x: None, f: Some(f), lambda: None, kind: KindHint::TwistedGradient }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = Some(lambda);
        self
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn kind(&self) -> KindHint {
        self.kind
    }

    pub fn lambda(&self) -> Option<f64> {
        self.lambda
    }

    pub fn potential(&self) -> Option<&BasicForm> {
        self.f.as_ref()
    }

    fn validate(&self) -> Result<()> {
        if let Some(f) = &self.f {
            f.as_function()?;
        }
        if let Some(x) = &self.x {
            let rule = self.scenario.check_rule(8)?;
            let r = leaf_bracket_residual(self.scenario.metric(), x, &rule)?;
            if r > BASIC_FIELD_TOL {
                return Err(Error::Usage(format!("vector field is not basic (leaf bracket residual {r:e})")));
            }
        }
        Ok(())
    }

    /// Transverse components of the drift at the order of the local geometry less one.
    fn drift(&self, loc: &Local, x: &[f64]) -> Result<Vec<Jet>> {
        let order = loc.order - 1;
        let q = loc.q;
        let grad = |loc: &Local| -> Result<Vec<Jet>> {
            match &self.f {
                Some(f) => {
                    let fj = f.as_function()?.jet(x, loc.order)?;
                    Ok(loc.sharp(&loc.df(&fj)))
                }
                None => Ok(vec![Jet::zero(order); q]),
            }
        };
        match self.kind {
            KindHint::Generic => match &self.x {
                Some(v) => Ok(frame_components(v, self.scenario.frame(), x, order)?[loc.p..].to_vec()),
                None => Ok(vec![Jet::zero(order); q]),
            },
            KindHint::Gradient => grad(loc),
            KindHint::TwistedGradient => {
                let g = grad(loc)?;
                Ok(g.iter().zip(loc.tau()).map(|(a, b)| *a + b).collect())
            }
        }
    }

    fn potential_jet(&self, x: &[f64], order: usize) -> Result<Jet> {
        match &self.f {
            Some(f) => f.as_function()?.jet(x, order),
            None => Ok(Jet::constant(0.0, order)),
        }
    }
}

/// sup over nodes and leaf frame fields e_u of |π[X, e_u]|.
pub fn leaf_bracket_residual(metric: &MetricField, x: &VectorField, rule: &QuadratureRule) -> Result<f64> {
    let frame = metric.frame().clone();
    let (n, p) = (frame.n(), frame.p());
    sup_over(rule, |pt| {
        let loc = Local::new(metric, pt, 2)?;
        let w = frame_components(x, &frame, pt, 1)?;
        let mut m: f64 = 0.0;
        for u in 0..p {
            for d in p..n {
                let mut s = -loc.d(u, &w[d]).value();
                for (i, wi) in w.iter().enumerate() {
                    s += wi.value() * loc.c[loc.idx(i, u, d)].value();
                }
                m = m.max(s.abs());
            }
        }
        Ok(m)
    })
}

/// L_X g_Q as a basic symmetric tensor, (L_X g_Q)(Y,Z) = X(g_Q(Y,Z)) −
/// g_Q(π[X,Y],Z) − g_Q(Y,π[X,Z]) on transverse frame pairs.
pub fn lie_derivative_metric(metric: &Arc<MetricField>, x: &VectorField, rule: &QuadratureRule) -> Result<BasicTensor> {
    let r = leaf_bracket_residual(metric, x, rule)?;
    if r > BASIC_FIELD_TOL {
        return Err(Error::Usage(format!("vector field is not basic (leaf bracket residual {r:e})")));
    }
    let q = metric.frame().q();
    let p = metric.frame().p();
    let chart = metric.chart().clone();
    let entries = (0..q)
        .map(|a| {
            (0..q)
                .map(|b| {
                    let metric = metric.clone();
                    let x = x.clone();
                    ScalarField::derived(&chart, move |pt, order| {
                        let loc = Local::new(&metric, pt, order + 1)?;
                        let w = frame_components(&x, metric.frame(), pt, order + 1)?;
                        Ok(loc.lie_metric(&w[p..])[a * q + b].truncate(order))
                    })
                })
                .collect()
        })
        .collect();
    BasicTensor::symmetric(entries)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Shrinking,
    Steady,
    Expanding,
    NotASoliton,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Shrinking => "shrinking",
            Classification::Steady => "steady",
            Classification::Expanding => "expanding",
            Classification::NotASoliton => "not-a-soliton",
        }
    }

    pub fn of(lambda: f64, residual: f64) -> Self {
        if !(residual < SOLITON_TOL) {
            Classification::NotASoliton
        } else if lambda.abs() < STEADY_DEAD_ZONE {
            Classification::Steady
        } else if lambda > 0.0 {
            Classification::Shrinking
        } else {
            Classification::Expanding
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityResidual {
    pub name: String,
    pub sup: f64,
    pub l2: f64,
}

#[derive(Debug, Clone)]
pub struct ResidualReport {
    pub kind: KindHint,
    pub fitted_lambda: f64,
    /// Residual of the soliton equation itself.
    pub sup: f64,
    pub l2: f64,
    pub classification: Classification,
    pub identities: Vec<IdentityResidual>,
    /// false when the suite refused to run on a failing candidate.
    pub applicable: bool,
    pub note: String,
}

impl ResidualReport {
    pub fn identity(&self, name: &str) -> Option<&IdentityResidual> {
        self.identities.iter().find(|r| r.name == name)
    }

    /// Largest sup residual over the identities.
    pub fn worst(&self) -> f64 {
        self.identities.iter().map(|r| r.sup).fold(0.0, f64::max)
    }
}

/// Per-node data of the soliton equation: A = Ric^Q + ½L_X g_Q and g_Q.
struct Samples {
    a: Vec<Vec<f64>>,
    g: Vec<Vec<f64>>,
    ginv: Vec<Vec<f64>>,
    weight: Vec<f64>,
    q: usize,
}

impl Samples {
    fn collect(c: &SolitonCandidate) -> Result<Self> {
        let rule = c.scenario.quadrature()?;
        let metric = c.scenario.metric();
        let q = c.scenario.q();
        let rows: Vec<(Vec<f64>, Vec<f64>, Vec<f64>, f64)> = rule
            .nodes()
            .par_iter()
            .map(|n| {
                let loc = Local::new(metric, &n.point, 2)?;
                let ric = loc.ricci_q();
                let x = c.drift(&loc, &n.point)?;
                let lie = loc.lie_metric(&x);
                let a = (0..q * q).map(|k| ric[k].value() + 0.5 * lie[k].value()).collect();
                let g = (0..q * q).map(|k| loc.gq(k / q, k % q).value()).collect();
                let ginv = (0..q * q).map(|k| loc.gq_inv(k / q, k % q).value()).collect();
                Ok((a, g, ginv, n.weight * metric.density(&n.point)?))
            })
            .collect::<Result<_>>()?;
        let mut s = Samples { a: vec![], g: vec![], ginv: vec![], weight: vec![], q };
        for (a, g, gi, w) in rows {
            s.a.push(a);
            s.g.push(g);
            s.ginv.push(gi);
            s.weight.push(w);
        }
        Ok(s)
    }

    fn frob(&self, i: usize, u: &[f64], v: &[f64]) -> f64 {
        let q = self.q;
        let gi = &self.ginv[i];
        let mut s = 0.0;
        for a in 0..q {
            for b in 0..q {
                for c in 0..q {
                    for d in 0..q {
                        s += gi[a * q + c] * gi[b * q + d] * u[a * q + b] * v[c * q + d];
                    }
                }
            }
        }
        s
    }

    /// λ* = ∫⟨A, g_Q⟩ dV / ∫⟨g_Q, g_Q⟩ dV.
    fn fit(&self) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..self.a.len() {
            num += self.weight[i] * self.frob(i, &self.a[i], &self.g[i]);
            den += self.weight[i] * self.frob(i, &self.g[i], &self.g[i]);
        }
        num / den
    }

    /// (sup, L²) of |A − λ g_Q|.
    fn norms(&self, lambda: f64) -> (f64, f64) {
        let mut sup: f64 = 0.0;
        let mut l2 = 0.0;
        for i in 0..self.a.len() {
            let r: Vec<f64> = self.a[i].iter().zip(&self.g[i]).map(|(a, g)| a - lambda * g).collect();
            let n2 = self.frob(i, &r, &r).max(0.0);
            sup = sup.max(n2.sqrt());
            l2 += self.weight[i] * n2;
        }
        (sup, l2.sqrt())
    }
}

/// Residual of Ric^Q + ½L_X g_Q − λg_Q, with λ fitted when the candidate leaves it unset.
pub fn soliton_residual(c: &SolitonCandidate) -> Result<ResidualReport> {
    c.validate()?;
    let s = Samples::collect(c)?;
    let fitted = s.fit();
    let lambda = c.lambda.unwrap_or(fitted);
    let (sup, l2) = s.norms(lambda);
    Ok(ResidualReport {
        kind: c.kind,
        fitted_lambda: lambda,
        sup,
        l2,
        classification: Classification::of(lambda, sup),
        identities: vec![IdentityResidual { name: "soliton_equation".into(), sup, l2 }],
        applicable: true,
        note: if c.lambda.is_some() { "lambda given".into() } else { "lambda fitted".into() },
    })
}

/// L² residual of the soliton equation at a given λ.
pub fn l2_residual_at(c: &SolitonCandidate, lambda: f64) -> Result<f64> {
    c.validate()?;
    Ok(Samples::collect(c)?.norms(lambda).1)
}

fn inapplicable(base: ResidualReport, why: &str) -> ResidualReport {
    ResidualReport { applicable: false, note: why.into(), identities: vec![], ..base }
}

/// Pointwise residuals at order four: (name, value) pairs per node.
type PointIdentities = dyn Fn(&Local, &Jet, f64) -> Vec<(&'static str, f64)> + Sync;

fn run_suite(c: &SolitonCandidate, base: ResidualReport, lambda: f64, op: &PointIdentities) -> Result<ResidualReport> {
    let rule = c.scenario.check_rule(SUITE_RESOLUTION)?;
    let metric = c.scenario.metric();
    let rows: Vec<(Vec<(&'static str, f64)>, f64)> = rule
        .nodes()
        .par_iter()
        .map(|n| {
            let loc = Local::new(metric, &n.point, 4)?;
            let f = c.potential_jet(&n.point, 4)?;
            Ok((op(&loc, &f, lambda), n.weight * metric.density(&n.point)?))
        })
        .collect::<Result<_>>()?;
    let names: Vec<&str> = rows.first().map(|r| r.0.iter().map(|(n, _)| *n).collect()).unwrap_or_default();
    let identities = names
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let sup = rows.iter().map(|r| r.0[k].1.abs()).fold(0.0, f64::max);
            let l2 = rows.iter().map(|r| r.1 * r.0[k].1 * r.0[k].1).sum::<f64>().sqrt();
            IdentityResidual { name: name.to_string(), sup, l2 }
        })
        .collect();
    Ok(ResidualReport { identities, ..base })
}

fn norm1(loc: &Local, eta: &[Jet]) -> f64 {
    loc.dot(eta, eta).value().max(0.0).sqrt()
}

/// Ric^Q(v, ·) for a vector v.
fn ric_contract(ric: &[Jet], v: &[Jet], q: usize) -> Vec<Jet> {
    (0..q)
        .map(|b| {
            let mut s = Jet::zero(ric[0].order().min(v[0].order()));
            for a in 0..q {
                s += v[a] * ric[a * q + b];
            }
            s
        })
        .collect()
}

fn require_potential(c: &SolitonCandidate) -> Result<()> {
    if c.x.is_some() {
        return Err(Error::Usage("identity suites need a gradient candidate, not a vector field".into()));
    }
    Ok(())
}

/// The gradient soliton identities: S^Q − δ_T df = qλ; d(S^Q + |∇f|² − 2λf) = 0;
/// dS^Q = 2 i_{∇f} Ric^Q; Δ_B S^Q = 2|Ric^Q|² − 2λS^Q − dS^Q(∇f − τ_B).
pub fn gradient_identity_suite(c: &SolitonCandidate) -> Result<ResidualReport> {
    require_potential(c)?;
    let c = SolitonCandidate { kind: KindHint::Gradient, ..c.clone() };
    let base = soliton_residual(&c)?;
    if base.sup >= SOLITON_TOL {
        return Ok(inapplicable(base, "candidate is not a gradient soliton; identities not evaluated"));
    }
    let lambda = base.fitted_lambda;
    let q = c.scenario.q();
    run_suite(&c, base, lambda, &move |loc, f, lambda| {
        let tau = loc.tau();
        let ric = loc.ricci_q();
        let s = loc.scalar_q_from(&ric);
        let df = loc.df(f);
        let grad = loc.sharp(&df);
        let e1 = (s - loc.delta_t1(&df)).value() - q as f64 * lambda;
        let h = s + loc.dot(&df, &df) - f.truncate(s.order()) * (2.0 * lambda);
        let e2 = norm1(loc, &loc.df(&h));
        let ds = loc.df(&s);
        let ic = ric_contract(&ric, &grad, q);
        let e3: Vec<Jet> = ds.iter().zip(&ic).map(|(a, b)| *a - *b * 2.0).collect();
        let e3 = norm1(loc, &e3);
        let drift: Vec<Jet> = grad.iter().zip(&tau).map(|(a, b)| *a - *b).collect();
        let e4 = loc.laplacian0(&s, &tau).value() - 2.0 * loc.dot2(&ric, &ric).value()
            + 2.0 * lambda * s.value()
            + pair(&ds, &drift);
        vec![("trace", e1), ("hamilton", e2), ("gradient_of_scalar", e3), ("laplacian_of_scalar", e4)]
    })
}

/// The twisted gradient soliton identities: S^Q − δ_T(df + κ_B) = qλ;
/// d(S^Q + |∇f + τ_B|² − 2λf) = 2λκ_B; dS^Q = 2 i_{∇f+τ_B} Ric^Q;
/// Δ_B S^Q = −2λS^Q − dS^Q(∇f) + 2|Ric^Q|²; and, for λ ≠ 0,
/// κ_B = (1/2λ) d(S^Q + |∇f + τ_B|² − 2λf).
pub fn twisted_identity_suite(c: &SolitonCandidate) -> Result<ResidualReport> {
    require_potential(c)?;
    let c = SolitonCandidate { kind: KindHint::TwistedGradient, ..c.clone() };
    let base = soliton_residual(&c)?;
    if base.sup >= SOLITON_TOL {
        return Ok(inapplicable(base, "candidate is not a twisted gradient soliton; identities not evaluated"));
    }
    let lambda = base.fitted_lambda;
    let q = c.scenario.q();
    run_suite(&c, base, lambda, &move |loc, f, lambda| {
        let tau = loc.tau();
        let kappa = loc.kappa();
        let ric = loc.ricci_q();
        let s = loc.scalar_q_from(&ric);
        let df = loc.df(f);
        let grad = loc.sharp(&df);
        let w: Vec<Jet> = df.iter().zip(&kappa).map(|(a, b)| *a + *b).collect();
        let wv: Vec<Jet> = grad.iter().zip(&tau).map(|(a, b)| *a + *b).collect();
        let e1 = (s - loc.delta_t1(&w)).value() - q as f64 * lambda;
        let h = s + loc.dot(&w, &w) - f.truncate(s.order()) * (2.0 * lambda);
        let dh = loc.df(&h);
        let r2: Vec<Jet> = dh.iter().zip(&kappa).map(|(a, b)| *a - *b * (2.0 * lambda)).collect();
        let e2 = norm1(loc, &r2);
        let ds = loc.df(&s);
        let ic = ric_contract(&ric, &wv, q);
        let e3: Vec<Jet> = ds.iter().zip(&ic).map(|(a, b)| *a - *b * 2.0).collect();
        let e3 = norm1(loc, &e3);
        let e4 = loc.laplacian0(&s, &tau).value() + 2.0 * lambda * s.value() + pair(&ds, &grad)
            - 2.0 * loc.dot2(&ric, &ric).value();
        let mut out =
            vec![("trace", e1), ("hamilton", e2), ("gradient_of_scalar", e3), ("laplacian_of_scalar", e4)];
        if lambda.abs() >= STEADY_DEAD_ZONE {
            let r: Vec<Jet> = kappa.iter().zip(&dh).map(|(k, d)| *k - *d * (0.5 / lambda)).collect();
            out.push(("tautness_implication", norm1(loc, &r)));
        }
        out
    })
}

/// η(v) at the base point.
fn pair(eta: &[Jet], v: &[Jet]) -> f64 {
    eta.iter().zip(v).map(|(a, b)| a.value() * b.value()).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoremVerdict {
    pub implication: String,
    pub applicable: bool,
    pub consistent: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct ConsistencyReport {
    pub soliton: ResidualReport,
    pub tautness: Tautness,
    pub verdicts: Vec<TheoremVerdict>,
}

impl ConsistencyReport {
    /// No applicable implication is violated.
    pub fn consistent(&self) -> bool {
        self.verdicts.iter().all(|v| !v.applicable || v.consistent)
    }

    pub fn verdict(&self, implication: &str) -> Option<&TheoremVerdict> {
        self.verdicts.iter().find(|v| v.implication == implication)
    }
}

fn verdict(name: &str, applicable: bool, consistent: bool, detail: String) -> TheoremVerdict {
    TheoremVerdict { implication: name.into(), applicable, consistent: !applicable || consistent, detail }
}

/// Checks the structure theorems' implications on a soliton instance: shrinking
/// ⇒ taut; steady ⇒ Ricci-flat with vanishing drift; non-taut ⇒ λ < 0; expanding
/// gradient with δ_B κ_B = 0 ⇒ transversally Einstein.
pub fn theorem_consistency_report(c: &SolitonCandidate) -> Result<ConsistencyReport> {
    let soliton = soliton_residual(c)?;
    let metric = c.scenario.metric();
    let mc = mean_curvature(metric, &c.scenario.check_rule(8)?)?;
    let tautness = tautness_diagnostic(&mc, 1e-8)?;
    let is_soliton = soliton.classification != Classification::NotASoliton;
    let lambda = soliton.fitted_lambda;
    let rule = c.scenario.quadrature()?;
    let q = c.scenario.q();

    let ric_sup = sup_over(&rule, |x| {
        let loc = Local::new(metric, x, 2)?;
        let ric = loc.ricci_q();
        Ok(loc.dot2(&ric, &ric).value().max(0.0).sqrt())
    })?;
    let twisted_drift = |loc: &Local, x: &[f64]| -> Result<Vec<Jet>> {
        let f = c.potential_jet(x, loc.order)?;
        Ok(loc.sharp(&loc.df(&f)).iter().zip(loc.tau()).map(|(a, b)| *a + b).collect())
    };
    let drift_sup = sup_over(&rule, |x| {
        let loc = Local::new(metric, x, 2)?;
        let v = twisted_drift(&loc, x)?;
        let low = loc.lower(&v);
        Ok(norm1(&loc, &low))
    })?;
    let lemma_sup = sup_over(&rule, |x| {
        let loc = Local::new(metric, x, 2)?;
        let v = loc.lower(&twisted_drift(&loc, x)?);
        Ok((loc.scalar_q().value() + loc.dot(&v, &v).value()).abs())
    })?;
    let einstein_sup = sup_over(&rule, |x| {
        let loc = Local::new(metric, x, 2)?;
        let ric = loc.ricci_q();
        let r: Vec<Jet> = (0..q * q).map(|k| ric[k] - loc.gq(k / q, k % q).truncate(0) * lambda).collect();
        Ok(loc.dot2(&r, &r).value().max(0.0).sqrt())
    })?;
    let div_kappa_sup = sup_over(&rule, |x| {
        let loc = Local::new(metric, x, 2)?;
        Ok(loc.delta_b1(&loc.kappa(), &loc.tau()).value().abs())
    })?;

    let gradient_like = c.x.is_none() && c.kind != KindHint::TwistedGradient;
    let class = soliton.classification;
    let verdicts = vec![
        verdict(
            "shrinking_implies_taut",
            is_soliton && class == Classification::Shrinking,
            tautness == Tautness::Taut,
            format!("tautness {}", tautness.as_str()),
        ),
        verdict(
            "steady_implies_ricci_flat",
            is_soliton && class == Classification::Steady,
            ric_sup < SOLITON_TOL && drift_sup < SOLITON_TOL,
            format!("sup |Ric^Q| = {ric_sup:e}, sup |∇f + τ_B| = {drift_sup:e}, sup |S^Q + |∇f + τ_B|²| = {lemma_sup:e}"),
        ),
        verdict(
            "non_taut_implies_expanding",
            is_soliton && tautness == Tautness::NonTaut,
            lambda < 0.0,
            format!("fitted lambda {lambda:e}"),
        ),
        verdict(
            "expanding_gradient_is_einstein",
            is_soliton && class == Classification::Expanding && gradient_like && div_kappa_sup < SOLITON_TOL,
            einstein_sup < SOLITON_TOL,
            format!("sup |Ric^Q − λ g_Q| = {einstein_sup:e}, sup |δ_B κ_B| = {div_kappa_sup:e}"),
        ),
    ];
    Ok(ConsistencyReport { soliton, tautness, verdicts })
}
