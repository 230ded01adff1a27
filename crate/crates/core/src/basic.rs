//! Basic forms and the basic differential operators.
//!
//! Forms carry their components in the transverse coframe. Operators return
//! new forms whose components are evaluated lazily through [`Local`] at the
//! requested jet order plus the differentiation depth of the operator.

use std::sync::Arc;

use rayon::prelude::*;

use crate::chart::{Chart, QuadratureRule, ScalarField};
use crate::error::{Error, Result};
use crate::frame::MetricField;
use crate::jet::{Jet, MAX_ORDER};
use crate::local::Local;

/// A basic function (degree 0) or basic 1-form (degree 1).
#[derive(Debug, Clone)]
pub struct BasicForm {
    degree: usize,
    components: Vec<ScalarField>,
}

impl BasicForm {
    pub fn function(f: ScalarField) -> Self {
        BasicForm { degree: 0, components: vec![f] }
    }

    pub fn one(components: Vec<ScalarField>) -> Self {
        BasicForm { degree: 1, components }
    }

    pub fn zero(chart: &Arc<Chart>, degree: usize, q: usize) -> Self {
        let len = if degree == 0 { 1 } else { q };
        BasicForm { degree, components: vec![ScalarField::constant(chart, 0.0); len] }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &ScalarField {
        &self.components[i]
    }

    pub fn as_function(&self) -> Result<&ScalarField> {
        if self.degree != 0 {
            return Err(Error::Usage(format!("expected a basic function, got degree {}", self.degree)));
        }
        Ok(&self.components[0])
    }

    pub fn jets(&self, point: &[f64], order: usize) -> Result<Vec<Jet>> {
        self.components.iter().map(|c| c.jet(point, order)).collect()
    }

    pub fn evaluate(&self, point: &[f64]) -> Result<Vec<f64>> {
        self.components.iter().map(|c| c.evaluate(point)).collect()
    }

    pub fn scale(&self, s: f64) -> Self {
        BasicForm { degree: self.degree, components: self.components.iter().map(|c| c.scale(s)).collect() }
    }

    pub fn add(&self, other: &BasicForm) -> Result<Self> {
        if self.degree != other.degree || self.components.len() != other.components.len() {
            return Err(Error::Usage("adding forms of different shape".into()));
        }
        Ok(BasicForm {
            degree: self.degree,
            components: self.components.iter().zip(&other.components).map(|(a, b)| a.add(b)).collect(),
        })
    }

    /// Largest leaf-directional derivative of any component over the rule's nodes.
    pub fn leaf_residual(&self, metric: &MetricField, rule: &QuadratureRule) -> Result<f64> {
        let p = metric.frame().p();
        sup_over(rule, |x| {
            let loc = Local::new(metric, x, 1)?;
            let mut m: f64 = 0.0;
            for c in &self.components {
                let j = c.jet(x, 1)?;
                for a in 0..p {
                    m = m.max(loc.d(a, &j).value().abs());
                }
            }
            Ok(m)
        })
    }
}

/// A basic symmetric covariant 2-tensor in the transverse coframe.
#[derive(Debug, Clone)]
pub struct BasicTensor {
    q: usize,
    entries: Vec<ScalarField>,
}

impl BasicTensor {
    /// Builds from the upper triangle `h[a][b]`, `b ≥ a`; lower entries are ignored.
    pub fn symmetric(entries: Vec<Vec<ScalarField>>) -> Result<Self> {
        let q = entries.len();
        if entries.iter().any(|r| r.len() != q) {
            return Err(Error::Usage("tensor must be square".into()));
        }
        let mut flat = Vec::with_capacity(q * q);
        for a in 0..q {
            for b in 0..q {
                flat.push(if b >= a { entries[a][b].clone() } else { entries[b][a].clone() });
            }
        }
        Ok(BasicTensor { q, entries: flat })
    }

    pub fn zero(chart: &Arc<Chart>, q: usize) -> Self {
        BasicTensor { q, entries: vec![ScalarField::constant(chart, 0.0); q * q] }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn entry(&self, a: usize, b: usize) -> &ScalarField {
        &self.entries[a * self.q + b]
    }

    pub fn jets(&self, point: &[f64], order: usize) -> Result<Vec<Jet>> {
        self.entries.iter().map(|c| c.jet(point, order)).collect()
    }

    pub fn scale(&self, s: f64) -> Self {
        BasicTensor { q: self.q, entries: self.entries.iter().map(|c| c.scale(s)).collect() }
    }

    /// The metric g_Q + t h.
    pub fn perturb(&self, metric: &MetricField, t: f64) -> Result<MetricField> {
        let q = self.q;
        let p = metric.frame().p();
        let block = (0..q)
            .map(|a| (0..q).map(|b| metric.entry(p + a, p + b).add(&self.entry(a, b).scale(t))).collect())
            .collect();
        metric.with_transverse_block(block)
    }
}

/// Maximum of a pointwise quantity over the nodes of a rule.
pub fn sup_over<F>(rule: &QuadratureRule, f: F) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let vals: Vec<f64> = rule.nodes().par_iter().map(|n| f(&n.point)).collect::<Result<_>>()?;
    Ok(vals.into_iter().fold(0.0, f64::max))
}

/// ∫ f dV with the metric volume element.
pub fn integrate_volume<F>(metric: &MetricField, rule: &QuadratureRule, f: F) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    rule.sum(|n| Ok(f(&n.point)? * metric.density(&n.point)?))
}

type Op = dyn Fn(&Local, &[Vec<Jet>]) -> Vec<Jet> + Send + Sync;

/// Lifts a pointwise operator of the given differentiation depth to a form.
fn lift(metric: &Arc<MetricField>, inputs: Vec<BasicForm>, depth: usize, degree: usize, op: Arc<Op>) -> BasicForm {
    let q = metric.frame().q();
    let len = if degree == 0 { 1 } else { q };
    let chart = metric.chart().clone();
    let components = (0..len)
        .map(|k| {
            let metric = metric.clone();
            let inputs = inputs.clone();
            let op = op.clone();
            ScalarField::derived(&chart, move |x, order| {
                let total = (order + depth).max(1);
                if total > MAX_ORDER {
                    return Err(Error::Unsupported(format!("jet order {total} exceeds {MAX_ORDER}")));
                }
                let loc = Local::new(&metric, x, total)?;
                let jets = inputs.iter().map(|f| f.jets(x, total)).collect::<Result<Vec<_>>>()?;
                Ok(op(&loc, &jets)[k].truncate(order))
            })
        })
        .collect();
    BasicForm { degree, components }
}

fn expect_degree(form: &BasicForm, degree: usize) -> Result<()> {
    if form.degree != degree {
        return Err(Error::Usage(format!("expected a degree {degree} form, got degree {}", form.degree)));
    }
    Ok(())
}

/// Basic exterior derivative of a function; of a 1-form only the closedness
/// residual is meaningful and is exposed through [`closedness_residual`].
pub fn d_b(metric: &Arc<MetricField>, form: &BasicForm) -> Result<BasicForm> {
    match form.degree {
        0 => Ok(lift(metric, vec![form.clone()], 1, 1, Arc::new(|l, j| l.df(&j[0][0])))),
        1 => Err(Error::Unsupported("d_B of a 1-form is only available as a closedness residual".into())),
        d => Err(Error::Unsupported(format!("d_B on degree {d}"))),
    }
}

/// sup |d_B η| over the rule.
pub fn closedness_residual(metric: &MetricField, form: &BasicForm, rule: &QuadratureRule) -> Result<f64> {
    expect_degree(form, 1)?;
    sup_over(rule, |x| {
        let loc = Local::new(metric, x, 1)?;
        let eta = form.jets(x, 1)?;
        Ok(loc.d1(&eta).iter().map(|v| v.value().abs()).fold(0.0, f64::max))
    })
}

pub fn delta_t(metric: &Arc<MetricField>, form: &BasicForm) -> Result<BasicForm> {
    expect_degree(form, 1)?;
    Ok(lift(metric, vec![form.clone()], 1, 0, Arc::new(|l, j| vec![l.delta_t1(&j[0])])))
}

pub fn delta_b(metric: &Arc<MetricField>, form: &BasicForm) -> Result<BasicForm> {
    expect_degree(form, 1)?;
    Ok(lift(metric, vec![form.clone()], 1, 0, Arc::new(|l, j| vec![l.delta_b1(&j[0], &l.tau())])))
}

pub fn basic_laplacian(metric: &Arc<MetricField>, f: &BasicForm) -> Result<BasicForm> {
    expect_degree(f, 0)?;
    Ok(lift(metric, vec![f.clone()], 2, 0, Arc::new(|l, j| vec![l.laplacian0(&j[0][0], &l.tau())])))
}

/// Δ_B on 1-forms, d_B δ_B + δ_B d_B.
pub fn basic_laplacian_one(metric: &Arc<MetricField>, eta: &BasicForm) -> Result<BasicForm> {
    expect_degree(eta, 1)?;
    Ok(lift(metric, vec![eta.clone()], 2, 1, Arc::new(|l, j| l.laplacian1(&j[0], &l.tau()))))
}

pub fn rough_laplacian(metric: &Arc<MetricField>, eta: &BasicForm) -> Result<BasicForm> {
    expect_degree(eta, 1)?;
    Ok(lift(metric, vec![eta.clone()], 2, 1, Arc::new(|l, j| l.rough_laplacian(&j[0], &l.tau()))))
}

pub fn a_tau(metric: &Arc<MetricField>, eta: &BasicForm) -> Result<BasicForm> {
    expect_degree(eta, 1)?;
    Ok(lift(metric, vec![eta.clone()], 1, 1, Arc::new(|l, j| l.a_tau(&j[0], &l.tau()))))
}

/// Ric^Q · η.
pub fn ricci_action(metric: &Arc<MetricField>, eta: &BasicForm) -> Result<BasicForm> {
    expect_degree(eta, 1)?;
    Ok(lift(metric, vec![eta.clone()], 2, 1, Arc::new(|l, j| l.ric_action(&l.ricci_q(), &j[0]))))
}

/// Pointwise Weitzenböck defect Δ_B η − ∇*∇η − Ric^Q·η − A_τ η.
pub fn weitzenbock_defect(loc: &Local, eta: &[Jet]) -> Vec<f64> {
    let tau = loc.tau();
    let lap = loc.laplacian1(eta, &tau);
    let rough = loc.rough_laplacian(eta, &tau);
    let ric = loc.ric_action(&loc.ricci_q(), eta);
    let a = loc.a_tau(eta, &tau);
    (0..loc.q).map(|c| (lap[c] - rough[c] - ric[c] - a[c]).value()).collect()
}

/// Pointwise Bochner defect
/// −½Δ_B|η|² − |∇η|² − Ric^Q(η♯,η♯) − (A_τ η)(η♯) + (Δ_B η)(η♯).
pub fn bochner_defect(loc: &Local, eta: &[Jet]) -> f64 {
    let tau = loc.tau();
    let norm2 = loc.dot(eta, eta);
    let nq = loc.nabla1_q(eta);
    let grad2 = loc.dot2(&nq, &nq);
    let ric = loc.ric_action(&loc.ricci_q(), eta);
    let a = loc.a_tau(eta, &tau);
    let lap = loc.laplacian1(eta, &tau);
    let v = -loc.laplacian0(&norm2, &tau) * 0.5 - grad2 - loc.dot(&ric, eta) - loc.dot(&a, eta) + loc.dot(&lap, eta);
    v.value()
}

/// Pointwise defect of ⟨∇*∇η, η⟩ = ½Δ_B|η|² + |∇η|².
pub fn rough_pairing_defect(loc: &Local, eta: &[Jet]) -> f64 {
    let tau = loc.tau();
    let norm2 = loc.dot(eta, eta);
    let nq = loc.nabla1_q(eta);
    let rough = loc.rough_laplacian(eta, &tau);
    (loc.dot(&rough, eta) - loc.laplacian0(&norm2, &tau) * 0.5 - loc.dot2(&nq, &nq)).value()
}

pub fn weitzenbock_residual(metric: &MetricField, eta: &BasicForm, rule: &QuadratureRule) -> Result<f64> {
    expect_degree(eta, 1)?;
    sup_over(rule, |x| {
        let loc = Local::new(metric, x, 2)?;
        Ok(weitzenbock_defect(&loc, &eta.jets(x, 2)?).into_iter().map(f64::abs).fold(0.0, f64::max))
    })
}

pub fn bochner_residual(metric: &MetricField, eta: &BasicForm, rule: &QuadratureRule) -> Result<f64> {
    expect_degree(eta, 1)?;
    sup_over(rule, |x| {
        let loc = Local::new(metric, x, 2)?;
        Ok(bochner_defect(&loc, &eta.jets(x, 2)?).abs())
    })
}

pub fn rough_pairing_residual(metric: &MetricField, eta: &BasicForm, rule: &QuadratureRule) -> Result<f64> {
    expect_degree(eta, 1)?;
    sup_over(rule, |x| {
        let loc = Local::new(metric, x, 2)?;
        Ok(rough_pairing_defect(&loc, &eta.jets(x, 2)?).abs())
    })
}

/// ∫ g_Q(d_B f, η) dV − ∫ f δ_B η dV.
pub fn adjointness_gap(metric: &MetricField, f: &BasicForm, eta: &BasicForm, rule: &QuadratureRule) -> Result<f64> {
    expect_degree(f, 0)?;
    expect_degree(eta, 1)?;
    let lhs = integrate_volume(metric, rule, |x| {
        let loc = Local::new(metric, x, 1)?;
        let fj = f.jets(x, 1)?;
        Ok(loc.dot(&loc.df(&fj[0]), &eta.jets(x, 0)?).value())
    })?;
    let rhs = integrate_volume(metric, rule, |x| {
        let loc = Local::new(metric, x, 1)?;
        Ok(f.jets(x, 0)?[0].value() * loc.delta_b1(&eta.jets(x, 1)?, &loc.tau()).value())
    })?;
    Ok((lhs - rhs).abs())
}

/// One line of an identity report.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityGap {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
}

impl IdentityGap {
    pub fn gap(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

/// Inputs to the integrated identities: a basic function, a basic 1-form, a
/// symmetric basic 2-tensor and a second basic function used as df/dt.
#[derive(Debug, Clone)]
pub struct IdentityInputs {
    pub f: BasicForm,
    pub eta: BasicForm,
    pub h: BasicTensor,
    pub f_dot: BasicForm,
}

/// Integrated identities of weighted transverse calculus, each as two sides.
pub fn integration_identity_suite(
    metric: &MetricField,
    inputs: &IdentityInputs,
    rule: &QuadratureRule,
) -> Result<Vec<IdentityGap>> {
    let IdentityInputs { f, eta, h, f_dot } = inputs;
    expect_degree(f, 0)?;
    expect_degree(eta, 1)?;
    expect_degree(f_dot, 0)?;
    let q = metric.frame().q();
    // per-node integrands, each multiplied by dV later
    let rows: Vec<[f64; 10]> = rule
        .nodes()
        .par_iter()
        .map(|n| {
            let x = &n.point;
            let w = n.weight * metric.density(x)?;
            let loc = Local::new(metric, x, 2)?;
            let tau = loc.tau();
            let kappa = loc.kappa();
            let fj = f.jets(x, 2)?[0];
            let ef = (-fj).exp();
            let df = loc.df(&fj);
            let hj = h.jets(x, 2)?;
            let fd = f_dot.jets(x, 1)?[0];
            let eta_j = eta.jets(x, 1)?;
            let lap_f = loc.laplacian0(&fj, &tau);
            let grad_f2 = loc.dot(&df, &df);
            let weight = ef.value();

            // divergence identity
            let div_t = loc.delta_t1(&eta_j).value();
            let i_tau: f64 = (0..q).map(|a| (eta_j[a] * tau[a]).value()).sum();

            // δ_T δ_T h against its weighted integration by parts
            let dth = loc.delta_t2(&hj);
            let ddh = loc.delta_t1(&dth).value();
            let drift: Vec<Jet> = df.iter().zip(&kappa).map(|(a, b)| *a + *b).collect();
            let hess = loc.nabla1_q(&drift);
            let hsym: Vec<Jet> = (0..q * q).map(|k| hj[k].truncate(0)).collect();
            let pair = loc.dot2(&hsym, &hess).value();
            let xs = loc.sharp(&drift);
            let mut hxx = 0.0;
            for a in 0..q {
                for b in 0..q {
                    hxx += (hsym[a * q + b] * xs[a] * xs[b]).value();
                }
            }

            // Δ_B tr h
            let tr = loc.trace2(&hj);
            let lap_tr = loc.laplacian0(&tr, &tau).value();
            let tr0 = tr.value();

            // ⟨∇f, ∇ ḟ⟩
            let dfd = loc.df(&fd);
            let cross = loc.dot(&df, &dfd).value();

            // Hessian of e^{-f} and Δ_B e^{-f}
            let hess_e = loc.hessian(&ef);
            let hess_f = loc.hessian(&fj);
            let mut hess_gap: f64 = 0.0;
            for a in 0..q {
                for b in 0..q {
                    let rhs = (-hess_f[a * q + b] + df[a].truncate(0) * df[b].truncate(0)) * weight;
                    hess_gap = hess_gap.max((hess_e[a * q + b] - rhs).value().abs());
                }
            }
            let lap_e = loc.laplacian0(&ef, &tau).value();
            let lap_e_rhs = -(lap_f.value() + grad_f2.value()) * weight;

            Ok([
                w * div_t,
                -w * i_tau,
                w * ddh * weight,
                w * (-pair + hxx) * weight,
                w * lap_tr * weight,
                -w * tr0 * (lap_f.value() + grad_f2.value()) * weight,
                w * cross * weight,
                w * fd.value() * (lap_f.value() + grad_f2.value()) * weight,
                hess_gap,
                (lap_e - lap_e_rhs).abs(),
            ])
        })
        .collect::<Result<_>>()?;
    let sum = |k: usize| rows.iter().map(|r| r[k]).sum::<f64>();
    let max = |k: usize| rows.iter().map(|r| r[k]).fold(0.0, f64::max);
    Ok(vec![
        IdentityGap { name: "divergence".into(), lhs: sum(0), rhs: sum(1) },
        IdentityGap { name: "double_divergence".into(), lhs: sum(2), rhs: sum(3) },
        IdentityGap { name: "laplacian_of_trace".into(), lhs: sum(4), rhs: sum(5) },
        IdentityGap { name: "gradient_pairing".into(), lhs: sum(6), rhs: sum(7) },
        IdentityGap { name: "hessian_of_exponential".into(), lhs: max(8), rhs: 0.0 },
        IdentityGap { name: "laplacian_of_exponential".into(), lhs: max(9), rhs: 0.0 },
    ])
}

/// Pointwise defect of d/dt|∇f + τ|² = 2g_Q(∇ḟ, ∇f + τ) − ġ_Q(∇f + τ, ∇f + τ)
/// along g_Q + t h, f + t ḟ, by central differences with Richardson extrapolation.
pub fn drift_norm_variation_defect(
    metric: &MetricField,
    inputs: &IdentityInputs,
    point: &[f64],
) -> Result<f64> {
    let q = metric.frame().q();
    let f = inputs.f.as_function()?;
    let fd = inputs.f_dot.as_function()?;
    let norm = |t: f64| -> Result<f64> {
        let m = inputs.h.perturb(metric, t)?;
        let loc = Local::new(&m, point, 1)?;
        let fj = f.jet(point, 1)? + fd.jet(point, 1)?.scale(t);
        let drift: Vec<Jet> = loc.df(&fj).iter().zip(loc.kappa()).map(|(a, b)| *a + b).collect();
        Ok(loc.dot(&drift, &drift).value())
    };
    let cd = |s: f64| -> Result<f64> { Ok((norm(s)? - norm(-s)?) / (2.0 * s)) };
    let lhs = (100.0 * cd(1e-4)? - cd(1e-3)?) / 99.0;
    let loc = Local::new(metric, point, 1)?;
    let fj = f.jet(point, 1)?;
    let drift: Vec<Jet> = loc.df(&fj).iter().zip(loc.kappa()).map(|(a, b)| *a + b).collect();
    let dfd = loc.df(&fd.jet(point, 1)?);
    let xs = loc.sharp(&drift);
    let hj = inputs.h.jets(point, 0)?;
    let mut hxx = 0.0;
    for a in 0..q {
        for b in 0..q {
            hxx += hj[a * q + b].value() * xs[a].value() * xs[b].value();
        }
    }
    let rhs = 2.0 * loc.dot(&dfd, &drift).value() - hxx;
    Ok((lhs - rhs).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::scenario::Scenario;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn cos_t(s: &Scenario) -> BasicForm {
        BasicForm::function(ScalarField::analytic(s.chart(), (Expr::var(2) * (2.0 * PI)).cos()))
    }

    #[test]
    fn exterior_derivative_of_cosine() {
        let s = Scenario::carriere_default();
        let df = d_b(s.metric(), &cos_t(&s)).unwrap();
        for t in [0.1, 0.35, 0.8] {
            let v = df.evaluate(&[0.2, 0.4, t]).unwrap();
            assert_relative_eq!(v[0], 0.0, epsilon = 1e-14);
            assert_relative_eq!(v[1], -2.0 * PI * (2.0 * PI * t).sin(), epsilon = 1e-12);
        }
        let c = BasicForm::function(ScalarField::constant(s.chart(), 3.0));
        let dc = d_b(s.metric(), &c).unwrap();
        assert_eq!(dc.evaluate(&[0.1, 0.1, 0.1]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn carriere_divergences_of_mean_curvature_form() {
        let s = Scenario::carriere_default();
        let l = s.log_rho().unwrap();
        let kappa = BasicForm::one(vec![ScalarField::constant(s.chart(), 0.0), ScalarField::constant(s.chart(), -l)]);
        let p = [0.3, 0.2, 0.7];
        let dt = delta_t(s.metric(), &kappa).unwrap().evaluate(&p).unwrap()[0];
        let db = delta_b(s.metric(), &kappa).unwrap().evaluate(&p).unwrap()[0];
        assert_relative_eq!(dt, -l * l, epsilon = 1e-12);
        assert_relative_eq!(db, 0.0, epsilon = 1e-12);
        let rule = s.check_rule(8).unwrap();
        assert!(closedness_residual(s.metric(), &kappa, &rule).unwrap() < 1e-12);
    }

    #[test]
    fn flat_torus_laplacian_of_cosine() {
        let s = Scenario::flat_torus();
        let f = cos_t(&s);
        let lap = basic_laplacian(s.metric(), &f).unwrap();
        let dt = delta_t(s.metric(), &d_b(s.metric(), &f).unwrap()).unwrap();
        for t in [0.0, 0.3, 0.77] {
            let p = [0.5, 0.5, t];
            let expect = 4.0 * PI * PI * (2.0 * PI * t).cos();
            assert_relative_eq!(lap.evaluate(&p).unwrap()[0], expect, epsilon = 1e-10);
            assert_relative_eq!(dt.evaluate(&p).unwrap()[0], expect, epsilon = 1e-10);
        }
    }

    #[test]
    fn rough_laplacian_of_e2_flat_on_carriere() {
        // η = e₂♭: ∇_{e2}η = −L e₃♭, ∇_{e2}∇_{e2}η = −L² e₂♭, ∇_τ η = 0,
        // so ∇*∇η = L² e₂♭.
        let s = Scenario::carriere_default();
        let l = s.log_rho().unwrap();
        let eta = BasicForm::one(vec![ScalarField::constant(s.chart(), 1.0), ScalarField::constant(s.chart(), 0.0)]);
        let v = rough_laplacian(s.metric(), &eta).unwrap().evaluate(&[0.1, 0.9, 0.4]).unwrap();
        assert_relative_eq!(v[0], l * l, epsilon = 1e-12);
        assert_relative_eq!(v[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn a_tau_of_dt_on_carriere() {
        // τ = −L e₃ and dt = e₃♭: L_τ dt = d(dt(τ)) = 0 and ∇_τ dt = 0.
        let s = Scenario::carriere_default();
        let dt = BasicForm::one(vec![ScalarField::constant(s.chart(), 0.0), ScalarField::constant(s.chart(), 1.0)]);
        let v = a_tau(s.metric(), &dt).unwrap().evaluate(&[0.1, 0.2, 0.3]).unwrap();
        assert_relative_eq!(v[0], 0.0, epsilon = 1e-13);
        assert_relative_eq!(v[1], 0.0, epsilon = 1e-13);
        // on e₂♭: [τ, e₂] = −L² e₂ gives L_τ e₂♭ = L² e₂♭, and ∇_τ e₂♭ = 0
        let l = s.log_rho().unwrap();
        let e2 = BasicForm::one(vec![ScalarField::constant(s.chart(), 1.0), ScalarField::constant(s.chart(), 0.0)]);
        let v = a_tau(s.metric(), &e2).unwrap().evaluate(&[0.1, 0.2, 0.3]).unwrap();
        assert_relative_eq!(v[0], l * l, epsilon = 1e-12);
    }

    #[test]
    fn weitzenbock_and_bochner_on_random_forms() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for s in [Scenario::flat_torus(), Scenario::product_sphere(), Scenario::carriere_default()] {
            let rule = s.check_rule(5).unwrap();
            for _ in 0..3 {
                let eta = s.random_one_form(&mut rng);
                let w = weitzenbock_residual(s.metric(), &eta, &rule).unwrap();
                let b = bochner_residual(s.metric(), &eta, &rule).unwrap();
                let r = rough_pairing_residual(s.metric(), &eta, &rule).unwrap();
                assert!(w < 1e-9 && b < 1e-9 && r < 1e-9, "{}: {w:e} {b:e} {r:e}", s.name());
            }
        }
    }
}
