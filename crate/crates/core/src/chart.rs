//! Charts, scalar fields and quadrature.
//!
//! A [`Chart`] is a coordinate box whose axes are open, periodic, or
//! twisted-periodic (periodic up to a gluing map, as for a mapping torus).
//! [`ScalarField`]s are real functions on a chart that can report jets of any
//! order up to [`MAX_ORDER`]: analytic fields differentiate exactly, sampled
//! fields fall back to finite differences.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jet::{Jet, MAX_ORDER, MAX_VARS};

/// Default first-derivative step for sampled fields.
pub const DEFAULT_FD_STEP: f64 = 1e-5;
/// Step for the five-point second-derivative stencil.
pub const SECOND_DERIVATIVE_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisKind {
    Open,
    Periodic,
    /// Periodic up to a nontrivial gluing of the other coordinates. Fields are
    /// expressed on the universal cover along this axis and are not wrapped.
    TwistedPeriodic,
}

#[derive(Debug, Clone)]
pub struct Axis {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub kind: AxisKind,
}

impl Axis {
    pub fn new(name: &str, lo: f64, hi: f64, kind: AxisKind) -> Self {
        Axis { name: name.to_string(), lo, hi, kind }
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone)]
pub struct Chart {
    axes: Vec<Axis>,
    twist_note: Option<String>,
}

impl Chart {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::Config("chart needs at least one axis".into()));
        }
        for a in &axes {
            if !(a.hi - a.lo > 0.0) || !a.lo.is_finite() || !a.hi.is_finite() {
                return Err(Error::Config(format!("axis `{}` has empty interval [{}, {}]", a.name, a.lo, a.hi)));
            }
        }
        Ok(Chart { axes, twist_note: None })
    }

    pub fn with_twist_note(mut self, note: &str) -> Self {
        self.twist_note = Some(note.to_string());
        self
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, i: usize) -> &Axis {
        &self.axes[i]
    }

    pub fn coord_names(&self) -> Vec<&str> {
        self.axes.iter().map(|a| a.name.as_str()).collect()
    }

    pub fn twist_note(&self) -> Option<&str> {
        self.twist_note.as_deref()
    }

    /// Coordinate volume of the box.
    pub fn box_volume(&self) -> f64 {
        self.axes.iter().map(Axis::length).product()
    }

    /// Reduces periodic coordinates into the fundamental interval and checks
    /// open coordinates against the domain.
    pub fn wrap(&self, point: &[f64]) -> Result<Vec<f64>> {
        if point.len() != self.dim() {
            return Err(Error::Usage(format!("point has {} coordinates, chart has {}", point.len(), self.dim())));
        }
        let mut out = point.to_vec();
        for (x, a) in out.iter_mut().zip(&self.axes) {
            if !x.is_finite() {
                return Err(Error::Domain { axis: a.name.clone(), value: *x, lo: a.lo, hi: a.hi });
            }
            match a.kind {
                AxisKind::Periodic => {
                    let len = a.length();
                    let r = (*x - a.lo).rem_euclid(len);
                    *x = a.lo + if r >= len { 0.0 } else { r };
                }
                AxisKind::TwistedPeriodic => {}
                AxisKind::Open => {
                    let slack = 1e-12 * a.length();
                    if *x < a.lo - slack || *x > a.hi + slack {
                        return Err(Error::Domain { axis: a.name.clone(), value: *x, lo: a.lo, hi: a.hi });
                    }
                }
            }
        }
        Ok(out)
    }
}

type JetFn = dyn Fn(&[f64], usize) -> Result<Jet> + Send + Sync;
type EvalFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

#[derive(Clone)]
enum Source {
    Analytic(Expr),
    /// Exact jets computed from other fields.
    Derived(Arc<JetFn>),
    Sampled { eval: Arc<EvalFn>, grad: Option<Arc<GradFn>> },
}

/// A real-valued function on a chart.
#[derive(Clone)]
pub struct ScalarField {
    chart: Arc<Chart>,
    source: Source,
    fd_step: f64,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.source {
            Source::Analytic(e) => write!(f, "ScalarField({e:?})"),
            Source::Derived(_) => write!(f, "ScalarField(<derived>)"),
            Source::Sampled { .. } => write!(f, "ScalarField(<sampled>)"),
        }
    }
}

impl ScalarField {
    pub fn analytic(chart: &Arc<Chart>, expr: Expr) -> Self {
        if let Some(v) = expr.max_var() {
            assert!(v < chart.dim(), "expression uses coordinate {v} on a {}-dimensional chart", chart.dim());
        }
        ScalarField { chart: chart.clone(), source: Source::Analytic(expr), fd_step: DEFAULT_FD_STEP }
    }

    pub fn constant(chart: &Arc<Chart>, v: f64) -> Self {
        Self::analytic(chart, Expr::constant(v))
    }

    /// A field whose jets are computed by `f(point, order)`.
    pub fn derived(chart: &Arc<Chart>, f: impl Fn(&[f64], usize) -> Result<Jet> + Send + Sync + 'static) -> Self {
        ScalarField { chart: chart.clone(), source: Source::Derived(Arc::new(f)), fd_step: DEFAULT_FD_STEP }
    }

    /// A black-box field; derivatives use `grad` when given, else finite differences.
    pub fn sampled(
        chart: &Arc<Chart>,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad: Option<Arc<GradFn>>,
    ) -> Self {
        ScalarField {
            chart: chart.clone(),
            source: Source::Sampled { eval: Arc::new(eval), grad },
            fd_step: DEFAULT_FD_STEP,
        }
    }

    pub fn with_fd_step(mut self, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::Config(format!("fd_step must be positive, got {h}")));
        }
        self.fd_step = h;
        Ok(self)
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn fd_step(&self) -> f64 {
        self.fd_step
    }

    pub fn expr(&self) -> Option<&Expr> {
        match &self.source {
            Source::Analytic(e) => Some(e),
            _ => None,
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        self.expr().and_then(Expr::as_constant)
    }

    pub fn is_constant(&self) -> bool {
        self.as_constant().is_some()
    }

    pub fn has_exact_gradient(&self) -> bool {
        match &self.source {
            Source::Analytic(_) | Source::Derived(_) => true,
            Source::Sampled { grad, .. } => grad.is_some(),
        }
    }

    pub fn evaluate(&self, point: &[f64]) -> Result<f64> {
        let p = self.chart.wrap(point)?;
        Ok(self.eval_raw(&p))
    }

    fn eval_raw(&self, p: &[f64]) -> f64 {
        match &self.source {
            Source::Analytic(e) => e.eval(p),
            Source::Derived(f) => f(p, 0).map(|j| j.value()).unwrap_or(f64::NAN),
            Source::Sampled { eval, .. } => eval(p),
        }
    }

    /// Taylor jet of the field at `point` to total degree `order`.
    pub fn jet(&self, point: &[f64], order: usize) -> Result<Jet> {
        if order > MAX_ORDER {
            return Err(Error::Unsupported(format!("derivatives of order {order} (max {MAX_ORDER})")));
        }
        let p = self.chart.wrap(point)?;
        match &self.source {
            Source::Analytic(e) => {
                if p.len() > MAX_VARS {
                    return Err(Error::Unsupported(format!("jets on charts of dimension {}", p.len())));
                }
                let vars: Vec<Jet> = p.iter().enumerate().map(|(i, &x)| Jet::variable(x, i, order)).collect();
                Ok(e.eval(&vars))
            }
            Source::Derived(f) => f(&p, order),
            Source::Sampled { eval, grad } => self.fd_jet(&p, order, eval.as_ref(), grad.as_deref()),
        }
    }

    fn fd_jet(&self, p: &[f64], order: usize, eval: &EvalFn, grad: Option<&GradFn>) -> Result<Jet> {
        if order > 2 {
            return Err(Error::Unsupported(format!("finite-difference jets of order {order} (max 2)")));
        }
        let n = p.len();
        if n > MAX_VARS {
            return Err(Error::Unsupported(format!("jets on charts of dimension {n}")));
        }
        let f0 = eval(p);
        let shifted = |steps: &[(usize, f64)]| {
            let mut q = p.to_vec();
            for &(i, d) in steps {
                q[i] += d;
            }
            eval(&q)
        };
        let g: Vec<f64> = match grad {
            Some(g) => g(p),
            None => {
                let h = self.fd_step;
                (0..n).map(|i| (shifted(&[(i, h)]) - shifted(&[(i, -h)])) / (2.0 * h)).collect()
            }
        };
        let h2 = SECOND_DERIVATIVE_STEP;
        let second = |i: usize, j: usize| -> f64 {
            if i == j {
                (-shifted(&[(i, 2.0 * h2)]) + 16.0 * shifted(&[(i, h2)]) - 30.0 * f0 + 16.0 * shifted(&[(i, -h2)])
                    - shifted(&[(i, -2.0 * h2)]))
                    / (12.0 * h2 * h2)
            } else {
                let cross = |h: f64| {
                    (shifted(&[(i, h), (j, h)]) - shifted(&[(i, h), (j, -h)]) - shifted(&[(i, -h), (j, h)])
                        + shifted(&[(i, -h), (j, -h)]))
                        / (4.0 * h * h)
                };
                (4.0 * cross(h2) - cross(2.0 * h2)) / 3.0
            }
        };
        Ok(Jet::from_partials(order, |alpha| {
            let idx: Vec<usize> = (0..MAX_VARS).flat_map(|v| std::iter::repeat_n(v, alpha[v])).collect();
            match idx.as_slice() {
                [] => f0,
                [i] if *i < n => g[*i],
                [i, j] if *i < n && *j < n => second(*i, *j),
                _ => 0.0,
            }
        }))
    }

    /// Coordinate gradient: exact when available, central differences otherwise.
    pub fn gradient(&self, point: &[f64]) -> Result<Vec<f64>> {
        let p = self.chart.wrap(point)?;
        match &self.source {
            Source::Sampled { grad: Some(g), .. } => Ok(g(&p)),
            Source::Sampled { eval, grad: None } => {
                let h = self.fd_step;
                Ok((0..p.len())
                    .map(|i| {
                        let mut a = p.clone();
                        let mut b = p.clone();
                        a[i] += h;
                        b[i] -= h;
                        (eval(&a) - eval(&b)) / (2.0 * h)
                    })
                    .collect())
            }
            _ => {
                let j = self.jet(&p, 1)?;
                Ok((0..p.len()).map(|i| j.gradient_component(i)).collect())
            }
        }
    }

    /// Central-difference gradient regardless of the field's source.
    pub fn fd_gradient(&self, point: &[f64]) -> Result<Vec<f64>> {
        let p = self.chart.wrap(point)?;
        let h = self.fd_step;
        Ok((0..p.len())
            .map(|i| {
                let mut a = p.clone();
                let mut b = p.clone();
                a[i] += h;
                b[i] -= h;
                (self.eval_raw(&a) - self.eval_raw(&b)) / (2.0 * h)
            })
            .collect())
    }

    pub fn directional_derivative(&self, point: &[f64], direction: &[f64]) -> Result<f64> {
        if direction.len() != self.chart.dim() || direction.iter().any(|d| !d.is_finite()) {
            return Err(Error::Usage("direction must be a finite vector of chart dimension".into()));
        }
        let g = self.gradient(point)?;
        Ok(g.iter().zip(direction).map(|(a, b)| a * b).sum())
    }

    /// Pointwise combination of two fields, preserving exactness.
    pub fn zip_with(
        &self,
        other: &ScalarField,
        op: impl Fn(Jet, Jet) -> Jet + Send + Sync + 'static,
        expr_op: impl Fn(Expr, Expr) -> Expr,
    ) -> ScalarField {
        if let (Some(a), Some(b)) = (self.expr(), other.expr()) {
            return ScalarField::analytic(&self.chart, expr_op(a.clone(), b.clone()));
        }
        let (a, b) = (self.clone(), other.clone());
        ScalarField::derived(&self.chart, move |p, order| Ok(op(a.jet(p, order)?, b.jet(p, order)?)))
    }

    pub fn add(&self, other: &ScalarField) -> ScalarField {
        self.zip_with(other, |a, b| a + b, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> ScalarField {
        self.zip_with(other, |a, b| a - b, |a, b| a - b)
    }

    pub fn mul(&self, other: &ScalarField) -> ScalarField {
        self.zip_with(other, |a, b| a * b, |a, b| a * b)
    }

    pub fn scale(&self, s: f64) -> ScalarField {
        match self.expr() {
            Some(e) => ScalarField::analytic(&self.chart, e.clone() * s),
            None => {
                let a = self.clone();
                ScalarField::derived(&self.chart, move |p, order| Ok(a.jet(p, order)?.scale(s)))
            }
        }
    }
}

pub fn evaluate(field: &ScalarField, point: &[f64]) -> Result<f64> {
    field.evaluate(point)
}

pub fn directional_derivative(field: &ScalarField, point: &[f64], direction: &[f64]) -> Result<f64> {
    field.directional_derivative(point, direction)
}

#[derive(Debug, Clone)]
pub struct AxisRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl AxisRule {
    /// Uniform trapezoid on a periodic interval (left-endpoint nodes).
    pub fn trapezoid(lo: f64, hi: f64, n: usize) -> Self {
        let h = (hi - lo) / n as f64;
        AxisRule { nodes: (0..n).map(|k| lo + k as f64 * h).collect(), weights: vec![h; n] }
    }

    /// Gauss–Legendre nodes mapped to `[lo, hi]`.
    pub fn gauss_legendre(lo: f64, hi: f64, n: usize) -> Self {
        let (x, w) = gauss_legendre_unit(n);
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        AxisRule { nodes: x.iter().map(|t| mid + half * t).collect(), weights: w.iter().map(|v| v * half).collect() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1], ascending.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (z * p1 - p0) / (z * z - 1.0))
}

#[derive(Debug, Clone)]
pub struct QuadNode {
    pub point: Vec<f64>,
    pub index: Vec<usize>,
    pub weight: f64,
}

/// Tensor-product quadrature: trapezoid on periodic axes, Gauss–Legendre elsewhere.
///
/// Twisted axes use Gauss–Legendre because coordinate expressions there are
/// only periodic up to the gluing map.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    chart: Arc<Chart>,
    axes: Vec<AxisRule>,
    nodes: Arc<Vec<QuadNode>>,
}

impl QuadratureRule {
    pub fn new(chart: &Arc<Chart>, resolution: &[usize]) -> Result<Self> {
        if resolution.len() != chart.dim() {
            return Err(Error::Config(format!(
                "resolution has {} entries, chart has {} axes",
                resolution.len(),
                chart.dim()
            )));
        }
        if let Some((i, n)) = resolution.iter().enumerate().find(|(_, &n)| n < 2) {
            return Err(Error::Config(format!("resolution {n} < 2 on axis `{}`", chart.axis(i).name)));
        }
        let axes: Vec<AxisRule> = chart
            .axes()
            .iter()
            .zip(resolution)
            .map(|(a, &n)| match a.kind {
                AxisKind::Open | AxisKind::TwistedPeriodic => AxisRule::gauss_legendre(a.lo, a.hi, n),
                AxisKind::Periodic => AxisRule::trapezoid(a.lo, a.hi, n),
            })
            .collect();
        let total: usize = resolution.iter().product();
        let mut nodes = Vec::with_capacity(total);
        let mut idx = vec![0usize; axes.len()];
        for _ in 0..total {
            let point = idx.iter().zip(&axes).map(|(&i, r)| r.nodes[i]).collect();
            let weight = idx.iter().zip(&axes).map(|(&i, r)| r.weights[i]).product();
            nodes.push(QuadNode { point, index: idx.clone(), weight });
            for d in (0..axes.len()).rev() {
                idx[d] += 1;
                if idx[d] < axes[d].len() {
                    break;
                }
                idx[d] = 0;
            }
        }
        Ok(QuadratureRule { chart: chart.clone(), axes, nodes: Arc::new(nodes) })
    }

    pub fn uniform(chart: &Arc<Chart>, n: usize) -> Result<Self> {
        Self::new(chart, &vec![n; chart.dim()])
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn axis_rule(&self, i: usize) -> &AxisRule {
        &self.axes[i]
    }

    pub fn resolution(&self) -> Vec<usize> {
        self.axes.iter().map(AxisRule::len).collect()
    }

    pub fn nodes(&self) -> &[QuadNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Weighted sum of `f` over the nodes. Evaluation runs in parallel; the
    /// reduction is sequential in node order so results are reproducible.
    pub fn sum<F>(&self, f: F) -> Result<f64>
    where
        F: Fn(&QuadNode) -> Result<f64> + Sync,
    {
        let vals: Vec<f64> = self.nodes.par_iter().map(|n| f(n).map(|v| v * n.weight)).collect::<Result<_>>()?;
        Ok(vals.iter().sum())
    }
}

/// Coordinate integral of `field` over the chart box.
pub fn integrate(field: &ScalarField, rule: &QuadratureRule) -> Result<f64> {
    if !Arc::ptr_eq(field.chart(), rule.chart()) && field.chart().dim() != rule.chart().dim() {
        return Err(Error::Usage("field and quadrature rule live on different charts".into()));
    }
    rule.sum(|n| field.evaluate(&n.point))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn unit_periodic(dim: usize) -> Arc<Chart> {
        let names = ["x", "y", "t"];
        Arc::new(Chart::new((0..dim).map(|i| Axis::new(names[i], 0.0, 1.0, AxisKind::Periodic)).collect()).unwrap())
    }

    fn rho() -> f64 {
        (3.0 + 5f64.sqrt()) / 2.0
    }

    #[test]
    fn evaluate_examples() {
        let c = unit_periodic(3);
        let three = ScalarField::constant(&c, 3.0);
        assert_eq!(three.evaluate(&[0.1, 0.9, 0.4]).unwrap(), 3.0);
        let t = Expr::var(2);
        let f = ScalarField::analytic(&c, (t * (-2.0 * rho().ln())).exp());
        assert_relative_eq!(f.evaluate(&[0.0, 0.0, 0.0]).unwrap(), 1.0);
        assert_relative_eq!(f.evaluate(&[0.0, 0.0, 0.5]).unwrap(), 0.381_966_011_250_105_1, epsilon = 1e-12);
    }

    #[test]
    fn derivative_examples() {
        let c = unit_periodic(3);
        let t = Expr::var(2);
        let f = ScalarField::analytic(&c, (t * (-2.0 * rho().ln())).exp());
        let d = f.directional_derivative(&[0.2, 0.3, 0.0], &[0.0, 0.0, 1.0]).unwrap();
        assert_relative_eq!(d, -1.924_847_300_238_413, epsilon = 1e-12);
        let k = ScalarField::constant(&c, 5.0);
        assert_eq!(k.directional_derivative(&[0.1, 0.2, 0.3], &[1.0, -2.0, 3.0]).unwrap(), 0.0);
        let s = ScalarField::analytic(&c, (Expr::var(1) * (2.0 * PI)).sin());
        assert_relative_eq!(s.directional_derivative(&[0.0; 3], &[0.0, 1.0, 0.0]).unwrap(), 2.0 * PI, epsilon = 1e-12);
    }

    #[test]
    fn open_axis_rejects_outside_points() {
        let c = Arc::new(Chart::new(vec![Axis::new("theta", 0.0, PI, AxisKind::Open)]).unwrap());
        let f = ScalarField::constant(&c, 1.0);
        assert!(matches!(f.evaluate(&[4.0]), Err(Error::Domain { .. })));
        assert!(f.evaluate(&[1.0]).is_ok());
    }

    #[test]
    fn periodic_wrap_is_exact() {
        let c = unit_periodic(2);
        let f = ScalarField::analytic(&c, (Expr::var(0) * 3.0).sin() * Expr::var(1));
        let a = f.evaluate(&[0.3, 0.25]).unwrap();
        let b = f.evaluate(&[1.3, -0.75]).unwrap();
        assert_relative_eq!(a, b, epsilon = 1e-15);
    }

    #[test]
    fn integrate_examples() {
        let c = unit_periodic(3);
        let rule = QuadratureRule::uniform(&c, 4).unwrap();
        assert_relative_eq!(integrate(&ScalarField::constant(&c, 1.0), &rule).unwrap(), 1.0, epsilon = 1e-12);

        let c1 = unit_periodic(1);
        let s = ScalarField::analytic(&c1, (Expr::var(0) * (2.0 * PI)).sin().powf(2.0));
        let r8 = QuadratureRule::uniform(&c1, 8).unwrap();
        assert_relative_eq!(integrate(&s, &r8).unwrap(), 0.5, epsilon = 1e-12);

        // ρ^{-2t} + ρ^{2t} on t ∈ [0, 1]
        let ct = Arc::new(Chart::new(vec![Axis::new("t", 0.0, 1.0, AxisKind::TwistedPeriodic)]).unwrap());
        let l = rho().ln();
        let f = ScalarField::analytic(&ct, (Expr::var(0) * (-2.0 * l)).exp() + (Expr::var(0) * (2.0 * l)).exp());
        let exact = (rho().powi(2) - rho().powi(-2)) / (2.0 * l);
        let r = QuadratureRule::uniform(&ct, 256).unwrap();
        assert_relative_eq!(integrate(&f, &r).unwrap(), exact, epsilon = 1e-6);
        assert_relative_eq!(exact, 3.485_057_714, epsilon = 1e-8);
    }

    #[test]
    fn resolution_below_two_is_rejected() {
        let c = unit_periodic(2);
        assert!(matches!(QuadratureRule::new(&c, &[1, 8]), Err(Error::Config(_))));
    }

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre_unit(6);
        let int: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert_relative_eq!(int, 2.0 / 11.0, epsilon = 1e-14);
        assert_relative_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn sampled_fields_use_finite_differences() {
        let c = unit_periodic(2);
        let f = ScalarField::sampled(&c, |p| (p[0] * 2.0).sin() * p[1].cos(), None);
        assert!(!f.has_exact_gradient());
        let j = f.jet(&[0.3, 0.4], 2).unwrap();
        assert_relative_eq!(j.partial([1, 0, 0]), 2.0 * 0.6f64.cos() * 0.4f64.cos(), epsilon = 1e-9);
        assert_relative_eq!(j.partial([1, 1, 0]), -2.0 * 0.6f64.cos() * 0.4f64.sin(), epsilon = 1e-9);
        assert_relative_eq!(j.partial([2, 0, 0]), -4.0 * 0.6f64.sin() * 0.4f64.cos(), epsilon = 1e-8);
        assert!(f.jet(&[0.3, 0.4], 3).is_err());
    }
}
