//! Built-in foliated manifolds: the flat 3-torus, S¹ × S²(1) and the Carrière
//! mapping torus T³_A.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;

use crate::basic::BasicForm;
use crate::chart::{Axis, AxisKind, Chart, QuadratureRule, ScalarField};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::frame::{Cycle, FramePresentation, MetricField, Mutation, VectorField};
use crate::grid::BasicGrid;

pub const DEFAULT_RESOLUTION: usize = 128;
/// Resolution of axes the basic data does not depend on.
pub const LEAF_RESOLUTION: usize = 2;
/// Per-axis cap on basic grids with two or more basic coordinates.
pub const MULTI_AXIS_CAP: usize = 32;

/// Provenance of a reference value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Paper,
    Derived,
    Trivial,
}

impl Provenance {
    pub fn tag(self) -> &'static str {
        match self {
            Provenance::Paper => "[PAPER]",
            Provenance::Derived => "[DERIVED]",
            Provenance::Trivial => "[TRIVIAL]",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Golden {
    pub name: String,
    pub value: f64,
    pub provenance: Provenance,
    pub note: String,
}

fn golden(name: &str, value: f64, provenance: Provenance, note: &str) -> Golden {
    Golden { name: name.into(), value, provenance, note: note.into() }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScenarioKind {
    FlatTorus,
    ProductSphere,
    Carriere { a: [[i64; 2]; 2], rho: f64 },
}

#[derive(Debug, Clone)]
pub struct Scenario {
    name: String,
    kind: ScenarioKind,
    metric: Arc<MetricField>,
    basic_axes: Vec<usize>,
    resolution: usize,
    goldens: Vec<Golden>,
}

impl Scenario {
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "flat_torus" => Ok(Self::flat_torus()),
            "product_sphere" => Ok(Self::product_sphere()),
            "carriere" => Ok(Self::carriere_default()),
            other => Err(Error::Config(format!(
                "unknown scenario `{other}` (expected flat_torus, product_sphere or carriere)"
            ))),
        }
    }

    pub fn flat_torus() -> Self {
        let chart = Arc::new(
            Chart::new(vec![
                Axis::new("x", 0.0, 1.0, AxisKind::Periodic),
                Axis::new("y", 0.0, 1.0, AxisKind::Periodic),
                Axis::new("t", 0.0, 1.0, AxisKind::Periodic),
            ])
            .expect("valid chart"),
        );
        let frame = (0..3).map(|k| VectorField::coordinate(&chart, k)).collect();
        let frame = FramePresentation::new(&chart, frame, 1).expect("valid frame").with_cycles(vec![
            Cycle::new("y-loop", vec![0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]),
            Cycle::new("t-loop", vec![0.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]),
        ]);
        let metric = Arc::new(MetricField::orthonormal(&Arc::new(frame)));
        let t = Provenance::Trivial;
        Scenario {
            name: "flat_torus".into(),
            kind: ScenarioKind::FlatTorus,
            metric,
            basic_axes: vec![1, 2],
            resolution: DEFAULT_RESOLUTION,
            goldens: vec![
                golden("ricci_q_eigenvalue", 0.0, t, "flat metric"),
                golden("scalar_q", 0.0, t, "flat metric"),
                golden("tau_b_norm", 0.0, t, "coordinate leaves are geodesic"),
                golden("lambda_q", 0.0, t, "zero potential"),
                golden("soliton_lambda", 0.0, t, "Ricci-flat"),
            ],
        }
    }

    /// S¹ × S²(1) foliated by the circles; the leaves are totally geodesic.
    pub fn product_sphere() -> Self {
        let chart = Arc::new(
            Chart::new(vec![
                Axis::new("psi", 0.0, 2.0 * PI, AxisKind::Periodic),
                Axis::new("theta", 0.0, PI, AxisKind::Open),
                Axis::new("phi", 0.0, 2.0 * PI, AxisKind::Periodic),
            ])
            .expect("valid chart"),
        );
        let z = Expr::constant(0.0);
        let one = Expr::constant(1.0);
        let th = Expr::var(1);
        let e0 = VectorField::coordinate(&chart, 0);
        let e1 = VectorField::coordinate(&chart, 1);
        let e2 = VectorField::from_exprs(&chart, vec![z.clone(), z, one / th.sin()]).expect("valid field");
        let frame = FramePresentation::new(&chart, vec![e0, e1, e2], 1)
            .expect("valid frame")
            .with_cycles(vec![Cycle::new("equator", vec![0.0, PI / 2.0, 0.0], vec![0.0, 0.0, 2.0 * PI])]);
        let metric = Arc::new(MetricField::orthonormal(&Arc::new(frame)));
        let d = Provenance::Derived;
        let vol = 8.0 * PI * PI;
        Scenario {
            name: "product_sphere".into(),
            kind: ScenarioKind::ProductSphere,
            metric,
            basic_axes: vec![1, 2],
            resolution: DEFAULT_RESOLUTION,
            goldens: vec![
                golden("ricci_q_eigenvalue", 1.0, d, "round unit sphere"),
                golden("scalar_q", 2.0, d, "round unit sphere"),
                golden("tau_b_norm", 0.0, Provenance::Paper, "totally geodesic leaves"),
                golden("volume", vol, d, "2π · 4π"),
                golden("f_q_zero", 2.0 * vol, d, "constant integrand S^Q = 2"),
                golden("lambda_q", 2.0, d, "constant potential"),
                golden("soliton_lambda", 1.0, d, "Einstein constant of S²(1)"),
            ],
        }
    }

    pub fn carriere_default() -> Self {
        Self::carriere([[2, 1], [1, 1]]).expect("default matrix is hyperbolic")
    }

    /// The mapping torus of a hyperbolic A ∈ SL(2, Z), in eigen-coordinates of A.
    pub fn carriere(a: [[i64; 2]; 2]) -> Result<Self> {
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        let tr = a[0][0] + a[1][1];
        if det != 1 {
            return Err(Error::Config(format!("carriere matrix must have determinant 1, got {det}")));
        }
        if tr <= 2 {
            return Err(Error::Config(format!("carriere matrix must have trace > 2, got {tr}")));
        }
        let trf = tr as f64;
        let rho = (trf + (trf * trf - 4.0).sqrt()) / 2.0;
        let l = rho.ln();
        let chart = Arc::new(
            Chart::new(vec![
                Axis::new("x", 0.0, 1.0, AxisKind::Periodic),
                Axis::new("y", 0.0, 1.0, AxisKind::Periodic),
                Axis::new("t", 0.0, 1.0, AxisKind::TwistedPeriodic),
            ])
            .expect("valid chart")
            .with_twist_note("(x, y, t + 1) is identified with (ρx, y/ρ, t) in eigen-coordinates of A"),
        );
        let t = Expr::var(2);
        let z = Expr::constant(0.0);
        let e1 = VectorField::from_exprs(&chart, vec![(t.clone() * -l).exp(), z.clone(), z.clone()]).expect("field");
        let e2 = VectorField::from_exprs(&chart, vec![z.clone(), (t * l).exp(), z.clone()]).expect("field");
        let e3 = VectorField::coordinate(&chart, 2);
        let frame = FramePresentation::new(&chart, vec![e1, e2, e3], 1).expect("valid frame").with_cycles(vec![
            Cycle::new("t-loop", vec![0.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]),
            Cycle::new("y-loop", vec![0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]),
        ]);
        let metric = Arc::new(MetricField::orthonormal(&Arc::new(frame)));
        let (pp, d) = (Provenance::Paper, Provenance::Derived);
        Ok(Scenario {
            name: "carriere".into(),
            kind: ScenarioKind::Carriere { a, rho },
            metric,
            basic_axes: vec![2],
            resolution: DEFAULT_RESOLUTION,
            goldens: vec![
                golden("log_rho", l, d, "largest eigenvalue of A"),
                golden("ambient_sectional_e1_e2", l * l, pp, "g(R(e1,e2)e1,e2)"),
                golden("ambient_sectional_e2_e3", -l * l, pp, "g(R(e2,e3)e2,e3)"),
                golden("transverse_sectional", -l * l, pp, "g_Q(R^Q(e2,e3)e2,e3)"),
                golden("ricci_q_eigenvalue", -l * l, pp, "Ric^Q = −(ln ρ)² g_Q"),
                golden("scalar_q", -2.0 * l * l, pp, "trace of Ric^Q"),
                golden("tau_b_e3", -l, pp, "τ_B = −ln ρ e3"),
                golden("kappa_t_loop", -l, d, "loop integral of κ_B"),
                golden("f_q_zero", -l * l, d, "S^Q + |τ_B|² with unit volume"),
                golden("lambda_q", -l * l, d, "constant potential −(ln ρ)²"),
                golden("soliton_lambda", -l * l, pp, "transversally Einstein"),
            ],
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> ScenarioKind {
        self.kind
    }

    pub fn metric(&self) -> &Arc<MetricField> {
        &self.metric
    }

    pub fn frame(&self) -> &Arc<FramePresentation> {
        self.metric.frame()
    }

    pub fn chart(&self) -> &Arc<Chart> {
        self.metric.chart()
    }

    pub fn p(&self) -> usize {
        self.frame().p()
    }

    pub fn q(&self) -> usize {
        self.frame().q()
    }

    pub fn basic_axes(&self) -> &[usize] {
        &self.basic_axes
    }

    pub fn goldens(&self) -> &[Golden] {
        &self.goldens
    }

    pub fn golden(&self, name: &str) -> Option<&Golden> {
        self.goldens.iter().find(|g| g.name == name)
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn log_rho(&self) -> Option<f64> {
        match self.kind {
            ScenarioKind::Carriere { rho, .. } => Some(rho.ln()),
            _ => None,
        }
    }

    pub fn with_resolution(mut self, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!("resolution {n} < 2")));
        }
        self.resolution = n;
        Ok(self)
    }

    /// Replaces the metric (same frame); goldens no longer apply and are dropped.
    pub fn with_metric(&self, metric: MetricField) -> Self {
        let mut s = self.clone();
        s.metric = Arc::new(metric);
        s.goldens.clear();
        s
    }

    pub fn scale_transverse(&self, c: f64) -> Result<Self> {
        Ok(self.with_metric(self.metric.scale_transverse(c)?))
    }

    pub fn with_mutation(&self, m: Mutation) -> Self {
        let mut s = self.clone();
        s.metric = Arc::new((*self.metric).clone().with_mutation(m));
        s
    }

    pub fn is_basic_axis(&self, k: usize) -> bool {
        self.basic_axes.contains(&k)
    }

    fn basic_resolution(&self) -> usize {
        if self.basic_axes.len() > 1 {
            self.resolution.min(MULTI_AXIS_CAP)
        } else {
            self.resolution
        }
    }

    /// Full-chart quadrature: basic axes resolved, leaf-only axes coarse.
    pub fn quadrature(&self) -> Result<QuadratureRule> {
        let res: Vec<usize> = (0..self.chart().dim())
            .map(|k| if self.is_basic_axis(k) { self.basic_resolution() } else { LEAF_RESOLUTION })
            .collect();
        QuadratureRule::new(self.chart(), &res)
    }

    /// A coarser full-chart rule for pointwise identity sweeps.
    pub fn check_rule(&self, n: usize) -> Result<QuadratureRule> {
        let res: Vec<usize> =
            (0..self.chart().dim()).map(|k| if self.is_basic_axis(k) { n } else { 2 }).collect();
        QuadratureRule::new(self.chart(), &res)
    }

    pub fn basic_grid(&self) -> Result<BasicGrid> {
        let res = vec![self.basic_resolution(); self.basic_axes.len()];
        BasicGrid::new(self.chart(), &self.basic_axes, &res, &self.representative())
    }

    pub fn basic_grid_with(&self, res: &[usize]) -> Result<BasicGrid> {
        BasicGrid::new(self.chart(), &self.basic_axes, res, &self.representative())
    }

    /// Base point whose non-basic coordinates are used for basic evaluations.
    pub fn representative(&self) -> Vec<f64> {
        self.chart().axes().iter().map(|a| a.lo + 0.25 * a.length()).collect()
    }

    /// Checks frame, metric and bundle-like structure on the quadrature nodes.
    pub fn validate(&self) -> Result<()> {
        let rule = self.check_rule(8)?;
        self.frame().validate(&rule, 1e-8)?;
        self.metric.validate(&rule)?;
        let res = crate::transverse::bundle_like_residual(&self.metric, &rule)?;
        if res > 1e-8 {
            return Err(Error::Model(format!("metric is not bundle-like (residual {res:e})")));
        }
        Ok(())
    }

    /// A seeded random smooth basic function.
    pub fn random_function<R: Rng>(&self, rng: &mut R) -> ScalarField {
        let chart = self.chart().clone();
        ScalarField::analytic(&chart, self.random_expr(rng))
    }

    /// A seeded random smooth basic 1-form (transverse coframe components).
    pub fn random_one_form<R: Rng>(&self, rng: &mut R) -> BasicForm {
        let chart = self.chart().clone();
        let comps: Vec<Expr> = match self.kind {
            ScenarioKind::ProductSphere => {
                // Σ P_i dX_i restricted to the sphere, with X the embedding.
                let (th, ph) = (Expr::var(1), Expr::var(2));
                let dth = [th.cos() * ph.cos(), th.cos() * ph.sin(), -th.sin()];
                let dph = [-ph.sin(), ph.cos(), Expr::constant(0.0)];
                let p: Vec<Expr> = (0..3).map(|_| self.random_expr(rng)).collect();
                let mut a = Expr::constant(0.0);
                let mut b = Expr::constant(0.0);
                for i in 0..3 {
                    a = a + p[i].clone() * dth[i].clone();
                    b = b + p[i].clone() * dph[i].clone();
                }
                vec![a, b]
            }
            _ => (0..self.q()).map(|_| self.random_expr(rng)).collect(),
        };
        BasicForm::one(comps.into_iter().map(|e| ScalarField::analytic(&chart, e)).collect())
    }

    fn random_expr<R: Rng>(&self, rng: &mut R) -> Expr {
        let mut coef = |scale: f64| (rng.random::<f64>() * 2.0 - 1.0) * scale;
        match self.kind {
            ScenarioKind::ProductSphere => {
                let (th, ph) = (Expr::var(1), Expr::var(2));
                let x = [th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()];
                let mut e = Expr::constant(coef(1.0));
                for i in 0..3 {
                    e = e + coef(1.0) * x[i].clone();
                    for j in i..3 {
                        e = e + coef(0.5) * x[i].clone() * x[j].clone();
                    }
                }
                e
            }
            _ => {
                let axes = self.basic_axes.clone();
                let mut e = Expr::constant(coef(1.0));
                let modes: Vec<Vec<i32>> = if axes.len() == 1 {
                    (1..=2).map(|k| vec![k]).collect()
                } else {
                    vec![vec![1, 0], vec![0, 1], vec![1, 1], vec![1, -1], vec![2, 0], vec![0, 2]]
                };
                for m in modes {
                    let mut arg = Expr::constant(0.0);
                    for (k, &ax) in m.iter().zip(&axes) {
                        if *k != 0 {
                            let len = self.chart().axis(ax).length();
                            arg = arg + Expr::var(ax) * (2.0 * PI * *k as f64 / len);
                        }
                    }
                    let w = 1.0 / m.iter().map(|k| (k * k) as f64).sum::<f64>();
                    e = e + coef(w) * arg.cos() + coef(w) * arg.sin();
                }
                e
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn carriere_rho_from_matrix() {
        let s = Scenario::carriere([[2, 1], [1, 1]]).unwrap();
        approx::assert_relative_eq!(s.log_rho().unwrap(), 0.962_423_650_119_206_9, epsilon = 1e-12);
        let s3 = Scenario::carriere([[3, 1], [2, 1]]).unwrap();
        approx::assert_relative_eq!(s3.log_rho().unwrap(), ((4.0 + 12f64.sqrt()) / 2.0).ln(), epsilon = 1e-14);
        assert!(Scenario::carriere([[1, 1], [0, 1]]).is_err());
        assert!(Scenario::carriere([[2, 1], [1, 2]]).is_err());
    }

    #[test]
    fn built_in_scenarios_validate() {
        for s in [Scenario::flat_torus(), Scenario::product_sphere(), Scenario::carriere_default()] {
            s.validate().unwrap_or_else(|e| panic!("{}: {e}", s.name()));
        }
    }
}
