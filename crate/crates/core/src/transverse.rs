//! Transverse geometry: projection to Q, the transverse connection and its
//! curvature, mean curvature and tautness, basicness diagnostics and the
//! DeTurck field.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::basic::sup_over;
use crate::chart::{gauss_legendre_unit, QuadratureRule};
use crate::error::{Error, Result};
use crate::frame::{invert, ConnectionCoefficients, ConnectionVariant, FramePresentation, MetricField, VectorField};
use crate::jet::Jet;
use crate::local::Local;

/// Transverse frame components of a vector field (leaf components dropped).
pub fn project_q(v: &VectorField, frame: &FramePresentation, point: &[f64]) -> Result<Vec<f64>> {
    let comps = frame_components(v, frame, point, 0)?;
    Ok(comps[frame.p()..].iter().map(Jet::value).collect())
}

/// Frame components w_i of v = Σ w_i e_i as jets.
pub fn frame_components(v: &VectorField, frame: &FramePresentation, point: &[f64], order: usize) -> Result<Vec<Jet>> {
    let n = frame.n();
    let e = frame.matrix_jets(point, order)?;
    let einv = invert(&e).ok_or_else(|| Error::Numeric(format!("frame degenerate at {point:?}")))?;
    let vj = v.jets(point, order)?;
    Ok((0..n)
        .map(|i| {
            let mut s = Jet::zero(order);
            for k in 0..n {
                s += vj[k] * einv[k][i];
            }
            s
        })
        .collect())
}

/// sup over nodes, leaf frame fields U and transverse pairs of
/// U(g_Q(Y,Z)) − g_Q(π[U,Y],Z) − g_Q(Y,π[U,Z]).
pub fn bundle_like_residual(metric: &MetricField, rule: &QuadratureRule) -> Result<f64> {
    let (p, q) = (metric.frame().p(), metric.frame().q());
    sup_over(rule, |x| {
        let loc = Local::new(metric, x, 1)?;
        let mut m: f64 = 0.0;
        for u in 0..p {
            for b in 0..q {
                for c in 0..q {
                    let mut s = loc.d(u, &loc.gq(b, c)).value();
                    for d in 0..q {
                        s -= loc.c[loc.idx(u, p + b, p + d)].value() * loc.gq(d, c).value();
                        s -= loc.c[loc.idx(u, p + c, p + d)].value() * loc.gq(b, d).value();
                    }
                    m = m.max(s.abs());
                }
            }
        }
        Ok(m)
    })
}

pub const BUNDLE_LIKE_TOL: f64 = 1e-8;

/// The transverse Levi-Civita connection, after checking the metric is bundle-like.
pub fn transverse_connection(metric: &Arc<MetricField>, rule: &QuadratureRule) -> Result<ConnectionCoefficients> {
    let r = bundle_like_residual(metric, rule)?;
    if r > BUNDLE_LIKE_TOL {
        return Err(Error::Model(format!("metric is not bundle-like (residual {r:e})")));
    }
    Ok(ConnectionCoefficients::new(metric, ConnectionVariant::Transverse))
}

#[derive(Debug, Clone)]
pub struct TransverseCurvature {
    pub ricci: DMatrix<f64>,
    pub scalar: f64,
    /// g_Q(R^Q(e_a,e_b)e_c,e_d) flattened [((a q + b) q + c) q + d].
    pub riemann: Option<Vec<f64>>,
}

pub fn transverse_curvature(metric: &MetricField, point: &[f64], full: bool) -> Result<TransverseCurvature> {
    let loc = Local::new(metric, point, 2)?;
    let q = loc.q;
    let ric = loc.ricci_q();
    let scalar = loc.scalar_q_from(&ric).value();
    let ricci = DMatrix::from_fn(q, q, |a, b| ric[a * q + b].value());
    let riemann = full.then(|| loc.riemann_q_all().iter().map(Jet::value).collect());
    Ok(TransverseCurvature { ricci, scalar, riemann })
}

/// Curvature at every node of a rule.
pub fn curvature_on(metric: &MetricField, rule: &QuadratureRule) -> Result<Vec<TransverseCurvature>> {
    rule.nodes().par_iter().map(|n| transverse_curvature(metric, &n.point, false)).collect()
}

#[derive(Debug, Clone)]
pub struct MeanCurvatureData {
    pub points: Vec<Vec<f64>>,
    pub tau: Vec<Vec<f64>>,
    pub kappa: Vec<Vec<f64>>,
    pub basic: bool,
    pub leaf_residual: f64,
    pub closed_residual: f64,
    pub loop_integrals: Vec<(String, f64)>,
}

pub const BASIC_TOL: f64 = 1e-8;

pub fn mean_curvature(metric: &MetricField, rule: &QuadratureRule) -> Result<MeanCurvatureData> {
    let p = metric.frame().p();
    let rows: Vec<(Vec<f64>, Vec<f64>, f64, f64)> = rule
        .nodes()
        .par_iter()
        .map(|n| {
            let loc = Local::new(metric, &n.point, 2)?;
            let tau = loc.tau();
            let kappa = loc.kappa();
            let mut leaf: f64 = 0.0;
            for a in 0..p {
                for k in &kappa {
                    leaf = leaf.max(loc.d(a, k).value().abs());
                }
            }
            let closed = loc.d1(&kappa).iter().map(|v| v.value().abs()).fold(0.0, f64::max);
            Ok((tau.iter().map(Jet::value).collect(), kappa.iter().map(Jet::value).collect(), leaf, closed))
        })
        .collect::<Result<_>>()?;
    let leaf_residual = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    let closed_residual = rows.iter().map(|r| r.3).fold(0.0, f64::max);
    let loop_integrals = metric
        .frame()
        .cycles()
        .iter()
        .map(|c| Ok((c.name.clone(), kappa_loop_integral(metric, &c.start, &c.displacement)?)))
        .collect::<Result<_>>()?;
    Ok(MeanCurvatureData {
        points: rule.nodes().iter().map(|n| n.point.clone()).collect(),
        tau: rows.iter().map(|r| r.0.clone()).collect(),
        kappa: rows.iter().map(|r| r.1.clone()).collect(),
        basic: leaf_residual < BASIC_TOL,
        leaf_residual,
        closed_residual,
        loop_integrals,
    })
}

/// ∫ κ along the straight loop s ↦ start + s·displacement, s ∈ [0, 1].
pub fn kappa_loop_integral(metric: &MetricField, start: &[f64], displacement: &[f64]) -> Result<f64> {
    let frame = metric.frame();
    let p = frame.p();
    let (xs, ws) = gauss_legendre_unit(64);
    let mut total = 0.0;
    for (x, w) in xs.iter().zip(&ws) {
        let s = 0.5 * (x + 1.0);
        let pt: Vec<f64> = start.iter().zip(displacement).map(|(a, d)| a + s * d).collect();
        let pt = metric.chart().wrap(&pt)?;
        let loc = Local::new(metric, &pt, 1)?;
        let kappa = loc.kappa();
        let e = frame.matrix_jets(&pt, 0)?;
        let einv = invert(&e).ok_or_else(|| Error::Numeric("degenerate frame on cycle".into()))?;
        let mut v = 0.0;
        for (a, k) in kappa.iter().enumerate() {
            let comp: f64 = (0..frame.n()).map(|j| displacement[j] * einv[j][p + a].value()).sum();
            v += k.value() * comp;
        }
        total += 0.5 * w * v;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tautness {
    Taut,
    NonTaut,
    Inconclusive,
}

impl Tautness {
    pub fn as_str(self) -> &'static str {
        match self {
            Tautness::Taut => "taut",
            Tautness::NonTaut => "non-taut",
            Tautness::Inconclusive => "inconclusive",
        }
    }
}

/// κ_B exact iff taut: judged from the declared cycle integrals.
pub fn tautness_diagnostic(mc: &MeanCurvatureData, tol: f64) -> Result<Tautness> {
    if mc.closed_residual > tol {
        return Err(Error::Model(format!("mean curvature form is not closed (residual {:e})", mc.closed_residual)));
    }
    if !mc.basic {
        return Err(Error::Model(format!("mean curvature form is not basic (residual {:e})", mc.leaf_residual)));
    }
    if mc.loop_integrals.is_empty() {
        return Ok(Tautness::Inconclusive);
    }
    let worst = mc.loop_integrals.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max);
    Ok(if worst < tol {
        Tautness::Taut
    } else if worst > 10.0 * tol {
        Tautness::NonTaut
    } else {
        Tautness::Inconclusive
    })
}

/// Transverse components X^d = G^{ab}(T̃_ab^d − T_ab^d) of the DeTurck field,
/// where T̃ is the reference connection and G the current metric.
pub fn deturck_jets(reference: &Local, current: &Local) -> Vec<Jet> {
    let q = current.q;
    (0..q)
        .map(|d| {
            let mut s = Jet::zero(current.order - 1);
            for a in 0..q {
                for b in 0..q {
                    s += current.gq_inv(a, b) * (reference.tc(current.p + a, b, d) - current.tc(current.p + a, b, d));
                }
            }
            s
        })
        .collect()
}

pub fn deturck_vector_field(
    reference: &ConnectionCoefficients,
    current: &ConnectionCoefficients,
    point: &[f64],
) -> Result<Vec<f64>> {
    if reference.variant() != ConnectionVariant::Transverse || current.variant() != ConnectionVariant::Transverse {
        return Err(Error::Usage("DeTurck field needs two transverse connections".into()));
    }
    let r = Local::new(reference.metric(), point, 1)?;
    let c = Local::new(current.metric(), point, 1)?;
    Ok(deturck_jets(&r, &c).iter().map(Jet::value).collect())
}

/// sup over nodes of leaf derivatives of the DeTurck field components.
pub fn deturck_leaf_residual(reference: &MetricField, current: &MetricField, rule: &QuadratureRule) -> Result<f64> {
    let p = current.frame().p();
    sup_over(rule, |x| {
        let r = Local::new(reference, x, 2)?;
        let c = Local::new(current, x, 2)?;
        let xs = deturck_jets(&r, &c);
        let mut m: f64 = 0.0;
        for a in 0..p {
            for v in &xs {
                m = m.max(c.d(a, v).value().abs());
            }
        }
        Ok(m)
    })
}

/// sup of |dS^Q + 2δ_T Ric^Q| over the nodes.
pub fn contracted_bianchi_residual(metric: &MetricField, rule: &QuadratureRule) -> Result<f64> {
    sup_over(rule, |x| {
        let loc = Local::new(metric, x, 3)?;
        let ric = loc.ricci_q();
        let s = loc.scalar_q_from(&ric);
        let ds = loc.df(&s);
        let div = loc.delta_t2(&ric);
        Ok(ds.iter().zip(&div).map(|(a, b)| (*a + *b * 2.0).value().abs()).fold(0.0, f64::max))
    })
}

/// Cyclic sum (∇_a R^Q)(b,c) + (∇_b R^Q)(c,a) + (∇_c R^Q)(a,b) at one point, maximised over
/// index choices; lowered components.
pub fn second_bianchi_defect(metric: &MetricField, point: &[f64]) -> Result<f64> {
    let loc = Local::new(metric, point, 3)?;
    let q = loc.q;
    let p = loc.p;
    let rm = loc.riemann_q_all();
    let at = |a: usize, b: usize, c: usize, d: usize| rm[((a * q + b) * q + c) * q + d];
    // (∇_i R)_{abcd}
    let nabla = |i: usize, a: usize, b: usize, c: usize, d: usize| {
        let mut s = loc.d(p + i, &at(a, b, c, d));
        for m in 0..q {
            s -= loc.tc(p + i, a, m) * at(m, b, c, d)
                + loc.tc(p + i, b, m) * at(a, m, c, d)
                + loc.tc(p + i, c, m) * at(a, b, m, d)
                + loc.tc(p + i, d, m) * at(a, b, c, m);
        }
        s.value()
    };
    let mut worst: f64 = 0.0;
    for i in 0..q {
        for a in 0..q {
            for b in 0..q {
                for c in 0..q {
                    for d in 0..q {
                        let v = nabla(i, a, b, c, d) + nabla(a, b, i, c, d) + nabla(b, i, a, c, d);
                        worst = worst.max(v.abs());
                    }
                }
            }
        }
    }
    Ok(worst)
}

/// sup of leaf derivatives of the Ric^Q components.
pub fn curvature_leaf_residual(metric: &MetricField, rule: &QuadratureRule) -> Result<f64> {
    let p = metric.frame().p();
    sup_over(rule, |x| {
        let loc = Local::new(metric, x, 3)?;
        let ric = loc.ricci_q();
        let mut m: f64 = 0.0;
        for a in 0..p {
            for r in &ric {
                m = m.max(loc.d(a, r).value().abs());
            }
        }
        Ok(m)
    })
}

/// (λ, sup |Ric^Q − λ g_Q|) with λ the node-averaged Einstein constant.
pub fn einstein_residual(metric: &MetricField, rule: &QuadratureRule) -> Result<(f64, f64)> {
    let curv = curvature_on(metric, rule)?;
    let q = metric.frame().q() as f64;
    let lambda = curv.iter().map(|c| c.scalar).sum::<f64>() / (q * curv.len() as f64);
    let mut worst: f64 = 0.0;
    for (c, n) in curv.iter().zip(rule.nodes()) {
        let g = metric.transverse_matrix(&n.point)?;
        worst = worst.max((&c.ricci - g * lambda).amax());
    }
    Ok((lambda, worst))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basic::BasicTensor;
    use crate::chart::ScalarField;
    use crate::expr::Expr;
    use crate::scenario::Scenario;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn projection_drops_leaf_components() {
        let s = Scenario::carriere_default();
        let frame = s.frame();
        let p = [0.2, 0.3, 0.6];
        assert_eq!(project_q(frame.field(0), frame, &p).unwrap(), vec![0.0, 0.0]);
        let v = project_q(frame.field(2), frame, &p).unwrap();
        assert_relative_eq!(v[1], 1.0, epsilon = 1e-15);
        let combo = frame.field(0).add(&frame.field(2).scale(&ScalarField::constant(s.chart(), 2.0)));
        let v = project_q(&combo, frame, &p).unwrap();
        assert_relative_eq!(v[0], 0.0, epsilon = 1e-14);
        assert_relative_eq!(v[1], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn carriere_transverse_connection() {
        let s = Scenario::carriere_default();
        let l = s.log_rho().unwrap();
        let rule = s.check_rule(8).unwrap();
        let conn = transverse_connection(s.metric(), &rule).unwrap();
        let p = [0.1, 0.5, 0.3];
        for i in 0..3 {
            for j in 1..3 {
                for k in 1..3 {
                    let expect = match (i, j, k) {
                        (1, 1, 2) => l,
                        (1, 2, 1) => -l,
                        _ => 0.0,
                    };
                    assert_relative_eq!(conn.coefficient(i, j, k, &p).unwrap(), expect, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn sphere_transverse_connection_matches_round_sphere() {
        let s = Scenario::product_sphere();
        let rule = s.check_rule(8).unwrap();
        let conn = transverse_connection(s.metric(), &rule).unwrap();
        let th: f64 = 0.9;
        let p = [0.4, th, 1.3];
        // ∇_{e_φ} e_φ = −cot θ e_θ, ∇_{e_φ} e_θ = cot θ e_φ
        assert_relative_eq!(conn.coefficient(2, 2, 1, &p).unwrap(), -th.cos() / th.sin(), epsilon = 1e-12);
        assert_relative_eq!(conn.coefficient(2, 1, 2, &p).unwrap(), th.cos() / th.sin(), epsilon = 1e-12);
        assert_relative_eq!(conn.coefficient(1, 1, 2, &p).unwrap(), 0.0, epsilon = 1e-12);
        assert_relative_eq!(conn.coefficient(0, 1, 2, &p).unwrap(), 0.0, epsilon = 1e-12);
        let c = transverse_curvature(s.metric(), &p, false).unwrap();
        assert_relative_eq!(c.scalar, 2.0, epsilon = 1e-10);
        assert_relative_eq!(c.ricci[(0, 0)], 1.0, epsilon = 1e-10);
        assert_relative_eq!(c.ricci[(0, 1)], 0.0, epsilon = 1e-10);
    }

    #[test]
    fn mean_curvature_and_tautness() {
        let c = Scenario::carriere_default();
        let l = c.log_rho().unwrap();
        let mc = mean_curvature(c.metric(), &c.check_rule(8).unwrap()).unwrap();
        assert!(mc.basic);
        for t in &mc.tau {
            assert_relative_eq!(t[1], -l, epsilon = 1e-12);
        }
        let t_loop = mc.loop_integrals.iter().find(|(n, _)| n == "t-loop").unwrap().1;
        assert_relative_eq!(t_loop, -l, epsilon = 1e-12);
        assert_eq!(tautness_diagnostic(&mc, 1e-8).unwrap(), Tautness::NonTaut);
        for s in [Scenario::flat_torus(), Scenario::product_sphere()] {
            let mc = mean_curvature(s.metric(), &s.check_rule(8).unwrap()).unwrap();
            assert_eq!(tautness_diagnostic(&mc, 1e-8).unwrap(), Tautness::Taut, "{}", s.name());
        }
    }

    #[test]
    fn bianchi_identities_hold_on_a_curved_metric() {
        let s = Scenario::flat_torus();
        let (y, t) = (Expr::var(1), Expr::var(2));
        let phi = ((y.clone() * (2.0 * PI)).sin() * 0.2 + (t.clone() * (2.0 * PI)).cos() * 0.1).exp();
        let off = (y * (2.0 * PI) + t * (2.0 * PI)).cos() * 0.1;
        let c = s.chart();
        let block = vec![
            vec![ScalarField::analytic(c, phi.clone()), ScalarField::analytic(c, off.clone())],
            vec![ScalarField::analytic(c, off), ScalarField::analytic(c, phi * 1.5)],
        ];
        let m = s.metric().with_transverse_block(block).unwrap();
        let rule = s.check_rule(6).unwrap();
        assert!(bundle_like_residual(&m, &rule).unwrap() < 1e-12);
        assert!(contracted_bianchi_residual(&m, &rule).unwrap() < 1e-9);
        for pt in [[0.1, 0.2, 0.3], [0.7, 0.9, 0.15]] {
            assert!(second_bianchi_defect(&m, &pt).unwrap() < 1e-9);
        }
        assert!(curvature_leaf_residual(&m, &rule).unwrap() < 1e-10);
    }

    #[test]
    fn carriere_is_transversally_einstein() {
        let s = Scenario::carriere_default();
        let l = s.log_rho().unwrap();
        let (lambda, res) = einstein_residual(s.metric(), &s.check_rule(8).unwrap()).unwrap();
        assert_relative_eq!(lambda, -l * l, epsilon = 1e-12);
        assert!(res < 1e-10);
    }

    #[test]
    fn deturck_field_vanishes_for_equal_or_rescaled_metrics() {
        let s = Scenario::carriere_default();
        let p = [0.1, 0.2, 0.3];
        let a = ConnectionCoefficients::new(s.metric(), ConnectionVariant::Transverse);
        let b = ConnectionCoefficients::new(
            &Arc::new(s.metric().scale_transverse(3.0).unwrap()),
            ConnectionVariant::Transverse,
        );
        for v in deturck_vector_field(&a, &a, &p).unwrap().into_iter().chain(deturck_vector_field(&a, &b, &p).unwrap()) {
            assert!(v.abs() < 1e-13);
        }
    }

    #[test]
    fn deturck_field_matches_first_variation() {
        // X(ε) = ε G^{dm}((δ_T h)_m + ½ (d tr h)_m) + O(ε²)
        let s = Scenario::carriere_default();
        let c = s.chart();
        let t = Expr::var(2);
        let h = BasicTensor::symmetric(vec![
            vec![ScalarField::analytic(c, (t.clone() * (2.0 * PI)).cos()), ScalarField::analytic(c, (t.clone() * (2.0 * PI)).sin() * 0.5)],
            vec![ScalarField::constant(c, 0.0), ScalarField::analytic(c, (t * (4.0 * PI)).sin() * 0.3)],
        ])
        .unwrap();
        let p = [0.3, 0.4, 0.35];
        let base = Local::new(s.metric(), &p, 2).unwrap();
        let hj = h.jets(&p, 2).unwrap();
        let div = base.delta_t2(&hj);
        let dtr = base.df(&base.trace2(&hj));
        let expect: Vec<f64> = (0..2).map(|m| (div[m] + dtr[m] * 0.5).value()).collect();
        let mut errs = vec![];
        for eps in [1e-3, 5e-4] {
            let m = h.perturb(s.metric(), eps).unwrap();
            let cur = Local::new(&m, &p, 1).unwrap();
            let r = Local::new(s.metric(), &p, 1).unwrap();
            let x = deturck_jets(&r, &cur);
            errs.push((0..2).map(|d| (x[d].value() / eps - expect[d]).abs()).fold(0.0, f64::max));
        }
        assert!(errs[0] < 1e-2, "{errs:?}");
        // first-order convergence of the difference quotient
        assert!(errs[1] < 0.6 * errs[0], "{errs:?}");
    }
}
