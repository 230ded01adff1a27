//! Perelman-type functionals of the transverse metric.
//!
//! F^Q and W^Q are evaluated by full-chart quadrature. Their infima λ^Q and μ^Q
//! are computed on the scenario's basic grid in terms of u with u² the
//! normalized weight, where the problem becomes a quadratic form plus, for μ^Q,
//! an entropy term.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::basic::{integrate_volume, BasicForm, BasicTensor};
use crate::chart::{AxisKind, AxisRule, QuadratureRule, ScalarField};
use crate::error::{Error, Result};
use crate::frame::MetricField;
use crate::grid::BasicGrid;
use crate::jet::Jet;
use crate::local::Local;
use crate::scenario::{Scenario, LEAF_RESOLUTION};

pub const EIGEN_TOL: f64 = 1e-10;
pub const EIGEN_MAX_ITER: usize = 500;
pub const MU_TOL: f64 = 1e-8;
pub const MU_MAX_ITER: usize = 5000;
pub const MU_SEEDS: [u64; 3] = [1, 2, 3];

#[derive(Debug, Clone)]
pub struct FunctionalReport {
    pub name: String,
    pub value: f64,
    /// Minimizing f as a field, when applicable.
    pub minimizer: Option<BasicForm>,
    /// The minimizer's values at the grid nodes.
    pub minimizer_values: Vec<f64>,
    pub constraint_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// F^Q(g, f) = ∫ (S^Q + |∇f + τ|²) e^{-f} dV.
pub fn f_q(metric: &MetricField, f: &BasicForm, rule: &QuadratureRule) -> Result<f64> {
    let f = f.as_function()?;
    integrate_volume(metric, rule, |x| {
        let loc = Local::new(metric, x, 2)?;
        let fj = f.jet(x, 2)?;
        let drift = drift(&loc, &fj);
        Ok(((loc.scalar_q() + loc.dot(&drift, &drift)) * (-fj.truncate(0)).exp()).value())
    })
}

/// W^Q(g, f, σ) = ∫ [σ(S^Q + |∇f + τ|²) + f − q] (4πσ)^{-q/2} e^{-f} dV.
pub fn w_q(metric: &MetricField, f: &BasicForm, sigma: f64, rule: &QuadratureRule) -> Result<f64> {
    check_sigma(sigma)?;
    let f = f.as_function()?;
    let q = metric.frame().q() as f64;
    let norm = (4.0 * PI * sigma).powf(-q / 2.0);
    integrate_volume(metric, rule, |x| {
        let loc = Local::new(metric, x, 2)?;
        let fj = f.jet(x, 2)?;
        let drift = drift(&loc, &fj);
        let s = (loc.scalar_q() + loc.dot(&drift, &drift)).value();
        let f0 = fj.value();
        Ok((sigma * s + f0 - q) * norm * (-f0).exp())
    })
}

/// ∫ e^{-f} dV, the λ^Q normalization.
pub fn weighted_volume(metric: &MetricField, f: &BasicForm, rule: &QuadratureRule) -> Result<f64> {
    let f = f.as_function()?;
    integrate_volume(metric, rule, |x| Ok((-f.evaluate(x)?).exp()))
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain { axis: "sigma".into(), value: sigma, lo: 0.0, hi: f64::INFINITY })
    }
}

/// df + κ, the drift 1-form dual to ∇f + τ.
fn drift(loc: &Local, f: &Jet) -> Vec<Jet> {
    loc.df(f).iter().zip(loc.kappa()).map(|(a, b)| *a + b).collect()
}

/// The discretized basic problem: weights, inverse metric on basic coordinates
/// and the potential S^Q + |κ|² − 2δ_B κ at the grid nodes.
#[derive(Debug, Clone)]
pub struct BasicProblem {
    grid: BasicGrid,
    q: usize,
    /// Quadrature weight times leaf-integrated volume density.
    weights: Vec<f64>,
    /// Σ G^{ab} E_{a k} E_{b l} on the grid's axes, per node.
    inv_metric: Vec<DMatrix<f64>>,
    potential: Vec<f64>,
    scalar: Vec<f64>,
}

impl BasicProblem {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        Self::with_grid(scenario.metric(), scenario.basic_grid()?)
    }

    pub fn with_grid(metric: &MetricField, grid: BasicGrid) -> Result<Self> {
        let chart = metric.chart().clone();
        let dims = grid.dims();
        let axes: Vec<usize> = (0..dims).map(|d| grid.chart_axis(d)).collect();
        let leaf_axes: Vec<usize> = (0..chart.dim()).filter(|k| !axes.contains(k)).collect();
        let leaf_rules: Vec<AxisRule> = leaf_axes
            .iter()
            .map(|&k| {
                let a = chart.axis(k);
                match a.kind {
                    AxisKind::Periodic => AxisRule::trapezoid(a.lo, a.hi, LEAF_RESOLUTION),
                    _ => AxisRule::gauss_legendre(a.lo, a.hi, LEAF_RESOLUTION),
                }
            })
            .collect();
        let p = metric.frame().p();
        let q = metric.frame().q();
        let rows: Vec<(f64, DMatrix<f64>, f64, f64)> = (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let base = grid.point(i);
                let mut m = 0.0;
                let count: usize = leaf_rules.iter().map(|r| r.len()).product();
                for c in 0..count {
                    let mut pt = base.clone();
                    let mut w = 1.0;
                    let mut rem = c;
                    for (r, &k) in leaf_rules.iter().zip(&leaf_axes) {
                        let j = rem % r.len();
                        rem /= r.len();
                        pt[k] = r.nodes[j];
                        w *= r.weights[j];
                    }
                    m += w * metric.density(&pt)?;
                }
                let loc = Local::new(metric, &base, 2)?;
                let inv = DMatrix::from_fn(dims, dims, |k, l| {
                    let mut s = 0.0;
                    for a in 0..q {
                        for b in 0..q {
                            s += loc.gq_inv(a, b).value() * loc.e[p + a][axes[k]].value() * loc.e[p + b][axes[l]].value();
                        }
                    }
                    s
                });
                let kappa = loc.kappa();
                let scalar = loc.scalar_q().value();
                let pot = scalar + loc.dot(&kappa, &kappa).value() - 2.0 * loc.delta_b1(&kappa, &loc.tau()).value();
                Ok((grid.weight(i) * m, inv, pot, scalar))
            })
            .collect::<Result<_>>()?;
        Ok(BasicProblem {
            grid,
            q,
            weights: rows.iter().map(|r| r.0).collect(),
            inv_metric: rows.iter().map(|r| r.1.clone()).collect(),
            potential: rows.iter().map(|r| r.2).collect(),
            scalar: rows.iter().map(|r| r.3).collect(),
        })
    }

    pub fn grid(&self) -> &BasicGrid {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn scalar(&self) -> &[f64] {
        &self.scalar
    }

    pub fn volume(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// K with uᵀKu = ∫ |∇u|² dV.
    pub fn stiffness(&self) -> DMatrix<f64> {
        let n = self.grid.len();
        let dims = self.grid.dims();
        let d: Vec<DMatrix<f64>> = (0..dims).map(|k| self.grid.diff_matrix(k)).collect();
        let mut k_mat = DMatrix::zeros(n, n);
        for k in 0..dims {
            for l in 0..dims {
                let coef: Vec<f64> = (0..n).map(|i| self.weights[i] * self.inv_metric[i][(k, l)]).collect();
                if coef.iter().all(|c| *c == 0.0) {
                    continue;
                }
                let mut scaled = d[l].clone();
                for (i, c) in coef.iter().enumerate() {
                    scaled.row_mut(i).scale_mut(*c);
                }
                k_mat += d[k].transpose() * scaled;
            }
        }
        (&k_mat + k_mat.transpose()) * 0.5
    }

    /// Basic function with nodal values `f`, as a field on the chart.
    pub fn function(&self, f: &[f64]) -> Result<BasicForm> {
        Ok(BasicForm::function(self.grid.interpolant(f)?))
    }
}

/// λ^Q by shifted inverse iteration on the weighted quadratic form.
pub fn lambda_q(problem: &BasicProblem) -> Result<FunctionalReport> {
    let n = problem.weights.len();
    let w = &problem.weights;
    let mut a = problem.stiffness() * 4.0;
    for i in 0..n {
        a[(i, i)] += w[i] * problem.potential[i];
    }
    let s: Vec<f64> = w.iter().map(|x| 1.0 / x.sqrt()).collect();
    let c = DMatrix::from_fn(n, n, |i, j| a[(i, j)] * s[i] * s[j]);
    let start = DVector::from_iterator(n, w.iter().map(|x| x.sqrt()));
    let (value, v, iterations, converged) = smallest_eigenpair(&c, start)?;
    let mut u: Vec<f64> = (0..n).map(|i| v[i] * s[i]).collect();
    if u.iter().sum::<f64>() < 0.0 {
        u.iter_mut().for_each(|x| *x = -*x);
    }
    let positive = u.iter().all(|x| *x > 0.0);
    let f: Vec<f64> = u.iter().map(|x| -2.0 * x.abs().max(1e-300).ln()).collect();
    let mass: f64 = (0..n).map(|i| w[i] * (-f[i]).exp()).sum();
    Ok(FunctionalReport {
        name: "lambda_Q".into(),
        value,
        minimizer: Some(problem.function(&f)?),
        minimizer_values: f,
        constraint_residual: (mass - 1.0).abs(),
        iterations,
        converged: converged && positive,
    })
}

/// Smallest eigenpair of a symmetric matrix: inverse iteration from a
/// Gershgorin shift, then a shift just below the Rayleigh quotient, certified
/// by a Cholesky factorization below the returned value. Falls back to a dense
/// symmetric eigensolve when certification fails.
fn smallest_eigenpair(c: &DMatrix<f64>, start: DVector<f64>) -> Result<(f64, DVector<f64>, usize, bool)> {
    let n = c.nrows();
    let norm = (0..n).map(|i| c.row(i).iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    let gersh = (0..n)
        .map(|i| c[(i, i)] - c.row(i).iter().enumerate().filter(|(j, _)| *j != i).map(|(_, x)| x.abs()).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    let scale = norm.max(1.0);
    let mut shift = gersh - 1e-6 * scale;
    let mut v = start.normalize();
    let mut lu = (c - DMatrix::identity(n, n) * shift).lu();
    let mut rq = v.dot(&(c * &v));
    let mut converged = false;
    let mut it = 0;
    let mut refined = false;
    while it < EIGEN_MAX_ITER {
        it += 1;
        let Some(x) = lu.solve(&v) else { break };
        let nx = x.norm();
        if !nx.is_finite() || nx == 0.0 {
            break;
        }
        v = x / nx;
        let cv = c * &v;
        rq = v.dot(&cv);
        let res = (cv - &v * rq).norm();
        if res < EIGEN_TOL * (1.0 + rq.abs()) + 1e-14 * scale {
            converged = true;
            break;
        }
        if !refined && res < 1e-4 * (1.0 + rq.abs()) {
            shift = rq - 1e-8 * (1.0 + rq.abs());
            lu = (c - DMatrix::identity(n, n) * shift).lu();
            refined = true;
        }
    }
    let margin = 1e-7 * (1.0 + rq.abs());
    if converged && (c - DMatrix::identity(n, n) * (rq - margin)).cholesky().is_some() {
        return Ok((rq, v, it, true));
    }
    let eig = c.clone().symmetric_eigen();
    let (imin, value) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, x)| if *x < acc.1 { (i, *x) } else { acc });
    if !value.is_finite() {
        return Err(Error::Numeric("eigensolve produced non-finite values".into()));
    }
    Ok((value, eig.eigenvectors.column(imin).into_owned(), it, true))
}

/// V(g)^{2/q} λ^Q.
pub fn normalized_lambda_q(problem: &BasicProblem, lambda: &FunctionalReport) -> Result<f64> {
    if !lambda.converged {
        return Err(Error::Numeric("λ^Q did not converge".into()));
    }
    Ok(problem.volume().powf(2.0 / problem.q as f64) * lambda.value)
}

/// μ^Q by preconditioned projected gradient on u with step halving, over three seeded starts.
pub fn mu_q(problem: &BasicProblem, sigma: f64) -> Result<FunctionalReport> {
    mu_q_with(problem, sigma, MU_MAX_ITER)
}

/// [`mu_q`] with an explicit iteration budget per start.
pub fn mu_q_with(problem: &BasicProblem, sigma: f64, max_iter: usize) -> Result<FunctionalReport> {
    check_sigma(sigma)?;
    let n = problem.weights.len();
    let w = &problem.weights;
    let q = problem.q as f64;
    let k = problem.stiffness();
    let v = &problem.potential;
    let vmax = v.iter().map(|x| x.max(0.0)).fold(0.0, f64::max);
    let mut precond = &k * (8.0 * sigma);
    for i in 0..n {
        precond[(i, i)] += w[i] * (2.0 * sigma * vmax + 4.0);
    }
    let chol = precond.cholesky().ok_or_else(|| Error::Numeric("μ^Q preconditioner not positive definite".into()))?;
    let offset = -q - q / 2.0 * (4.0 * PI * sigma).ln();
    let energy = |u: &DVector<f64>| -> f64 {
        let ku = &k * u;
        let mut e = 4.0 * sigma * u.dot(&ku);
        for i in 0..n {
            let u2 = u[i] * u[i];
            e += sigma * w[i] * v[i] * u2 - w[i] * u2 * u2.ln();
        }
        e + offset
    };
    let normalize = |u: DVector<f64>| -> DVector<f64> {
        let m: f64 = (0..n).map(|i| w[i] * u[i] * u[i]).sum();
        u / m.sqrt()
    };
    let residual = |u: &DVector<f64>| -> DVector<f64> {
        let ku = &k * u;
        let grad = DVector::from_fn(n, |i, _| {
            let u2 = u[i] * u[i];
            8.0 * sigma * ku[i] + w[i] * (2.0 * sigma * v[i] * u[i] - 2.0 * u[i] * (u2.ln() + 1.0))
        });
        let mult = u.dot(&grad) / 2.0;
        DVector::from_fn(n, |i, _| grad[i] - 2.0 * mult * w[i] * u[i])
    };
    let weighted_norm = |r: &DVector<f64>| -> f64 { (0..n).map(|i| r[i] * r[i] / w[i]).sum::<f64>().sqrt() };
    let mut best: Option<(f64, DVector<f64>, usize, bool, f64)> = None;
    let mut total_iter = 0;
    for seed in MU_SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u = normalize(DVector::from_fn(n, |_, _| 1.0 + 0.3 * (rng.random::<f64>() - 0.5)));
        let mut e = energy(&u);
        let mut converged = false;
        let mut gnorm = f64::INFINITY;
        let mut it = 0;
        while it < max_iter {
            it += 1;
            let r = residual(&u);
            gnorm = weighted_norm(&r);
            if gnorm < MU_TOL {
                converged = true;
                break;
            }
            let d = chol.solve(&r);
            let slope = r.dot(&d);
            let mut step = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let cand = &u - &d * step;
                if cand.iter().all(|x| *x > 0.0) {
                    let cand = normalize(cand);
                    let ec = energy(&cand);
                    let decrease = ec <= e - 1e-4 * step * slope;
                    // below round-off in the energy, fall back on the gradient norm
                    let flat = (ec - e).abs() <= 1e-13 * (1.0 + e.abs()) && weighted_norm(&residual(&cand)) < gnorm;
                    if decrease || flat {
                        u = cand;
                        e = ec;
                        accepted = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        total_iter += it;
        if best.as_ref().is_none_or(|b| e < b.0) {
            best = Some((e, u, it, converged, gnorm));
        }
    }
    let (value, u, _, converged, _) = best.expect("at least one start");
    let f: Vec<f64> = u.iter().map(|x| -(x * x).ln() - q / 2.0 * (4.0 * PI * sigma).ln()).collect();
    let norm = (4.0 * PI * sigma).powf(-q / 2.0);
    let mass: f64 = (0..n).map(|i| w[i] * norm * (-f[i]).exp()).sum();
    Ok(FunctionalReport {
        name: format!("mu_Q(sigma={sigma})"),
        value,
        minimizer: Some(problem.function(&f)?),
        minimizer_values: f,
        constraint_residual: (mass - 1.0).abs(),
        iterations: total_iter,
        converged,
    })
}

/// Inputs for the first-variation checks: base f and σ, the metric direction h,
/// and the rates ḟ, σ̇.
#[derive(Debug, Clone)]
pub struct VariationInputs {
    pub f: BasicForm,
    pub h: BasicTensor,
    pub f_dot: BasicForm,
    pub sigma: f64,
    pub sigma_dot: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariationGap {
    pub name: String,
    pub finite_difference: f64,
    pub formula: f64,
}

impl VariationGap {
    pub fn gap(&self) -> f64 {
        (self.finite_difference - self.formula).abs()
    }
}

/// Central differences at steps 1e-3 and 1e-4 combined by Richardson extrapolation.
pub fn richardson<F: Fn(f64) -> Result<f64>>(f: F) -> Result<f64> {
    let cd = |s: f64| -> Result<f64> { Ok((f(s)? - f(-s)?) / (2.0 * s)) };
    Ok((100.0 * cd(1e-4)? - cd(1e-3)?) / 99.0)
}

/// Scalar-curvature variation at a point: dS^Q/dt versus
/// −⟨h, Ric^Q⟩ + δ_T δ_T h + δ_T d tr h.
pub fn scalar_variation(metric: &MetricField, h: &BasicTensor, point: &[f64]) -> Result<VariationGap> {
    let fd = richardson(|t| Ok(Local::new(&h.perturb(metric, t)?, point, 2)?.scalar_q().value()))?;
    let loc = Local::new(metric, point, 2)?;
    let hj = h.jets(point, 2)?;
    let ric = loc.ricci_q();
    let h0: Vec<Jet> = hj.iter().map(|x| x.truncate(0)).collect();
    let formula = -loc.dot2(&h0, &ric).value()
        + loc.delta_t1(&loc.delta_t2(&hj)).value()
        + loc.delta_t1(&loc.df(&loc.trace2(&hj))).value();
    Ok(VariationGap { name: "scalar_curvature".into(), finite_difference: fd, formula })
}

/// Pointwise pieces shared by the F^Q and W^Q variation formulas.
struct VariationTerms {
    /// ⟨h, Ric^Q + ∇(df + κ)⟩
    h_pair: f64,
    /// S^Q − 2Δ_B f − |∇f|² + |κ|² − 2δ_B κ
    bracket: f64,
    /// S^Q − δ_T(df + κ), the trace of Ric^Q + ∇(df + κ)
    trace: f64,
    tr_h: f64,
    f: f64,
    f_dot: f64,
}

fn variation_terms(metric: &MetricField, inputs: &VariationInputs, x: &[f64]) -> Result<VariationTerms> {
    let loc = Local::new(metric, x, 2)?;
    let q = loc.q;
    let tau = loc.tau();
    let kappa = loc.kappa();
    let fj = inputs.f.as_function()?.jet(x, 2)?;
    let hj = inputs.h.jets(x, 0)?;
    let ric = loc.ricci_q();
    let dr = drift(&loc, &fj);
    let hess = loc.nabla1_q(&dr);
    let t: Vec<Jet> = (0..q * q).map(|k| ric[k] + hess[k]).collect();
    let df = loc.df(&fj);
    let s = loc.scalar_q_from(&ric).value();
    let bracket = s - 2.0 * loc.laplacian0(&fj, &tau).value() - loc.dot(&df, &df).value() + loc.dot(&kappa, &kappa).value()
        - 2.0 * loc.delta_b1(&kappa, &tau).value();
    Ok(VariationTerms {
        h_pair: loc.dot2(&hj, &t).value(),
        bracket,
        trace: loc.trace2(&t).value(),
        tr_h: loc.trace2(&hj).value(),
        f: fj.value(),
        f_dot: inputs.f_dot.as_function()?.evaluate(x)?,
    })
}

/// dF^Q/dt along (g_Q + t h, f + t ḟ) versus the first-variation formula.
pub fn f_variation(metric: &MetricField, inputs: &VariationInputs, rule: &QuadratureRule) -> Result<VariationGap> {
    let f = inputs.f.as_function()?;
    let fd_f = inputs.f_dot.as_function()?;
    let fd = richardson(|t| {
        let m = inputs.h.perturb(metric, t)?;
        let ft = BasicForm::function(f.add(&fd_f.scale(t)));
        f_q(&m, &ft, rule)
    })?;
    let formula = integrate_volume(metric, rule, |x| {
        let v = variation_terms(metric, inputs, x)?;
        let weight = (-v.f).exp();
        Ok((-v.h_pair + v.bracket * (0.5 * v.tr_h - v.f_dot)) * weight)
    })?;
    Ok(VariationGap { name: "F_Q".into(), finite_difference: fd, formula })
}

/// dW^Q/dt along (g_Q + t h, f + t ḟ, σ + t σ̇) versus the first-variation formula.
pub fn w_variation(metric: &MetricField, inputs: &VariationInputs, rule: &QuadratureRule) -> Result<VariationGap> {
    let f = inputs.f.as_function()?;
    let fd_f = inputs.f_dot.as_function()?;
    let (sigma, sd) = (inputs.sigma, inputs.sigma_dot);
    check_sigma(sigma)?;
    let q = metric.frame().q() as f64;
    let fd = richardson(|t| {
        let m = inputs.h.perturb(metric, t)?;
        let ft = BasicForm::function(f.add(&fd_f.scale(t)));
        w_q(&m, &ft, sigma + t * sd, rule)
    })?;
    let norm = (4.0 * PI * sigma).powf(-q / 2.0);
    let formula = integrate_volume(metric, rule, |x| {
        let v = variation_terms(metric, inputs, x)?;
        let weight = norm * (-v.f).exp();
        // ⟨−σh + σ̇ g, Ric + ∇(df+κ) − g/(2σ)⟩
        let pair = -sigma * v.h_pair + sd * v.trace + v.tr_h / 2.0 - sd * q / (2.0 * sigma);
        let rate = 0.5 * v.tr_h - v.f_dot - q / (2.0 * sigma) * sd;
        Ok((pair + (sigma * v.bracket + v.f - q - 1.0) * rate) * weight)
    })?;
    Ok(VariationGap { name: "W_Q".into(), finite_difference: fd, formula })
}

/// A constant basic function normalized so that ∫ e^{-f} dV = 1.
pub fn normalized_constant(metric: &MetricField, rule: &QuadratureRule) -> Result<BasicForm> {
    let vol = integrate_volume(metric, rule, |_| Ok(1.0))?;
    Ok(BasicForm::function(ScalarField::constant(metric.chart(), vol.ln())))
}

/// Shifts f by a constant so that ∫ e^{-f} dV = 1.
pub fn normalize_function(metric: &MetricField, f: &ScalarField, rule: &QuadratureRule) -> Result<BasicForm> {
    let m = weighted_volume(metric, &BasicForm::function(f.clone()), rule)?;
    Ok(BasicForm::function(f.add(&ScalarField::constant(metric.chart(), m.ln()))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn f_q_at_zero() {
        let c = Scenario::carriere_default();
        let l = c.log_rho().unwrap();
        let zero = BasicForm::zero(c.chart(), 0, 2);
        assert_relative_eq!(f_q(c.metric(), &zero, &c.quadrature().unwrap()).unwrap(), -l * l, epsilon = 1e-10);
        let s = Scenario::product_sphere();
        let v = f_q(s.metric(), &BasicForm::zero(s.chart(), 0, 2), &s.quadrature().unwrap()).unwrap();
        assert_relative_eq!(v, 16.0 * PI * PI, max_relative = 1e-12);
    }

    #[test]
    fn lambda_q_on_built_in_scenarios() {
        let c = Scenario::carriere_default();
        let l = c.log_rho().unwrap();
        let r = lambda_q(&BasicProblem::new(&c).unwrap()).unwrap();
        assert!(r.converged);
        assert_relative_eq!(r.value, -l * l, epsilon = 1e-9);
        assert!(r.constraint_residual < 1e-10);
        let t = lambda_q(&BasicProblem::new(&Scenario::flat_torus()).unwrap()).unwrap();
        assert!(t.value.abs() < 1e-9, "{}", t.value);
        let s = lambda_q(&BasicProblem::new(&Scenario::product_sphere()).unwrap()).unwrap();
        assert_relative_eq!(s.value, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn mu_q_flat_torus_constant_regime() {
        let s = Scenario::flat_torus().with_resolution(16).unwrap();
        let p = BasicProblem::new(&s).unwrap();
        let r = mu_q(&p, 1.0).unwrap();
        assert!(r.converged);
        assert_relative_eq!(r.value, -2.0 - (4.0 * PI).ln(), epsilon = 1e-9);
    }
}
