//! Spectral grids on the basic coordinates.
//!
//! Basic functions are represented by nodal values on a tensor grid over the
//! basic axes: Fourier on periodic and twisted axes, Gauss–Legendre on open
//! ones. Fourier axes always carry an odd number of nodes (an even request is
//! rounded up) so that no Nyquist mode escapes the differentiation matrix. The grid supplies quadrature weights, differentiation matrices and an
//! exact-jet interpolant back to a [`ScalarField`] on the full chart.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::chart::{gauss_legendre_unit, AxisKind, AxisRule, Chart, ScalarField};
use crate::error::{Error, Result};
use crate::jet::Jet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Fourier,
    Legendre,
}

#[derive(Debug, Clone)]
struct AxisData {
    axis: usize,
    basis: Basis,
    rule: AxisRule,
    lo: f64,
    hi: f64,
    /// Differentiation matrix on the nodes.
    diff: DMatrix<f64>,
    /// Nodal values → expansion coefficients.
    analysis: DMatrix<f64>,
}

impl AxisData {
    fn new(chart: &Chart, axis: usize, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!("basic grid resolution {n} < 2")));
        }
        let a = chart.axis(axis);
        let (lo, hi) = (a.lo, a.hi);
        match a.kind {
            AxisKind::Periodic | AxisKind::TwistedPeriodic => {
                let n = n | 1;
                let rule = AxisRule::trapezoid(lo, hi, n);
                let len = hi - lo;
                let diff = DMatrix::from_fn(n, n, |j, k| {
                    if j == k {
                        return 0.0;
                    }
                    let d = j as f64 - k as f64;
                    let sign = if (j + k).is_multiple_of(2) { 1.0 } else { -1.0 };
                    let x = std::f64::consts::PI * d / n as f64;
                    let v = if n.is_multiple_of(2) { 0.5 * sign / x.tan() } else { 0.5 * sign / x.sin() };
                    v * 2.0 * std::f64::consts::PI / len
                });
                let analysis = DMatrix::from_fn(n, n, |m, j| {
                    let th = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                    let (k, is_sin) = fourier_mode(m);
                    let nyquist = n.is_multiple_of(2) && k * 2 == n;
                    if k == 0 || nyquist {
                        (k as f64 * th).cos() / n as f64
                    } else if is_sin {
                        2.0 * (k as f64 * th).sin() / n as f64
                    } else {
                        2.0 * (k as f64 * th).cos() / n as f64
                    }
                });
                Ok(AxisData { axis, basis: Basis::Fourier, rule, lo, hi, diff, analysis })
            }
            AxisKind::Open => {
                let rule = AxisRule::gauss_legendre(lo, hi, n);
                let (xi, w) = gauss_legendre_unit(n);
                // barycentric weights of Gauss–Legendre nodes
                let lam: Vec<f64> = (0..n)
                    .map(|k| if k % 2 == 0 { 1.0 } else { -1.0 } * ((1.0 - xi[k] * xi[k]) * w[k]).sqrt())
                    .collect();
                let scale = 2.0 / (hi - lo);
                let mut diff = DMatrix::from_fn(n, n, |j, k| {
                    if j == k {
                        0.0
                    } else {
                        (lam[k] / lam[j]) / (xi[j] - xi[k]) * scale
                    }
                });
                for j in 0..n {
                    let s: f64 = (0..n).filter(|&k| k != j).map(|k| diff[(j, k)]).sum();
                    diff[(j, j)] = -s;
                }
                let analysis = DMatrix::from_fn(n, n, |m, j| {
                    let (pm, _) = legendre(m, xi[j]);
                    (2 * m + 1) as f64 / 2.0 * w[j] * pm
                });
                Ok(AxisData { axis, basis: Basis::Legendre, rule, lo, hi, diff, analysis })
            }
        }
    }

    /// Basis functions evaluated at a jet argument.
    fn basis_jets(&self, x: Jet, count: usize) -> Vec<Jet> {
        match self.basis {
            Basis::Fourier => {
                let th = (x - self.lo) * (2.0 * std::f64::consts::PI / (self.hi - self.lo));
                (0..count)
                    .map(|m| {
                        let (k, is_sin) = fourier_mode(m);
                        let arg = th * k as f64;
                        if is_sin {
                            arg.sin()
                        } else {
                            arg.cos()
                        }
                    })
                    .collect()
            }
            Basis::Legendre => {
                let xi = (x - 0.5 * (self.lo + self.hi)) * (2.0 / (self.hi - self.lo));
                let mut out = Vec::with_capacity(count);
                let mut p0 = xi.lift_const(1.0);
                let mut p1 = xi;
                out.push(p0);
                if count > 1 {
                    out.push(p1);
                }
                for k in 2..count {
                    let p2 = (xi * p1 * (2 * k - 1) as f64 - p0 * (k - 1) as f64) * (1.0 / k as f64);
                    out.push(p2);
                    p0 = p1;
                    p1 = p2;
                }
                out
            }
        }
    }
}

trait LiftConst {
    fn lift_const(&self, v: f64) -> Jet;
}

impl LiftConst for Jet {
    fn lift_const(&self, v: f64) -> Jet {
        Jet::constant(v, self.order())
    }
}

/// Mode index m ↦ (wavenumber, is_sine): 0 ↦ (0, cos), 1 ↦ (1, cos), 2 ↦ (1, sin), ...
fn fourier_mode(m: usize) -> (usize, bool) {
    if m == 0 {
        (0, false)
    } else {
        (m.div_ceil(2), m.is_multiple_of(2))
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

/// Tensor grid over the basic coordinates of a chart.
#[derive(Debug, Clone)]
pub struct BasicGrid {
    chart: Arc<Chart>,
    axes: Vec<AxisData>,
    shape: Vec<usize>,
    representative: Vec<f64>,
}

impl BasicGrid {
    pub fn new(chart: &Arc<Chart>, basic_axes: &[usize], resolution: &[usize], representative: &[f64]) -> Result<Self> {
        if basic_axes.is_empty() || basic_axes.len() != resolution.len() {
            return Err(Error::Config("basic grid needs one resolution per basic axis".into()));
        }
        let axes = basic_axes
            .iter()
            .zip(resolution)
            .map(|(&a, &n)| AxisData::new(chart, a, n))
            .collect::<Result<Vec<_>>>()?;
        Ok(BasicGrid {
            chart: chart.clone(),
            shape: axes.iter().map(|a| a.rule.len()).collect(),
            axes,
            representative: representative.to_vec(),
        })
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn chart_axis(&self, d: usize) -> usize {
        self.axes[d].axis
    }

    pub fn basis(&self, d: usize) -> Basis {
        self.axes[d].basis
    }

    fn multi_index(&self, mut i: usize) -> Vec<usize> {
        let mut idx = vec![0; self.shape.len()];
        for d in (0..self.shape.len()).rev() {
            idx[d] = i % self.shape[d];
            i /= self.shape[d];
        }
        idx
    }

    /// Full chart point of node i (non-basic coordinates from the representative point).
    pub fn point(&self, i: usize) -> Vec<f64> {
        let idx = self.multi_index(i);
        let mut p = self.representative.clone();
        for (d, ax) in self.axes.iter().enumerate() {
            p[ax.axis] = ax.rule.nodes[idx[d]];
        }
        p
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Product of per-axis quadrature weights (coordinate measure on the basic axes).
    pub fn weight(&self, i: usize) -> f64 {
        let idx = self.multi_index(i);
        self.axes.iter().zip(&idx).map(|(ax, &k)| ax.rule.weights[k]).product()
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.weight(i)).collect()
    }

    /// Applies a per-axis matrix along grid dimension d.
    fn apply_along(&self, d: usize, m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
        let n = self.shape[d];
        let inner: usize = self.shape[d + 1..].iter().product();
        let outer: usize = self.shape[..d].iter().product();
        let mut out = vec![0.0; v.len()];
        for o in 0..outer {
            for i in 0..inner {
                for j in 0..n {
                    let mut s = 0.0;
                    for k in 0..n {
                        s += m[(j, k)] * v[(o * n + k) * inner + i];
                    }
                    out[(o * n + j) * inner + i] = s;
                }
            }
        }
        out
    }

    /// ∂u/∂x_{axis d} at the nodes.
    pub fn differentiate(&self, d: usize, v: &[f64]) -> Vec<f64> {
        self.apply_along(d, &self.axes[d].diff, v)
    }

    /// Dense matrix of ∂/∂x_d acting on flattened nodal vectors.
    pub fn diff_matrix(&self, d: usize) -> DMatrix<f64> {
        let n = self.len();
        let mut m = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for col in 0..n {
            e[col] = 1.0;
            let c = self.differentiate(d, &e);
            for row in 0..n {
                m[(row, col)] = c[row];
            }
            e[col] = 0.0;
        }
        m
    }

    pub fn sample(&self, f: &ScalarField) -> Result<Vec<f64>> {
        (0..self.len()).map(|i| f.evaluate(&self.point(i))).collect()
    }

    /// Spectral interpolant of nodal values as a field on the full chart with exact jets.
    pub fn interpolant(&self, values: &[f64]) -> Result<ScalarField> {
        if values.len() != self.len() {
            return Err(Error::Usage(format!("{} nodal values for a grid of {}", values.len(), self.len())));
        }
        let mut coef = values.to_vec();
        for d in 0..self.dims() {
            coef = self.apply_along(d, &self.axes[d].analysis, &coef);
        }
        let grid = self.clone();
        let coef = Arc::new(coef);
        Ok(ScalarField::derived(&self.chart, move |p, order| {
            let basis: Vec<Vec<Jet>> = grid
                .axes
                .iter()
                .zip(&grid.shape)
                .map(|(ax, &n)| ax.basis_jets(Jet::variable(p[ax.axis], ax.axis, order), n))
                .collect();
            Ok(contract(&coef, &grid.shape, &basis, order))
        }))
    }
}

/// Σ_{k1..kd} C[k1..kd] φ1_{k1} ⋯ φd_{kd}, contracting the last axis first.
fn contract(coef: &[f64], shape: &[usize], basis: &[Vec<Jet>], order: usize) -> Jet {
    if shape.len() == 1 {
        let mut s = Jet::zero(order);
        for (c, b) in coef.iter().zip(&basis[0]) {
            if *c != 0.0 {
                s += b.scale(*c);
            }
        }
        return s;
    }
    let n0 = shape[0];
    let inner: usize = shape[1..].iter().product();
    let mut s = Jet::zero(order);
    for k in 0..n0 {
        let part = contract(&coef[k * inner..(k + 1) * inner], &shape[1..], &basis[1..], order);
        s += basis[0][k] * part;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Axis;
    use crate::expr::Expr;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn chart() -> Arc<Chart> {
        Arc::new(
            Chart::new(vec![
                Axis::new("psi", 0.0, 2.0 * PI, AxisKind::Periodic),
                Axis::new("theta", 0.0, PI, AxisKind::Open),
                Axis::new("phi", 0.0, 2.0 * PI, AxisKind::Periodic),
            ])
            .unwrap(),
        )
    }

    #[test]
    fn spectral_derivatives_are_exact_for_band_limited_data() {
        let c = chart();
        for n in [9usize, 10] {
            let g = BasicGrid::new(&c, &[1, 2], &[n, n], &[0.0, 1.0, 0.0]).unwrap();
            let f = ScalarField::analytic(&c, Expr::var(1).powf(3.0) * (Expr::var(2) * 2.0).sin());
            let v = g.sample(&f).unwrap();
            let dth = g.differentiate(0, &v);
            let dph = g.differentiate(1, &v);
            for i in 0..g.len() {
                let p = g.point(i);
                assert_relative_eq!(dth[i], 3.0 * p[1] * p[1] * (2.0 * p[2]).sin(), epsilon = 1e-9);
                assert_relative_eq!(dph[i], 2.0 * p[1].powi(3) * (2.0 * p[2]).cos(), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn interpolant_reproduces_values_and_derivatives() {
        let c = chart();
        let g = BasicGrid::new(&c, &[1, 2], &[12, 8], &[0.0, 1.0, 0.0]).unwrap();
        let f = ScalarField::analytic(&c, Expr::var(1).powf(2.0) * Expr::var(2).cos() + Expr::var(2).sin() * 0.5);
        let v = g.sample(&f).unwrap();
        let u = g.interpolant(&v).unwrap();
        for i in [0, 5, 40, 95] {
            assert_relative_eq!(u.evaluate(&g.point(i)).unwrap(), v[i], epsilon = 1e-11);
        }
        let p = [0.3, 1.1, 2.2];
        let a = u.jet(&p, 2).unwrap();
        let b = f.jet(&p, 2).unwrap();
        assert!((a - b).max_abs() < 1e-9, "{a:?} vs {b:?}");
    }

    #[test]
    fn weights_integrate_sphere_area_element() {
        let c = chart();
        let g = BasicGrid::new(&c, &[1, 2], &[16, 8], &[0.0, 1.0, 0.0]).unwrap();
        let s: f64 = (0..g.len()).map(|i| g.weight(i) * g.point(i)[1].sin()).sum();
        assert_relative_eq!(s, 4.0 * PI, epsilon = 1e-12);
    }
}
