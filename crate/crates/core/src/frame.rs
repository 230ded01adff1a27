//! Vector fields, adapted frames, bundle-like metrics and the ambient
//! Levi-Civita connection.

use std::collections::HashMap;
use std::sync::Arc;

use parking_lot::RwLock;

use crate::chart::{Chart, QuadratureRule, ScalarField};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jet::Jet;
use crate::local::Local;

/// A vector field given by its coordinate components.
#[derive(Debug, Clone)]
pub struct VectorField {
    chart: Arc<Chart>,
    coeffs: Vec<ScalarField>,
}

impl VectorField {
    pub fn new(chart: &Arc<Chart>, coeffs: Vec<ScalarField>) -> Result<Self> {
        if coeffs.len() != chart.dim() {
            return Err(Error::Usage(format!(
                "vector field has {} components on a {}-dimensional chart",
                coeffs.len(),
                chart.dim()
            )));
        }
        Ok(VectorField { chart: chart.clone(), coeffs })
    }

    pub fn from_exprs(chart: &Arc<Chart>, coeffs: Vec<Expr>) -> Result<Self> {
        Self::new(chart, coeffs.into_iter().map(|e| ScalarField::analytic(chart, e)).collect())
    }

    /// The coordinate field ∂_k.
    pub fn coordinate(chart: &Arc<Chart>, k: usize) -> Self {
        let coeffs = (0..chart.dim()).map(|i| ScalarField::constant(chart, if i == k { 1.0 } else { 0.0 })).collect();
        VectorField { chart: chart.clone(), coeffs }
    }

    pub fn zero(chart: &Arc<Chart>) -> Self {
        let coeffs = (0..chart.dim()).map(|_| ScalarField::constant(chart, 0.0)).collect();
        VectorField { chart: chart.clone(), coeffs }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn coeffs(&self) -> &[ScalarField] {
        &self.coeffs
    }

    pub fn evaluate(&self, point: &[f64]) -> Result<Vec<f64>> {
        self.coeffs.iter().map(|c| c.evaluate(point)).collect()
    }

    pub fn jets(&self, point: &[f64], order: usize) -> Result<Vec<Jet>> {
        self.coeffs.iter().map(|c| c.jet(point, order)).collect()
    }

    /// The function X(f).
    pub fn apply(&self, f: &ScalarField) -> ScalarField {
        let (x, f) = (self.clone(), f.clone());
        ScalarField::derived(&self.chart, move |p, order| {
            let xj = x.jets(p, order)?;
            let fj = f.jet(p, order + 1)?;
            Ok(directional(&xj, &fj))
        })
    }

    pub fn scale(&self, s: &ScalarField) -> VectorField {
        VectorField { chart: self.chart.clone(), coeffs: self.coeffs.iter().map(|c| c.mul(s)).collect() }
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        VectorField {
            chart: self.chart.clone(),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.add(b)).collect(),
        }
    }
}

/// X(f) for coordinate components `x` and a jet `f`; lowers the order of `f` by one.
pub fn directional(x: &[Jet], f: &Jet) -> Jet {
    let order = f.order().saturating_sub(1);
    let mut out = Jet::zero(order);
    if f.order() == 0 {
        return out;
    }
    for (k, xk) in x.iter().enumerate() {
        out += xk.truncate(order.min(xk.order())) * f.deriv(k);
    }
    out
}

/// [X, Y]^k = X(Y^k) − Y(X^k).
pub fn lie_bracket(x: &VectorField, y: &VectorField) -> Result<VectorField> {
    if !Arc::ptr_eq(&x.chart, &y.chart) && x.chart.dim() != y.chart.dim() {
        return Err(Error::Usage("lie bracket of fields on different charts".into()));
    }
    let chart = x.chart.clone();
    let coeffs = (0..chart.dim())
        .map(|k| {
            let (x, y) = (x.clone(), y.clone());
            ScalarField::derived(&chart, move |p, order| {
                let xj = x.jets(p, order + 1)?;
                let yj = y.jets(p, order + 1)?;
                Ok(directional(&xj, &yj[k]) - directional(&yj, &xj[k]))
            })
        })
        .collect();
    VectorField::new(&chart, coeffs)
}

/// A closed straight loop `start + s·displacement`, s ∈ [0, 1].
#[derive(Debug, Clone)]
pub struct Cycle {
    pub name: String,
    pub start: Vec<f64>,
    pub displacement: Vec<f64>,
}

impl Cycle {
    pub fn new(name: &str, start: Vec<f64>, displacement: Vec<f64>) -> Self {
        Cycle { name: name.to_string(), start, displacement }
    }

    pub fn point(&self, s: f64) -> Vec<f64> {
        self.start.iter().zip(&self.displacement).map(|(a, d)| a + s * d).collect()
    }
}

/// A chart with an adapted frame: e_0..e_{p-1} span the leaves, the rest are transverse.
#[derive(Debug, Clone)]
pub struct FramePresentation {
    chart: Arc<Chart>,
    frame: Vec<VectorField>,
    p: usize,
    q: usize,
    cycles: Vec<Cycle>,
}

impl FramePresentation {
    pub fn new(chart: &Arc<Chart>, frame: Vec<VectorField>, p: usize) -> Result<Self> {
        let n = chart.dim();
        if frame.len() != n {
            return Err(Error::Config(format!("frame has {} fields on a {n}-dimensional chart", frame.len())));
        }
        if p == 0 || p >= n {
            return Err(Error::Config(format!("degenerate foliation: leaf dimension {p} in dimension {n}")));
        }
        Ok(FramePresentation { chart: chart.clone(), frame, p, q: n - p, cycles: Vec::new() })
    }

    pub fn with_cycles(mut self, cycles: Vec<Cycle>) -> Self {
        self.cycles = cycles;
        self
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn frame(&self) -> &[VectorField] {
        &self.frame
    }

    pub fn field(&self, i: usize) -> &VectorField {
        &self.frame[i]
    }

    pub fn n(&self) -> usize {
        self.p + self.q
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn cycles(&self) -> &[Cycle] {
        &self.cycles
    }

    pub fn is_leaf(&self, i: usize) -> bool {
        i < self.p
    }

    /// Coordinate matrix E with e_i = Σ_k E[i][k] ∂_k.
    pub fn matrix_jets(&self, point: &[f64], order: usize) -> Result<Vec<Vec<Jet>>> {
        self.frame.iter().map(|f| f.jets(point, order)).collect()
    }

    /// Checks pointwise independence and involutivity of the leaf distribution.
    pub fn validate(&self, rule: &QuadratureRule, tol: f64) -> Result<()> {
        let n = self.n();
        for node in rule.nodes() {
            let e = self.matrix_jets(&node.point, 1)?;
            let m = nalgebra::DMatrix::from_fn(n, n, |i, k| e[i][k].value());
            let det = m.determinant();
            if det.abs() <= 1e-10 {
                return Err(Error::Model(format!("frame degenerate at node {:?} (det = {det:e})", node.point)));
            }
            let c = structure_functions(&e)?;
            for i in 0..self.p {
                for j in 0..self.p {
                    for k in self.p..n {
                        let v = c[(i * n + j) * n + k].value();
                        if v.abs() > tol {
                            return Err(Error::Model(format!(
                                "leaf distribution not involutive at {:?}: [e{i},e{j}] has transverse component {v:e}",
                                node.point
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Inverse of a small square jet matrix by Gauss–Jordan elimination.
pub fn invert(m: &[Vec<Jet>]) -> Option<Vec<Vec<Jet>>> {
    let n = m.len();
    let order = m.iter().flatten().map(Jet::order).min().unwrap_or(0);
    let mut a: Vec<Vec<Jet>> = m.to_vec();
    let mut inv: Vec<Vec<Jet>> = (0..n)
        .map(|i| (0..n).map(|j| Jet::constant(if i == j { 1.0 } else { 0.0 }, order)).collect())
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].value().abs().total_cmp(&a[y][col].value().abs()))?;
        if a[piv][col].value().abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let r = a[col][col].recip();
        for j in 0..n {
            a[col][j] = a[col][j] * r;
            inv[col][j] = inv[col][j] * r;
        }
        for row in 0..n {
            if row != col {
                let f = a[row][col];
                if f.max_abs() == 0.0 {
                    continue;
                }
                for j in 0..n {
                    a[row][j] = a[row][j] - f * a[col][j];
                    inv[row][j] = inv[row][j] - f * inv[col][j];
                }
            }
        }
    }
    Some(inv)
}

/// Structure functions c_ij^k with [e_i, e_j] = c_ij^k e_k, flattened as (i·n + j)·n + k.
pub fn structure_functions(e: &[Vec<Jet>]) -> Result<Vec<Jet>> {
    let n = e.len();
    let theta = invert(e).ok_or_else(|| Error::Numeric("frame matrix is singular".into()))?;
    let mut c = vec![Jet::zero(0); n * n * n];
    for i in 0..n {
        for j in 0..n {
            let br: Vec<Jet> = (0..n).map(|k| directional(&e[i], &e[j][k]) - directional(&e[j], &e[i][k])).collect();
            for l in 0..n {
                let mut s = Jet::zero(br[0].order());
                for k in 0..n {
                    s += br[k] * theta[k][l];
                }
                c[(i * n + j) * n + l] = s;
            }
        }
    }
    Ok(c)
}

/// Deliberate corruptions used to check that the verification suites notice them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mutation {
    #[default]
    None,
    FlipTransverseConnection,
}

/// A bundle-like metric g = g_F ⊕ g_Q given by its frame matrix g(e_i, e_j).
#[derive(Debug, Clone)]
pub struct MetricField {
    frame: Arc<FramePresentation>,
    entries: Vec<Vec<ScalarField>>,
    orthonormal: bool,
    mutation: Mutation,
}

impl MetricField {
    /// The metric making the frame orthonormal.
    pub fn orthonormal(frame: &Arc<FramePresentation>) -> Self {
        let n = frame.n();
        let c = frame.chart();
        let entries = (0..n)
            .map(|i| (0..n).map(|j| ScalarField::constant(c, if i == j { 1.0 } else { 0.0 })).collect())
            .collect();
        MetricField { frame: frame.clone(), entries, orthonormal: true, mutation: Mutation::None }
    }

    /// A general frame matrix; must be symmetric with vanishing leaf/transverse block.
    pub fn new(frame: &Arc<FramePresentation>, entries: Vec<Vec<ScalarField>>) -> Result<Self> {
        let n = frame.n();
        if entries.len() != n || entries.iter().any(|r| r.len() != n) {
            return Err(Error::Config(format!("metric frame matrix must be {n}×{n}")));
        }
        for i in 0..n {
            for j in 0..n {
                if frame.is_leaf(i) != frame.is_leaf(j) {
                    match entries[i][j].as_constant() {
                        Some(v) if v == 0.0 => {}
                        _ => {
                            return Err(Error::Config(format!(
                                "metric entry ({i},{j}) couples leaf and transverse directions"
                            )))
                        }
                    }
                }
            }
        }
        let orthonormal = (0..n).all(|i| {
            (0..n).all(|j| entries[i][j].as_constant() == Some(if i == j { 1.0 } else { 0.0 }))
        });
        Ok(MetricField { frame: frame.clone(), entries, orthonormal, mutation: Mutation::None })
    }

    /// Same leaf metric, transverse block replaced by `g_q` (q×q).
    pub fn with_transverse_block(&self, g_q: Vec<Vec<ScalarField>>) -> Result<Self> {
        let p = self.frame.p();
        let mut entries = self.entries.clone();
        for (a, row) in g_q.into_iter().enumerate() {
            for (b, v) in row.into_iter().enumerate() {
                entries[p + a][p + b] = v;
            }
        }
        let mut m = MetricField::new(&self.frame, entries)?;
        m.mutation = self.mutation;
        Ok(m)
    }

    /// The metric g_F ⊕ c·g_Q.
    pub fn scale_transverse(&self, c: f64) -> Result<Self> {
        let (p, q) = (self.frame.p(), self.frame.q());
        let block = (0..q).map(|a| (0..q).map(|b| self.entries[p + a][p + b].scale(c)).collect()).collect();
        self.with_transverse_block(block)
    }

    pub fn with_mutation(mut self, m: Mutation) -> Self {
        self.mutation = m;
        self
    }

    pub fn mutation(&self) -> Mutation {
        self.mutation
    }

    pub fn frame(&self) -> &Arc<FramePresentation> {
        &self.frame
    }

    pub fn chart(&self) -> &Arc<Chart> {
        self.frame.chart()
    }

    pub fn entry(&self, i: usize, j: usize) -> &ScalarField {
        &self.entries[i][j]
    }

    pub fn is_orthonormal(&self) -> bool {
        self.orthonormal
    }

    pub fn matrix_jets(&self, point: &[f64], order: usize) -> Result<Vec<Vec<Jet>>> {
        let n = self.frame.n();
        let mut g = vec![vec![Jet::zero(order); n]; n];
        for i in 0..n {
            for j in i..n {
                let v = self.entries[i][j].jet(point, order)?;
                g[i][j] = v;
                g[j][i] = v;
            }
        }
        Ok(g)
    }

    pub fn matrix(&self, point: &[f64]) -> Result<nalgebra::DMatrix<f64>> {
        let n = self.frame.n();
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = self.entries[i][j].evaluate(point)?;
            }
        }
        Ok(m)
    }

    /// Transverse block g_Q(e_a, e_b) at a point.
    pub fn transverse_matrix(&self, point: &[f64]) -> Result<nalgebra::DMatrix<f64>> {
        let p = self.frame.p();
        let q = self.frame.q();
        let full = self.matrix(point)?;
        Ok(full.view((p, p), (q, q)).into_owned())
    }

    /// Checks symmetry and positive definiteness at every node.
    pub fn validate(&self, rule: &QuadratureRule) -> Result<()> {
        for node in rule.nodes() {
            let m = self.matrix(&node.point)?;
            if (&m - m.transpose()).amax() > 1e-12 {
                return Err(Error::Numeric(format!("metric not symmetric at node {:?}", node.point)));
            }
            if nalgebra::Cholesky::new(m).is_none() {
                return Err(Error::Numeric(format!("metric not positive definite at node {:?}", node.point)));
            }
        }
        Ok(())
    }

    /// Riemannian density sqrt(det g)/|det E| relative to coordinate measure.
    pub fn density(&self, point: &[f64]) -> Result<f64> {
        let n = self.frame.n();
        let e = self.frame.matrix_jets(point, 0)?;
        let em = nalgebra::DMatrix::from_fn(n, n, |i, k| e[i][k].value());
        let g = self.matrix(point)?;
        Ok(g.determinant().sqrt() / em.determinant().abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConnectionVariant {
    Ambient,
    Transverse,
}

/// Connection coefficients Γ_ij^k = k-component of ∇_{e_i} e_j, memoized per point.
pub struct ConnectionCoefficients {
    metric: Arc<MetricField>,
    variant: ConnectionVariant,
    cache: RwLock<HashMap<Vec<u64>, Arc<Vec<f64>>>>,
}

impl std::fmt::Debug for ConnectionCoefficients {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConnectionCoefficients").field("variant", &self.variant).finish_non_exhaustive()
    }
}

impl ConnectionCoefficients {
    pub fn new(metric: &Arc<MetricField>, variant: ConnectionVariant) -> Self {
        ConnectionCoefficients { metric: metric.clone(), variant, cache: RwLock::new(HashMap::new()) }
    }

    pub fn metric(&self) -> &Arc<MetricField> {
        &self.metric
    }

    pub fn variant(&self) -> ConnectionVariant {
        self.variant
    }

    pub fn n(&self) -> usize {
        self.metric.frame().n()
    }

    /// All coefficients at a point, flattened as (i·n + j)·n + k.
    pub fn at(&self, point: &[f64]) -> Result<Arc<Vec<f64>>> {
        let p = self.metric.chart().wrap(point)?;
        let key: Vec<u64> = p.iter().map(|x| x.to_bits()).collect();
        if let Some(v) = self.cache.read().get(&key) {
            return Ok(v.clone());
        }
        let loc = Local::new(&self.metric, &p, 1)?;
        let src = match self.variant {
            ConnectionVariant::Ambient => &loc.gamma,
            ConnectionVariant::Transverse => &loc.t,
        };
        let v = Arc::new(src.iter().map(Jet::value).collect::<Vec<_>>());
        self.cache.write().entry(key).or_insert_with(|| v.clone());
        Ok(v)
    }

    pub fn coefficient(&self, i: usize, j: usize, k: usize, point: &[f64]) -> Result<f64> {
        let n = self.n();
        Ok(self.at(point)?[(i * n + j) * n + k])
    }

    pub fn cache_len(&self) -> usize {
        self.cache.read().len()
    }
}

/// The ambient Levi-Civita connection, after checking the metric on `rule`.
pub fn levi_civita(metric: &Arc<MetricField>, rule: &QuadratureRule) -> Result<ConnectionCoefficients> {
    metric.validate(rule)?;
    Ok(ConnectionCoefficients::new(metric, ConnectionVariant::Ambient))
}

/// Frame components of R(e_x, e_y)e_z for the ambient connection.
pub fn ambient_curvature(conn: &ConnectionCoefficients, x: usize, y: usize, z: usize, point: &[f64]) -> Result<Vec<f64>> {
    let n = conn.n();
    if x >= n || y >= n || z >= n {
        return Err(Error::Usage(format!("frame index out of range (n = {n})")));
    }
    let loc = Local::new(conn.metric(), point, 2)?;
    let gamma = match conn.variant() {
        ConnectionVariant::Ambient => &loc.gamma,
        ConnectionVariant::Transverse => &loc.t,
    };
    Ok(loc.curvature(gamma, x, y, z).iter().map(Jet::value).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{Axis, AxisKind};
    use approx::assert_relative_eq;

    fn carriere_frame() -> (Arc<FramePresentation>, f64) {
        let l = ((3.0 + 5f64.sqrt()) / 2.0).ln();
        let chart = Arc::new(
            Chart::new(vec![
                Axis::new("x", 0.0, 1.0, AxisKind::Periodic),
                Axis::new("y", 0.0, 1.0, AxisKind::Periodic),
                Axis::new("t", 0.0, 1.0, AxisKind::TwistedPeriodic),
            ])
            .unwrap(),
        );
        let t = Expr::var(2);
        let z = Expr::constant(0.0);
        let one = Expr::constant(1.0);
        let e1 = VectorField::from_exprs(&chart, vec![(t.clone() * -l).exp(), z.clone(), z.clone()]).unwrap();
        let e2 = VectorField::from_exprs(&chart, vec![z.clone(), (t * l).exp(), z.clone()]).unwrap();
        let e3 = VectorField::from_exprs(&chart, vec![z.clone(), z, one]).unwrap();
        (Arc::new(FramePresentation::new(&chart, vec![e1, e2, e3], 1).unwrap()), l)
    }

    #[test]
    fn coordinate_fields_commute() {
        let chart = Arc::new(
            Chart::new(vec![Axis::new("x", 0.0, 1.0, AxisKind::Periodic), Axis::new("y", 0.0, 1.0, AxisKind::Periodic)])
                .unwrap(),
        );
        let b = lie_bracket(&VectorField::coordinate(&chart, 0), &VectorField::coordinate(&chart, 1)).unwrap();
        assert_eq!(b.evaluate(&[0.3, 0.7]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn carriere_brackets() {
        let (f, l) = carriere_frame();
        let p = [0.2, 0.4, 0.3];
        let b13 = lie_bracket(f.field(0), f.field(2)).unwrap().evaluate(&p).unwrap();
        assert_relative_eq!(b13[0], l * (-l * 0.3f64).exp(), epsilon = 1e-14);
        assert_relative_eq!(b13[1], 0.0);
        let b23 = lie_bracket(f.field(1), f.field(2)).unwrap().evaluate(&p).unwrap();
        assert_relative_eq!(b23[1], -l * (l * 0.3f64).exp(), epsilon = 1e-14);
        let e = f.matrix_jets(&p, 2).unwrap();
        let c = structure_functions(&e).unwrap();
        assert_relative_eq!(c[2 * 3].value(), l, epsilon = 1e-14);
        assert_relative_eq!(c[(3 + 2) * 3 + 1].value(), -l, epsilon = 1e-14);
    }

    #[test]
    fn jet_inverse_matches_derivative_of_inverse() {
        let (f, _) = carriere_frame();
        let e = f.matrix_jets(&[0.0, 0.0, 0.7], 2).unwrap();
        let inv = invert(&e).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = Jet::zero(2);
                for k in 0..3 {
                    s += e[i][k] * inv[k][j];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((s - target).max_abs() < 1e-13);
            }
        }
    }

    #[test]
    fn connection_is_memoized() {
        let (f, l) = carriere_frame();
        let g = Arc::new(MetricField::orthonormal(&f));
        let conn = ConnectionCoefficients::new(&g, ConnectionVariant::Ambient);
        let p = [0.1, 0.2, 0.3];
        assert_relative_eq!(conn.coefficient(0, 0, 2, &p).unwrap(), -l, epsilon = 1e-14);
        assert_relative_eq!(conn.coefficient(0, 2, 0, &p).unwrap(), l, epsilon = 1e-14);
        assert_eq!(conn.cache_len(), 1);
        conn.coefficient(1, 1, 2, &p).unwrap();
        assert_eq!(conn.cache_len(), 1);
    }

    #[test]
    fn rejects_mixed_blocks() {
        let (f, _) = carriere_frame();
        let c = f.chart().clone();
        let mut entries: Vec<Vec<ScalarField>> =
            (0..3).map(|i| (0..3).map(|j| ScalarField::constant(&c, if i == j { 1.0 } else { 0.0 })).collect()).collect();
        entries[0][1] = ScalarField::constant(&c, 0.1);
        entries[1][0] = ScalarField::constant(&c, 0.1);
        assert!(matches!(MetricField::new(&f, entries), Err(Error::Config(_))));
    }
}
