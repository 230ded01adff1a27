//! Pointwise geometry in jet arithmetic.
//!
//! [`Local`] expands the frame and metric about a point to a given order and
//! derives structure functions, both connections, curvature, mean curvature
//! and the basic operators from them. Each differentiation consumes one order,
//! so curvature needs order 2, its first covariant derivative order 3.
//!
//! Frame indices run over `0..n` with leaves first; form and tensor indices
//! `a, b, ..` run over `0..q` and correspond to frame index `p + a`.

use crate::error::{Error, Result};
use crate::frame::{directional, invert, structure_functions, MetricField, Mutation};
use crate::jet::Jet;

#[derive(Debug, Clone)]
pub struct Local {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub order: usize,
    /// Frame coordinate matrix, e_i = Σ_k e[i][k] ∂_k.
    pub e: Vec<Vec<Jet>>,
    pub g: Vec<Vec<Jet>>,
    pub ginv: Vec<Vec<Jet>>,
    /// [e_i, e_j] = c[(i n + j) n + k] e_k.
    pub c: Vec<Jet>,
    /// Ambient Levi-Civita: D_{e_i} e_j = gamma[(i n + j) n + k] e_k.
    pub gamma: Vec<Jet>,
    /// Transverse connection on Q, same layout; zero unless j, k are transverse.
    pub t: Vec<Jet>,
}

impl Local {
    pub fn new(metric: &MetricField, point: &[f64], order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::Usage("local geometry needs order ≥ 1".into()));
        }
        let frame = metric.frame();
        let (n, p, q) = (frame.n(), frame.p(), frame.q());
        let point = metric.chart().wrap(point)?;
        let e = frame.matrix_jets(&point, order)?;
        let g = metric.matrix_jets(&point, order)?;
        let ginv = invert(&g).ok_or_else(|| Error::Numeric(format!("metric singular at {point:?}")))?;
        if g.iter().enumerate().any(|(i, r)| r[i].value() <= 0.0) {
            return Err(Error::Numeric(format!("metric not positive definite at {point:?}")));
        }
        let c = structure_functions(&e)?;
        let idx = |i: usize, j: usize, k: usize| (i * n + j) * n + k;

        let mut eg = vec![Jet::zero(order - 1); n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in j..n {
                    let v = directional(&e[i], &g[j][k]);
                    eg[idx(i, j, k)] = v;
                    eg[idx(i, k, j)] = v;
                }
            }
        }
        let mut low = vec![Jet::zero(order - 1); n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut s = eg[idx(i, j, k)] + eg[idx(j, i, k)] - eg[idx(k, i, j)];
                    for l in 0..n {
                        s += c[idx(i, j, l)] * g[l][k] - c[idx(i, k, l)] * g[l][j] - c[idx(j, k, l)] * g[l][i];
                    }
                    low[idx(i, j, k)] = s * 0.5;
                }
            }
        }
        let mut gamma = vec![Jet::zero(order - 1); n * n * n];
        for i in 0..n {
            for j in 0..n {
                for m in 0..n {
                    let mut s = Jet::zero(order - 1);
                    for k in 0..n {
                        s += low[idx(i, j, k)] * ginv[k][m];
                    }
                    gamma[idx(i, j, m)] = s;
                }
            }
        }
        let sign = if metric.mutation() == Mutation::FlipTransverseConnection { -1.0 } else { 1.0 };
        let mut t = vec![Jet::zero(order - 1); n * n * n];
        for i in 0..n {
            for cc in p..n {
                for d in p..n {
                    let v = if i < p { c[idx(i, cc, d)] } else { gamma[idx(i, cc, d)] };
                    t[idx(i, cc, d)] = v.scale(sign);
                }
            }
        }
        Ok(Local { n, p, q, order, e, g, ginv, c, gamma, t })
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    /// e_i(f), one order lower than `f`.
    pub fn d(&self, i: usize, f: &Jet) -> Jet {
        directional(&self.e[i], f)
    }

    /// g_Q(e_a, e_b) and its inverse in transverse indices.
    pub fn gq(&self, a: usize, b: usize) -> Jet {
        self.g[self.p + a][self.p + b]
    }

    pub fn gq_inv(&self, a: usize, b: usize) -> Jet {
        self.ginv[self.p + a][self.p + b]
    }

    /// Transverse connection coefficient T_{i a}^{b}: frame direction i, transverse a, b.
    pub fn tc(&self, i: usize, a: usize, b: usize) -> Jet {
        self.t[self.idx(i, self.p + a, self.p + b)]
    }

    /// R(e_i, e_j)e_k = ∇_{e_j}∇_{e_i}e_k − ∇_{e_i}∇_{e_j}e_k + ∇_{[e_i,e_j]}e_k for the given
    /// coefficient array; frame components of the result.
    pub fn curvature(&self, conn: &[Jet], i: usize, j: usize, k: usize) -> Vec<Jet> {
        let n = self.n;
        let order = conn[0].order().saturating_sub(1);
        (0..n)
            .map(|m| {
                let mut s = self.d(j, &conn[self.idx(i, k, m)]) - self.d(i, &conn[self.idx(j, k, m)]);
                for d in 0..n {
                    s += conn[self.idx(i, k, d)] * conn[self.idx(j, d, m)] - conn[self.idx(j, k, d)] * conn[self.idx(i, d, m)];
                }
                for l in 0..n {
                    s += self.c[self.idx(i, j, l)] * conn[self.idx(l, k, m)];
                }
                s.truncate(order)
            })
            .collect()
    }

    /// g(R(e_i,e_j)e_k, e_l) for the ambient connection.
    pub fn ambient_riemann_lowered(&self, i: usize, j: usize, k: usize, l: usize) -> Jet {
        let r = self.curvature(&self.gamma, i, j, k);
        let mut s = Jet::zero(r[0].order());
        for (m, rm) in r.iter().enumerate() {
            s += *rm * self.g[m][l];
        }
        s
    }

    /// Transverse components of R^Q(e_a, e_b)e_c.
    pub fn riemann_q(&self, a: usize, b: usize, c: usize) -> Vec<Jet> {
        let p = self.p;
        self.curvature(&self.t, p + a, p + b, p + c)[p..].to_vec()
    }

    /// g_Q(R^Q(e_a, e_b)e_c, e_d).
    pub fn riemann_q_lowered(&self, a: usize, b: usize, c: usize, d: usize) -> Jet {
        let r = self.riemann_q(a, b, c);
        let mut s = Jet::zero(r[0].order());
        for (m, rm) in r.iter().enumerate() {
            s += *rm * self.gq(m, d);
        }
        s
    }

    /// Full R^Q as lowered components, flattened [((a q + b) q + c) q + d].
    pub fn riemann_q_all(&self) -> Vec<Jet> {
        let q = self.q;
        let mut out = Vec::with_capacity(q * q * q * q);
        for a in 0..q {
            for b in 0..q {
                for c in 0..q {
                    let r = self.riemann_q(a, b, c);
                    for d in 0..q {
                        let mut s = Jet::zero(r[0].order());
                        for (m, rm) in r.iter().enumerate() {
                            s += *rm * self.gq(m, d);
                        }
                        out.push(s);
                    }
                }
            }
        }
        out
    }

    /// Ric^Q(e_x, e_y) = Σ G^{ab} g_Q(R^Q(e_a, e_x)e_b, e_y), flattened x q + y.
    pub fn ricci_q(&self) -> Vec<Jet> {
        let q = self.q;
        let rm = self.riemann_q_all();
        let order = rm[0].order();
        let mut ric = vec![Jet::zero(order); q * q];
        for x in 0..q {
            for y in 0..q {
                let mut s = Jet::zero(order);
                for a in 0..q {
                    for b in 0..q {
                        s += self.gq_inv(a, b).truncate(order) * rm[((a * q + x) * q + b) * q + y];
                    }
                }
                ric[x * q + y] = s;
            }
        }
        ric
    }

    pub fn scalar_q_from(&self, ric: &[Jet]) -> Jet {
        let q = self.q;
        let mut s = Jet::zero(ric[0].order());
        for x in 0..q {
            for y in 0..q {
                s += self.gq_inv(x, y) * ric[x * q + y];
            }
        }
        s
    }

    pub fn scalar_q(&self) -> Jet {
        self.scalar_q_from(&self.ricci_q())
    }

    /// Transverse components of the mean curvature vector τ.
    pub fn tau(&self) -> Vec<Jet> {
        let (p, q) = (self.p, self.q);
        (0..q)
            .map(|d| {
                let mut s = Jet::zero(self.order - 1);
                for a in 0..p {
                    for b in 0..p {
                        s += self.ginv[a][b] * self.gamma[self.idx(a, b, p + d)];
                    }
                }
                s
            })
            .collect()
    }

    /// The mean curvature form κ = g_Q(τ, ·) in transverse coframe components.
    pub fn kappa(&self) -> Vec<Jet> {
        self.lower(&self.tau())
    }

    pub fn lower(&self, v: &[Jet]) -> Vec<Jet> {
        let q = self.q;
        (0..q)
            .map(|a| {
                let mut s = Jet::zero(v[0].order());
                for b in 0..q {
                    s += self.gq(a, b) * v[b];
                }
                s
            })
            .collect()
    }

    pub fn sharp(&self, eta: &[Jet]) -> Vec<Jet> {
        let q = self.q;
        (0..q)
            .map(|a| {
                let mut s = Jet::zero(eta[0].order());
                for b in 0..q {
                    s += self.gq_inv(a, b) * eta[b];
                }
                s
            })
            .collect()
    }

    /// g_Q(η, ω) for 1-forms.
    pub fn dot(&self, eta: &[Jet], omega: &[Jet]) -> Jet {
        let q = self.q;
        let mut s = Jet::zero(eta[0].order().min(omega[0].order()));
        for a in 0..q {
            for b in 0..q {
                s += self.gq_inv(a, b) * eta[a] * omega[b];
            }
        }
        s
    }

    /// Frobenius pairing of covariant 2-tensors, Σ G^{ac} G^{bd} u_ab v_cd.
    pub fn dot2(&self, u: &[Jet], v: &[Jet]) -> Jet {
        let q = self.q;
        let mut s = Jet::zero(u[0].order().min(v[0].order()));
        for a in 0..q {
            for b in 0..q {
                for c in 0..q {
                    for d in 0..q {
                        s += self.gq_inv(a, c) * self.gq_inv(b, d) * u[a * q + b] * v[c * q + d];
                    }
                }
            }
        }
        s
    }

    /// G^{ab} u_ab.
    pub fn trace2(&self, u: &[Jet]) -> Jet {
        let q = self.q;
        let mut s = Jet::zero(u[0].order());
        for a in 0..q {
            for b in 0..q {
                s += self.gq_inv(a, b) * u[a * q + b];
            }
        }
        s
    }

    /// Transverse differential of a function: (df)_a = e_a(f).
    pub fn df(&self, f: &Jet) -> Vec<Jet> {
        (0..self.q).map(|a| self.d(self.p + a, f)).collect()
    }

    /// (∇_{e_i} η)_c for all frame directions i, flattened i q + c.
    pub fn nabla1(&self, eta: &[Jet]) -> Vec<Jet> {
        let (n, q) = (self.n, self.q);
        let mut out = Vec::with_capacity(n * q);
        for i in 0..n {
            for c in 0..q {
                let mut s = self.d(i, &eta[c]);
                for d in 0..q {
                    s -= self.tc(i, c, d) * eta[d];
                }
                out.push(s);
            }
        }
        out
    }

    /// (∇_{e_i} h)_{bc} for a covariant 2-tensor h, flattened (i q + b) q + c.
    pub fn nabla2(&self, h: &[Jet]) -> Vec<Jet> {
        let (n, q) = (self.n, self.q);
        let mut out = Vec::with_capacity(n * q * q);
        for i in 0..n {
            for b in 0..q {
                for c in 0..q {
                    let mut s = self.d(i, &h[b * q + c]);
                    for d in 0..q {
                        s -= self.tc(i, b, d) * h[d * q + c] + self.tc(i, c, d) * h[b * q + d];
                    }
                    out.push(s);
                }
            }
        }
        out
    }

    /// Transverse part of ∇η as a q×q tensor (∇_{e_a} η)_b.
    pub fn nabla1_q(&self, eta: &[Jet]) -> Vec<Jet> {
        let full = self.nabla1(eta);
        full[self.p * self.q..].to_vec()
    }

    /// Hessian ∇_tr df.
    pub fn hessian(&self, f: &Jet) -> Vec<Jet> {
        self.nabla1_q(&self.df(f))
    }

    /// d_B η: (dη)_ab = e_a η_b − e_b η_a − c_ab^d η_d.
    pub fn d1(&self, eta: &[Jet]) -> Vec<Jet> {
        let (p, q) = (self.p, self.q);
        let mut out = Vec::with_capacity(q * q);
        for a in 0..q {
            for b in 0..q {
                let mut s = self.d(p + a, &eta[b]) - self.d(p + b, &eta[a]);
                for d in 0..q {
                    s -= self.c[self.idx(p + a, p + b, p + d)] * eta[d];
                }
                out.push(s);
            }
        }
        out
    }

    /// δ_T η = −G^{ab} (∇_{e_a} η)_b.
    pub fn delta_t1(&self, eta: &[Jet]) -> Jet {
        -self.trace2(&self.nabla1_q(eta))
    }

    /// δ_B η = δ_T η + η(τ).
    pub fn delta_b1(&self, eta: &[Jet], tau: &[Jet]) -> Jet {
        let mut s = self.delta_t1(eta);
        for a in 0..self.q {
            s += eta[a] * tau[a];
        }
        s
    }

    /// δ_T of a covariant 2-tensor in its first slot: −G^{ab}(∇_{e_a} h)_{b c}.
    pub fn delta_t2(&self, h: &[Jet]) -> Vec<Jet> {
        let (p, q) = (self.p, self.q);
        let nh = self.nabla2(h);
        (0..q)
            .map(|c| {
                let mut s = Jet::zero(nh[0].order());
                for a in 0..q {
                    for b in 0..q {
                        s -= self.gq_inv(a, b) * nh[((p + a) * q + b) * q + c];
                    }
                }
                s
            })
            .collect()
    }

    /// δ_B on 2-forms: δ_T ω + i_τ ω.
    pub fn delta_b2(&self, omega: &[Jet], tau: &[Jet]) -> Vec<Jet> {
        let q = self.q;
        let mut out = self.delta_t2(omega);
        for (c, o) in out.iter_mut().enumerate() {
            for a in 0..q {
                *o += tau[a] * omega[a * q + c];
            }
        }
        out
    }

    /// Δ_B f = δ_B d_B f.
    pub fn laplacian0(&self, f: &Jet, tau: &[Jet]) -> Jet {
        self.delta_b1(&self.df(f), tau)
    }

    /// Δ_B η = d_B δ_B η + δ_B d_B η.
    pub fn laplacian1(&self, eta: &[Jet], tau: &[Jet]) -> Vec<Jet> {
        let a = self.df(&self.delta_b1(eta, tau));
        let b = self.delta_b2(&self.d1(eta), tau);
        a.iter().zip(&b).map(|(x, y)| *x + *y).collect()
    }

    /// ∇*∇η = −G^{ab} (∇²η)(e_a, e_b) + ∇_τ η.
    pub fn rough_laplacian(&self, eta: &[Jet], tau: &[Jet]) -> Vec<Jet> {
        let (p, q) = (self.p, self.q);
        let nq = self.nabla1_q(eta);
        let nn = self.nabla2(&nq);
        (0..q)
            .map(|c| {
                let mut s = Jet::zero(nn[0].order());
                for a in 0..q {
                    for b in 0..q {
                        s -= self.gq_inv(a, b) * nn[((p + a) * q + b) * q + c];
                    }
                    s += tau[a] * nq[a * q + c];
                }
                s
            })
            .collect()
    }

    /// A_τ η = L_τ η − ∇_τ η.
    pub fn a_tau(&self, eta: &[Jet], tau: &[Jet]) -> Vec<Jet> {
        let (p, q) = (self.p, self.q);
        (0..q)
            .map(|c| {
                // L_τ η(e_c) = τ(η_c) − η(π[τ, e_c]); [τ, e_c] = τ^a c_ac^l e_l − e_c(τ^a) e_a
                let mut lie = Jet::zero(self.order);
                let mut cov = Jet::zero(self.order);
                for a in 0..q {
                    let deta = self.d(p + a, &eta[c]);
                    lie += tau[a] * deta + self.d(p + c, &tau[a]) * eta[a];
                    cov += tau[a] * deta;
                    for d in 0..q {
                        lie -= tau[a] * self.c[self.idx(p + a, p + c, p + d)] * eta[d];
                        cov -= tau[a] * self.tc(p + a, c, d) * eta[d];
                    }
                }
                lie - cov
            })
            .collect()
    }

    /// (Ric·η)(e_c) = Ric(e_c, η♯).
    pub fn ric_action(&self, ric: &[Jet], eta: &[Jet]) -> Vec<Jet> {
        let q = self.q;
        let sharp = self.sharp(eta);
        (0..q)
            .map(|c| {
                let mut s = Jet::zero(ric[0].order().min(sharp[0].order()));
                for b in 0..q {
                    s += ric[c * q + b] * sharp[b];
                }
                s
            })
            .collect()
    }

    /// (L_X g_Q)(e_b, e_c) for a transverse vector field X = X^a e_a.
    pub fn lie_metric(&self, x: &[Jet]) -> Vec<Jet> {
        let (p, q) = (self.p, self.q);
        // π[X, e_b] = (X^a c_ab^d − e_b(X^d)) e_d
        let br: Vec<Jet> = (0..q * q)
            .map(|bd| {
                let (b, d) = (bd / q, bd % q);
                let mut s = -self.d(p + b, &x[d]);
                for a in 0..q {
                    s += x[a] * self.c[self.idx(p + a, p + b, p + d)];
                }
                s
            })
            .collect();
        let mut out = Vec::with_capacity(q * q);
        for b in 0..q {
            for c in 0..q {
                let mut s = Jet::zero(self.order - 1);
                for a in 0..q {
                    s += x[a] * self.d(p + a, &self.gq(b, c));
                }
                for d in 0..q {
                    s -= br[b * q + d] * self.gq(d, c) + br[c * q + d] * self.gq(b, d);
                }
                out.push(s);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Scenario;
    use approx::assert_relative_eq;

    #[test]
    fn carriere_connections_and_curvature() {
        let s = Scenario::carriere_default();
        let l = s.log_rho().unwrap();
        let loc = Local::new(s.metric(), &[0.3, 0.6, 0.45], 2).unwrap();
        let gam = |i, j, k| loc.gamma[loc.idx(i, j, k)].value();
        assert_relative_eq!(gam(0, 0, 2), -l, epsilon = 1e-13);
        assert_relative_eq!(gam(0, 2, 0), l, epsilon = 1e-13);
        assert_relative_eq!(gam(1, 1, 2), l, epsilon = 1e-13);
        assert_relative_eq!(gam(1, 2, 1), -l, epsilon = 1e-13);
        assert_relative_eq!(loc.ambient_riemann_lowered(0, 1, 0, 1).value(), l * l, epsilon = 1e-12);
        assert_relative_eq!(loc.ambient_riemann_lowered(1, 2, 1, 2).value(), -l * l, epsilon = 1e-12);
        assert_relative_eq!(loc.riemann_q_lowered(0, 1, 0, 1).value(), -l * l, epsilon = 1e-12);
        assert_relative_eq!(loc.scalar_q().value(), -2.0 * l * l, epsilon = 1e-12);
        let tau = loc.tau();
        assert_relative_eq!(tau[0].value(), 0.0, epsilon = 1e-14);
        assert_relative_eq!(tau[1].value(), -l, epsilon = 1e-13);
    }
}
