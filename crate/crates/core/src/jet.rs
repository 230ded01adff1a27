//! Truncated multivariate Taylor polynomials ("jets").
//!
//! A [`Jet`] stores the Taylor coefficients `c_α = ∂^α f / α!` of a function of
//! up to [`MAX_VARS`] variables about a point, truncated at total degree
//! `order ≤ MAX_ORDER`. Arithmetic on jets is forward-mode automatic
//! differentiation: every quantity built from exact input jets carries exact
//! derivatives up to its order. Differentiating a jet lowers its order by one.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::OnceLock;

pub const MAX_VARS: usize = 3;
pub const MAX_ORDER: usize = 4;
/// Number of monomials of total degree ≤ 4 in 3 variables.
pub const NCOEF: usize = 35;

struct Tables {
    exps: [[u8; MAX_VARS]; NCOEF],
    /// Number of monomials with degree ≤ d, for d = 0..=MAX_ORDER.
    count_upto: [usize; MAX_ORDER + 1],
    /// (i, j, k) with monomial_i · monomial_j = monomial_k, sorted by deg k.
    mul: Vec<(u8, u8, u8)>,
    mul_upto: [usize; MAX_ORDER + 1],
    /// Per variable: (k, k - e_v, exponent of v in k).
    deriv: [Vec<(u8, u8, f64)>; MAX_VARS],
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut exps = [[0u8; MAX_VARS]; NCOEF];
        let mut degree = [0u8; NCOEF];
        let mut count_upto = [0usize; MAX_ORDER + 1];
        let mut n = 0;
        for d in 0..=MAX_ORDER {
            for a in (0..=d).rev() {
                for b in (0..=d - a).rev() {
                    let c = d - a - b;
                    exps[n] = [a as u8, b as u8, c as u8];
                    degree[n] = d as u8;
                    n += 1;
                }
            }
            count_upto[d] = n;
        }
        debug_assert_eq!(n, NCOEF);
        let index_of = |e: [u8; MAX_VARS]| -> Option<usize> { exps.iter().position(|x| *x == e) };

        let mut mul = Vec::new();
        for i in 0..NCOEF {
            for j in 0..NCOEF {
                if (degree[i] + degree[j]) as usize > MAX_ORDER {
                    continue;
                }
                let e = [exps[i][0] + exps[j][0], exps[i][1] + exps[j][1], exps[i][2] + exps[j][2]];
                let k = index_of(e).expect("monomial in table");
                mul.push((i as u8, j as u8, k as u8));
            }
        }
        mul.sort_by_key(|&(_, _, k)| degree[k as usize]);
        let mut mul_upto = [0usize; MAX_ORDER + 1];
        for (d, slot) in mul_upto.iter_mut().enumerate() {
            *slot = mul.iter().filter(|&&(_, _, k)| degree[k as usize] as usize <= d).count();
        }

        let deriv = std::array::from_fn(|v| {
            let mut list = Vec::new();
            for k in 0..NCOEF {
                if exps[k][v] > 0 {
                    let mut e = exps[k];
                    e[v] -= 1;
                    let lower = index_of(e).expect("monomial in table");
                    list.push((k as u8, lower as u8, exps[k][v] as f64));
                }
            }
            list
        });

        Tables { exps, count_upto, mul, mul_upto, deriv }
    })
}

/// Truncated Taylor expansion of a scalar function of the chart coordinates.
#[derive(Clone, Copy, PartialEq)]
pub struct Jet {
    order: u8,
    c: [f64; NCOEF],
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = tables().count_upto[self.order as usize];
        f.debug_struct("Jet").field("order", &self.order).field("coeffs", &&self.c[..n]).finish()
    }
}

impl Jet {
    pub fn constant(value: f64, order: usize) -> Self {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        let mut c = [0.0; NCOEF];
        c[0] = value;
        Jet { order: order as u8, c }
    }

    /// The coordinate function `x_var` expanded about `x_var = value`.
    pub fn variable(value: f64, var: usize, order: usize) -> Self {
        assert!(var < MAX_VARS, "jet variable {var} out of range");
        let mut j = Self::constant(value, order);
        if order >= 1 {
            j.c[1 + var] = 1.0;
        }
        j
    }

    /// Builds a jet from a callback returning `∂^α f` for each multi-index.
    pub fn from_partials(order: usize, mut partial: impl FnMut([usize; MAX_VARS]) -> f64) -> Self {
        let t = tables();
        let mut j = Self::zero(order);
        for k in 0..t.count_upto[order] {
            let e = t.exps[k];
            let alpha = [e[0] as usize, e[1] as usize, e[2] as usize];
            let fact: f64 = alpha.iter().map(|&a| factorial(a)).product();
            j.c[k] = partial(alpha) / fact;
        }
        j
    }

    pub fn zero(order: usize) -> Self {
        Self::constant(0.0, order)
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.order as usize
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// First partial derivative at the expansion point.
    pub fn gradient_component(&self, var: usize) -> f64 {
        assert!(self.order >= 1, "gradient of an order-0 jet");
        self.c[1 + var]
    }

    /// `∂^α f` at the expansion point for a multi-index `alpha`.
    pub fn partial(&self, alpha: [usize; MAX_VARS]) -> f64 {
        let t = tables();
        let deg: usize = alpha.iter().sum();
        assert!(deg <= self.order(), "partial of degree {deg} from jet of order {}", self.order);
        let e = [alpha[0] as u8, alpha[1] as u8, alpha[2] as u8];
        let k = t.exps.iter().position(|x| *x == e).expect("monomial");
        let fact: f64 = alpha.iter().map(|&a| (1..=a).product::<usize>() as f64).product();
        self.c[k] * fact
    }

    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order());
        let mut out = *self;
        let n = tables().count_upto[order];
        for v in out.c[n..].iter_mut() {
            *v = 0.0;
        }
        out.order = order as u8;
        out
    }

    /// Partial derivative with respect to `var`; the result has order one lower.
    pub fn deriv(&self, var: usize) -> Self {
        assert!(self.order >= 1, "derivative of an order-0 jet");
        let t = tables();
        let order = self.order() - 1;
        let limit = t.count_upto[self.order()];
        let mut out = Jet::zero(order);
        for &(k, lower, factor) in &t.deriv[var] {
            if (k as usize) < limit {
                out.c[lower as usize] += factor * self.c[k as usize];
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = *self;
        for v in out.c.iter_mut() {
            *v *= s;
        }
        out
    }

    /// Evaluates `Σ_k derivs[k]/k! · h^k` with `h = self - value`, i.e. the
    /// composition `φ ∘ self` for a univariate `φ` whose derivatives at
    /// `self.value()` are `derivs[0..=order]`.
    fn compose(&self, derivs: &[f64]) -> Self {
        let order = self.order();
        let mut h = *self;
        h.c[0] = 0.0;
        // Horner: (((d4/4! h + d3/3!) h + d2/2!) h + d1) h + d0
        let mut acc = Jet::constant(derivs[order] / factorial(order), order);
        for k in (0..order).rev() {
            acc = acc * h;
            acc.c[0] += derivs[k] / factorial(k);
        }
        acc
    }

    pub fn exp(&self) -> Self {
        let e = self.value().exp();
        self.compose(&[e; MAX_ORDER + 1])
    }

    pub fn ln(&self) -> Self {
        let a = self.value();
        let r = 1.0 / a;
        self.compose(&[a.ln(), r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r])
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose(&[s, c, -s, -c, s])
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose(&[c, -s, -c, s, c])
    }

    pub fn powf(&self, p: f64) -> Self {
        let a = self.value();
        let mut derivs = [0.0; MAX_ORDER + 1];
        let mut coef = 1.0;
        for (k, d) in derivs.iter_mut().enumerate() {
            *d = coef * a.powf(p - k as f64);
            coef *= p - k as f64;
        }
        self.compose(&derivs)
    }

    pub fn sqrt(&self) -> Self {
        self.powf(0.5)
    }

    pub fn recip(&self) -> Self {
        let r = 1.0 / self.value();
        self.compose(&[r, -r * r, 2.0 * r.powi(3), -6.0 * r.powi(4), 24.0 * r.powi(5)])
    }

    /// Largest absolute coefficient; used in tests as a cheap norm.
    pub fn max_abs(&self) -> f64 {
        let n = tables().count_upto[self.order()];
        self.c[..n].iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).product::<usize>() as f64
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        let order = self.order.min(rhs.order);
        let n = tables().count_upto[order as usize];
        let mut out = Jet { order, c: [0.0; NCOEF] };
        for i in 0..n {
            out.c[i] = self.c[i] + rhs.c[i];
        }
        out
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        let order = self.order.min(rhs.order);
        let n = tables().count_upto[order as usize];
        let mut out = Jet { order, c: [0.0; NCOEF] };
        for i in 0..n {
            out.c[i] = self.c[i] - rhs.c[i];
        }
        out
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let t = tables();
        let order = self.order.min(rhs.order);
        let mut out = Jet { order, c: [0.0; NCOEF] };
        for &(i, j, k) in &t.mul[..t.mul_upto[order as usize]] {
            out.c[k as usize] += self.c[i as usize] * rhs.c[j as usize];
        }
        out
    }
}

impl Div for Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Jet) -> Jet {
        self * rhs.recip()
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.c[0] += rhs;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: f64) -> Jet {
        self.c[0] -= rhs;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        rhs.scale(self)
    }
}

impl AddAssign for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        *self = *self + rhs;
    }
}

impl SubAssign for Jet {
    fn sub_assign(&mut self, rhs: Jet) {
        *self = *self - rhs;
    }
}

impl MulAssign<f64> for Jet {
    fn mul_assign(&mut self, rhs: f64) {
        *self = self.scale(rhs);
    }
}

/// Number types an expression can be evaluated in: plain `f64` or [`Jet`].
pub trait Real:
    Clone
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// A constant with the same order/shape as `self`.
    fn lift(&self, v: f64) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn powf(&self, p: f64) -> Self;
    fn sqrt(&self) -> Self;
}

impl Real for f64 {
    fn lift(&self, v: f64) -> Self {
        v
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn powf(&self, p: f64) -> Self {
        f64::powf(*self, p)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
}

impl Real for Jet {
    fn lift(&self, v: f64) -> Self {
        Jet::constant(v, self.order())
    }
    fn exp(&self) -> Self {
        Jet::exp(self)
    }
    fn ln(&self) -> Self {
        Jet::ln(self)
    }
    fn sin(&self) -> Self {
        Jet::sin(self)
    }
    fn cos(&self) -> Self {
        Jet::cos(self)
    }
    fn powf(&self, p: f64) -> Self {
        Jet::powf(self, p)
    }
    fn sqrt(&self) -> Self {
        Jet::sqrt(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn vars(p: [f64; 3], order: usize) -> [Jet; 3] {
        std::array::from_fn(|i| Jet::variable(p[i], i, order))
    }

    #[test]
    fn table_sizes() {
        let t = tables();
        assert_eq!(t.count_upto, [1, 4, 10, 20, 35]);
        assert_eq!(t.mul_upto[2], 28);
        assert_eq!(t.mul_upto[4], t.mul.len());
    }

    #[test]
    fn product_rule_and_partials() {
        let [x, y, z] = vars([0.3, -0.7, 1.1], 4);
        let f = x * x * y + z * y * y * y;
        // ∂x f = 2xy, ∂y f = x² + 3zy², ∂y∂y f = 6zy, ∂y^3 f = 6z
        assert_relative_eq!(f.partial([1, 0, 0]), 2.0 * 0.3 * -0.7, epsilon = 1e-14);
        assert_relative_eq!(f.partial([0, 1, 0]), 0.09 + 3.0 * 1.1 * 0.49, epsilon = 1e-14);
        assert_relative_eq!(f.partial([0, 2, 0]), 6.0 * 1.1 * -0.7, epsilon = 1e-14);
        assert_relative_eq!(f.partial([0, 3, 0]), 6.0 * 1.1, epsilon = 1e-14);
        assert_relative_eq!(f.partial([0, 3, 1]), 6.0, epsilon = 1e-14);
    }

    #[test]
    fn elementary_functions_match_calculus() {
        let [x, _, _] = vars([0.4, 0.0, 0.0], 4);
        let s = x.sin();
        assert_relative_eq!(s.partial([3, 0, 0]), -0.4f64.cos(), epsilon = 1e-14);
        let e = (x * 2.0).exp();
        assert_relative_eq!(e.partial([4, 0, 0]), 16.0 * 0.8f64.exp(), epsilon = 1e-12);
        let l = x.ln();
        assert_relative_eq!(l.partial([2, 0, 0]), -1.0 / 0.16, epsilon = 1e-12);
        let p = x.powf(2.5);
        assert_relative_eq!(p.partial([2, 0, 0]), 2.5 * 1.5 * 0.4f64.powf(0.5), epsilon = 1e-12);
        let r = x.recip();
        assert_relative_eq!(r.partial([3, 0, 0]), -6.0 / 0.4f64.powi(4), epsilon = 1e-9);
    }

    #[test]
    fn derivative_lowers_order_and_commutes() {
        let [x, y, _] = vars([0.2, 0.5, 0.0], 4);
        let f = (x * y).sin() * y.exp();
        let fxy = f.deriv(0).deriv(1);
        let fyx = f.deriv(1).deriv(0);
        assert_eq!(fxy.order(), 2);
        for a in 0..3 {
            for b in 0..3 - a {
                let alpha = [a, b, 0];
                assert_relative_eq!(fxy.partial(alpha), fyx.partial(alpha), epsilon = 1e-12);
            }
        }
        assert_relative_eq!(fxy.value(), f.partial([1, 1, 0]), epsilon = 1e-14);
    }

    #[test]
    fn mixed_order_truncates() {
        let a = Jet::variable(1.0, 0, 4);
        let b = Jet::variable(2.0, 1, 1);
        let c = a * b;
        assert_eq!(c.order(), 1);
        assert_relative_eq!(c.gradient_component(0), 2.0);
    }
}
