//! Closed-form scalar expressions in the chart coordinates.
//!
//! Scenario coefficient functions are written as [`Expr`] trees so they can be
//! evaluated both as plain numbers and as [`Jet`](crate::jet::Jet)s, which gives
//! exact derivatives of every order the geometry needs.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use crate::jet::Real;

#[derive(Clone)]
pub struct Expr(Arc<Node>);

enum Node {
    Const(f64),
    Var(usize),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Neg(Expr),
    Powf(Expr, f64),
    Exp(Expr),
    Ln(Expr),
    Sin(Expr),
    Cos(Expr),
    Sqrt(Expr),
}

impl Expr {
    pub fn constant(v: f64) -> Self {
        Expr(Arc::new(Node::Const(v)))
    }

    pub fn var(axis: usize) -> Self {
        Expr(Arc::new(Node::Var(axis)))
    }

    pub fn as_constant(&self) -> Option<f64> {
        match *self.0 {
            Node::Const(v) => Some(v),
            _ => None,
        }
    }

    /// Largest coordinate index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match &*self.0 {
            Node::Const(_) => None,
            Node::Var(i) => Some(*i),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                match (a.max_var(), b.max_var()) {
                    (Some(x), Some(y)) => Some(x.max(y)),
                    (x, y) => x.or(y),
                }
            }
            Node::Neg(a) | Node::Powf(a, _) | Node::Exp(a) | Node::Ln(a) | Node::Sin(a) | Node::Cos(a) | Node::Sqrt(a) => {
                a.max_var()
            }
        }
    }

    pub fn eval<T: Real>(&self, x: &[T]) -> T {
        match &*self.0 {
            Node::Const(v) => x[0].lift(*v),
            Node::Var(i) => x[*i].clone(),
            Node::Add(a, b) => a.eval(x) + b.eval(x),
            Node::Sub(a, b) => a.eval(x) - b.eval(x),
            Node::Mul(a, b) => a.eval(x) * b.eval(x),
            Node::Div(a, b) => a.eval(x) / b.eval(x),
            Node::Neg(a) => -a.eval(x),
            Node::Powf(a, p) => a.eval(x).powf(*p),
            Node::Exp(a) => a.eval(x).exp(),
            Node::Ln(a) => a.eval(x).ln(),
            Node::Sin(a) => a.eval(x).sin(),
            Node::Cos(a) => a.eval(x).cos(),
            Node::Sqrt(a) => a.eval(x).sqrt(),
        }
    }

    pub fn powf(&self, p: f64) -> Self {
        match self.as_constant() {
            Some(c) => Expr::constant(c.powf(p)),
            None if p == 1.0 => self.clone(),
            None if p == 0.0 => Expr::constant(1.0),
            None => Expr(Arc::new(Node::Powf(self.clone(), p))),
        }
    }

    pub fn exp(&self) -> Self {
        self.unary(f64::exp, Node::Exp)
    }

    pub fn ln(&self) -> Self {
        self.unary(f64::ln, Node::Ln)
    }

    pub fn sin(&self) -> Self {
        self.unary(f64::sin, Node::Sin)
    }

    pub fn cos(&self) -> Self {
        self.unary(f64::cos, Node::Cos)
    }

    pub fn sqrt(&self) -> Self {
        self.unary(f64::sqrt, Node::Sqrt)
    }

    fn unary(&self, f: fn(f64) -> f64, node: fn(Expr) -> Node) -> Self {
        match self.as_constant() {
            Some(c) => Expr::constant(f(c)),
            None => Expr(Arc::new(node(self.clone()))),
        }
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.0 {
            Node::Const(v) => write!(f, "{v}"),
            Node::Var(i) => write!(f, "x{i}"),
            Node::Add(a, b) => write!(f, "({a:?} + {b:?})"),
            Node::Sub(a, b) => write!(f, "({a:?} - {b:?})"),
            Node::Mul(a, b) => write!(f, "{a:?}*{b:?}"),
            Node::Div(a, b) => write!(f, "{a:?}/{b:?}"),
            Node::Neg(a) => write!(f, "-{a:?}"),
            Node::Powf(a, p) => write!(f, "{a:?}^{p}"),
            Node::Exp(a) => write!(f, "exp({a:?})"),
            Node::Ln(a) => write!(f, "ln({a:?})"),
            Node::Sin(a) => write!(f, "sin({a:?})"),
            Node::Cos(a) => write!(f, "cos({a:?})"),
            Node::Sqrt(a) => write!(f, "sqrt({a:?})"),
        }
    }
}

impl From<f64> for Expr {
    fn from(v: f64) -> Self {
        Expr::constant(v)
    }
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        match (self.as_constant(), rhs.as_constant()) {
            (Some(a), Some(b)) => Expr::constant(a + b),
            (Some(0.0), _) => rhs,
            (_, Some(0.0)) => self,
            _ => Expr(Arc::new(Node::Add(self, rhs))),
        }
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        match (self.as_constant(), rhs.as_constant()) {
            (Some(a), Some(b)) => Expr::constant(a - b),
            (_, Some(0.0)) => self,
            (Some(0.0), _) => -rhs,
            _ => Expr(Arc::new(Node::Sub(self, rhs))),
        }
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        match (self.as_constant(), rhs.as_constant()) {
            (Some(a), Some(b)) => Expr::constant(a * b),
            (Some(0.0), _) | (_, Some(0.0)) => Expr::constant(0.0),
            (Some(1.0), _) => rhs,
            (_, Some(1.0)) => self,
            _ => Expr(Arc::new(Node::Mul(self, rhs))),
        }
    }
}

impl Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        match (self.as_constant(), rhs.as_constant()) {
            (Some(a), Some(b)) => Expr::constant(a / b),
            (Some(0.0), _) => Expr::constant(0.0),
            (_, Some(1.0)) => self,
            _ => Expr(Arc::new(Node::Div(self, rhs))),
        }
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        match self.as_constant() {
            Some(a) => Expr::constant(-a),
            None => Expr(Arc::new(Node::Neg(self))),
        }
    }
}

macro_rules! scalar_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr<f64> for Expr {
            type Output = Expr;
            fn $m(self, rhs: f64) -> Expr { $tr::$m(self, Expr::constant(rhs)) }
        }
        impl $tr<Expr> for f64 {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr { $tr::$m(Expr::constant(self), rhs) }
        }
        impl $tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr { $tr::$m(self.clone(), rhs.clone()) }
        }
    )*};
}
scalar_ops!(Add add, Sub sub, Mul mul, Div div);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::Jet;
    use approx::assert_relative_eq;

    #[test]
    fn folds_constants() {
        let e = Expr::constant(2.0) * Expr::constant(3.0) + 1.0;
        assert_eq!(e.as_constant(), Some(7.0));
        let z = Expr::var(0) * 0.0;
        assert_eq!(z.as_constant(), Some(0.0));
    }

    #[test]
    fn jet_and_float_evaluation_agree() {
        let x = Expr::var(0);
        let t = Expr::var(2);
        let e = (t.clone() * 0.7).exp() * x.sin() + (x.clone() * x).powf(1.5) / (t + 2.0);
        let p = [0.3, 0.0, 0.9];
        let v: f64 = e.eval(&p);
        let jets: Vec<Jet> = (0..3).map(|i| Jet::variable(p[i], i, 2)).collect();
        let j = e.eval(&jets);
        assert_relative_eq!(j.value(), v, epsilon = 1e-14);
        let h = 1e-6;
        let vp: f64 = e.eval(&[p[0], p[1], p[2] + h]);
        let vm: f64 = e.eval(&[p[0], p[1], p[2] - h]);
        assert_relative_eq!(j.partial([0, 0, 1]), (vp - vm) / (2.0 * h), epsilon = 1e-8);
    }
}
