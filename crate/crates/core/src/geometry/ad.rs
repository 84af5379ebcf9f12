//! Second-order forward-mode differentiation for up to [`MAXD`] variables.
//!
//! Maps written once against [`Scalar`] evaluate in plain `f64` and, through
//! [`D2`], yield exact first and second derivatives.

use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use nalgebra::DVector;

use super::charts::{GraphFunction, GraphJet};
use super::{Chart, Jet};

pub const MAXD: usize = 8;

/// Value, gradient and Hessian with respect to `n ≤ MAXD` variables.
#[derive(Debug, Clone, Copy)]
pub struct D2 {
    pub v: f64,
    pub n: usize,
    pub g: [f64; MAXD],
    pub h: [f64; MAXD * MAXD],
}

impl D2 {
    pub fn constant(v: f64, n: usize) -> Self {
        D2 { v, n, g: [0.0; MAXD], h: [0.0; MAXD * MAXD] }
    }

    pub fn variable(v: f64, i: usize, n: usize) -> Self {
        let mut d = Self::constant(v, n);
        d.g[i] = 1.0;
        d
    }

    pub fn hess(&self, i: usize, j: usize) -> f64 {
        self.h[i * MAXD + j]
    }

    /// f(self) given f, f' and f'' at the value.
    fn chain(self, f: f64, df: f64, ddf: f64) -> Self {
        let n = self.n;
        let mut out = D2::constant(f, n);
        for i in 0..n {
            out.g[i] = df * self.g[i];
            for j in 0..n {
                out.h[i * MAXD + j] = df * self.h[i * MAXD + j] + ddf * self.g[i] * self.g[j];
            }
        }
        out
    }
}

fn dims(a: &D2, b: &D2) -> usize {
    a.n.max(b.n)
}

impl Add for D2 {
    type Output = D2;
    fn add(self, o: D2) -> D2 {
        let n = dims(&self, &o);
        let mut r = D2::constant(self.v + o.v, n);
        for i in 0..n {
            r.g[i] = self.g[i] + o.g[i];
            for j in 0..n {
                r.h[i * MAXD + j] = self.h[i * MAXD + j] + o.h[i * MAXD + j];
            }
        }
        r
    }
}

impl Sub for D2 {
    type Output = D2;
    fn sub(self, o: D2) -> D2 {
        self + (-o)
    }
}

impl Neg for D2 {
    type Output = D2;
    fn neg(self) -> D2 {
        let mut r = self;
        r.v = -r.v;
        for i in 0..self.n {
            r.g[i] = -r.g[i];
            for j in 0..self.n {
                r.h[i * MAXD + j] = -r.h[i * MAXD + j];
            }
        }
        r
    }
}

impl Mul for D2 {
    type Output = D2;
    fn mul(self, o: D2) -> D2 {
        let n = dims(&self, &o);
        let mut r = D2::constant(self.v * o.v, n);
        for i in 0..n {
            r.g[i] = self.g[i] * o.v + self.v * o.g[i];
            for j in 0..n {
                let k = i * MAXD + j;
                r.h[k] = self.h[k] * o.v + self.v * o.h[k] + self.g[i] * o.g[j] + self.g[j] * o.g[i];
            }
        }
        r
    }
}

impl Div for D2 {
    type Output = D2;
    fn div(self, o: D2) -> D2 {
        self * o.recip()
    }
}

impl Add<f64> for D2 {
    type Output = D2;
    fn add(mut self, c: f64) -> D2 {
        self.v += c;
        self
    }
}

impl Sub<f64> for D2 {
    type Output = D2;
    fn sub(mut self, c: f64) -> D2 {
        self.v -= c;
        self
    }
}

impl Mul<f64> for D2 {
    type Output = D2;
    fn mul(mut self, c: f64) -> D2 {
        self.v *= c;
        for i in 0..self.n {
            self.g[i] *= c;
            for j in 0..self.n {
                self.h[i * MAXD + j] *= c;
            }
        }
        self
    }
}

impl Div<f64> for D2 {
    type Output = D2;
    fn div(self, c: f64) -> D2 {
        self * (1.0 / c)
    }
}

/// Arithmetic needed by the maps in this crate.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + Send
    + Sync
{
    fn cst(&self, v: f64) -> Self;
    fn val(&self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn recip(self) -> Self;
    fn powi(self, k: i32) -> Self;
    fn powf(self, p: f64) -> Self;
    /// Applies a univariate function given its value and first two
    /// derivatives at `self.val()`.
    fn lift(self, f0: f64, f1: f64, f2: f64) -> Self;
}

impl Scalar for f64 {
    fn cst(&self, v: f64) -> Self {
        v
    }
    fn lift(self, f0: f64, _f1: f64, _f2: f64) -> Self {
        f0
    }
    fn val(&self) -> f64 {
        *self
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn recip(self) -> Self {
        1.0 / self
    }
    fn powi(self, k: i32) -> Self {
        f64::powi(self, k)
    }
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
}

impl Scalar for D2 {
    fn cst(&self, v: f64) -> Self {
        D2::constant(v, self.n)
    }
    fn lift(self, f0: f64, f1: f64, f2: f64) -> Self {
        self.chain(f0, f1, f2)
    }
    fn val(&self) -> f64 {
        self.v
    }
    fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }
    fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }
    fn ln(self) -> Self {
        self.chain(self.v.ln(), 1.0 / self.v, -1.0 / (self.v * self.v))
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.v))
    }
    fn recip(self) -> Self {
        let r = 1.0 / self.v;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }
    fn powi(self, k: i32) -> Self {
        let kf = k as f64;
        let p = self.v.powi(k);
        let d1 = if k == 0 { 0.0 } else { kf * self.v.powi(k - 1) };
        let d2 = if k == 0 || k == 1 { 0.0 } else { kf * (kf - 1.0) * self.v.powi(k - 2) };
        self.chain(p, d1, d2)
    }
    fn powf(self, p: f64) -> Self {
        self.chain(self.v.powf(p), p * self.v.powf(p - 1.0), p * (p - 1.0) * self.v.powf(p - 2.0))
    }
}

/// A smooth map written once for every [`Scalar`].
pub trait SmoothMap: Send + Sync {
    fn dim(&self) -> usize;
    fn ambient_dim(&self) -> usize;
    fn map<T: Scalar>(&self, x: &[T]) -> Vec<T>;

    fn normal_seeds(&self, _x: &[f64]) -> Option<Vec<DVector<f64>>> {
        None
    }
}

/// Seeds `x` as independent variables.
pub fn variables(x: &[f64]) -> Vec<D2> {
    assert!(x.len() <= MAXD, "at most {MAXD} variables");
    x.iter().enumerate().map(|(i, &v)| D2::variable(v, i, x.len())).collect()
}

/// Jet of a smooth map at `x`.
pub fn jet_of<M: SmoothMap + ?Sized>(m: &M, x: &[f64]) -> Jet {
    let n = x.len();
    let out = m.map(&variables(x));
    let big_n = out.len();
    let value = DVector::from_fn(big_n, |a, _| out[a].v);
    let first = (0..n).map(|i| DVector::from_fn(big_n, |a, _| out[a].g[i])).collect();
    let second = (0..n * n).map(|ij| DVector::from_fn(big_n, |a, _| out[a].hess(ij / n, ij % n))).collect();
    Jet { value, first, second }
}

/// Adapter exposing a [`SmoothMap`] as a [`Chart`] with analytic jets.
pub struct AdChart<M: SmoothMap>(pub M);

impl<M: SmoothMap> Chart for AdChart<M> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn ambient_dim(&self) -> usize {
        self.0.ambient_dim()
    }
    fn eval(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_vec(self.0.map(x))
    }
    fn jet(&self, x: &[f64]) -> Option<Jet> {
        Some(jet_of(&self.0, x))
    }
    fn normal_seeds(&self, x: &[f64]) -> Option<Vec<DVector<f64>>> {
        self.0.normal_seeds(x)
    }
}

/// Adapter exposing a [`SmoothMap`] Rⁿ → R^k as a graph function.
pub struct AdGraph<M: SmoothMap>(pub M);

impl<M: SmoothMap> GraphFunction for AdGraph<M> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn codim(&self) -> usize {
        self.0.ambient_dim()
    }
    fn value(&self, x: &[f64]) -> Vec<f64> {
        self.0.map(x)
    }
    fn jet(&self, x: &[f64]) -> Option<GraphJet> {
        let n = x.len();
        let out = self.0.map(&variables(x));
        Some(GraphJet {
            u: out.iter().map(|d| d.v).collect(),
            du: (0..n).map(|i| out.iter().map(|d| d.g[i]).collect()).collect(),
            d2u: (0..n * n).map(|ij| out.iter().map(|d| d.hess(ij / n, ij % n)).collect()).collect(),
        })
    }
}

pub fn arc_chart<M: SmoothMap + 'static>(m: M) -> Arc<dyn Chart> {
    Arc::new(AdChart(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn f<T: Scalar>(x: &[T]) -> T {
        (x[0] * x[1]).sin() + x[0].exp() / (x[1] * x[1] + 1.0) + x[1].sqrt().powf(3.0) - x[0].powi(3).ln()
    }

    proptest! {
        #[test]
        fn matches_finite_differences(a in 0.3f64..2.0, b in 0.3f64..2.0) {
            let d = f(&variables(&[a, b]));
            let h = 1e-4;
            let g0 = (f(&[a + h, b]) - f(&[a - h, b])) / (2.0 * h);
            let g1 = (f(&[a, b + h]) - f(&[a, b - h])) / (2.0 * h);
            let h01 = (f(&[a + h, b + h]) - f(&[a + h, b - h]) - f(&[a - h, b + h]) + f(&[a - h, b - h])) / (4.0 * h * h);
            let h00 = (f(&[a + h, b]) - 2.0 * f(&[a, b]) + f(&[a - h, b])) / (h * h);
            prop_assert!((d.v - f(&[a, b])).abs() < 1e-14);
            prop_assert!((d.g[0] - g0).abs() < 1e-6 * (1.0 + g0.abs()));
            prop_assert!((d.g[1] - g1).abs() < 1e-6 * (1.0 + g1.abs()));
            prop_assert!((d.hess(0, 1) - h01).abs() < 1e-4 * (1.0 + h01.abs()));
            prop_assert!((d.hess(1, 0) - d.hess(0, 1)).abs() < 1e-12);
            prop_assert!((d.hess(0, 0) - h00).abs() < 1e-4 * (1.0 + h00.abs()));
        }
    }
}
