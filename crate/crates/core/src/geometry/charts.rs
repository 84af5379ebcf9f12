//! Elementary charts with closed-form jets, and graphs of vector functions.

use std::sync::Arc;

use nalgebra::DVector;

use super::{Chart, Jet};

fn vecs(n: usize, dim: usize) -> Vec<DVector<f64>> {
    vec![DVector::zeros(dim); n]
}

/// ψ(x) = (x, 0) in R^{n+k}.
#[derive(Debug, Clone)]
pub struct Plane {
    pub n: usize,
    pub ambient: usize,
}

impl Chart for Plane {
    fn dim(&self) -> usize {
        self.n
    }
    fn ambient_dim(&self) -> usize {
        self.ambient
    }
    fn eval(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_fn(self.ambient, |i, _| if i < self.n { x[i] } else { 0.0 })
    }
    fn jet(&self, x: &[f64]) -> Option<Jet> {
        let mut first = vecs(self.n, self.ambient);
        for (i, f) in first.iter_mut().enumerate() {
            f[i] = 1.0;
        }
        Some(Jet { value: self.eval(x), first, second: vecs(self.n * self.n, self.ambient) })
    }
}

/// Round cylinder (ρ cos u, ρ sin u, v) in R³.
#[derive(Debug, Clone)]
pub struct Cylinder {
    pub radius: f64,
}

impl Chart for Cylinder {
    fn dim(&self) -> usize {
        2
    }
    fn ambient_dim(&self) -> usize {
        3
    }
    fn eval(&self, x: &[f64]) -> DVector<f64> {
        let r = self.radius;
        DVector::from_vec(vec![r * x[0].cos(), r * x[0].sin(), x[1]])
    }
    fn jet(&self, x: &[f64]) -> Option<Jet> {
        let r = self.radius;
        let (s, c) = x[0].sin_cos();
        let first = vec![DVector::from_vec(vec![-r * s, r * c, 0.0]), DVector::from_vec(vec![0.0, 0.0, 1.0])];
        let mut second = vecs(4, 3);
        second[0] = DVector::from_vec(vec![-r * c, -r * s, 0.0]);
        Some(Jet { value: self.eval(x), first, second })
    }
}

/// Catenoid (cosh v cos u, cosh v sin u, v).
#[derive(Debug, Clone)]
pub struct Catenoid;

impl Chart for Catenoid {
    fn dim(&self) -> usize {
        2
    }
    fn ambient_dim(&self) -> usize {
        3
    }
    fn eval(&self, x: &[f64]) -> DVector<f64> {
        let ch = x[1].cosh();
        DVector::from_vec(vec![ch * x[0].cos(), ch * x[0].sin(), x[1]])
    }
    fn jet(&self, x: &[f64]) -> Option<Jet> {
        let (s, c) = x[0].sin_cos();
        let (ch, sh) = (x[1].cosh(), x[1].sinh());
        let first = vec![DVector::from_vec(vec![-ch * s, ch * c, 0.0]), DVector::from_vec(vec![sh * c, sh * s, 1.0])];
        let uu = DVector::from_vec(vec![-ch * c, -ch * s, 0.0]);
        let uv = DVector::from_vec(vec![-sh * s, sh * c, 0.0]);
        let vv = DVector::from_vec(vec![ch * c, ch * s, 0.0]);
        Some(Jet { value: self.eval(x), first, second: vec![uu, uv.clone(), uv, vv] })
    }
}

/// Hypersphere of radius ρ as a graph over the tangent plane at the pole:
/// x ↦ (x, √(ρ² − |x|²)).
#[derive(Debug, Clone)]
pub struct SphereGraph {
    pub n: usize,
    pub radius: f64,
}

impl Chart for SphereGraph {
    fn dim(&self) -> usize {
        self.n
    }
    fn ambient_dim(&self) -> usize {
        self.n + 1
    }
    fn eval(&self, x: &[f64]) -> DVector<f64> {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let mut v: Vec<f64> = x.to_vec();
        v.push((self.radius * self.radius - r2).sqrt());
        DVector::from_vec(v)
    }
    fn jet(&self, x: &[f64]) -> Option<Jet> {
        let n = self.n;
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let h = (self.radius * self.radius - r2).sqrt();
        let mut first = vecs(n, n + 1);
        for i in 0..n {
            first[i][i] = 1.0;
            first[i][n] = -x[i] / h;
        }
        let mut second = vecs(n * n, n + 1);
        for i in 0..n {
            for j in 0..n {
                let d = if i == j { 1.0 } else { 0.0 };
                second[i * n + j][n] = -d / h - x[i] * x[j] / (h * h * h);
            }
        }
        Some(Jet { value: self.eval(x), first, second })
    }
}

/// Derivatives of a vector function u: Rⁿ → R^k; `du[i][α]`, `d2u[i*n+j][α]`.
#[derive(Debug, Clone)]
pub struct GraphJet {
    pub u: Vec<f64>,
    pub du: Vec<Vec<f64>>,
    pub d2u: Vec<Vec<f64>>,
}

/// A vector function whose graph is studied.
pub trait GraphFunction: Send + Sync {
    fn dim(&self) -> usize;
    fn codim(&self) -> usize;
    fn value(&self, x: &[f64]) -> Vec<f64>;
    fn jet(&self, _x: &[f64]) -> Option<GraphJet> {
        None
    }
}

/// The holomorphic map z ↦ z² as a map R² → R².
#[derive(Debug, Clone)]
pub struct ZSquared;

impl GraphFunction for ZSquared {
    fn dim(&self) -> usize {
        2
    }
    fn codim(&self) -> usize {
        2
    }
    fn value(&self, x: &[f64]) -> Vec<f64> {
        vec![x[0] * x[0] - x[1] * x[1], 2.0 * x[0] * x[1]]
    }
    fn jet(&self, x: &[f64]) -> Option<GraphJet> {
        Some(GraphJet {
            u: self.value(x),
            du: vec![vec![2.0 * x[0], 2.0 * x[1]], vec![-2.0 * x[1], 2.0 * x[0]]],
            d2u: vec![vec![2.0, 0.0], vec![0.0, 2.0], vec![0.0, 2.0], vec![-2.0, 0.0]],
        })
    }
}

/// Affine map u(x) = b + M x, `m[α][i]`.
#[derive(Debug, Clone)]
pub struct AffineMap {
    pub b: Vec<f64>,
    pub m: Vec<Vec<f64>>,
}

impl GraphFunction for AffineMap {
    fn dim(&self) -> usize {
        self.m[0].len()
    }
    fn codim(&self) -> usize {
        self.b.len()
    }
    fn value(&self, x: &[f64]) -> Vec<f64> {
        self.b.iter().zip(&self.m).map(|(b, row)| b + row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>()).collect()
    }
    fn jet(&self, x: &[f64]) -> Option<GraphJet> {
        let n = self.dim();
        let k = self.codim();
        Some(GraphJet {
            u: self.value(x),
            du: (0..n).map(|i| (0..k).map(|a| self.m[a][i]).collect()).collect(),
            d2u: vec![vec![0.0; k]; n * n],
        })
    }
}

/// Graph chart x ↦ (x, u(x)); normals are seeded by the vertical axes.
#[derive(Clone)]
pub struct GraphChart {
    pub f: Arc<dyn GraphFunction>,
}

impl GraphChart {
    pub fn new(f: Arc<dyn GraphFunction>) -> Self {
        GraphChart { f }
    }
}

impl Chart for GraphChart {
    fn dim(&self) -> usize {
        self.f.dim()
    }
    fn ambient_dim(&self) -> usize {
        self.f.dim() + self.f.codim()
    }
    fn eval(&self, x: &[f64]) -> DVector<f64> {
        let mut v = x.to_vec();
        v.extend(self.f.value(x));
        DVector::from_vec(v)
    }
    fn jet(&self, x: &[f64]) -> Option<Jet> {
        let gj = self.f.jet(x)?;
        let n = self.dim();
        let big_n = self.ambient_dim();
        let mut value = x.to_vec();
        value.extend(&gj.u);
        let first = (0..n)
            .map(|i| {
                let mut v = DVector::zeros(big_n);
                v[i] = 1.0;
                for (a, d) in gj.du[i].iter().enumerate() {
                    v[n + a] = *d;
                }
                v
            })
            .collect();
        let second = gj
            .d2u
            .iter()
            .map(|d| {
                let mut v = DVector::zeros(big_n);
                for (a, dd) in d.iter().enumerate() {
                    v[n + a] = *dd;
                }
                v
            })
            .collect();
        Some(Jet { value: DVector::from_vec(value), first, second })
    }
    fn normal_seeds(&self, _x: &[f64]) -> Option<Vec<DVector<f64>>> {
        let n = self.dim();
        let big_n = self.ambient_dim();
        Some((n..big_n).map(|a| DVector::from_fn(big_n, |i, _| if i == a { 1.0 } else { 0.0 })).collect())
    }
}

/// x ↦ shift + R·ψ(x) for an orthogonal R.
#[derive(Clone)]
pub struct RigidChart {
    pub inner: Arc<dyn Chart>,
    pub rotation: nalgebra::DMatrix<f64>,
    pub shift: DVector<f64>,
}

impl Chart for RigidChart {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn ambient_dim(&self) -> usize {
        self.inner.ambient_dim()
    }
    fn eval(&self, x: &[f64]) -> DVector<f64> {
        &self.shift + &self.rotation * self.inner.eval(x)
    }
    fn jet(&self, x: &[f64]) -> Option<Jet> {
        let j = self.inner.jet(x)?;
        Some(Jet {
            value: &self.shift + &self.rotation * j.value,
            first: j.first.iter().map(|v| &self.rotation * v).collect(),
            second: j.second.iter().map(|v| &self.rotation * v).collect(),
        })
    }
    fn normal_seeds(&self, x: &[f64]) -> Option<Vec<DVector<f64>>> {
        self.inner.normal_seeds(x).map(|s| s.iter().map(|v| &self.rotation * v).collect())
    }
}
