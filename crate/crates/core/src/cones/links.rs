//! Link charts: spheres in hyperspherical angles, products of spheres, and
//! the Hopf-coordinate chart of the Lawson–Osserman link.

use nalgebra::DVector;

use crate::geometry::ad::{Scalar, SmoothMap};

/// Point of S^k(r) ⊂ R^{k+1} in hyperspherical angles (φ₁..φ_k); the last
/// angle is the periodic one.
pub fn sphere_coords<T: Scalar>(ang: &[T], r: f64) -> Vec<T> {
    let k = ang.len();
    let mut out = Vec::with_capacity(k + 1);
    let mut prod = ang[0].cst(r);
    for a in ang {
        out.push(prod * a.cos());
        prod = prod * a.sin();
    }
    out.push(prod);
    out
}

/// Angle box for S^k: polar angles kept `margin` away from the poles.
pub fn sphere_angle_box(k: usize, margin: f64) -> (Vec<f64>, Vec<f64>, Vec<bool>) {
    let mut lo = vec![margin; k];
    let mut hi = vec![std::f64::consts::PI - margin; k];
    let mut per = vec![false; k];
    lo[k - 1] = 0.0;
    hi[k - 1] = 2.0 * std::f64::consts::PI;
    per[k - 1] = true;
    (lo, hi, per)
}

/// Equatorial S^k ⊂ R^{k+1} ⊂ R^{ambient}.
#[derive(Debug, Clone)]
pub struct EquatorialLink {
    pub k: usize,
    pub ambient: usize,
}

impl SmoothMap for EquatorialLink {
    fn dim(&self) -> usize {
        self.k
    }
    fn ambient_dim(&self) -> usize {
        self.ambient
    }
    fn map<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let mut v = sphere_coords(x, 1.0);
        while v.len() < self.ambient {
            v.push(x[0].cst(0.0));
        }
        v
    }
    fn normal_seeds(&self, _x: &[f64]) -> Option<Vec<DVector<f64>>> {
        Some(
            ((self.k + 1)..self.ambient)
                .map(|a| DVector::from_fn(self.ambient, |i, _| if i == a { 1.0 } else { 0.0 }))
                .collect(),
        )
    }
}

/// S^p(a) × S^q(b) ⊂ S^{p+q+1} with a² = p/(p+q), b² = q/(p+q).
#[derive(Debug, Clone)]
pub struct ProductSphereLink {
    pub p: usize,
    pub q: usize,
}

impl ProductSphereLink {
    pub fn radii(&self) -> (f64, f64) {
        let s = (self.p + self.q) as f64;
        ((self.p as f64 / s).sqrt(), (self.q as f64 / s).sqrt())
    }

    /// Unit normal of the link inside the sphere, (b/a X, −a/b Y).
    pub fn sphere_normal(&self, s: &[f64]) -> DVector<f64> {
        let (a, b) = self.radii();
        let w = self.map(s);
        let p1 = self.p + 1;
        DVector::from_fn(w.len(), |i, _| if i < p1 { b / a * w[i] } else { -a / b * w[i] })
    }
}

impl SmoothMap for ProductSphereLink {
    fn dim(&self) -> usize {
        self.p + self.q
    }
    fn ambient_dim(&self) -> usize {
        self.p + self.q + 2
    }
    fn map<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let (a, b) = self.radii();
        let mut v = sphere_coords(&x[..self.p], a);
        v.extend(sphere_coords(&x[self.p..], b));
        v
    }
    fn normal_seeds(&self, x: &[f64]) -> Option<Vec<DVector<f64>>> {
        Some(vec![self.sphere_normal(x)])
    }
}

/// The quadratic Hopf map in real coordinates, z₁ = x₁ + i x₂, z₂ = x₃ + i x₄:
/// Q(x) = (2 z̄₁z₂, |z₁|² − |z₂|²) ∈ C × R.
pub fn hopf_quadratic<T: Scalar>(x: &[T]) -> [T; 3] {
    [
        (x[0] * x[2] + x[1] * x[3]) * 2.0,
        (x[0] * x[3] - x[1] * x[2]) * 2.0,
        x[0] * x[0] + x[1] * x[1] - x[2] * x[2] - x[3] * x[3],
    ]
}

/// Hopf map η on S³ (restriction of the quadratic map).
pub fn hopf(x: &[f64; 4]) -> [f64; 3] {
    hopf_quadratic(&x[..])
}

/// Hopf coordinates (ξ, θ₁, θ₂) ↦ (cos ξ e^{iθ₁}, sin ξ e^{iθ₂}) ∈ S³.
pub fn hopf_coordinates<T: Scalar>(s: &[T]) -> [T; 4] {
    let (c, sn) = (s[0].cos(), s[0].sin());
    [c * s[1].cos(), c * s[1].sin(), sn * s[2].cos(), sn * s[2].sin()]
}

/// The Lawson–Osserman link ω ↦ (2/3 ω, √5/3 η(ω)) in Hopf coordinates.
#[derive(Debug, Clone)]
pub struct LawsonOssermanLink;

impl SmoothMap for LawsonOssermanLink {
    fn dim(&self) -> usize {
        3
    }
    fn ambient_dim(&self) -> usize {
        7
    }
    fn map<T: Scalar>(&self, s: &[T]) -> Vec<T> {
        let w = hopf_coordinates(s);
        let q = hopf_quadratic(&w);
        let c = 5f64.sqrt() / 3.0;
        vec![w[0] * (2.0 / 3.0), w[1] * (2.0 / 3.0), w[2] * (2.0 / 3.0), w[3] * (2.0 / 3.0), q[0] * c, q[1] * c, q[2] * c]
    }
    fn normal_seeds(&self, _x: &[f64]) -> Option<Vec<DVector<f64>>> {
        Some((4..7).map(|a| DVector::from_fn(7, |i, _| if i == a { 1.0 } else { 0.0 })).collect())
    }
}

/// u(x) = (√5/2)|x| η(x/|x|) = (√5/2) Q(x)/|x| on R⁴ \ {0}.
#[derive(Debug, Clone)]
pub struct LawsonOssermanMap;

impl SmoothMap for LawsonOssermanMap {
    fn dim(&self) -> usize {
        4
    }
    fn ambient_dim(&self) -> usize {
        3
    }
    fn map<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3]).sqrt();
        let q = hopf_quadratic(x);
        let c = 5f64.sqrt() / 2.0;
        q.iter().map(|qi| *qi * c / r).collect()
    }
}
