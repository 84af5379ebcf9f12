//! Cones written as graphs over their tangent plane along a ray, and the
//! flattening w̃ = φ(xⁿ)w of that graph on xⁿ ∈ [1, 2].

use nalgebra::{DMatrix, DVector};

use super::cutoff;
use crate::cones::{ConeSpec, LinkKind};
use crate::error::{Error, Result};
use crate::geometry::ad::{arc_chart, Scalar, SmoothMap};
use crate::geometry::{ImmersionPatch, ParamBox};

/// Orthonormal coordinates adapted to the ray through a link point:
/// `e` along the ray, `tau` spanning the link's tangent space, `nu` the
/// normal space of the cone. All relative to the vertex.
#[derive(Debug, Clone)]
pub struct WedgeFrame {
    pub e: DVector<f64>,
    pub tau: Vec<DVector<f64>>,
    pub nu: Vec<DVector<f64>>,
}

/// How the cone is solved for its normal height over the tangent plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConeGraphModel {
    /// The cone is its tangent plane.
    Flat,
    /// q|X|² = p|Y|² in R^{p+1} × R^{q+1}.
    ProductSpheres { p: usize, q: usize },
}

impl ConeGraphModel {
    pub fn of(spec: &ConeSpec) -> Result<Self> {
        match spec.kind {
            LinkKind::Equatorial { .. } => Ok(ConeGraphModel::Flat),
            LinkKind::ProductSpheres { p, q } => Ok(ConeGraphModel::ProductSpheres { p, q }),
            other => Err(Error::NotGraphicalOverTangent(format!("no closed-form tangent graph for {other:?}"))),
        }
    }
}

pub fn wedge_frame(spec: &ConeSpec, s: &[f64]) -> Result<WedgeFrame> {
    let jet = spec.link.jet(s).ok_or(Error::JetUnavailable)?;
    let e = &jet.value - &spec.vertex;
    let mut basis = vec![e.clone()];
    let mut tau = Vec::new();
    for t in &jet.first {
        let mut v = t.clone();
        if crate::linalg::orthogonalize(&mut v, &basis) < 1e-10 {
            return Err(Error::DegenerateLink("link tangents are dependent".into()));
        }
        basis.push(v.clone());
        tau.push(v);
    }
    let big_n = e.len();
    let mut seeds = spec.link.normal_seeds(s).unwrap_or_default();
    seeds.extend((0..big_n).map(|a| DVector::from_fn(big_n, |i, _| if i == a { 1.0 } else { 0.0 })));
    let mut nu = Vec::new();
    for sd in seeds {
        if basis.len() == big_n {
            break;
        }
        let mut v = sd;
        if crate::linalg::orthogonalize(&mut v, &basis) > 1e-6 {
            basis.push(v.clone());
            nu.push(v);
        }
    }
    Ok(WedgeFrame { e, tau, nu })
}

/// ψ(x', xⁿ) = vertex + R(xⁿe + Σ xⁱτ_i + φ(xⁿ)w(x)·ν), or without φ when
/// `flatten` is false.
#[derive(Debug, Clone)]
pub struct WedgeMap {
    pub frame: WedgeFrame,
    pub model: ConeGraphModel,
    pub rotation: DMatrix<f64>,
    pub vertex: DVector<f64>,
    pub flatten: bool,
}

impl WedgeMap {
    fn height<T: Scalar>(&self, p0: &[T]) -> T {
        match self.model {
            ConeGraphModel::Flat => p0[0].cst(0.0),
            ConeGraphModel::ProductSpheres { p, q } => {
                let (pf, qf) = (p as f64, q as f64);
                let nu = &self.frame.nu[0];
                let split = p + 1;
                let mut a = 0.0;
                let mut b = p0[0].cst(0.0);
                let mut c = p0[0].cst(0.0);
                for (k, v) in p0.iter().enumerate() {
                    let w = if k < split { qf } else { -pf };
                    a += w * nu[k] * nu[k];
                    b = b + *v * (2.0 * w * nu[k]);
                    c = c + *v * *v * w;
                }
                let disc = b * b - c * (4.0 * a);
                let sq = disc.sqrt();
                let denom = if b.val() >= 0.0 { b + sq } else { b - sq };
                c * -2.0 / denom
            }
        }
    }

    /// (discriminant, |b|) of the height equation at a parameter point.
    fn graph_health(&self, x: &[f64]) -> (f64, f64) {
        match self.model {
            ConeGraphModel::Flat => (1.0, 1.0),
            ConeGraphModel::ProductSpheres { p, q } => {
                let p0 = self.local_base(x);
                let nu = &self.frame.nu[0];
                let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
                for (k, v) in p0.iter().enumerate() {
                    let w = if k <= p { q as f64 } else { -(p as f64) };
                    a += w * nu[k] * nu[k];
                    b += 2.0 * w * nu[k] * v;
                    c += w * v * v;
                }
                (b * b - 4.0 * a * c, b.abs())
            }
        }
    }

    fn local_base<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let n = x.len();
        let xn = x[n - 1];
        (0..self.frame.e.len())
            .map(|k| {
                let mut v = xn * self.frame.e[k];
                for (i, t) in self.frame.tau.iter().enumerate() {
                    v = v + x[i] * t[k];
                }
                v
            })
            .collect()
    }
}

impl SmoothMap for WedgeMap {
    fn dim(&self) -> usize {
        self.frame.tau.len() + 1
    }
    fn ambient_dim(&self) -> usize {
        self.frame.e.len()
    }
    fn map<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let n = x.len();
        let mut local = self.local_base(x);
        if let ConeGraphModel::ProductSpheres { .. } = self.model {
            let mut z = self.height(&local);
            if self.flatten {
                z = z * cutoff(x[n - 1]);
            }
            for (l, nk) in local.iter_mut().zip(self.frame.nu[0].iter()) {
                *l = *l + z * *nk;
            }
        }
        let big_n = local.len();
        (0..big_n)
            .map(|r| {
                let mut v = x[0].cst(self.vertex[r]);
                for (c, l) in local.iter().enumerate() {
                    let rc = self.rotation[(r, c)];
                    if rc != 0.0 {
                        v = v + *l * rc;
                    }
                }
                v
            })
            .collect()
    }
    fn normal_seeds(&self, _x: &[f64]) -> Option<Vec<DVector<f64>>> {
        Some(self.frame.nu.iter().map(|v| &self.rotation * v).collect())
    }
}

/// Patch of a (possibly flattened) wedge over [−ε, ε]^{n−1} × [x0, x1].
pub fn wedge_patch(map: WedgeMap, epsilon: f64, x0: f64, x1: f64) -> Result<ImmersionPatch> {
    let d = map.frame.tau.len();
    let mut probes: Vec<Vec<f64>> = Vec::new();
    for corner in 0..(1usize << d) {
        for &xn in &[x0, 0.5 * (x0 + x1), x1] {
            let mut x: Vec<f64> = (0..d).map(|i| if corner >> i & 1 == 1 { epsilon } else { -epsilon }).collect();
            x.push(xn);
            probes.push(x);
        }
    }
    for x in &probes {
        let (disc, b) = map.graph_health(x);
        if disc <= 0.0 || b < 1e-8 {
            return Err(Error::NotGraphicalOverTangent(format!("height equation degenerates at {x:?}")));
        }
    }
    let mut lo = vec![-epsilon; d];
    let mut hi = vec![epsilon; d];
    lo.push(x0);
    hi.push(x1);
    Ok(ImmersionPatch::new(arc_chart(map), ParamBox::new(lo, hi)))
}

/// Graph of φ(xⁿ)w(x', xⁿ) over B_ε^{n−1} × [1, 2] about the ray through
/// the link point with parameters `s`.
pub fn flatten_wedge(spec: &ConeSpec, s: &[f64], epsilon: f64) -> Result<ImmersionPatch> {
    let frame = wedge_frame(spec, s)?;
    let model = ConeGraphModel::of(spec)?;
    let big_n = frame.e.len();
    let map = WedgeMap { frame, model, rotation: DMatrix::identity(big_n, big_n), vertex: spec.vertex.clone(), flatten: true };
    wedge_patch(map, epsilon, 1.0, 2.0)
}

/// The unflattened cone as a graph over its tangent plane on [x0, x1].
pub fn cone_wedge(spec: &ConeSpec, s: &[f64], epsilon: f64, x0: f64, x1: f64) -> Result<ImmersionPatch> {
    let frame = wedge_frame(spec, s)?;
    let model = ConeGraphModel::of(spec)?;
    let big_n = frame.e.len();
    let map = WedgeMap { frame, model, rotation: DMatrix::identity(big_n, big_n), vertex: spec.vertex.clone(), flatten: false };
    wedge_patch(map, epsilon, x0, x1)
}
