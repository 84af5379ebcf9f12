//! Cones over links in the unit sphere, graphical cones and the
//! Lawson–Osserman cone.

pub mod graph;
pub mod links;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::ad::{arc_chart, AdChart};
use crate::geometry::{Chart, ImmersionPatch, Jet, ParamBox};
pub use graph::{lawson_osserman_cone, mss_residual, GraphCone};
use links::*;

/// Pole margin used for hyperspherical angle boxes.
pub const POLE_MARGIN: f64 = 0.05;
/// Default exclusion radius around the vertex.
pub const DEFAULT_DELTA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LinkKind {
    /// Totally geodesic S^k ⊂ S^{ambient−1}.
    Equatorial { k: usize },
    /// S^p(√(p/(p+q))) × S^q(√(q/(p+q))).
    ProductSpheres { p: usize, q: usize },
    LawsonOsserman,
    Custom,
}

/// A cone p + tω(s) over a link chart ω in the unit sphere.
#[derive(Clone)]
pub struct ConeSpec {
    pub vertex: DVector<f64>,
    pub link: Arc<dyn Chart>,
    pub link_domain: ParamBox,
    pub link_periodic: Vec<bool>,
    /// Cone dimension (link dimension + 1).
    pub n: usize,
    pub radial_range: (f64, f64),
    pub kind: LinkKind,
}

impl std::fmt::Debug for ConeSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConeSpec").field("kind", &self.kind).field("n", &self.n).field("radial_range", &self.radial_range).finish()
    }
}

impl ConeSpec {
    /// Checks that the link is unit and immersed; non-unit links are rejected.
    pub fn new(
        vertex: DVector<f64>,
        link: Arc<dyn Chart>,
        link_domain: ParamBox,
        link_periodic: Vec<bool>,
        radial_range: (f64, f64),
        kind: LinkKind,
    ) -> Result<Self> {
        let n = link.dim() + 1;
        if vertex.len() != link.ambient_dim() {
            return Err(Error::InvalidInput("vertex and link live in different spaces".into()));
        }
        if !(radial_range.0 > 0.0 && radial_range.1 > radial_range.0) {
            return Err(Error::InvalidInput(format!("radial range {radial_range:?} must lie in (0, ∞)")));
        }
        let spec = ConeSpec { vertex, link, link_domain, link_periodic, n, radial_range, kind };
        for s in spec.link_samples(5) {
            let r = spec.link.eval(&s).norm();
            if (r - 1.0).abs() > 1e-12 {
                return Err(Error::DegenerateLink(format!("link point at {s:?} has norm {r}")));
            }
        }
        Ok(spec)
    }

    fn origin(dim: usize) -> DVector<f64> {
        DVector::zeros(dim)
    }

    pub fn product_spheres(p: usize, q: usize) -> Self {
        let link = ProductSphereLink { p, q };
        let (mut lo, mut hi, mut per) = sphere_angle_box(p, POLE_MARGIN);
        let (lo2, hi2, per2) = sphere_angle_box(q, POLE_MARGIN);
        lo.extend(lo2);
        hi.extend(hi2);
        per.extend(per2);
        Self::new(
            Self::origin(p + q + 2),
            arc_chart(link),
            ParamBox::new(lo, hi),
            per,
            (DEFAULT_DELTA, 1.0),
            LinkKind::ProductSpheres { p, q },
        )
        .expect("product-sphere link is unit")
    }

    /// Cone over S¹(√½)×S¹(√½) in R⁴.
    pub fn clifford() -> Self {
        Self::product_spheres(1, 1)
    }

    /// Cone over S³(√½)×S³(√½) in R⁸.
    pub fn simons() -> Self {
        Self::product_spheres(3, 3)
    }

    /// Flat cone over an equatorial S^k in R^{ambient}.
    pub fn equatorial(k: usize, ambient: usize) -> Self {
        let (lo, hi, per) = sphere_angle_box(k, POLE_MARGIN);
        Self::new(
            Self::origin(ambient),
            arc_chart(EquatorialLink { k, ambient }),
            ParamBox::new(lo, hi),
            per,
            (DEFAULT_DELTA, 1.0),
            LinkKind::Equatorial { k },
        )
        .expect("equatorial link is unit")
    }

    /// Cone over the Lawson–Osserman link in R⁷.
    pub fn lawson_osserman() -> Self {
        let tau = 2.0 * std::f64::consts::PI;
        Self::new(
            Self::origin(7),
            arc_chart(LawsonOssermanLink),
            ParamBox::new(vec![POLE_MARGIN, 0.0, 0.0], vec![std::f64::consts::FRAC_PI_2 - POLE_MARGIN, tau, tau]),
            vec![false, true, true],
            (DEFAULT_DELTA, 1.0),
            LinkKind::LawsonOsserman,
        )
        .expect("LO link is unit")
    }

    pub fn with_radial_range(mut self, lo: f64, hi: f64) -> Self {
        assert!(lo > 0.0 && hi > lo);
        self.radial_range = (lo, hi);
        self
    }

    /// Truncation C_δ: radii in [δ, 1].
    pub fn truncated(self, delta: f64) -> Self {
        self.with_radial_range(delta, 1.0)
    }

    pub fn with_vertex(mut self, p: DVector<f64>) -> Self {
        assert_eq!(p.len(), self.vertex.len());
        self.vertex = p;
        self
    }

    pub fn ambient_dim(&self) -> usize {
        self.vertex.len()
    }

    /// Tensor grid of `m` samples per link parameter.
    pub fn link_samples(&self, m: usize) -> Vec<Vec<f64>> {
        let d = self.link_domain.dim();
        let mut out = Vec::new();
        let total = m.pow(d as u32);
        for idx in 0..total {
            let mut rem = idx;
            let s: Vec<f64> = (0..d)
                .map(|a| {
                    let i = rem % m;
                    rem /= m;
                    let (lo, hi) = (self.link_domain.lower[a], self.link_domain.upper[a]);
                    lo + (hi - lo) * (i as f64 + 0.5) / m as f64
                })
                .collect();
            out.push(s);
        }
        out
    }

    /// Link as a patch of its own.
    pub fn link_patch(&self) -> ImmersionPatch {
        ImmersionPatch::new(self.link.clone(), self.link_domain.clone())
    }
}

/// Polar chart (t, s) ↦ p + t ω(s).
pub struct ConeChart {
    pub vertex: DVector<f64>,
    pub link: Arc<dyn Chart>,
}

impl Chart for ConeChart {
    fn dim(&self) -> usize {
        self.link.dim() + 1
    }
    fn ambient_dim(&self) -> usize {
        self.vertex.len()
    }
    fn eval(&self, x: &[f64]) -> DVector<f64> {
        &self.vertex + x[0] * self.link.eval(&x[1..])
    }
    fn jet(&self, x: &[f64]) -> Option<Jet> {
        let lj = self.link.jet(&x[1..])?;
        let t = x[0];
        let n = self.dim();
        let big_n = self.ambient_dim();
        let mut first = vec![lj.value.clone()];
        first.extend(lj.first.iter().map(|v| v * t));
        let mut second = vec![DVector::zeros(big_n); n * n];
        for i in 1..n {
            second[i] = lj.first[i - 1].clone();
            second[i * n] = lj.first[i - 1].clone();
            for j in 1..n {
                second[i * n + j] = lj.d2(i - 1, j - 1) * t;
            }
        }
        Some(Jet { value: &self.vertex + t * &lj.value, first, second })
    }
    fn normal_seeds(&self, x: &[f64]) -> Option<Vec<DVector<f64>>> {
        self.link.normal_seeds(&x[1..])
    }
}

/// Immersion patch of the truncated cone in polar coordinates.
pub fn cone_patch(spec: &ConeSpec) -> Result<ImmersionPatch> {
    let mut lo = vec![spec.radial_range.0];
    let mut hi = vec![spec.radial_range.1];
    lo.extend(&spec.link_domain.lower);
    hi.extend(&spec.link_domain.upper);
    let chart = Arc::new(ConeChart { vertex: spec.vertex.clone(), link: spec.link.clone() });
    let patch = ImmersionPatch::new(chart, ParamBox::new(lo, hi));
    let c = patch.domain.center();
    match patch.geometry_at(&c) {
        Ok(_) => Ok(patch),
        Err(Error::RankDeficient { sigma_min }) => Err(Error::DegenerateLink(format!("cone map rank fails (σ_min {sigma_min:.2e})"))),
        Err(e) => Err(e),
    }
}

/// Intrinsic quantities of the link as a submanifold of the unit sphere.
#[derive(Debug, Clone)]
pub struct LinkPointGeometry {
    pub area_element: f64,
    pub a_norm_sq: f64,
    /// Mean curvature of Σ in the sphere.
    pub mean_curvature: DVector<f64>,
}

/// A_Σ is the part of ω_{ij} orthogonal to both TΣ and the position ω.
pub fn link_geometry(link: &dyn Chart, s: &[f64]) -> Result<LinkPointGeometry> {
    let jet = link.jet(s).ok_or(Error::JetUnavailable)?;
    let k = jet.dim();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut w = jet.value.clone();
    crate::linalg::orthogonalize(&mut w, &basis);
    basis.push(w);
    for t in &jet.first {
        let mut v = t.clone();
        if crate::linalg::orthogonalize(&mut v, &basis) < 1e-10 {
            return Err(Error::DegenerateLink(format!("link chart degenerate at {s:?}")));
        }
        basis.push(v);
    }
    let reject = |v: &DVector<f64>| {
        let mut out = v.clone();
        for b in &basis {
            out.axpy(-b.dot(v), b, 1.0);
        }
        out
    };
    let g = DMatrix::from_fn(k, k, |i, j| jet.first[i].dot(&jet.first[j]));
    let gi = g.clone().try_inverse().ok_or(Error::DegenerateLink("singular link metric".into()))?;
    let a: Vec<DVector<f64>> = jet.second.iter().map(reject).collect();
    let mut norm_sq = 0.0;
    let mut h = DVector::zeros(jet.value.len());
    for i in 0..k {
        for j in 0..k {
            h.axpy(gi[(i, j)], &a[i * k + j], 1.0);
            for kk in 0..k {
                for l in 0..k {
                    norm_sq += gi[(i, kk)] * gi[(j, l)] * a[i * k + j].dot(&a[kk * k + l]);
                }
            }
        }
    }
    Ok(LinkPointGeometry { area_element: g.determinant().sqrt(), a_norm_sq: norm_sq, mean_curvature: h })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConeScalingReport {
    pub samples: usize,
    pub max_error: f64,
    pub worst_index: usize,
    /// (r, r|A_C|, |A_Σ|) per sample.
    pub values: Vec<(f64, f64, f64)>,
}

/// Checks r·|A_C(rω)| = |A_Σ(ω)|. The error is relative when |A_Σ| is
/// non-negligible and absolute otherwise.
pub fn verify_cone_scaling(spec: &ConeSpec, samples: &[(f64, Vec<f64>)], tol: f64) -> Result<ConeScalingReport> {
    let mut lo = vec![samples.iter().map(|s| s.0).fold(spec.radial_range.0, f64::min)];
    let mut hi = vec![samples.iter().map(|s| s.0).fold(spec.radial_range.1, f64::max)];
    lo.extend(&spec.link_domain.lower);
    hi.extend(&spec.link_domain.upper);
    let chart = Arc::new(ConeChart { vertex: spec.vertex.clone(), link: spec.link.clone() });
    let patch = ImmersionPatch::new(chart, ParamBox::new(lo, hi));
    let mut values = Vec::with_capacity(samples.len());
    let (mut worst, mut worst_index) = (0.0f64, 0usize);
    for (idx, (r, s)) in samples.iter().enumerate() {
        let mut x = vec![*r];
        x.extend(s);
        let pg = patch.point_geometry_static(&x)?;
        let lhs = r * pg.sff.norm();
        let rhs = link_geometry(spec.link.as_ref(), s)?.a_norm_sq.max(0.0).sqrt();
        let err = if rhs > 1e-8 { (lhs - rhs).abs() / rhs } else { (lhs - rhs).abs() };
        if err > worst {
            worst = err;
            worst_index = idx;
        }
        values.push((*r, lhs, rhs));
    }
    if worst > tol {
        return Err(Error::ToleranceExceeded { worst, index: worst_index, tol });
    }
    Ok(ConeScalingReport { samples: samples.len(), max_error: worst, worst_index, values })
}

/// CSV rows `params..., coords..., |A|, |H|` on a tensor sample of the cone.
pub fn export_cone_csv(spec: &ConeSpec, radial: usize, per_link_axis: usize) -> Result<String> {
    let patch = cone_patch(spec)?;
    let d = patch.n();
    let big_n = patch.ambient_dim();
    let mut out = String::new();
    let mut head: Vec<String> = (0..d).map(|i| format!("s{i}")).collect();
    head.extend((0..big_n).map(|i| format!("x{i}")));
    head.push("abs_a".into());
    head.push("abs_h".into());
    out.push_str(&head.join(","));
    out.push('\n');
    let (r0, r1) = spec.radial_range;
    for ir in 0..radial {
        let t = r0 + (r1 - r0) * ir as f64 / (radial.max(2) - 1) as f64;
        for s in spec.link_samples(per_link_axis) {
            let mut x = vec![t];
            x.extend(&s);
            let pg = patch.point_geometry_static(&x)?;
            let mut row: Vec<String> = x.iter().map(|v| format!("{v:.10e}")).collect();
            row.extend(pg.jet.value.iter().map(|v| format!("{v:.10e}")));
            row.push(format!("{:.10e}", pg.sff.norm()));
            row.push(format!("{:.10e}", pg.sff.mean_curvature.norm()));
            out.push_str(&row.join(","));
            out.push('\n');
        }
    }
    Ok(out)
}

/// Wavefront OBJ of a two-dimensional cone (n = 2) in its first three
/// ambient coordinates.
pub fn export_cone_obj(spec: &ConeSpec, radial: usize, angular: usize) -> Result<String> {
    if spec.n != 2 {
        return Err(Error::InvalidInput("OBJ export supports n = 2 only".into()));
    }
    let (r0, r1) = spec.radial_range;
    let (lo, hi) = (spec.link_domain.lower[0], spec.link_domain.upper[0]);
    let mut out = String::new();
    for i in 0..radial {
        let t = r0 + (r1 - r0) * i as f64 / (radial - 1) as f64;
        for j in 0..angular {
            let s = lo + (hi - lo) * j as f64 / angular as f64;
            let p = &spec.vertex + t * spec.link.eval(&[s]);
            out.push_str(&format!("v {:.9} {:.9} {:.9}\n", p[0], p[1], p.get(2).copied().unwrap_or(0.0)));
        }
    }
    for i in 0..radial - 1 {
        for j in 0..angular {
            let a = i * angular + j + 1;
            let b = i * angular + (j + 1) % angular + 1;
            out.push_str(&format!("f {} {} {} {}\n", a, b, b + angular, a + angular));
        }
    }
    Ok(out)
}

/// Convenience for a [`links::ProductSphereLink`] as a chart.
pub fn product_link_chart(p: usize, q: usize) -> AdChart<ProductSphereLink> {
    AdChart(ProductSphereLink { p, q })
}

#[cfg(test)]
mod tests;
