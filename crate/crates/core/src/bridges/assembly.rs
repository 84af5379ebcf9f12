//! Approximate solutions M^ε = ∪ C_i ∪ Γ_l(ε): placed cones, flattened
//! wedges along the attachment rays and the bridge strips, tagged by region.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::curve::{CenterCurve, TurningProfile};
use super::wedge::{wedge_frame, wedge_patch, ConeGraphModel, WedgeMap};
use super::{build_perturbed_bridge, build_ruled_bridge, BridgeVariant};
use crate::cones::{cone_patch, ConeSpec};
use crate::error::{Error, Result};
use crate::geometry::charts::RigidChart;
use crate::geometry::ImmersionPatch;

/// A cone moved by x ↦ vertex + R(x − spec.vertex).
#[derive(Debug, Clone)]
pub struct PlacedCone {
    pub spec: ConeSpec,
    pub rotation: DMatrix<f64>,
    pub vertex: DVector<f64>,
}

impl PlacedCone {
    pub fn identity(spec: ConeSpec) -> Self {
        let big_n = spec.ambient_dim();
        let vertex = spec.vertex.clone();
        PlacedCone { spec, rotation: DMatrix::identity(big_n, big_n), vertex }
    }

    pub fn patch(&self) -> Result<ImmersionPatch> {
        let base = cone_patch(&self.spec)?;
        let shift = &self.vertex - &self.rotation * &self.spec.vertex;
        let chart = Arc::new(RigidChart { inner: base.chart.clone(), rotation: self.rotation.clone(), shift });
        Ok(ImmersionPatch::new(chart, base.domain))
    }

    /// The wedge about the ray through link point `s`, on xⁿ ∈ [x0, x1].
    pub fn wedge(&self, s: &[f64], epsilon: f64, x0: f64, x1: f64, flatten: bool) -> Result<ImmersionPatch> {
        let frame = wedge_frame(&self.spec, s)?;
        let model = ConeGraphModel::of(&self.spec)?;
        let map = WedgeMap { frame, model, rotation: self.rotation.clone(), vertex: self.vertex.clone(), flatten };
        wedge_patch(map, epsilon, x0, x1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RegionTag {
    Cone,
    Patching,
    BridgeInterior,
}

/// Which part of a patch's parameter box belongs to the region. Ball
/// sections are balls in the first n−1 parameters, constant along the last.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Section {
    Full,
    Ball { radius: f64 },
    /// Radius ε/2·(1 + φ(2xⁿ − 1)) on xⁿ ∈ [1, 2]: ε at the cone, ε/2 from
    /// xⁿ = 3/2 on.
    SubStrip { epsilon: f64 },
}

impl Section {
    pub fn radius_at(&self, xn: f64) -> f64 {
        match *self {
            Section::Full => f64::INFINITY,
            Section::Ball { radius } => radius,
            Section::SubStrip { epsilon } => 0.5 * epsilon * (1.0 + super::cutoff(2.0 * xn - 1.0)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Region {
    pub tag: RegionTag,
    pub patch: ImmersionPatch,
    pub section: Section,
    /// Cone index for cone and patching regions, bridge index otherwise.
    pub owner: usize,
}

/// A strip with its two attachments (cone index, link parameters). The
/// strip starts at the first attachment.
#[derive(Debug, Clone)]
pub struct BridgePiece {
    pub variant: BridgeVariant,
    pub curve: Arc<CenterCurve>,
    pub radius: f64,
    pub strip: ImmersionPatch,
    pub ends: [(usize, Vec<f64>); 2],
}

/// Boundary components: strip sides and the cones' outer links with the
/// disks D_{5ε}(q_k) about attachment points removed.
#[derive(Debug, Clone, Serialize)]
pub enum BoundaryPiece {
    StripSide { bridge: usize },
    Link { cone: usize, excluded: Vec<Vec<f64>>, radius: f64 },
}

#[derive(Debug, Clone)]
pub struct ApproximateSolution {
    pub n: usize,
    pub ambient: usize,
    pub epsilon: f64,
    pub cones: Vec<PlacedCone>,
    pub bridges: Vec<BridgePiece>,
    pub regions: Vec<Region>,
    pub singular_points: Vec<DVector<f64>>,
    pub boundary: Vec<BoundaryPiece>,
}

impl ApproximateSolution {
    pub fn regions_tagged(&self, tag: RegionTag) -> impl Iterator<Item = &Region> {
        self.regions.iter().filter(move |r| r.tag == tag)
    }
}

const MATCH_TOL: f64 = 1e-6;

fn tangent_projector(patch: &ImmersionPatch, x: &[f64]) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let jet = patch.jet(x)?;
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for t in &jet.first {
        let mut v = t.clone();
        crate::linalg::orthogonalize(&mut v, &basis);
        basis.push(v);
    }
    let big_n = jet.value.len();
    let mut p = DMatrix::zeros(big_n, big_n);
    for b in &basis {
        p += b * b.transpose();
    }
    Ok((jet.value, p))
}

fn check_match(what: &str, a: (&ImmersionPatch, &[f64]), b: (&ImmersionPatch, &[f64])) -> Result<()> {
    let (pa, qa) = tangent_projector(a.0, a.1)?;
    let (pb, qb) = tangent_projector(b.0, b.1)?;
    let dp = (pa - pb).norm();
    let dq = (qa - qb).norm();
    if dp > MATCH_TOL || dq > MATCH_TOL {
        return Err(Error::TangencyMismatch(format!("{what}: position gap {dp:.2e}, tangent-plane gap {dq:.2e}")));
    }
    Ok(())
}

fn find(parent: &mut [usize], i: usize) -> usize {
    let mut r = i;
    while parent[r] != r {
        r = parent[r];
    }
    parent[i] = r;
    r
}

/// Checks tangency at every attachment and connectivity, then builds the
/// tagged region list. Wedges use radius ε (sub-strip profile for
/// perturbed bridges).
pub fn assemble_approximate_solution(cones: Vec<PlacedCone>, bridges: Vec<BridgePiece>, epsilon: f64) -> Result<ApproximateSolution> {
    let first = cones.first().ok_or_else(|| Error::InvalidInput("no cones".into()))?;
    let (n, ambient) = (first.spec.n, first.spec.ambient_dim());
    if cones.iter().any(|c| c.spec.n != n || c.spec.ambient_dim() != ambient) {
        return Err(Error::InvalidInput("cones differ in dimension".into()));
    }
    let mut regions = Vec::new();
    for (i, c) in cones.iter().enumerate() {
        regions.push(Region { tag: RegionTag::Cone, patch: c.patch()?, section: Section::Full, owner: i });
    }
    let mut parent: Vec<usize> = (0..cones.len()).collect();
    let mut excluded: Vec<Vec<Vec<f64>>> = vec![vec![]; cones.len()];
    for (l, b) in bridges.iter().enumerate() {
        if b.strip.n() != n || b.strip.ambient_dim() != ambient {
            return Err(Error::InvalidInput(format!("bridge {l} does not fit the cones")));
        }
        let mut x_strip = vec![0.0; n];
        for (k, (ci, s)) in b.ends.iter().enumerate() {
            let cone = cones.get(*ci).ok_or_else(|| Error::InvalidInput(format!("bridge {l} names cone {ci}")))?;
            let section = match b.variant {
                BridgeVariant::Perturbed => Section::SubStrip { epsilon },
                _ => Section::Ball { radius: epsilon },
            };
            let wedge = cone.wedge(s, epsilon, 1.0, 2.0, true)?;
            let mut x_wedge = vec![0.0; n];
            x_wedge[n - 1] = 2.0;
            x_strip[n - 1] = if k == 0 { 0.0 } else { b.curve.length };
            check_match(&format!("bridge {l} end {k} vs wedge"), (&wedge, &x_wedge), (&b.strip, &x_strip))?;
            let cp = &regions[*ci].patch;
            let mut x_cone = vec![1.0];
            x_cone.extend_from_slice(s);
            x_wedge[n - 1] = 1.0;
            check_match(&format!("wedge of cone {ci} vs cone"), (&wedge, &x_wedge), (cp, &x_cone))?;
            regions.push(Region { tag: RegionTag::Patching, patch: wedge, section, owner: *ci });
            excluded[*ci].push(s.clone());
        }
        regions.push(Region { tag: RegionTag::BridgeInterior, patch: b.strip.clone(), section: Section::Ball { radius: b.radius }, owner: l });
        let (a, c) = (find(&mut parent, b.ends[0].0), find(&mut parent, b.ends[1].0));
        parent[a] = c;
    }
    let roots: std::collections::BTreeSet<usize> = (0..cones.len()).map(|i| find(&mut parent, i)).collect();
    if roots.len() > 1 {
        return Err(Error::Disconnected { components: roots.len() });
    }
    let mut boundary: Vec<BoundaryPiece> = (0..bridges.len()).map(|bridge| BoundaryPiece::StripSide { bridge }).collect();
    for (cone, ex) in excluded.into_iter().enumerate() {
        boundary.push(BoundaryPiece::Link { cone, excluded: ex, radius: 5.0 * epsilon });
    }
    let singular_points = cones.iter().map(|c| c.vertex.clone()).collect();
    Ok(ApproximateSolution { n, ambient, epsilon, cones, bridges, regions, singular_points, boundary })
}

/// Rotation by `angle` in the plane of orthonormal (a, b).
pub fn plane_rotation(a: &DVector<f64>, b: &DVector<f64>, angle: f64) -> DMatrix<f64> {
    let big_n = a.len();
    let (s, c) = angle.sin_cos();
    let mut r = DMatrix::identity(big_n, big_n);
    r += (c - 1.0) * (a * a.transpose() + b * b.transpose());
    r += s * (b * a.transpose() - a * b.transpose());
    r
}

/// Two copies of `spec` joined by one bridge. The strip leaves the first
/// cone along the ray through link point `s` at radius 2, bends in the plane
/// of that ray and the first cone normal by the turning `profile`, keeps the
/// link tangents as its frame, and the
/// second cone is placed so that its own ray through `s` arrives reversed.
/// Ruled strips have radius ε, perturbed ones ε/2.
pub fn mirrored_pair(
    spec: &ConeSpec,
    s: &[f64],
    profile: TurningProfile,
    length: f64,
    epsilon: f64,
    variant: BridgeVariant,
) -> Result<ApproximateSolution> {
    let frame = wedge_frame(spec, s)?;
    let e = frame.e.clone();
    let nu1 = frame.nu.first().cloned().ok_or_else(|| Error::InvalidInput("cone of codimension 0".into()))?;
    let origin = &spec.vertex + 2.0 * &e;
    let curve = Arc::new(CenterCurve::new(origin, e.clone(), nu1.clone(), frame.tau.clone(), length, profile)?);
    let (strip, radius) = match variant {
        BridgeVariant::Ruled | BridgeVariant::PlanarPath => (build_ruled_bridge(&curve, epsilon)?, epsilon),
        BridgeVariant::Perturbed => (build_perturbed_bridge(&curve, 0.5 * epsilon, spec.n)?, 0.5 * epsilon),
        BridgeVariant::FlattenedWedge => {
            return Err(Error::InvalidInput("flattened wedges are part of every pair, not a strip variant".into()))
        }
    };
    let theta_end = curve.theta(length);
    let rotation = plane_rotation(&e, &nu1, theta_end + std::f64::consts::PI);
    let vertex = curve.point(length) + 2.0 * curve.tangent(length);
    let second = PlacedCone { spec: spec.clone(), rotation, vertex };
    let bridge = BridgePiece { variant, curve, radius, strip, ends: [(0, s.to_vec()), (1, s.to_vec())] };
    assemble_approximate_solution(vec![PlacedCone::identity(spec.clone()), second], vec![bridge], epsilon)
}
