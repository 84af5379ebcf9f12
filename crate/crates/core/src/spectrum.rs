//! Link Jacobi operator L_Σ = Δ_Σ + Ã_Σ on products of round spheres.
//!
//! Discretisation: cell-centred finite volumes on the hyperspherical angle
//! grid. The metric is diagonal and separable, so cell volumes are computed
//! exactly and face transmissibilities from face-center values. The pole
//! faces carry no flux; the last angle of each factor is periodic.
//!
//! Eigenpairs use the convention L_Σ η + μ η = 0 and are computed for the
//! symmetrised matrix V^{-1/2}(K − V·Ã)V^{-1/2} by block inverse iteration
//! with Rayleigh–Ritz. Each eigensection is normalised in L²(Σ) and signed
//! so that its largest-magnitude node value (first in node order) is
//! positive.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cones::links::{sphere_coords, ProductSphereLink};
use crate::cones::{link_geometry, ConeSpec, LinkKind};
use crate::error::{Error, Result};
use crate::geometry::ad::SmoothMap;
use crate::linalg::{cg, CsrMatrix};
use crate::quadrature::gauss_interval;

/// One round sphere factor of the link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
struct Factor {
    k: usize,
    radius: f64,
    /// first angle index of this factor
    offset: usize,
}

/// Sampled link with finite-volume operator data.
#[derive(Debug, Clone)]
pub struct LinkMesh {
    pub kind: LinkKind,
    /// Dimension of the cone (link dimension + 1).
    pub n: usize,
    pub resolution: usize,
    pub counts: Vec<usize>,
    pub periodic: Vec<bool>,
    /// Cell-center angles per node.
    pub nodes: Vec<Vec<f64>>,
    /// Link points in the ambient space.
    pub points: Vec<DVector<f64>>,
    /// Exact cell areas.
    pub weights: Vec<f64>,
    pub a_norm_sq: Vec<f64>,
    /// Normal frame of Σ inside the sphere per node.
    pub normals: Vec<Vec<DVector<f64>>>,
    /// Simons matrices per node, in the node's frame.
    pub simons: Vec<DMatrix<f64>>,
    pub components: usize,
    /// Finite-volume stiffness matrix K (scalar, acts on each component).
    pub stiffness: CsrMatrix,
    pub exact_area: f64,
}

fn factors_of(kind: LinkKind) -> Result<Vec<Factor>> {
    match kind {
        LinkKind::Equatorial { k } => Ok(vec![Factor { k, radius: 1.0, offset: 0 }]),
        LinkKind::ProductSpheres { p, q } => {
            let (a, b) = ProductSphereLink { p, q }.radii();
            Ok(vec![Factor { k: p, radius: a, offset: 0 }, Factor { k: q, radius: b, offset: p }])
        }
        other => Err(Error::UnsupportedLinkTopology(format!("{other:?}"))),
    }
}

fn sphere_area(k: usize, r: f64) -> f64 {
    // |S^k| = 2π^{(k+1)/2}/Γ((k+1)/2)
    let half = (k + 1) as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(half) / gamma(half) * r.powi(k as i32)
}

fn gamma(x: f64) -> f64 {
    // half-integers and integers only
    if (x - x.round()).abs() < 1e-12 {
        (1..x.round() as u64).map(|v| v as f64).product()
    } else {
        let mut g = std::f64::consts::PI.sqrt();
        let mut t = 0.5;
        while t < x - 1e-12 {
            g *= t;
            t += 1.0;
        }
        g
    }
}

impl LinkMesh {
    /// Which factor and position (1-based) an angle belongs to.
    fn locate(factors: &[Factor], a: usize) -> (Factor, usize) {
        for f in factors {
            if a >= f.offset && a < f.offset + f.k {
                return (*f, a - f.offset + 1);
            }
        }
        unreachable!()
    }

    /// Volume density factor of angle `a` at value `s`.
    fn density(factors: &[Factor], a: usize, s: f64) -> f64 {
        let (f, j) = Self::locate(factors, a);
        s.sin().powi((f.k - j) as i32)
    }

    /// Inverse-metric factor for axis `a` contributed by angle `b`.
    fn inverse_metric_factor(factors: &[Factor], a: usize, b: usize, s: f64) -> f64 {
        let (fa, ja) = Self::locate(factors, a);
        let (fb, jb) = Self::locate(factors, b);
        if fa.offset == fb.offset && jb < ja {
            1.0 / (s.sin() * s.sin())
        } else {
            1.0
        }
    }
}

/// Builds the mesh with `resolution` cells per polar angle and twice that
/// per periodic angle.
pub fn build_link_mesh(spec: &ConeSpec, resolution: usize) -> Result<LinkMesh> {
    let factors = factors_of(spec.kind)?;
    if resolution < 2 {
        return Err(Error::InvalidInput("resolution must be at least 2".into()));
    }
    let d: usize = factors.iter().map(|f| f.k).sum();
    let mut counts = vec![0; d];
    let mut periodic = vec![false; d];
    let lower = vec![0.0; d];
    let mut upper = vec![0.0; d];
    for f in &factors {
        for j in 1..=f.k {
            let a = f.offset + j - 1;
            if j == f.k {
                periodic[a] = true;
                counts[a] = 2 * resolution;
                upper[a] = 2.0 * std::f64::consts::PI;
            } else {
                counts[a] = resolution;
                upper[a] = std::f64::consts::PI;
            }
        }
    }
    let h: Vec<f64> = (0..d).map(|a| (upper[a] - lower[a]) / counts[a] as f64).collect();
    let total: usize = counts.iter().product();
    let radius_factor: f64 = factors.iter().map(|f| f.radius.powi(f.k as i32)).product();
    // exact 1D density integrals per axis and cell
    let dens_int: Vec<Vec<f64>> = (0..d)
        .map(|a| {
            (0..counts[a])
                .map(|i| {
                    let (s0, s1) = (lower[a] + i as f64 * h[a], lower[a] + (i + 1) as f64 * h[a]);
                    gauss_interval(12, s0, s1).iter().map(|(s, w)| w * LinkMesh::density(&factors, a, *s)).sum()
                })
                .collect()
        })
        .collect();
    let multi = |idx: usize| -> Vec<usize> {
        let mut rem = idx;
        let mut mi = vec![0; d];
        for a in (0..d).rev() {
            mi[a] = rem % counts[a];
            rem /= counts[a];
        }
        mi
    };
    let index = |mi: &[usize]| -> usize { mi.iter().zip(&counts).fold(0, |acc, (i, c)| acc * c + i) };
    let center = |mi: &[usize]| -> Vec<f64> { (0..d).map(|a| lower[a] + (mi[a] as f64 + 0.5) * h[a]).collect() };

    let kind = spec.kind;
    let ambient = spec.ambient_dim();
    let per_node: Vec<(Vec<f64>, DVector<f64>, f64, f64, Vec<DVector<f64>>)> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let mi = multi(idx);
            let s = center(&mi);
            let vol = radius_factor * (0..d).map(|a| dens_int[a][mi[a]]).product::<f64>();
            let point = DVector::from_vec(link_point(kind, &s, ambient));
            let (a2, normals) = match kind {
                LinkKind::ProductSpheres { p, q } => {
                    let a2 = link_geometry(spec.link.as_ref(), &s).map(|g| g.a_norm_sq).unwrap_or(f64::NAN);
                    (a2, vec![ProductSphereLink { p, q }.sphere_normal(&s)])
                }
                LinkKind::Equatorial { k } => {
                    (0.0, ((k + 1)..ambient).map(|e| DVector::from_fn(ambient, |i, _| if i == e { 1.0 } else { 0.0 })).collect())
                }
                _ => unreachable!(),
            };
            (s, point, vol, a2, normals)
        })
        .collect();
    if per_node.iter().any(|p| !p.3.is_finite()) {
        return Err(Error::DegenerateLink("link geometry failed at a cell center".into()));
    }
    // transmissibilities
    let trip: Vec<(usize, usize, f64)> = (0..total)
        .into_par_iter()
        .flat_map_iter(|idx| {
            let mi = multi(idx);
            let s = center(&mi);
            let mut out = Vec::new();
            for a in 0..d {
                if !periodic[a] && mi[a] + 1 == counts[a] {
                    continue;
                }
                let mut nb = mi.clone();
                nb[a] = (mi[a] + 1) % counts[a];
                let j = index(&nb);
                if j == idx {
                    continue;
                }
                let face = lower[a] + (mi[a] + 1) as f64 * h[a];
                let mut t = radius_factor;
                let (fa, _) = LinkMesh::locate(&factors, a);
                t /= fa.radius * fa.radius;
                for b in 0..d {
                    let sb = if b == a { face } else { s[b] };
                    t *= LinkMesh::density(&factors, b, sb) * LinkMesh::inverse_metric_factor(&factors, a, b, sb);
                    if b != a {
                        t *= h[b];
                    }
                }
                t /= h[a];
                out.push((idx, j, -t));
                out.push((j, idx, -t));
                out.push((idx, idx, t));
                out.push((j, j, t));
            }
            out
        })
        .collect();
    let stiffness = CsrMatrix::from_triplets(total, total, trip);
    let components = per_node[0].4.len();
    let simons = per_node
        .iter()
        .map(|p| if components == 1 { DMatrix::from_element(1, 1, p.3) } else { DMatrix::zeros(components, components) })
        .collect();
    let exact_area: f64 = factors.iter().map(|f| sphere_area(f.k, f.radius)).product();
    let mut nodes = Vec::with_capacity(total);
    let mut points = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    let mut a_norm_sq = Vec::with_capacity(total);
    let mut normals = Vec::with_capacity(total);
    for (s, p, v, a2, nr) in per_node {
        nodes.push(s);
        points.push(p);
        weights.push(v);
        a_norm_sq.push(a2);
        normals.push(nr);
    }
    Ok(LinkMesh {
        kind,
        n: d + 1,
        resolution,
        counts,
        periodic,
        nodes,
        points,
        weights,
        a_norm_sq,
        normals,
        simons,
        components,
        stiffness,
        exact_area,
    })
}

fn link_point(kind: LinkKind, s: &[f64], ambient: usize) -> Vec<f64> {
    match kind {
        LinkKind::ProductSpheres { p, q } => ProductSphereLink { p, q }.map(s),
        LinkKind::Equatorial { .. } => {
            let mut v = sphere_coords(s, 1.0);
            v.resize(ambient, 0.0);
            v
        }
        _ => unreachable!(),
    }
}

impl LinkMesh {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Symmetrised operator V^{-1/2}(K − V Ã)V^{-1/2} on stacked components.
    pub fn symmetric_operator(&self) -> CsrMatrix {
        let k = self.components;
        let sq: Vec<f64> = self.weights.iter().map(|v| v.sqrt()).collect();
        let mut trip = Vec::with_capacity(self.stiffness.nnz() * k + self.len() * k * k);
        for r in 0..self.len() {
            for (c, v) in self.stiffness.row(r) {
                let val = v / (sq[r] * sq[c]);
                for a in 0..k {
                    trip.push((r * k + a, c * k + a, val));
                }
            }
            for a in 0..k {
                for b in 0..k {
                    let s = self.simons[r][(a, b)];
                    if s != 0.0 {
                        trip.push((r * k + a, r * k + b, -s));
                    }
                }
            }
        }
        CsrMatrix::from_triplets(self.len() * k, self.len() * k, trip)
    }

    /// −L_Σ u = V^{-1}(K u) − Ã u for a stacked node field.
    pub fn apply_negative_operator(&self, u: &[f64]) -> Vec<f64> {
        let k = self.components;
        let mut out = vec![0.0; u.len()];
        for r in 0..self.len() {
            for a in 0..k {
                let mut s = 0.0;
                for (c, v) in self.stiffness.row(r) {
                    s += v * u[c * k + a];
                }
                out[r * k + a] = s / self.weights[r];
                for b in 0..k {
                    out[r * k + a] -= self.simons[r][(a, b)] * u[r * k + b];
                }
            }
        }
        out
    }

    /// L²(Σ) inner product of stacked node fields.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        let k = self.components;
        (0..self.len()).map(|r| self.weights[r] * (0..k).map(|a| u[r * k + a] * v[r * k + a]).sum::<f64>()).sum()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumResult {
    pub n: usize,
    pub resolution: usize,
    pub mu: Vec<f64>,
    #[serde(skip)]
    pub eigensections: Vec<Vec<f64>>,
    pub d0: f64,
    pub iterations: usize,
}

impl SpectrumResult {
    pub fn strictly_stable(&self) -> bool {
        self.d0 > 0.0
    }
}

/// d₀ = (n−2)²/4 + μ₁.
pub fn d0_from(n: usize, mu1: f64) -> f64 {
    let a = n as f64 - 2.0;
    a * a / 4.0 + mu1
}

/// The `j` smallest eigenvalues of −L_Σ with L²-orthonormal eigensections.
pub fn lowest_eigenvalues(mesh: &LinkMesh, j: usize, seed: u64) -> Result<SpectrumResult> {
    let size = mesh.len() * mesh.components;
    if j == 0 || j > size {
        return Err(Error::InvalidInput(format!("cannot compute {j} modes on {size} unknowns")));
    }
    let s = mesh.symmetric_operator();
    let smax = mesh.simons.iter().map(|m| m.norm()).fold(0.0, f64::max);
    let shift = smax + 1.0;
    let shifted = s.shifted(shift);
    let block = (j + j.div_ceil(2).max(3)).min(size);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DMatrix::from_fn(size, block, |_, _| rng.gen_range(-1.0..1.0));
    x = orthonormal_columns(&x);
    let mut theta = vec![0.0; block];
    let tol = 1e-9;
    for it in 0..400 {
        let cols: Vec<Vec<f64>> = (0..block)
            .into_par_iter()
            .map(|c| {
                let b: Vec<f64> = x.column(c).iter().copied().collect();
                let (y, _) = cg(&shifted, &b, Some(&b), 1e-12, 20 * size.max(100));
                y
            })
            .collect();
        let y = DMatrix::from_fn(size, block, |r, c| cols[c][r]);
        let q = orthonormal_columns(&y);
        let sq: Vec<Vec<f64>> = (0..block).map(|c| s.mul_vec(q.column(c).as_slice())).collect();
        let sqm = DMatrix::from_fn(size, block, |r, c| sq[c][r]);
        let h = q.transpose() * &sqm;
        let h = (&h + h.transpose()) * 0.5;
        let eig = h.symmetric_eigen();
        let mut order: Vec<usize> = (0..block).collect();
        order.sort_by(|a, b| eig.eigenvalues[*a].partial_cmp(&eig.eigenvalues[*b]).unwrap());
        let vecs = DMatrix::from_fn(block, block, |r, c| eig.eigenvectors[(r, order[c])]);
        theta = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        x = &q * &vecs;
        let sx = &sqm * &vecs;
        let converged = (0..j).all(|c| {
            let res = (sx.column(c) - x.column(c) * theta[c]).norm();
            res <= tol * theta[c].abs().max(1.0)
        });
        if converged {
            return Ok(finish(mesh, &x, &theta, j, it + 1));
        }
    }
    let worst = theta.get(j - 1).copied().unwrap_or(f64::NAN);
    Err(Error::NoConvergence { iterations: 400, residual: worst })
}

fn finish(mesh: &LinkMesh, x: &DMatrix<f64>, theta: &[f64], j: usize, iterations: usize) -> SpectrumResult {
    let k = mesh.components;
    let eigensections = (0..j)
        .map(|c| {
            let mut u: Vec<f64> = (0..x.nrows()).map(|r| x[(r, c)] / mesh.weights[r / k].sqrt()).collect();
            let mut best = 0usize;
            for (i, v) in u.iter().enumerate() {
                if v.abs() > u[best].abs() * (1.0 + 1e-9) {
                    best = i;
                }
            }
            if u[best] < 0.0 {
                u.iter_mut().for_each(|v| *v = -*v);
            }
            u
        })
        .collect();
    let mu: Vec<f64> = theta[..j].to_vec();
    SpectrumResult { n: mesh.n, resolution: mesh.resolution, d0: d0_from(mesh.n, mu[0]), mu, eigensections, iterations }
}

fn orthonormal_columns(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut q = m.clone();
    for c in 0..q.ncols() {
        for _ in 0..2 {
            for p in 0..c {
                let d = q.column(p).dot(&q.column(c));
                let col_p = q.column(p).clone_owned();
                q.column_mut(c).axpy(-d, &col_p, 1.0);
            }
        }
        let nrm = q.column(c).norm();
        if nrm > 0.0 {
            q.column_mut(c).scale_mut(1.0 / nrm);
        }
    }
    q
}

/// Spectrum at two resolutions with a Richardson extrapolation of μ₁.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub cone: String,
    pub n: usize,
    pub resolution: Vec<usize>,
    pub mu: Vec<f64>,
    pub mu1_coarse: f64,
    pub mu1_fine: f64,
    pub mu1_extrapolated: f64,
    pub error_bar: f64,
    pub d0: f64,
    pub strictly_stable: bool,
}

/// Default base resolution keeping the fine mesh near 10⁴–10⁵ cells.
pub fn default_resolution(kind: LinkKind) -> usize {
    match kind {
        LinkKind::ProductSpheres { p, q } => match p + q {
            0..=2 => 8,
            3 => 6,
            4 => 4,
            5 => 3,
            _ => 2,
        },
        LinkKind::Equatorial { k } => match k {
            1 => 16,
            2 => 8,
            _ => 4,
        },
        _ => 2,
    }
}

/// d₀ with μ₁ extrapolated from resolutions `res` and `2·res` (second order).
pub fn stability_index(spec: &ConeSpec, res: usize, j: usize, seed: u64) -> Result<StabilityReport> {
    let coarse = lowest_eigenvalues(&build_link_mesh(spec, res)?, j, seed)?;
    let fine = lowest_eigenvalues(&build_link_mesh(spec, 2 * res)?, j, seed)?;
    let (mc, mf) = (coarse.mu[0], fine.mu[0]);
    let ext = mf + (mf - mc) / 3.0;
    let err = ((mf - mc) / 3.0).abs();
    let d0 = d0_from(spec.n, ext);
    Ok(StabilityReport {
        cone: format!("{:?}", spec.kind),
        n: spec.n,
        resolution: vec![res, 2 * res],
        mu: fine.mu.clone(),
        mu1_coarse: mc,
        mu1_fine: mf,
        mu1_extrapolated: ext,
        error_bar: err,
        d0,
        strictly_stable: d0 > 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn areas_match_closed_forms() {
        let m = build_link_mesh(&ConeSpec::clifford(), 8).unwrap();
        let area = 2.0 * std::f64::consts::PI * std::f64::consts::PI;
        assert!((m.total_weight() / area - 1.0).abs() < 1e-2);
        assert!((m.exact_area - area).abs() < 1e-12);
        let s2 = build_link_mesh(&ConeSpec::equatorial(2, 4), 8).unwrap();
        assert!((s2.total_weight() / (4.0 * std::f64::consts::PI) - 1.0).abs() < 1e-2);
        let s3 = sphere_area(3, 1.0);
        assert!((s3 - 2.0 * std::f64::consts::PI.powi(2)).abs() < 1e-12);
    }

    #[test]
    fn second_order_quadrature_of_smooth_integrand() {
        // cell volumes are exact, so convergence is measured on ∫ x₀²
        // (= |S²|/3 on the unit sphere) evaluated at cell centers
        let spec = ConeSpec::equatorial(2, 4);
        let exact = 4.0 * std::f64::consts::PI / 3.0;
        let err = |res: usize| {
            let m = build_link_mesh(&spec, res).unwrap();
            (m.points.iter().zip(&m.weights).map(|(p, w)| w * p[0] * p[0]).sum::<f64>() - exact).abs()
        };
        let (e1, e2) = (err(8), err(16));
        assert!(e1 / e2 >= 3.0, "{e1} {e2}");
    }

    #[test]
    fn laplacian_annihilates_constants_and_is_symmetric() {
        let m = build_link_mesh(&ConeSpec::product_spheres(1, 2), 4).unwrap();
        let ones = vec![1.0; m.len()];
        let k1 = m.stiffness.mul_vec(&ones);
        assert!(k1.iter().all(|v| v.abs() < 1e-9));
        assert!(m.symmetric_operator().asymmetry() < 1e-12);
        // ⟨Lu, v⟩ = ⟨u, Lv⟩ in the weighted inner product
        let u: Vec<f64> = m.points.iter().map(|p| p[0] * p[1] + p[2]).collect();
        let v: Vec<f64> = m.points.iter().map(|p| (p[3]).exp()).collect();
        let a = m.inner(&m.apply_negative_operator(&u), &v);
        let b = m.inner(&u, &m.apply_negative_operator(&v));
        assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
    }

    #[test]
    fn flat_link_has_zero_ground_state() {
        let m = build_link_mesh(&ConeSpec::equatorial(2, 4), 8).unwrap();
        let r = lowest_eigenvalues(&m, 4, 1).unwrap();
        assert!(r.mu[0].abs() < 1e-9);
        // first nonzero eigenvalue of S² is 2 with multiplicity 3
        for mu in &r.mu[1..4] {
            assert!((mu - 2.0).abs() < 0.1, "{:?}", r.mu);
        }
        assert!((r.d0 - 0.25).abs() < 1e-9);
    }

    #[test]
    fn clifford_spectrum_and_orthonormality() {
        let m = build_link_mesh(&ConeSpec::clifford(), 8).unwrap();
        let r = lowest_eigenvalues(&m, 5, 3).unwrap();
        assert!((r.mu[0] + 2.0).abs() < 1e-9);
        for mu in &r.mu[1..5] {
            assert!(mu.abs() < 0.05, "{:?}", r.mu);
        }
        for a in 0..5 {
            for b in 0..5 {
                let ip = m.inner(&r.eigensections[a], &r.eigensections[b]);
                assert!((ip - if a == b { 1.0 } else { 0.0 }).abs() < 1e-6);
            }
            let lu = m.apply_negative_operator(&r.eigensections[a]);
            let rq = m.inner(&lu, &r.eigensections[a]);
            assert!((rq - r.mu[a]).abs() < 1e-6);
        }
    }

    #[test]
    fn unsupported_topology() {
        assert!(matches!(build_link_mesh(&ConeSpec::lawson_osserman(), 4), Err(Error::UnsupportedLinkTopology(_))));
    }

    #[test]
    fn monotone_refinement_on_excited_mode() {
        let spec = ConeSpec::equatorial(2, 4);
        let mu2 = |res: usize| lowest_eigenvalues(&build_link_mesh(&spec, res).unwrap(), 2, 0).unwrap().mu[1];
        let (a, b, c) = (mu2(4), mu2(8), mu2(16));
        assert!((b - c).abs() < (a - b).abs());
        assert!((c - 2.0).abs() < (b - 2.0).abs());
    }
}
