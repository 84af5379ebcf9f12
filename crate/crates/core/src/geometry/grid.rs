//! Tensor grids on parameter boxes, normal sections over them, and the
//! discrete stability operator.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::{tangent_reject, ImmersionPatch};
use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NodeKind {
    Interior,
    Boundary,
    Outside,
}

/// Regular grid on a parameter box with optional periodic axes and an
/// optional mask. Nodes whose full stencil lies in the mask are interior;
/// the remaining masked nodes carry Dirichlet data.
#[derive(Debug, Clone)]
pub struct GridMesh {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub counts: Vec<usize>,
    pub periodic: Vec<bool>,
    strides: Vec<usize>,
    active: Vec<bool>,
    kind: Vec<NodeKind>,
}

impl GridMesh {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, counts: Vec<usize>, periodic: Vec<bool>) -> Self {
        let n = lower.len();
        assert!(upper.len() == n && counts.len() == n && periodic.len() == n);
        let mut strides = vec![1usize; n];
        for d in (0..n.saturating_sub(1)).rev() {
            strides[d] = strides[d + 1] * counts[d + 1];
        }
        let total: usize = counts.iter().product();
        let mut m = GridMesh { lower, upper, counts, periodic, strides, active: vec![true; total], kind: vec![] };
        m.classify();
        m
    }

    /// Uniform non-periodic grid on a box.
    pub fn uniform(lower: Vec<f64>, upper: Vec<f64>, counts: Vec<usize>) -> Self {
        let n = lower.len();
        Self::new(lower, upper, counts, vec![false; n])
    }

    /// Keeps only nodes where `keep` holds.
    pub fn with_mask<F: Fn(&[f64]) -> bool>(mut self, keep: F) -> Self {
        for idx in 0..self.len() {
            self.active[idx] = keep(&self.coords(idx));
        }
        self.classify();
        self
    }

    fn classify(&mut self) {
        let n = self.dim();
        let kinds: Vec<NodeKind> = (0..self.len())
            .map(|idx| {
                if !self.active[idx] {
                    return NodeKind::Outside;
                }
                let ok = |offs: &[(usize, i64)]| self.neighbor(idx, offs).map(|j| self.active[j]).unwrap_or(false);
                for i in 0..n {
                    for s in [-1, 1] {
                        if !ok(&[(i, s)]) {
                            return NodeKind::Boundary;
                        }
                    }
                    for j in (i + 1)..n {
                        for (si, sj) in [(-1, -1), (-1, 1), (1, -1), (1, 1)] {
                            if !ok(&[(i, si), (j, sj)]) {
                                return NodeKind::Boundary;
                            }
                        }
                    }
                }
                NodeKind::Interior
            })
            .collect();
        self.kind = kinds;
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        let span = self.upper[axis] - self.lower[axis];
        if self.periodic[axis] {
            span / self.counts[axis] as f64
        } else {
            span / (self.counts[axis] - 1) as f64
        }
    }

    pub fn multi_index(&self, idx: usize) -> Vec<usize> {
        (0..self.dim()).map(|d| (idx / self.strides[d]) % self.counts[d]).collect()
    }

    pub fn index(&self, mi: &[usize]) -> usize {
        mi.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn coords(&self, idx: usize) -> Vec<f64> {
        self.multi_index(idx)
            .iter()
            .enumerate()
            .map(|(d, &i)| self.lower[d] + i as f64 * self.spacing(d))
            .collect()
    }

    /// Neighbor at integer offsets, wrapping periodic axes.
    pub fn neighbor(&self, idx: usize, offs: &[(usize, i64)]) -> Option<usize> {
        let mut mi = self.multi_index(idx);
        for &(axis, s) in offs {
            let c = self.counts[axis] as i64;
            let mut v = mi[axis] as i64 + s;
            if self.periodic[axis] {
                v = v.rem_euclid(c);
            } else if v < 0 || v >= c {
                return None;
            }
            mi[axis] = v as usize;
        }
        Some(self.index(&mi))
    }

    pub fn kind(&self, idx: usize) -> NodeKind {
        self.kind[idx]
    }

    pub fn is_active(&self, idx: usize) -> bool {
        self.active[idx]
    }

    pub fn nodes_of(&self, k: NodeKind) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.kind[i] == k).collect()
    }

    pub fn active_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.active[i]).collect()
    }

    /// Trapezoid-type cell volume attached to a node (parameter measure).
    pub fn cell_volume(&self, idx: usize) -> f64 {
        let mi = self.multi_index(idx);
        (0..self.dim())
            .map(|d| {
                let h = self.spacing(d);
                if !self.periodic[d] && (mi[d] == 0 || mi[d] + 1 == self.counts[d]) {
                    0.5 * h
                } else {
                    h
                }
            })
            .product()
    }

    /// Centered-difference stencil at an interior node: entries
    /// `(neighbor, D_i weights, D_ij weights)`.
    pub fn stencil(&self, idx: usize) -> Vec<(usize, Vec<f64>, Vec<f64>)> {
        let n = self.dim();
        let mut out: Vec<(usize, Vec<f64>, Vec<f64>)> = Vec::with_capacity(1 + 2 * n * n);
        let mut add = |nb: usize, d1: Option<(usize, f64)>, d2: Option<(usize, usize, f64)>| {
            let pos = match out.iter().position(|e| e.0 == nb) {
                Some(p) => p,
                None => {
                    out.push((nb, vec![0.0; n], vec![0.0; n * n]));
                    out.len() - 1
                }
            };
            if let Some((i, w)) = d1 {
                out[pos].1[i] += w;
            }
            if let Some((i, j, w)) = d2 {
                out[pos].2[i * n + j] += w;
            }
        };
        for i in 0..n {
            let h = self.spacing(i);
            add(idx, None, Some((i, i, -2.0 / (h * h))));
            for s in [-1i64, 1] {
                let nb = self.neighbor(idx, &[(i, s)]).expect("interior stencil");
                add(nb, Some((i, s as f64 / (2.0 * h))), Some((i, i, 1.0 / (h * h))));
            }
            for j in (i + 1)..n {
                let hj = self.spacing(j);
                for (si, sj) in [(-1i64, -1i64), (-1, 1), (1, -1), (1, 1)] {
                    let nb = self.neighbor(idx, &[(i, si), (j, sj)]).expect("interior stencil");
                    let w = (si * sj) as f64 / (4.0 * h * hj);
                    add(nb, None, Some((i, j, w)));
                    add(nb, None, Some((j, i, w)));
                }
            }
        }
        out
    }
}

/// Normal section stored as coefficients u^α against each node's frame.
/// Non-finite values mark missing data.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalSectionField {
    pub components: usize,
    pub values: Vec<f64>,
}

impl NormalSectionField {
    pub fn zeros(nodes: usize, components: usize) -> Self {
        NormalSectionField { components, values: vec![0.0; nodes * components] }
    }

    pub fn from_fn<F: Fn(usize) -> Vec<f64>>(nodes: usize, components: usize, f: F) -> Self {
        let mut s = Self::zeros(nodes, components);
        for i in 0..nodes {
            s.set(i, &f(i));
        }
        s
    }

    pub fn nodes(&self) -> usize {
        self.values.len() / self.components
    }

    pub fn get(&self, node: usize) -> &[f64] {
        &self.values[node * self.components..(node + 1) * self.components]
    }

    pub fn set(&mut self, node: usize, v: &[f64]) {
        self.values[node * self.components..(node + 1) * self.components].copy_from_slice(v);
    }

    pub fn sup_norm(&self) -> f64 {
        (0..self.nodes())
            .map(|i| self.get(i).iter().map(|v| v * v).sum::<f64>().sqrt())
            .filter(|v| v.is_finite())
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, t: f64) -> Self {
        NormalSectionField { components: self.components, values: self.values.iter().map(|v| v * t).collect() }
    }

    pub fn axpy(&mut self, a: f64, other: &Self) {
        for (v, o) in self.values.iter_mut().zip(&other.values) {
            *v += a * o;
        }
    }
}

/// Cached pointwise geometry at one grid node.
#[derive(Debug, Clone)]
pub struct NodeGeometry {
    pub x: Vec<f64>,
    pub point: DVector<f64>,
    pub tangents: Vec<DVector<f64>>,
    pub second: Vec<DVector<f64>>,
    pub g_inv: DMatrix<f64>,
    pub sqrt_det_g: f64,
    /// g^{ij} Γ^k_{ij}
    pub gamma_trace: Vec<f64>,
    pub normals: Vec<DVector<f64>>,
    /// A^α_{ij} at `(α n + i) n + j`.
    pub a: Vec<f64>,
    pub norm_a_sq: f64,
    pub simons: DMatrix<f64>,
    pub h0: DVector<f64>,
    pub h0_coeffs: Vec<f64>,
    /// First-order coefficients b^{jα}_β at `(j k + α) k + β` and the
    /// zeroth-order matrix of the covariant form, when requested.
    pub covariant: Option<(Vec<f64>, DMatrix<f64>)>,
}

/// Which discretisation of L to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StencilForm {
    /// Covariant derivatives of the coefficients u^α in a fixed frame.
    Covariant,
    /// Normal projection of the ambient finite-difference Laplacian; the
    /// exact linearisation of the discrete projected mean curvature.
    Ambient,
}

/// Geometry of a patch sampled on a grid.
#[derive(Debug, Clone)]
pub struct MeshGeometry {
    pub nodes: Vec<Option<NodeGeometry>>,
    pub n: usize,
    pub k: usize,
    pub ambient: usize,
}

impl MeshGeometry {
    pub fn build(patch: &ImmersionPatch, mesh: &GridMesh, covariant: bool) -> Result<Self> {
        let n = patch.n();
        let k = patch.codim();
        let nodes: Vec<Result<Option<NodeGeometry>>> = (0..mesh.len())
            .into_par_iter()
            .map(|idx| {
                if !mesh.is_active(idx) {
                    return Ok(None);
                }
                let x = mesh.coords(idx);
                let want_cov = covariant && mesh.kind(idx) == NodeKind::Interior;
                node_geometry(patch, &x, want_cov).map(Some)
            })
            .collect();
        let nodes = nodes.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(MeshGeometry { nodes, n, k, ambient: patch.ambient_dim() })
    }

    pub fn node(&self, idx: usize) -> &NodeGeometry {
        self.nodes[idx].as_ref().expect("inactive node")
    }

    /// Ambient vector of a section at a node.
    pub fn ambient_vector(&self, idx: usize, u: &[f64]) -> DVector<f64> {
        let g = self.node(idx);
        let mut v = DVector::zeros(self.ambient);
        for (ua, na) in u.iter().zip(&g.normals) {
            v.axpy(*ua, na, 1.0);
        }
        v
    }

    /// Mean curvature coefficients H₀ as a section (zero off the mask).
    pub fn h0_field(&self) -> NormalSectionField {
        NormalSectionField::from_fn(self.nodes.len(), self.k, |i| match &self.nodes[i] {
            Some(g) => g.h0_coeffs.clone(),
            None => vec![0.0; self.k],
        })
    }

    /// Sparse matrix of L acting on stacked coefficients; rows of
    /// non-interior nodes are empty.
    pub fn assemble(&self, mesh: &GridMesh, form: StencilForm) -> CsrMatrix {
        let (n, k) = (self.n, self.k);
        let rows: Vec<Vec<(usize, usize, f64)>> = (0..mesh.len())
            .into_par_iter()
            .map(|c| {
                if mesh.kind(c) != NodeKind::Interior {
                    return Vec::new();
                }
                let gc = self.node(c);
                let mut trip = Vec::new();
                let raised: Vec<DMatrix<f64>> = (0..k)
                    .map(|al| &gc.g_inv * DMatrix::from_fn(n, n, |i, j| gc.a[(al * n + i) * n + j]) * &gc.g_inv)
                    .collect();
                for (nb, d1, d2) in mesh.stencil(c) {
                    let lap: f64 = (0..n * n).map(|ij| gc.g_inv[(ij / n, ij % n)] * d2[ij]).sum();
                    match form {
                        StencilForm::Covariant => {
                            let (b, zeroth) = gc.covariant.as_ref().expect("covariant data");
                            for al in 0..k {
                                for be in 0..k {
                                    let mut v = if al == be { lap } else { 0.0 };
                                    for j in 0..n {
                                        v += b[(j * k + al) * k + be] * d1[j];
                                    }
                                    if nb == c {
                                        v += zeroth[(al, be)];
                                    }
                                    if v != 0.0 {
                                        trip.push((c * k + al, nb * k + be, v));
                                    }
                                }
                            }
                        }
                        StencilForm::Ambient => {
                            let gn = self.node(nb);
                            let first: f64 = (0..n).map(|kk| gc.gamma_trace[kk] * d1[kk]).sum();
                            for be in 0..k {
                                let nbv = &gn.normals[be];
                                let tdot: Vec<f64> = gc.tangents.iter().map(|t| t.dot(nbv)).collect();
                                for al in 0..k {
                                    let mut v = gc.normals[al].dot(nbv) * (lap - first);
                                    let mut s = 0.0;
                                    for a in 0..n {
                                        for bb in 0..n {
                                            s += raised[al][(a, bb)] * tdot[a] * d1[bb];
                                        }
                                    }
                                    v -= 2.0 * s;
                                    if v != 0.0 {
                                        trip.push((c * k + al, nb * k + be, v));
                                    }
                                }
                            }
                        }
                    }
                }
                trip
            })
            .collect();
        let trip: Vec<(usize, usize, f64)> = rows.into_iter().flatten().collect();
        CsrMatrix::from_triplets(mesh.len() * k, mesh.len() * k, trip)
    }

    /// Discrete projected mean curvature H^⊥(U) of ψ + U at interior nodes:
    /// derivatives of ψ from its jets, derivatives of U by the grid stencil.
    pub fn projected_mean_curvature(&self, mesh: &GridMesh, u: &NormalSectionField) -> Result<NormalSectionField> {
        let (n, k) = (self.n, self.k);
        let amb: Vec<Option<DVector<f64>>> = (0..mesh.len())
            .map(|i| self.nodes[i].as_ref().map(|_| self.ambient_vector(i, u.get(i))))
            .collect();
        let out: Vec<Result<Vec<f64>>> = (0..mesh.len())
            .into_par_iter()
            .map(|c| {
                if mesh.kind(c) != NodeKind::Interior {
                    return Ok(vec![0.0; k]);
                }
                let gc = self.node(c);
                let mut phi1 = gc.tangents.clone();
                let mut phi2 = gc.second.clone();
                for (nb, d1, d2) in mesh.stencil(c) {
                    let v = amb[nb].as_ref().ok_or(Error::BoundaryDataMissing { node: nb })?;
                    for i in 0..n {
                        if d1[i] != 0.0 {
                            phi1[i].axpy(d1[i], v, 1.0);
                        }
                    }
                    for ij in 0..n * n {
                        if d2[ij] != 0.0 {
                            phi2[ij].axpy(d2[ij], v, 1.0);
                        }
                    }
                }
                let g = DMatrix::from_fn(n, n, |i, j| phi1[i].dot(&phi1[j]));
                let eig_min = g.clone().symmetric_eigen().eigenvalues.min();
                if !(eig_min > 1e-10) {
                    return Err(Error::ImmersionLost);
                }
                let gi = g.try_inverse().ok_or(Error::ImmersionLost)?;
                let mut w = DVector::zeros(self.ambient);
                for i in 0..n {
                    for j in 0..n {
                        w.axpy(gi[(i, j)], &phi2[i * n + j], 1.0);
                    }
                }
                let h = tangent_reject(&w, &phi1, &gi);
                Ok(gc.normals.iter().map(|na| na.dot(&h)).collect())
            })
            .collect();
        let mut field = NormalSectionField::zeros(mesh.len(), k);
        for (i, r) in out.into_iter().enumerate() {
            field.set(i, &r?);
        }
        Ok(field)
    }

    /// Quadrature weight (parameter cell volume times √det g) per node.
    pub fn weights(&self, mesh: &GridMesh) -> Vec<f64> {
        (0..mesh.len())
            .map(|i| match &self.nodes[i] {
                Some(g) => mesh.cell_volume(i) * g.sqrt_det_g,
                None => 0.0,
            })
            .collect()
    }

    /// L² inner product of two sections over the given nodes.
    pub fn inner(&self, mesh: &GridMesh, u: &NormalSectionField, v: &NormalSectionField, nodes: &[usize]) -> f64 {
        let w = self.weights(mesh);
        nodes
            .iter()
            .map(|&i| w[i] * u.get(i).iter().zip(v.get(i)).map(|(a, b)| a * b).sum::<f64>())
            .sum()
    }
}

fn node_geometry(patch: &ImmersionPatch, x: &[f64], covariant: bool) -> Result<NodeGeometry> {
    let pg = patch.point_geometry_static(x)?;
    let (n, k) = (pg.jet.dim(), pg.frame.codim());
    let gamma_trace = (0..n).map(|kk| pg.metric.gamma_trace(kk)).collect();
    let simons = pg.sff.simons_matrix(&pg.metric);
    let cov = if covariant {
        let (d1, d2) = patch.frame_derivatives(x);
        let nrm = &pg.frame.normals;
        // B^α_{βi} and its x^j derivative
        let bcon = |al: usize, be: usize, i: usize| d1[i][be].dot(&nrm[al]);
        let bder = |al: usize, be: usize, i: usize, j: usize| d2[i * n + j][be].dot(&nrm[al]) + d1[i][be].dot(&d1[j][al]);
        let gi = &pg.metric.g_inv;
        let mut b = vec![0.0; n * k * k];
        for j in 0..n {
            for al in 0..k {
                for be in 0..k {
                    let mut v = 0.0;
                    for i in 0..n {
                        v += 2.0 * gi[(i, j)] * bcon(al, be, i);
                    }
                    if al == be {
                        v -= pg.metric.gamma_trace(j);
                    }
                    b[(j * k + al) * k + be] = v;
                }
            }
        }
        let zeroth = DMatrix::from_fn(k, k, |al, be| {
            let mut v = simons[(al, be)];
            for i in 0..n {
                for j in 0..n {
                    let mut t = bder(al, be, i, j);
                    for s in 0..k {
                        t += bcon(s, be, j) * bcon(al, s, i);
                    }
                    for kk in 0..n {
                        t -= pg.metric.gamma(kk, i, j) * bcon(al, be, kk);
                    }
                    v += gi[(i, j)] * t;
                }
            }
            v
        });
        Some((b, zeroth))
    } else {
        None
    };
    Ok(NodeGeometry {
        x: x.to_vec(),
        point: pg.jet.value.clone(),
        tangents: pg.jet.first.clone(),
        second: pg.jet.second.clone(),
        g_inv: pg.metric.g_inv.clone(),
        sqrt_det_g: pg.metric.sqrt_det_g,
        gamma_trace,
        normals: pg.frame.normals.clone(),
        a: pg.sff.a.clone(),
        norm_a_sq: pg.sff.norm_sq,
        simons,
        h0: pg.sff.mean_curvature.clone(),
        h0_coeffs: pg.sff.h_coeffs.clone(),
        covariant: cov,
    })
}

/// Discrete L applied to a section: interior nodes get LU, all other nodes 0.
pub fn apply_stability_operator(
    patch: &ImmersionPatch,
    mesh: &GridMesh,
    u: &NormalSectionField,
    form: StencilForm,
) -> Result<NormalSectionField> {
    let geom = MeshGeometry::build(patch, mesh, form == StencilForm::Covariant)?;
    apply_with(&geom, mesh, u, form)
}

/// As [`apply_stability_operator`] with precomputed geometry.
pub fn apply_with(geom: &MeshGeometry, mesh: &GridMesh, u: &NormalSectionField, form: StencilForm) -> Result<NormalSectionField> {
    let k = geom.k;
    if u.components != k || u.nodes() != mesh.len() {
        return Err(Error::InvalidInput("section does not match mesh".into()));
    }
    for idx in mesh.active_nodes() {
        if u.get(idx).iter().any(|v| !v.is_finite()) {
            return Err(Error::BoundaryDataMissing { node: idx });
        }
    }
    let mut clean = u.values.clone();
    for (i, v) in clean.iter_mut().enumerate() {
        if !mesh.is_active(i / k) {
            *v = 0.0;
        }
    }
    let m = geom.assemble(mesh, form);
    Ok(NormalSectionField { components: k, values: m.mul_vec(&clean) })
}
