//! Perturbing an approximate solution towards minimality on a grid: normal
//! projection, the nonlinear remainder E(U), Dirichlet problems for L, the
//! boundary family Ψ_λ, the fixed-point iteration, perturbed normal frames,
//! and a direct Newton solver for minimal graphs.
//!
//! Sign convention: H₀ is the mean curvature as computed by the geometry
//! module and H^⊥(U) = H₀ + LU − E(U). Minimality of ψ + U means
//! LU = E(U) − H₀.

mod family;
mod fixed_point;
mod frame;
mod newton;

pub use family::{boundary_family, BoundaryFamily};
pub use fixed_point::{fixed_point_run, fixed_point_solve, BoundaryData, FixedPointConfig, IterationRecord, ModeControl, NormMonitors, SolverState};
pub use frame::{perturbed_normal_frame, PerturbedNormalFrame};
pub use newton::{graph_newton_solve, GraphSolution, NewtonOptions};

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::geometry::grid::{GridMesh, MeshGeometry, NodeKind, NormalSectionField, StencilForm};
use crate::geometry::ImmersionPatch;
use crate::linalg::{gmres, norm2, CsrMatrix};

/// Π_x V as coefficients against the normal frame of `patch` at `x`.
pub fn project_normal(patch: &ImmersionPatch, x: &[f64], v: &DVector<f64>) -> Result<Vec<f64>> {
    let (_, frame) = patch.geometry_at(x)?;
    Ok(frame.coefficients(v))
}

/// A patch sampled on a grid with its discrete stability operator (ambient
/// form) and H₀ = H^⊥(0).
#[derive(Debug, Clone)]
pub struct DiscreteSurface {
    pub patch: ImmersionPatch,
    pub mesh: GridMesh,
    pub geometry: MeshGeometry,
    pub operator: CsrMatrix,
    pub h0: NormalSectionField,
}

impl DiscreteSurface {
    pub fn new(patch: ImmersionPatch, mesh: GridMesh) -> Result<Self> {
        if mesh.dim() != patch.n() {
            return Err(Error::InvalidInput(format!("mesh of dimension {} on an {}-dimensional patch", mesh.dim(), patch.n())));
        }
        let geometry = MeshGeometry::build(&patch, &mesh, false)?;
        let operator = geometry.assemble(&mesh, StencilForm::Ambient);
        let zero = NormalSectionField::zeros(mesh.len(), geometry.k);
        let h0 = geometry.projected_mean_curvature(&mesh, &zero)?;
        Ok(DiscreteSurface { patch, mesh, geometry, operator, h0 })
    }

    pub fn codim(&self) -> usize {
        self.geometry.k
    }

    pub fn zeros(&self) -> NormalSectionField {
        NormalSectionField::zeros(self.mesh.len(), self.codim())
    }

    pub fn interior(&self) -> Vec<usize> {
        self.mesh.nodes_of(NodeKind::Interior)
    }

    /// Active nodes that carry Dirichlet data.
    pub fn boundary(&self) -> Vec<usize> {
        self.mesh.nodes_of(NodeKind::Boundary)
    }

    /// Π_x V at a node.
    pub fn project_normal(&self, node: usize, v: &DVector<f64>) -> Vec<f64> {
        self.geometry.node(node).normals.iter().map(|n| n.dot(v)).collect()
    }

    /// Coefficients of an ambient vector field sampled at the nodes.
    pub fn section_from_ambient<F: Fn(usize, &DVector<f64>) -> DVector<f64>>(&self, f: F) -> NormalSectionField {
        let mut s = self.zeros();
        for i in self.mesh.active_nodes() {
            let g = self.geometry.node(i);
            let v = f(i, &g.point);
            s.set(i, &self.project_normal(i, &v));
        }
        s
    }

    fn clean(&self, u: &NormalSectionField) -> Result<Vec<f64>> {
        let k = self.codim();
        if u.components != k || u.nodes() != self.mesh.len() {
            return Err(Error::InvalidInput("section does not match mesh".into()));
        }
        let mut v = u.values.clone();
        for i in 0..self.mesh.len() {
            if !self.mesh.is_active(i) {
                v[i * k..(i + 1) * k].fill(0.0);
            } else if v[i * k..(i + 1) * k].iter().any(|a| !a.is_finite()) {
                return Err(Error::BoundaryDataMissing { node: i });
            }
        }
        Ok(v)
    }

    /// LU at interior nodes, zero elsewhere.
    pub fn apply_l(&self, u: &NormalSectionField) -> Result<NormalSectionField> {
        let v = self.clean(u)?;
        Ok(NormalSectionField { components: self.codim(), values: self.operator.mul_vec(&v) })
    }

    /// H^⊥(U) at interior nodes.
    pub fn mean_curvature(&self, u: &NormalSectionField) -> Result<NormalSectionField> {
        self.clean(u)?;
        self.geometry.projected_mean_curvature(&self.mesh, u)
    }

    /// E(U) = LU + H₀ − H^⊥(U) at interior nodes.
    pub fn nonlinear_remainder(&self, u: &NormalSectionField) -> Result<NormalSectionField> {
        let mut e = self.apply_l(u)?;
        e.axpy(1.0, &self.h0);
        e.axpy(-1.0, &self.mean_curvature(u)?);
        Ok(e)
    }

    /// Solves LV = F at interior nodes with V = Ψ on boundary nodes. Only the
    /// boundary values of `psi` are read.
    pub fn solve_dirichlet(&self, f: &NormalSectionField, psi: &NormalSectionField) -> Result<NormalSectionField> {
        let k = self.codim();
        let interior = self.interior();
        let mut slot = vec![usize::MAX; self.mesh.len()];
        for (p, &i) in interior.iter().enumerate() {
            slot[i] = p;
        }
        for &b in &self.boundary() {
            if psi.get(b).iter().any(|v| !v.is_finite()) {
                return Err(Error::BoundaryDataMissing { node: b });
            }
        }
        let mut rhs = vec![0.0; interior.len() * k];
        let mut trip = Vec::with_capacity(self.operator.nnz());
        for (p, &c) in interior.iter().enumerate() {
            for al in 0..k {
                let row = c * k + al;
                rhs[p * k + al] = f.get(c)[al];
                for (col, v) in self.operator.row(row) {
                    let (nb, be) = (col / k, col % k);
                    if slot[nb] != usize::MAX {
                        trip.push((p * k + al, slot[nb] * k + be, v));
                    } else {
                        rhs[p * k + al] -= v * psi.get(nb)[be];
                    }
                }
            }
        }
        let a = CsrMatrix::from_triplets(rhs.len(), rhs.len(), trip);
        let (x, info) = gmres(&a, &rhs, None, 1e-10, 60, 6000);
        let mut out = self.zeros();
        for &b in &self.boundary() {
            out.set(b, psi.get(b));
        }
        for (p, &c) in interior.iter().enumerate() {
            out.set(c, &x[p * k..(p + 1) * k]);
        }
        // residual of the full system against F
        let lv = self.apply_l(&out)?;
        let (mut num, mut den) = (0.0f64, 0.0f64);
        for &c in &interior {
            for al in 0..k {
                num += (lv.get(c)[al] - f.get(c)[al]).powi(2);
                den += f.get(c)[al].powi(2);
            }
        }
        let scale = den.sqrt().max(norm2(&rhs)).max(1e-300);
        let residual = num.sqrt() / scale;
        if !info.converged || residual > 1e-8 {
            return Err(Error::LinearSolveFailure {
                residual,
                hint: format!(
                    "GMRES stopped after {} iterations; a near-zero eigenvalue of L on this region (lost discrete strict stability) is the usual cause",
                    info.iterations
                ),
            });
        }
        Ok(out)
    }

    /// Ambient point of ψ + U at a node.
    pub fn perturbed_point(&self, node: usize, u: &NormalSectionField) -> DVector<f64> {
        &self.geometry.node(node).point + self.geometry.ambient_vector(node, u.get(node))
    }

    /// Max over interior nodes of |F| and its weighted L² norm.
    pub fn norms(&self, f: &NormalSectionField) -> (f64, f64) {
        let w = self.geometry.weights(&self.mesh);
        let (mut sup, mut l2) = (0.0f64, 0.0);
        for c in self.interior() {
            let s: f64 = f.get(c).iter().map(|v| v * v).sum();
            sup = sup.max(s.sqrt());
            l2 += w[c] * s;
        }
        (sup, l2.sqrt())
    }

    /// Nodes as CSV: parameters, ambient point of ψ + U, coefficients.
    pub fn export_csv(&self, u: &NormalSectionField) -> String {
        let n = self.mesh.dim();
        let mut s = String::new();
        let hdr: Vec<String> = (0..n)
            .map(|i| format!("x{i}"))
            .chain((0..self.geometry.ambient).map(|i| format!("p{i}")))
            .chain((0..self.codim()).map(|a| format!("u{a}")))
            .collect();
        s.push_str(&hdr.join(","));
        s.push('\n');
        for i in self.mesh.active_nodes() {
            let p = self.perturbed_point(i, u);
            let row: Vec<String> = self
                .mesh
                .coords(i)
                .iter()
                .chain(p.iter())
                .chain(u.get(i).iter())
                .map(|v| format!("{v:e}"))
                .collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    /// OBJ mesh of ψ + U for two-dimensional grids (first three ambient
    /// coordinates).
    pub fn export_obj(&self, u: &NormalSectionField) -> Result<String> {
        if self.mesh.dim() != 2 {
            return Err(Error::InvalidInput("OBJ export needs a two-dimensional grid".into()));
        }
        let mut s = String::new();
        let mut id = vec![0usize; self.mesh.len()];
        let mut next = 1;
        for i in self.mesh.active_nodes() {
            let p = self.perturbed_point(i, u);
            let c = |j: usize| if j < p.len() { p[j] } else { 0.0 };
            s.push_str(&format!("v {} {} {}\n", c(0), c(1), c(2)));
            id[i] = next;
            next += 1;
        }
        for i in self.mesh.active_nodes() {
            let (a, b, d) = (self.mesh.neighbor(i, &[(0, 1)]), self.mesh.neighbor(i, &[(1, 1)]), self.mesh.neighbor(i, &[(0, 1), (1, 1)]));
            if let (Some(a), Some(b), Some(d)) = (a, b, d) {
                if self.mesh.is_active(a) && self.mesh.is_active(b) && self.mesh.is_active(d) {
                    s.push_str(&format!("f {} {} {} {}\n", id[i], id[a], id[d], id[b]));
                }
            }
        }
        Ok(s)
    }
}
