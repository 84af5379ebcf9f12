//! Normal frames of the perturbed immersion ψ + U: ν_α = n_α + a^{kα}ψ_{x^k}
//! with (g + S)a_α = b_α, then Gram–Schmidt to n̄_α = n_α + ξ_α.

use nalgebra::{DMatrix, DVector};

use super::DiscreteSurface;
use crate::error::{Error, Result};
use crate::geometry::grid::NormalSectionField;
use crate::linalg::orthogonalize;

const MAX_CONDITION: f64 = 1e8;

#[derive(Debug, Clone)]
pub struct PerturbedNormalFrame {
    /// Interior nodes the frame was computed at.
    pub nodes: Vec<usize>,
    /// Tangents (ψ + U)_{x^i} per node.
    pub tangents: Vec<Vec<DVector<f64>>>,
    /// a_α per node.
    pub coefficients: Vec<Vec<DVector<f64>>>,
    /// n̄_α per node.
    pub frames: Vec<Vec<DVector<f64>>>,
    /// ξ_α = n̄_α − n_α per node.
    pub xi: Vec<Vec<DVector<f64>>>,
    /// |∇U| = (g^{ij} U_{x^i}·U_{x^j})^{1/2} per node.
    pub grad_u: Vec<f64>,
}

impl PerturbedNormalFrame {
    /// max |n̄_α·n̄_β − δ_αβ|.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for f in &self.frames {
            for (a, na) in f.iter().enumerate() {
                for (b, nb) in f.iter().enumerate() {
                    let d = na.dot(nb) - if a == b { 1.0 } else { 0.0 };
                    worst = worst.max(d.abs());
                }
            }
        }
        worst
    }

    /// max |n̄_α·(ψ + U)_{x^i}| / |(ψ + U)_{x^i}|.
    pub fn normality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (f, t) in self.frames.iter().zip(&self.tangents) {
            for na in f {
                for ti in t {
                    worst = worst.max(na.dot(ti).abs() / ti.norm());
                }
            }
        }
        worst
    }

    pub fn max_xi(&self) -> f64 {
        self.xi.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// max_α ‖ξ_α‖ over max ‖∇U‖.
    pub fn xi_ratio(&self) -> f64 {
        let g = self.grad_u.iter().copied().fold(0.0, f64::max);
        if g == 0.0 {
            0.0
        } else {
            self.max_xi() / g
        }
    }
}

/// Computes n̄ at every interior node of the surface.
pub fn perturbed_normal_frame(s: &DiscreteSurface, u: &NormalSectionField) -> Result<PerturbedNormalFrame> {
    let n = s.mesh.dim();
    let nodes = s.interior();
    let mut out = PerturbedNormalFrame { nodes: nodes.clone(), tangents: vec![], coefficients: vec![], frames: vec![], xi: vec![], grad_u: vec![] };
    for &c in &nodes {
        let g = s.geometry.node(c);
        let mut du = vec![DVector::zeros(s.geometry.ambient); n];
        for (nb, d1, _) in s.mesh.stencil(c) {
            let v = s.geometry.ambient_vector(nb, u.get(nb));
            for i in 0..n {
                if d1[i] != 0.0 {
                    du[i].axpy(d1[i], &v, 1.0);
                }
            }
        }
        let phi: Vec<DVector<f64>> = g.tangents.iter().zip(&du).map(|(t, d)| t + d).collect();
        let b = DMatrix::from_fn(n, n, |i, k| g.tangents[k].dot(&phi[i]));
        let sv = b.clone().svd(false, false).singular_values;
        let condition = sv.max() / sv.min().max(1e-300);
        if !(condition < MAX_CONDITION) {
            return Err(Error::FrameDegenerate { condition });
        }
        let lu = b.lu();
        let mut coefs = Vec::new();
        let mut nu = Vec::new();
        for na in &g.normals {
            let rhs = DVector::from_fn(n, |i, _| -na.dot(&du[i]));
            let a = lu.solve(&rhs).ok_or(Error::FrameDegenerate { condition })?;
            let mut v = na.clone();
            for k in 0..n {
                v.axpy(a[k], &g.tangents[k], 1.0);
            }
            coefs.push(a);
            nu.push(v);
        }
        let mut frame: Vec<DVector<f64>> = Vec::new();
        for v in nu {
            let mut w = v;
            orthogonalize(&mut w, &frame);
            frame.push(w);
        }
        let xi = frame.iter().zip(&g.normals).map(|(a, b)| a - b).collect();
        let mut gu = 0.0;
        for i in 0..n {
            for j in 0..n {
                gu += g.g_inv[(i, j)] * du[i].dot(&du[j]);
            }
        }
        out.grad_u.push(gu.max(0.0).sqrt());
        out.tangents.push(phi);
        out.coefficients.push(coefs);
        out.frames.push(frame);
        out.xi.push(xi);
    }
    Ok(out)
}
