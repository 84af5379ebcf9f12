//! Boundary data Ψ_λ = Σ λ_k η_k on a cone's outer link, masked away from
//! the bridge attachments and extended radially by a cutoff.

use nalgebra::{DMatrix, DVector};

use super::DiscreteSurface;
use crate::bridges::cutoff;
use crate::error::{Error, Result};
use crate::geometry::grid::NormalSectionField;
use crate::spectrum::{LinkMesh, SpectrumResult};

#[derive(Debug, Clone)]
pub struct BoundaryFamily {
    pub epsilon: f64,
    pub p: f64,
    pub delta0: f64,
    pub attachments: Vec<DVector<f64>>,
    pub points: Vec<DVector<f64>>,
    pub normals: Vec<Vec<DVector<f64>>>,
    /// η_1..η_K as stacked coefficients against `normals`.
    pub modes: Vec<Vec<f64>>,
    /// false on link nodes within 5δ₀ of an attachment.
    pub support: Vec<bool>,
}

/// Builds the K-parameter family from the lowest K computed eigensections.
/// λ ranges over [−ε^p, ε^p]^K.
pub fn boundary_family(
    mesh: &LinkMesh,
    spectrum: &SpectrumResult,
    k: usize,
    p: f64,
    epsilon: f64,
    attachments: &[DVector<f64>],
    delta0: f64,
) -> Result<BoundaryFamily> {
    if k > spectrum.eigensections.len() {
        return Err(Error::InvalidInput(format!("{k} modes requested, {} computed", spectrum.eigensections.len())));
    }
    if !(epsilon > 0.0 && delta0 > 0.0) {
        return Err(Error::InvalidInput("epsilon and delta0 must be positive".into()));
    }
    let support: Vec<bool> = mesh.points.iter().map(|w| attachments.iter().all(|q| (w - q).norm() >= 5.0 * delta0)).collect();
    if !support.iter().any(|s| *s) {
        return Err(Error::MaskEmpty);
    }
    Ok(BoundaryFamily {
        epsilon,
        p,
        delta0,
        attachments: attachments.to_vec(),
        points: mesh.points.clone(),
        normals: mesh.normals.clone(),
        modes: spectrum.eigensections[..k].to_vec(),
        support,
    })
}

impl BoundaryFamily {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    fn components(&self) -> usize {
        self.normals.first().map_or(0, |v| v.len())
    }

    /// Half-width ε^p of the parameter box Ω_ε.
    pub fn bound(&self) -> f64 {
        self.epsilon.powf(self.p)
    }

    /// φ(r): 0 for r ≤ 3/4, 1 at r = 1.
    pub fn radial_profile(r: f64) -> f64 {
        cutoff(1.0 + 4.0 * (1.0 - r))
    }

    /// Coefficients of Ψ_λ at a link node.
    pub fn coefficients(&self, lambda: &[f64], node: usize) -> Vec<f64> {
        let c = self.components();
        let mut out = vec![0.0; c];
        if !self.support[node] {
            return out;
        }
        for (l, eta) in lambda.iter().zip(&self.modes) {
            for a in 0..c {
                out[a] += l * eta[node * c + a];
            }
        }
        out
    }

    /// Ψ_λ at a link node as an ambient vector.
    pub fn ambient(&self, lambda: &[f64], node: usize) -> DVector<f64> {
        let mut v = DVector::zeros(self.points[node].len());
        for (c, n) in self.coefficients(lambda, node).iter().zip(&self.normals[node]) {
            v.axpy(*c, n, 1.0);
        }
        v
    }

    /// Link node closest to a unit vector.
    pub fn nearest(&self, w: &DVector<f64>) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (i, p) in self.points.iter().enumerate() {
            let d = (p - w).norm_squared();
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    pub fn c0_norm(&self, lambda: &[f64]) -> f64 {
        (0..self.points.len()).map(|i| self.ambient(lambda, i).norm()).fold(0.0, f64::max)
    }

    /// max_k ‖η_k‖_{C⁰} on the support: the bound on ∂Ψ/∂λ_k, and
    /// ‖Ψ_λ‖_{C⁰} ≤ K·this·max|λ_k|.
    pub fn mode_bound(&self) -> f64 {
        let k = self.len();
        (0..k)
            .map(|j| {
                let mut e = vec![0.0; k];
                e[j] = 1.0;
                self.c0_norm(&e)
            })
            .fold(0.0, f64::max)
    }

    /// Ψ̂_λ = φ(r)Ψ_λ(ω) sampled at the active nodes of a surface lying on
    /// the cone x ↦ vertex + R x. Nodes at the vertex get 0.
    pub fn section_on(&self, surface: &DiscreteSurface, vertex: &DVector<f64>, rotation: &DMatrix<f64>, lambda: &[f64]) -> NormalSectionField {
        surface.section_from_ambient(|_, p| {
            let d = rotation.transpose() * (p - vertex);
            let r = d.norm();
            if r < 1e-12 {
                return DVector::zeros(p.len());
            }
            let node = self.nearest(&(d / r));
            rotation * self.ambient(lambda, node) * Self::radial_profile(r)
        })
    }
}
