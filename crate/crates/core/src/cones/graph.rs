//! Graphical cones and the minimal surface system residual.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::links::LawsonOssermanMap;
use super::{cone_patch, ConeSpec};
use crate::error::{Error, Result};
use crate::geometry::ad::AdGraph;
use crate::geometry::charts::GraphFunction;
use crate::geometry::ImmersionPatch;

/// Graph of a positively 1-homogeneous map about a singular point.
#[derive(Clone)]
pub struct GraphCone {
    pub u: Arc<dyn GraphFunction>,
    pub singular_point: Vec<f64>,
}

impl GraphCone {
    pub fn dim(&self) -> usize {
        self.u.dim()
    }

    pub fn value(&self, x: &[f64]) -> Vec<f64> {
        self.u.value(x)
    }

    /// max over components of |u(p̄ + λ(x−p̄)) − λ u(x)| and of the gradient
    /// defect |Du(p̄ + λ(x−p̄)) − Du(x)|.
    pub fn homogeneity_defect(&self, x: &[f64], lambda: f64) -> Result<f64> {
        let y: Vec<f64> = x.iter().zip(&self.singular_point).map(|(a, p)| p + lambda * (a - p)).collect();
        let jx = self.u.jet(x).ok_or(Error::JetUnavailable)?;
        let jy = self.u.jet(&y).ok_or(Error::JetUnavailable)?;
        let mut worst = 0.0f64;
        for (a, b) in jy.u.iter().zip(&jx.u) {
            worst = worst.max((a - lambda * b).abs());
        }
        for (da, db) in jy.du.iter().zip(&jx.du) {
            for (a, b) in da.iter().zip(db) {
                worst = worst.max((a - b).abs());
            }
        }
        Ok(worst)
    }

    pub fn mss_residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        mss_residual(self.u.as_ref(), x, Some(&self.singular_point))
    }
}

/// g^{ij} u_{x^i x^j} with g_ij = δ_ij + Σ_α u^α_i u^α_j. Uses the map's
/// analytic jet when present, otherwise central differences with step `1e-3`
/// and one Richardson level.
pub fn mss_residual(u: &dyn GraphFunction, x: &[f64], singular: Option<&[f64]>) -> Result<Vec<f64>> {
    if let Some(p) = singular {
        let d: f64 = x.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if d < 1e-12 {
            return Err(Error::SingularPoint);
        }
    }
    let (du, d2u) = match u.jet(x) {
        Some(j) => (j.du, j.d2u),
        None => fd_graph_derivatives(u, x, 1e-3),
    };
    Ok(mss_from_derivatives(&du, &d2u))
}

/// Same residual from finite-difference derivatives with step `h`.
pub fn mss_residual_fd(u: &dyn GraphFunction, x: &[f64], h: f64) -> Vec<f64> {
    let (du, d2u) = fd_graph_derivatives(u, x, h);
    mss_from_derivatives(&du, &d2u)
}

fn fd_graph_derivatives(u: &dyn GraphFunction, x: &[f64], h: f64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let f = |y: &[f64]| u.value(y);
    let (_, d1, d2) = crate::geometry::fd::jet(&f, x, h, 1, true);
    (d1, d2)
}

pub fn mss_from_derivatives(du: &[Vec<f64>], d2u: &[Vec<f64>]) -> Vec<f64> {
    let n = du.len();
    let k = du[0].len();
    let g = DMatrix::from_fn(n, n, |i, j| {
        let d = if i == j { 1.0 } else { 0.0 };
        d + (0..k).map(|a| du[i][a] * du[j][a]).sum::<f64>()
    });
    let gi = g.try_inverse().expect("I + DuᵀDu is positive definite");
    (0..k)
        .map(|a| {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += gi[(i, j)] * d2u[i * n + j][a];
                }
            }
            s
        })
        .collect()
}

/// The Lawson–Osserman cone: the graph of (√5/2)|x|η(x/|x|) over R⁴, and
/// its polar-coordinate patch over the link in R⁷.
pub fn lawson_osserman_cone() -> (GraphCone, ImmersionPatch) {
    let g = GraphCone { u: Arc::new(AdGraph(LawsonOssermanMap)), singular_point: vec![0.0; 4] };
    let patch = cone_patch(&ConeSpec::lawson_osserman()).expect("LO cone patch");
    (g, patch)
}
