//! ε-bridges joining cones: ruled and center-curve-perturbed strips,
//! flattened wedges, assembled approximate solutions M^ε and L^p scaling
//! of their mean curvature.

pub mod assembly;
pub mod curve;
pub mod graphical;
pub mod scan;
pub mod wedge;

use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ad::{arc_chart, Scalar, SmoothMap};
use crate::geometry::{ImmersionPatch, ParamBox};

pub use assembly::{assemble_approximate_solution, mirrored_pair, ApproximateSolution, BridgePiece, PlacedCone, Region, RegionTag};
pub use curve::{CenterCurve, TurningProfile};
pub use graphical::{make_graphical_center_curve, GraphicalConstraints, GraphicalCurve};
pub use scan::{mean_curvature_scan, QuadratureOptions, ScalingReport};
pub use wedge::{flatten_wedge, wedge_frame, WedgeFrame, WedgeMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BridgeVariant {
    Ruled,
    Perturbed,
    FlattenedWedge,
    PlanarPath,
}

fn sigma<T: Scalar>(s: T) -> T {
    if s.val() > 0.0 {
        (s.recip() * -1.0).exp()
    } else {
        s.cst(0.0)
    }
}

/// φ(t) = σ(2−t)/(σ(2−t) + σ(t−1)), σ(s) = e^{−1/s} for s > 0 and 0
/// otherwise. Exactly 1 on (−∞, 1] and 0 on [2, ∞).
pub fn cutoff<T: Scalar>(t: T) -> T {
    let a = sigma(t * -1.0 + 2.0);
    let b = sigma(t - 1.0);
    a / (a + b)
}

/// ψ(x) = γ(xⁿ) + Σ xⁱ μ_i(xⁿ) [− Σ (xⁱ)²/(2(n−1)) γ''(xⁿ)].
#[derive(Clone)]
pub struct StripMap {
    pub curve: Arc<CenterCurve>,
    pub perturbed: bool,
}

impl SmoothMap for StripMap {
    fn dim(&self) -> usize {
        self.curve.frame_len() + 1
    }
    fn ambient_dim(&self) -> usize {
        self.curve.ambient_dim()
    }
    fn map<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let n = self.dim();
        let t = x[n - 1];
        let mut p = self.curve.point_s(t);
        let frame = self.curve.frame_s(t);
        for (i, mu) in frame.iter().enumerate() {
            for (pk, mk) in p.iter_mut().zip(mu) {
                *pk = *pk + x[i] * *mk;
            }
        }
        if self.perturbed {
            let mut q = t.cst(0.0);
            for xi in &x[..n - 1] {
                q = q + *xi * *xi;
            }
            q = q / (2.0 * (n - 1) as f64);
            for (pk, ak) in p.iter_mut().zip(self.curve.accel_s(t)) {
                *pk = *pk - q * ak;
            }
        }
        p
    }
    fn normal_seeds(&self, _x: &[f64]) -> Option<Vec<DVector<f64>>> {
        Some(self.curve.complement.clone())
    }
}

fn strip_patch(curve: &Arc<CenterCurve>, radius: f64, perturbed: bool) -> Result<ImmersionPatch> {
    let reach = curve.reach();
    if radius >= reach {
        return Err(Error::SelfIntersection { radius, reach });
    }
    let d = curve.frame_len();
    let mut lo = vec![-radius; d];
    let mut hi = vec![radius; d];
    lo.push(0.0);
    hi.push(curve.length);
    Ok(ImmersionPatch::new(arc_chart(StripMap { curve: curve.clone(), perturbed }), ParamBox::new(lo, hi)))
}

/// Ruled strip over B_ε^{n−1} × [0, ℓ₀].
pub fn build_ruled_bridge(curve: &Arc<CenterCurve>, epsilon: f64) -> Result<ImmersionPatch> {
    strip_patch(curve, epsilon, false)
}

/// Perturbed strip over B_ε^{n−1} × [0, ℓ₀]; requires γ'' = 0 at both ends.
pub fn build_perturbed_bridge(curve: &Arc<CenterCurve>, epsilon: f64, n: usize) -> Result<ImmersionPatch> {
    if n < 3 || curve.frame_len() + 1 != n {
        return Err(Error::InvalidInput(format!("perturbed bridge needs n ≥ 3 matching the curve frame, got n = {n}")));
    }
    let end = curve.accel(0.0).norm().max(curve.accel(curve.length).norm());
    if end > 1e-8 {
        return Err(Error::InvalidInput(format!("perturbed bridge needs γ'' = 0 at both ends, found {end:.3e}")));
    }
    strip_patch(curve, epsilon, true)
}
