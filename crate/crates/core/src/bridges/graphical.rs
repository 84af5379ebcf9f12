//! Center curves that stay graphical over the horizontal Rⁿ: radial
//! segments out of each cone joined by a quintic Hermite arc.

use nalgebra::DVector;
use serde::Serialize;

use super::assembly::PlacedCone;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GraphicalConstraints {
    /// Number of horizontal coordinates (the first `horizontal` axes).
    pub horizontal: usize,
    /// Length of the radial segment kept on each extended cone.
    pub radial_extension: f64,
    /// Smallest admissible angle between γ' and the vertical subspace.
    pub margin: f64,
    pub samples: usize,
}

impl Default for GraphicalConstraints {
    fn default() -> Self {
        GraphicalConstraints { horizontal: 0, radial_extension: 0.2, margin: 0.05, samples: 1000 }
    }
}

/// Three pieces over u ∈ [0, 3]: radial segment from q₁, Hermite arc,
/// radial segment into q₂. Not unit speed.
#[derive(Debug, Clone)]
pub struct GraphicalCurve {
    pub q1: DVector<f64>,
    pub q2: DVector<f64>,
    pub d1: DVector<f64>,
    pub d2: DVector<f64>,
    pub extension: f64,
    pub stretch: f64,
    pub horizontal: usize,
    /// Smallest measured angle to the vertical subspace.
    pub min_vertical_angle: f64,
}

fn hermite(t: f64) -> [[f64; 6]; 2] {
    // quintic Hermite basis (value, derivative) for p0, v0, a0, p1, v1, a1
    let (t2, t3, t4, t5) = (t * t, t * t * t, t.powi(4), t.powi(5));
    [
        [
            1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5,
            t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5,
            0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5,
            10.0 * t3 - 15.0 * t4 + 6.0 * t5,
            -4.0 * t3 + 7.0 * t4 - 3.0 * t5,
            0.5 * t3 - t4 + 0.5 * t5,
        ],
        [
            -30.0 * t2 + 60.0 * t3 - 30.0 * t4,
            1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4,
            t - 4.5 * t2 + 6.0 * t3 - 2.5 * t4,
            30.0 * t2 - 60.0 * t3 + 30.0 * t4,
            -12.0 * t2 + 28.0 * t3 - 15.0 * t4,
            1.5 * t2 - 4.0 * t3 + 2.5 * t4,
        ],
    ]
}

impl GraphicalCurve {
    fn arc_ends(&self) -> (DVector<f64>, DVector<f64>) {
        (&self.q1 + self.extension * &self.d1, &self.q2 + self.extension * &self.d2)
    }

    /// (γ(u), γ'(u)) for u ∈ [0, 3].
    pub fn eval(&self, u: f64) -> (DVector<f64>, DVector<f64>) {
        let (a, b) = self.arc_ends();
        if u <= 1.0 {
            (&self.q1 + u * self.extension * &self.d1, self.extension * &self.d1)
        } else if u >= 2.0 {
            let s = 3.0 - u;
            (&self.q2 + s * self.extension * &self.d2, -self.extension * &self.d2)
        } else {
            let h = hermite(u - 1.0);
            let v0 = self.stretch * &self.d1;
            let v1 = -self.stretch * &self.d2;
            let z = DVector::zeros(a.len());
            let coef = [&a, &v0, &z, &b, &v1, &z];
            let mut p = DVector::zeros(a.len());
            let mut d = DVector::zeros(a.len());
            for k in 0..6 {
                p.axpy(h[0][k], coef[k], 1.0);
                d.axpy(h[1][k], coef[k], 1.0);
            }
            (p, d)
        }
    }

    /// Angle between γ'(u) and the vertical subspace.
    pub fn vertical_angle(&self, u: f64) -> f64 {
        let (_, d) = self.eval(u);
        let horiz = d.rows(0, self.horizontal).norm();
        (horiz / d.norm()).clamp(0.0, 1.0).asin()
    }
}

/// Joins the link points with parameters `s1`, `s2` of two placed cones.
/// The arc's end speed is the distance between the segment ends, which
/// makes the curve a straight segment when the two rays are colinear.
pub fn make_graphical_center_curve(
    cone1: &PlacedCone,
    s1: &[f64],
    cone2: &PlacedCone,
    s2: &[f64],
    constraints: &GraphicalConstraints,
) -> Result<GraphicalCurve> {
    let point = |c: &PlacedCone, s: &[f64]| -> (DVector<f64>, DVector<f64>) {
        let w = c.spec.link.eval(s) - &c.spec.vertex;
        let d = &c.rotation * w;
        (&c.vertex + &d, d.normalize())
    };
    let (q1, d1) = point(cone1, s1);
    let (q2, d2) = point(cone2, s2);
    let h = constraints.horizontal;
    if h == 0 || h >= q1.len() {
        return Err(Error::InvalidInput("horizontal dimension must lie strictly between 0 and the ambient dimension".into()));
    }
    let ext = constraints.radial_extension;
    let (a, b) = (&q1 + ext * &d1, &q2 + ext * &d2);
    let stretch = (&b - &a).norm();
    if stretch < 1e-12 {
        return Err(Error::InfeasibleConstraints("segment ends coincide".into()));
    }
    let mut curve = GraphicalCurve { q1, q2, d1, d2, extension: ext, stretch, horizontal: h, min_vertical_angle: 0.0 };
    let m = constraints.samples.max(2);
    let mut worst = f64::INFINITY;
    let mut pts = Vec::with_capacity(m + 1);
    for i in 0..=m {
        let u = 3.0 * i as f64 / m as f64;
        worst = worst.min(curve.vertical_angle(u));
        pts.push(curve.eval(u).0.rows(0, h).clone_owned());
    }
    curve.min_vertical_angle = worst;
    if worst < constraints.margin {
        return Err(Error::InfeasibleConstraints(format!("tangent within {worst:.3e} rad of vertical (margin {})", constraints.margin)));
    }
    // graphical: the horizontal projection of a non-vertical curve can still
    // fold back; check it is injective at the sample scale
    let steps: Vec<f64> = pts.windows(2).map(|w| (&w[1] - &w[0]).norm()).collect();
    let local = |i: usize| steps[i.min(steps.len() - 1)].max(steps[i.saturating_sub(1)]);
    for i in 0..pts.len() {
        for j in (i + 3)..pts.len() {
            if (&pts[i] - &pts[j]).norm() < 0.5 * local(i).min(local(j)) {
                return Err(Error::InfeasibleConstraints("horizontal projection is not injective".into()));
            }
        }
    }
    Ok(curve)
}
