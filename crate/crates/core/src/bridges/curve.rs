//! Planar unit-speed center curves given by a turning angle, with their
//! rotation-minimizing frames in closed form.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ad::Scalar;
use crate::quadrature::gauss_interval;

/// θ(t) = θ₀ + κt + Δ·S(t/ℓ) + Σ_k c_k sin²(kπt/ℓ), with S(u) = 3u² − 2u³.
/// θ'(0) = θ'(ℓ) = κ, so κ = 0 gives γ'' = 0 at both ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurningProfile {
    pub theta0: f64,
    pub kappa: f64,
    pub delta: f64,
    pub bumps: Vec<f64>,
}

impl TurningProfile {
    pub fn straight() -> Self {
        TurningProfile { theta0: 0.0, kappa: 0.0, delta: 0.0, bumps: vec![] }
    }

    pub fn arc(kappa: f64) -> Self {
        TurningProfile { theta0: 0.0, kappa, delta: 0.0, bumps: vec![] }
    }

    pub fn theta<T: Scalar>(&self, t: T, len: f64) -> T {
        let u = t / len;
        let mut th = t * self.kappa + self.theta0 + u * u * (u * -2.0 + 3.0) * self.delta;
        for (k, c) in self.bumps.iter().enumerate() {
            let s = (t * ((k + 1) as f64 * std::f64::consts::PI / len)).sin();
            th = th + s * s * *c;
        }
        th
    }

    pub fn theta_prime<T: Scalar>(&self, t: T, len: f64) -> T {
        let u = t / len;
        let mut d = t.cst(self.kappa) + u * (u * -1.0 + 1.0) * (6.0 * self.delta / len);
        for (k, c) in self.bumps.iter().enumerate() {
            let w = (k + 1) as f64 * std::f64::consts::PI / len;
            d = d + (t * (2.0 * w)).sin() * (c * w);
        }
        d
    }
}

/// γ: [0, ℓ] → R^N in the plane spanned by (u, v) through `origin`, with
/// γ' = cos θ u + sin θ v. The frame is the fixed vectors `extra`, so the
/// in-plane normal N = −sin θ u + cos θ v is a normal direction of the
/// strip. With `ruled_in_plane` the frame is N followed by `extra`; such
/// strips lie in an n-plane and are flat. `complement` holds normal seeds.
#[derive(Debug, Clone)]
pub struct CenterCurve {
    pub origin: DVector<f64>,
    pub u: DVector<f64>,
    pub v: DVector<f64>,
    pub extra: Vec<DVector<f64>>,
    pub complement: Vec<DVector<f64>>,
    pub length: f64,
    pub profile: TurningProfile,
    pub ruled_in_plane: bool,
    knots: Vec<DVector<f64>>,
}

const PANELS: usize = 128;

impl CenterCurve {
    pub fn new(
        origin: DVector<f64>,
        u: DVector<f64>,
        v: DVector<f64>,
        extra: Vec<DVector<f64>>,
        length: f64,
        profile: TurningProfile,
    ) -> Result<Self> {
        let big_n = origin.len();
        if length <= 0.0 || u.len() != big_n || v.len() != big_n || extra.iter().any(|e| e.len() != big_n) {
            return Err(Error::InvalidInput("inconsistent center curve data".into()));
        }
        let mut basis = vec![u.clone(), v.clone()];
        basis.extend(extra.iter().cloned());
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                if (a.dot(b) - want).abs() > 1e-10 {
                    return Err(Error::InvalidInput("plane and frame vectors must be orthonormal".into()));
                }
            }
        }
        let mut complement = Vec::new();
        let mut all = basis.clone();
        for a in 0..big_n {
            let mut e = DVector::zeros(big_n);
            e[a] = 1.0;
            if crate::linalg::orthogonalize(&mut e, &all) > 1e-6 {
                all.push(e.clone());
                complement.push(e);
            }
        }
        let mut c = CenterCurve { origin, u, v, extra, complement, length, profile, ruled_in_plane: false, knots: vec![] };
        c.complement.push(c.u.clone());
        c.complement.push(c.v.clone());
        let h = length / PANELS as f64;
        let mut knots = Vec::with_capacity(PANELS + 1);
        let mut p = c.origin.clone();
        knots.push(p.clone());
        for k in 0..PANELS {
            p += c.integrate_tangent(k as f64 * h, (k + 1) as f64 * h);
            knots.push(p.clone());
        }
        c.knots = knots;
        Ok(c)
    }

    /// Random admissible curve: random plane and frame, zero end curvature.
    /// Needs codimension ≥ 1 for the bending direction.
    pub fn random<R: Rng>(rng: &mut R, n: usize, ambient: usize) -> Result<Self> {
        if ambient < n + 1 || n < 2 {
            return Err(Error::InvalidInput("need n ≥ 2 and codimension ≥ 1".into()));
        }
        let m = DMatrix::from_fn(ambient, n + 1, |_, _| rng.gen_range(-1.0..1.0));
        let q = m.qr().q();
        let cols: Vec<DVector<f64>> = (0..=n).map(|i| q.column(i).clone_owned()).collect();
        let origin = DVector::from_fn(ambient, |_, _| rng.gen_range(-1.0..1.0));
        let profile = TurningProfile {
            theta0: rng.gen_range(-3.0..3.0),
            kappa: 0.0,
            delta: rng.gen_range(-1.0..1.0),
            bumps: (0..3).map(|_| rng.gen_range(-0.4..0.4)).collect(),
        };
        let length = rng.gen_range(1.0..2.0);
        CenterCurve::new(origin, cols[0].clone(), cols[1].clone(), cols[2..].to_vec(), length, profile)
    }

    /// Puts the in-plane normal first in the frame.
    pub fn with_in_plane_normal(mut self) -> Self {
        self.ruled_in_plane = true;
        let k = self.complement.len();
        self.complement.truncate(k - 2);
        self
    }

    /// Number of frame vectors μ_i, i.e. n − 1.
    pub fn frame_len(&self) -> usize {
        usize::from(self.ruled_in_plane) + self.extra.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.origin.len()
    }

    fn integrate_tangent(&self, a: f64, b: f64) -> DVector<f64> {
        let mut s = DVector::zeros(self.ambient_dim());
        for (t, w) in gauss_interval(16, a, b) {
            s += self.tangent(t) * w;
        }
        s
    }

    pub fn theta(&self, t: f64) -> f64 {
        self.profile.theta(t, self.length)
    }

    pub fn point(&self, t: f64) -> DVector<f64> {
        let h = self.length / PANELS as f64;
        let k = ((t / h).floor().max(0.0) as usize).min(PANELS - 1);
        &self.knots[k] + self.integrate_tangent(k as f64 * h, t)
    }

    pub fn tangent(&self, t: f64) -> DVector<f64> {
        let th = self.theta(t);
        &self.u * th.cos() + &self.v * th.sin()
    }

    pub fn in_plane_normal(&self, t: f64) -> DVector<f64> {
        let th = self.theta(t);
        &self.v * th.cos() - &self.u * th.sin()
    }

    pub fn accel(&self, t: f64) -> DVector<f64> {
        self.in_plane_normal(t) * self.profile.theta_prime(t, self.length)
    }

    pub fn curvature(&self, t: f64) -> f64 {
        self.profile.theta_prime(t, self.length).abs()
    }

    pub fn frame(&self, t: f64) -> Vec<DVector<f64>> {
        let mut f = if self.ruled_in_plane { vec![self.in_plane_normal(t)] } else { vec![] };
        f.extend(self.extra.iter().cloned());
        f
    }

    /// γ(t) for a scalar carrying derivatives.
    pub fn point_s<T: Scalar>(&self, t: T) -> Vec<T> {
        let t0 = t.val();
        let (p, d1, d2) = (self.point(t0), self.tangent(t0), self.accel(t0));
        (0..p.len()).map(|k| t.lift(p[k], d1[k], d2[k])).collect()
    }

    pub fn accel_s<T: Scalar>(&self, t: T) -> Vec<T> {
        let th = self.profile.theta(t, self.length);
        let dth = self.profile.theta_prime(t, self.length);
        let (s, c) = (th.sin(), th.cos());
        (0..self.ambient_dim()).map(|k| (c * self.v[k] - s * self.u[k]) * dth).collect()
    }

    pub fn frame_s<T: Scalar>(&self, t: T) -> Vec<Vec<T>> {
        let th = self.profile.theta(t, self.length);
        let (s, c) = (th.sin(), th.cos());
        let mut f = Vec::new();
        if self.ruled_in_plane {
            f.push((0..self.ambient_dim()).map(|k| c * self.v[k] - s * self.u[k]).collect::<Vec<T>>());
        }
        for e in &self.extra {
            f.push(e.iter().map(|a| t.cst(*a)).collect());
        }
        f
    }

    /// Reach estimate: min(1/κ_max, half the smallest distance between
    /// samples further apart than π/κ_max along the curve).
    pub fn reach(&self) -> f64 {
        let m = 512;
        let ts: Vec<f64> = (0..=m).map(|i| self.length * i as f64 / m as f64).collect();
        let kmax = ts.iter().map(|&t| self.curvature(t)).fold(0.0, f64::max);
        let local = if kmax > 0.0 { 1.0 / kmax } else { f64::INFINITY };
        let sep = if kmax > 0.0 { (std::f64::consts::PI / kmax).min(self.length) } else { self.length };
        let pts: Vec<DVector<f64>> = ts.iter().map(|&t| self.point(t)).collect();
        let mut global = f64::INFINITY;
        for i in 0..=m {
            for j in (i + 1)..=m {
                if ts[j] - ts[i] >= sep && ts[j] - ts[i] > 0.0 {
                    global = global.min((&pts[i] - &pts[j]).norm() / 2.0);
                }
            }
        }
        local.min(global)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unit_speed_frame_and_closed_arc() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = CenterCurve::random(&mut rng, 4, 6).unwrap();
        for i in 0..=20 {
            let t = c.length * i as f64 / 20.0;
            assert!((c.tangent(t).norm() - 1.0).abs() < 1e-12);
            let mut f = c.frame(t);
            f.push(c.tangent(t));
            for a in 0..f.len() {
                for b in 0..f.len() {
                    assert!((f[a].dot(&f[b]) - if a == b { 1.0 } else { 0.0 }).abs() < 1e-10);
                }
            }
            // γ' by differencing the integrated point
            let h = 1e-5;
            let fd = (c.point(t + h) - c.point(t - h)) / (2.0 * h);
            assert!((fd - c.tangent(t)).norm() < 1e-8);
        }
        assert!(c.accel(0.0).norm() < 1e-12 && c.accel(c.length).norm() < 1e-12);
        // circle of curvature 1 closes after length 2π
        let e = |i: usize| DVector::from_fn(3, |k, _| if k == i { 1.0 } else { 0.0 });
        let circ = CenterCurve::new(DVector::zeros(3), e(0), e(1), vec![], 2.0 * std::f64::consts::PI, TurningProfile::arc(1.0))
            .unwrap();
        assert!(circ.point(2.0 * std::f64::consts::PI).norm() < 1e-12);
        assert!((circ.point(std::f64::consts::PI) - e(1) * 2.0).norm() < 1e-12);
        let half = CenterCurve::new(DVector::zeros(3), e(0), e(1), vec![], std::f64::consts::PI, TurningProfile::arc(1.0)).unwrap();
        assert!((half.reach() - 1.0).abs() < 1e-9);
    }
}
