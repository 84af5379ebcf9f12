//! Browser bindings: Jacobi radial profiles, product-cone stability and the
//! mean curvature of a perturbed bridge strip. Every export returns JSON.

use std::sync::Arc;

use conebridge::bridges::{build_perturbed_bridge, build_ruled_bridge, CenterCurve};
use conebridge::cones::ConeSpec;
use conebridge::fit::loglog_fit;
use conebridge::jacobi::{exponents, geometric_grid, homogeneous_residual};
use conebridge::spectrum::{build_link_mesh, lowest_eigenvalues};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct JacobiProfile {
    pub n: usize,
    pub mu: f64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub residual: f64,
    pub r: Vec<f64>,
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
}

/// r^{γ±} on a log grid over [0.05, 1].
pub fn jacobi_profile_data(n: usize, mu: f64, samples: usize) -> conebridge::Result<JacobiProfile> {
    let e = exponents(n, mu)?;
    let r = geometric_grid(0.05, 1.0, samples.max(2));
    let residual = homogeneous_residual(n, mu, e.gamma_plus, &r).max(homogeneous_residual(n, mu, e.gamma_minus, &r));
    Ok(JacobiProfile {
        n,
        mu,
        gamma_plus: e.gamma_plus,
        gamma_minus: e.gamma_minus,
        residual,
        plus: r.iter().map(|x| x.powf(e.gamma_plus)).collect(),
        minus: r.iter().map(|x| x.powf(e.gamma_minus)).collect(),
        r,
    })
}

#[derive(Debug, Serialize)]
pub struct ConeStability {
    pub p: usize,
    pub q: usize,
    pub n: usize,
    pub mu1: f64,
    pub d0: f64,
    pub strictly_stable: bool,
}

/// Lowest eigenvalue of the link Jacobi operator of the cone over
/// S^p × S^q and d₀ = ((n−2)/2)² + μ₁.
pub fn cone_stability_data(p: usize, q: usize, resolution: usize) -> conebridge::Result<ConeStability> {
    if p == 0 || q == 0 || p + q > 8 {
        return Err(conebridge::Error::InvalidInput("need 1 ≤ p, q and p + q ≤ 8".into()));
    }
    let spec = ConeSpec::product_spheres(p, q);
    let mesh = build_link_mesh(&spec, resolution.max(3))?;
    let mu1 = lowest_eigenvalues(&mesh, 1, 0)?.mu[0];
    let n = spec.n;
    let half = (n as f64 - 2.0) / 2.0;
    let d0 = half * half + mu1;
    Ok(ConeStability { p, q, n, mu1, d0, strictly_stable: d0 > 0.0 })
}

#[derive(Debug, Serialize)]
pub struct BridgeProfile {
    pub n: usize,
    pub epsilon: f64,
    pub t: Vec<f64>,
    /// |H| of the perturbed strip on its center curve.
    pub perturbed_center: Vec<f64>,
    /// |H| of the ruled strip on the same curve.
    pub ruled_center: Vec<f64>,
    pub radii: Vec<f64>,
    /// max_t |H| of the perturbed strip at each off-center radius.
    pub off_center_max: Vec<f64>,
    pub off_center_slope: Option<f64>,
}

/// Mean curvature along a random admissible center curve in R^{n+1}.
pub fn bridge_profile_data(n: usize, epsilon: f64, seed: u64) -> conebridge::Result<BridgeProfile> {
    if !(3..=5).contains(&n) || !(epsilon > 0.0 && epsilon <= 0.2) {
        return Err(conebridge::Error::InvalidInput("need 3 ≤ n ≤ 5 and 0 < ε ≤ 0.2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let curve = Arc::new(CenterCurve::random(&mut rng, n, n + 1)?);
    let perturbed = build_perturbed_bridge(&curve, epsilon, n)?;
    let ruled = build_ruled_bridge(&curve, epsilon)?;
    let radii = vec![epsilon, epsilon / 2.0, epsilon / 4.0];
    let dir = 1.0 / ((n - 1) as f64).sqrt();
    let (mut t, mut pc, mut rc) = (Vec::new(), Vec::new(), Vec::new());
    let mut off = vec![0.0f64; radii.len()];
    for i in 0..=100 {
        let ti = curve.length * i as f64 / 100.0;
        let mut x = vec![0.0; n];
        x[n - 1] = ti;
        t.push(ti);
        pc.push(perturbed.mean_curvature_at(&x)?.norm());
        rc.push(ruled.mean_curvature_at(&x)?.norm());
        for (j, r) in radii.iter().enumerate() {
            for a in 0..n - 1 {
                x[a] = r * dir;
            }
            off[j] = off[j].max(perturbed.mean_curvature_at(&x)?.norm());
        }
    }
    let slope = loglog_fit(&radii, &off).map(|f| f.slope);
    Ok(BridgeProfile { n, epsilon, t, perturbed_center: pc, ruled_center: rc, radii, off_center_max: off, off_center_slope: slope })
}

fn to_js<T: Serialize>(r: conebridge::Result<T>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn jacobi_profile(n: u32, mu: f64, samples: u32) -> Result<String, JsError> {
    to_js(jacobi_profile_data(n as usize, mu, samples as usize))
}

#[wasm_bindgen]
pub fn cone_stability(p: u32, q: u32, resolution: u32) -> Result<String, JsError> {
    to_js(cone_stability_data(p as usize, q as usize, resolution as usize))
}

#[wasm_bindgen]
pub fn bridge_profile(n: u32, epsilon: f64, seed: u32) -> Result<String, JsError> {
    to_js(bridge_profile_data(n as usize, epsilon, seed as u64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_profile_is_a_pair_of_powers() {
        let p = jacobi_profile_data(7, -6.0, 20).unwrap();
        assert!((p.gamma_plus + 2.0).abs() < 1e-12 && (p.gamma_minus + 3.0).abs() < 1e-12);
        assert!(p.residual <= 1e-12);
        assert_eq!(p.r.len(), 20);
        assert!(jacobi_profile_data(7, -7.0, 20).is_err());
    }

    #[test]
    fn simons_and_lawson_stability() {
        let s = cone_stability_data(3, 3, 4).unwrap();
        assert!((s.mu1 + 6.0).abs() < 1e-6 && s.strictly_stable);
        let l = cone_stability_data(2, 3, 4).unwrap();
        assert!((l.d0 + 1.0).abs() < 1e-6 && !l.strictly_stable);
    }

    #[test]
    fn perturbed_strip_is_minimal_on_its_center() {
        let b = bridge_profile_data(3, 0.1, 3).unwrap();
        assert!(b.perturbed_center.iter().all(|h| *h < 1e-6));
        assert!(b.off_center_slope.unwrap() >= 0.9);
        assert!(bridge_profile_data(9, 0.1, 3).is_err());
    }
}
