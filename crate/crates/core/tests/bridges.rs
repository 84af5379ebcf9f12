use std::sync::Arc;

use conebridge::bridges::*;
use conebridge::cones::ConeSpec;
use conebridge::fit::loglog_fit;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn unit_dir(d: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..d).map(|i| 1.0 + 0.37 * i as f64).collect();
    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    v.into_iter().map(|a| a / n).collect()
}

#[test]
fn perturbed_strips_are_minimal_along_the_center_curve() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (k, n) in [3, 4, 5, 3, 4].into_iter().enumerate() {
        let curve = Arc::new(CenterCurve::random(&mut rng, n, n + 1 + k % 2).unwrap());
        let eps = 0.1;
        let patch = build_perturbed_bridge(&curve, eps, n).unwrap();
        let mut center: f64 = 0.0;
        let dir = unit_dir(n - 1);
        let radii = [eps, eps / 2.0, eps / 4.0];
        let mut off = [0.0f64; 3];
        for i in 0..=100 {
            let t = curve.length * i as f64 / 100.0;
            let mut x = vec![0.0; n];
            x[n - 1] = t;
            center = center.max(patch.mean_curvature_at(&x).unwrap().norm());
            for (j, r) in radii.iter().enumerate() {
                for a in 0..n - 1 {
                    x[a] = r * dir[a];
                }
                off[j] = off[j].max(patch.mean_curvature_at(&x).unwrap().norm());
            }
        }
        assert!(center < 1e-6, "curve {k}: max |H| on the center curve {center:e}");
        let fit = loglog_fit(&radii, &off).unwrap();
        assert!(fit.slope >= 0.9, "curve {k}: off-center slope {}", fit.slope);
    }
}

#[test]
fn flattened_clifford_wedge_is_quadratically_small() {
    let spec = ConeSpec::clifford();
    let s = [0.9, 2.3];
    let eps = 0.1;
    let wedge = flatten_wedge(&spec, &s, eps).unwrap();
    for i in 0..=20 {
        let xn = 1.0 + i as f64 / 20.0;
        assert!(wedge.mean_curvature_at(&[0.0, 0.0, xn]).unwrap().norm() < 1e-6);
    }
    let radii = [eps, eps / 2.0, eps / 4.0];
    let dir = unit_dir(2);
    let h: Vec<f64> = radii
        .iter()
        .map(|r| {
            (1..20)
                .map(|i| wedge.mean_curvature_at(&[r * dir[0], r * dir[1], 1.0 + i as f64 / 20.0]).unwrap().norm())
                .fold(0.0, f64::max)
        })
        .collect();
    let fit = loglog_fit(&radii, &h).unwrap();
    assert!(fit.slope >= 1.9, "wedge slope {}", fit.slope);
}

#[test]
fn scan_refuses_short_or_non_geometric_sequences() {
    let spec = ConeSpec::equatorial(2, 4);
    let fam = |e: f64| mirrored_pair(&spec, &[1.0, 0.5], TurningProfile::straight(), 1.0, e, BridgeVariant::Ruled);
    let opts = QuadratureOptions::default();
    assert!(mean_curvature_scan(BridgeVariant::Ruled, fam, &[0.1, 0.05], 2.0, &opts).is_err());
    assert!(mean_curvature_scan(BridgeVariant::Ruled, fam, &[0.1, 0.05, 0.02], 2.0, &opts).is_err());
    let flat = mean_curvature_scan(BridgeVariant::Ruled, fam, &[0.1, 0.05, 0.025], 2.0, &opts).unwrap();
    assert!(flat.integrals.iter().all(|v| *v < 1e-20));
    assert!(flat.fitted_slope.is_none());
    assert!(flat.cone_max_h < 1e-8);
}

#[test]
fn qmc_fallback_agrees_with_the_tensor_rule() {
    let spec = ConeSpec::product_spheres(1, 2);
    let profile = TurningProfile { theta0: 0.0, kappa: 0.0, delta: 0.8, bumps: vec![0.2] };
    let sol = mirrored_pair(&spec, &[0.8, 1.1, 2.0], profile, 1.5, 0.1, BridgeVariant::Ruled).unwrap();
    let strip = sol.regions_tagged(RegionTag::BridgeInterior).next().unwrap();
    let opts = QuadratureOptions::default();
    let (exact, _, none) = scan::region_integral(strip, 2.0, &opts).unwrap();
    assert!(none.is_none());
    let small = QuadratureOptions { node_budget: 10, qmc_points: 40_000, ..opts };
    let (est, _, err) = scan::region_integral(strip, 2.0, &small).unwrap();
    let err = err.unwrap();
    assert!((est - exact).abs() < 5.0 * err + 1e-3 * exact, "{est} vs {exact} ± {err}");
}
