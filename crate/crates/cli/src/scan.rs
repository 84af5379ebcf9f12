//! `scan`: ∫|H₀|^p over the bridge and patching regions for a list of ε.

use conebridge::bridges::{mean_curvature_scan, mirrored_pair, BridgeVariant, QuadratureOptions, ScalingReport, TurningProfile};
use conebridge::cones::ConeSpec;
use conebridge::Error;
use serde::Serialize;

use crate::report::{Check, Recorder, Relation::*};
use crate::Exit;

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRequest {
    pub variant: String,
    pub n: usize,
    pub p: f64,
    pub epsilons: Vec<f64>,
    pub length: f64,
}

impl ScanRequest {
    pub fn tag(&self) -> String {
        format!("{}-n{}", self.variant, self.n)
    }
}

pub const DEFAULT_EPSILONS: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];

/// Requests behind a preset name.
pub fn preset(name: &str) -> Option<Vec<ScanRequest>> {
    let req = |variant: &str, n, eps: &[f64]| ScanRequest { variant: variant.into(), n, p: 2.0, epsilons: eps.to_vec(), length: 1.5 };
    let improved = req("perturbed", 4, &DEFAULT_EPSILONS);
    let ruled = req("ruled", 6, &DEFAULT_EPSILONS);
    match name {
        "improved-n4" => Some(vec![improved]),
        "ruled-n6" => Some(vec![ruled]),
        "lp-scaling" => Some(vec![improved, ruled]),
        "flat" => Some(vec![req("flat", 3, &DEFAULT_EPSILONS[..3])]),
        _ => None,
    }
}

#[derive(Debug, Serialize)]
pub struct ScanOutcome {
    pub scan: ScalingReport,
    /// Slope the recipe is expected to reach for p = 2.
    pub expected_slope: Option<f64>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// Product-sphere link S^a × S^b with a + b = n − 1 and a ≤ b.
fn product_cone(n: usize) -> ConeSpec {
    let a = (n - 1) / 2;
    ConeSpec::product_spheres(a, n - 1 - a)
}

/// A fixed link point away from the poles of every sphere factor.
fn link_point(k: usize) -> Vec<f64> {
    const ANGLES: [f64; 6] = [0.8, 1.1, 0.9, 1.3, 1.2, 1.0];
    let mut s: Vec<f64> = (0..k - 1).map(|i| ANGLES[i % ANGLES.len()]).collect();
    s.push(2.0);
    s
}

pub fn run_scan(req: &ScanRequest, quad: &QuadratureOptions, tolerances: &std::collections::BTreeMap<String, f64>) -> Result<ScanOutcome, Exit> {
    if req.epsilons.len() < 3 {
        return Err(Exit::usage(format!("a slope fit needs at least 3 epsilon values, got {}", req.epsilons.len())));
    }
    if !(3..=8).contains(&req.n) {
        return Err(Exit::usage(format!("n = {} is outside the supported range 3..=8", req.n)));
    }
    let (variant, spec, s, profile, expected) = match req.variant.as_str() {
        "flat" => {
            let mut s = vec![1.0; req.n - 1];
            s[req.n - 2] = 0.5;
            (BridgeVariant::Ruled, ConeSpec::equatorial(req.n - 1, req.n + 1), s, TurningProfile::straight(), None)
        }
        v => {
            let (variant, expected) = match v {
                "ruled" => (BridgeVariant::Ruled, req.n as f64 - 1.0),
                "perturbed" => (BridgeVariant::Perturbed, req.n as f64 + 1.0),
                "planar-path" => (BridgeVariant::PlanarPath, req.n as f64 - 1.0),
                _ => return Err(Exit::usage(format!("unknown variant '{v}' (expected ruled, perturbed, planar-path or flat)"))),
            };
            let profile = TurningProfile { theta0: 0.0, kappa: 0.0, delta: 0.8, bumps: vec![0.2] };
            (variant, product_cone(req.n), link_point(req.n - 1), profile, Some(expected))
        }
    };
    let family = |e: f64| mirrored_pair(&spec, &s, profile.clone(), req.length, e, variant);
    let scan = mean_curvature_scan(variant, family, &req.epsilons, req.p, quad).map_err(|e| match e {
        Error::InvalidInput(m) => Exit::usage(m),
        e => Exit::failure(e.to_string()),
    })?;
    let mut rec = Recorder::new("scan", tolerances);
    let expected = expected.filter(|_| req.p == 2.0);
    match expected {
        Some(x) => {
            rec.check(Some(6), &format!("{}_slope", req.tag()), scan.fitted_slope.unwrap_or(f64::NAN), AtLeast, 0.85 * x);
            rec.check(Some(6), &format!("{}_r_squared", req.tag()), scan.r_squared.unwrap_or(f64::NAN), AtLeast, 0.99);
        }
        None if req.variant == "flat" => {
            let worst = scan.integrals.iter().copied().fold(0.0, f64::max);
            rec.check(None, &format!("{}_integral", req.tag()), worst, AtMost, 1e-20);
        }
        None => {}
    }
    let passed = rec.checks.iter().all(|c| c.passed);
    Ok(ScanOutcome { scan, expected_slope: expected, checks: rec.checks, passed })
}

impl ScanOutcome {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scan serialises");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_and_link_points() {
        assert_eq!(preset("lp-scaling").unwrap().len(), 2);
        assert!(preset("nope").is_none());
        assert_eq!(link_point(3), vec![0.8, 1.1, 2.0]);
        assert_eq!(link_point(5), vec![0.8, 1.1, 0.9, 1.3, 2.0]);
        assert_eq!(product_cone(6).n, 6);
    }

    #[test]
    fn short_epsilon_lists_are_usage_errors() {
        let req = ScanRequest { variant: "ruled".into(), n: 4, p: 2.0, epsilons: vec![0.1], length: 1.5 };
        let e = run_scan(&req, &QuadratureOptions::default(), &Default::default()).unwrap_err();
        assert_eq!(e.code, 2);
    }

    #[test]
    fn flat_variant_integrates_to_zero() {
        let out = run_scan(&preset("flat").unwrap()[0], &QuadratureOptions::default(), &Default::default()).unwrap();
        assert!(out.passed);
        assert!(out.scan.integrals.iter().all(|v| *v < 1e-20));
    }
}
