use std::f64::consts::PI;
use std::sync::Arc;

use conebridge::bridges::{mirrored_pair, BridgeVariant, TurningProfile};
use conebridge::cones::graph::lawson_osserman_cone;
use conebridge::cones::{cone_patch, ConeSpec, LinkKind};
use conebridge::fit::loglog_fit;
use conebridge::geometry::ad::{arc_chart, Scalar, SmoothMap};
use conebridge::geometry::charts::Plane;
use conebridge::geometry::grid::{GridMesh, NormalSectionField};
use conebridge::geometry::{ImmersionPatch, ParamBox};
use conebridge::jacobi::exponents;
use conebridge::perturbation::*;
use conebridge::spectrum::{build_link_mesh, lowest_eigenvalues};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn flat_strip(counts: [usize; 2]) -> DiscreteSurface {
    let patch = ImmersionPatch::new(Arc::new(Plane { n: 2, ambient: 3 }), ParamBox::new(vec![0.0, -0.5], vec![3.0, 0.5]));
    DiscreteSurface::new(patch, GridMesh::uniform(vec![0.0, -0.5], vec![3.0, 0.5], counts.to_vec())).unwrap()
}

/// Clifford cone on 0.3 ≤ r ≤ 1 in polar coordinates.
fn clifford_annulus(radial: usize, angular: usize) -> DiscreteSurface {
    let spec = ConeSpec::clifford().with_radial_range(0.3, 1.0);
    let patch = cone_patch(&spec).unwrap();
    let mesh = GridMesh::new(vec![0.3, 0.0, 0.0], vec![1.0, 2.0 * PI, 2.0 * PI], vec![radial, angular, angular], vec![false, true, true]);
    DiscreteSurface::new(patch, mesh).unwrap()
}

/// The perturbed strip of a pair of Clifford cones (n = 3) at ε.
fn toy_bridge(eps: f64) -> DiscreteSurface {
    let profile = TurningProfile { theta0: 0.0, kappa: 0.0, delta: 0.8, bumps: vec![0.2] };
    let sol = mirrored_pair(&ConeSpec::clifford(), &[0.9, 2.3], profile, 1.5, eps, BridgeVariant::Perturbed).unwrap();
    let strip = sol.bridges[0].strip.clone();
    let (lo, hi) = (strip.domain.lower.clone(), strip.domain.upper.clone());
    let m = ((hi[2] - lo[2]) / (0.5 * (hi[0] - lo[0]) / 4.0)).round() as usize + 1;
    DiscreteSurface::new(strip, GridMesh::uniform(lo, hi, vec![9, 9, m.min(121)])).unwrap()
}

fn field<F: Fn(&[f64]) -> Vec<f64>>(s: &DiscreteSurface, f: F) -> NormalSectionField {
    NormalSectionField::from_fn(s.mesh.len(), s.codim(), |i| f(&s.mesh.coords(i)))
}

fn remainder_exponent(s: &DiscreteSurface, u: &NormalSectionField) -> f64 {
    let ts: Vec<f64> = (0..5).map(|k| 10f64.powf(-1.0 - 0.5 * k as f64)).collect();
    let h0 = &s.h0;
    let lu = s.apply_l(u).unwrap();
    let e: Vec<f64> = ts
        .iter()
        .map(|&t| {
            // ‖H^⊥(tU) − H₀ − tLU‖ evaluated directly
            let mut d = s.mean_curvature(&u.scaled(t)).unwrap();
            d.axpy(-1.0, h0);
            d.axpy(-t, &lu);
            s.norms(&d).0
        })
        .collect();
    loglog_fit(&ts, &e).unwrap().slope
}

#[test]
fn remainder_is_quadratic_on_three_assemblies() {
    let flat = flat_strip([31, 11]);
    let u = field(&flat, |x| vec![(x[0]).sin() * (1.0 + x[1] * x[1]) + 0.3 * x[1]]);
    let a = remainder_exponent(&flat, &u);

    let cone = clifford_annulus(12, 16);
    let u = field(&cone, |x| vec![x[0] * x[0] * (x[1].cos() + 0.5 * (x[2] + 0.3).sin())]);
    let b = remainder_exponent(&cone, &u);

    let eps = 0.05;
    let bridge = toy_bridge(eps);
    let u = field(&bridge, |x| vec![0.5 * eps * (x[0] / eps + 0.3).cos() * (2.0 * x[2]).sin() + x[1] * x[1]]);
    let c = remainder_exponent(&bridge, &u);
    for (name, e) in [("flat", a), ("cone annulus", b), ("toy bridge", c)] {
        assert!(e >= 1.9, "{name}: exponent {e}");
    }
}

#[test]
fn dirichlet_on_the_cone_annulus_matches_the_radial_jacobi_solution() {
    // η = cos(s₁)ν on the Clifford torus: μ = 2·1² − 2 = 0, and for cos(2s₁)
    // μ = 2·4 − 2 = 6
    let s = clifford_annulus(29, 24);
    for (j, mu) in [(1.0, 0.0), (2.0, 6.0)] {
        let ex = exponents(3, mu).unwrap();
        let (gp, gm) = (ex.gamma_plus, ex.gamma_minus);
        let r0: f64 = 0.3;
        // a r^{γ+} + b r^{γ−} with value 0 at r0 and 1 at r = 1
        let b = -r0.powf(gp) / (r0.powf(gm) - r0.powf(gp));
        let a = 1.0 - b;
        let radial = |r: f64| a * r.powf(gp) + b * r.powf(gm);
        let psi = field(&s, |x| vec![if x[0] > 0.99 { (j * x[1]).cos() } else { 0.0 }]);
        let v = s.solve_dirichlet(&s.zeros(), &psi).unwrap();
        let mid = s.mesh.index(&[14, 0, 5]);
        let r = s.mesh.coords(mid)[0];
        assert!((r - 0.65).abs() < 1e-12);
        let rel = (v.get(mid)[0] / radial(r) - 1.0).abs();
        assert!(rel < 0.01, "mode {j}: discrete {} vs closed form {} ({rel:.2e})", v.get(mid)[0], radial(r));
    }
}

#[test]
fn newton_reproduces_the_holomorphic_square() {
    let mesh = GridMesh::uniform(vec![0.0; 2], vec![1.0; 2], vec![64, 64]);
    let z2 = |x: &[f64]| vec![x[0] * x[0] - x[1] * x[1], 2.0 * x[0] * x[1]];
    let start = |x: &[f64]| {
        let b = 0.1 * (PI * x[0]).sin() * (PI * x[1]).sin();
        vec![x[0] * x[0] - x[1] * x[1] + b, 2.0 * x[0] * x[1] - b]
    };
    let sol = graph_newton_solve(&mesh, 2, z2, start, &NewtonOptions::default()).unwrap();
    assert!(sol.steps > 0);
    assert!(sol.residual < 1e-8);
    let err = sol.max_error(z2);
    assert!(err < 1e-6, "nodewise error {err:e}");
}

#[test]
fn newton_keeps_the_lawson_osserman_annulus() {
    let (lo, _) = lawson_osserman_cone();
    let mesh = GridMesh::uniform(vec![-1.0; 4], vec![1.0; 4], vec![15; 4]).with_mask(|x| {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        (0.3..=1.0).contains(&r)
    });
    let cone = |x: &[f64]| lo.value(x);
    let opts = NewtonOptions::default();
    let at_cone = graph_newton_solve(&mesh, 3, cone, cone, &opts).unwrap();
    assert!(at_cone.residual < 1e-6);
    let bumped = |x: &[f64]| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let bump = 0.05 * (1.0 - r2) * (r2 - 0.09);
        lo.value(x).into_iter().enumerate().map(|(a, v)| v + bump * (a as f64 + 1.0)).collect()
    };
    let back = graph_newton_solve(&mesh, 3, cone, bumped, &opts).unwrap();
    assert!(back.residual < 1e-6);
    let gap = mesh
        .active_nodes()
        .into_iter()
        .flat_map(|i| at_cone.get(i).iter().zip(back.get(i)).map(|(a, b)| (a - b).abs()).collect::<Vec<_>>())
        .fold(0.0, f64::max);
    assert!(gap < 1e-6, "perturbed start ends {gap:e} away");
    // the discrete solution stays within truncation error of the cone
    assert!(at_cone.max_error(cone) < 0.05);
}

#[test]
fn fixed_point_on_a_flat_strip_matches_the_newton_graph() {
    let s = flat_strip([61, 21]);
    let data = |x: &[f64]| 0.15 * (x[0] * 1.3).sin() * (1.0 + x[1]) + 0.1 * x[1] * x[1];
    let normal = s.geometry.node(0).normals[0][2];
    let psi = field(&s, |x| vec![normal * data(x)]);
    let cfg = FixedPointConfig { tol: 1e-11, ..Default::default() };
    let (st, e) = fixed_point_run(&s, &BoundaryData::Fixed(psi), &cfg).unwrap();
    assert!(st.converged, "{e:?} {}", st.trace_jsonl());
    let ratios = st.contraction_ratios();
    assert!(ratios.iter().all(|r| *r < 1.0), "{ratios:?}");
    let newton = graph_newton_solve(&s.mesh, 1, |x| vec![data(x)], |_| vec![0.0], &NewtonOptions { tol: 1e-11, ..Default::default() }).unwrap();
    let err = s
        .mesh
        .active_nodes()
        .into_iter()
        .map(|i| (s.geometry.ambient_vector(i, st.u.get(i))[2] - newton.get(i)[0]).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-6, "fixed point vs Newton: {err:e}");
}

#[test]
fn fixed_point_contracts_on_the_toy_bridge() {
    let s = toy_bridge(0.05);
    let eps = 0.05;
    let psi = field(&s, |x| vec![0.05 * eps * (x[0] / eps + 0.5 * x[1] / eps).cos() * (1.0 + x[2])]);
    let cfg = FixedPointConfig { tol: 1e-11, max_iter: 20, ..Default::default() };
    let (st, err) = fixed_point_run(&s, &BoundaryData::Fixed(psi), &cfg).unwrap();
    let ratios = st.contraction_ratios();
    assert!(ratios.len() >= 2, "{}", st.trace_jsonl());
    assert!(ratios[1..].iter().all(|r| *r < 1.0), "{ratios:?}");
    assert!(err.is_none() && st.converged, "{err:?}");
}

#[test]
fn perturbed_frames_stay_orthonormal_and_normal() {
    let s = clifford_annulus(12, 16);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut ratios = Vec::new();
    for _ in 0..10 {
        let (amp, k1, k2, ph): (f64, f64, f64, f64) = (rng.gen_range(0.005..0.05), rng.gen_range(1..4) as f64, rng.gen_range(0..3) as f64, rng.gen_range(0.0..PI));
        let u = field(&s, |x| vec![amp * x[0] * (k1 * x[1] + ph).sin() * (k2 * x[2]).cos()]);
        let f = perturbed_normal_frame(&s, &u).unwrap();
        assert!(f.orthonormality_defect() < 1e-10);
        assert!(f.normality_defect() < 1e-8);
        ratios.push(f.xi_ratio());
    }
    let worst = ratios.iter().copied().fold(0.0, f64::max);
    assert!(worst < 1.5, "{ratios:?}");
}

/// Torus (a cos s₁, a sin s₁, b cos s₂, b sin s₂) with a² + b² = 1, a ≠ b.
struct SkewTorus(f64);

impl SmoothMap for SkewTorus {
    fn dim(&self) -> usize {
        2
    }
    fn ambient_dim(&self) -> usize {
        4
    }
    fn map<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let (a, b) = (self.0.cos(), self.0.sin());
        vec![x[0].cos() * a, x[0].sin() * a, x[1].cos() * b, x[1].sin() * b]
    }
}

#[test]
fn mode_control_kills_the_boundary_modes_near_the_vertex() {
    let spec = ConeSpec::new(
        DVector::zeros(4),
        arc_chart(SkewTorus(PI / 4.0 + 0.03)),
        ParamBox::new(vec![0.0, 0.0], vec![2.0 * PI, 2.0 * PI]),
        vec![true, true],
        (0.3, 1.0),
        LinkKind::Custom,
    )
    .unwrap();
    let mesh = GridMesh::new(vec![0.3, 0.0, 0.0], vec![1.0, 2.0 * PI, 2.0 * PI], vec![15, 16, 16], vec![false, true, true]);
    let s = DiscreteSurface::new(cone_patch(&spec).unwrap(), mesh).unwrap();
    assert!(s.h0.sup_norm() > 1e-3);
    let clifford = ConeSpec::clifford();
    let link = build_link_mesh(&clifford, 8).unwrap();
    let modes = lowest_eigenvalues(&link, 3, 1).unwrap();
    let q = clifford.link.eval(&[0.4, 0.4]);
    let fam = boundary_family(&link, &modes, 3, 2.0, 0.05, &[q], 0.02).unwrap();
    let control = ModeControl { family: &fam, vertex: DVector::zeros(4), rotation: DMatrix::identity(4, 4), annulus: (0.3, 0.45) };
    let st = fixed_point_solve(&s, &BoundaryData::Family(control), &FixedPointConfig::default()).unwrap();
    assert!(st.converged);
    assert!(st.u.sup_norm() > 1e-4);
    let killed = st.modes.iter().map(|m| m.abs()).fold(0.0, f64::max);
    assert!(killed < 1e-6 * st.u.sup_norm(), "modes {:?}", st.modes);
    assert!(st.monitors.weighted_sup.is_some());
    assert!(st.history.iter().all(|r| r.decay_fit.is_some()));
}
