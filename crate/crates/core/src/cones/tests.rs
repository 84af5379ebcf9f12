use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::geometry::ad::SmoothMap;
use crate::geometry::charts::{AffineMap, GraphChart, ZSquared};

fn random_s3(rng: &mut ChaCha8Rng) -> [f64; 4] {
    loop {
        let v: [f64; 4] = [0; 4].map(|_: i32| rng.gen_range(-1.0..1.0));
        let r = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if r > 0.1 && r < 1.0 {
            return v.map(|a| a / r);
        }
    }
}

#[test]
fn hopf_map_values() {
    assert_eq!(hopf(&[1.0, 0.0, 0.0, 0.0]), [0.0, 0.0, 1.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let w = random_s3(&mut rng);
        let e = hopf(&w);
        assert!((e.iter().map(|a| a * a).sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn lo_link_point() {
    let (g, _) = lawson_osserman_cone();
    let x = [1.0, 0.0, 0.0, 0.0];
    let u = g.value(&x);
    let mut p: Vec<f64> = x.to_vec();
    p.extend(&u);
    let r = p.iter().map(|a| a * a).sum::<f64>().sqrt();
    let link: Vec<f64> = p.iter().map(|a| a / r).collect();
    let expect = [2.0 / 3.0, 0.0, 0.0, 0.0, 0.0, 0.0, 5f64.sqrt() / 3.0];
    for (a, b) in link.iter().zip(&expect) {
        assert!((a - b).abs() < 1e-15);
    }
    // the Hopf-coordinate link chart at ξ = 0 hits the same point
    let w = LawsonOssermanLink.map(&[0.0, 0.0, 0.0]);
    for (a, b) in w.iter().zip(&expect) {
        assert!((a - b).abs() < 1e-15);
    }
}

#[test]
fn lo_graph_geometry_at_unit_point() {
    let (g, _) = lawson_osserman_cone();
    let patch = ImmersionPatch::new(Arc::new(GraphChart::new(g.u.clone())), ParamBox::cube(4, -1.0, 1.0));
    let (m, f) = patch.geometry_at(&[1.0, 0.0, 0.0, 0.0]).unwrap();
    assert!((m.g.clone() - m.g.transpose()).norm() == 0.0);
    assert!(m.g.clone().symmetric_eigen().eigenvalues.min() > 0.0);
    assert!((m.g.clone() * &m.g_inv - DMatrix::identity(4, 4)).norm() < 1e-10);
    assert_eq!(f.codim(), 3);
}

#[test]
fn lo_minimality_analytic_and_fd() {
    let (g, _) = lawson_osserman_cone();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    let mut worst_fd = 0.0f64;
    for i in 0..2000 {
        let w = random_s3(&mut rng);
        let r = rng.gen_range(0.1..1.0);
        let x: Vec<f64> = w.iter().map(|a| a * r).collect();
        let res = g.mss_residual(&x).unwrap();
        worst = worst.max(res.iter().map(|a| a.abs()).fold(0.0, f64::max));
        if i % 10 == 0 {
            let fd = graph::mss_residual_fd(g.u.as_ref(), &x, 1e-3);
            worst_fd = worst_fd.max(fd.iter().map(|a| a.abs()).fold(0.0, f64::max));
        }
    }
    assert!(worst < 1e-5, "{worst}");
    assert!(worst_fd < 1e-3, "{worst_fd}");
    assert_eq!(g.mss_residual(&[0.0; 4]), Err(Error::SingularPoint));
}

#[test]
fn lo_cone_patch_is_minimal() {
    let (_, patch) = lawson_osserman_cone();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..100 {
        let x: Vec<f64> = (0..4).map(|a| rng.gen_range(patch.domain.lower[a]..patch.domain.upper[a])).collect();
        assert!(patch.mean_curvature_at(&x).unwrap().norm() < 1e-8);
    }
}

#[test]
fn holomorphic_and_affine_residuals() {
    let z = ZSquared;
    for i in 0..21 {
        for j in 0..21 {
            let x = [-1.0 + 0.1 * i as f64, -1.0 + 0.1 * j as f64];
            if x[0] * x[0] + x[1] * x[1] <= 1.0 {
                assert!(mss_residual(&z, &x, None).unwrap().iter().all(|v| v.abs() < 1e-8));
            }
        }
    }
    let a = AffineMap { b: vec![1.0, 2.0], m: vec![vec![0.5, -1.0, 2.0], vec![3.0, 0.0, 1.0]] };
    assert!(mss_residual(&a, &[0.3, 0.1, -0.7], None).unwrap().iter().all(|v| *v == 0.0));
}

#[test]
fn lo_dilation_of_residual_direction() {
    // a non-minimal homogeneous map so the residual is not zero
    struct Skew;
    impl crate::geometry::ad::SmoothMap for Skew {
        fn dim(&self) -> usize {
            2
        }
        fn ambient_dim(&self) -> usize {
            1
        }
        fn map<T: crate::geometry::ad::Scalar>(&self, x: &[T]) -> Vec<T> {
            vec![(x[0] * x[0] * 2.0 + x[1] * x[1]).sqrt()]
        }
    }
    let g = GraphCone { u: Arc::new(crate::geometry::ad::AdGraph(Skew)), singular_point: vec![0.0, 0.0] };
    let x = [0.4, -0.3];
    let r = g.mss_residual(&x).unwrap()[0];
    assert!(r.abs() > 1e-3);
    for lambda in [0.5, 2.0] {
        let y = [x[0] * lambda, x[1] * lambda];
        let ry = g.mss_residual(&y).unwrap()[0];
        assert!((ry - r / lambda).abs() < 1e-12);
        assert!(g.homogeneity_defect(&x, lambda).unwrap() < 1e-10);
    }
}

proptest! {
    #[test]
    fn lo_homogeneity(a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0, d in -1.0f64..1.0, l in 0.1f64..5.0) {
        prop_assume!(a * a + b * b + c * c + d * d > 0.01);
        let (g, _) = lawson_osserman_cone();
        prop_assert!(g.homogeneity_defect(&[a, b, c, d], l).unwrap() < 1e-10);
    }
}

#[test]
fn clifford_cone_is_minimal_and_truncates() {
    let spec = ConeSpec::clifford().truncated(0.3);
    let patch = cone_patch(&spec).unwrap();
    assert_eq!(patch.domain.lower[0], 0.3);
    assert_eq!(patch.domain.upper[0], 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let x: Vec<f64> = (0..3).map(|a| rng.gen_range(patch.domain.lower[a]..patch.domain.upper[a])).collect();
        assert!(patch.mean_curvature_at(&x).unwrap().norm() < 1e-6);
    }
    // the two boundary circles sit at radii 0.3 and 1
    for t in [0.3, 1.0] {
        let p = patch.eval(&[t, 0.1, 2.0]);
        assert!((p.norm() - t).abs() < 1e-14);
    }
}

#[test]
fn equatorial_cone_is_flat() {
    let spec = ConeSpec::equatorial(2, 5);
    let patch = cone_patch(&spec).unwrap();
    let pg = patch.point_geometry_static(&[0.5, 1.0, 2.0]).unwrap();
    assert!(pg.sff.norm_sq < 1e-24);
    assert!(link_geometry(spec.link.as_ref(), &[1.0, 2.0]).unwrap().a_norm_sq < 1e-24);
}

#[test]
fn non_unit_link_rejected() {
    let link = crate::geometry::ad::arc_chart(links::EquatorialLink { k: 1, ambient: 3 });
    let scaled = crate::geometry::FnChart::new(1, 3, move |s: &[f64]| link.eval(s) * 1.5);
    let r = ConeSpec::new(
        DVector::zeros(3),
        Arc::new(scaled),
        ParamBox::new(vec![0.0], vec![6.0]),
        vec![true],
        (0.1, 1.0),
        LinkKind::Custom,
    );
    assert!(matches!(r, Err(Error::DegenerateLink(_))));
}

#[test]
fn product_links_are_minimal_with_constant_curvature() {
    for (p, q) in [(1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3), (1, 4)] {
        let spec = ConeSpec::product_spheres(p, q);
        for s in spec.link_samples(3) {
            let lg = link_geometry(spec.link.as_ref(), &s).unwrap();
            assert!(lg.mean_curvature.norm() < 1e-8, "({p},{q})");
            assert!((lg.a_norm_sq - (p + q) as f64).abs() < 1e-9);
        }
    }
}

#[test]
fn cone_scaling_examples() {
    let clifford = ConeSpec::clifford();
    let samples: Vec<(f64, Vec<f64>)> = [0.5, 1.0, 2.0].iter().map(|&r| (r, vec![0.7, 2.1])).collect();
    let rep = verify_cone_scaling(&clifford, &samples, 1e-8).unwrap();
    assert!(rep.max_error < 1e-8);
    let simons = ConeSpec::simons();
    let s = simons.link_samples(2)[5].clone();
    let rep = verify_cone_scaling(&simons, &[(0.25, s)], 1e-6).unwrap();
    assert!(rep.max_error < 1e-6);
    let flat = ConeSpec::equatorial(2, 4);
    let rep = verify_cone_scaling(&flat, &[(0.5, vec![1.0, 1.0])], 1e-12).unwrap();
    assert!(rep.values[0].1.abs() < 1e-12 && rep.values[0].2.abs() < 1e-12);
}

#[test]
fn simons_operator_on_codim_one_cone() {
    let spec = ConeSpec::product_spheres(2, 3);
    let patch = cone_patch(&spec).unwrap();
    let s = [1.0, 0.5, 1.2, 2.0, 0.3];
    let mut x = vec![1.0];
    x.extend(s);
    let a2 = link_geometry(spec.link.as_ref(), &s).unwrap().a_norm_sq;
    let out = patch.apply_simons(&x, &[0.8]).unwrap();
    assert!((out[0] - a2 * 0.8).abs() < 1e-10);
}

#[test]
fn simons_form_symmetric_on_lo_cone() {
    let (_, patch) = lawson_osserman_cone();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let x: Vec<f64> = (0..4).map(|a| rng.gen_range(patch.domain.lower[a]..patch.domain.upper[a])).collect();
        let u: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let au = patch.apply_simons(&x, &u).unwrap();
        let av = patch.apply_simons(&x, &v).unwrap();
        let l: f64 = au.iter().zip(&v).map(|(a, b)| a * b).sum();
        let r: f64 = u.iter().zip(&av).map(|(a, b)| a * b).sum();
        assert!((l - r).abs() < 1e-10);
    }
}

#[test]
fn exports() {
    let csv = export_cone_csv(&ConeSpec::clifford(), 3, 4).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 16);
    assert!(csv.starts_with("s0,s1,s2,x0,x1,x2,x3,abs_a,abs_h"));
    let obj = export_cone_obj(&ConeSpec::equatorial(1, 3), 4, 8).unwrap();
    assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 32);
    assert!(export_cone_obj(&ConeSpec::clifford(), 4, 8).is_err());
}
