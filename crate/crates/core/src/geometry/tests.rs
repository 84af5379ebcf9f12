use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::charts::*;
use super::grid::*;
use super::*;

fn patch<C: Chart + 'static>(c: C, lo: f64, hi: f64) -> ImmersionPatch {
    let n = c.dim();
    ImmersionPatch::new(Arc::new(c), ParamBox::cube(n, lo, hi))
}

fn random_rotation(k: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let m = DMatrix::from_fn(k, k, |_, _| rng.gen_range(-1.0..1.0));
    m.qr().q()
}

#[test]
fn flat_plane_identity_geometry() {
    let p = patch(Plane { n: 2, ambient: 4 }, -1.0, 1.0);
    let (m, f) = p.geometry_at(&[0.3, -0.2]).unwrap();
    assert!((m.g.clone() - DMatrix::identity(2, 2)).norm() < 1e-15);
    assert_eq!(f.normals[0], DVector::from_vec(vec![0.0, 0.0, 1.0, 0.0]));
    assert_eq!(f.normals[1], DVector::from_vec(vec![0.0, 0.0, 0.0, 1.0]));
    assert!(f.connection.iter().all(|b| b.abs() < 1e-12));
    let s = p.second_fundamental_form_at(&[0.3, -0.2], &f).unwrap();
    assert_eq!(s.norm_sq, 0.0);
    assert!(p.mean_curvature_at(&[0.1, 0.1]).unwrap().norm() == 0.0);
    assert_eq!(p.apply_simons(&[0.0, 0.0], &[1.0, -2.0]).unwrap(), vec![0.0, 0.0]);
}

#[test]
fn out_of_domain_is_reported() {
    let p = patch(Plane { n: 2, ambient: 3 }, 0.0, 1.0);
    assert!(matches!(p.geometry_at(&[1.5, 0.0]), Err(Error::OutOfDomain { .. })));
}

#[test]
fn rank_deficiency_is_reported() {
    let c = FnChart::new(2, 3, |x: &[f64]| DVector::from_vec(vec![x[0], x[0], 0.0]));
    let p = ImmersionPatch::new(Arc::new(c), ParamBox::cube(2, -1.0, 1.0));
    assert!(matches!(p.geometry_at(&[0.1, 0.2]), Err(Error::RankDeficient { .. })));
}

#[test]
fn sphere_at_pole() {
    for n in [2, 3, 4] {
        let rho = 1.7;
        let p = patch(SphereGraph { n, radius: rho }, -0.5, 0.5);
        let x = vec![0.0; n];
        let (m, _) = p.geometry_at(&x).unwrap();
        assert!((m.sqrt_det_g - 1.0).abs() < 1e-14);
        assert!((m.g.clone() * &m.g_inv - DMatrix::identity(n, n)).norm() < 1e-12);
        let h = p.mean_curvature_at(&[0.1; 4][..n]).unwrap();
        assert!((h.norm() - n as f64 / rho).abs() < 1e-6);
    }
}

#[test]
fn classical_minimal_surfaces() {
    let cat = patch(Catenoid, -1.0, 1.0);
    let zz = ImmersionPatch::new(Arc::new(GraphChart::new(Arc::new(ZSquared))), ParamBox::cube(2, -1.0, 1.0));
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let x = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        assert!(cat.mean_curvature_at(&x).unwrap().norm() < 1e-6);
        assert!(zz.mean_curvature_at(&x).unwrap().norm() < 1e-6);
    }
    let cyl = patch(Cylinder { radius: 0.4 }, -1.0, 1.0);
    assert!((cyl.mean_curvature_at(&[0.2, 0.3]).unwrap().norm() - 2.5).abs() < 1e-12);
}

#[test]
fn fd_jets_minimality_oracle() {
    let zz = ImmersionPatch::new(Arc::new(GraphChart::new(Arc::new(ZSquared))), ParamBox::cube(2, -1.0, 1.0))
        .with_jet_mode(JetMode::FiniteDifference { step: 1e-3, richardson: 1 });
    let cat = patch(Catenoid, -1.0, 1.0).with_jet_mode(JetMode::FiniteDifference { step: 1e-3, richardson: 0 });
    for x in [[0.1, 0.5], [-0.7, 0.2], [0.9, -0.9]] {
        assert!(zz.mean_curvature_at(&x).unwrap().norm() < 1e-3);
        assert!(cat.mean_curvature_at(&x).unwrap().norm() < 1e-3);
    }
}

#[test]
fn divergence_form_agrees() {
    let p = patch(SphereGraph { n: 3, radius: 2.0 }, -0.6, 0.6);
    let x = [0.2, -0.1, 0.3];
    let a = p.mean_curvature_at(&x).unwrap();
    let b = p.mean_curvature_divergence_form(&x, 1e-3).unwrap();
    assert!((a - b).norm() < 1e-7);
}

#[test]
fn fd_convergence_orders() {
    // errors of second derivatives at three steps; slopes ≈ 2 and ≈ 4
    let p = patch(Catenoid, -2.0, 2.0);
    let x = [0.4, 0.6];
    let exact = p.jet(&x).unwrap();
    let err = |h: f64, lv: usize| {
        let q = p.clone().with_jet_mode(JetMode::FiniteDifference { step: h, richardson: lv });
        let j = q.jet(&x).unwrap();
        j.second.iter().zip(&exact.second).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    };
    for (lv, order) in [(0usize, 2.0), (1, 4.0)] {
        let hs = [0.1, 0.05, 0.025];
        let es: Vec<f64> = hs.iter().map(|&h| err(h, lv)).collect();
        let fit = crate::fit::loglog_fit(&hs, &es).unwrap();
        assert!((fit.slope - order).abs() < 0.15 * order, "level {lv}: slope {}", fit.slope);
    }
}

#[test]
fn frame_invariants_and_covariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // a generic codimension-2 surface with curvature
    let c = FnChart::new(2, 4, |x: &[f64]| {
        DVector::from_vec(vec![x[0], x[1], (x[0] * x[1]).sin() + 0.3 * x[0] * x[0], (x[0] - x[1]).exp() * 0.2])
    });
    let p = ImmersionPatch::new(Arc::new(c), ParamBox::cube(2, -1.0, 1.0));
    for _ in 0..10 {
        let x = [rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8)];
        let pg = p.point_geometry(&x).unwrap();
        let k = pg.frame.codim();
        for a in 0..k {
            for b in 0..k {
                let d = pg.frame.normals[a].dot(&pg.frame.normals[b]);
                assert!((d - if a == b { 1.0 } else { 0.0 }).abs() < 1e-10);
                for i in 0..2 {
                    assert!((pg.frame.b(a, b, i) + pg.frame.b(b, a, i)).abs() < 1e-6);
                }
            }
            for t in &pg.jet.first {
                assert!(pg.frame.normals[a].dot(t).abs() < 1e-10);
            }
        }
        for a in 0..k {
            for i in 0..2 {
                for j in 0..2 {
                    assert_eq!(pg.sff.get(a, i, j), pg.sff.get(a, j, i));
                }
            }
        }
        // rotated frame gives the same |A|², H and Simons action as an ambient map
        let r = random_rotation(k, &mut rng);
        let rotated: Vec<DVector<f64>> = (0..k)
            .map(|a| {
                let mut v = DVector::zeros(4);
                for b in 0..k {
                    v.axpy(r[(b, a)], &pg.frame.normals[b], 1.0);
                }
                v
            })
            .collect();
        let f2 = NormalFrame { normals: rotated, connection: vec![0.0; 2 * k * k] };
        let s2 = p.sff_from(&pg.jet, &pg.metric, &f2);
        assert!((s2.norm_sq - pg.sff.norm_sq).abs() < 1e-9);
        assert!((s2.mean_curvature.clone() - &pg.sff.mean_curvature).norm() < 1e-9);
        let u_amb = DVector::from_vec(vec![0.0, 0.0, 0.7, -0.4]);
        let u_amb = pg.frame.project(&u_amb);
        let act = |f: &NormalFrame, s: &SecondFundamentalForm| {
            let u = f.coefficients(&u_amb);
            let m = s.simons_matrix(&pg.metric);
            let v: Vec<f64> = (0..k).map(|a| (0..k).map(|b| m[(a, b)] * u[b]).sum()).collect();
            f.compose(&v)
        };
        assert!((act(&pg.frame, &pg.sff) - act(&f2, &s2)).norm() < 1e-9);
        // pointwise self-adjointness of Simons' operator
        let m = pg.sff.simons_matrix(&pg.metric);
        assert!((m.clone() - m.transpose()).norm() < 1e-10);
    }
}

#[test]
fn stability_operator_on_plane_kills_affine() {
    let p = patch(Plane { n: 2, ambient: 4 }, -1.0, 1.0);
    let mesh = GridMesh::uniform(vec![-1.0, -1.0], vec![1.0, 1.0], vec![11, 11]);
    let u = NormalSectionField::from_fn(mesh.len(), 2, |i| {
        let x = mesh.coords(i);
        vec![1.0 + 2.0 * x[0] - x[1], 0.5 * x[1]]
    });
    for form in [StencilForm::Covariant, StencilForm::Ambient] {
        let lu = apply_stability_operator(&p, &mesh, &u, form).unwrap();
        assert!(lu.sup_norm() < 1e-12);
    }
    let mut bad = u.clone();
    bad.values[0] = f64::NAN;
    assert!(matches!(
        apply_stability_operator(&p, &mesh, &bad, StencilForm::Covariant),
        Err(Error::BoundaryDataMissing { node: 0 })
    ));
}

#[test]
fn stability_operator_forms_agree_and_are_nearly_symmetric() {
    // spherical cap in R^4 with a codimension-2 twist
    let c = FnChart::new(2, 4, |x: &[f64]| {
        let r2 = x[0] * x[0] + x[1] * x[1];
        DVector::from_vec(vec![x[0], x[1], (4.0 - r2).sqrt(), 0.3 * x[0] * x[1]])
    });
    let p = ImmersionPatch::new(Arc::new(c), ParamBox::cube(2, -0.5, 0.5));
    let bump = |x: &[f64]| ((1.0 - 4.0 * x[0] * x[0]) * (1.0 - 4.0 * x[1] * x[1])).max(0.0).powi(3);
    let mut errs = Vec::new();
    let mut asym = Vec::new();
    for m in [17usize, 33] {
        let mesh = GridMesh::uniform(vec![-0.5, -0.5], vec![0.5, 0.5], vec![m, m]);
        let geom = MeshGeometry::build(&p, &mesh, true).unwrap();
        let u = NormalSectionField::from_fn(mesh.len(), 2, |i| {
            let x = mesh.coords(i);
            vec![bump(&x), bump(&x) * x[0]]
        });
        let v = NormalSectionField::from_fn(mesh.len(), 2, |i| {
            let x = mesh.coords(i);
            vec![bump(&x) * x[1], -bump(&x)]
        });
        let lc = apply_with(&geom, &mesh, &u, StencilForm::Covariant).unwrap();
        let la = apply_with(&geom, &mesh, &u, StencilForm::Ambient).unwrap();
        let diff = lc.values.iter().zip(&la.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        errs.push(diff);
        let inner = mesh.nodes_of(NodeKind::Interior);
        let lv = apply_with(&geom, &mesh, &v, StencilForm::Covariant).unwrap();
        let a = geom.inner(&mesh, &lc, &v, &inner);
        let b = geom.inner(&mesh, &u, &lv, &inner);
        asym.push((a - b).abs() / a.abs().max(b.abs()));
    }
    assert!(errs[1] < errs[0] / 3.0, "{errs:?}");
    // symmetric up to the O(h²) discretisation error
    assert!(asym[1] < asym[0] / 3.0, "{asym:?}");
}
