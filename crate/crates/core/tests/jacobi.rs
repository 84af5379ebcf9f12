use conebridge::cones::{cone_patch, ConeSpec};
use conebridge::fit::loglog_fit;
use conebridge::geometry::grid::{apply_stability_operator, GridMesh, NodeKind, NormalSectionField, StencilForm};
use conebridge::jacobi::*;
use conebridge::spectrum::{build_link_mesh, lowest_eigenvalues, LinkMesh, SpectrumResult};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn exponents_satisfy_indicial_identity() {
    for n in 3..10 {
        for mu in [-0.5, 0.0, 0.7, 3.0, 11.0, 40.0] {
            if let Ok(e) = exponents(n, mu) {
                assert!(e.indicial_defect() <= 1e-12 * (1.0 + mu.abs()));
                assert!((e.gamma_plus + e.gamma_minus - (2.0 - n as f64)).abs() < 1e-12);
                assert!((e.gamma_plus * e.gamma_minus + mu).abs() < 1e-11);
            }
        }
    }
}

#[test]
fn monomial_sources_match_closed_form() {
    let r = geometric_grid(0.01, 1.0, 40);
    // below cutoff: n=7, μ=−6, σ ∈ {2, 0.5}; above cutoff: μ=10, σ = 0.5
    for (mu, sigma, cutoff) in [(-6.0, 2.0, 1), (-6.0, 0.5, 1), (10.0, 0.5, 0), (10.0, -1.5, 0)] {
        let m = JacobiMode::new(1, 7, mu, cutoff).unwrap();
        let f = move |s: f64| s.powf(sigma);
        let got = particular_solution(&m, &f, &r).unwrap();
        for (ri, g) in r.iter().zip(&got) {
            let want = monomial_particular(&m, sigma, *ri);
            assert!((g - want).abs() <= 1e-8 * want.abs().max(1e-300), "μ={mu} σ={sigma} r={ri}: {g} vs {want}");
        }
    }
}

#[test]
fn particular_solutions_solve_the_ode() {
    let r = geometric_grid(0.05, 1.0, 12);
    let cases: Vec<(usize, f64, usize, Box<dyn Fn(f64) -> f64 + Sync>)> = vec![
        (7, -6.0, 1, Box::new(|s: f64| s * s)),
        (7, 10.0, 0, Box::new(|s: f64| s.sqrt() * (1.0 + s).ln())),
        (4, 4.0, 1, Box::new(|s: f64| s.powf(1.3) * (3.0 * s).cos())),
        (3, 2.0, 0, Box::new(|s: f64| (-s).exp())),
    ];
    for (n, mu, cutoff, f) in &cases {
        let m = JacobiMode::new(1, *n, *mu, *cutoff).unwrap();
        for &ri in &r {
            let res = ode_residual_fd(&m, f.as_ref(), ri).unwrap();
            assert!(res < 1e-5, "n={n} μ={mu} r={ri}: {res}");
        }
    }
}

fn s2_spectrum(modes: usize) -> (LinkMesh, SpectrumResult) {
    let mesh = build_link_mesh(&ConeSpec::equatorial(2, 4), 16).unwrap();
    let spec = lowest_eigenvalues(&mesh, modes, 3).unwrap();
    (mesh, spec)
}

#[test]
fn projection_recovers_coefficients() {
    let (mesh, spec) = s2_spectrum(16);
    let radii = geometric_grid(0.1, 1.0, 5);
    let field = RadialSectionField { radii: radii.clone(), values: vec![spec.eigensections[0].clone(); 5] };
    let f = mode_projection(&field, &mesh, &spec);
    for ri in 0..5 {
        assert!((f[0][ri] - 1.0).abs() < 1e-8);
        assert!(f[1..].iter().all(|c| c[ri].abs() < 1e-8));
    }
    let combo: Vec<f64> =
        spec.eigensections[1].iter().zip(&spec.eigensections[4]).map(|(a, b)| 3.0 * a + 0.5 * b).collect();
    let field = RadialSectionField { radii, values: vec![combo; 5] };
    let f = mode_projection(&field, &mesh, &spec);
    assert!((f[1][2] - 3.0).abs() < 1e-8 && (f[4][2] - 0.5).abs() < 1e-8);
}

#[test]
fn bessel_inequality_and_shrinking_defect() {
    let (mesh, spec) = s2_spectrum(16);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..3 {
        let c: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
        // smooth field: a random quadratic polynomial restricted to S²
        let vals: Vec<f64> = mesh
            .points
            .iter()
            .map(|p| {
                c[0] + c[1] * p[0] + c[2] * p[1] + c[3] * p[2] + c[4] * p[0] * p[1] + c[5] * p[1] * p[2]
                    + c[6] * p[0] * p[2] + c[7] * p[0] * p[0] + c[8] * p[1] * p[1] + c[9] * p[2] * p[2]
            })
            .collect();
        let field = RadialSectionField { radii: vec![1.0], values: vec![vals.clone()] };
        let f = mode_projection(&field, &mesh, &spec);
        let total = mesh.inner(&vals, &vals);
        let mut partial = 0.0;
        let mut prev_gap = f64::INFINITY;
        for fj in &f {
            partial += fj[0] * fj[0];
            let gap = total - partial;
            assert!(partial <= total * (1.0 + 1e-6));
            assert!(gap <= prev_gap + 1e-12);
            prev_gap = gap;
        }
        assert!(prev_gap / total < 1e-4, "defect {}", prev_gap / total);
    }
}

#[test]
fn expansion_round_trip() {
    let (mesh, spec) = s2_spectrum(16);
    let modes: Vec<JacobiMode> =
        spec.mu.iter().enumerate().map(|(j, &mu)| JacobiMode::new(j + 1, 3, mu.max(0.0), 4).unwrap()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let alphas: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let radii = geometric_grid(0.01, 1.0, 7);
    let u = assemble_expansion(&modes, &alphas, None, &radii, &spec).unwrap();
    let f = mode_projection(&u, &mesh, &spec);
    for (j, m) in modes.iter().enumerate() {
        for (ri, r) in radii.iter().enumerate() {
            let want = alphas[j] * r.powf(m.exponents.gamma_plus);
            assert!((f[j][ri] - want).abs() < 1e-8, "mode {j}");
        }
    }
    let zero = assemble_expansion(&modes, &vec![0.0; 16], None, &radii, &spec).unwrap();
    assert!(zero.values.iter().flatten().all(|v| *v == 0.0));
    // the ground mode of the flat cone is a constant section
    let mut a1 = vec![0.0; 16];
    a1[0] = 1.0;
    let c = assemble_expansion(&modes, &a1, None, &radii, &spec).unwrap();
    let v0 = c.values[0][0];
    assert!(c.values.iter().flatten().all(|v| (v - v0).abs() < 1e-8));
}

#[test]
fn assembled_expansion_decays_at_rate_nu() {
    let (mesh, spec) = s2_spectrum(9);
    let nu = 1.5;
    let gammas: Vec<f64> = spec.mu.iter().map(|&mu| exponents(3, mu.max(0.0)).unwrap().gamma_plus).collect();
    let cutoff = choose_mode_cutoff(nu, &gammas).unwrap();
    assert_eq!(cutoff, 4);
    let modes: Vec<JacobiMode> =
        spec.mu.iter().enumerate().map(|(j, &mu)| JacobiMode::new(j + 1, 3, mu.max(0.0), cutoff).unwrap()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let radii = geometric_grid(0.05, 0.5, 10);
    let alphas: Vec<f64> = (0..9).map(|j| if j < cutoff { 0.0 } else { rng.gen_range(-1.0..1.0) }).collect();
    let parts: Vec<Vec<f64>> = modes
        .iter()
        .map(|m| {
            let c = rng.gen_range(0.5..1.5);
            let f = move |r: f64| c * r.powf(nu - 1.5);
            particular_solution(m, &f, &radii).unwrap()
        })
        .collect();
    let u = assemble_expansion(&modes, &alphas, Some(&parts), &radii, &spec).unwrap();
    let fit = loglog_fit(&radii, &u.slice_norms(&mesh)).unwrap();
    assert!(fit.slope >= nu - 0.1, "{fit:?}");
}

#[test]
fn simons_cutoff_from_exponent_list() {
    // spectrum of −L on S³(1/√2)×S³(1/√2): 2(l(l+2) + l'(l'+2)) − 6
    let mut mus: Vec<f64> = Vec::new();
    for l in 0..4 {
        for lp in 0..4 {
            mus.push(2.0 * (l * (l + 2) + lp * (lp + 2)) as f64 - 6.0);
        }
    }
    mus.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let gammas: Vec<f64> = mus.iter().map(|&mu| exponents(7, mu).unwrap().gamma_plus).collect();
    let j = choose_mode_cutoff(2.0, &gammas).unwrap();
    assert!(gammas[j - 1] < 2.0 && 2.0 <= gammas[j]);
    assert_eq!(gammas[0], -2.0);
}

#[test]
fn mode_table_and_profile_class() {
    let modes = vec![JacobiMode::new(1, 7, -6.0, 1).unwrap(), JacobiMode::new(2, 7, 0.0, 1).unwrap()];
    let csv = mode_table_csv(&modes, &[1.0, 0.0]);
    assert!(csv.starts_with("j,mu_j,gamma_plus,gamma_minus,alpha_j\n1,"));
    assert_eq!(csv.lines().count(), 3);
    let ex = modes[0].exponents;
    let r = geometric_grid(0.05, 1.0, 20);
    let good: Vec<f64> = r.iter().map(|x| 2.0 * x.powf(ex.gamma_plus)).collect();
    let fit = fit_radial_profile(&ex, &r, &good);
    assert!((fit.alpha - 2.0).abs() < 1e-8 && !fit.out_of_class);
    let bad: Vec<f64> = r.iter().map(|x| x.powf(ex.gamma_plus) + 0.1 * x.powf(ex.gamma_minus)).collect();
    assert!(fit_radial_profile(&ex, &r, &bad).out_of_class);
}

#[test]
fn homogeneous_jacobi_fields_on_clifford_cone() {
    // U = r^γ cos(kθ₁) ν with μ = 2k² − 2, γ = γ₊(3, μ)
    let spec = ConeSpec::clifford().with_radial_range(0.5, 1.0);
    let patch = cone_patch(&spec).unwrap();
    for k in [1.0f64, 2.0] {
        let g = exponents(3, 2.0 * k * k - 2.0).unwrap().gamma_plus;
        let mut errs = Vec::new();
        let mut hs = Vec::new();
        for m in [16usize, 32] {
            let tau = 2.0 * std::f64::consts::PI;
            let mesh = GridMesh::new(vec![0.5, 0.0, 0.0], vec![1.0, tau, tau], vec![m / 2 + 1, m, m], vec![false, true, true]);
            let u = NormalSectionField::from_fn(mesh.len(), 1, |i| {
                let x = mesh.coords(i);
                vec![x[0].powf(g) * (k * x[1]).cos()]
            });
            let lu = apply_stability_operator(&patch, &mesh, &u, StencilForm::Covariant).unwrap();
            let worst = mesh.nodes_of(NodeKind::Interior).iter().map(|&i| lu.get(i)[0].abs()).fold(0.0, f64::max);
            errs.push(worst);
            hs.push(mesh.spacing(1));
        }
        let fit = loglog_fit(&hs, &errs).unwrap();
        assert!(fit.slope >= 1.8, "k={k}: {errs:?}");
    }
}
