//! Test problems shared by the solver suite and the `solve` command.

use std::f64::consts::PI;
use std::sync::Arc;

use conebridge::bridges::{mirrored_pair, BridgeVariant, TurningProfile};
use conebridge::cones::graph::lawson_osserman_cone;
use conebridge::cones::{cone_patch, ConeSpec};
use conebridge::geometry::charts::Plane;
use conebridge::geometry::grid::{GridMesh, NormalSectionField};
use conebridge::geometry::{ImmersionPatch, ParamBox};
use conebridge::perturbation::{graph_newton_solve, DiscreteSurface, GraphSolution, NewtonOptions};
use conebridge::Result;

/// The plane z = 0 over [0, 3] × [−1/2, 1/2] in R³.
pub fn flat_strip(counts: [usize; 2]) -> Result<DiscreteSurface> {
    let patch = ImmersionPatch::new(Arc::new(Plane { n: 2, ambient: 3 }), ParamBox::new(vec![0.0, -0.5], vec![3.0, 0.5]));
    DiscreteSurface::new(patch, GridMesh::uniform(vec![0.0, -0.5], vec![3.0, 0.5], counts.to_vec()))
}

pub fn flat_strip_data(x: &[f64]) -> f64 {
    0.15 * (x[0] * 1.3).sin() * (1.0 + x[1]) + 0.1 * x[1] * x[1]
}

/// Clifford cone on 0.3 ≤ r ≤ 1 in polar coordinates.
pub fn clifford_annulus(radial: usize, angular: usize) -> Result<DiscreteSurface> {
    let spec = ConeSpec::clifford().with_radial_range(0.3, 1.0);
    let patch = cone_patch(&spec)?;
    let mesh = GridMesh::new(vec![0.3, 0.0, 0.0], vec![1.0, 2.0 * PI, 2.0 * PI], vec![radial, angular, angular], vec![false, true, true]);
    DiscreteSurface::new(patch, mesh)
}

/// The perturbed strip joining two Clifford cones at width ε.
pub fn toy_bridge(eps: f64) -> Result<DiscreteSurface> {
    let profile = TurningProfile { theta0: 0.0, kappa: 0.0, delta: 0.8, bumps: vec![0.2] };
    let sol = mirrored_pair(&ConeSpec::clifford(), &[0.9, 2.3], profile, 1.5, eps, BridgeVariant::Perturbed)?;
    let strip = sol.bridges[0].strip.clone();
    let (lo, hi) = (strip.domain.lower.clone(), strip.domain.upper.clone());
    let m = ((hi[2] - lo[2]) / (0.5 * (hi[0] - lo[0]) / 4.0)).round() as usize + 1;
    DiscreteSurface::new(strip, GridMesh::uniform(lo, hi, vec![9, 9, m.min(121)]))
}

/// Small oscillating boundary data on the toy bridge.
pub fn toy_bridge_data(eps: f64, x: &[f64]) -> f64 {
    0.05 * eps * (x[0] / eps + 0.5 * x[1] / eps).cos() * (1.0 + x[2])
}

pub fn field<F: Fn(&[f64]) -> Vec<f64>>(s: &DiscreteSurface, f: F) -> NormalSectionField {
    NormalSectionField::from_fn(s.mesh.len(), s.codim(), |i| f(&s.mesh.coords(i)))
}

pub fn z_squared(x: &[f64]) -> Vec<f64> {
    vec![x[0] * x[0] - x[1] * x[1], 2.0 * x[0] * x[1]]
}

/// Newton for the graph of z² on [0, 1]² from a bumped start.
pub fn holomorphic_square(m: usize, opts: &NewtonOptions) -> Result<GraphSolution> {
    let mesh = GridMesh::uniform(vec![0.0; 2], vec![1.0; 2], vec![m, m]);
    let start = |x: &[f64]| {
        let b = 0.1 * (PI * x[0]).sin() * (PI * x[1]).sin();
        vec![x[0] * x[0] - x[1] * x[1] + b, 2.0 * x[0] * x[1] - b]
    };
    graph_newton_solve(&mesh, 2, z_squared, start, opts)
}

pub struct LoAnnulus {
    pub at_cone: GraphSolution,
    pub from_bump: GraphSolution,
    /// Largest nodewise gap between the two solves.
    pub gap: f64,
    /// Distance of the discrete solution from the cone.
    pub cone_distance: f64,
}

/// Lawson–Osserman cone over 0.3 ≤ |x| ≤ 1 in R⁴, solved from the cone
/// itself and from a bumped start.
pub fn lo_annulus(counts: usize, opts: &NewtonOptions) -> Result<LoAnnulus> {
    let (lo, _) = lawson_osserman_cone();
    let mesh = GridMesh::uniform(vec![-1.0; 4], vec![1.0; 4], vec![counts; 4]).with_mask(|x| {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        (0.3..=1.0).contains(&r)
    });
    let cone = |x: &[f64]| lo.value(x);
    let at_cone = graph_newton_solve(&mesh, 3, cone, cone, opts)?;
    let bumped = |x: &[f64]| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let bump = 0.05 * (1.0 - r2) * (r2 - 0.09);
        lo.value(x).into_iter().enumerate().map(|(a, v)| v + bump * (a as f64 + 1.0)).collect()
    };
    let from_bump = graph_newton_solve(&mesh, 3, cone, bumped, opts)?;
    let gap = mesh
        .active_nodes()
        .into_iter()
        .flat_map(|i| at_cone.get(i).iter().zip(from_bump.get(i)).map(|(a, b)| (a - b).abs()).collect::<Vec<_>>())
        .fold(0.0, f64::max);
    let cone_distance = at_cone.max_error(cone);
    Ok(LoAnnulus { at_cone, from_bump, gap, cone_distance })
}

/// Graph solution as CSV: coordinates then values, active nodes only.
pub fn graph_csv(sol: &GraphSolution) -> String {
    let n = sol.mesh.dim();
    let hdr: Vec<String> = (0..n).map(|i| format!("x{i}")).chain((0..sol.components).map(|a| format!("u{a}"))).collect();
    let mut s = hdr.join(",");
    s.push('\n');
    for i in sol.mesh.active_nodes() {
        let row: Vec<String> = sol.mesh.coords(i).iter().chain(sol.get(i)).map(|v| format!("{v:e}")).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// OBJ of (x, y, u₀) for a graph over a two-dimensional grid.
pub fn graph_obj(sol: &GraphSolution) -> Option<String> {
    let mesh = &sol.mesh;
    if mesh.dim() != 2 {
        return None;
    }
    let mut s = String::new();
    let mut id = vec![0usize; mesh.len()];
    for (k, i) in mesh.active_nodes().into_iter().enumerate() {
        let x = mesh.coords(i);
        s.push_str(&format!("v {} {} {}\n", x[0], x[1], sol.get(i)[0]));
        id[i] = k + 1;
    }
    for i in mesh.active_nodes() {
        let quad = (mesh.neighbor(i, &[(0, 1)]), mesh.neighbor(i, &[(0, 1), (1, 1)]), mesh.neighbor(i, &[(1, 1)]));
        if let (Some(a), Some(d), Some(b)) = quad {
            if [a, d, b].iter().all(|&j| mesh.is_active(j)) {
                s.push_str(&format!("f {} {} {} {}\n", id[i], id[a], id[d], id[b]));
            }
        }
    }
    Some(s)
}
