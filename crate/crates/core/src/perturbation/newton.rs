//! Damped Newton for the minimal surface system g^{ij}(Du) u_{x^i x^j} = 0,
//! g_ij = δ_ij + Σ_β u^β_i u^β_j, with central differences on a grid.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::grid::{GridMesh, NodeKind};
use crate::linalg::{gmres, norm2, norm_inf, CsrMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NewtonOptions {
    /// Target max-norm of the residual.
    pub tol: f64,
    pub max_steps: usize,
    pub linear_rtol: f64,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { tol: 1e-8, max_steps: 40, linear_rtol: 1e-9, max_halvings: 30 }
    }
}

#[derive(Debug, Clone)]
pub struct GraphSolution {
    pub mesh: GridMesh,
    pub components: usize,
    /// Node-stacked values; inactive nodes hold 0.
    pub values: Vec<f64>,
    pub residual: f64,
    pub steps: usize,
    /// Residual max-norm before each step and after the last.
    pub history: Vec<f64>,
}

impl GraphSolution {
    pub fn get(&self, node: usize) -> &[f64] {
        &self.values[node * self.components..(node + 1) * self.components]
    }

    /// Max nodewise distance to an exact map over active nodes.
    pub fn max_error<F: Fn(&[f64]) -> Vec<f64>>(&self, exact: F) -> f64 {
        self.mesh
            .active_nodes()
            .into_iter()
            .map(|i| {
                let e = exact(&self.mesh.coords(i));
                self.get(i).iter().zip(&e).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }
}

struct Local {
    g_inv: DMatrix<f64>,
    /// p[i][β] = D_i u^β
    p: Vec<Vec<f64>>,
    /// h[α][i*n+j] = D_ij u^α
    h: Vec<Vec<f64>>,
}

fn local(mesh: &GridMesh, c: usize, u: &[f64], m: usize) -> (Vec<(usize, Vec<f64>, Vec<f64>)>, Local) {
    let n = mesh.dim();
    let st = mesh.stencil(c);
    let mut p = vec![vec![0.0; m]; n];
    let mut h = vec![vec![0.0; n * n]; m];
    for (nb, d1, d2) in &st {
        for b in 0..m {
            let v = u[nb * m + b];
            for i in 0..n {
                p[i][b] += d1[i] * v;
            }
            for ij in 0..n * n {
                h[b][ij] += d2[ij] * v;
            }
        }
    }
    let g = DMatrix::from_fn(n, n, |i, j| (if i == j { 1.0 } else { 0.0 }) + (0..m).map(|b| p[i][b] * p[j][b]).sum::<f64>());
    let g_inv = g.try_inverse().expect("I + PᵀP is positive definite");
    (st, Local { g_inv, p, h })
}

fn residual(mesh: &GridMesh, interior: &[usize], u: &[f64], m: usize) -> Vec<f64> {
    let n = mesh.dim();
    let rows: Vec<Vec<f64>> = interior
        .par_iter()
        .map(|&c| {
            let (_, l) = local(mesh, c, u, m);
            (0..m).map(|a| (0..n * n).map(|ij| l.g_inv[(ij / n, ij % n)] * l.h[a][ij]).sum()).collect()
        })
        .collect();
    rows.concat()
}

fn jacobian(mesh: &GridMesh, interior: &[usize], slot: &[usize], u: &[f64], m: usize) -> CsrMatrix {
    let n = mesh.dim();
    let rows: Vec<Vec<(usize, usize, f64)>> = interior
        .par_iter()
        .enumerate()
        .map(|(row, &c)| {
            let (st, l) = local(mesh, c, u, m);
            // q[i][β] = Σ_b G^{ib} p[b][β]
            let q: Vec<Vec<f64>> = (0..n).map(|i| (0..m).map(|b| (0..n).map(|k| l.g_inv[(i, k)] * l.p[k][b]).sum()).collect()).collect();
            // t[α][l][β] = −2 Σ_ij G^{li} H^α_ij q[j][β]
            let t: Vec<Vec<Vec<f64>>> = (0..m)
                .map(|a| {
                    (0..n)
                        .map(|ll| {
                            (0..m)
                                .map(|b| {
                                    let mut s = 0.0;
                                    for i in 0..n {
                                        for j in 0..n {
                                            s += l.g_inv[(ll, i)] * l.h[a][i * n + j] * q[j][b];
                                        }
                                    }
                                    -2.0 * s
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect();
            let mut trip = Vec::new();
            for (nb, d1, d2) in &st {
                let col = slot[*nb];
                if col == usize::MAX {
                    continue;
                }
                let lap: f64 = (0..n * n).map(|ij| l.g_inv[(ij / n, ij % n)] * d2[ij]).sum();
                for a in 0..m {
                    for b in 0..m {
                        let mut v = if a == b { lap } else { 0.0 };
                        for ll in 0..n {
                            v += t[a][ll][b] * d1[ll];
                        }
                        if v != 0.0 {
                            trip.push((row * m + a, col * m + b, v));
                        }
                    }
                }
            }
            trip
        })
        .collect();
    let size = interior.len() * m;
    CsrMatrix::from_triplets(size, size, rows.concat())
}

/// Solves the minimal surface system for u: mesh → R^m with u = `boundary`
/// on boundary nodes, starting from `initial` at interior nodes.
pub fn graph_newton_solve<B, I>(mesh: &GridMesh, m: usize, boundary: B, initial: I, opts: &NewtonOptions) -> Result<GraphSolution>
where
    B: Fn(&[f64]) -> Vec<f64>,
    I: Fn(&[f64]) -> Vec<f64>,
{
    let interior = mesh.nodes_of(NodeKind::Interior);
    if interior.is_empty() {
        return Err(Error::InvalidInput("mesh has no interior nodes".into()));
    }
    let mut slot = vec![usize::MAX; mesh.len()];
    for (p, &i) in interior.iter().enumerate() {
        slot[i] = p;
    }
    let mut u = vec![0.0; mesh.len() * m];
    for i in mesh.active_nodes() {
        let x = mesh.coords(i);
        let v = if mesh.kind(i) == NodeKind::Interior { initial(&x) } else { boundary(&x) };
        if v.len() != m {
            return Err(Error::InvalidInput(format!("data has {} components, expected {m}", v.len())));
        }
        u[i * m..(i + 1) * m].copy_from_slice(&v);
    }
    let mut r = residual(mesh, &interior, &u, m);
    let mut history = vec![norm_inf(&r)];
    let mut steps = 0;
    while norm_inf(&r) >= opts.tol {
        if steps == opts.max_steps {
            return Err(Error::NoConvergence { iterations: steps, residual: norm_inf(&r) });
        }
        let j = jacobian(mesh, &interior, &slot, &u, m);
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let (du, _) = gmres(&j, &neg, None, opts.linear_rtol, 80, 4000);
        let r0 = norm2(&r);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let mut trial = u.clone();
            for (p, &i) in interior.iter().enumerate() {
                for a in 0..m {
                    trial[i * m + a] += step * du[p * m + a];
                }
            }
            let rt = residual(mesh, &interior, &trial, m);
            if norm2(&rt) < (1.0 - 1e-4 * step) * r0 {
                accepted = Some((trial, rt));
                break;
            }
            step *= 0.5;
        }
        let (nu, nr) = accepted.ok_or(Error::LineSearchStall { residual: norm_inf(&r) })?;
        u = nu;
        r = nr;
        steps += 1;
        history.push(norm_inf(&r));
    }
    for i in 0..mesh.len() {
        if !mesh.is_active(i) {
            u[i * m..(i + 1) * m].fill(0.0);
        }
    }
    Ok(GraphSolution { mesh: mesh.clone(), components: m, values: u, residual: norm_inf(&r), steps, history })
}
