//! U_{k+1} solves LU = E(U_k) − H₀ with boundary data Ψ_λ, where λ is
//! chosen at each step so that the first modes of U near the vertex vanish.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{BoundaryFamily, DiscreteSurface};
use crate::error::{Error, Result};
use crate::fit::loglog_fit;
use crate::geometry::grid::NormalSectionField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedPointConfig {
    /// Stop once max |H^⊥(U_k)| falls below this.
    pub tol: f64,
    pub max_iter: usize,
    pub max_lambda_iter: usize,
    /// λ-update damping.
    pub theta: f64,
    /// Relative tolerance on the killed mode coefficients.
    pub lambda_tol: f64,
    /// Decay order ν for the weighted monitor sup r^{−ν}|U|.
    pub nu: f64,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        FixedPointConfig { tol: 1e-9, max_iter: 50, max_lambda_iter: 30, theta: 0.5, lambda_tol: 1e-8, nu: 1.0 }
    }
}

/// A boundary family attached to the cone x ↦ vertex + R x, with the
/// annulus r ∈ [a, b] on which mode coefficients are measured.
#[derive(Debug, Clone)]
pub struct ModeControl<'a> {
    pub family: &'a BoundaryFamily,
    pub vertex: DVector<f64>,
    pub rotation: DMatrix<f64>,
    pub annulus: (f64, f64),
}

#[derive(Debug, Clone)]
pub enum BoundaryData<'a> {
    /// Fixed Ψ; only boundary node values are read.
    Fixed(NormalSectionField),
    Family(ModeControl<'a>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub k: usize,
    pub residual_sup: f64,
    pub residual_l2: f64,
    pub lambda: Vec<f64>,
    /// Log-log slope of max |U| against distance to the vertex on the
    /// measuring annulus.
    pub decay_fit: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormMonitors {
    pub sup: f64,
    /// sup r^{−ν}|U| when a vertex is known.
    pub weighted_sup: Option<f64>,
    /// (Σ w(|∂U|² + h⁻²|U|²))^{1/2}, h the distance to the vertex or 1.
    pub h1: f64,
}

#[derive(Debug, Clone)]
pub struct SolverState {
    pub u: NormalSectionField,
    pub history: Vec<IterationRecord>,
    pub lambda: Vec<f64>,
    /// Mode coefficients Λ of the final U on the measuring annulus.
    pub modes: Vec<f64>,
    pub monitors: NormMonitors,
    pub converged: bool,
}

impl SolverState {
    /// One JSON object per iteration.
    pub fn trace_jsonl(&self) -> String {
        self.history.iter().map(|r| serde_json::to_string(r).expect("record serialises") + "\n").collect()
    }

    /// ‖r_{k+1}‖/‖r_k‖ in the sup norm.
    pub fn contraction_ratios(&self) -> Vec<f64> {
        self.history.windows(2).map(|w| w[1].residual_sup / w[0].residual_sup).collect()
    }
}

impl ModeControl<'_> {
    fn local(&self, p: &DVector<f64>) -> (f64, DVector<f64>) {
        let d = self.rotation.transpose() * (p - &self.vertex);
        let r = d.norm();
        (r, d / r.max(1e-300))
    }

    /// L² projections of U onto each η_k over the annulus.
    fn coefficients(&self, s: &DiscreteSurface, u: &NormalSectionField) -> Vec<f64> {
        let w = s.geometry.weights(&s.mesh);
        let k = self.family.len();
        let (mut num, mut den) = (vec![0.0; k], vec![0.0; k]);
        for i in s.mesh.active_nodes() {
            let g = s.geometry.node(i);
            let (r, dir) = self.local(&g.point);
            if r < self.annulus.0 || r > self.annulus.1 {
                continue;
            }
            let node = self.family.nearest(&dir);
            let v = s.geometry.ambient_vector(i, u.get(i));
            for j in 0..k {
                let mut e = vec![0.0; k];
                e[j] = 1.0;
                let eta = &self.rotation * self.family.ambient(&e, node);
                num[j] += w[i] * v.dot(&eta);
                den[j] += w[i] * eta.norm_squared();
            }
        }
        num.iter().zip(&den).map(|(a, b)| if *b > 0.0 { a / b } else { 0.0 }).collect()
    }

    fn decay_fit(&self, s: &DiscreteSurface, u: &NormalSectionField) -> Option<f64> {
        let bins = 8;
        let (a, b) = self.annulus;
        let mut mx = vec![0.0f64; bins];
        let mut rs = vec![0.0f64; bins];
        for i in s.mesh.active_nodes() {
            let (r, _) = self.local(&s.geometry.node(i).point);
            if r < a || r > b || a <= 0.0 {
                continue;
            }
            let t = ((r / a).ln() / (b / a).ln() * bins as f64).floor().clamp(0.0, (bins - 1) as f64) as usize;
            let v = u.get(i).iter().map(|c| c * c).sum::<f64>().sqrt();
            if v > mx[t] {
                mx[t] = v;
                rs[t] = r;
            }
        }
        let (x, y): (Vec<f64>, Vec<f64>) = rs.iter().zip(&mx).filter(|(_, m)| **m > 0.0).map(|(r, m)| (*r, *m)).unzip();
        if x.len() < 3 {
            return None;
        }
        loglog_fit(&x, &y).map(|f| f.slope)
    }
}

fn monitors(s: &DiscreteSurface, u: &NormalSectionField, control: Option<&ModeControl>, nu: f64) -> NormMonitors {
    let w = s.geometry.weights(&s.mesh);
    let n = s.mesh.dim();
    let mut sup = 0.0f64;
    let mut weighted: Option<f64> = control.map(|_| 0.0);
    let mut h1 = 0.0;
    for i in s.mesh.active_nodes() {
        let size = u.get(i).iter().map(|c| c * c).sum::<f64>().sqrt();
        sup = sup.max(size);
        let h = match control {
            Some(c) => {
                let (r, _) = c.local(&s.geometry.node(i).point);
                weighted = weighted.map(|m| m.max(size * r.max(1e-300).powf(-nu)));
                r.max(1e-300)
            }
            None => 1.0,
        };
        let mut grad = 0.0;
        for ax in 0..n {
            if let (Some(a), Some(b)) = (s.mesh.neighbor(i, &[(ax, 1)]), s.mesh.neighbor(i, &[(ax, -1)])) {
                if s.mesh.is_active(a) && s.mesh.is_active(b) {
                    let hh = 2.0 * s.mesh.spacing(ax);
                    grad += u.get(a).iter().zip(u.get(b)).map(|(p, q)| ((p - q) / hh).powi(2)).sum::<f64>();
                }
            }
        }
        h1 += w[i] * (grad + size * size / (h * h));
    }
    NormMonitors { sup, weighted_sup: weighted, h1: h1.sqrt() }
}

fn increasing_run(history: &[IterationRecord]) -> bool {
    history.len() >= 4 && history[history.len() - 4..].windows(2).all(|w| w[1].residual_sup > w[0].residual_sup)
}

/// Runs the iteration and returns the final state together with the error
/// that stopped it, if any; the state keeps the trace either way.
pub fn fixed_point_run(s: &DiscreteSurface, boundary: &BoundaryData, config: &FixedPointConfig) -> Result<(SolverState, Option<Error>)> {
    let control = match boundary {
        BoundaryData::Family(c) => Some(c),
        BoundaryData::Fixed(_) => None,
    };
    let zero = s.zeros();
    let psi = match boundary {
        BoundaryData::Fixed(p) => p.clone(),
        BoundaryData::Family(_) => zero.clone(),
    };
    // responses W_k = L⁻¹(0; Ψ_{e_k}) and their mode coefficients G
    let (responses, gain) = match control {
        Some(c) => {
            let k = c.family.len();
            let mut w = Vec::with_capacity(k);
            let mut g = DMatrix::zeros(k, k);
            for j in 0..k {
                let mut e = vec![0.0; k];
                e[j] = 1.0;
                let bj = c.family.section_on(s, &c.vertex, &c.rotation, &e);
                let v = s.solve_dirichlet(&zero, &bj)?;
                let cols = c.coefficients(s, &v);
                for (i, val) in cols.into_iter().enumerate() {
                    g[(i, j)] = val;
                }
                w.push(v);
            }
            let inv = g.clone().try_inverse().ok_or_else(|| Error::InvalidInput("mode response matrix is singular".into()))?;
            (w, Some((g, inv)))
        }
        None => (vec![], None),
    };
    // U₀ solves the linear problem LU = −H₀ with the boundary data
    let mut u = s.solve_dirichlet(&s.h0.scaled(-1.0), &psi)?;
    let mut lambda = vec![0.0; responses.len()];
    let mut history: Vec<IterationRecord> = Vec::new();
    let mut failure = None;
    let mut converged = false;
    for k in 0..=config.max_iter {
        let r = s.mean_curvature(&u)?;
        let (sup, l2) = s.norms(&r);
        history.push(IterationRecord {
            k,
            residual_sup: sup,
            residual_l2: l2,
            lambda: lambda.clone(),
            decay_fit: control.and_then(|c| c.decay_fit(s, &u)),
        });
        if sup < config.tol {
            converged = true;
            break;
        }
        if increasing_run(&history) {
            failure = Some(Error::Diverged { step: k });
            break;
        }
        if k == config.max_iter {
            failure = Some(Error::CapReached { cap: config.max_iter, residual: sup });
            break;
        }
        // L⁻¹(E(U_k) − H₀; Ψ_λk) written as U_k − L⁻¹(H^⊥(U_k); 0), which keeps
        // the linear solve relative to the residual
        let mut v0 = s.solve_dirichlet(&r, &zero)?;
        v0.values.iter_mut().zip(&u.values).for_each(|(a, b)| *a = b - *a);
        u = match (control, &gain) {
            (Some(c), Some((g, ginv))) => {
                let base = DVector::from_vec(c.coefficients(s, &v0));
                let scale = base.norm().max(1.0);
                let mut lam = DVector::from_vec(lambda.clone());
                let mut ok = false;
                for _ in 0..config.max_lambda_iter {
                    let modes = &base + g * &lam;
                    if modes.norm() <= config.lambda_tol * scale {
                        ok = true;
                        break;
                    }
                    lam -= config.theta * (ginv * modes);
                }
                if !ok {
                    let modes = &base + g * &lam;
                    failure = Some(Error::CapReached { cap: config.max_lambda_iter, residual: modes.norm() });
                }
                lambda = lam.iter().copied().collect();
                let mut next = v0;
                for (l, w) in lambda.iter().zip(&responses) {
                    next.axpy(*l, w);
                }
                next
            }
            _ => v0,
        };
        if failure.is_some() {
            break;
        }
    }
    let modes = control.map(|c| c.coefficients(s, &u)).unwrap_or_default();
    let monitors = monitors(s, &u, control, config.nu);
    Ok((SolverState { u, history, lambda, modes, monitors, converged }, failure))
}

/// As [`fixed_point_run`], turning a stopped run into its error.
pub fn fixed_point_solve(s: &DiscreteSurface, boundary: &BoundaryData, config: &FixedPointConfig) -> Result<SolverState> {
    match fixed_point_run(s, boundary, config)? {
        (state, None) => Ok(state),
        (_, Some(e)) => Err(e),
    }
}
