//! Radial Jacobi fields on cones.
//!
//! A section U(rω) = w(r)η(ω) with −L_Σ η = μη satisfies LU = 0 iff
//! r²w'' + (n−1)rw' − μw = 0, solved by r^{γ±}. For a source f(r) the
//! particular solution
//!
//!   F(r) = r^γ ∫_a^r τ^{1−n−2γ} ∫_0^τ s^{n−1+γ} f(s) ds dτ,  γ = γ₊,
//!
//! solves r²F'' + (n−1)rF' − μF = r²f, with a = 0 below the mode cutoff
//! and a = 1 above it. The double integral is reduced to a single one by
//! exchanging the order of integration; the τ-integral is elementary.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_from_zero};
use crate::spectrum::{LinkMesh, SpectrumResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JacobiExponents {
    pub n: usize,
    pub mu: f64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
}

impl JacobiExponents {
    /// max |γ(γ−1) + (n−1)γ − μ| over both roots.
    pub fn indicial_defect(&self) -> f64 {
        let n1 = self.n as f64 - 1.0;
        [self.gamma_plus, self.gamma_minus]
            .iter()
            .map(|g| (g * (g - 1.0) + n1 * g - self.mu).abs())
            .fold(0.0, f64::max)
    }
}

/// γ± = ((2−n) ± √((n−2)² + 4μ))/2.
pub fn exponents(n: usize, mu: f64) -> Result<JacobiExponents> {
    let a = n as f64 - 2.0;
    let disc = a * a + 4.0 * mu;
    if disc <= 0.0 || !disc.is_finite() {
        return Err(Error::NonHyperbolic { discriminant: disc });
    }
    let s = disc.sqrt();
    // the root with the larger magnitude first, the other from the product
    // γ₊γ₋ = −μ to avoid cancellation
    let (gp, gm) = if a > 0.0 {
        let gm = (-a - s) / 2.0;
        (if gm != 0.0 { -mu / gm } else { (-a + s) / 2.0 }, gm)
    } else {
        let gp = (-a + s) / 2.0;
        (gp, if gp != 0.0 { -mu / gp } else { (-a - s) / 2.0 })
    };
    Ok(JacobiExponents { n, mu, gamma_plus: gp, gamma_minus: gm })
}

/// Log-spaced radii from `r0` to `r1` inclusive.
pub fn geometric_grid(r0: f64, r1: f64, m: usize) -> Vec<f64> {
    if m == 1 {
        return vec![r0];
    }
    let (l0, l1) = (r0.ln(), r1.ln());
    (0..m).map(|i| (l0 + (l1 - l0) * i as f64 / (m - 1) as f64).exp()).collect()
}

/// Relative residual of r^γ in r²w'' + (n−1)rw' − μw, maximised over the
/// grid; each point is scaled by the sum of the absolute terms.
pub fn homogeneous_residual(n: usize, mu: f64, gamma: f64, r: &[f64]) -> f64 {
    let n1 = n as f64 - 1.0;
    r.iter()
        .map(|&ri| {
            let w = ri.powf(gamma);
            let t = [gamma * (gamma - 1.0) * w, n1 * gamma * w, -mu * w];
            let scale = t.iter().map(|v| v.abs()).sum::<f64>();
            let sum: f64 = t.iter().sum();
            if scale == 0.0 {
                0.0
            } else {
                sum.abs() / scale
            }
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct JacobiMode {
    pub j: usize,
    pub mu: f64,
    pub exponents: JacobiExponents,
    /// j ≤ J: the particular solution integrates from 0.
    pub below_cutoff: bool,
}

impl JacobiMode {
    pub fn new(j: usize, n: usize, mu: f64, cutoff: usize) -> Result<Self> {
        Ok(JacobiMode { j, mu, exponents: exponents(n, mu)?, below_cutoff: j <= cutoff })
    }
}

const QUAD_TOL: f64 = 1e-12;

/// F_j(r) at a single radius.
pub fn particular_solution_at(mode: &JacobiMode, f: &(dyn Fn(f64) -> f64 + Sync), r: f64) -> Result<f64> {
    let ex = mode.exponents;
    let n = ex.n as f64;
    let g = ex.gamma_plus;
    let e = 2.0 - n - 2.0 * g;
    let src = |s: f64| if s == 0.0 { 0.0 } else { s.powf(n - 1.0 + g) * f(s) };
    let re = r.powf(e);
    let val = if mode.below_cutoff {
        // r^γ/e ∫_0^r g(s)(r^e − s^e) ds
        let k = |s: f64| if s == 0.0 { 0.0 } else { src(s) * (re - s.powf(e)) };
        integrate_from_zero(&k, r, QUAD_TOL)? / e
    } else {
        // ∫_1^r τ^{e−1} ∫_0^τ g ds dτ
        let head = integrate_from_zero(&src, r.min(1.0), QUAD_TOL)?;
        let k = |s: f64| src(s) * (re - s.powf(e)) / e;
        if r <= 1.0 {
            // −[(1 − r^e)/e ∫_0^r g + ∫_r^1 g(s)(1 − s^e)/e ds]
            let (tail, _) = integrate(&|s: f64| src(s) * (1.0 - s.powf(e)) / e, r, 1.0, 1e-300, QUAD_TOL)?;
            -((1.0 - re) / e * head + tail)
        } else {
            let (tail, _) = integrate(&k, 1.0, r, 1e-300, QUAD_TOL)?;
            (re - 1.0) / e * head + tail
        }
    };
    let out = r.powf(g) * val;
    if out.is_finite() {
        Ok(out)
    } else {
        Err(Error::QuadratureFailure(format!("non-finite particular solution at r = {r}")))
    }
}

/// F_j on a radial grid, evaluated in parallel.
pub fn particular_solution(mode: &JacobiMode, f: &(dyn Fn(f64) -> f64 + Sync), r: &[f64]) -> Result<Vec<f64>> {
    r.par_iter().map(|&ri| particular_solution_at(mode, f, ri)).collect()
}

/// Relative residual of r²F'' + (n−1)rF' − μF − r²f at `r`, with F'' and F'
/// from central differences (step 0.01·r, one Richardson level).
pub fn ode_residual_fd(mode: &JacobiMode, f: &(dyn Fn(f64) -> f64 + Sync), r: f64) -> Result<f64> {
    let h = 0.01 * r;
    let fs: Vec<f64> = [-2.0, -1.0, 0.0, 1.0, 2.0]
        .iter()
        .map(|k| particular_solution_at(mode, f, r + k * h / 2.0))
        .collect::<Result<_>>()?;
    let (fm2, fm1, f0, fp1, fp2) = (fs[0], fs[1], fs[2], fs[3], fs[4]);
    let d1h = (fp2 - fm2) / (2.0 * h);
    let d1h2 = (fp1 - fm1) / h;
    let d1 = (4.0 * d1h2 - d1h) / 3.0;
    let d2h = (fp2 - 2.0 * f0 + fm2) / (h * h);
    let d2h2 = (fp1 - 2.0 * f0 + fm1) / (h * h / 4.0);
    let d2 = (4.0 * d2h2 - d2h) / 3.0;
    let n1 = mode.exponents.n as f64 - 1.0;
    let t = [r * r * d2, n1 * r * d1, -mode.mu * f0, -r * r * f(r)];
    let scale: f64 = t.iter().map(|v| v.abs()).sum();
    let sum: f64 = t.iter().sum();
    Ok(if scale == 0.0 { 0.0 } else { sum.abs() / scale })
}

/// Closed form of F for f = r^σ, in the same branch convention.
pub fn monomial_particular(mode: &JacobiMode, sigma: f64, r: f64) -> f64 {
    let n = mode.exponents.n as f64;
    let g = mode.exponents.gamma_plus;
    let d = (sigma + 2.0 - g) * (sigma + n + g);
    let mut v = r.powf(sigma + 2.0) / d;
    if !mode.below_cutoff {
        v -= r.powf(g) / d;
    }
    v
}

/// J with γ_J(+) < ν ≤ γ_{J+1}(+); the exponent list must be ascending.
pub fn choose_mode_cutoff(nu: f64, gamma_plus: &[f64]) -> Result<usize> {
    if gamma_plus.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("exponent list is not ascending".into()));
    }
    match gamma_plus.first() {
        None => Err(Error::InvalidInput("empty exponent list".into())),
        Some(&g1) if nu <= g1 => Err(Error::CutoffUndefined { nu, gamma1: g1 }),
        _ => Ok(gamma_plus.iter().take_while(|g| **g < nu).count()),
    }
}

/// A normal section sampled on radii × link nodes; `values[i]` is the
/// stacked node field at `radii[i]`.
#[derive(Debug, Clone)]
pub struct RadialSectionField {
    pub radii: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl RadialSectionField {
    /// L²(Σ) norm of each radial slice.
    pub fn slice_norms(&self, mesh: &LinkMesh) -> Vec<f64> {
        self.values.iter().map(|v| mesh.inner(v, v).max(0.0).sqrt()).collect()
    }
}

/// f_j(r) = ⟨F(r·), η_j⟩_{L²(Σ)}; result is indexed [mode][radius].
pub fn mode_projection(field: &RadialSectionField, mesh: &LinkMesh, spectrum: &SpectrumResult) -> Vec<Vec<f64>> {
    spectrum
        .eigensections
        .par_iter()
        .map(|eta| field.values.iter().map(|v| mesh.inner(v, eta)).collect())
        .collect()
}

/// U(rω) = Σ_j (α_j r^{γ_j(+)} + F_j(r)) η_j(ω). `particular[j]`, when
/// given, holds F_j on the grid.
pub fn assemble_expansion(
    modes: &[JacobiMode],
    alphas: &[f64],
    particular: Option<&[Vec<f64>]>,
    radii: &[f64],
    spectrum: &SpectrumResult,
) -> Result<RadialSectionField> {
    if modes.len() != alphas.len() || modes.len() > spectrum.eigensections.len() {
        return Err(Error::InvalidInput("mode, coefficient and eigensection counts differ".into()));
    }
    let size = spectrum.eigensections.first().map_or(0, |e| e.len());
    let values = radii
        .par_iter()
        .enumerate()
        .map(|(ri, &r)| {
            let mut u = vec![0.0; size];
            for (j, m) in modes.iter().enumerate() {
                let mut c = alphas[j] * r.powf(m.exponents.gamma_plus);
                if let Some(p) = particular {
                    c += p[j][ri];
                }
                if c != 0.0 {
                    for (ui, e) in u.iter_mut().zip(&spectrum.eigensections[j]) {
                        *ui += c * e;
                    }
                }
            }
            u
        })
        .collect();
    Ok(RadialSectionField { radii: radii.to_vec(), values })
}

/// Least-squares split of a radial profile into α r^{γ₊} + β r^{γ₋}.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProfileFit {
    pub alpha: f64,
    pub beta: f64,
    pub residual: f64,
    /// β r^{γ₋} is not negligible: the profile leaves the solution class.
    pub out_of_class: bool,
}

pub fn fit_radial_profile(ex: &JacobiExponents, r: &[f64], a: &[f64]) -> ProfileFit {
    let (mut s11, mut s12, mut s22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&ri, &ai) in r.iter().zip(a) {
        let (p, m) = (ri.powf(ex.gamma_plus), ri.powf(ex.gamma_minus));
        s11 += p * p;
        s12 += p * m;
        s22 += m * m;
        b1 += p * ai;
        b2 += m * ai;
    }
    let det = s11 * s22 - s12 * s12;
    let (alpha, beta) = if det.abs() > 1e-300 {
        ((b1 * s22 - b2 * s12) / det, (s11 * b2 - s12 * b1) / det)
    } else {
        (b1 / s11, 0.0)
    };
    let scale = a.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
    let residual = r
        .iter()
        .zip(a)
        .map(|(&ri, &ai)| (ai - alpha * ri.powf(ex.gamma_plus) - beta * ri.powf(ex.gamma_minus)).abs())
        .fold(0.0, f64::max);
    let beta_size = r.iter().map(|ri| (beta * ri.powf(ex.gamma_minus)).abs()).fold(0.0, f64::max);
    ProfileFit { alpha, beta, residual, out_of_class: beta_size > 1e-6 * scale }
}

/// CSV rows `j,mu_j,gamma_plus,gamma_minus,alpha_j`.
pub fn mode_table_csv(modes: &[JacobiMode], alphas: &[f64]) -> String {
    let mut s = String::from("j,mu_j,gamma_plus,gamma_minus,alpha_j\n");
    for (m, a) in modes.iter().zip(alphas) {
        s.push_str(&format!(
            "{},{:.12e},{:.12e},{:.12e},{:.12e}\n",
            m.j, m.mu, m.exponents.gamma_plus, m.exponents.gamma_minus, a
        ));
    }
    s
}
