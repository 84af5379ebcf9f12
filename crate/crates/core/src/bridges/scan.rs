//! ∫_{M^ε} |H₀|^p over the patching and bridge regions, for a family of
//! approximate solutions, with a log-log fit in ε.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::assembly::{ApproximateSolution, Region, RegionTag, Section};
use super::BridgeVariant;
use crate::error::{Error, Result};
use crate::fit::loglog_fit;
use crate::geometry::{mean_curvature_from_jet, ImmersionPatch};
use crate::quadrature::{gauss_interval, gauss_legendre, halton};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureOptions {
    /// Gauss order per cross-section direction.
    pub cross_order: usize,
    /// Longitudinal Gauss order per panel.
    pub panel_order: usize,
    /// Tensor rules above this many nodes switch to quasi-Monte Carlo.
    pub node_budget: usize,
    pub qmc_points: usize,
    /// Link samples per axis for the cone-region check.
    pub cone_samples: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions { cross_order: 5, panel_order: 5, node_budget: 10_000_000, qmc_points: 400_000, cone_samples: 3 }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RegionMax {
    pub patching: f64,
    pub bridge_interior: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ScalingReport {
    pub variant: BridgeVariant,
    pub n: usize,
    pub m: usize,
    pub p: f64,
    pub epsilons: Vec<f64>,
    pub integrals: Vec<f64>,
    pub fitted_slope: Option<f64>,
    pub r_squared: Option<f64>,
    pub pointwise_max: Vec<RegionMax>,
    pub cone_max_h: f64,
    /// Standard error of the QMC estimate where the fallback was used.
    pub qmc_error: Vec<Option<f64>>,
}

impl ScalingReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("epsilon,integral,max_h_patching,max_h_bridge\n");
        for (i, e) in self.epsilons.iter().enumerate() {
            let m = &self.pointwise_max[i];
            s.push_str(&format!("{e:e},{:e},{:e},{:e}\n", self.integrals[i], m.patching, m.bridge_interior));
        }
        s
    }
}

/// Nodes and weights on the unit ball in R^d: Gauss in the radius (weight
/// r^{d−1}) and in each polar angle (weight sin^k), equispaced in the last
/// angle. 2q^d nodes for d ≥ 2.
pub fn ball_rule(d: usize, q: usize) -> Vec<(Vec<f64>, f64)> {
    if d == 0 {
        return vec![(vec![], 1.0)];
    }
    if d == 1 {
        let (x, w) = gauss_legendre(q);
        return x.into_iter().zip(w).map(|(a, b)| (vec![a], b)).collect();
    }
    let radial: Vec<(f64, f64)> = gauss_interval(q, 0.0, 1.0).into_iter().map(|(r, w)| (r, w * r.powi(d as i32 - 1))).collect();
    let polar = gauss_interval(q, 0.0, std::f64::consts::PI);
    let m = 2 * q;
    let mut out = Vec::new();
    let npolar = d - 2;
    let total = polar.len().pow(npolar as u32);
    for &(r, wr) in &radial {
        for idx in 0..total {
            let mut rem = idx;
            let mut angles = Vec::with_capacity(npolar);
            let mut w = wr;
            for k in 0..npolar {
                let (a, wa) = polar[rem % polar.len()];
                rem /= polar.len();
                w *= wa * a.sin().powi((d - 2 - k) as i32);
                angles.push(a);
            }
            for j in 0..m {
                let phi = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / m as f64;
                let mut y = Vec::with_capacity(d);
                let mut s = r;
                for a in &angles {
                    y.push(s * a.cos());
                    s *= a.sin();
                }
                y.push(s * phi.cos());
                y.push(s * phi.sin());
                out.push((y, w * 2.0 * std::f64::consts::PI / m as f64));
            }
        }
    }
    out
}

/// (|H|, √det g) at a parameter point.
fn h_and_density(patch: &ImmersionPatch, x: &[f64]) -> Result<(f64, f64)> {
    let jet = patch.jet_unchecked(x)?;
    let metric = patch.metric_from_jet(&jet)?;
    Ok((mean_curvature_from_jet(&jet, &metric).norm(), metric.sqrt_det_g))
}

/// Integral of |H|^p and max |H| over a ball-section region, plus the QMC
/// standard error when the tensor rule exceeds the budget.
pub fn region_integral(region: &Region, p: f64, opts: &QuadratureOptions) -> Result<(f64, f64, Option<f64>)> {
    let n = region.patch.n();
    let d = n - 1;
    let (lo, hi) = (region.patch.domain.lower[d], region.patch.domain.upper[d]);
    let rmax = (0..d).map(|i| region.patch.domain.upper[i]).fold(0.0, f64::max);
    let rmax = match region.section {
        Section::Full => return Err(Error::InvalidInput("full-section regions are checked pointwise".into())),
        s => s.radius_at(lo).max(s.radius_at(hi)).max(s.radius_at(0.5 * (lo + hi))).min(rmax).max(1e-300),
    };
    let panels = 8usize.max(((hi - lo) / (8.0 * rmax)).ceil() as usize);
    let cross = ball_rule(d, opts.cross_order);
    let slices: Vec<(f64, f64)> = (0..panels)
        .flat_map(|k| {
            let a = lo + (hi - lo) * k as f64 / panels as f64;
            let b = lo + (hi - lo) * (k + 1) as f64 / panels as f64;
            gauss_interval(opts.panel_order, a, b)
        })
        .collect();
    let nodes = slices.len() * cross.len();
    if nodes > opts.node_budget {
        return qmc_integral(region, p, opts, lo, hi, rmax);
    }
    let per_slice: Vec<Result<(f64, f64)>> = slices
        .par_iter()
        .map(|&(t, wt)| {
            let rho = region.section.radius_at(t);
            let scale = rho.powi(d as i32);
            let mut acc = 0.0;
            let mut mx: f64 = 0.0;
            let mut x = vec![0.0; n];
            x[d] = t;
            for (y, w) in &cross {
                for i in 0..d {
                    x[i] = rho * y[i];
                }
                let (h, dens) = h_and_density(&region.patch, &x)?;
                acc += w * scale * h.powf(p) * dens;
                mx = mx.max(h);
            }
            Ok((acc * wt, mx))
        })
        .collect();
    let mut total = 0.0;
    let mut mx: f64 = 0.0;
    for r in per_slice {
        let (a, m) = r?;
        total += a;
        mx = mx.max(m);
    }
    Ok((total, mx, None))
}

fn qmc_integral(region: &Region, p: f64, opts: &QuadratureOptions, lo: f64, hi: f64, rmax: f64) -> Result<(f64, f64, Option<f64>)> {
    let n = region.patch.n();
    let d = n - 1;
    let batches = 8;
    let per = (opts.qmc_points / batches).max(1);
    let vol = (2.0 * rmax).powi(d as i32) * (hi - lo);
    // Cranley–Patterson shifts, one per batch, from a fixed seed.
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let shifts: Vec<Vec<f64>> = (0..batches).map(|_| (0..n).map(|_| rng.gen::<f64>()).collect()).collect();
    let results: Vec<Result<(f64, f64)>> = shifts
        .par_iter()
        .map(|shift| {
            let mut acc = 0.0;
            let mut mx: f64 = 0.0;
            for i in 1..=per as u64 {
                let u = halton(i, n);
                let x: Vec<f64> = (0..n)
                    .map(|k| {
                        let v = (u[k] + shift[k]).fract();
                        if k < d {
                            rmax * (2.0 * v - 1.0)
                        } else {
                            lo + (hi - lo) * v
                        }
                    })
                    .collect();
                let r2: f64 = x[..d].iter().map(|a| a * a).sum();
                let rho = region.section.radius_at(x[d]);
                if r2 > rho * rho {
                    continue;
                }
                let (h, dens) = h_and_density(&region.patch, &x)?;
                acc += h.powf(p) * dens;
                mx = mx.max(h);
            }
            Ok((vol * acc / per as f64, mx))
        })
        .collect();
    let mut est = Vec::with_capacity(batches);
    let mut mx: f64 = 0.0;
    for r in results {
        let (a, m) = r?;
        est.push(a);
        mx = mx.max(m);
    }
    let mean = est.iter().sum::<f64>() / batches as f64;
    let var = est.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
    Ok((mean, mx, Some((var / batches as f64).sqrt())))
}

/// max |H| over cone regions at a tensor grid of link samples and radii.
pub fn cone_region_max_h(sol: &ApproximateSolution, samples: usize) -> Result<f64> {
    let mut mx: f64 = 0.0;
    for r in sol.regions_tagged(RegionTag::Cone) {
        let cone = &sol.cones[r.owner];
        let (a, b) = cone.spec.radial_range;
        for s in cone.spec.link_samples(samples) {
            for k in 0..3 {
                let t = a + (b - a) * (k as f64 + 0.5) / 3.0;
                let mut x = vec![t];
                x.extend(&s);
                mx = mx.max(r.patch.mean_curvature_at(&x)?.norm());
            }
        }
    }
    Ok(mx)
}

/// Integrates |H₀|^p over the patching and bridge regions of each member of
/// the family and fits the log-log slope in ε.
pub fn mean_curvature_scan<F>(variant: BridgeVariant, family: F, epsilons: &[f64], p: f64, opts: &QuadratureOptions) -> Result<ScalingReport>
where
    F: Fn(f64) -> Result<ApproximateSolution>,
{
    if epsilons.len() < 3 {
        return Err(Error::InvalidInput(format!("need at least 3 epsilon values for a fit, got {}", epsilons.len())));
    }
    let ratio = epsilons[1] / epsilons[0];
    let geometric = epsilons.windows(2).all(|w| w[1] > 0.0 && w[1] < w[0] && ((w[1] / w[0]) / ratio - 1.0).abs() < 1e-9);
    if !geometric {
        return Err(Error::InvalidInput("epsilons must form a decreasing geometric sequence".into()));
    }
    let (mut integrals, mut maxes, mut qmc) = (vec![], vec![], vec![]);
    let (mut n, mut m, mut cone_max) = (0, 0, 0.0f64);
    for &eps in epsilons {
        let sol = family(eps)?;
        n = sol.n;
        m = sol.ambient - sol.n - 1;
        cone_max = cone_max.max(cone_region_max_h(&sol, opts.cone_samples)?);
        let mut total = 0.0;
        let mut err: Option<f64> = None;
        let mut rm = RegionMax { patching: 0.0, bridge_interior: 0.0 };
        for region in sol.regions.iter().filter(|r| r.tag != RegionTag::Cone) {
            let (v, mx, e) = region_integral(region, p, opts)?;
            total += v;
            if let Some(e) = e {
                err = Some(err.unwrap_or(0.0).hypot(e));
            }
            match region.tag {
                RegionTag::Patching => rm.patching = rm.patching.max(mx),
                _ => rm.bridge_interior = rm.bridge_interior.max(mx),
            }
        }
        integrals.push(total);
        maxes.push(rm);
        qmc.push(err);
    }
    let fit = loglog_fit(epsilons, &integrals).filter(|_| integrals.iter().all(|v| *v > 0.0));
    Ok(ScalingReport {
        variant,
        n,
        m,
        p,
        epsilons: epsilons.to_vec(),
        integrals,
        fitted_slope: fit.map(|f| f.slope),
        r_squared: fit.map(|f| f.r_squared),
        pointwise_max: maxes,
        cone_max_h: cone_max,
        qmc_error: qmc,
    })
}
