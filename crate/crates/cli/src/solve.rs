//! `solve`: runs one of the perturbation solvers on a preset problem and
//! writes a trace, the final surface and a JSON summary.

use std::path::Path;

use conebridge::perturbation::{fixed_point_run, BoundaryData, DiscreteSurface, FixedPointConfig, GraphSolution, NewtonOptions};
use serde::Serialize;

use crate::problems::{field, flat_strip, flat_strip_data, holomorphic_square, lo_annulus, toy_bridge, toy_bridge_data, z_squared};
use crate::{write_output, Exit};

pub const PROBLEMS: [(&str, &[&str]); 3] =
    [("toy-bridge", &["clifford", "flat-strip"]), ("graph-dirichlet", &["holomorphic-z2"]), ("lo-annulus", &["default"])];

#[derive(Debug, Serialize)]
pub struct SolveReport {
    pub problem: String,
    pub preset: String,
    pub converged: bool,
    pub iterations: usize,
    pub final_residual: f64,
    /// Nodewise distance to the analytic solution, when one is known.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nodewise_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contraction_ratios: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sup_u: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restart_gap: Option<f64>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Default preset of a problem, and whether `preset` is known for it.
pub fn resolve_preset(problem: &str, preset: Option<&str>) -> Result<String, Exit> {
    let Some((_, presets)) = PROBLEMS.iter().find(|(p, _)| *p == problem) else {
        let names: Vec<&str> = PROBLEMS.iter().map(|p| p.0).collect();
        return Err(Exit::usage(format!("unknown problem '{problem}' (expected one of {})", names.join(", "))));
    };
    let chosen = preset.unwrap_or(presets[0]);
    if !presets.contains(&chosen) {
        return Err(Exit::usage(format!("unknown preset '{chosen}' for {problem} (expected one of {})", presets.join(", "))));
    }
    Ok(chosen.to_string())
}

fn newton_trace(sol: &GraphSolution) -> String {
    sol.history.iter().enumerate().map(|(k, r)| format!("{{\"step\":{k},\"residual\":{}}}\n", serde_json::to_string(r).unwrap())).collect()
}

fn write_surface(out: &Path, stem: &str, s: &DiscreteSurface, u: &conebridge::geometry::grid::NormalSectionField) -> Result<(), Exit> {
    match s.export_obj(u) {
        Ok(obj) => write_output(out, &format!("surface-{stem}.obj"), &obj),
        Err(_) => write_output(out, &format!("surface-{stem}.csv"), &s.export_csv(u)),
    }
}

fn fixed_point(out: &Path, stem: &str, preset: &str, cfg: &FixedPointConfig) -> Result<SolveReport, Exit> {
    let fail = |e: conebridge::Error| Exit::failure(e.to_string());
    let (s, psi) = match preset {
        "flat-strip" => {
            let s = flat_strip([61, 21]).map_err(fail)?;
            let normal = s.geometry.node(0).normals[0][2];
            let psi = field(&s, |x| vec![normal * flat_strip_data(x)]);
            (s, psi)
        }
        _ => {
            let eps = 0.05;
            let s = toy_bridge(eps).map_err(fail)?;
            let psi = field(&s, |x| vec![toy_bridge_data(eps, x)]);
            (s, psi)
        }
    };
    let (st, err) = fixed_point_run(&s, &BoundaryData::Fixed(psi), cfg).map_err(fail)?;
    write_output(out, &format!("trace-{stem}.jsonl"), &st.trace_jsonl())?;
    write_surface(out, stem, &s, &st.u)?;
    let last = st.history.last().map(|r| r.residual_sup).unwrap_or(f64::NAN);
    Ok(SolveReport {
        problem: "toy-bridge".into(),
        preset: preset.into(),
        converged: st.converged,
        iterations: st.history.len().saturating_sub(1),
        final_residual: last,
        nodewise_error: None,
        contraction_ratios: Some(st.contraction_ratios()),
        sup_u: Some(st.u.sup_norm()),
        restart_gap: None,
        passed: st.converged && err.is_none(),
        error: err.map(|e| e.to_string()),
    })
}

/// Runs the problem and writes its files. The returned report says whether
/// the run met its target; I/O and setup problems come back as `Exit`.
pub fn run_solve(problem: &str, preset: &str, cfg: &FixedPointConfig, out: &Path) -> Result<SolveReport, Exit> {
    let stem = format!("{problem}-{preset}");
    let report = match problem {
        "toy-bridge" => fixed_point(out, &stem, preset, cfg)?,
        "graph-dirichlet" => {
            let opts = NewtonOptions::default();
            match holomorphic_square(64, &opts) {
                Ok(sol) => {
                    write_output(out, &format!("trace-{stem}.jsonl"), &newton_trace(&sol))?;
                    if let Some(obj) = crate::problems::graph_obj(&sol) {
                        write_output(out, &format!("surface-{stem}.obj"), &obj)?;
                    }
                    let err = sol.max_error(z_squared);
                    SolveReport {
                        problem: problem.into(),
                        preset: preset.into(),
                        converged: true,
                        iterations: sol.steps,
                        final_residual: sol.residual,
                        nodewise_error: Some(err),
                        contraction_ratios: None,
                        sup_u: None,
                        restart_gap: None,
                        passed: err < 1e-6,
                        error: None,
                    }
                }
                Err(e) => failed(problem, preset, e),
            }
        }
        _ => match lo_annulus(15, &NewtonOptions::default()) {
            Ok(lo) => {
                write_output(out, &format!("trace-{stem}.jsonl"), &newton_trace(&lo.from_bump))?;
                write_output(out, &format!("surface-{stem}.csv"), &crate::problems::graph_csv(&lo.at_cone))?;
                let residual = lo.at_cone.residual.max(lo.from_bump.residual);
                SolveReport {
                    problem: problem.into(),
                    preset: preset.into(),
                    converged: true,
                    iterations: lo.from_bump.steps,
                    final_residual: residual,
                    nodewise_error: None,
                    contraction_ratios: None,
                    sup_u: None,
                    restart_gap: Some(lo.gap),
                    passed: residual < 1e-6,
                    error: None,
                }
            }
            Err(e) => failed(problem, preset, e),
        },
    };
    let mut json = serde_json::to_string_pretty(&report).expect("report serialises");
    json.push('\n');
    write_output(out, &format!("solve-{stem}.json"), &json)?;
    Ok(report)
}

fn failed(problem: &str, preset: &str, e: conebridge::Error) -> SolveReport {
    SolveReport {
        problem: problem.into(),
        preset: preset.into(),
        converged: false,
        iterations: 0,
        final_residual: f64::NAN,
        nodewise_error: None,
        contraction_ratios: None,
        sup_u: None,
        restart_gap: None,
        passed: false,
        error: Some(e.to_string()),
    }
}
