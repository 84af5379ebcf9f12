use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use conebridge::bridges::QuadratureOptions;
use conebridge::perturbation::FixedPointConfig;
use conebridge_cli::config::{output_dir, LoadedConfig};
use conebridge_cli::report::VerifyReport;
use conebridge_cli::scan::{preset, run_scan, ScanRequest, DEFAULT_EPSILONS};
use conebridge_cli::solve::{resolve_preset, run_solve};
use conebridge_cli::suites::{run_suite, SuiteContext};
use conebridge_cli::{write_output, Exit};

/// Minimal cones, ε-bridges and the perturbation solver from the command line.
#[derive(Parser, Debug)]
#[command(name = "conebridge", version)]
struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every randomised sample.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 1 is the determinism reference.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory (otherwise CONEBRIDGE_OUT, the config, or ./conebridge-out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a verification suite and write a JSON report.
    Verify {
        #[arg(long, value_parser = ["geometry", "cones", "spectrum", "ode", "bridges", "solver", "all"])]
        suite: String,
    },
    /// Mean-curvature scaling scan over a list of ε.
    Scan {
        /// improved-n4, ruled-n6, lp-scaling or flat.
        #[arg(long, conflicts_with_all = ["variant", "n", "p", "eps"])]
        preset: Option<String>,
        /// ruled, perturbed, planar-path or flat.
        #[arg(long)]
        variant: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        p: Option<f64>,
        /// Comma-separated, strictly decreasing.
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
    },
    /// Run a perturbation solver on a preset problem.
    Solve {
        /// toy-bridge, graph-dirichlet or lo-annulus.
        problem: String,
        #[arg(long)]
        preset: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("conebridge: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}

fn run(cli: Cli) -> Result<(), Exit> {
    let cfg = LoadedConfig::load(cli.config.as_deref())?;
    let file = &cfg.file;
    let threads = cli.threads.or(file.run.threads).unwrap_or(0);
    if cli.threads == Some(0) {
        return Err(Exit::usage("--threads must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Exit::failure(format!("cannot start the worker pool: {e}")))?;
    let seed = cli.seed.or(file.run.seed).unwrap_or(0);
    let out = output_dir(cli.out.as_deref(), file);
    let defaults = FixedPointConfig::default();
    let fixed_point = FixedPointConfig {
        tol: file.solver.tol.unwrap_or(defaults.tol),
        max_iter: file.solver.max_iter.unwrap_or(defaults.max_iter),
        max_lambda_iter: file.solver.max_lambda_iter.unwrap_or(defaults.max_lambda_iter),
        theta: file.solver.theta.unwrap_or(defaults.theta),
        lambda_tol: file.solver.lambda_tol.unwrap_or(defaults.lambda_tol),
        ..defaults
    };

    match cli.command {
        Command::Verify { suite } => {
            let ctx = SuiteContext { seed, tolerances: file.tolerances.clone(), spectrum_resolution: file.spectrum.resolution, fixed_point };
            let checks = run_suite(&suite, &ctx).ok_or_else(|| Exit::usage(format!("unknown suite '{suite}'")))?;
            let report = VerifyReport::new(&suite, seed, checks);
            let name = format!("verify-{suite}.json");
            write_output(&out, &name, &report.to_json())?;
            print!("{}", report.summary());
            println!("report: {}", out.join(&name).display());
            if report.passed {
                Ok(())
            } else {
                let failed = report.checks.iter().filter(|c| !c.passed).count();
                Err(Exit::failure(format!("{failed} check(s) failed")))
            }
        }
        Command::Scan { preset: name, variant, n, p, eps } => {
            let requests = match name {
                Some(name) => preset(&name).ok_or_else(|| Exit::usage(format!("unknown scan preset '{name}'")))?,
                None => vec![ScanRequest {
                    variant: variant.or(file.scan.variant.clone()).unwrap_or_else(|| "perturbed".into()),
                    n: n.or(file.scan.n).unwrap_or(4),
                    p: p.or(file.scan.p).unwrap_or(2.0),
                    epsilons: eps.or(file.scan.epsilons.clone()).unwrap_or_else(|| DEFAULT_EPSILONS.to_vec()),
                    length: file.scan.length.unwrap_or(1.5),
                }],
            };
            for r in &requests {
                if r.epsilons.iter().any(|e| !(*e > 0.0)) || r.epsilons.windows(2).any(|w| w[1] >= w[0]) {
                    return Err(Exit::usage("epsilon list must be positive and strictly decreasing"));
                }
                if !(r.p >= 1.0) {
                    return Err(Exit::usage("p must be at least 1"));
                }
            }
            let d = QuadratureOptions::default();
            let q = &file.quadrature;
            let quad = QuadratureOptions {
                cross_order: q.cross_order.unwrap_or(d.cross_order),
                panel_order: q.panel_order.unwrap_or(d.panel_order),
                node_budget: q.node_budget.unwrap_or(d.node_budget),
                qmc_points: q.qmc_points.unwrap_or(d.qmc_points),
                ..d
            };
            let mut all_passed = true;
            for r in &requests {
                let outcome = run_scan(r, &quad, &file.tolerances)?;
                let tag = r.tag();
                write_output(&out, &format!("scan-{tag}.json"), &outcome.to_json())?;
                write_output(&out, &format!("scan-{tag}.csv"), &outcome.scan.to_csv())?;
                let slope = outcome.scan.fitted_slope.map(|s| format!("{s:.3}")).unwrap_or_else(|| "n/a".into());
                let r2 = outcome.scan.r_squared.map(|s| format!("{s:.4}")).unwrap_or_else(|| "n/a".into());
                println!("{tag}: slope {slope}, r² {r2}, {}", if outcome.passed { "ok" } else { "FAIL" });
                all_passed &= outcome.passed;
            }
            if all_passed {
                Ok(())
            } else {
                Err(Exit::failure("scan below its expected scaling"))
            }
        }
        Command::Solve { problem, preset } => {
            let preset = resolve_preset(&problem, preset.as_deref())?;
            let report = run_solve(&problem, &preset, &fixed_point, &out)?;
            println!(
                "{problem} ({preset}): {} iterations, residual {:.3e}{}",
                report.iterations,
                report.final_residual,
                report.nodewise_error.map(|e| format!(", nodewise error {e:.3e}")).unwrap_or_default()
            );
            if report.passed {
                Ok(())
            } else {
                Err(Exit::failure(report.error.unwrap_or_else(|| "solver missed its target".into())))
            }
        }
    }
}
