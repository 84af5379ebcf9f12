//! Run configuration: a TOML file of `key = value` sections, then command-line
//! overrides on top.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::Exit;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub scan: ScanSection,
    #[serde(default)]
    pub quadrature: QuadratureSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub spectrum: SpectrumSection,
    /// Overrides for check bounds, keyed by check name.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub variant: Option<String>,
    pub n: Option<usize>,
    pub p: Option<f64>,
    pub epsilons: Option<Vec<f64>>,
    pub length: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSection {
    pub cross_order: Option<usize>,
    pub panel_order: Option<usize>,
    pub node_budget: Option<usize>,
    pub qmc_points: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub max_lambda_iter: Option<usize>,
    pub theta: Option<f64>,
    pub lambda_tol: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    pub resolution: Option<usize>,
}

/// A parsed file together with its text, so later checks can point at lines.
#[derive(Debug, Default)]
pub struct LoadedConfig {
    pub file: FileConfig,
    pub path: Option<PathBuf>,
    text: String,
}

impl LoadedConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, Exit> {
        let Some(path) = path else {
            return Ok(LoadedConfig::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| Exit::usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, Some(path))
    }

    pub fn parse(text: &str, path: Option<&Path>) -> Result<Self, Exit> {
        let name = path.map(|p| p.display().to_string()).unwrap_or_else(|| "<config>".into());
        let file: FileConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| line_at(text, s.start)).unwrap_or(1);
            Exit::usage(format!("{name}:{line}: {}", e.message()))
        })?;
        let cfg = LoadedConfig { file, path: path.map(Path::to_path_buf), text: text.to_string() };
        cfg.validate(&name)?;
        Ok(cfg)
    }

    /// Line of `key` inside `[section]`, or 1 when it cannot be found.
    pub fn line_of(&self, section: &str, key: &str) -> usize {
        let mut current = String::new();
        for (i, raw) in self.text.lines().enumerate() {
            let l = raw.trim();
            if l.starts_with('[') {
                current = l.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            } else if current == section && l.split('=').next().map(|k| k.trim().trim_matches('"')) == Some(key) {
                return i + 1;
            }
        }
        1
    }

    fn validate(&self, name: &str) -> Result<(), Exit> {
        let bad = |section: &str, key: &str, msg: &str| Exit::usage(format!("{name}:{}: {section}.{key}: {msg}", self.line_of(section, key)));
        let f = &self.file;
        for (k, v) in &f.tolerances {
            if !(*v > 0.0) || !v.is_finite() {
                return Err(bad("tolerances", k, "tolerances must be positive"));
            }
        }
        let positive = [("tol", f.solver.tol), ("theta", f.solver.theta), ("lambda_tol", f.solver.lambda_tol)];
        for (k, v) in positive {
            if let Some(v) = v {
                if !(v > 0.0) {
                    return Err(bad("solver", k, "must be positive"));
                }
            }
        }
        if let Some(t) = f.solver.theta {
            if t > 1.0 {
                return Err(bad("solver", "theta", "damping must lie in (0, 1]"));
            }
        }
        if let Some(eps) = &f.scan.epsilons {
            if eps.iter().any(|e| !(*e > 0.0)) || eps.windows(2).any(|w| w[1] >= w[0]) {
                return Err(bad("scan", "epsilons", "epsilon list must be positive and strictly decreasing"));
            }
        }
        if let Some(p) = f.scan.p {
            if !(p >= 1.0) {
                return Err(bad("scan", "p", "p must be at least 1"));
            }
        }
        if f.run.threads == Some(0) {
            return Err(bad("run", "threads", "thread count must be at least 1"));
        }
        Ok(())
    }
}

fn line_at(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Output directory: flag, then `CONEBRIDGE_OUT`, then the file, then
/// `conebridge-out`.
pub fn output_dir(flag: Option<&Path>, file: &FileConfig) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os("CONEBRIDGE_OUT").filter(|v| !v.is_empty()) {
        return PathBuf::from(p);
    }
    file.run.out_dir.clone().unwrap_or_else(|| PathBuf::from("conebridge-out"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_errors_carry_line_numbers() {
        let e = LoadedConfig::parse("[run]\nseed = 7\nthreads = = 2\n", None).unwrap_err();
        assert_eq!(e.code, 2);
        assert!(e.message.starts_with("<config>:3:"), "{}", e.message);
        let e = LoadedConfig::parse("[run]\nseed = 7\n\n[scan]\nvariant = \"ruled\"\nbogus = 1\n", None).unwrap_err();
        assert!(e.message.starts_with("<config>:6:"), "{}", e.message);
    }

    #[test]
    fn validation_points_at_the_offending_key() {
        let e = LoadedConfig::parse("[scan]\nn = 4\nepsilons = [0.1, 0.2, 0.05]\n", None).unwrap_err();
        assert!(e.message.starts_with("<config>:3: scan.epsilons"), "{}", e.message);
        let e = LoadedConfig::parse("[tolerances]\nlo_mss_analytic = -1e-5\n", None).unwrap_err();
        assert!(e.message.starts_with("<config>:2:"), "{}", e.message);
        let ok = LoadedConfig::parse("[run]\nseed = 3\n[tolerances]\nlo_mss_analytic = 1e-6\n", None).unwrap();
        assert_eq!(ok.file.run.seed, Some(3));
    }
}
