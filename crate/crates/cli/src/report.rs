use std::collections::BTreeMap;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Below,
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

impl Relation {
    fn holds(self, value: f64, bound: f64) -> bool {
        match self {
            Relation::Below => value < bound,
            Relation::AtMost => value <= bound,
            Relation::AtLeast => value >= bound,
        }
    }
}

/// One measured invariant.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub suite: String,
    pub name: String,
    /// Acceptance criterion this check belongs to, if any.
    pub criterion: Option<u8>,
    pub measured: Option<f64>,
    pub relation: Relation,
    pub bound: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Collects checks for one suite; bounds can be overridden by name.
pub struct Recorder<'a> {
    suite: &'static str,
    overrides: &'a BTreeMap<String, f64>,
    pub checks: Vec<Check>,
}

impl<'a> Recorder<'a> {
    pub fn new(suite: &'static str, overrides: &'a BTreeMap<String, f64>) -> Self {
        Recorder { suite, overrides, checks: Vec::new() }
    }

    pub fn bound(&self, name: &str, default: f64) -> f64 {
        self.overrides.get(name).copied().unwrap_or(default)
    }

    pub fn check(&mut self, criterion: Option<u8>, name: &str, measured: f64, relation: Relation, bound: f64) {
        let bound = self.bound(name, bound);
        let ok = measured.is_finite() && relation.holds(measured, bound);
        self.checks.push(Check {
            suite: self.suite.into(),
            name: name.into(),
            criterion,
            measured: measured.is_finite().then_some(measured),
            relation,
            bound,
            passed: ok,
            error: None,
        });
    }

    /// Records the check, or a failure carrying the error message.
    pub fn check_result<E: std::fmt::Display>(&mut self, criterion: Option<u8>, name: &str, measured: Result<f64, E>, relation: Relation, bound: f64) {
        match measured {
            Ok(v) => self.check(criterion, name, v, relation, bound),
            Err(e) => self.fail(criterion, name, relation, bound, e.to_string()),
        }
    }

    pub fn fail(&mut self, criterion: Option<u8>, name: &str, relation: Relation, bound: f64, error: String) {
        let bound = self.bound(name, bound);
        self.checks.push(Check {
            suite: self.suite.into(),
            name: name.into(),
            criterion,
            measured: None,
            relation,
            bound,
            passed: false,
            error: Some(error),
        });
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub suite: String,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn new(suite: &str, seed: u64, checks: Vec<Check>) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        VerifyReport { suite: suite.into(), seed, passed, checks }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }

    /// One line per check, for the terminal.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let m = c.measured.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "n/a".into());
            let rel = match c.relation {
                Relation::Below => "<",
                Relation::AtMost => "<=",
                Relation::AtLeast => ">=",
            };
            s.push_str(&format!(
                "{} {:<9} {:<40} {m} {rel} {:.3e}",
                if c.passed { "ok  " } else { "FAIL" },
                c.suite,
                c.name,
                c.bound
            ));
            if let Some(e) = &c.error {
                s.push_str(&format!("  ({e})"));
            }
            s.push('\n');
        }
        s
    }
}
