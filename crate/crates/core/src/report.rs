//! Structured verification results, serialized as JSON.

use serde::{Deserialize, Serialize};

/// One checked identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// The identity being checked, written out as a formula.
    pub formula: String,
    pub n_samples: usize,
    pub max_dev: f64,
    pub mean_dev: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Check {
    /// Builds a check from per-sample deviations; passes when the largest is
    /// within `tol` (an empty sample set fails).
    pub fn from_deviations(name: &str, formula: &str, devs: &[f64], tol: f64) -> Self {
        let max_dev = if devs.iter().any(|d| d.is_nan()) {
            f64::NAN
        } else {
            devs.iter().copied().fold(0.0_f64, f64::max)
        };
        let mean_dev = if devs.is_empty() { 0.0 } else { devs.iter().sum::<f64>() / devs.len() as f64 };
        Self {
            name: name.to_string(),
            formula: formula.to_string(),
            n_samples: devs.len(),
            max_dev,
            mean_dev,
            tol,
            pass: !devs.is_empty() && max_dev <= tol,
        }
    }

    /// A check whose pass condition is not `max_dev ≤ tol` (e.g. a lower bound
    /// or a ratio window); the caller decides.
    pub fn with_verdict(name: &str, formula: &str, n_samples: usize, max_dev: f64, mean_dev: f64, tol: f64, pass: bool) -> Self {
        Self {
            name: name.to_string(),
            formula: formula.to_string(),
            n_samples,
            max_dev,
            mean_dev,
            tol,
            pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub suite: String,
    pub seed: u64,
    pub n_samples: usize,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(suite: &str, seed: u64, n_samples: usize) -> Self {
        Self { suite: suite.to_string(), seed, n_samples, checks: Vec::new() }
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn extend(&mut self, other: Report) {
        self.checks.extend(other.checks);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// The failing check with the largest `max_dev / tol`.
    pub fn worst_failure(&self) -> Option<&Check> {
        self.checks
            .iter()
            .filter(|c| !c.pass)
            .max_by(|a, b| ratio(a).total_cmp(&ratio(b)))
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    /// One line per check, `PASS`/`FAIL` first.
    pub fn summary(&self) -> String {
        let mut s = format!("suite {} (seed {}, {} samples)\n", self.suite, self.seed, self.n_samples);
        for c in &self.checks {
            s.push_str(&format!(
                "  {} {:<40} max {:.3e}  mean {:.3e}  tol {:.1e}\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.max_dev,
                c.mean_dev,
                c.tol
            ));
        }
        s
    }
}

fn ratio(c: &Check) -> f64 {
    if c.max_dev.is_nan() {
        f64::INFINITY
    } else if c.tol > 0.0 {
        c.max_dev / c.tol
    } else {
        c.max_dev
    }
}
