//! Configuration-driven runs: verification suites, PDE/ODE comparisons and
//! parameter sweeps.

pub mod compare;
pub mod config;
pub mod output;
pub mod sweep;
pub mod verify;

use serde::Serialize;

pub use compare::{run_compare, ComparisonReport, ComparisonRun};
pub use config::ExperimentConfig;
pub use sweep::{run_sweep, SweepReport};
pub use verify::{run_verify, VerifyReport};

/// One named pass/fail outcome.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    /// measured quantity
    pub value: f64,
    /// threshold it was held against
    pub bound: f64,
    pub detail: String,
}

impl Check {
    /// Passes when `value <= bound`.
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            pass: value <= bound,
            value,
            bound,
            detail: String::new(),
        }
    }

    /// Passes when `value >= bound`.
    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            pass: value >= bound,
            value,
            bound,
            detail: String::new(),
        }
    }

    pub fn failed(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass: false,
            value: f64::NAN,
            bound: f64::NAN,
            detail: detail.into(),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    pub fn line(&self) -> String {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        let mut s = format!("{tag} {} value={:.6e} bound={:.6e}", self.name, self.value, self.bound);
        if !self.detail.is_empty() {
            s.push_str(" (");
            s.push_str(&self.detail);
            s.push(')');
        }
        s
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}
