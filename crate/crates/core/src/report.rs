//! Pass/fail records produced by the verification routines.

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub trials: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckReport {
    /// Pass iff every residual is finite and at most `tolerance`.
    pub fn from_residuals(name: &str, tolerance: f64, residuals: &[f64]) -> Self {
        let max_residual = if residuals.iter().any(|r| r.is_nan()) {
            f64::NAN
        } else {
            residuals.iter().copied().fold(0.0_f64, f64::max)
        };
        CheckReport {
            name: name.to_string(),
            trials: residuals.len(),
            max_residual,
            tolerance,
            pass: max_residual <= tolerance,
            detail: None,
        }
    }

    /// A boolean check counted over trials; the residual is the failure count.
    pub fn from_failures(name: &str, trials: usize, failures: usize) -> Self {
        CheckReport {
            name: name.to_string(),
            trials,
            max_residual: failures as f64,
            tolerance: 0.0,
            pass: failures == 0,
            detail: None,
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

pub fn all_pass(reports: &[CheckReport]) -> bool {
    reports.iter().all(|r| r.pass)
}
