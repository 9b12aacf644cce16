//! Pass/fail reports listing every violated identity.

use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub location: String,
    pub residual: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub passed: bool,
    pub violations: Vec<Violation>,
}

impl CheckReport {
    pub fn new(check: &str, violations: Vec<Violation>) -> Self {
        CheckReport {
            check: check.to_string(),
            passed: violations.is_empty(),
            violations,
        }
    }
}
