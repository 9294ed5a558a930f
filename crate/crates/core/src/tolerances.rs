//! Tolerance defaults shared across modules. Every value can be overridden per run.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "camelCase", default)]
pub struct Tolerances {
    pub complex_structure: f64,
    pub rank: f64,
    pub factorial_gap: f64,
    pub invariance: f64,
    pub infrared: f64,
    pub support_leak: f64,
    pub gram_condition: f64,
    pub projection_residual: f64,
    pub pole: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            complex_structure: 1e-12,
            rank: 1e-10,
            factorial_gap: 1e-10,
            invariance: 1e-8,
            infrared: 1e-6,
            support_leak: 1e-10,
            gram_condition: 1e10,
            projection_residual: 1e-2,
            pole: 1e-14,
        }
    }
}
