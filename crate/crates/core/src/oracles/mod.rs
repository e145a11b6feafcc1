//! Independent reference computations.

pub mod kernel;
pub mod newton;
pub mod plane;
pub mod radial;

use serde::{Deserialize, Serialize};

/// One oracle result as emitted by the command-line driver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRecord {
    pub op: String,
    pub inputs: serde_json::Value,
    pub outputs: serde_json::Value,
    pub error_estimate: f64,
}
