//! Run manifest: one JSON record per run with the config hash, code
//! version, timestamps, final status and summary diagnostics.

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunManifest {
    pub config_hash: String,
    pub code_version: String,
    pub created_unix_ms: u128,
    pub status: String,
    pub exit_code: i32,
    pub initial_data_norm: f64,
    pub iterations: usize,
    pub last_residual: f64,
    pub contraction_ratios: Vec<f64>,
    pub solution_norm_total: f64,
    pub interface_residual_max: f64,
}

/// FNV-1a over the canonical serialization; stable across runs and builds.
pub fn config_hash(cfg: &RunConfig) -> String {
    let text = toml::to_string(cfg).unwrap_or_default();
    let mut h: u64 = 0xcbf29ce484222325;
    for b in text.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

pub fn now_unix_ms() -> u128 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}
