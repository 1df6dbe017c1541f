//! Machine-readable run reports (`--json`). The layout is described by
//! `schema/run_report.schema.json`; bump `REPORT_VERSION` on any breaking
//! change.

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub graph_sha256: Option<String>,
    pub lists_sha256: Option<String>,
}

impl InputDigest {
    pub fn none() -> Self {
        InputDigest { graph_sha256: None, lists_sha256: None }
    }

    pub fn of(graph: &str, lists: Option<&str>) -> Self {
        InputDigest {
            graph_sha256: Some(sha256(graph)),
            lists_sha256: lists.map(sha256),
        }
    }
}

pub fn sha256(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub report_version: u32,
    pub tool_version: &'static str,
    pub command: &'static str,
    pub input: InputDigest,
    pub config: Value,
    pub result: Value,
    pub elapsed_seconds: f64,
}

impl RunReport {
    pub fn new(command: &'static str, input: InputDigest, config: Value, result: Value, elapsed: f64) -> Self {
        RunReport {
            report_version: REPORT_VERSION,
            tool_version: env!("CARGO_PKG_VERSION"),
            command,
            input,
            config,
            result,
            elapsed_seconds: elapsed,
        }
    }
}

/// The schema shipped with the crate.
pub const SCHEMA: &str = include_str!("../schema/run_report.schema.json");
