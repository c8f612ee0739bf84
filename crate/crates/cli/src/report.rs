//! Output envelope and renderers. Every run reports the command, the
//! effective configuration, the structured results, tool versions, and
//! wall-clock time, so a result file is reproducible on its own.

use crate::config::ExperimentConfig;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Report<'a> {
    pub command: &'a str,
    pub config: &'a ExperimentConfig,
    pub results: serde_json::Value,
    pub versions: Versions,
    pub timing_ms: u128,
}

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub lossldp: &'static str,
    pub cli: &'static str,
}

impl Versions {
    pub fn current() -> Self {
        Versions {
            lossldp: lossldp::VERSION,
            cli: env!("CARGO_PKG_VERSION"),
        }
    }
}

/// One row of the size table produced by estimate-style commands.
#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub n: u64,
    pub estimate: f64,
    pub stderr: Option<f64>,
    pub method: &'static str,
}

pub fn render_json(report: &Report) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub fn render_csv(rows: &[TableRow]) -> String {
    let mut out = String::from("n,estimate,stderr,method\n");
    for r in rows {
        let stderr = r.stderr.map(|s| s.to_string()).unwrap_or_default();
        out.push_str(&format!("{},{},{},{}\n", r.n, r.estimate, stderr, r.method));
    }
    out
}
