//! Run reports: one row per executed check, serialized with the library
//! version and the fully resolved configuration so runs are reproducible.

use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    pub check: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub elapsed_ms: u64,
}

impl CheckRow {
    pub fn new(check: impl Into<String>, residual: f64, tolerance: f64, elapsed_ms: u64) -> Self {
        CheckRow {
            check: check.into(),
            residual,
            tolerance,
            pass: residual <= tolerance,
            elapsed_ms,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolvedConfig {
    pub g: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub rank_tol: f64,
    pub tau_source: String,
    pub slow: bool,
    pub threads: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub version: String,
    pub command: String,
    pub config: ResolvedConfig,
    pub checks: Vec<CheckRow>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extra: Option<serde_json::Value>,
}

impl Report {
    pub fn new(command: &str, config: ResolvedConfig, checks: Vec<CheckRow>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        Report {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config,
            checks,
            pass,
            extra: None,
        }
    }

    pub fn print_table(&self) {
        for row in &self.checks {
            println!(
                "{:<46} residual {:>12.3e}  tol {:>8.1e}  {:>4}  {} ms",
                row.check,
                row.residual,
                row.tolerance,
                if row.pass { "ok" } else { "FAIL" },
                row.elapsed_ms
            );
        }
        println!(
            "{} checks, {} failed",
            self.checks.len(),
            self.checks.iter().filter(|c| !c.pass).count()
        );
    }
}

/// Complex vectors and matrices serialize as nested [re, im] pairs.
pub fn complex_vec_json(v: &theta_forms::CVector) -> serde_json::Value {
    serde_json::Value::Array(v.iter().map(|z| serde_json::json!([z.re, z.im])).collect())
}

pub fn complex_mat_json(m: &theta_forms::CMatrix) -> serde_json::Value {
    serde_json::Value::Array(
        (0..m.nrows())
            .map(|r| {
                serde_json::Value::Array(
                    (0..m.ncols())
                        .map(|c| serde_json::json!([m[(r, c)].re, m[(r, c)].im]))
                        .collect(),
                )
            })
            .collect(),
    )
}
