//! Machine-readable suite reports: one record per check, a pass/fail status,
//! and reproduction data for failures.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::Error;

#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub expected: String,
    pub computed: String,
    /// How the expected value was obtained: "closed-form", "brute-force",
    /// "reference-table", or "identity".
    pub provenance: String,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub suite: String,
    pub config_hash: String,
    pub status: String,
    pub checks: Vec<CheckRecord>,
    pub wall_time_ms: u128,
    pub details: serde_json::Value,
    #[serde(skip)]
    started: Instant,
}

impl Report {
    pub fn new(suite: &str, config_hash: &str) -> Report {
        Report {
            suite: suite.into(),
            config_hash: config_hash.into(),
            status: "running".into(),
            checks: Vec::new(),
            wall_time_ms: 0,
            details: serde_json::Value::Null,
            started: Instant::now(),
        }
    }

    pub fn push(&mut self, name: &str, expected: String, computed: String, provenance: &str, pass: bool) {
        self.checks.push(CheckRecord {
            name: name.into(),
            expected,
            computed,
            provenance: provenance.into(),
            pass,
        });
    }

    pub fn push_eq<T: PartialEq + std::fmt::Debug>(
        &mut self,
        name: &str,
        expected: &T,
        computed: &T,
        provenance: &str,
    ) {
        self.push(
            name,
            format!("{expected:?}"),
            format!("{computed:?}"),
            provenance,
            expected == computed,
        );
    }

    pub fn finalize(&mut self) {
        self.wall_time_ms = self.started.elapsed().as_millis();
        self.status = if self.checks.iter().all(|c| c.pass) { "pass" } else { "fail" }.into();
    }

    pub fn passed(&self) -> bool {
        self.status == "pass"
    }

    pub fn write(&self, path: &Path) -> Result<(), Error> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn print_summary(&self) {
        println!("suite {}: {}", self.suite, self.status);
        for c in &self.checks {
            let mark = if c.pass { "ok " } else { "FAIL" };
            println!("  [{mark}] {} (expected {}, got {})", c.name, c.expected, c.computed);
        }
    }
}
