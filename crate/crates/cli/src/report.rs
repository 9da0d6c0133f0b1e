//! Machine- and human-readable run reports.

use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// Calibrated or informational; never fails a run.
    Measured,
}

impl Status {
    fn label(&self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Measured => "INFO",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub values: Map<String, Value>,
}

impl Check {
    pub fn new(name: impl Into<String>, status: Status) -> Self {
        Check {
            name: name.into(),
            status,
            values: Map::new(),
        }
    }

    /// Pass or fail according to `ok`.
    pub fn assert(name: impl Into<String>, ok: bool) -> Self {
        Self::new(name, if ok { Status::Pass } else { Status::Fail })
    }

    pub fn with(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.values.insert(key.to_string(), v.into());
        self
    }

    /// Floats go through `f64_value`, so text and JSON show the same digits.
    pub fn num(self, key: &str, v: f64) -> Self {
        self.with(key, f64_value(v))
    }
}

/// Finite floats as JSON numbers; non-finite values as strings.
pub fn f64_value(v: f64) -> Value {
    serde_json::Number::from_f64(v)
        .map(Value::Number)
        .unwrap_or_else(|| Value::String(v.to_string()))
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub config: RunConfig,
    pub checks: Vec<Check>,
    pub wall_time_s: f64,
}

impl Report {
    pub fn new(command: impl Into<String>, config: &RunConfig) -> Self {
        Report {
            command: command.into(),
            config: config.clone(),
            checks: Vec::new(),
            wall_time_s: 0.0,
        }
    }

    pub fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn failed(&self) -> usize {
        self.checks.iter().filter(|c| c.status == Status::Fail).count()
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    /// One line per check; every value rendered exactly as in the JSON.
    pub fn to_text(&self) -> String {
        let mut s = format!("# {}\n", self.command);
        for c in &self.checks {
            s.push_str(&format!("{} {}", c.status.label(), c.name));
            for (k, v) in &c.values {
                s.push_str(&format!(" {k}={v}"));
            }
            s.push('\n');
        }
        let pass = self.checks.iter().filter(|c| c.status == Status::Pass).count();
        s.push_str(&format!(
            "# {} passed, {} failed, {} measured in {:.3} s\n",
            pass,
            self.failed(),
            self.checks.len() - pass - self.failed(),
            self.wall_time_s
        ));
        s
    }
}
