//! Run reports: config echo, results, verdicts, plot series and timing.

use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::ExperimentConfig;

/// One tolerance check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub check: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// A named curve for the long-format plot CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<[f64; 2]>,
}

/// Wall-clock information; the only part of a report that varies between runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timestamp {
    pub started_unix_seconds: f64,
    pub phases: Vec<(String, f64)>,
    pub total_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub config: ExperimentConfig,
    pub results: Value,
    pub verdicts: Vec<Verdict>,
    #[serde(default)]
    pub series: Vec<Series>,
    pub timestamp: Timestamp,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize") + "\n"
    }
}

/// Collects verdicts and phase timings while a command runs.
pub struct Recorder {
    started: Instant,
    started_unix: f64,
    phase_start: Instant,
    pub phases: Vec<(String, f64)>,
    pub verdicts: Vec<Verdict>,
    pub series: Vec<Series>,
}

impl Default for Recorder {
    fn default() -> Self {
        Self::new()
    }
}

impl Recorder {
    pub fn new() -> Self {
        let now = Instant::now();
        Self {
            started: now,
            started_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs_f64())
                .unwrap_or(0.0),
            phase_start: now,
            phases: Vec::new(),
            verdicts: Vec::new(),
            series: Vec::new(),
        }
    }

    /// Closes the current phase under `name`.
    pub fn phase(&mut self, name: &str) {
        let now = Instant::now();
        self.phases
            .push((name.to_string(), (now - self.phase_start).as_secs_f64()));
        self.phase_start = now;
    }

    /// Records `value <= tolerance`; NaN fails.
    pub fn at_most(&mut self, check: impl Into<String>, value: f64, tolerance: f64) {
        self.verdicts.push(Verdict {
            check: check.into(),
            value,
            tolerance,
            pass: value <= tolerance,
        });
    }

    pub fn finish(self, command: &str, config: ExperimentConfig, results: Value) -> RunReport {
        RunReport {
            command: command.to_string(),
            config,
            results,
            verdicts: self.verdicts,
            series: self.series,
            timestamp: Timestamp {
                started_unix_seconds: self.started_unix,
                phases: self.phases,
                total_seconds: self.started.elapsed().as_secs_f64(),
            },
        }
    }
}

/// The report JSON without its `timestamp`, for run-to-run comparison.
pub fn without_timestamp(report_json: &str) -> serde_json::Result<String> {
    let mut v: Value = serde_json::from_str(report_json)?;
    if let Some(obj) = v.as_object_mut() {
        obj.remove("timestamp");
    }
    serde_json::to_string_pretty(&v)
}
