//! JSON reports shared by `verify`, `estimate` and `asymptotics`.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;

pub const VERSION: &str = concat!("heightfrag ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Reported for information, never affects the outcome.
    Info,
    /// Not run, usually for lack of sample budget.
    Skipped,
}

/// Monte Carlo block attached to estimated identities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McBlock {
    pub n_samples: usize,
    pub epsilon: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub estimate_2eps: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_index: Option<f64>,
    pub heavy_tail_warning: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub identity: String,
    pub alpha: f64,
    pub r_or_params: String,
    pub lhs: f64,
    pub rhs: Option<f64>,
    pub abs_err: Option<f64>,
    pub rel_err: Option<f64>,
    pub pass: Option<bool>,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(flatten)]
    pub mc: Option<McBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Record {
    /// `lhs` against `rhs` under a relative tolerance.
    pub fn compare(identity: &str, alpha: f64, params: String, lhs: f64, rhs: f64, tol: f64) -> Self {
        let abs_err = (lhs - rhs).abs();
        let rel_err = abs_err / rhs.abs();
        let pass = rel_err <= tol;
        Record { tolerance: Some(tol), ..Record::graded(identity, alpha, params, lhs, Some(rhs), pass) }
    }

    /// A record whose verdict was decided by the caller.
    pub fn graded(identity: &str, alpha: f64, params: String, lhs: f64, rhs: Option<f64>, pass: bool) -> Self {
        let abs_err = rhs.map(|r| (lhs - r).abs());
        Record {
            identity: identity.to_string(),
            alpha,
            r_or_params: params,
            lhs,
            rhs,
            abs_err,
            rel_err: rhs.zip(abs_err).map(|(r, e)| if r != 0.0 { e / r.abs() } else { e }),
            pass: Some(pass),
            status: if pass { Status::Pass } else { Status::Fail },
            tolerance: None,
            seed: None,
            mc: None,
            note: None,
        }
    }

    pub fn info(identity: &str, alpha: f64, params: String, value: f64) -> Self {
        Record { pass: None, status: Status::Info, ..Record::graded(identity, alpha, params, value, None, true) }
    }

    pub fn skipped(identity: &str, alpha: f64, params: String, reason: String) -> Self {
        Record {
            pass: None,
            status: Status::Skipped,
            note: Some(reason),
            ..Record::graded(identity, alpha, params, f64::NAN, None, true)
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub version: String,
    pub config_hash: String,
    pub config: String,
    /// Seconds since the Unix epoch; the only field that varies between
    /// identical runs.
    pub timestamp: u64,
    pub passed: bool,
    pub failures: Vec<String>,
    pub records: Vec<Record>,
}

impl Report {
    pub fn new(command: &str, config: &RunConfig, records: Vec<Record>) -> Self {
        let failures: Vec<String> = records
            .iter()
            .filter(|r| r.status == Status::Fail)
            .map(|r| {
                format!(
                    "{} at alpha {} ({}): lhs {:e} rhs {} rel_err {}",
                    r.identity,
                    r.alpha,
                    r.r_or_params,
                    r.lhs,
                    r.rhs.map_or("-".into(), |v| format!("{v:e}")),
                    r.rel_err.map_or("-".into(), |v| format!("{v:.3e}"))
                )
            })
            .collect();
        Report {
            command: command.to_string(),
            version: VERSION.to_string(),
            config_hash: config.hash(),
            config: config.to_text(),
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            passed: failures.is_empty(),
            failures,
            records,
        }
    }

    /// Writes `<dir>/<command>.json` and returns the path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}.json", self.command));
        let json = serde_json::to_string_pretty(self).map_err(std::io::Error::from)?;
        std::fs::write(&path, json + "\n")?;
        Ok(path)
    }

    pub fn exit_code(&self) -> u8 {
        if self.passed {
            0
        } else {
            1
        }
    }
}
