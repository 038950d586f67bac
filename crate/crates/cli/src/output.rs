use std::fs;
use std::io::Write;
use std::path::PathBuf;

use psge_core::config::ConfigMap;
use psge_core::PsgeError;
use serde::Serialize;

use crate::args::Format;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Usage problems exit with 2, failed checks and runtime failures with 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failed(String),
}

impl From<PsgeError> for CliError {
    fn from(e: PsgeError) -> Self {
        match e {
            PsgeError::Config(_) | PsgeError::InvalidParameter { .. } => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Failed(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failed(format!("io error: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Writes results with the resolved config attached.
pub struct Sink {
    pub path: Option<PathBuf>,
    pub format: Format,
    pub command: &'static str,
    pub config: ConfigMap,
}

impl Sink {
    fn header(&self) -> String {
        let mut h = format!("# psge {VERSION}\n# command = {}\n", self.command);
        for (k, v) in self.config.iter() {
            h.push_str(&format!("# {k} = {v}\n"));
        }
        h
    }

    fn emit(&self, text: &str) -> CliResult<()> {
        match &self.path {
            Some(p) => fs::write(p, text)?,
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(text.as_bytes())?;
                out.flush()?;
            }
        }
        Ok(())
    }

    /// CSV body prefixed with the comment header.
    pub fn csv(&self, body: &str) -> CliResult<()> {
        self.emit(&format!("{}{body}", self.header()))
    }

    /// JSON document `{version, command, config, result}`.
    pub fn json<T: Serialize>(&self, result: &T) -> CliResult<()> {
        #[derive(Serialize)]
        struct Doc<'a, T> {
            version: &'a str,
            command: &'a str,
            config: std::collections::BTreeMap<&'a str, &'a str>,
            result: &'a T,
        }
        let doc = Doc {
            version: VERSION,
            command: self.command,
            config: self.config.iter().collect(),
            result,
        };
        let text =
            serde_json::to_string_pretty(&doc).map_err(|e| CliError::Failed(e.to_string()))?;
        self.emit(&(text + "\n"))
    }

    /// Writes `body` as CSV or `result` as JSON depending on the format.
    pub fn write<T: Serialize>(&self, body: impl FnOnce() -> String, result: &T) -> CliResult<()> {
        match self.format {
            Format::Csv => self.csv(&body()),
            Format::Json => self.json(result),
        }
    }
}

/// 17 significant digits; NaN as `nan`.
pub fn fmt_f(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.16e}")
    }
}

/// One line of a check summary, on stderr.
pub fn report_check(name: &str, pass: bool, detail: &str) {
    eprintln!(
        "check {name}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
}
