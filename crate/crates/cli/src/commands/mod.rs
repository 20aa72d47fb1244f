pub mod angle;
pub mod evolve;
pub mod gate;
pub mod scan;
pub mod spectrum;

use tavis_core::dynamics::EvolveOptions;
use tavis_core::ode::OdeOptions;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::Format;

pub struct Output {
    pub main: Vec<u8>,
    /// JSON summary, for commands that produce one next to a CSV.
    pub summary: Option<String>,
    /// Short human-readable version of `summary` for stderr.
    pub notes: String,
}

impl Output {
    pub fn main(main: Vec<u8>) -> Self {
        Self { main, summary: None, notes: String::new() }
    }
}

pub fn comment(command: &str, cfg: &RunConfig) -> String {
    format!("tavis {command} {}", cfg.describe())
}

pub fn num(v: f64) -> String {
    format!("{v:.12e}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn json_bytes(value: &serde_json::Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("json values serialize");
    s.push('\n');
    s.into_bytes()
}

pub fn format_or(format: Option<Format>, default: Format) -> Format {
    format.unwrap_or(default)
}

pub fn ode_options(cfg: &RunConfig) -> Result<OdeOptions, CliError> {
    let (rtol, atol) = (cfg.f64("rtol")?, cfg.f64("atol")?);
    if !(rtol > 0.0 && atol > 0.0) {
        return Err(CliError::Usage("rtol and atol must be positive".into()));
    }
    Ok(OdeOptions { rtol, atol, ..OdeOptions::default() })
}

pub fn evolve_options(cfg: &RunConfig, samples: usize) -> Result<EvolveOptions, CliError> {
    if samples < 2 {
        return Err(CliError::Usage("samples must be at least 2".into()));
    }
    Ok(EvolveOptions { ode: ode_options(cfg)?, samples })
}
