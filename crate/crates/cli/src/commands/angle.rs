use rayon::prelude::*;
use serde_json::json;

use tavis_core::angle::{angle_table, write_angle_csv, AngleMethod, AngleRow};

use super::{comment, format_or, json_bytes, Output};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::Format;

pub const DEFAULTS: &[(&str, &str)] =
    &[("n", "0"), ("delta", "0:5:0.25"), ("g_sigma", "1"), ("methods", "large_delta,small_delta,large_n")];

pub fn run(cfg: &RunConfig, format: Option<Format>) -> Result<Output, CliError> {
    let ns = cfg.i64_list("n")?;
    let deltas = cfg.f64_list("delta")?;
    let g_sigma = cfg.f64("g_sigma")?;
    let methods = cfg
        .raw("methods")
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|m| match AngleMethod::parse(m) {
            Some(method) if AngleMethod::ASYMPTOTIC.contains(&method) => Ok(method),
            _ => Err(CliError::Usage(format!("methods: unknown asymptotic form '{m}' (large_delta, small_delta, large_n)"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    if methods.is_empty() {
        return Err(CliError::Usage("methods: empty list".into()));
    }
    let chunks: Vec<Vec<AngleRow>> =
        ns.par_iter().map(|&n| angle_table(&[n], &deltas, g_sigma, &methods)).collect::<Result<_, _>>()?;
    let rows: Vec<AngleRow> = chunks.into_iter().flatten().collect();
    let main = match format_or(format, Format::Csv) {
        Format::Csv => {
            let mut buf = Vec::new();
            write_angle_csv(&mut buf, &rows, &comment("angle", cfg))?;
            buf
        }
        Format::Json => json_bytes(&json!({ "command": "angle", "config": cfg.to_json(), "rows": rows })),
    };
    Ok(Output::main(main))
}
