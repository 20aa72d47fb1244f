use serde_json::json;

use tavis_core::dynamics::EvolveOptions;
use tavis_core::gates::{fidelity_scan, run_protocol, write_scan_csv, GateSettings, Mode, Protocol, PROTOCOL_NAMES};
use tavis_core::AtomQubit;

use super::{comment, format_or, json_bytes, num, ode_options, Output};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::Format;

pub const DEFAULTS: &[(&str, &str)] = &[
    ("protocol", ""),
    ("mode", "ideal"),
    ("delta", "1"),
    ("min_gsigma", "100"),
    ("sigma_error", "0"),
    ("delay_error", "0"),
    ("alpha", "1"),
    ("beta", "0"),
    ("theta", "0"),
    ("scan", "false"),
    ("sigma_errors", "-0.05:0.05:0.01"),
    ("delay_errors", "-0.1:0.1:0.05"),
    ("rtol", "1e-11"),
    ("atol", "1e-11"),
];

pub fn protocol(cfg: &RunConfig) -> Result<Protocol, CliError> {
    let name = cfg.raw("protocol");
    if name.is_empty() {
        return Err(CliError::Usage(format!("no protocol given; choose one of {}", PROTOCOL_NAMES.join(", "))));
    }
    let qubit = AtomQubit::new(cfg.f64("alpha")?, cfg.f64("beta")?, cfg.f64("theta")?)?;
    Protocol::from_name(name, qubit)
        .ok_or_else(|| CliError::Usage(format!("unknown protocol '{name}'; choose one of {}", PROTOCOL_NAMES.join(", "))))
}

pub fn settings(cfg: &RunConfig) -> Result<GateSettings, CliError> {
    let mode = Mode::parse(cfg.raw("mode"))
        .ok_or_else(|| CliError::Usage(format!("mode must be ideal or dynamics, got '{}'", cfg.raw("mode"))))?;
    let min_gsigma = cfg.f64("min_gsigma")?;
    if min_gsigma < 0.0 {
        return Err(CliError::Usage("min_gsigma must be >= 0".into()));
    }
    Ok(GateSettings {
        mode,
        delta: cfg.f64("delta")?,
        min_gsigma,
        evolve: EvolveOptions { ode: ode_options(cfg)?, ..EvolveOptions::final_only() },
    })
}

/// Fidelity over the (sigma error, delay error) grid, delay-major.
pub fn scan_output(command: &str, cfg: &RunConfig, format: Option<Format>) -> Result<Output, CliError> {
    let p = protocol(cfg)?;
    let s = settings(cfg)?;
    let points = fidelity_scan(&p, &s, &cfg.f64_list("sigma_errors")?, &cfg.f64_list("delay_errors")?)?;
    let main = match format_or(format, Format::Csv) {
        Format::Csv => {
            let mut buf = Vec::new();
            write_scan_csv(&mut buf, &points, &comment(command, cfg))?;
            buf
        }
        Format::Json => json_bytes(&json!({ "command": command, "config": cfg.to_json(), "points": points })),
    };
    Ok(Output::main(main))
}

pub fn run(cfg: &RunConfig, format: Option<Format>) -> Result<Output, CliError> {
    if cfg.bool("scan")? {
        return scan_output("gate", cfg, format);
    }
    let p = protocol(cfg)?;
    let report = run_protocol(&p, &settings(cfg)?, cfg.f64("sigma_error")?, cfg.f64("delay_error")?)?;
    let main = match format_or(format, Format::Json) {
        Format::Json => {
            let value: serde_json::Value = serde_json::from_str(&report.to_json()?).expect("report json");
            json_bytes(&json!({ "command": "gate", "config": cfg.to_json(), "report": value }))
        }
        Format::Csv => {
            let mut buf = format!("# {}\n", comment("gate", cfg)).into_bytes();
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(["input", "fidelity", "p_leak", "norm"])?;
            for row in &report.truth_table {
                w.write_record([row.input.clone(), num(row.fidelity), num(row.leak), num(row.norm)])?;
            }
            w.flush()?;
            drop(w);
            buf
        }
    };
    Ok(Output::main(main))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tavis_core::gates::DEFAULT_MIN_GSIGMA;

    #[test]
    fn default_min_gsigma_matches_library() {
        let v: f64 = DEFAULTS.iter().find(|(k, _)| *k == "min_gsigma").unwrap().1.parse().unwrap();
        assert_eq!(v, DEFAULT_MIN_GSIGMA);
    }
}
