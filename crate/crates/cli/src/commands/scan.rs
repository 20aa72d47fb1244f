use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use tavis_core::dynamics::{adiabatic_system_state, adiabaticity_q, adiabaticity_q_fd, evolve_through, nonadiabaticity_eps};
use tavis_core::spectrum::Branch;
use tavis_core::{Error as CoreError, PulseConfig};

use super::{comment, evolve_options, format_or, gate, json_bytes, num, opt, Output};
use crate::config::{range, RunConfig};
use crate::error::CliError;
use crate::Format;

const Q_DEFAULTS: &[(&str, &str)] = &[
    ("quantity", "q"),
    ("n", "0"),
    ("delta", "1"),
    ("pairs", "13,14,23,24"),
    ("method", "analytic"),
    ("fd_step", "0.01"),
    ("tau_min", "-3"),
    ("tau_max", "3"),
    ("tau_step", "0.01"),
];

const EPS_DEFAULTS: &[(&str, &str)] = &[
    ("quantity", "eps"),
    ("n", "0"),
    ("g_sigma", "5,10,20"),
    ("delta", "1"),
    ("branch", "3"),
    ("samples", "2001"),
    ("rtol", "1e-11"),
    ("atol", "1e-11"),
];

const FIDELITY_DEFAULTS: &[(&str, &str)] = &[
    ("quantity", "fidelity"),
    ("protocol", "entangle"),
    ("mode", "dynamics"),
    ("delta", "1"),
    ("min_gsigma", "100"),
    ("alpha", "1"),
    ("beta", "0"),
    ("theta", "0"),
    ("sigma_errors", "-0.05:0.05:0.01"),
    ("delay_errors", "-0.1:0.1:0.05"),
    ("rtol", "1e-11"),
    ("atol", "1e-11"),
];

/// The key set depends on `quantity`, so it is read from the layers first.
pub fn defaults_for(layers: &[(String, String, String)]) -> Result<&'static [(&'static str, &'static str)], CliError> {
    let quantity = layers.iter().rev().find(|(k, _, _)| k == "quantity").map(|(_, v, _)| v.as_str()).unwrap_or("q");
    match quantity {
        "q" => Ok(Q_DEFAULTS),
        "eps" => Ok(EPS_DEFAULTS),
        "fidelity" => Ok(FIDELITY_DEFAULTS),
        other => Err(CliError::Usage(format!("quantity must be q, eps or fidelity, got '{other}'"))),
    }
}

pub fn run(cfg: &RunConfig, format: Option<Format>) -> Result<Output, CliError> {
    match cfg.raw("quantity") {
        "q" => q_scan(cfg, format),
        "eps" => eps_scan(cfg, format),
        _ => gate::scan_output("scan", cfg, format),
    }
}

fn branch_pair(s: &str) -> Result<(Branch, Branch), CliError> {
    let bad = || CliError::Usage(format!("pairs: expected two branch digits like 13, got '{s}'"));
    let d: Vec<usize> = s.chars().map(|c| c.to_digit(10).map(|d| d as usize)).collect::<Option<_>>().ok_or_else(bad)?;
    match d.as_slice() {
        [i, j] if i != j => Ok((Branch::from_number(*i).ok_or_else(bad)?, Branch::from_number(*j).ok_or_else(bad)?)),
        _ => Err(bad()),
    }
}

fn q_scan(cfg: &RunConfig, format: Option<Format>) -> Result<Output, CliError> {
    let n = cfg.i64("n")?;
    let deltas = cfg.f64_list("delta")?;
    let pairs: Vec<(Branch, Branch)> =
        cfg.raw("pairs").split(',').map(str::trim).filter(|s| !s.is_empty()).map(branch_pair).collect::<Result<_, _>>()?;
    if pairs.is_empty() {
        return Err(CliError::Usage("pairs: empty list".into()));
    }
    let fd = match cfg.raw("method") {
        "analytic" => None,
        "fd" => {
            let h = cfg.f64("fd_step")?;
            if h <= 0.0 {
                return Err(CliError::Usage("fd_step must be positive".into()));
            }
            Some(h)
        }
        other => return Err(CliError::Usage(format!("method must be analytic or fd, got '{other}'"))),
    };
    let taus = range("tau grid", cfg.f64("tau_min")?, cfg.f64("tau_max")?, cfg.f64("tau_step")?)?;
    let pulses: Vec<PulseConfig> = deltas.iter().map(|&d| PulseConfig::new(1.0, d)).collect::<Result<_, _>>()?;
    let grid: Vec<(usize, f64)> = (0..pulses.len()).flat_map(|k| taus.iter().map(move |&t| (k, t))).collect();
    let rows: Vec<Vec<Option<f64>>> = grid
        .par_iter()
        .map(|&(k, tau)| {
            pairs
                .iter()
                .map(|&(i, j)| {
                    let q = match fd {
                        None => adiabaticity_q(i, j, n, tau, &pulses[k]),
                        Some(h) => adiabaticity_q_fd(i, j, n, tau, &pulses[k], h),
                    };
                    match q {
                        Ok(v) => Ok(Some(v)),
                        // the inner pair is degenerate at tau = 0 (or for all tau when delta = 0)
                        Err(CoreError::Undefined { .. } | CoreError::Degenerate { .. }) => Ok(None),
                        Err(e) => Err(CliError::from(e)),
                    }
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let names: Vec<String> = pairs.iter().map(|(i, j)| format!("q{}{}", i.number(), j.number())).collect();
    let main = match format_or(format, Format::Csv) {
        Format::Csv => {
            let mut buf = format!("# {}\n", comment("scan", cfg)).into_bytes();
            let mut w = csv::Writer::from_writer(&mut buf);
            let mut header = vec!["delta".to_string(), "tau".to_string()];
            header.extend(names.iter().cloned());
            w.write_record(&header)?;
            for ((k, tau), qs) in grid.iter().zip(&rows) {
                let mut rec = vec![format!("{}", deltas[*k]), format!("{tau}")];
                rec.extend(qs.iter().map(|q| opt(*q)));
                w.write_record(&rec)?;
            }
            w.flush()?;
            drop(w);
            buf
        }
        Format::Json => {
            let rows: Vec<_> = grid
                .iter()
                .zip(&rows)
                .map(|((k, tau), qs)| json!({ "delta": deltas[*k], "tau": tau, "q": qs }))
                .collect();
            json_bytes(&json!({ "command": "scan", "config": cfg.to_json(), "columns": names, "rows": rows }))
        }
    };
    Ok(Output::main(main))
}

#[derive(Serialize)]
struct EpsPoint {
    g_sigma: f64,
    n: i64,
    delta: f64,
    branch: usize,
    max_eps: f64,
    final_eps: f64,
    norm_drift: f64,
}

fn eps_scan(cfg: &RunConfig, format: Option<Format>) -> Result<Output, CliError> {
    let g_sigmas = cfg.f64_list("g_sigma")?;
    let ns = cfg.i64_list("n")?;
    let deltas = cfg.f64_list("delta")?;
    let branch = Branch::from_number(cfg.usize("branch")?).ok_or_else(|| CliError::Usage("branch must be 1, 2, 3 or 4".into()))?;
    let opts = evolve_options(cfg, cfg.usize("samples")?)?;
    let mut grid = Vec::new();
    for &g in &g_sigmas {
        for &n in &ns {
            for &d in &deltas {
                grid.push((g, n, d));
            }
        }
    }
    let points: Vec<EpsPoint> = grid
        .par_iter()
        .map(|&(g_sigma, n, delta)| -> Result<EpsPoint, CliError> {
            let pulse = PulseConfig::new(g_sigma, delta)?;
            let init = adiabatic_system_state(branch, n, -pulse.tau_window(), &pulse)?;
            let r = evolve_through(&init, &pulse, &opts)?;
            let eps = nonadiabaticity_eps(branch, n, &r, &pulse)?;
            Ok(EpsPoint {
                g_sigma,
                n,
                delta,
                branch: branch.number(),
                max_eps: eps.iter().map(|(_, e)| *e).fold(0.0, f64::max),
                final_eps: eps.last().map(|(_, e)| *e).unwrap_or(f64::NAN),
                norm_drift: r.norm_drift,
            })
        })
        .collect::<Result<_, _>>()?;
    let main = match format_or(format, Format::Csv) {
        Format::Csv => {
            let mut buf = format!("# {}\n", comment("scan", cfg)).into_bytes();
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(["g_sigma", "n", "delta", "branch", "max_eps", "final_eps", "norm_drift"])?;
            for p in &points {
                w.write_record([
                    format!("{}", p.g_sigma),
                    p.n.to_string(),
                    format!("{}", p.delta),
                    p.branch.to_string(),
                    num(p.max_eps),
                    num(p.final_eps),
                    num(p.norm_drift),
                ])?;
            }
            w.flush()?;
            drop(w);
            buf
        }
        Format::Json => json_bytes(&json!({ "command": "scan", "config": cfg.to_json(), "points": points })),
    };
    Ok(Output::main(main))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_parse() {
        assert_eq!(branch_pair("13").unwrap(), (Branch::One, Branch::Three));
        for bad in ["11", "1", "135", "15", "ab"] {
            assert!(branch_pair(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn quantity_selects_key_set() {
        let layer = |v: &str| vec![("quantity".to_string(), v.to_string(), "test".to_string())];
        assert!(defaults_for(&layer("eps")).unwrap().iter().any(|(k, _)| *k == "g_sigma"));
        assert!(defaults_for(&[]).unwrap().iter().any(|(k, _)| *k == "pairs"));
        assert!(defaults_for(&layer("bogus")).is_err());
    }
}
