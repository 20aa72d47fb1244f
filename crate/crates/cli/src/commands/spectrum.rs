use rayon::prelude::*;
use serde_json::json;

use tavis_core::dynamics::crossing_energy;
use tavis_core::spectrum::{adiabatic_energies, crossing_frame, Branch};
use tavis_core::PulseConfig;

use super::{comment, format_or, json_bytes, opt, Output};
use crate::config::{range, RunConfig};
use crate::error::CliError;
use crate::Format;

pub const DEFAULTS: &[(&str, &str)] =
    &[("n", "0"), ("delta", "1"), ("tau_min", "-4"), ("tau_max", "4"), ("tau_step", "0.01"), ("states", "false")];

const COMPONENTS: [&str; 4] = ["ee", "ge", "eg", "gg"];

struct Row {
    n: i64,
    tau: f64,
    raw: [Option<f64>; 4],
    crossing: [Option<f64>; 4],
    /// Crossing-aware states, `[branch][component]`.
    states: Option<[[Option<f64>; 4]; 4]>,
}

fn row(n: i64, tau: f64, cfg: &PulseConfig, with_states: bool) -> Result<Row, CliError> {
    let has = |b: Branch| n >= 0 || b != Branch::Two;
    let e = adiabatic_energies(n, tau, cfg)?;
    let raw = Branch::ALL.map(|b| has(b).then(|| e[b.index()]));
    let crossing = Branch::ALL.map(|b| has(b).then(|| crossing_energy(b, n, tau, cfg)));
    let states = if with_states {
        // undefined when the inner pair is degenerate for every tau
        crossing_frame(n, tau, cfg).ok().map(|frame| {
            Branch::ALL.map(|b| {
                let mut out = [None; 4];
                if let Some(v) = frame.state(b) {
                    // the three-state manifold has no |n,ee> component
                    let skip = 4 - v.len();
                    for (k, x) in v.iter().enumerate() {
                        out[k + skip] = Some(*x);
                    }
                }
                out
            })
        })
    } else {
        None
    };
    Ok(Row { n, tau, raw, crossing, states })
}

pub fn run(cfg: &RunConfig, format: Option<Format>) -> Result<Output, CliError> {
    let ns = cfg.i64_list("n")?;
    let delta = cfg.f64("delta")?;
    let taus = range("tau grid", cfg.f64("tau_min")?, cfg.f64("tau_max")?, cfg.f64("tau_step")?)?;
    let with_states = cfg.bool("states")?;
    let pulse = PulseConfig::new(1.0, delta)?;
    let grid: Vec<(i64, f64)> = ns.iter().flat_map(|&n| taus.iter().map(move |&t| (n, t))).collect();
    let rows: Vec<Row> = grid.par_iter().map(|&(n, t)| row(n, t, &pulse, with_states)).collect::<Result<_, _>>()?;

    match format_or(format, Format::Csv) {
        Format::Csv => {
            let mut buf = format!("# {}\n", comment("spectrum", cfg)).into_bytes();
            let mut w = csv::Writer::from_writer(&mut buf);
            let mut header = vec!["n".to_string(), "tau".to_string()];
            header.extend((1..=4).map(|j| format!("e{j}_raw")));
            header.extend((1..=4).map(|j| format!("e{j}_crossing")));
            if with_states {
                for j in 1..=4 {
                    header.extend(COMPONENTS.iter().map(|c| format!("psi{j}_{c}")));
                }
            }
            w.write_record(&header)?;
            for r in &rows {
                let mut rec = vec![r.n.to_string(), format!("{}", r.tau)];
                rec.extend(r.raw.iter().map(|v| opt(*v)));
                rec.extend(r.crossing.iter().map(|v| opt(*v)));
                if with_states {
                    match &r.states {
                        Some(s) => rec.extend(s.iter().flatten().map(|v| opt(*v))),
                        None => rec.extend(std::iter::repeat_n(String::new(), 16)),
                    }
                }
                w.write_record(&rec)?;
            }
            w.flush()?;
            drop(w);
            Ok(Output::main(buf))
        }
        Format::Json => {
            let rows: Vec<_> = rows
                .iter()
                .map(|r| {
                    json!({
                        "n": r.n,
                        "tau": r.tau,
                        "raw": r.raw,
                        "crossing": r.crossing,
                        "states": r.states,
                    })
                })
                .collect();
            Ok(Output::main(json_bytes(&json!({ "command": "spectrum", "config": cfg.to_json(), "rows": rows }))))
        }
    }
}

