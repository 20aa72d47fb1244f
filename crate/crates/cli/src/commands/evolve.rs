use std::fmt::Write as _;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use tavis_core::dynamics::{adiabatic_system_state, dynamical_phase, evolve, write_trajectory_csv, EvolutionResult};
use tavis_core::spectrum::{frame, Branch, Ordering};
use tavis_core::{BareState, PulseConfig, SystemState};

use super::{comment, evolve_options, format_or, json_bytes, num, Output};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::Format;

pub const DEFAULTS: &[(&str, &str)] = &[
    ("n", "0"),
    ("g_sigma", "30"),
    ("delta", "1"),
    ("initial", "adiabatic"),
    ("branch", "1"),
    ("frame", "crossing"),
    ("samples", "2001"),
    ("tau_window", "auto"),
    ("rtol", "1e-11"),
    ("atol", "1e-11"),
];

enum Initial {
    Adiabatic,
    Bare(BareState),
}

#[derive(Serialize)]
struct RunSummary {
    g_sigma: f64,
    n: i64,
    delta: f64,
    branch: usize,
    tau_window: f64,
    /// Smallest `|<Psi_branch|psi>|^2` along the trajectory.
    min_overlap: f64,
    final_overlap: f64,
    /// `Im <Psi_branch(tau0)|psi(tau0)>`.
    final_im_overlap: f64,
    max_eps: f64,
    final_eps: f64,
    /// `|<Psi_j(tau0)|psi(tau0)>|^2` in the raw labelling, j = 1..4.
    final_raw_populations: Vec<Option<f64>>,
    /// Adiabatic phase of the branch, `2 g sigma * integral of E'_branch`.
    dynamical_phase: Option<f64>,
    norm_drift: f64,
    steps_accepted: usize,
    steps_rejected: usize,
}

struct Run {
    result: EvolutionResult,
    /// Per sample: `<Psi_j|psi>` for j = 1..4 in the chosen frame.
    overlaps: Vec<[Option<C64>; 4]>,
    summary: RunSummary,
}

fn overlaps(state: &SystemState, n: i64, tau: f64, cfg: &PulseConfig, ordering: Ordering) -> [Option<C64>; 4] {
    let exc = (n + 2) as u32;
    let (Some(block), Ok(f)) = (state.blocks.get(&exc), frame(n, tau, cfg, ordering)) else {
        return [None; 4];
    };
    Branch::ALL.map(|b| f.state(b).map(|v| v.iter().zip(block.amplitudes.iter()).map(|(x, a)| *x * a).sum()))
}

fn run_one(g_sigma: f64, n: i64, settings: &Settings) -> Result<Run, CliError> {
    let cfg = PulseConfig::new(g_sigma, settings.delta)?;
    let t0 = settings.tau_window.unwrap_or_else(|| cfg.tau_window());
    let initial = match settings.initial {
        Initial::Adiabatic => adiabatic_system_state(settings.branch, n, -t0, &cfg)?,
        Initial::Bare(b) => SystemState::basis_state(b),
    };
    let result = evolve(&initial, &cfg, (-t0, t0), &settings.opts)?;
    let overlaps: Vec<_> = result.trajectory.iter().map(|(tau, s)| overlaps(s, n, *tau, &cfg, settings.ordering)).collect();
    let pops: Vec<f64> = overlaps.iter().filter_map(|o| o[settings.branch.index()]).map(|c| c.norm_sqr()).collect();
    let last = overlaps.last().and_then(|o| o[settings.branch.index()]).unwrap_or(C64::new(f64::NAN, f64::NAN));
    let raw_final = overlaps_raw(&result.final_state, n, t0, &cfg);
    let dyn_phase = match settings.initial {
        Initial::Adiabatic => Some(dynamical_phase(settings.branch, n, &cfg, (-t0, t0))?),
        Initial::Bare(_) => None,
    };
    let summary = RunSummary {
        g_sigma,
        n,
        delta: settings.delta,
        branch: settings.branch.number(),
        tau_window: t0,
        min_overlap: pops.iter().copied().fold(f64::INFINITY, f64::min),
        final_overlap: last.norm_sqr(),
        final_im_overlap: last.im,
        max_eps: pops.iter().map(|p| (1.0 - p).abs()).fold(0.0, f64::max),
        final_eps: (1.0 - last.norm_sqr()).abs(),
        final_raw_populations: raw_final.iter().map(|c| c.map(|c| c.norm_sqr())).collect(),
        dynamical_phase: dyn_phase,
        norm_drift: result.norm_drift,
        steps_accepted: result.stats.accepted,
        steps_rejected: result.stats.rejected,
    };
    Ok(Run { result, overlaps, summary })
}

fn overlaps_raw(state: &SystemState, n: i64, tau: f64, cfg: &PulseConfig) -> [Option<C64>; 4] {
    overlaps(state, n, tau, cfg, Ordering::Raw)
}

struct Settings {
    delta: f64,
    branch: Branch,
    initial: Initial,
    ordering: Ordering,
    tau_window: Option<f64>,
    opts: tavis_core::dynamics::EvolveOptions,
}

fn settings(cfg: &RunConfig) -> Result<Settings, CliError> {
    let branch = Branch::from_number(cfg.usize("branch")?).ok_or_else(|| CliError::Usage("branch must be 1, 2, 3 or 4".into()))?;
    let initial = match cfg.raw("initial") {
        "adiabatic" => Initial::Adiabatic,
        tag => Initial::Bare(tag.parse().map_err(|e: tavis_core::Error| CliError::Usage(format!("initial: {e}")))?),
    };
    let ordering = match cfg.raw("frame") {
        "crossing" => Ordering::CrossingAware,
        "raw" => Ordering::Raw,
        other => return Err(CliError::Usage(format!("frame must be crossing or raw, got '{other}'"))),
    };
    let tau_window = match cfg.raw("tau_window") {
        "auto" => None,
        _ => {
            let t = cfg.f64("tau_window")?;
            if t <= 0.0 {
                return Err(CliError::Usage("tau_window must be positive".into()));
            }
            Some(t)
        }
    };
    Ok(Settings { delta: cfg.f64("delta")?, branch, initial, ordering, tau_window, opts: evolve_options(cfg, cfg.usize("samples")?)? })
}

pub fn run(cfg: &RunConfig, format: Option<Format>) -> Result<Output, CliError> {
    let s = settings(cfg)?;
    let g_sigmas = cfg.f64_list("g_sigma")?;
    let ns = match s.initial {
        Initial::Adiabatic => cfg.i64_list("n")?,
        // the manifold follows from the initial state
        Initial::Bare(b) => vec![b.excitations() as i64 - 2],
    };
    let grid: Vec<(f64, i64)> = g_sigmas.iter().flat_map(|&g| ns.iter().map(move |&n| (g, n))).collect();
    let runs: Vec<Run> = grid.par_iter().map(|&(g, n)| run_one(g, n, &s)).collect::<Result<_, _>>()?;

    let summaries: Vec<&RunSummary> = runs.iter().map(|r| &r.summary).collect();
    let summary = json!({ "command": "evolve", "config": cfg.to_json(), "runs": summaries });
    let mut notes = String::new();
    for r in &summaries {
        let _ = writeln!(
            notes,
            "g_sigma={} n={} branch={}: min overlap {:.6}, final overlap {:.6}, max eps {:.3e}, norm drift {:.1e}",
            r.g_sigma, r.n, r.branch, r.min_overlap, r.final_overlap, r.max_eps, r.norm_drift
        );
    }
    let b = s.branch.index();
    let main = match format_or(format, Format::Csv) {
        Format::Json => return Ok(Output { main: json_bytes(&summary), summary: None, notes }),
        Format::Csv if runs.len() == 1 => {
            let run = &runs[0];
            let column = |f: &dyn Fn(&[Option<C64>; 4]) -> Option<f64>| -> Vec<f64> {
                run.overlaps.iter().map(|o| f(o).unwrap_or(f64::NAN)).collect()
            };
            let mut extra = Vec::new();
            for j in Branch::ALL {
                extra.push((format!("pop{}", j.number()), column(&|o| o[j.index()].map(|c| c.norm_sqr()))));
            }
            extra.push(("im_overlap".to_string(), column(&|o| o[b].map(|c| c.im))));
            extra.push(("eps".to_string(), column(&|o| o[b].map(|c| (1.0 - c.norm_sqr()).abs()))));
            let mut buf = Vec::new();
            write_trajectory_csv(&mut buf, &run.result, &extra, &comment("evolve", cfg))?;
            buf
        }
        Format::Csv => {
            let mut buf = format!("# {}\n", comment("evolve", cfg)).into_bytes();
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(["g_sigma", "n", "tau", "norm", "overlap", "eps"])?;
            for run in &runs {
                for ((tau, state), o) in run.result.trajectory.iter().zip(&run.overlaps) {
                    let pop = o[b].map(|c| c.norm_sqr());
                    w.write_record([
                        format!("{}", run.summary.g_sigma),
                        run.summary.n.to_string(),
                        format!("{tau:.10e}"),
                        num(state.norm_sqr().sqrt()),
                        pop.map(num).unwrap_or_default(),
                        pop.map(|p| num((1.0 - p).abs())).unwrap_or_default(),
                    ])?;
                }
            }
            w.flush()?;
            drop(w);
            buf
        }
    };
    Ok(Output { main, summary: Some(String::from_utf8(json_bytes(&summary)).expect("utf8")), notes })
}
