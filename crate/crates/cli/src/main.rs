use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;
mod error;
mod presets;

use config::{split_pair, RunConfig};
use error::CliError;

#[derive(Parser)]
#[command(name = "tavis", version, about = "Two atoms crossing a cavity mode: spectra, dynamics, mixing angles and gates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Clone, Debug)]
struct Common {
    /// Start from a named parameter set (fig1 .. fig7).
    #[arg(long)]
    preset: Option<String>,
    /// Flat key=value file; may be given several times, later files win.
    #[arg(long = "config", value_name = "FILE")]
    configs: Vec<PathBuf>,
    /// Override one key; applied after config files.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write the main output here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Worker threads for grids and sweeps; 0 uses every core.
    #[arg(long, short, default_value_t = 0)]
    jobs: usize,
    /// Trailing KEY=VALUE overrides.
    #[arg(value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Adiabatic energies and crossing-aware states on a tau grid.
    Spectrum(Common),
    /// Integrate one or more passages and report adiabatic following.
    Evolve {
        #[command(flatten)]
        common: Common,
        /// Also write the JSON run summary here (CSV mode).
        #[arg(long, value_name = "FILE")]
        summary: Option<PathBuf>,
    },
    /// Mixing-angle table: quadrature against the asymptotic forms.
    Angle(Common),
    /// Run a gate or mapping protocol and print its truth table.
    Gate {
        /// swap, phase, cnot, entangle, map_atom_to_atom, map_cavity_to_atom, map_atom_to_cavity
        protocol: Option<String>,
        /// ideal or dynamics
        #[arg(long)]
        mode: Option<String>,
        /// Scan fidelity over pulse-width and delay errors.
        #[arg(long)]
        scan: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Parameter sweeps: quantity=q (adiabaticity), eps (nonadiabaticity) or fidelity.
    Scan(Common),
}

/// All layers above the command defaults, in application order.
fn layers(name: &str, common: &Common, flags: Vec<(String, String)>) -> Result<Vec<(String, String, String)>, CliError> {
    let mut out = Vec::new();
    if let Some(p) = &common.preset {
        let preset = presets::lookup(p)?;
        if preset.command != name {
            return Err(CliError::Usage(format!("preset {p} belongs to `tavis {}`", preset.command)));
        }
        out.extend(preset.values.iter().map(|(k, v)| (k.to_string(), v.to_string(), format!("preset {p}"))));
    }
    for path in &common.configs {
        let origin = path.display().to_string();
        out.extend(config::read_file(path)?.into_iter().map(|(k, v)| (k, v, origin.clone())));
    }
    for s in common.sets.iter().chain(&common.overrides) {
        let (k, v) = split_pair(s).map_err(CliError::Usage)?;
        out.push((k, v, "command line".into()));
    }
    out.extend(flags.into_iter().map(|(k, v)| (k, v, "command line".into())));
    Ok(out)
}

fn build(defaults: &[(&str, &str)], layers: Vec<(String, String, String)>) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::new(defaults);
    for (k, v, origin) in layers {
        cfg.apply([(k, v)], &origin)?;
    }
    Ok(cfg)
}

fn emit(path: &Option<PathBuf>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            match out.write_all(bytes).and_then(|_| out.flush()) {
                // a closed pipe (e.g. `| head`) is not a failure
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                r => Ok(r?),
            }
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (name, common, flags, summary) = match cli.command {
        Command::Spectrum(c) => ("spectrum", c, vec![], None),
        Command::Evolve { common, summary } => ("evolve", common, vec![], summary),
        Command::Angle(c) => ("angle", c, vec![], None),
        Command::Gate { protocol, mode, scan, mut common } => {
            let mut flags = vec![];
            match protocol {
                // a bare KEY=VALUE lands here when no protocol is given
                Some(p) if p.contains('=') => common.overrides.insert(0, p),
                Some(p) => flags.push(("protocol".to_string(), p)),
                None => {}
            }
            if let Some(m) = mode {
                flags.push(("mode".into(), m));
            }
            if scan {
                flags.push(("scan".into(), "true".into()));
            }
            ("gate", common, flags, None)
        }
        Command::Scan(c) => ("scan", c, vec![], None),
    };
    let layers = layers(name, &common, flags)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} workers: {e}", common.jobs)))?;
    let output = pool.install(|| -> Result<commands::Output, CliError> {
        match name {
            "spectrum" => commands::spectrum::run(&build(commands::spectrum::DEFAULTS, layers)?, common.format),
            "evolve" => commands::evolve::run(&build(commands::evolve::DEFAULTS, layers)?, common.format),
            "angle" => commands::angle::run(&build(commands::angle::DEFAULTS, layers)?, common.format),
            "gate" => commands::gate::run(&build(commands::gate::DEFAULTS, layers)?, common.format),
            _ => {
                let defaults = commands::scan::defaults_for(&layers)?;
                commands::scan::run(&build(defaults, layers)?, common.format)
            }
        }
    })?;
    emit(&common.output, &output.main)?;
    if let Some(side) = output.summary {
        match summary {
            Some(path) => emit(&Some(path), side.as_bytes())?,
            None => eprint!("{}", output.notes),
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tavis: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
