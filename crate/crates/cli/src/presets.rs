//! Named parameter sets fig1 .. fig7, one per reference run.

use crate::error::CliError;

pub const PRESETS: [&str; 7] = ["fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7"];

pub struct Preset {
    pub command: &'static str,
    pub values: &'static [(&'static str, &'static str)],
}

pub fn lookup(name: &str) -> Result<Preset, CliError> {
    let (command, values): (&str, &[(&str, &str)]) = match name {
        // adiabatic energies of the n = 0 manifold
        "fig1" => ("spectrum", &[("n", "0"), ("delta", "1"), ("tau_min", "-4"), ("tau_max", "4"), ("tau_step", "0.01")]),
        // following the crossing-aware state through the degeneracy
        "fig2" => (
            "evolve",
            &[("n", "0"), ("delta", "1"), ("g_sigma", "30"), ("initial", "adiabatic"), ("branch", "1"), ("frame", "crossing")],
        ),
        // adiabaticity parameter versus tau for three delays
        "fig3" => ("scan", &[("quantity", "q"), ("n", "0"), ("delta", "0.5,1,1.25"), ("pairs", "13")]),
        // nonadiabaticity of the outer branch for increasing g sigma
        "fig4" => ("evolve", &[("n", "0"), ("delta", "1"), ("g_sigma", "5,10,20"), ("branch", "3"), ("frame", "crossing")]),
        // nonadiabaticity of the outer branch for increasing n
        "fig5" => ("evolve", &[("n", "0,5,10"), ("delta", "1"), ("g_sigma", "30"), ("branch", "3"), ("frame", "crossing")]),
        // entangling protocol fidelity under pulse-width and delay errors
        "fig6" => (
            "gate",
            &[
                ("protocol", "entangle"),
                ("mode", "dynamics"),
                ("scan", "true"),
                ("sigma_errors", "-0.05:0.05:0.01"),
                ("delay_errors", "-0.1:0.1:0.05"),
            ],
        ),
        // residual nonadiabaticity after the passage versus n
        "fig7" => ("evolve", &[("n", "0:10"), ("delta", "1"), ("g_sigma", "30"), ("branch", "3"), ("frame", "crossing")]),
        _ => return Err(CliError::Usage(format!("unknown preset '{name}'; choose one of {}", PRESETS.join(", ")))),
    };
    Ok(Preset { command, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_resolves() {
        for p in PRESETS {
            assert!(lookup(p).is_ok());
        }
        assert!(lookup("fig8").is_err());
    }
}
