//! Bare-state scattering map of one cavity passage and the protocols built
//! from it: atomic entanglement, state mapping, SWAP, phase and C-NOT gates.
//!
//! Every protocol can run in two modes: `Ideal` applies the asymptotic map
//! with the quadrature mixing angle of each manifold, `Dynamics` integrates
//! the Schrodinger equation through each passage.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::angle::{mixing_angle, solve_gsigma_for_angle, AngleSolution};
use crate::dynamics::{evolve_unchecked, EvolveOptions};
use crate::error::{Error, Result};
use crate::model::{manifold_basis, Atom, AtomQubit, BareState, Level, ManifoldBlock, PulseConfig, SystemState};

/// Smallest `g sigma` the protocol solver accepts when choosing the angle
/// multiplicity. The photon leak left by a passage falls off like
/// `0.75 / (g sigma)^2` at `delta = 1`; 100 keeps it below 1e-4.
pub const DEFAULT_MIN_GSIGMA: f64 = 100.0;
const UNITARY_TOL: f64 = 1e-12;
const EMPTY_BRANCH: f64 = 1e-20;

use Level::{Excited as E, Ground as G};

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScatteringMap {
    pub n: i64,
    pub phi: f64,
    /// Column `j` is the image of basis state `j` of manifold `n + 2`.
    pub matrix: DMatrix<C64>,
}

fn check_n(n: i64) -> Result<()> {
    if n < -1 {
        return Err(Error::InvalidParameter(format!("manifold index n must be >= -1, got {n}")));
    }
    Ok(())
}

/// Drops the `|n,e1e2>` row and column for the three-state manifold.
fn restrict(n: i64, full: DMatrix<C64>) -> DMatrix<C64> {
    if n == -1 {
        full.remove_row(0).remove_column(0)
    } else {
        full
    }
}

/// One passage in the adiabatic limit:
/// `|ee> -> |ee>`, `|ge> -> -|eg>`,
/// `|eg> -> cos phi |ge> - i sin phi |gg>`,
/// `|gg> -> cos phi |gg> - i sin phi |ge>`.
pub fn scattering_map(n: i64, phi: f64) -> Result<ScatteringMap> {
    check_n(n)?;
    let (s, co) = phi.sin_cos();
    let mi = C64::new(0.0, -s);
    let mut m = DMatrix::<C64>::zeros(4, 4);
    m[(0, 0)] = c(1.0);
    m[(2, 1)] = c(-1.0);
    m[(1, 2)] = c(co);
    m[(3, 2)] = mi;
    m[(3, 3)] = c(co);
    m[(1, 3)] = mi;
    Ok(ScatteringMap { n, phi, matrix: restrict(n, m) })
}

/// `|ge> -> -|eg>`, `|eg> -> -|ge>`, rest unchanged.
pub fn atomic_swap(n: i64) -> Result<DMatrix<C64>> {
    check_n(n)?;
    let mut m = DMatrix::<C64>::zeros(4, 4);
    m[(0, 0)] = c(1.0);
    m[(2, 1)] = c(-1.0);
    m[(1, 2)] = c(-1.0);
    m[(3, 3)] = c(1.0);
    Ok(restrict(n, m))
}

/// Rotation of `{|ge>, |gg>}` (atom 1 in the ground state),
/// `[[-cos, -i sin], [i sin, cos]]`; identity elsewhere.
pub fn conditional_rotation(n: i64, phi: f64) -> Result<DMatrix<C64>> {
    check_n(n)?;
    let (s, co) = phi.sin_cos();
    let mut m = DMatrix::<C64>::zeros(4, 4);
    m[(0, 0)] = c(1.0);
    m[(2, 2)] = c(1.0);
    m[(1, 1)] = c(-co);
    m[(1, 3)] = C64::new(0.0, -s);
    m[(3, 1)] = C64::new(0.0, s);
    m[(3, 3)] = c(co);
    Ok(restrict(n, m))
}

/// `max |U^dag U - 1|`.
pub fn unitarity_deviation(u: &DMatrix<C64>) -> f64 {
    let id = DMatrix::<C64>::identity(u.nrows(), u.ncols());
    (u.adjoint() * u - id).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

impl ScatteringMap {
    pub fn apply(&self, amplitudes: &DVector<C64>) -> DVector<C64> {
        &self.matrix * amplitudes
    }
}

/// Single-qubit unitary in the (g, e) basis, rows are outputs.
pub type QubitGate = [[C64; 2]; 2];

pub fn hadamard() -> QubitGate {
    let h = c(FRAC_1_SQRT_2);
    [[h, h], [h, -h]]
}

/// `|e> -> e^{i angle} |e>`.
pub fn phase_shift(angle: f64) -> QubitGate {
    [[c(1.0), C64::default()], [C64::default(), C64::from_polar(1.0, angle)]]
}

fn check_qubit_gate(u: &QubitGate) -> Result<()> {
    let m = DMatrix::from_fn(2, 2, |i, j| u[i][j]);
    let deviation = unitarity_deviation(&m);
    if !(deviation <= UNITARY_TOL) {
        return Err(Error::NotUnitary { deviation });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Ideal,
    Dynamics,
}

impl Mode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ideal" => Some(Mode::Ideal),
            "dynamics" => Some(Mode::Dynamics),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProtocolStep {
    /// Both atoms cross one cavity; successive passes never overlap.
    CavityPass(PulseConfig),
    Rotation { atom: Atom, gate: QubitGate },
}

/// Ideal passage: each manifold gets the map with its own mixing angle.
pub fn ideal_pass(state: &SystemState, cfg: &PulseConfig) -> Result<SystemState> {
    let mut out = SystemState::default();
    for (exc, block) in &state.blocks {
        let amplitudes = if *exc == 0 {
            block.amplitudes.clone()
        } else {
            let n = *exc as i64 - 2;
            scattering_map(n, mixing_angle(n, cfg.g_sigma, cfg.delta)?)?.apply(&block.amplitudes)
        };
        out.blocks.insert(*exc, ManifoldBlock { basis: block.basis.clone(), amplitudes });
    }
    Ok(out)
}

/// Runs the steps in order.
pub fn apply_protocol(initial: &SystemState, steps: &[ProtocolStep], mode: Mode, opts: &EvolveOptions) -> Result<SystemState> {
    initial.ensure_normalized()?;
    let mut state = initial.clone();
    for step in steps {
        state = match step {
            ProtocolStep::CavityPass(cfg) => match mode {
                Mode::Ideal => ideal_pass(&state, cfg)?,
                Mode::Dynamics => {
                    let t0 = cfg.tau_window();
                    evolve_unchecked(&state, cfg, (-t0, t0), opts)?.final_state
                }
            },
            ProtocolStep::Rotation { atom, gate } => {
                check_qubit_gate(gate)?;
                state.apply_atom_unitary(*atom, gate)
            }
        };
    }
    Ok(state)
}

/// Amplitudes over `g1g2, g1e2, e1g2, e1e2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TwoQubitPureState {
    pub amplitudes: [C64; 4],
}

const TWO_QUBIT_ORDER: [(Level, Level); 4] = [(G, G), (G, E), (E, G), (E, E)];

impl TwoQubitPureState {
    pub fn new(amplitudes: [C64; 4]) -> Result<Self> {
        let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(Self { amplitudes })
    }

    /// Zero-photon part of `state`, renormalized, and its probability.
    pub fn post_select_vacuum(state: &SystemState) -> Result<(Self, f64)> {
        let raw: Vec<C64> =
            TWO_QUBIT_ORDER.iter().map(|(a1, a2)| state.amplitude(&BareState::new(0, *a1, *a2))).collect();
        let p: f64 = raw.iter().map(|a| a.norm_sqr()).sum();
        if p == 0.0 {
            return Err(Error::Undefined { tau: f64::NAN, reason: "no zero-photon component".into() });
        }
        let s = 1.0 / p.sqrt();
        Ok((Self { amplitudes: [raw[0] * s, raw[1] * s, raw[2] * s, raw[3] * s] }, p))
    }

    /// Embeds with the cavity in vacuum.
    pub fn to_system_state(&self) -> SystemState {
        SystemState::from_amplitudes(
            TWO_QUBIT_ORDER.iter().zip(self.amplitudes).map(|((a1, a2), z)| (BareState::new(0, *a1, *a2), z)),
        )
    }
}

/// `C = 2 |a_gg a_ee - a_ge a_eg|`.
pub fn concurrence(state: &TwoQubitPureState) -> f64 {
    let a = state.amplitudes;
    (2.0 * (a[0] * a[3] - a[1] * a[2]).norm()).min(1.0)
}

#[derive(Clone, Debug)]
pub struct Entanglement {
    pub output: SystemState,
    /// Probability of the zero-photon branch.
    pub p_en: f64,
    /// Post-selected zero-photon atomic state; `None` when that branch is
    /// empty.
    pub atomic_state: Option<TwoQubitPureState>,
    pub concurrence: Option<f64>,
}

/// One ideal passage with angle `phi` in the single-excitation manifold and
/// vacuum cavity; the doubly excited component is unaffected.
pub fn entangle_atoms(q1: &AtomQubit, q2: &AtomQubit, phi: f64) -> Result<Entanglement> {
    let input = crate::model::decompose_product_state(q1, q2, &[c(1.0)])?;
    let mut output = SystemState::default();
    for (exc, block) in &input.blocks {
        let amplitudes = match exc {
            0 => block.amplitudes.clone(),
            // |0,e1e2> maps to itself for every angle of its manifold
            _ => scattering_map(*exc as i64 - 2, phi)?.apply(&block.amplitudes),
        };
        output.blocks.insert(*exc, ManifoldBlock { basis: block.basis.clone(), amplitudes });
    }
    let p_en = output.population(|s| s.photons == 0);
    let atomic_state = if p_en > EMPTY_BRANCH { Some(TwoQubitPureState::post_select_vacuum(&output)?.0) } else { None };
    Ok(Entanglement { concurrence: atomic_state.as_ref().map(concurrence), output, p_en, atomic_state })
}

/// Closed form `P_en = 1 - beta1^2 alpha2^2 sin^2 phi`.
pub fn entanglement_probability(beta1: f64, alpha2: f64, phi: f64) -> f64 {
    1.0 - (beta1 * alpha2 * phi.sin()).powi(2)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Protocol {
    Swap,
    Phase,
    Cnot,
    /// Maximally entangled `(e^{i theta1} |g1e2> + |e1g2>)/sqrt 2`.
    Entangle { theta1: f64 },
    /// Atom 2 state onto atom 1.
    MapAtomToAtom { qubit: AtomQubit },
    /// Cavity `alpha|0> + beta e^{i theta}|1>` onto atom 2.
    MapCavityToAtom { qubit: AtomQubit },
    /// Atom 1 state onto the cavity.
    MapAtomToCavity { qubit: AtomQubit },
}

pub const PROTOCOL_NAMES: [&str; 7] =
    ["swap", "phase", "cnot", "entangle", "map_atom_to_atom", "map_cavity_to_atom", "map_atom_to_cavity"];

struct Case {
    label: String,
    input: SystemState,
    target: SystemState,
}

fn vacuum(a1: Level, a2: Level) -> BareState {
    BareState::new(0, a1, a2)
}

fn single(label: BareState, amp: C64) -> SystemState {
    SystemState::from_amplitudes([(label, amp)])
}

impl Protocol {
    pub fn name(&self) -> &'static str {
        match self {
            Protocol::Swap => "swap",
            Protocol::Phase => "phase",
            Protocol::Cnot => "cnot",
            Protocol::Entangle { .. } => "entangle",
            Protocol::MapAtomToAtom { .. } => "map_atom_to_atom",
            Protocol::MapCavityToAtom { .. } => "map_cavity_to_atom",
            Protocol::MapAtomToCavity { .. } => "map_atom_to_cavity",
        }
    }

    /// Builds a protocol from its name; mapping protocols carry `qubit`,
    /// entanglement uses `qubit.theta` as the relative phase.
    pub fn from_name(name: &str, qubit: AtomQubit) -> Option<Self> {
        Some(match name {
            "swap" => Protocol::Swap,
            "phase" => Protocol::Phase,
            "cnot" => Protocol::Cnot,
            "entangle" => Protocol::Entangle { theta1: qubit.theta },
            "map_atom_to_atom" => Protocol::MapAtomToAtom { qubit },
            "map_cavity_to_atom" => Protocol::MapCavityToAtom { qubit },
            "map_atom_to_cavity" => Protocol::MapAtomToCavity { qubit },
            _ => return None,
        })
    }

    /// Requested three-state angle of each passage.
    pub fn pass_angles(&self) -> Vec<f64> {
        match self {
            Protocol::Swap | Protocol::MapAtomToAtom { .. } => vec![PI],
            Protocol::Phase | Protocol::Cnot => vec![2.0 * PI, PI],
            Protocol::Entangle { .. } => vec![2.0 * PI],
            Protocol::MapCavityToAtom { .. } | Protocol::MapAtomToCavity { .. } => vec![FRAC_PI_2],
        }
    }

    fn steps(&self, passes: &[PulseConfig]) -> Vec<ProtocolStep> {
        let pass = |i: usize| ProtocolStep::CavityPass(passes[i]);
        let rot = |atom, gate| ProtocolStep::Rotation { atom, gate };
        match self {
            Protocol::Swap => vec![pass(0)],
            Protocol::Phase => vec![pass(0), pass(1)],
            Protocol::Cnot => vec![rot(Atom::One, hadamard()), pass(0), pass(1), rot(Atom::One, hadamard())],
            Protocol::Entangle { .. } => vec![pass(0), rot(Atom::One, hadamard())],
            Protocol::MapAtomToAtom { .. } => vec![pass(0), rot(Atom::One, phase_shift(PI))],
            Protocol::MapCavityToAtom { .. } => vec![pass(0), rot(Atom::Two, phase_shift(FRAC_PI_2))],
            Protocol::MapAtomToCavity { .. } => vec![rot(Atom::One, phase_shift(FRAC_PI_2)), pass(0)],
        }
    }

    /// Population outside this set counts as leaked.
    fn intended(&self, s: &BareState) -> bool {
        match self {
            Protocol::MapAtomToAtom { .. } => s.photons == 0 && s.atom2 == G,
            Protocol::MapCavityToAtom { .. } => s.photons == 0 && s.atom1 == G,
            Protocol::MapAtomToCavity { .. } => s.atom1 == G && s.atom2 == G,
            _ => s.photons == 0,
        }
    }

    fn cases(&self) -> Result<Vec<Case>> {
        let table = |rows: [((Level, Level), f64, (Level, Level)); 4]| -> Vec<Case> {
            rows.iter()
                .map(|((i1, i2), sign, (o1, o2))| {
                    let input = vacuum(*i1, *i2);
                    Case {
                        label: format!("{input}"),
                        input: SystemState::basis_state(input),
                        target: single(vacuum(*o1, *o2), c(*sign)),
                    }
                })
                .collect()
        };
        let vac = [c(1.0)];
        Ok(match self {
            Protocol::Swap => table([
                ((G, G), 1.0, (G, G)),
                ((G, E), -1.0, (E, G)),
                ((E, G), -1.0, (G, E)),
                ((E, E), 1.0, (E, E)),
            ]),
            Protocol::Phase => table([
                ((G, G), 1.0, (G, G)),
                ((G, E), 1.0, (G, E)),
                ((E, G), -1.0, (E, G)),
                ((E, E), 1.0, (E, E)),
            ]),
            Protocol::Cnot => table([
                ((G, G), 1.0, (E, G)),
                ((G, E), 1.0, (G, E)),
                ((E, G), 1.0, (G, G)),
                ((E, E), 1.0, (E, E)),
            ]),
            Protocol::Entangle { theta1 } => {
                let h = FRAC_1_SQRT_2;
                let q1 = AtomQubit::new(h, h, *theta1)?;
                let q2 = AtomQubit::new(h, h, 0.0)?;
                let target = SystemState::from_amplitudes([
                    (vacuum(G, E), C64::from_polar(h, *theta1)),
                    (vacuum(E, G), c(h)),
                ]);
                vec![Case {
                    label: format!("({h:.4},{h:.4},{theta1}) x ({h:.4},{h:.4},0)"),
                    input: crate::model::decompose_product_state(&q1, &q2, &vac)?,
                    target,
                }]
            }
            Protocol::MapAtomToAtom { qubit } => vec![Case {
                label: format!("atom2 ({}, {}, {})", qubit.alpha, qubit.beta, qubit.theta),
                input: crate::model::decompose_product_state(&AtomQubit::ground(), qubit, &vac)?,
                target: crate::model::decompose_product_state(qubit, &AtomQubit::ground(), &vac)?,
            }],
            Protocol::MapCavityToAtom { qubit } => vec![Case {
                label: format!("cavity ({}, {}, {})", qubit.alpha, qubit.beta, qubit.theta),
                input: crate::model::decompose_product_state(
                    &AtomQubit::ground(),
                    &AtomQubit::ground(),
                    &qubit.amplitudes(),
                )?,
                target: crate::model::decompose_product_state(&AtomQubit::ground(), qubit, &vac)?,
            }],
            Protocol::MapAtomToCavity { qubit } => vec![Case {
                label: format!("atom1 ({}, {}, {})", qubit.alpha, qubit.beta, qubit.theta),
                input: crate::model::decompose_product_state(qubit, &AtomQubit::ground(), &vac)?,
                target: crate::model::decompose_product_state(
                    &AtomQubit::ground(),
                    &AtomQubit::ground(),
                    &qubit.amplitudes(),
                )?,
            }],
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GateSettings {
    pub mode: Mode,
    pub delta: f64,
    /// Lower bound on `g sigma` for each passage; extra turns are added to
    /// the requested angle until it is met.
    pub min_gsigma: f64,
    pub evolve: EvolveOptions,
}

impl Default for GateSettings {
    fn default() -> Self {
        Self { mode: Mode::Ideal, delta: 1.0, min_gsigma: DEFAULT_MIN_GSIGMA, evolve: EvolveOptions::final_only() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PassReport {
    pub target_angle: f64,
    pub angle: f64,
    pub k: u32,
    pub g_sigma: f64,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AmplitudeEntry {
    pub state: String,
    /// `[re, im]`
    pub amplitude: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TruthRow {
    pub input: String,
    pub output: Vec<AmplitudeEntry>,
    pub target: Vec<AmplitudeEntry>,
    pub fidelity: f64,
    pub leak: f64,
    pub norm: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GateReport {
    pub protocol: String,
    pub mode: Mode,
    pub passes: Vec<PassReport>,
    pub sigma_error: f64,
    pub delay_error: f64,
    pub truth_table: Vec<TruthRow>,
    pub min_fidelity: f64,
    pub max_leak: f64,
    #[serde(skip)]
    pub outputs: Vec<SystemState>,
}

impl GateReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidParameter(format!("serializing report: {e}")))
    }
}

fn entries(state: &SystemState) -> Vec<AmplitudeEntry> {
    state
        .iter_amplitudes()
        .filter(|(_, a)| *a != C64::default())
        .map(|(s, a)| AmplitudeEntry { state: s.to_string(), amplitude: [a.re, a.im] })
        .collect()
}

/// Passage parameters: `g sigma` from the angle solver at `settings.delta`.
pub fn plan_passes(protocol: &Protocol, settings: &GateSettings) -> Result<Vec<(AngleSolution, PulseConfig)>> {
    protocol
        .pass_angles()
        .into_iter()
        .map(|target| {
            let sol = solve_gsigma_for_angle(target, -1, settings.delta, settings.min_gsigma)?;
            Ok((sol, PulseConfig::new(sol.g_sigma, settings.delta)?))
        })
        .collect()
}

/// Runs `protocol` with every passage's interaction time scaled by
/// `1 + sigma_error` and delay scaled by `1 + delay_error`.
pub fn run_protocol(protocol: &Protocol, settings: &GateSettings, sigma_error: f64, delay_error: f64) -> Result<GateReport> {
    let plan = plan_passes(protocol, settings)?;
    let configs =
        plan.iter().map(|(_, cfg)| cfg.perturbed(sigma_error, delay_error)).collect::<Result<Vec<PulseConfig>>>()?;
    let passes = plan
        .iter()
        .zip(protocol.pass_angles())
        .zip(&configs)
        .map(|(((sol, _), target), cfg)| PassReport {
            target_angle: target,
            angle: sol.angle,
            k: sol.k,
            g_sigma: cfg.g_sigma,
            delta: cfg.delta,
        })
        .collect();
    let steps = protocol.steps(&configs);
    let mut truth_table = Vec::new();
    let mut outputs = Vec::new();
    for case in protocol.cases()? {
        let out = apply_protocol(&case.input, &steps, settings.mode, &settings.evolve)?;
        let fidelity = case.target.inner(&out).norm_sqr().min(1.0);
        let norm = out.norm_sqr();
        let leak = (norm - out.population(|s| protocol.intended(s))).max(0.0);
        truth_table.push(TruthRow {
            input: case.label,
            output: entries(&out),
            target: entries(&case.target),
            fidelity,
            leak,
            norm,
        });
        outputs.push(out);
    }
    let min_fidelity = truth_table.iter().map(|r| r.fidelity).fold(1.0, f64::min);
    let max_leak = truth_table.iter().map(|r| r.leak).fold(0.0, f64::max);
    Ok(GateReport {
        protocol: protocol.name().to_string(),
        mode: settings.mode,
        passes,
        sigma_error,
        delay_error,
        truth_table,
        min_fidelity,
        max_leak,
        outputs,
    })
}

pub fn map_atom_to_atom(qubit: AtomQubit, settings: &GateSettings) -> Result<GateReport> {
    run_protocol(&Protocol::MapAtomToAtom { qubit }, settings, 0.0, 0.0)
}

pub fn map_cavity_to_atom(qubit: AtomQubit, settings: &GateSettings) -> Result<GateReport> {
    run_protocol(&Protocol::MapCavityToAtom { qubit }, settings, 0.0, 0.0)
}

pub fn map_atom_to_cavity(qubit: AtomQubit, settings: &GateSettings) -> Result<GateReport> {
    run_protocol(&Protocol::MapAtomToCavity { qubit }, settings, 0.0, 0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScanPoint {
    pub sigma_error: f64,
    pub delay_error: f64,
    /// Worst input.
    pub fidelity: f64,
    pub leak: f64,
}

/// Reruns the protocol on the grid `delay_errors x sigma_errors` in
/// parallel; rows come back delay-major, in grid order.
pub fn fidelity_scan(
    protocol: &Protocol,
    settings: &GateSettings,
    sigma_errors: &[f64],
    delay_errors: &[f64],
) -> Result<Vec<ScanPoint>> {
    let grid: Vec<(f64, f64)> = delay_errors.iter().flat_map(|d| sigma_errors.iter().map(move |s| (*s, *d))).collect();
    grid.par_iter()
        .map(|&(s, d)| {
            let r = run_protocol(protocol, settings, s, d)?;
            Ok(ScanPoint { sigma_error: s, delay_error: d, fidelity: r.min_fidelity, leak: r.max_leak })
        })
        .collect()
}

pub fn write_scan_csv<W: Write>(mut out: W, points: &[ScanPoint], comment: &str) -> Result<()> {
    let io = |e: std::io::Error| Error::InvalidParameter(format!("writing scan: {e}"));
    let cerr = |e: csv::Error| Error::InvalidParameter(format!("writing scan: {e}"));
    writeln!(out, "# {comment}").map_err(io)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sigma_rel", "delay_rel", "fidelity", "p_leak"]).map_err(cerr)?;
    for p in points {
        w.write_record([
            format!("{}", p.sigma_error),
            format!("{}", p.delay_error),
            format!("{:.12e}", p.fidelity),
            format!("{:.12e}", p.leak),
        ])
        .map_err(cerr)?;
    }
    w.flush().map_err(io)?;
    Ok(())
}

/// Basis of manifold `n + 2`, for labelling map matrices.
pub fn map_basis(n: i64) -> Result<Vec<BareState>> {
    check_n(n)?;
    Ok(manifold_basis((n + 2) as u32).states)
}
