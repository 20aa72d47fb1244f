//! Schrodinger dynamics per manifold, dynamical phases, adiabaticity
//! diagnostics and the reduced two-state model near the crossing.
//!
//! Time is `tau`; each block obeys `i dpsi/dtau = 2 g sigma H(tau) psi` with
//! `H` in units of `g`.

use std::io::Write;

use nalgebra::DVector;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::{
    build_hamiltonian, coupling_derivative, coupling_envelope, manifold_basis, Atom, ManifoldBlock, PulseConfig,
    SystemState,
};
use crate::ode::{DormandPrince, OdeOptions, OdeStats};
use crate::quadrature;
use crate::spectrum::{self, Branch, Side};

/// Default number of uniformly spaced trajectory samples (endpoints included).
pub const DEFAULT_SAMPLES: usize = 2001;
/// Q max-scans cover `|tau| <= delta + Q_SCAN_MARGIN`.
pub const Q_SCAN_MARGIN: f64 = 2.0;
pub const Q_SCAN_STEP: f64 = 0.01;
/// Step of the finite-difference Q variant.
pub const Q_FD_STEP: f64 = 0.01;
const DEGENERATE_GAP: f64 = 1e-12;
const PHASE_REL_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolveOptions {
    pub ode: OdeOptions,
    /// Uniform samples over the span, at least 2.
    pub samples: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { ode: OdeOptions::default(), samples: DEFAULT_SAMPLES }
    }
}

impl EvolveOptions {
    /// Endpoint only, for runs that need just the final state.
    pub fn final_only() -> Self {
        Self { samples: 2, ..Self::default() }
    }
}

#[derive(Clone, Debug)]
pub struct EvolutionResult {
    pub trajectory: Vec<(f64, SystemState)>,
    pub final_state: SystemState,
    /// max over samples of `|1 - <psi|psi>|`, relative to the initial norm.
    pub norm_drift: f64,
    pub stats: OdeStats,
}

impl EvolutionResult {
    /// Amplitudes of manifold `excitations` along the trajectory (zeros if
    /// the block was never populated).
    pub fn block_trajectory(&self, excitations: u32) -> Vec<(f64, DVector<C64>)> {
        let dim = manifold_basis(excitations).dimension();
        self.trajectory
            .iter()
            .map(|(tau, s)| {
                let amps = s.blocks.get(&excitations).map(|b| b.amplitudes.clone()).unwrap_or_else(|| DVector::zeros(dim));
                (*tau, amps)
            })
            .collect()
    }
}

fn sample_points(a: f64, b: f64, samples: usize) -> Vec<f64> {
    let m = samples - 1;
    let mut pts: Vec<f64> = (0..=m).map(|k| a + (b - a) * k as f64 / m as f64).collect();
    pts[m] = b;
    pts
}

/// Integrates one manifold block, returning its amplitudes at each sample.
pub fn evolve_block(
    block: &ManifoldBlock,
    cfg: &PulseConfig,
    span: (f64, f64),
    opts: &EvolveOptions,
) -> Result<(Vec<DVector<C64>>, OdeStats)> {
    let taus = sample_points(span.0, span.1, opts.samples);
    let couplings = block.basis.couplings();
    let mut y: Vec<C64> = block.amplitudes.iter().copied().collect();
    let mut out = Vec::with_capacity(taus.len());
    out.push(block.amplitudes.clone());
    if couplings.is_empty() {
        out.resize(taus.len(), block.amplitudes.clone());
        return Ok((out, OdeStats::default()));
    }
    let rate = -C64::i() * (2.0 * cfg.g_sigma);
    let mut rhs = |tau: f64, psi: &[C64], dpsi: &mut [C64]| {
        let eta = [coupling_envelope(Atom::One, tau, cfg), coupling_envelope(Atom::Two, tau, cfg)];
        dpsi.fill(C64::default());
        for c in &couplings {
            let h = c.factor * eta[(c.atom == Atom::Two) as usize];
            dpsi[c.row] += h * psi[c.col];
            dpsi[c.col] += h * psi[c.row];
        }
        for d in dpsi.iter_mut() {
            *d *= rate;
        }
    };
    let mut dp = DormandPrince::new(y.len(), opts.ode);
    for w in taus.windows(2) {
        dp.advance(&mut rhs, w[0], w[1], &mut y)?;
        out.push(DVector::from_column_slice(&y));
    }
    Ok((out, dp.stats))
}

/// Evolves every block of `initial` from `span.0` to `span.1`.
pub fn evolve(initial: &SystemState, cfg: &PulseConfig, span: (f64, f64), opts: &EvolveOptions) -> Result<EvolutionResult> {
    if opts.samples < 2 {
        return Err(Error::InvalidParameter("need at least 2 trajectory samples".into()));
    }
    if !(span.0.is_finite() && span.1.is_finite()) {
        return Err(Error::InvalidParameter("tau span must be finite".into()));
    }
    initial.ensure_normalized()?;
    evolve_unchecked(initial, cfg, span, opts)
}

/// `evolve` without the input normalization check, for chaining passes.
pub(crate) fn evolve_unchecked(initial: &SystemState, cfg: &PulseConfig, span: (f64, f64), opts: &EvolveOptions) -> Result<EvolutionResult> {
    let taus = sample_points(span.0, span.1, opts.samples);
    let mut trajectory: Vec<(f64, SystemState)> = taus.iter().map(|t| (*t, SystemState::default())).collect();
    let mut stats = OdeStats::default();
    for (n, block) in &initial.blocks {
        let (amps, s) = evolve_block(block, cfg, span, opts)?;
        stats.accepted += s.accepted;
        stats.rejected += s.rejected;
        stats.evaluations += s.evaluations;
        for ((_, state), a) in trajectory.iter_mut().zip(amps) {
            state.blocks.insert(*n, ManifoldBlock { basis: block.basis.clone(), amplitudes: a });
        }
    }
    let norm0 = initial.norm_sqr();
    let norm_drift = trajectory.iter().map(|(_, s)| (s.norm_sqr() / norm0 - 1.0).abs()).fold(0.0, f64::max);
    let final_state = trajectory.last().expect("at least two samples").1.clone();
    Ok(EvolutionResult { trajectory, final_state, norm_drift, stats })
}

/// Evolution over the default window `[-(delta + 6), delta + 6]`.
pub fn evolve_through(initial: &SystemState, cfg: &PulseConfig, opts: &EvolveOptions) -> Result<EvolutionResult> {
    let t0 = cfg.tau_window();
    evolve(initial, cfg, (-t0, t0), opts)
}

fn check_branch(n: i64, branch: Branch) -> Result<()> {
    if n < -1 {
        return Err(Error::InvalidParameter(format!("manifold index n must be >= -1, got {n}")));
    }
    if n == -1 && branch == Branch::Two {
        return Err(Error::InvalidParameter("the three-state manifold has no branch 2".into()));
    }
    Ok(())
}

/// Crossing-aware energy `E'_j(tau)`: `E'_1 = sign(tau) E_-`,
/// `E'_2 = -sign(tau) E_-`, `E_3 = -E_+`, `E_4 = E_+`.
pub fn crossing_energy(branch: Branch, n: i64, tau: f64, cfg: &PulseConfig) -> f64 {
    let s = if tau < 0.0 { -1.0 } else if tau > 0.0 { 1.0 } else { 0.0 };
    match branch {
        Branch::One => s * spectrum::inner_energy(n, tau, cfg),
        Branch::Two => -s * spectrum::inner_energy(n, tau, cfg),
        Branch::Three => -spectrum::outer_energy(n, tau, cfg),
        Branch::Four => spectrum::outer_energy(n, tau, cfg),
    }
}

/// `2 g sigma * integral of E'_j over tau_range` (crossing-aware labels).
pub fn dynamical_phase(branch: Branch, n: i64, cfg: &PulseConfig, tau_range: (f64, f64)) -> Result<f64> {
    check_branch(n, branch)?;
    let (a, b) = tau_range;
    let q = quadrature::integrate(|t| crossing_energy(branch, n, t, cfg), a, b, &[0.0, -cfg.delta, cfg.delta], 1e-15, PHASE_REL_TOL)?;
    Ok(2.0 * cfg.g_sigma * q.value)
}

/// Adiabatic state `Psi'_j(tau)` embedded as a full system state.
pub fn adiabatic_system_state(branch: Branch, n: i64, tau: f64, cfg: &PulseConfig) -> Result<SystemState> {
    check_branch(n, branch)?;
    let frame = spectrum::crossing_frame(n, tau, cfg)?;
    let v = frame.state(branch).expect("branch checked");
    let basis = manifold_basis((n + 2) as u32);
    Ok(SystemState::from_amplitudes(basis.states.iter().copied().zip(v.iter().map(|x| C64::new(*x, 0.0)))))
}

/// `sum_{r<c} dH_rc (x_r y_c + x_c y_r)`; exactly symmetric in `x, y`.
fn derivative_form(n: i64, tau: f64, cfg: &PulseConfig, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    let eta = [coupling_derivative(Atom::One, tau, cfg), coupling_derivative(Atom::Two, tau, cfg)];
    manifold_basis((n + 2) as u32)
        .couplings()
        .iter()
        .map(|c| c.factor * eta[(c.atom == Atom::Two) as usize] * (x[c.row] * y[c.col] + x[c.col] * y[c.row]))
        .sum()
}

fn q_frame(n: i64, tau: f64, cfg: &PulseConfig) -> Result<spectrum::AdiabaticFrame> {
    if tau == 0.0 {
        spectrum::crossing_frame(n, tau, cfg)
    } else {
        spectrum::adiabatic_states(n, tau, cfg)
    }
}

fn q_pair(i: Branch, j: Branch, n: i64, tau: f64, cfg: &PulseConfig) -> Result<(spectrum::AdiabaticFrame, f64)> {
    check_branch(n, i)?;
    check_branch(n, j)?;
    if i == j {
        return Err(Error::InvalidParameter("Q needs two different branches".into()));
    }
    let frame = q_frame(n, tau, cfg)?;
    let gap = frame.energy(i).expect("checked") - frame.energy(j).expect("checked");
    if gap.abs() <= DEGENERATE_GAP {
        return Err(Error::Undefined { tau, reason: format!("branches {} and {} are degenerate", i.number(), j.number()) });
    }
    Ok((frame, gap))
}

/// `Q^{ij}_n(tau) = |<Psi_i| dH/dtau |Psi_j>| / (2 (E_i - E_j)^2)` with the
/// analytic pulse derivative, raw labels (the `0-` limit at `tau = 0`).
pub fn adiabaticity_q(i: Branch, j: Branch, n: i64, tau: f64, cfg: &PulseConfig) -> Result<f64> {
    let (frame, gap) = q_pair(i, j, n, tau, cfg)?;
    let num = derivative_form(n, tau, cfg, frame.state(i).unwrap(), frame.state(j).unwrap());
    Ok(num.abs() / (2.0 * gap * gap))
}

/// Same as [`adiabaticity_q`] with `dH/dtau` from a central difference of
/// step `dtau`.
pub fn adiabaticity_q_fd(i: Branch, j: Branch, n: i64, tau: f64, cfg: &PulseConfig, dtau: f64) -> Result<f64> {
    let (frame, gap) = q_pair(i, j, n, tau, cfg)?;
    let exc = (n + 2) as u32;
    let dh = (build_hamiltonian(exc, tau + dtau, cfg) - build_hamiltonian(exc, tau - dtau, cfg)) / (2.0 * dtau);
    let (vi, vj) = (frame.state(i).unwrap(), frame.state(j).unwrap());
    Ok(vi.dot(&(dh * vj)).abs() / (2.0 * gap * gap))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QMax {
    pub tau: f64,
    pub value: f64,
}

/// Maximum of `Q^{ij}` on the grid `-w, -w + step, ..., w`, skipping
/// degenerate points. The window should stay near the pulses: in the far
/// tails both the gap and the coupling derivative vanish and their ratio
/// grows without bound, which says nothing about the dynamics.
pub fn max_adiabaticity_q(i: Branch, j: Branch, n: i64, cfg: &PulseConfig, half_window: f64, step: f64) -> Result<QMax> {
    if !(half_window > 0.0 && step > 0.0) {
        return Err(Error::InvalidParameter("Q scan needs a positive window and step".into()));
    }
    let m = (2.0 * half_window / step).round() as usize;
    let mut best = QMax { tau: f64::NAN, value: f64::NEG_INFINITY };
    for k in 0..=m {
        let tau = -half_window + 2.0 * half_window * k as f64 / m as f64;
        match adiabaticity_q(i, j, n, tau, cfg) {
            Ok(q) if q > best.value => best = QMax { tau, value: q },
            Ok(_) | Err(Error::Undefined { .. }) | Err(Error::Degenerate { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    if best.tau.is_nan() {
        return Err(Error::Undefined { tau: 0.0, reason: "every scan point is degenerate".into() });
    }
    Ok(best)
}

/// Scan over the default window `|tau| <= delta + 2`, step 0.01.
pub fn max_adiabaticity_q_default(i: Branch, j: Branch, n: i64, cfg: &PulseConfig) -> Result<QMax> {
    max_adiabaticity_q(i, j, n, cfg, cfg.delta + Q_SCAN_MARGIN, Q_SCAN_STEP)
}

/// `delta eps_j(tau) = |1 - |<Psi'_j(tau)|psi(tau)>|^2|` along a trajectory,
/// crossing-aware labels.
pub fn nonadiabaticity_eps(branch: Branch, n: i64, result: &EvolutionResult, cfg: &PulseConfig) -> Result<Vec<(f64, f64)>> {
    check_branch(n, branch)?;
    result
        .block_trajectory((n + 2) as u32)
        .into_iter()
        .map(|(tau, amps)| {
            let frame = spectrum::crossing_frame(n, tau, cfg)?;
            let v = frame.state(branch).expect("checked");
            let overlap: C64 = v.iter().zip(amps.iter()).map(|(x, a)| *x * a).sum();
            Ok((tau, (1.0 - overlap.norm_sqr()).abs()))
        })
        .collect()
}

/// Projection of a manifold block onto `psi_j = Psi_j(0-)`.
pub fn project_on_degeneracy_basis(n: i64, amplitudes: &DVector<C64>) -> Result<[C64; 4]> {
    let deg = spectrum::degeneracy_states(n, Side::Before)?;
    let mut out = [C64::default(); 4];
    for (o, v) in out.iter_mut().zip(&deg.states) {
        *o = v.iter().zip(amplitudes.iter()).map(|(x, a)| *x * a).sum();
    }
    Ok(out)
}

/// Reduced description of the inner pair near `tau = 0`, in the basis
/// `psi_j = Psi_j(0-)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EffectiveCrossingModel {
    pub n: i64,
    pub omega1: f64,
    pub omega2: f64,
}

impl EffectiveCrossingModel {
    pub fn new(n: i64) -> Result<Self> {
        if n < 0 {
            return Err(Error::InvalidParameter("the crossing model needs n >= 0".into()));
        }
        let nf = n as f64;
        Ok(Self {
            n,
            omega1: 0.5 * ((nf + 1.0) * (nf + 2.0) / (6.0 + 4.0 * nf)).sqrt(),
            omega2: 0.5 * (6.0 + 4.0 * nf).sqrt(),
        })
    }

    /// `Omega_+ = eta1 + eta2`.
    pub fn omega_plus(&self, tau: f64, cfg: &PulseConfig) -> f64 {
        coupling_envelope(Atom::One, tau, cfg) + coupling_envelope(Atom::Two, tau, cfg)
    }

    /// `Omega_- = eta1 - eta2`.
    pub fn omega_minus(&self, tau: f64, cfg: &PulseConfig) -> f64 {
        coupling_envelope(Atom::One, tau, cfg) - coupling_envelope(Atom::Two, tau, cfg)
    }

    /// Diagonal of the reduced Hamiltonian, `(-4 w1 Omega_-, +4 w1 Omega_-)`
    /// in units of `g`; this is `<psi_j|H|psi_j>` for `j = 1, 2`.
    pub fn diagonal(&self, tau: f64, cfg: &PulseConfig) -> (f64, f64) {
        let e = 4.0 * self.omega1 * self.omega_minus(tau, cfg);
        (-e, e)
    }
}

#[derive(Clone, Debug)]
pub struct EffectiveEvolution {
    pub taus: Vec<f64>,
    pub c1: Vec<C64>,
    pub c2: Vec<C64>,
    /// `false` when the window leaves `|tau| <= 0.25 delta`.
    pub within_validity: bool,
}

/// Integrates the reduced pair `i dc_{1,2}/dtau = -+ 2 g sigma 4 w1
/// Omega_-(tau) c_{1,2}` from `window.0` with initial `(c1, c2)`.
pub fn effective_two_level_evolve(
    n: i64,
    cfg: &PulseConfig,
    window: (f64, f64),
    initial: (C64, C64),
    samples: usize,
) -> Result<EffectiveEvolution> {
    if samples < 2 {
        return Err(Error::InvalidParameter("need at least 2 samples".into()));
    }
    let model = EffectiveCrossingModel::new(n)?;
    let limit = 0.25 * cfg.delta;
    let within_validity = window.0.abs() <= limit && window.1.abs() <= limit;
    let taus = sample_points(window.0, window.1, samples);
    let mut y = [initial.0, initial.1];
    let rate = -C64::i() * (2.0 * cfg.g_sigma);
    let mut rhs = |tau: f64, c: &[C64], dc: &mut [C64]| {
        let (d1, d2) = model.diagonal(tau, cfg);
        dc[0] = rate * d1 * c[0];
        dc[1] = rate * d2 * c[1];
    };
    let mut dp = DormandPrince::new(2, OdeOptions::default());
    let (mut c1, mut c2) = (vec![y[0]], vec![y[1]]);
    for w in taus.windows(2) {
        dp.advance(&mut rhs, w[0], w[1], &mut y)?;
        c1.push(y[0]);
        c2.push(y[1]);
    }
    Ok(EffectiveEvolution { taus, c1, c2, within_validity })
}

/// Trajectory CSV: `tau`, Re/Im of every bare amplitude of every block,
/// `norm`, then the named extra columns (one value per sample). The first
/// line is `# ` followed by `comment`.
pub fn write_trajectory_csv<W: Write>(
    out: W,
    result: &EvolutionResult,
    extra: &[(String, Vec<f64>)],
    comment: &str,
) -> Result<()> {
    let io = |e: csv::Error| Error::InvalidParameter(format!("writing trajectory: {e}"));
    let mut out = out;
    writeln!(out, "# {comment}").map_err(|e| Error::InvalidParameter(format!("writing trajectory: {e}")))?;
    let mut w = csv::Writer::from_writer(out);
    let labels: Vec<_> = result
        .trajectory
        .first()
        .map(|(_, s)| s.iter_amplitudes().map(|(l, _)| l).collect())
        .unwrap_or_default();
    let mut header = vec!["tau".to_string()];
    for l in &labels {
        header.push(format!("re_{}", l.tag()));
        header.push(format!("im_{}", l.tag()));
    }
    header.push("norm".into());
    header.extend(extra.iter().map(|(name, _)| name.clone()));
    w.write_record(&header).map_err(io)?;
    for (k, (tau, state)) in result.trajectory.iter().enumerate() {
        let mut row = vec![format!("{tau:.10e}")];
        for (_, a) in state.iter_amplitudes() {
            row.push(format!("{:.12e}", a.re));
            row.push(format!("{:.12e}", a.im));
        }
        row.push(format!("{:.12e}", state.norm_sqr().sqrt()));
        for (_, col) in extra {
            row.push(col.get(k).map(|v| format!("{v:.12e}")).unwrap_or_default());
        }
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| Error::InvalidParameter(format!("writing trajectory: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BareState, Level};
    use std::f64::consts::PI;

    fn cfg(g_sigma: f64, delta: f64) -> PulseConfig {
        PulseConfig::new(g_sigma, delta).unwrap()
    }

    #[test]
    fn ground_block_is_static() {
        let s = SystemState::basis_state(BareState::new(0, Level::Ground, Level::Ground));
        let r = evolve_through(&s, &cfg(30.0, 1.0), &EvolveOptions::default()).unwrap();
        assert_eq!(r.final_state, s);
        assert_eq!(r.trajectory.len(), DEFAULT_SAMPLES);
    }

    #[test]
    fn norm_is_preserved() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = SystemState::from_amplitudes([
            (BareState::new(0, Level::Excited, Level::Excited), C64::new(h, 0.0)),
            (BareState::new(0, Level::Ground, Level::Excited), C64::new(0.0, h)),
        ]);
        let r = evolve_through(&s, &cfg(20.0, 0.8), &EvolveOptions::default()).unwrap();
        assert!(r.norm_drift < 1e-8, "{}", r.norm_drift);
        assert_eq!(r.final_state.blocks.len(), 2);
    }

    #[test]
    fn single_excitation_transfer() {
        let s = SystemState::basis_state(BareState::new(0, Level::Ground, Level::Excited));
        let r = evolve_through(&s, &cfg(30.0, 1.0), &EvolveOptions::final_only()).unwrap();
        let a = r.final_state.amplitude(&BareState::new(0, Level::Excited, Level::Ground));
        assert!(a.norm_sqr() > 0.999);
        assert!((a.arg().abs() - PI).abs() < 0.02);
    }

    #[test]
    fn inner_pair_phase_cancels() {
        let c = cfg(7.0, 1.0);
        let t0 = c.tau_window();
        let p = dynamical_phase(Branch::One, 0, &c, (-t0, t0)).unwrap();
        assert!(p.abs() < 1e-8, "{p}");
        let half = dynamical_phase(Branch::One, 0, &c, (-t0, 0.0)).unwrap();
        assert!(half < -1.0);
    }

    #[test]
    fn outer_phases_are_opposite() {
        let c = cfg(1.3, 0.7);
        for range in [(-2.0, 2.0), (-7.0, 7.0)] {
            let p3 = dynamical_phase(Branch::Three, 2, &c, range).unwrap();
            let p4 = dynamical_phase(Branch::Four, 2, &c, range).unwrap();
            assert!((p3 + p4).abs() < 1e-12 * p4.abs());
        }
    }

    #[test]
    fn three_level_phase_large_delay() {
        // E_4 = sqrt(eta1^2 + eta2^2) splits into two separate Gaussians
        let c = cfg(1.0, 4.0);
        let t0 = c.tau_window();
        let p = dynamical_phase(Branch::Four, -1, &c, (-t0, t0)).unwrap();
        assert!((p - 4.0 * PI.sqrt()).abs() < 1e-6, "{p}");
        assert!(dynamical_phase(Branch::Two, -1, &c, (-t0, t0)).is_err());
    }

    #[test]
    fn inner_pair_q_vanishes() {
        let c = cfg(1.0, 1.0);
        for n in 0..4 {
            for &tau in &[-2.0, -0.3, 0.01, 0.7, 2.5] {
                assert_eq!(adiabaticity_q(Branch::One, Branch::Two, n, tau, &c).unwrap(), 0.0);
                assert_eq!(adiabaticity_q(Branch::Three, Branch::Four, n, tau, &c).unwrap(), 0.0);
            }
        }
        assert!(matches!(adiabaticity_q(Branch::One, Branch::Two, 0, 0.0, &c), Err(Error::Undefined { .. })));
    }

    #[test]
    fn q_matches_finite_difference() {
        let c = cfg(1.0, 1.0);
        for &tau in &[-1.5, -0.5, 0.3, 1.1] {
            let a = adiabaticity_q(Branch::One, Branch::Three, 0, tau, &c).unwrap();
            let f = adiabaticity_q_fd(Branch::One, Branch::Three, 0, tau, &c, 1e-4).unwrap();
            assert!((a - f).abs() < 1e-6 * a.max(1.0));
            let coarse = adiabaticity_q_fd(Branch::One, Branch::Three, 0, tau, &c, Q_FD_STEP).unwrap();
            assert!((a - coarse).abs() < 1e-3 * a.max(1.0));
        }
    }

    #[test]
    fn q_peak_is_order_one() {
        let m = max_adiabaticity_q_default(Branch::One, Branch::Three, 0, &cfg(1.0, 1.0)).unwrap();
        assert!(m.value > 0.1 && m.value < 10.0, "{m:?}");
    }

    #[test]
    fn adiabatic_following_gives_zero_eps() {
        let c = cfg(30.0, 1.0);
        let trajectory = (0..50)
            .map(|k| {
                let tau = -3.0 + 0.1234 * k as f64;
                (tau, adiabatic_system_state(Branch::Three, 1, tau, &c).unwrap())
            })
            .collect::<Vec<_>>();
        let final_state = trajectory.last().unwrap().1.clone();
        let r = EvolutionResult { trajectory, final_state, norm_drift: 0.0, stats: OdeStats::default() };
        for (_, e) in nonadiabaticity_eps(Branch::Three, 1, &r, &c).unwrap() {
            assert!(e < 1e-14);
        }
    }

    #[test]
    fn effective_frequencies() {
        for n in 0..20 {
            let m = EffectiveCrossingModel::new(n).unwrap();
            let nf = n as f64;
            assert!((m.omega1 * m.omega2 - ((nf + 1.0) * (nf + 2.0)).sqrt() / 4.0).abs() < 1e-14);
        }
        assert_eq!(EffectiveCrossingModel::new(0).unwrap().omega_minus(0.0, &cfg(1.0, 1.0)), 0.0);
    }

    #[test]
    fn effective_diagonal_is_projected_hamiltonian() {
        let c = cfg(1.0, 1.0);
        for n in 0..4 {
            let m = EffectiveCrossingModel::new(n).unwrap();
            let deg = spectrum::degeneracy_states(n, Side::Before).unwrap();
            for &tau in &[-0.2, 0.1] {
                let h = build_hamiltonian((n + 2) as u32, tau, &c);
                let (d1, d2) = m.diagonal(tau, &c);
                assert!((deg.states[0].dot(&(&h * &deg.states[0])) - d1).abs() < 1e-14);
                assert!((deg.states[1].dot(&(&h * &deg.states[1])) - d2).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn effective_model_is_pure_phase() {
        let c = cfg(30.0, 1.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let r = effective_two_level_evolve(0, &c, (-0.25, 0.25), (C64::new(h, 0.0), C64::new(0.0, h)), 101).unwrap();
        assert!(r.within_validity);
        let m = EffectiveCrossingModel::new(0).unwrap();
        for (k, tau) in r.taus.iter().enumerate() {
            assert!((r.c1[k].norm() - h).abs() < 1e-9);
            assert!((r.c2[k].norm() - h).abs() < 1e-9);
            let int = quadrature::integrate(|t| m.omega_minus(t, &c), -0.25, *tau, &[], 1e-15, 1e-13).unwrap().value;
            let expect = C64::from_polar(h, 2.0 * c.g_sigma * 4.0 * m.omega1 * int);
            assert!((r.c1[k] - expect).norm() < 1e-8);
        }
        let wide = effective_two_level_evolve(0, &c, (-0.5, 0.5), (C64::new(1.0, 0.0), C64::default()), 3).unwrap();
        assert!(!wide.within_validity);
    }

    #[test]
    fn trajectory_csv_layout() {
        let s = SystemState::basis_state(BareState::new(0, Level::Ground, Level::Excited));
        let opts = EvolveOptions { samples: 5, ..EvolveOptions::default() };
        let r = evolve_through(&s, &cfg(2.0, 1.0), &opts).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &r, &[("eps".into(), vec![0.0; 5])], "g_sigma=2 delta=1").unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "# g_sigma=2 delta=1");
        assert_eq!(lines[1], "tau,re_n0_g1e2,im_n0_g1e2,re_n0_e1g2,im_n0_e1g2,re_n1_g1g2,im_n1_g1g2,norm,eps");
        assert_eq!(lines.len(), 7);
    }
}
