//! Bare basis, Gaussian coupling pulses and the interaction Hamiltonian.
//!
//! Everything here is dimensionless: energies are in units of the peak
//! coupling `g` and time is the scaled time `tau = t / (2 sigma)`, so a pulse
//! pair is fully described by the product `g sigma` and the half-delay
//! `delta`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Extra integration margin past the later pulse centre; the couplings are
/// below 1e-15 of their peak outside `|tau| <= delta + TAU_MARGIN`.
pub const TAU_MARGIN: f64 = 6.0;

const PHYSICAL_REL_TOL: f64 = 1e-12;
const NORM_TOL: f64 = 1e-10;
// States handed between runs carry the integrator's norm drift.
const STATE_NORM_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    Ground,
    Excited,
}

impl Level {
    pub fn is_excited(self) -> bool {
        self == Level::Excited
    }

    fn letter(self) -> char {
        match self {
            Level::Ground => 'g',
            Level::Excited => 'e',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Atom {
    One,
    Two,
}

/// Product state |photons> (x) |atom1> (x) |atom2>.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BareState {
    pub photons: u32,
    pub atom1: Level,
    pub atom2: Level,
}

impl BareState {
    pub const fn new(photons: u32, atom1: Level, atom2: Level) -> Self {
        Self { photons, atom1, atom2 }
    }

    pub fn excitations(&self) -> u32 {
        self.photons + self.atom1.is_excited() as u32 + self.atom2.is_excited() as u32
    }

    pub fn level(&self, atom: Atom) -> Level {
        match atom {
            Atom::One => self.atom1,
            Atom::Two => self.atom2,
        }
    }

    fn with_level(mut self, atom: Atom, level: Level) -> Self {
        match atom {
            Atom::One => self.atom1 = level,
            Atom::Two => self.atom2 = level,
        }
        self
    }

    /// Column-friendly label, e.g. `n1_g1e2`.
    pub fn tag(&self) -> String {
        format!("n{}_{}1{}2", self.photons, self.atom1.letter(), self.atom2.letter())
    }
}

impl fmt::Display for BareState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{},{}1{}2>", self.photons, self.atom1.letter(), self.atom2.letter())
    }
}

impl FromStr for BareState {
    type Err = Error;

    /// Parses the [`BareState::tag`] form, e.g. `n0_e1g2`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("bare state '{s}' is not of the form n<photons>_<g|e>1<g|e>2"));
        let (photons, atoms) = s.strip_prefix('n').and_then(|r| r.split_once('_')).ok_or_else(bad)?;
        let photons: u32 = photons.parse().map_err(|_| bad())?;
        let level = |c: u8| match c {
            b'g' => Ok(Level::Ground),
            b'e' => Ok(Level::Excited),
            _ => Err(bad()),
        };
        match atoms.as_bytes() {
            [a, b'1', b, b'2'] => Ok(BareState::new(photons, level(*a)?, level(*b)?)),
            _ => Err(bad()),
        }
    }
}

/// Laboratory parameters behind a pulse pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalPulse {
    /// Peak coupling, rad/s.
    pub g: f64,
    /// Time width x0 / v, s.
    pub sigma: f64,
    /// Atomic speed, m/s.
    pub v: f64,
    /// Mode waist parameter, m.
    pub x0: f64,
    /// Delay parameter, s.
    pub delta_t: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseConfig {
    pub g_sigma: f64,
    pub delta: f64,
    pub physical: Option<PhysicalPulse>,
}

impl PulseConfig {
    pub fn new(g_sigma: f64, delta: f64) -> Result<Self> {
        if !(g_sigma.is_finite() && g_sigma > 0.0) {
            return Err(Error::InvalidParameter(format!("g_sigma must be > 0, got {g_sigma}")));
        }
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(Error::InvalidParameter(format!("delta must be >= 0, got {delta}")));
        }
        Ok(Self { g_sigma, delta, physical: None })
    }

    /// Builds the dimensionless pulse from lab quantities: `sigma = x0 / v`,
    /// `delta = delta_t / (2 sigma)`.
    pub fn from_physical(g: f64, v: f64, x0: f64, delta_t: f64) -> Result<Self> {
        if !(v > 0.0 && x0 > 0.0 && g > 0.0 && delta_t >= 0.0) {
            return Err(Error::InvalidParameter(
                "physical pulse needs g, v, x0 > 0 and delta_t >= 0".into(),
            ));
        }
        let sigma = x0 / v;
        let physical = PhysicalPulse { g, sigma, v, x0, delta_t };
        let mut cfg = Self::new(g * sigma, delta_t / (2.0 * sigma))?;
        cfg.physical = Some(physical);
        Ok(cfg)
    }

    /// Checks the lab block (if any) against the dimensionless parameters.
    pub fn validate(&self) -> Result<()> {
        Self::new(self.g_sigma, self.delta)?;
        if let Some(p) = &self.physical {
            let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
            if rel(p.sigma, p.x0 / p.v) > PHYSICAL_REL_TOL {
                return Err(Error::InvalidParameter("sigma != x0 / v".into()));
            }
            let delta = p.delta_t / (2.0 * p.sigma);
            if (self.delta - delta).abs() > PHYSICAL_REL_TOL * delta.abs().max(1.0) {
                return Err(Error::InvalidParameter("delta != delta_t / (2 sigma)".into()));
            }
            if rel(self.g_sigma, p.g * p.sigma) > PHYSICAL_REL_TOL {
                return Err(Error::InvalidParameter("g_sigma != g * sigma".into()));
            }
        }
        Ok(())
    }

    /// Half-width of the default integration window.
    pub fn tau_window(&self) -> f64 {
        self.delta + TAU_MARGIN
    }

    /// Same `g`, interaction time scaled by `1 + sigma_rel`, delay scaled by
    /// `1 + delay_rel`.
    pub fn perturbed(&self, sigma_rel: f64, delay_rel: f64) -> Result<Self> {
        let s = 1.0 + sigma_rel;
        let d = 1.0 + delay_rel;
        if s <= 0.0 || d < 0.0 {
            return Err(Error::InvalidParameter("perturbation flips the sign of sigma or delay".into()));
        }
        let mut cfg = Self::new(self.g_sigma * s, self.delta * d / s)?;
        cfg.physical = self.physical.map(|p| PhysicalPulse {
            sigma: p.sigma * s,
            v: p.v / s,
            delta_t: p.delta_t * d,
            ..p
        });
        Ok(cfg)
    }
}

/// Dimensionless coupling `eta_j(tau) / g`.
pub fn coupling_envelope(atom: Atom, tau: f64, cfg: &PulseConfig) -> f64 {
    match atom {
        Atom::One => (-(tau + cfg.delta).powi(2)).exp(),
        Atom::Two => (-(tau - cfg.delta).powi(2)).exp(),
    }
}

/// d/dtau of [`coupling_envelope`].
pub fn coupling_derivative(atom: Atom, tau: f64, cfg: &PulseConfig) -> f64 {
    let shift = match atom {
        Atom::One => tau + cfg.delta,
        Atom::Two => tau - cfg.delta,
    };
    -2.0 * shift * (-shift * shift).exp()
}

/// One nonzero upper-triangle element of the manifold Hamiltonian:
/// `H[row, col] = factor * eta_atom(tau)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coupling {
    pub row: usize,
    pub col: usize,
    pub atom: Atom,
    pub factor: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifoldBasis {
    pub excitations: u32,
    pub states: Vec<BareState>,
}

impl ManifoldBasis {
    pub fn dimension(&self) -> usize {
        self.states.len()
    }

    /// Manifold index `n = N - 2` used by the spectral formulas; `-1` for the
    /// three-state manifold and `-2` for the ground state.
    pub fn n_index(&self) -> i64 {
        self.excitations as i64 - 2
    }

    pub fn index_of(&self, state: &BareState) -> Option<usize> {
        self.states.iter().position(|s| s == state)
    }

    /// Matrix elements of `sum_j eta_j (a^dag sigma_-^j + a sigma_+^j) / g`,
    /// read off from the ladder-operator action on the basis labels. Only
    /// the `a^dag sigma_-` half is enumerated; the other half is its
    /// transpose.
    pub fn couplings(&self) -> Vec<Coupling> {
        let mut out = Vec::new();
        for (ket_idx, ket) in self.states.iter().enumerate() {
            for atom in [Atom::One, Atom::Two] {
                if !ket.level(atom).is_excited() {
                    continue;
                }
                let bra = BareState { photons: ket.photons + 1, ..ket.with_level(atom, Level::Ground) };
                if let Some(bra_idx) = self.index_of(&bra) {
                    out.push(Coupling {
                        row: ket_idx.min(bra_idx),
                        col: ket_idx.max(bra_idx),
                        atom,
                        factor: ((ket.photons + 1) as f64).sqrt(),
                    });
                }
            }
        }
        out.sort_by_key(|c| (c.row, c.col));
        out
    }
}

/// Bare basis of the manifold with `excitations` quanta, in the order
/// |n,e1e2>, |n+1,g1e2>, |n+1,e1g2>, |n+2,g1g2> with `n = N - 2` (rows that
/// would need negative photon numbers are dropped).
pub fn manifold_basis(excitations: u32) -> ManifoldBasis {
    use Level::{Excited as E, Ground as G};
    let n = excitations as i64 - 2;
    let candidates = [(n, E, E), (n + 1, G, E), (n + 1, E, G), (n + 2, G, G)];
    let states = candidates
        .into_iter()
        .filter(|(p, _, _)| *p >= 0)
        .map(|(p, a1, a2)| BareState::new(p as u32, a1, a2))
        .collect();
    ManifoldBasis { excitations, states }
}

fn fill_matrix(basis: &ManifoldBasis, eta: impl Fn(Atom) -> f64) -> DMatrix<f64> {
    let dim = basis.dimension();
    let mut h = DMatrix::zeros(dim, dim);
    for c in basis.couplings() {
        let v = c.factor * eta(c.atom);
        h[(c.row, c.col)] = v;
        h[(c.col, c.row)] = v;
    }
    h
}

/// Hamiltonian of manifold `excitations` at time `tau`, in units of `g`.
pub fn build_hamiltonian(excitations: u32, tau: f64, cfg: &PulseConfig) -> DMatrix<f64> {
    fill_matrix(&manifold_basis(excitations), |a| coupling_envelope(a, tau, cfg))
}

/// `dH'/dtau`, from the analytic Gaussian derivatives.
pub fn hamiltonian_derivative(excitations: u32, tau: f64, cfg: &PulseConfig) -> DMatrix<f64> {
    fill_matrix(&manifold_basis(excitations), |a| coupling_derivative(a, tau, cfg))
}

/// State of one excitation manifold.
#[derive(Clone, Debug, PartialEq)]
pub struct ManifoldBlock {
    pub basis: ManifoldBasis,
    pub amplitudes: DVector<C64>,
}

impl ManifoldBlock {
    pub fn zeros(excitations: u32) -> Self {
        let basis = manifold_basis(excitations);
        let amplitudes = DVector::zeros(basis.dimension());
        Self { basis, amplitudes }
    }

    pub fn excitations(&self) -> u32 {
        self.basis.excitations
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// Atoms (x) cavity state stored manifold by manifold.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SystemState {
    pub blocks: BTreeMap<u32, ManifoldBlock>,
}

impl SystemState {
    /// Collects bare-state amplitudes into manifold blocks; repeated labels
    /// add up.
    pub fn from_amplitudes<I>(amplitudes: I) -> Self
    where
        I: IntoIterator<Item = (BareState, C64)>,
    {
        let mut state = SystemState::default();
        for (label, amp) in amplitudes {
            let n = label.excitations();
            let block = state.blocks.entry(n).or_insert_with(|| ManifoldBlock::zeros(n));
            let idx = block.basis.index_of(&label).expect("label belongs to its own manifold");
            block.amplitudes[idx] += amp;
        }
        state
    }

    pub fn basis_state(label: BareState) -> Self {
        Self::from_amplitudes([(label, C64::new(1.0, 0.0))])
    }

    pub fn iter_amplitudes(&self) -> impl Iterator<Item = (BareState, C64)> + '_ {
        self.blocks
            .values()
            .flat_map(|b| b.basis.states.iter().copied().zip(b.amplitudes.iter().copied()))
    }

    pub fn amplitude(&self, label: &BareState) -> C64 {
        self.blocks
            .get(&label.excitations())
            .and_then(|b| b.basis.index_of(label).map(|i| b.amplitudes[i]))
            .unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.blocks.values().map(ManifoldBlock::norm_sqr).sum()
    }

    pub fn ensure_normalized(&self) -> Result<()> {
        let norm_sqr = self.norm_sqr();
        if (norm_sqr - 1.0).abs() > STATE_NORM_TOL {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(())
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &SystemState) -> C64 {
        self.blocks
            .iter()
            .filter_map(|(n, a)| other.blocks.get(n).map(|b| a.amplitudes.dotc(&b.amplitudes)))
            .sum()
    }

    /// Probability of finding `pred` true.
    pub fn population(&self, pred: impl Fn(&BareState) -> bool) -> f64 {
        self.iter_amplitudes().filter(|(s, _)| pred(s)).map(|(_, a)| a.norm_sqr()).sum()
    }

    /// Applies a single-atom unitary `u` (basis order g, e). Moves amplitude
    /// between manifolds since the excitation number of the atom changes.
    pub fn apply_atom_unitary(&self, atom: Atom, u: &[[C64; 2]; 2]) -> SystemState {
        let idx = |l: Level| l.is_excited() as usize;
        let terms = self.iter_amplitudes().flat_map(|(s, a)| {
            let from = idx(s.level(atom));
            [Level::Ground, Level::Excited]
                .into_iter()
                .map(move |to| (s.with_level(atom, to), u[idx(to)][from] * a))
        });
        let mut out = SystemState::from_amplitudes(terms);
        // drop blocks the rotation emptied
        out.blocks.retain(|_, b| b.norm_sqr() > 0.0);
        out
    }

    /// Multiplies every amplitude by `z`.
    pub fn scaled(mut self, z: C64) -> SystemState {
        for b in self.blocks.values_mut() {
            b.amplitudes *= z;
        }
        self
    }
}

/// Single-atom superposition `alpha |g> + beta e^{i theta} |e>` with real
/// `alpha`, `beta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomQubit {
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
}

impl AtomQubit {
    pub fn new(alpha: f64, beta: f64, theta: f64) -> Result<Self> {
        let q = Self { alpha, beta, theta };
        q.validate()?;
        Ok(q)
    }

    pub fn ground() -> Self {
        Self { alpha: 1.0, beta: 0.0, theta: 0.0 }
    }

    pub fn excited() -> Self {
        Self { alpha: 0.0, beta: 1.0, theta: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let norm_sqr = self.alpha * self.alpha + self.beta * self.beta;
        if !norm_sqr.is_finite() || (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(())
    }

    /// Amplitudes over (g, e).
    pub fn amplitudes(&self) -> [C64; 2] {
        [C64::new(self.alpha, 0.0), C64::from_polar(self.beta, self.theta)]
    }
}

/// Expands atom1 (x) atom2 (x) cavity into manifold blocks. `cavity[k]` is
/// the amplitude of Fock state |k>.
pub fn decompose_product_state(atom1: &AtomQubit, atom2: &AtomQubit, cavity: &[C64]) -> Result<SystemState> {
    atom1.validate()?;
    atom2.validate()?;
    let norm_sqr: f64 = cavity.iter().map(|c| c.norm_sqr()).sum();
    if (norm_sqr - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized { norm_sqr });
    }
    let levels = [Level::Ground, Level::Excited];
    let a1 = atom1.amplitudes();
    let a2 = atom2.amplitudes();
    let mut terms = Vec::with_capacity(4 * cavity.len());
    for (k, c) in cavity.iter().enumerate() {
        for (i, l1) in levels.iter().enumerate() {
            for (j, l2) in levels.iter().enumerate() {
                let amp = *c * a1[i] * a2[j];
                if amp != C64::default() {
                    terms.push((BareState::new(k as u32, *l1, *l2), amp));
                }
            }
        }
    }
    Ok(SystemState::from_amplitudes(terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use Level::{Excited as E, Ground as G};

    fn cfg(delta: f64) -> PulseConfig {
        PulseConfig::new(1.0, delta).unwrap()
    }

    #[test]
    fn tag_round_trip() {
        for b in [BareState::new(0, G, E), BareState::new(12, E, E), BareState::new(3, G, G)] {
            assert_eq!(b.tag().parse::<BareState>().unwrap(), b);
        }
        for bad in ["", "n_g1e2", "n1_g1x2", "n1_g2e1", "1_g1e2", "n1_g1e2x"] {
            assert!(bad.parse::<BareState>().is_err(), "{bad}");
        }
    }

    #[test]
    fn envelope_values() {
        let c = cfg(1.0);
        assert_eq!(coupling_envelope(Atom::One, -1.0, &c), 1.0);
        assert!((coupling_envelope(Atom::Two, -1.0, &c) - (-4.0f64).exp()).abs() < 1e-15);
        assert!((coupling_envelope(Atom::Two, -1.0, &c) - 0.0183156).abs() < 1e-7);
        assert!((coupling_envelope(Atom::One, 0.0, &c) - 0.3678794).abs() < 1e-7);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let c = cfg(0.7);
        for &tau in &[-2.0, -0.3, 0.0, 0.9] {
            for atom in [Atom::One, Atom::Two] {
                let h = 1e-6;
                let fd = (coupling_envelope(atom, tau + h, &c) - coupling_envelope(atom, tau - h, &c)) / (2.0 * h);
                assert!((fd - coupling_derivative(atom, tau, &c)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn basis_orders() {
        let b2 = manifold_basis(2);
        assert_eq!(
            b2.states,
            vec![
                BareState::new(0, E, E),
                BareState::new(1, G, E),
                BareState::new(1, E, G),
                BareState::new(2, G, G)
            ]
        );
        let b1 = manifold_basis(1);
        assert_eq!(b1.states, vec![BareState::new(0, G, E), BareState::new(0, E, G), BareState::new(1, G, G)]);
        let b0 = manifold_basis(0);
        assert_eq!(b0.states, vec![BareState::new(0, G, G)]);
        assert_eq!(manifold_basis(7).dimension(), 4);
        assert_eq!(manifold_basis(7).states[0].photons, 5);
    }

    #[test]
    fn hamiltonian_elements_follow_ladder_algebra() {
        let c = cfg(1.0);
        let tau = 0.3;
        let e1 = coupling_envelope(Atom::One, tau, &c);
        let e2 = coupling_envelope(Atom::Two, tau, &c);
        for n_exc in 2..8u32 {
            let n = (n_exc - 2) as f64;
            let h = build_hamiltonian(n_exc, tau, &c);
            let expect = DMatrix::from_row_slice(
                4,
                4,
                &[
                    0.0,
                    e1 * (n + 1.0).sqrt(),
                    e2 * (n + 1.0).sqrt(),
                    0.0,
                    e1 * (n + 1.0).sqrt(),
                    0.0,
                    0.0,
                    e2 * (n + 2.0).sqrt(),
                    e2 * (n + 1.0).sqrt(),
                    0.0,
                    0.0,
                    e1 * (n + 2.0).sqrt(),
                    0.0,
                    e2 * (n + 2.0).sqrt(),
                    e1 * (n + 2.0).sqrt(),
                    0.0,
                ],
            );
            assert!((h - expect).abs().max() < 1e-15);
        }
        let h2 = build_hamiltonian(2, tau, &c);
        assert!((h2[(1, 0)] - e1).abs() < 1e-15);
        assert!((h2[(3, 2)] - e1 * 2f64.sqrt()).abs() < 1e-15);
        // three-state manifold is the n = -1 matrix with the first row removed
        let h1 = build_hamiltonian(1, tau, &c);
        let expect1 = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, e2, 0.0, 0.0, e1, e2, e1, 0.0]);
        assert!((h1 - expect1).abs().max() < 1e-15);
        assert_eq!(build_hamiltonian(0, tau, &c), DMatrix::zeros(1, 1));
    }

    #[test]
    fn hamiltonian_vanishes_in_tails() {
        let c = cfg(1.3);
        for n_exc in 0..6 {
            for tau in [-(c.delta + 6.0), c.delta + 6.0, 12.0] {
                assert!(build_hamiltonian(n_exc, tau, &c).abs().max() < 1e-12);
            }
        }
    }

    #[test]
    fn atom_swap_symmetry_at_origin() {
        let c = cfg(0.8);
        let h = build_hamiltonian(4, 0.0, &c);
        let mut p = DMatrix::<f64>::identity(4, 4);
        p.swap_rows(1, 2);
        assert!((&p * &h * &p - &h).abs().max() < 1e-15);
    }

    #[test]
    fn physical_block_round_trip() {
        let c = PulseConfig::from_physical(2.0e5, 100.0, 1.0e-2, 3.0e-4).unwrap();
        c.validate().unwrap();
        let p = c.physical.unwrap();
        assert!((p.sigma - 1e-4).abs() < 1e-18);
        assert!((c.delta - 1.5).abs() < 1e-12);
        assert!((c.g_sigma - 20.0).abs() < 1e-12);
        let q = c.perturbed(0.05, 0.1).unwrap();
        q.validate().unwrap();
        assert!((q.g_sigma - 21.0).abs() < 1e-12);
        assert!((q.delta - 1.5 * 1.1 / 1.05).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_pulses() {
        assert!(PulseConfig::new(0.0, 1.0).is_err());
        assert!(PulseConfig::new(1.0, -0.1).is_err());
        assert!(PulseConfig::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn decompose_product_examples() {
        let vac = [C64::new(1.0, 0.0)];
        let s = decompose_product_state(&AtomQubit::ground(), &AtomQubit::ground(), &vac).unwrap();
        assert_eq!(s.blocks.len(), 1);
        assert_eq!(s.blocks[&0].amplitudes[0], C64::new(1.0, 0.0));

        let (a1, a2) = (0.6f64, 0.28f64);
        let (b1, b2) = ((1.0 - a1 * a1).sqrt(), (1.0 - a2 * a2).sqrt());
        let q1 = AtomQubit::new(a1, b1, 0.4).unwrap();
        let q2 = AtomQubit::new(a2, b2, -1.1).unwrap();
        let s = decompose_product_state(&q1, &q2, &vac).unwrap();
        let w: Vec<f64> = (0..3).map(|n| s.blocks[&n].norm_sqr()).collect();
        assert!((w[0] - (a1 * a2).powi(2)).abs() < 1e-12);
        assert!((w[1] - ((a1 * b2).powi(2) + (b1 * a2).powi(2))).abs() < 1e-12);
        assert!((w[2] - (b1 * b2).powi(2)).abs() < 1e-12);
        let ee = s.amplitude(&BareState::new(0, E, E));
        assert!((ee - C64::from_polar(b1 * b2, 0.4 - 1.1)).norm() < 1e-12);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let cav = [C64::new(h, 0.0), C64::new(h, 0.0)];
        let s = decompose_product_state(&AtomQubit::ground(), &AtomQubit::ground(), &cav).unwrap();
        assert!((s.blocks[&0].norm_sqr() - 0.5).abs() < 1e-12);
        assert!((s.blocks[&1].norm_sqr() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn decompose_rejects_unnormalized() {
        let vac = [C64::new(1.0, 0.0)];
        assert!(decompose_product_state(&AtomQubit { alpha: 1.0, beta: 0.1, theta: 0.0 }, &AtomQubit::ground(), &vac).is_err());
        assert!(decompose_product_state(&AtomQubit::ground(), &AtomQubit::ground(), &[C64::new(0.5, 0.0)]).is_err());
    }

    #[test]
    fn atom_unitary_moves_between_manifolds() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let had = [[C64::new(h, 0.0), C64::new(h, 0.0)], [C64::new(h, 0.0), C64::new(-h, 0.0)]];
        let s = SystemState::basis_state(BareState::new(0, G, G)).apply_atom_unitary(Atom::One, &had);
        assert!((s.amplitude(&BareState::new(0, G, G)).re - h).abs() < 1e-15);
        assert!((s.amplitude(&BareState::new(0, E, G)).re - h).abs() < 1e-15);
        assert_eq!(s.blocks.len(), 2);
        let back = s.apply_atom_unitary(Atom::One, &had);
        assert!((back.amplitude(&BareState::new(0, G, G)).re - 1.0).abs() < 1e-15);
        assert_eq!(back.blocks.len(), 1);
    }
}
