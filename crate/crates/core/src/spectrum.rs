//! Closed-form adiabatic energies and eigenstates of the two-atom manifolds.
//!
//! In the manifold with index `n` (basis |n,e1e2>, |n+1,g1e2>, |n+1,e1g2>,
//! |n+2,g1g2>) the energies are `E_{1,2} = -/+ E_-` and `E_{3,4} = -/+ E_+`
//! with
//!
//! ```text
//! E_+-^2 = ((3 + 2n) S +- F) / 2,  S = eta1^2 + eta2^2,
//! F^2    = S^2 + 16 (n+1)(n+2) eta1^2 eta2^2
//! ```
//!
//! and the states are
//! `Psi_{1,2} = A_- |ee> + D_- |gg> +- (B_- |ge> - C_- |eg>)`,
//! `Psi_{3,4} = A_+ |ee> + D_+ |gg> +- (B_+ |ge> - C_+ |eg>)`.
//!
//! The textbook forms of `A..D` lose all precision in the pulse tails and
//! have a removable 0/0 at `tau = 0`. Everything below is evaluated from the
//! equivalent expressions
//!
//! ```text
//! A_+ = D_- = sqrt((F - S) / 4F),   D_+ = -A_- = sqrt((F + S) / 4F)
//! B_+ = -sqrt((F - Delta) / 4F),    C_+ = sqrt((F + Delta) / 4F)
//! B_- = s sqrt((F + Delta) / 4F),   C_- = s sqrt((F - Delta) / 4F)
//! E_- = sqrt((n+1)(n+2)) |Delta| / E_+
//! ```
//!
//! with `Delta = eta1^2 - eta2^2`, `s = sign(Delta) = -sign(tau)`, and the
//! small differences taken from `F^2 - S^2 = 16 (n+1)(n+2) eta1^2 eta2^2`,
//! `F^2 - Delta^2 = 4 (2n+3)^2 eta1^2 eta2^2`. The couplings are rescaled by
//! the larger of the two before anything is squared, so nothing underflows.
//! [`closed_form_coefficients`] keeps the textbook forms as a second route.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{coupling_envelope, Atom, PulseConfig};

/// Below this `|tau|` the inner branch labels come from the sign of `tau`
/// rather than from the (vanishing) splitting.
pub const NEAR_DEGENERACY: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Branch {
    One,
    Two,
    Three,
    Four,
}

impl Branch {
    pub const ALL: [Branch; 4] = [Branch::One, Branch::Two, Branch::Three, Branch::Four];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn number(self) -> usize {
        self.index() + 1
    }

    pub fn from_number(k: usize) -> Option<Branch> {
        Branch::ALL.get(k.checked_sub(1)?).copied()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Ordering {
    Raw,
    CrossingAware,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// `tau -> 0-` (or `tau -> -infinity` for asymptotic states)
    Before,
    /// `tau -> 0+` (or `tau -> +infinity`)
    After,
}

impl Side {
    fn sign(self) -> f64 {
        match self {
            Side::Before => -1.0,
            Side::After => 1.0,
        }
    }
}

/// Energies and real orthonormal eigenvectors at one time. For `n >= 0` the
/// branches are 1..4; the three-state manifold (`n = -1`) has the dark state
/// in slot 1 and no branch 2.
#[derive(Clone, Debug, PartialEq)]
pub struct AdiabaticFrame {
    pub n: i64,
    pub tau: f64,
    pub branches: Vec<Branch>,
    pub energies: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub ordering: Ordering,
}

impl AdiabaticFrame {
    fn slot(&self, branch: Branch) -> Option<usize> {
        self.branches.iter().position(|b| *b == branch)
    }

    pub fn energy(&self, branch: Branch) -> Option<f64> {
        self.slot(branch).map(|i| self.energies[i])
    }

    pub fn state(&self, branch: Branch) -> Option<&DVector<f64>> {
        self.slot(branch).map(|i| &self.states[i])
    }
}

/// Couplings divided by the larger one, plus that scale; `delta_sq` is
/// `eta1^2 - eta2^2` in the same units.
#[derive(Clone, Copy, Debug)]
struct Scaled {
    e1: f64,
    e2: f64,
    scale: f64,
    delta_sq: f64,
}

fn scaled_couplings(tau: f64, cfg: &PulseConfig) -> Scaled {
    let x = 4.0 * tau * cfg.delta;
    if tau < 0.0 {
        Scaled { e1: 1.0, e2: x.exp(), scale: coupling_envelope(Atom::One, tau, cfg), delta_sq: -(2.0 * x).exp_m1() }
    } else {
        Scaled { e1: (-x).exp(), e2: 1.0, scale: coupling_envelope(Atom::Two, tau, cfg), delta_sq: (-2.0 * x).exp_m1() }
    }
}

/// Spectral building blocks in scaled units.
#[derive(Clone, Copy, Debug)]
struct Parts {
    f: f64,
    f_plus_s: f64,
    f_minus_s: f64,
    f_plus_d: f64,
    f_minus_d: f64,
    e_plus: f64,
    e_minus: f64,
}

fn parts(n: i64, c: &Scaled) -> Parts {
    let nf = n as f64;
    let (e1s, e2s) = (c.e1 * c.e1, c.e2 * c.e2);
    let s = e1s + e2s;
    let k = (nf + 1.0) * (nf + 2.0) * e1s * e2s;
    let f = (s * s + 16.0 * k).sqrt();
    let f_plus_s = f + s;
    let f_minus_s = 16.0 * k / f_plus_s;
    let d = c.delta_sq;
    let cross = 4.0 * (2.0 * nf + 3.0).powi(2) * e1s * e2s;
    let (f_plus_d, f_minus_d) = if d >= 0.0 {
        let big = f + d;
        (big, cross / big)
    } else {
        let big = f - d;
        (cross / big, big)
    };
    let e_plus = (((3.0 + 2.0 * nf) * s + f) / 2.0).sqrt();
    let e_minus = if e_plus > 0.0 { ((nf + 1.0) * (nf + 2.0)).sqrt() * d.abs() / e_plus } else { 0.0 };
    Parts { f, f_plus_s, f_minus_s, f_plus_d, f_minus_d, e_plus, e_minus }
}

fn check_n(n: i64) -> Result<()> {
    if n < -1 {
        return Err(Error::InvalidParameter(format!("manifold index n must be >= -1, got {n}")));
    }
    Ok(())
}

/// `P(E) = E^4 - E^2 (3+2n)(eta1^2+eta2^2) + (1+n)(2+n)(eta1^2-eta2^2)^2`,
/// evaluated directly from the couplings.
pub fn characteristic_poly(energy: f64, n: i64, tau: f64, cfg: &PulseConfig) -> f64 {
    let nf = n as f64;
    let e1 = coupling_envelope(Atom::One, tau, cfg);
    let e2 = coupling_envelope(Atom::Two, tau, cfg);
    let (e1s, e2s) = (e1 * e1, e2 * e2);
    let e_sq = energy * energy;
    e_sq * e_sq - e_sq * (3.0 + 2.0 * nf) * (e1s + e2s) + (1.0 + nf) * (2.0 + nf) * (e1s - e2s).powi(2)
}

/// `(E1, E2, E3, E4) = (-E_-, E_-, -E_+, E_+)` in units of `g`. For `n = -1`
/// this is `(0, 0, -sqrt(eta1^2+eta2^2), +sqrt(eta1^2+eta2^2))`.
pub fn adiabatic_energies(n: i64, tau: f64, cfg: &PulseConfig) -> Result<[f64; 4]> {
    check_n(n)?;
    let c = scaled_couplings(tau, cfg);
    let p = parts(n, &c);
    let (em, ep) = (c.scale * p.e_minus, c.scale * p.e_plus);
    Ok([-em, em, -ep, ep])
}

/// `E_+(tau)`, the outermost energy.
pub fn outer_energy(n: i64, tau: f64, cfg: &PulseConfig) -> f64 {
    let c = scaled_couplings(tau, cfg);
    c.scale * parts(n, &c).e_plus
}

/// `E_-(tau)`, the inner energy magnitude.
pub fn inner_energy(n: i64, tau: f64, cfg: &PulseConfig) -> f64 {
    let c = scaled_couplings(tau, cfg);
    c.scale * parts(n, &c).e_minus
}

/// `A, B, C, D` for one sign.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StateCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl StateCoefficients {
    /// `A|ee> + D|gg> + sign (B|ge> - C|eg>)` over the manifold basis.
    fn vector(&self, sign: f64) -> DVector<f64> {
        DVector::from_vec(vec![self.a, sign * self.b, -sign * self.c, self.d])
    }
}

/// Stable `(minus, plus)` coefficients; `s` is the sign of `eta1^2 - eta2^2`.
fn coefficients(p: &Parts, s: f64) -> (StateCoefficients, StateCoefficients) {
    let q = |x: f64| (x / (4.0 * p.f)).sqrt();
    let plus = StateCoefficients { a: q(p.f_minus_s), b: -q(p.f_minus_d), c: q(p.f_plus_d), d: q(p.f_plus_s) };
    let minus = StateCoefficients { a: -q(p.f_plus_s), b: s * q(p.f_plus_d), c: s * q(p.f_minus_d), d: q(p.f_minus_s) };
    (minus, plus)
}

/// The textbook coefficient formulas, evaluated literally (unscaled
/// couplings, no cancellation control). Returns `(minus, plus)`. Only
/// trustworthy where both couplings are appreciable and `tau != 0`.
pub fn closed_form_coefficients(n: i64, tau: f64, cfg: &PulseConfig) -> Result<(StateCoefficients, StateCoefficients)> {
    check_n(n)?;
    if n < 0 {
        return Err(Error::InvalidParameter("closed-form coefficients need n >= 0".into()));
    }
    let nf = n as f64;
    let e1 = coupling_envelope(Atom::One, tau, cfg);
    let e2 = coupling_envelope(Atom::Two, tau, cfg);
    let (e1s, e2s) = (e1 * e1, e2 * e2);
    let s = e1s + e2s;
    let f = (s * s + 16.0 * (nf + 1.0) * (nf + 2.0) * e1s * e2s).sqrt();
    let one = |pm: f64| {
        let energy = (((3.0 + 2.0 * nf) * s + pm * f) / 2.0).sqrt();
        let a = pm * (4.0 * (nf + 1.0) * (nf + 2.0) * e1s * e2s / (f * f + pm * s * f)).sqrt();
        let d = 0.5 * (1.0 + pm * s / f).sqrt();
        let denom = energy * energy + (nf + 1.0) * (e1s - e2s);
        let b = d * energy * (e1s - e2s - pm * f) / (2.0 * e2 * (nf + 2.0).sqrt() * denom);
        let c = d * energy * e1 * (3.0 + 2.0 * nf) / ((nf + 2.0).sqrt() * denom);
        StateCoefficients { a, b, c, d }
    };
    let (minus, plus) = (one(-1.0), one(1.0));
    if [minus.a, minus.b, minus.c, minus.d, plus.a, plus.b, plus.c, plus.d].iter().any(|x| !x.is_finite()) {
        return Err(Error::Undefined { tau, reason: "textbook coefficients hit 0/0".into() });
    }
    Ok((minus, plus))
}

/// Dark state and the two bright states of the three-state manifold, basis
/// |0,g1e2>, |0,e1g2>, |1,g1g2>.
fn three_level_frame(tau: f64, cfg: &PulseConfig, ordering: Ordering) -> AdiabaticFrame {
    let c = scaled_couplings(tau, cfg);
    let root = (c.e1 * c.e1 + c.e2 * c.e2).sqrt();
    let (u1, u2) = (c.e1 / root, c.e2 / root);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let dark = DVector::from_vec(vec![u1, -u2, 0.0]);
    let psi3 = DVector::from_vec(vec![-h * u2, -h * u1, h]);
    let psi4 = DVector::from_vec(vec![h * u2, h * u1, h]);
    let e = c.scale * root;
    AdiabaticFrame {
        n: -1,
        tau,
        branches: vec![Branch::One, Branch::Three, Branch::Four],
        energies: vec![0.0, -e, e],
        states: vec![dark, psi3, psi4],
        ordering,
    }
}

/// Raw-ordered adiabatic frame. Fails with [`Error::Degenerate`] where
/// `E_1 = E_2` (at `tau = 0`, or everywhere when `delta = 0`).
pub fn adiabatic_states(n: i64, tau: f64, cfg: &PulseConfig) -> Result<AdiabaticFrame> {
    check_n(n)?;
    if n == -1 {
        return Ok(three_level_frame(tau, cfg, Ordering::Raw));
    }
    if tau == 0.0 || cfg.delta == 0.0 {
        return Err(Error::Degenerate { tau });
    }
    let c = scaled_couplings(tau, cfg);
    let p = parts(n, &c);
    // the sign of eta1^2 - eta2^2 is exactly -sign(tau); near tau = 0 this
    // keeps the labels continuous where the splitting itself is noise
    let s = if tau < 0.0 { 1.0 } else { -1.0 };
    debug_assert!(tau.abs() < NEAR_DEGENERACY || c.delta_sq == 0.0 || c.delta_sq.signum() == s);
    let (minus, plus) = coefficients(&p, s);
    let (em, ep) = (c.scale * p.e_minus, c.scale * p.e_plus);
    Ok(AdiabaticFrame {
        n,
        tau,
        branches: Branch::ALL.to_vec(),
        energies: vec![-em, em, -ep, ep],
        states: vec![minus.vector(1.0), minus.vector(-1.0), plus.vector(1.0), plus.vector(-1.0)],
        ordering: Ordering::Raw,
    })
}

/// Values at the temporal degeneracy.
#[derive(Clone, Debug, PartialEq)]
pub struct DegeneracyData {
    pub alpha: f64,
    pub beta: f64,
    /// `(|n+1,g1e2> + |n+1,e1g2>) / sqrt 2`
    pub sym_state: DVector<f64>,
    /// `(|n+1,g1e2> - |n+1,e1g2>) / sqrt 2`
    pub antisym_state: DVector<f64>,
    /// `Psi_1 .. Psi_4` on the requested side of `tau = 0`.
    pub states: [DVector<f64>; 4],
}

/// `alpha_n = sqrt((1+n)/(6+4n))`, `beta_n = sqrt((n+2)/(6+4n))`.
pub fn degeneracy_coefficients(n: i64) -> (f64, f64) {
    let nf = n as f64;
    (((1.0 + nf) / (6.0 + 4.0 * nf)).sqrt(), ((nf + 2.0) / (6.0 + 4.0 * nf)).sqrt())
}

/// One-sided limits of the adiabatic states at `tau = 0`:
/// `Psi_{1,2}(0-+) = -beta |ee> + alpha |gg> -+ sign(tau) |-> / sqrt 2` in
/// the labelling where `E_1 = -E_-`, and the continuous
/// `Psi_{3,4}(0) = alpha |ee> + beta |gg> -+ |+> / sqrt 2`.
pub fn degeneracy_states(n: i64, side: Side) -> Result<DegeneracyData> {
    if n < 0 {
        return Err(Error::InvalidParameter("degeneracy states need n >= 0".into()));
    }
    let (alpha, beta) = degeneracy_coefficients(n);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let sym = DVector::from_vec(vec![0.0, h, h, 0.0]);
    let anti = DVector::from_vec(vec![0.0, h, -h, 0.0]);
    let even_inner = DVector::from_vec(vec![-beta, 0.0, 0.0, alpha]);
    let even_outer = DVector::from_vec(vec![alpha, 0.0, 0.0, beta]);
    let t = side.sign();
    let states = [
        &even_inner - &anti * (t * h),
        &even_inner + &anti * (t * h),
        &even_outer - &sym * h,
        &even_outer + &sym * h,
    ];
    Ok(DegeneracyData { alpha, beta, sym_state: sym, antisym_state: anti, states })
}

/// `tau -> -+infinity` limits of the raw states (the first coupling
/// dominates before, the second after), in the same sign convention as
/// [`adiabatic_states`].
pub fn asymptotic_states(n: i64, side: Side) -> Result<[DVector<f64>; 4]> {
    if n < 0 {
        return Err(Error::InvalidParameter("asymptotic states need n >= 0".into()));
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let v = |x: [f64; 4]| DVector::from_vec(x.to_vec());
    Ok(match side {
        Side::Before => [
            v([-h, h, 0.0, 0.0]),
            v([-h, -h, 0.0, 0.0]),
            v([0.0, 0.0, -h, h]),
            v([0.0, 0.0, h, h]),
        ],
        Side::After => [
            v([-h, 0.0, h, 0.0]),
            v([-h, 0.0, -h, 0.0]),
            v([0.0, -h, 0.0, h]),
            v([0.0, h, 0.0, h]),
        ],
    })
}

/// Frame with the inner pair relabelled through the crossing:
/// `Psi'_1 = theta(-tau) Psi_1 + theta(tau) Psi_2` and vice versa, so that
/// `Psi'_1, Psi'_2` are continuous through `tau = 0`. Energies follow the
/// states: `E'_1 = sign(tau) E_-`, `E'_2 = -sign(tau) E_-`. At `tau = 0`
/// exactly the common one-sided limit is returned.
pub fn crossing_frame(n: i64, tau: f64, cfg: &PulseConfig) -> Result<AdiabaticFrame> {
    check_n(n)?;
    if n == -1 {
        return Ok(three_level_frame(tau, cfg, Ordering::CrossingAware));
    }
    if cfg.delta == 0.0 {
        return Err(Error::Degenerate { tau });
    }
    let mut frame = if tau == 0.0 {
        let deg = degeneracy_states(n, Side::Before)?;
        let ep = outer_energy(n, 0.0, cfg);
        let [p1, p2, p3, p4] = deg.states;
        AdiabaticFrame {
            n,
            tau,
            branches: Branch::ALL.to_vec(),
            energies: vec![0.0, 0.0, -ep, ep],
            states: vec![p1, p2, p3, p4],
            ordering: Ordering::Raw,
        }
    } else {
        adiabatic_states(n, tau, cfg)?
    };
    if tau > 0.0 {
        frame.states.swap(0, 1);
        frame.energies.swap(0, 1);
    }
    frame.ordering = Ordering::CrossingAware;
    Ok(frame)
}

/// Raw or crossing-aware frame.
pub fn frame(n: i64, tau: f64, cfg: &PulseConfig, ordering: Ordering) -> Result<AdiabaticFrame> {
    match ordering {
        Ordering::Raw => adiabatic_states(n, tau, cfg),
        Ordering::CrossingAware => crossing_frame(n, tau, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_hamiltonian;

    fn cfg(delta: f64) -> PulseConfig {
        PulseConfig::new(1.0, delta).unwrap()
    }

    fn residual(n: i64, tau: f64, c: &PulseConfig, e: f64, v: &DVector<f64>) -> f64 {
        let h = build_hamiltonian((n + 2) as u32, tau, c);
        (h * v - v * e).norm()
    }

    #[test]
    fn energies_at_origin() {
        let c = cfg(1.0);
        let e = adiabatic_energies(0, 0.0, &c).unwrap();
        assert_eq!(e[0], 0.0);
        assert_eq!(e[1], 0.0);
        // eta = e^-1 on both atoms: E_+^2 = (3 * 2 eta^2 + 6 eta^2) / 2 = 6 eta^2
        let expect = 6f64.sqrt() * (-1f64).exp();
        assert!((e[3] - expect).abs() < 1e-14);
        assert!((e[3] - 0.9011).abs() < 1e-4);
        assert_eq!(e[2], -e[3]);
    }

    #[test]
    fn three_level_energies() {
        let c = cfg(0.6);
        for &tau in &[-1.0, 0.0, 0.4] {
            let e = adiabatic_energies(-1, tau, &c).unwrap();
            let e1 = coupling_envelope(Atom::One, tau, &c);
            let e2 = coupling_envelope(Atom::Two, tau, &c);
            assert_eq!(e[0], 0.0);
            assert!((e[3] - (e1 * e1 + e2 * e2).sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn single_atom_root() {
        // with eta2 -> 0 the n = 0 polynomial has the Jaynes-Cummings root eta1
        let c = cfg(4.0);
        let tau = -4.0;
        let eta1 = coupling_envelope(Atom::One, tau, &c);
        assert!(characteristic_poly(eta1, 0, tau, &c).abs() < 1e-12);
        assert_eq!(characteristic_poly(0.0, 3, 0.0, &cfg(1.0)), 0.0);
    }

    #[test]
    fn energies_are_roots() {
        let c = cfg(1.1);
        for n in -1..6 {
            for &tau in &[-3.0, -0.7, -1e-9, 0.0, 0.2, 1.5] {
                for e in adiabatic_energies(n, tau, &c).unwrap() {
                    let p = characteristic_poly(e, n, tau, &c);
                    assert!(p.abs() <= 1e-10 * e.powi(4).max(1.0), "n={n} tau={tau} P={p}");
                }
            }
        }
    }

    #[test]
    fn stable_forms_match_textbook_forms() {
        for &delta in &[0.5, 1.0, 1.7] {
            let c = cfg(delta);
            for n in 0..5 {
                for &tau in &[-1.2, -0.6, -0.1, 0.05, 0.3, 0.9] {
                    let (m, p) = closed_form_coefficients(n, tau, &c).unwrap();
                    let s = if tau < 0.0 { 1.0 } else { -1.0 };
                    let (ms, ps) = coefficients(&parts(n, &scaled_couplings(tau, &c)), s);
                    for (x, y) in [(m, ms), (p, ps)] {
                        assert!((x.a - y.a).abs() < 1e-9, "{x:?} {y:?}");
                        assert!((x.b - y.b).abs() < 1e-9, "{x:?} {y:?}");
                        assert!((x.c - y.c).abs() < 1e-9, "{x:?} {y:?}");
                        assert!((x.d - y.d).abs() < 1e-9, "{x:?} {y:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn raw_states_are_eigenvectors() {
        for &delta in &[0.3, 1.0, 2.0] {
            let c = cfg(delta);
            for n in -1..8 {
                for &tau in &[-8.0, -2.5, -0.4, -1e-10, 1e-10, 0.01, 1.3, 7.9] {
                    let f = adiabatic_states(n, tau, &c).unwrap();
                    for (e, v) in f.energies.iter().zip(&f.states) {
                        assert!(residual(n, tau, &c, *e, v) < 1e-12);
                    }
                    for i in 0..f.states.len() {
                        for j in 0..f.states.len() {
                            let d = f.states[i].dot(&f.states[j]) - if i == j { 1.0 } else { 0.0 };
                            assert!(d.abs() < 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn degenerate_point_is_rejected() {
        assert!(matches!(adiabatic_states(0, 0.0, &cfg(1.0)), Err(Error::Degenerate { .. })));
        assert!(matches!(adiabatic_states(2, 0.5, &cfg(0.0)), Err(Error::Degenerate { .. })));
        assert!(adiabatic_states(-1, 0.0, &cfg(1.0)).is_ok());
    }

    #[test]
    fn tail_limits() {
        let c = cfg(1.0);
        let t0 = c.tau_window();
        for n in 0..4 {
            for (side, tau) in [(Side::Before, -t0), (Side::After, t0)] {
                let f = adiabatic_states(n, tau, &c).unwrap();
                let lim = asymptotic_states(n, side).unwrap();
                for (v, l) in f.states.iter().zip(&lim) {
                    assert!((v - l).norm() < 1e-8);
                }
            }
        }
        // Psi_1 -> -(|ee> - |ge>)/sqrt 2 before the pulses
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let lim = asymptotic_states(0, Side::Before).unwrap();
        assert_eq!(lim[0], DVector::from_vec(vec![-h, h, 0.0, 0.0]));
    }

    #[test]
    fn degeneracy_limits() {
        let c = cfg(1.0);
        for n in 0..5 {
            let (a, b) = degeneracy_coefficients(n);
            assert!((a * a + b * b - 0.5).abs() < 1e-15);
            let before = degeneracy_states(n, Side::Before).unwrap();
            let after = degeneracy_states(n, Side::After).unwrap();
            assert_eq!(before.states[0], after.states[1]);
            assert_eq!(before.states[1], after.states[0]);
            assert!(before.states[2].dot(&before.states[3]).abs() < 1e-15);
            for eps in [1e-5, 1e-7] {
                let lo = adiabatic_states(n, -eps, &c).unwrap();
                let hi = adiabatic_states(n, eps, &c).unwrap();
                for k in 0..4 {
                    assert!((&lo.states[k] - &before.states[k]).norm() < 50.0 * eps);
                    assert!((&hi.states[k] - &after.states[k]).norm() < 50.0 * eps);
                }
            }
        }
        let (a0, b0) = degeneracy_coefficients(0);
        assert!((a0 - (1.0f64 / 6.0).sqrt()).abs() < 1e-15);
        assert!((b0 - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn crossing_frame_branches() {
        let c = cfg(1.0);
        let raw = adiabatic_states(0, -0.3, &c).unwrap();
        let cr = crossing_frame(0, -0.3, &c).unwrap();
        assert_eq!(cr.state(Branch::One), raw.state(Branch::One));
        let raw = adiabatic_states(0, 0.3, &c).unwrap();
        let cr = crossing_frame(0, 0.3, &c).unwrap();
        assert_eq!(cr.state(Branch::One), raw.state(Branch::Two));
        assert_eq!(cr.energy(Branch::One), raw.energy(Branch::Two));
        for eps in [1e-2, 1e-4, 1e-6] {
            let lo = crossing_frame(2, -eps, &c).unwrap();
            let hi = crossing_frame(2, eps, &c).unwrap();
            for k in 0..4 {
                assert!((&lo.states[k] - &hi.states[k]).norm() < 10.0 * eps);
            }
        }
        let zero = crossing_frame(1, 0.0, &c).unwrap();
        let near = crossing_frame(1, 1e-9, &c).unwrap();
        for k in 0..4 {
            assert!((&zero.states[k] - &near.states[k]).norm() < 1e-7);
        }
    }

    #[test]
    fn mirror_symmetry_of_energies() {
        let c = cfg(0.9);
        for n in 0..4 {
            for &tau in &[0.1, 0.8, 2.0] {
                let a = adiabatic_energies(n, tau, &c).unwrap();
                let b = adiabatic_energies(n, -tau, &c).unwrap();
                assert!((a[0] + b[1]).abs() < 1e-14);
                assert!((a[2] + b[3]).abs() < 1e-14);
            }
        }
    }
}
