//! Mixing angle `phi_n = 2 g sigma * integral of E_4(tau)` and its limits.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::Write;
use std::sync::{OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PulseConfig;
use crate::quadrature;
use crate::spectrum;

/// The outer energy is below 1e-20 of its peak past `|tau| = delta + 7`.
pub const ANGLE_TAU_MARGIN: f64 = 7.0;
const UNIT_REL_TOL: f64 = 1e-12;

/// Asymptotic formulas are refused outside these windows.
pub const LARGE_DELTA_MIN: f64 = 2.0;
pub const SMALL_DELTA_MAX: f64 = 0.5;
pub const LARGE_N_MIN: i64 = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleMethod {
    Quadrature,
    LargeDelta,
    SmallDelta,
    LargeN,
}

impl AngleMethod {
    pub const ASYMPTOTIC: [AngleMethod; 3] = [AngleMethod::LargeDelta, AngleMethod::SmallDelta, AngleMethod::LargeN];

    pub fn name(self) -> &'static str {
        match self {
            AngleMethod::Quadrature => "quadrature",
            AngleMethod::LargeDelta => "large_delta",
            AngleMethod::SmallDelta => "small_delta",
            AngleMethod::LargeN => "large_n",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [AngleMethod::Quadrature, AngleMethod::LargeDelta, AngleMethod::SmallDelta, AngleMethod::LargeN]
            .into_iter()
            .find(|m| m.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingAngleQuery {
    pub n: i64,
    pub g_sigma: f64,
    pub delta: f64,
    pub method: AngleMethod,
}

fn cache() -> &'static RwLock<HashMap<(i64, u64), f64>> {
    static CACHE: OnceLock<RwLock<HashMap<(i64, u64), f64>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

fn check(n: i64, delta: f64) -> Result<()> {
    if n < -1 {
        return Err(Error::InvalidParameter(format!("manifold index n must be >= -1, got {n}")));
    }
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Error::InvalidParameter(format!("delta must be >= 0, got {delta}")));
    }
    Ok(())
}

/// `integral of E_4(tau) dtau` over the real line, so that
/// `phi_n = 2 g sigma * unit_integral(n, delta)`. Cached per `(n, delta)`.
pub fn unit_integral(n: i64, delta: f64) -> Result<f64> {
    check(n, delta)?;
    let key = (n, delta.to_bits());
    if let Some(v) = cache().read().expect("angle cache poisoned").get(&key) {
        return Ok(*v);
    }
    let cfg = PulseConfig::new(1.0, delta)?;
    let w = delta + ANGLE_TAU_MARGIN;
    let q = quadrature::integrate(|t| spectrum::outer_energy(n, t, &cfg), -w, w, &[-delta, 0.0, delta], 0.0, UNIT_REL_TOL)?;
    // a concurrent fill computes the same value, so either write wins
    cache().write().expect("angle cache poisoned").insert(key, q.value);
    Ok(q.value)
}

/// `phi_n` by quadrature.
pub fn mixing_angle(n: i64, g_sigma: f64, delta: f64) -> Result<f64> {
    if !(g_sigma.is_finite() && g_sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("g_sigma must be > 0, got {g_sigma}")));
    }
    Ok(2.0 * g_sigma * unit_integral(n, delta)?)
}

/// `gamma_n = 2((3+2n)^2 + 1) / (3+2n)^2`.
pub fn gamma(n: i64) -> f64 {
    let m = (3 + 2 * n) as f64;
    2.0 * (m * m + 1.0) / (m * m)
}

/// Closed-form limits:
/// large delay `4 g sigma sqrt((n+2) pi)`,
/// small delay `2 g sigma e^{-delta^2} sqrt((6+4n) pi / (1 - gamma_n delta^2))`,
/// many photons `4 g sigma sqrt(n pi)`.
pub fn angle_asymptotic(q: &MixingAngleQuery) -> Result<f64> {
    check(q.n, q.delta)?;
    let n = q.n as f64;
    let gs = q.g_sigma;
    match q.method {
        AngleMethod::Quadrature => Err(Error::InvalidParameter("quadrature is not an asymptotic method".into())),
        AngleMethod::LargeDelta => {
            if q.delta < LARGE_DELTA_MIN {
                return Err(Error::OutOfDomain(format!("large_delta needs delta >= {LARGE_DELTA_MIN}, got {}", q.delta)));
            }
            Ok(4.0 * gs * ((n + 2.0) * PI).sqrt())
        }
        AngleMethod::SmallDelta => {
            let gd = gamma(q.n) * q.delta * q.delta;
            if gd >= 1.0 || q.delta > SMALL_DELTA_MAX {
                return Err(Error::OutOfDomain(format!(
                    "small_delta needs delta <= {SMALL_DELTA_MAX} and gamma delta^2 < 1, got delta = {}, gamma delta^2 = {gd:.4}",
                    q.delta
                )));
            }
            Ok(2.0 * gs * (-q.delta * q.delta).exp() * ((6.0 + 4.0 * n) * PI / (1.0 - gd)).sqrt())
        }
        AngleMethod::LargeN => {
            if q.n < LARGE_N_MIN {
                return Err(Error::OutOfDomain(format!("large_n needs n >= {LARGE_N_MIN}, got {}", q.n)));
            }
            Ok(4.0 * gs * (n * PI).sqrt())
        }
    }
}

/// Dispatches to [`mixing_angle`] or [`angle_asymptotic`].
pub fn evaluate(q: &MixingAngleQuery) -> Result<f64> {
    match q.method {
        AngleMethod::Quadrature => mixing_angle(q.n, q.g_sigma, q.delta),
        _ => angle_asymptotic(q),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleSolution {
    pub g_sigma: f64,
    /// Number of extra full turns added to the requested angle.
    pub k: u32,
    /// Angle actually produced, `target + 2 pi k`.
    pub angle: f64,
}

/// Smallest `g sigma >= min_gsigma` giving `phi_n = target + 2 pi k`.
pub fn solve_gsigma_for_angle(target: f64, n: i64, delta: f64, min_gsigma: f64) -> Result<AngleSolution> {
    if !(target.is_finite() && target > 0.0) {
        return Err(Error::InvalidParameter(format!("target angle must be > 0, got {target}")));
    }
    if !(min_gsigma.is_finite() && min_gsigma >= 0.0) {
        return Err(Error::InvalidParameter(format!("min_gsigma must be >= 0, got {min_gsigma}")));
    }
    let per_unit = 2.0 * unit_integral(n, delta)?;
    let base = target / per_unit;
    let k = if base >= min_gsigma { 0 } else { ((min_gsigma * per_unit - target) / (2.0 * PI)).ceil() as u32 };
    let angle = target + 2.0 * PI * k as f64;
    Ok(AngleSolution { g_sigma: angle / per_unit, k, angle })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AngleRow {
    pub n: i64,
    pub delta: f64,
    pub g_sigma: f64,
    pub phi_quadrature: f64,
    pub method: AngleMethod,
    /// `None` outside the method's validity window.
    pub phi_asymptotic: Option<f64>,
    pub rel_diff: Option<f64>,
}

/// One row per `(n, delta, method)`.
pub fn angle_table(ns: &[i64], deltas: &[f64], g_sigma: f64, methods: &[AngleMethod]) -> Result<Vec<AngleRow>> {
    let mut rows = Vec::new();
    for &n in ns {
        for &delta in deltas {
            let phi = mixing_angle(n, g_sigma, delta)?;
            for &method in methods {
                let asym = match angle_asymptotic(&MixingAngleQuery { n, g_sigma, delta, method }) {
                    Ok(v) => Some(v),
                    Err(Error::OutOfDomain(_)) => None,
                    Err(e) => return Err(e),
                };
                rows.push(AngleRow {
                    n,
                    delta,
                    g_sigma,
                    phi_quadrature: phi,
                    method,
                    phi_asymptotic: asym,
                    rel_diff: asym.map(|a| (phi - a) / a),
                });
            }
        }
    }
    Ok(rows)
}

/// CSV with a leading `# comment` line; out-of-domain asymptotes are blank.
pub fn write_angle_csv<W: Write>(mut out: W, rows: &[AngleRow], comment: &str) -> Result<()> {
    let io = |e: std::io::Error| Error::InvalidParameter(format!("writing angle table: {e}"));
    writeln!(out, "# {comment}").map_err(io)?;
    let mut w = csv::Writer::from_writer(out);
    let cerr = |e: csv::Error| Error::InvalidParameter(format!("writing angle table: {e}"));
    w.write_record(["n", "delta", "g_sigma", "phi_quadrature", "method", "phi_asymptotic", "rel_diff"]).map_err(cerr)?;
    let opt = |x: Option<f64>| x.map(|v| format!("{v:.12e}")).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.n.to_string(),
            format!("{}", r.delta),
            format!("{}", r.g_sigma),
            format!("{:.12e}", r.phi_quadrature),
            r.method.name().to_string(),
            opt(r.phi_asymptotic),
            opt(r.rel_diff),
        ])
        .map_err(cerr)?;
    }
    w.flush().map_err(io)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_level_zero_delay() {
        // E_4 = sqrt(2) e^{-tau^2}
        let phi = mixing_angle(-1, 1.0, 0.0).unwrap();
        assert!((phi - 2.0 * (2.0 * PI).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn zero_delay_closed_form() {
        // E_4 = sqrt(6 + 4n) e^{-tau^2} when the pulses coincide
        for n in 0..5 {
            let phi = mixing_angle(n, 1.0, 0.0).unwrap();
            let exact = 2.0 * ((6.0 + 4.0 * n as f64) * PI).sqrt();
            assert!((phi - exact).abs() < 1e-10 * exact);
        }
        assert!((mixing_angle(0, 1.0, 0.0).unwrap() - 8.683).abs() < 1e-3);
    }

    #[test]
    fn linear_in_coupling() {
        let a = mixing_angle(3, 1.7, 0.9).unwrap();
        let b = mixing_angle(3, 3.4, 0.9).unwrap();
        assert!((b - 2.0 * a).abs() <= 1e-12 * b);
    }

    // the E_4 envelope widens with the delay, so phi grows towards its plateau
    #[test]
    fn increases_with_delay_then_plateaus() {
        for n in [0, 3] {
            let phis: Vec<f64> = (0..=20).map(|k| mixing_angle(n, 1.0, 0.25 * k as f64).unwrap()).collect();
            assert!(phis.windows(2).all(|w| w[1] > w[0]), "n={n}: {phis:?}");
            let plateau = mixing_angle(n, 1.0, 5.0).unwrap() / mixing_angle(n, 1.0, 8.0).unwrap();
            assert!((plateau - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn approaches_jcm_limit() {
        let ratio = |n: i64| mixing_angle(n, 1.0, 1.0).unwrap() / (4.0 * (n as f64 * PI).sqrt());
        assert!((ratio(100) - 1.0).abs() < 1e-2);
        assert!((ratio(10_000) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn gamma_values() {
        assert!((gamma(0) - 20.0 / 9.0).abs() < 1e-15);
        assert!((gamma(-1) - 4.0).abs() < 1e-15);
    }

    #[test]
    fn asymptote_domains() {
        let q = |n, delta, method| MixingAngleQuery { n, g_sigma: 1.0, delta, method };
        assert!((angle_asymptotic(&q(0, 5.0, AngleMethod::LargeDelta)).unwrap() - 4.0 * (2.0 * PI).sqrt()).abs() < 1e-12);
        assert!((angle_asymptotic(&q(0, 0.0, AngleMethod::SmallDelta)).unwrap() - 2.0 * (6.0 * PI).sqrt()).abs() < 1e-12);
        assert!((angle_asymptotic(&q(100, 1.0, AngleMethod::LargeN)).unwrap() - 70.898).abs() < 1e-3);
        assert!(matches!(angle_asymptotic(&q(0, 1.0, AngleMethod::LargeDelta)), Err(Error::OutOfDomain(_))));
        assert!(matches!(angle_asymptotic(&q(0, 0.8, AngleMethod::SmallDelta)), Err(Error::OutOfDomain(_))));
        assert!(matches!(angle_asymptotic(&q(3, 1.0, AngleMethod::LargeN)), Err(Error::OutOfDomain(_))));
    }

    #[test]
    fn solver_multiplicity() {
        let s = solve_gsigma_for_angle(PI, -1, 1.0, 10.0).unwrap();
        assert!(s.g_sigma >= 10.0);
        assert!(s.k > 0);
        let prev = (s.angle - 2.0 * PI) / (2.0 * unit_integral(-1, 1.0).unwrap());
        assert!(prev < 10.0);
        assert!((mixing_angle(-1, s.g_sigma, 1.0).unwrap() - s.angle).abs() < 1e-9);
        let one = solve_gsigma_for_angle(PI, 0, 1.0, 0.0).unwrap();
        let two = solve_gsigma_for_angle(2.0 * PI, 0, 1.0, 0.0).unwrap();
        assert_eq!(one.k, 0);
        assert!((two.g_sigma - 2.0 * one.g_sigma).abs() < 1e-12);
    }

    #[test]
    fn table_marks_out_of_domain() {
        let rows = angle_table(&[0], &[0.2, 5.0], 1.0, &AngleMethod::ASYMPTOTIC).unwrap();
        assert_eq!(rows.len(), 6);
        assert!(rows[0].phi_asymptotic.is_none());
        assert!(rows[1].phi_asymptotic.is_some());
        assert!(rows[3].rel_diff.unwrap().abs() < 0.01);
        let mut buf = Vec::new();
        write_angle_csv(&mut buf, &rows, "g_sigma=1").unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# g_sigma=1\nn,delta,g_sigma,phi_quadrature,method,phi_asymptotic,rel_diff\n"));
    }
}
