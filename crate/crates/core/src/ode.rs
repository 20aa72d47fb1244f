//! Adaptive Dormand-Prince 5(4) integrator for complex state vectors.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

// Butcher tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth-order weights minus the embedded fourth-order ones
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Smallest accepted step before giving up, relative to the span.
    pub min_step_rel: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-11, atol: 1e-11, min_step_rel: 1e-13, max_steps: 20_000_000 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Stateful stepper; keeps the last step size so consecutive calls to
/// [`DormandPrince::advance`] continue smoothly.
pub struct DormandPrince {
    opts: OdeOptions,
    h: Option<f64>,
    k: [Vec<C64>; 7],
    tmp: Vec<C64>,
    y_new: Vec<C64>,
    pub stats: OdeStats,
}

impl DormandPrince {
    pub fn new(dim: usize, opts: OdeOptions) -> Self {
        let z = || vec![C64::default(); dim];
        Self {
            opts,
            h: None,
            k: [z(), z(), z(), z(), z(), z(), z()],
            tmp: z(),
            y_new: z(),
            stats: OdeStats::default(),
        }
    }

    fn error_ratio(&self, y: &[C64], h: f64) -> f64 {
        let k = &self.k;
        let mut worst: f64 = 0.0;
        for i in 0..y.len() {
            let err = h * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
            let scale = self.opts.atol + self.opts.rtol * y[i].norm().max(self.y_new[i].norm());
            worst = worst.max(err.norm() / scale);
        }
        worst
    }

    /// Integrates `dy/dt = f(t, y)` from `t0` to `t1` in place.
    pub fn advance<F>(&mut self, f: &mut F, t0: f64, t1: f64, y: &mut [C64]) -> Result<()>
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        let span = t1 - t0;
        if span == 0.0 {
            return Ok(());
        }
        let dir = span.signum();
        let h_min = self.opts.min_step_rel * span.abs().max(1.0);
        let dim = y.len();
        let mut t = t0;
        let mut h = self.h.unwrap_or(1e-3 * span.abs()).abs().min(span.abs());

        f(t, y, &mut self.k[0]);
        self.stats.evaluations += 1;
        let mut steps = 0usize;
        while dir * (t1 - t) > 0.0 {
            steps += 1;
            if steps > self.opts.max_steps {
                return Err(Error::IntegrationFailure { tau: t, step: h, achieved: f64::INFINITY });
            }
            let last = h >= (t1 - t).abs();
            let hs = if last { t1 - t } else { dir * h };

            macro_rules! stage {
                ($dst:expr, $c:expr, [$($a:expr => $ki:expr),*]) => {{
                    for i in 0..dim {
                        self.tmp[i] = y[i] + hs * (C64::default() $(+ $a * self.k[$ki][i])*);
                    }
                    let (tmp, k) = (&self.tmp, &mut self.k);
                    f(t + $c * hs, tmp, &mut k[$dst]);
                }};
            }
            stage!(1, C2, [A21 => 0]);
            stage!(2, C3, [A31 => 0, A32 => 1]);
            stage!(3, C4, [A41 => 0, A42 => 1, A43 => 2]);
            stage!(4, C5, [A51 => 0, A52 => 1, A53 => 2, A54 => 3]);
            stage!(5, 1.0, [A61 => 0, A62 => 1, A63 => 2, A64 => 3, A65 => 4]);
            for i in 0..dim {
                self.y_new[i] = y[i]
                    + hs * (B1 * self.k[0][i] + B3 * self.k[2][i] + B4 * self.k[3][i] + B5 * self.k[4][i] + B6 * self.k[5][i]);
            }
            f(t + hs, &self.y_new, &mut self.k[6]);
            self.stats.evaluations += 6;

            let ratio = self.error_ratio(y, hs.abs());
            if ratio <= 1.0 {
                t = if last { t1 } else { t + hs };
                y.copy_from_slice(&self.y_new);
                self.k.swap(0, 6);
                self.stats.accepted += 1;
                let grow = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
                // a truncated final step says nothing about the natural step size
                if !last {
                    h *= grow;
                }
            } else {
                self.stats.rejected += 1;
                h *= (0.9 * ratio.powf(-0.2)).clamp(0.1, 1.0);
                if h < h_min {
                    return Err(Error::IntegrationFailure { tau: t, step: h, achieved: ratio });
                }
            }
        }
        self.h = Some(h);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_phase() {
        // y' = -i w y, exact y = exp(-i w t)
        let w = 37.0;
        let mut f = |_t: f64, y: &[C64], dy: &mut [C64]| dy[0] = C64::new(0.0, -w) * y[0];
        let mut y = [C64::new(1.0, 0.0)];
        let mut dp = DormandPrince::new(1, OdeOptions::default());
        dp.advance(&mut f, 0.0, 10.0, &mut y).unwrap();
        let exact = C64::from_polar(1.0, -w * 10.0);
        assert!((y[0] - exact).norm() < 5e-8, "{}", (y[0] - exact).norm());
    }

    #[test]
    fn time_dependent_rotation_in_pieces() {
        // two-level rotation with time-dependent rate; angle = int_0^t s ds
        let mut f = |t: f64, y: &[C64], dy: &mut [C64]| {
            let r = C64::new(0.0, -t);
            dy[0] = r * y[1];
            dy[1] = r * y[0];
        };
        let mut y = [C64::new(1.0, 0.0), C64::default()];
        let mut dp = DormandPrince::new(2, OdeOptions::default());
        let mut t = 0.0;
        for i in 1..=40 {
            let t1 = 0.1 * i as f64;
            dp.advance(&mut f, t, t1, &mut y).unwrap();
            t = t1;
        }
        let angle = 0.5 * t * t;
        assert!((y[0] - C64::new(angle.cos(), 0.0)).norm() < 1e-8);
        assert!((y[1] - C64::new(0.0, -angle.sin())).norm() < 1e-8);
        assert!(dp.stats.accepted > 0);
    }

    #[test]
    fn backward_integration() {
        let mut f = |_t: f64, y: &[C64], dy: &mut [C64]| dy[0] = y[0];
        let mut y = [C64::new(1.0, 0.0)];
        let mut dp = DormandPrince::new(1, OdeOptions::default());
        dp.advance(&mut f, 1.0, 0.0, &mut y).unwrap();
        assert!((y[0].re - (-1.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn step_floor_reports_failure() {
        let opts = OdeOptions { rtol: 1e-14, atol: 1e-300, min_step_rel: 1e-3, max_steps: 1000 };
        let mut f = |t: f64, _y: &[C64], dy: &mut [C64]| dy[0] = C64::new(1.0 / (1.0 - t).powi(3), 0.0);
        let mut y = [C64::new(1.0, 0.0)];
        let mut dp = DormandPrince::new(1, opts);
        match dp.advance(&mut f, 0.0, 1.0, &mut y) {
            Err(Error::IntegrationFailure { achieved, .. }) => assert!(achieved > 1.0),
            other => panic!("expected failure, got {other:?}"),
        }
    }
}
