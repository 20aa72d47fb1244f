//! Globally adaptive Gauss-Kronrod (7, 15) quadrature on finite intervals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights sit on the odd Kronrod nodes
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 5000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Piece {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let sum = f(centre - dx) + f(centre + dx);
        kron += WGK[j] * sum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }
    Piece { a, b, value: kron * half, error: ((kron - gauss) * half).abs() }
}

/// Integrates `f` over `[a, b]` until the summed error estimate falls below
/// `max(abs_tol, rel_tol * |I|)`. `breaks` are interior points where `f` may
/// have a kink; they start as interval boundaries.
pub fn integrate<F>(f: F, a: f64, b: f64, breaks: &[f64], abs_tol: f64, rel_tol: f64) -> Result<Quadrature>
where
    F: Fn(f64) -> f64,
{
    let mut edges: Vec<f64> = std::iter::once(a)
        .chain(breaks.iter().copied().filter(|x| *x > a.min(b) && *x < a.max(b)))
        .chain(std::iter::once(b))
        .collect();
    let last = edges.len() - 1;
    if a > b {
        edges[1..last].sort_by(|x, y| y.total_cmp(x));
    } else {
        edges[1..last].sort_by(|x, y| x.total_cmp(y));
    }
    let mut heap: BinaryHeap<Piece> = edges.windows(2).map(|w| kronrod(&f, w[0], w[1])).collect();
    let mut evaluations = 15 * heap.len();
    loop {
        let value: f64 = heap.iter().map(|p| p.value).sum();
        let error: f64 = heap.iter().map(|p| p.error).sum();
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return Ok(Quadrature { value, error, evaluations });
        }
        if heap.len() >= MAX_INTERVALS {
            return Err(Error::QuadratureFailure { value, error });
        }
        let worst = heap.pop().expect("non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid == worst.a || mid == worst.b {
            // interval cannot be split further in f64
            return Err(Error::QuadratureFailure { value, error });
        }
        heap.push(kronrod(&f, worst.a, mid));
        heap.push(kronrod(&f, mid, worst.b));
        evaluations += 30;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gaussian_integral() {
        let q = integrate(|x| (-x * x).exp(), -9.0, 9.0, &[], 0.0, 1e-13).unwrap();
        assert!((q.value - PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn kink_with_breakpoint() {
        let q = integrate(|x: f64| x.abs(), -1.0, 2.0, &[0.0], 0.0, 1e-14).unwrap();
        assert!((q.value - 2.5).abs() < 1e-14);
        assert!(q.evaluations <= 45);
    }

    #[test]
    fn reversed_limits() {
        let q = integrate(|x: f64| x.cos(), 1.0, 0.0, &[], 0.0, 1e-13).unwrap();
        assert!((q.value + 1f64.sin()).abs() < 1e-13);
    }

    #[test]
    fn oscillatory() {
        let q = integrate(|x: f64| (50.0 * x).sin() * x, 0.0, 3.0, &[], 1e-13, 1e-12).unwrap();
        let exact = (150f64.sin() - 150.0 * 150f64.cos()) / 2500.0;
        assert!((q.value - exact).abs() < 1e-11);
    }
}
