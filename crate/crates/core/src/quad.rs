//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Semi-infinite and infinite ranges are mapped onto finite ones with
//! `x = a + t / (1 - t)`.

use alloc::collections::BinaryHeap;
use core::cmp::Ordering;

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
    0.209_482_141_084_728_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 0.0, rel_tol: 1e-10, max_intervals: 4000 }
    }
}

impl QuadOptions {
    pub fn rel(rel_tol: f64) -> Self {
        Self { rel_tol, ..Self::default() }
    }

    pub fn abs_rel(abs_tol: f64, rel_tol: f64) -> Self {
        Self { abs_tol, rel_tol, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_err: f64,
    pub converged: bool,
}

impl QuadResult {
    /// Converts a non-converged result into `Error::NonConvergent`.
    pub fn require(self) -> Result<f64> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(Error::NonConvergent { estimate: self.value, error: self.abs_err })
        }
    }
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.partial_cmp(&other.err).unwrap_or(Ordering::Equal)
    }
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        resk += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let value = resk * half;
    let err = ((resk - resg) * half).abs();
    (value, err)
}

/// Integrates `f` over a finite interval.
fn finite<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, opts: &QuadOptions) -> QuadResult {
    if a == b {
        return QuadResult { value: 0.0, abs_err: 0.0, converged: true };
    }
    let (v, e) = kronrod(f, a, b);
    if !v.is_finite() {
        return QuadResult { value: f64::NAN, abs_err: f64::INFINITY, converged: false };
    }
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value: v, err: e });
    let mut total = v;
    let mut total_err = e;
    let mut count = 1;
    loop {
        let target = opts.abs_tol.max(opts.rel_tol * total.abs());
        if total_err <= target {
            return QuadResult { value: total, abs_err: total_err, converged: true };
        }
        if count >= opts.max_intervals {
            return QuadResult { value: total, abs_err: total_err, converged: false };
        }
        let seg = match heap.pop() {
            Some(s) => s,
            None => unreachable!(),
        };
        let mid = 0.5 * (seg.a + seg.b);
        if !(mid > seg.a && mid < seg.b) {
            // Interval exhausted at machine resolution.
            heap.push(seg);
            let sum_err: f64 = heap.iter().map(|s| s.err).sum();
            return QuadResult { value: total, abs_err: sum_err, converged: sum_err <= target };
        }
        let (v1, e1) = kronrod(f, seg.a, mid);
        let (v2, e2) = kronrod(f, mid, seg.b);
        if !(v1.is_finite() && v2.is_finite()) {
            return QuadResult { value: f64::NAN, abs_err: f64::INFINITY, converged: false };
        }
        total += v1 + v2 - seg.value;
        total_err += e1 + e2 - seg.err;
        heap.push(Segment { a: seg.a, b: mid, value: v1, err: e1 });
        heap.push(Segment { a: mid, b: seg.b, value: v2, err: e2 });
        count += 1;
        if count % 64 == 0 {
            // Resum to shed accumulated cancellation in the running totals.
            total = heap.iter().map(|s| s.value).sum();
            total_err = heap.iter().map(|s| s.err).sum();
        }
    }
}

/// Integrates `f` over `[a, b]`; either endpoint may be infinite.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, opts: &QuadOptions) -> QuadResult {
    integrate_dyn(&mut f, a, b, opts)
}

fn integrate_dyn(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, opts: &QuadOptions) -> QuadResult {
    if a > b {
        let r = integrate_dyn(f, b, a, opts);
        return QuadResult { value: -r.value, ..r };
    }
    match (a.is_finite(), b.is_finite()) {
        (true, true) => finite(&mut |x| f(x), a, b, opts),
        (true, false) => {
            let mut g = |t: f64| {
                if t >= 1.0 {
                    return 0.0;
                }
                let s = 1.0 - t;
                let v = f(a + t / s) / (s * s);
                if v.is_finite() { v } else { 0.0 }
            };
            finite(&mut g, 0.0, 1.0, opts)
        }
        (false, true) => {
            let mut g = |t: f64| {
                if t >= 1.0 {
                    return 0.0;
                }
                let s = 1.0 - t;
                let v = f(b - t / s) / (s * s);
                if v.is_finite() { v } else { 0.0 }
            };
            finite(&mut g, 0.0, 1.0, opts)
        }
        (false, false) => {
            let left = integrate_dyn(f, f64::NEG_INFINITY, 0.0, opts);
            let right = integrate_dyn(f, 0.0, f64::INFINITY, opts);
            QuadResult {
                value: left.value + right.value,
                abs_err: left.abs_err + right.abs_err,
                converged: left.converged && right.converged,
            }
        }
    }
}

/// Integrates over consecutive pieces `[p0, p1], [p1, p2], ...`.
pub fn integrate_pieces<F: FnMut(f64) -> f64>(
    mut f: F,
    points: &[f64],
    opts: &QuadOptions,
) -> QuadResult {
    let mut out = QuadResult { value: 0.0, abs_err: 0.0, converged: true };
    for w in points.windows(2) {
        let r = integrate_dyn(&mut f, w[0], w[1], opts);
        out.value += r.value;
        out.abs_err += r.abs_err;
        out.converged &= r.converged;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x| x * x * x - 2.0 * x, 0.0, 2.0, &QuadOptions::default());
        assert!((r.value - 0.0).abs() < 1e-14);
    }

    #[test]
    fn exponential_half_line() {
        let r = integrate(|x| (-x).exp(), 0.0, f64::INFINITY, &QuadOptions::rel(1e-12));
        assert!(r.converged);
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_whole_line() {
        let r = integrate(|x| (-x * x).exp(), f64::NEG_INFINITY, f64::INFINITY, &QuadOptions::rel(1e-12));
        assert!((r.value - PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn endpoint_singularity() {
        let r = integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0, &QuadOptions::rel(1e-10));
        assert!((r.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn non_finite_integrand_is_not_converged() {
        let r = integrate(|x| if x < 0.01 { f64::NAN } else { 1.0 }, 0.0, 1.0, &QuadOptions::default());
        assert!(!r.converged && r.value.is_nan());
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let r = integrate(|x| x, 1.0, 0.0, &QuadOptions::default());
        assert!((r.value + 0.5).abs() < 1e-15);
    }
}
