//! Reduction functions for continuous families and the Laplace-transform
//! oracle that every shipped density formula must pass.

mod grid;
mod ig;
mod pvf;
mod ressel;

pub use grid::GridDensity;
pub use ig::{ig_alpha_transform, ig_candidates, ig_density, ig_phi, ig_rf, ig_rf_with, IgCandidate};
pub use pvf::{pvf_candidates, pvf_density, pvf_rf, PvfCase, PvfGrid, PvfKind, PvfSpec};
pub use ressel::{
    ressel_beta_log_density, ressel_densities, ressel_laplace, ressel_rf, ressel_truncation_tail, ResselDensities,
    ResselGrid, RESSEL_DEFAULT_MMAX,
};

#[allow(unused_imports)]
use num_traits::Float as _;
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::{integrate_pieces, QuadOptions};
use crate::rf::ReductionFunction;

/// `V(u) = a0 + a1·u + a2·u²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QvfSpec {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
}

impl QvfSpec {
    pub fn new(a0: f64, a1: f64, a2: f64) -> Self {
        Self { a0, a1, a2 }
    }

    pub fn normal() -> Self {
        Self::new(1.0, 0.0, 0.0)
    }

    pub fn poisson() -> Self {
        Self::new(0.0, 1.0, 0.0)
    }

    pub fn binomial(m: f64) -> Self {
        Self::new(0.0, 1.0, -1.0 / m)
    }

    pub fn negbin(m: f64) -> Self {
        Self::new(0.0, 1.0, 1.0 / m)
    }

    pub fn gamma(m: f64) -> Self {
        Self::new(0.0, 0.0, 1.0 / m)
    }

    pub fn ghs(m: f64) -> Self {
        Self::new(m, 0.0, 1.0 / m)
    }

    pub fn variance(&self, u: f64) -> f64 {
        self.a0 + u * (self.a1 + u * self.a2)
    }

    pub fn phi_coefficients(&self) -> Result<[f64; 3]> {
        qvf_phi_coefficients([self.a0, self.a1, self.a2]).ok_or(Error::BernoulliNoRf)
    }
}

/// Coefficients of `φ(t) = (a0 + a1 t + a2 t²)/(1 + a2)`; `None` when `a2 = -1`.
/// Generic so that rational coefficients can be compared exactly.
pub fn qvf_phi_coefficients<T>(a: [T; 3]) -> Option<[T; 3]>
where
    T: Clone + Zero + One + PartialEq + core::ops::Add<Output = T> + core::ops::Div<Output = T>,
{
    let denom = T::one() + a[2].clone();
    if denom == T::zero() {
        return None;
    }
    let [a0, a1, a2] = a;
    Some([a0 / denom.clone(), a1 / denom.clone(), a2 / denom])
}

pub fn qvf_rf(spec: QvfSpec) -> Result<ReductionFunction> {
    let [b0, b1, b2] = spec.phi_coefficients()?;
    Ok(ReductionFunction::closed_form("qvf", move |t| b0 + t * (b1 + t * b2)))
}

const ORACLE_TARGET: f64 = 1e-11;
const ORACLE_ACCEPT: f64 = 1e-8;

/// `∫ e^{θx} f(x) dx` over `[lower, upper]` (either end may be infinite),
/// split at `breakpoints`, to relative accuracy 1e-8.
pub fn laplace_oracle(
    f: impl Fn(f64) -> f64,
    lower: f64,
    upper: f64,
    breakpoints: &[f64],
    theta: f64,
) -> Result<f64> {
    let mut pts = Vec::with_capacity(breakpoints.len() + 2);
    pts.push(lower);
    pts.extend(breakpoints.iter().copied().filter(|&p| p > lower && p < upper));
    pts.push(upper);
    let r = integrate_pieces(|x| f(x) * (theta * x).exp(), &pts, &QuadOptions { abs_tol: 0.0, rel_tol: ORACLE_TARGET, max_intervals: 8000 });
    if r.value.is_finite() && (r.converged || r.abs_err <= ORACLE_ACCEPT * r.value.abs()) {
        Ok(r.value)
    } else {
        Err(Error::NonConvergent { estimate: r.value, error: r.abs_err })
    }
}

/// Breakpoints that help quadrature on `(0, ∞)` for densities with
/// structure on many scales.
pub fn half_line_breakpoints() -> Vec<f64> {
    alloc::vec![0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 30.0, 100.0]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeResult {
    pub theta: f64,
    pub target: f64,
    pub computed: f64,
    pub rel_err: f64,
}

/// Outcome of checking a density formula against its exact Laplace transform.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateCheck {
    pub name: String,
    pub tolerance: f64,
    pub probes: Vec<ProbeResult>,
    pub max_rel_err: f64,
    pub passed: bool,
}

impl CandidateCheck {
    /// Runs the probes; quadrature failures count as an infinite discrepancy.
    pub fn run(
        name: impl Into<String>,
        tolerance: f64,
        thetas: &[f64],
        computed: impl Fn(f64) -> Result<f64>,
        target: impl Fn(f64) -> f64,
    ) -> Self {
        let mut probes = Vec::with_capacity(thetas.len());
        let mut worst: f64 = 0.0;
        for &theta in thetas {
            let t = target(theta);
            let c = computed(theta).unwrap_or(f64::NAN);
            let rel = if c.is_finite() { ((c - t) / t).abs() } else { f64::INFINITY };
            worst = worst.max(rel);
            probes.push(ProbeResult { theta, target: t, computed: c, rel_err: rel });
        }
        Self { name: name.into(), tolerance, probes, max_rel_err: worst, passed: worst <= tolerance }
    }

    /// `Err(FormulaInvalid)` carrying the measured discrepancy on failure.
    pub fn require(&self) -> Result<()> {
        if self.passed {
            Ok(())
        } else {
            Err(Error::FormulaInvalid { name: self.name.clone(), discrepancy: self.max_rel_err })
        }
    }
}

/// `count` points evenly spread over `[lo, hi]`.
pub fn probe_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;

    #[test]
    fn table_one_rows_exact() {
        let r = |n: i64, d: i64| Rational64::new(n, d);
        let z = r(0, 1);
        // normal, poisson, binomial(2), negbin(2), gamma(2), ghs(2)
        let cases = [
            ([r(1, 1), z, z], [r(1, 1), z, z]),
            ([z, r(1, 1), z], [z, r(1, 1), z]),
            ([z, r(1, 1), r(-1, 2)], [z, r(2, 1), r(-1, 1)]),
            ([z, r(1, 1), r(1, 2)], [z, r(2, 3), r(1, 3)]),
            ([z, z, r(1, 2)], [z, z, r(1, 3)]),
            ([r(2, 1), z, r(1, 2)], [r(4, 3), z, r(1, 3)]),
        ];
        for (a, phi) in cases {
            assert_eq!(qvf_phi_coefficients(a), Some(phi));
        }
        assert_eq!(qvf_phi_coefficients([z, r(1, 1), r(-1, 1)]), None);
    }

    #[test]
    fn bernoulli_has_no_rf() {
        assert_eq!(qvf_rf(QvfSpec::binomial(1.0)).err(), Some(Error::BernoulliNoRf));
        let g = qvf_rf(QvfSpec::gamma(3.0)).unwrap();
        assert!((g.eval(2.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn oracle_exponential() {
        let v = laplace_oracle(|x| (-x).exp(), 0.0, f64::INFINITY, &[], -1.0).unwrap();
        assert!((v - 0.5).abs() < 1e-12);
    }

    #[test]
    fn oracle_mass_of_lognormal_like_density() {
        let f = |x: f64| (-(x.ln()).powi(2) / 2.0).exp() / (x * (2.0 * core::f64::consts::PI).sqrt());
        let v = laplace_oracle(f, 0.0, f64::INFINITY, &half_line_breakpoints(), 0.0).unwrap();
        assert!((v - 1.0).abs() < 1e-8);
    }

    #[test]
    fn candidate_failure_reports_discrepancy() {
        let c = CandidateCheck::run("x", 1e-6, &[-1.0, -2.0], |t| Ok(2.0 * t), |t| t);
        assert!(!c.passed);
        assert_eq!(c.max_rel_err, 1.0);
        assert!(matches!(c.require(), Err(Error::FormulaInvalid { discrepancy, .. }) if discrepancy == 1.0));
    }
}
