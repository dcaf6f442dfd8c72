//! Inverse Gaussian (Lévy) basis, `V(u) = u³`.

#[allow(unused_imports)]
use num_traits::Float as _;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{half_line_breakpoints, laplace_oracle, probe_grid, CandidateCheck};
use crate::error::Result;
use crate::math::{erf, erfc};
use crate::rf::ReductionFunction;

/// Basis density `(2π)^{-1/2} x^{-3/2} e^{-1/(2x)}`.
pub fn ig_density(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    (-1.5 * x.ln() - 0.5 / x).exp() / (2.0 * PI).sqrt()
}

/// `L(θ)κ″(θ) = (-2θ)^{-3/2} e^{-√(-2θ)}`.
pub fn ig_alpha_transform(theta: f64) -> f64 {
    let s = (-2.0 * theta).sqrt();
    s.powi(-3) * (-s).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IgCandidate {
    /// `(2π)^{-1}(√(2π) e^{-1/(2x)} - π x^{-1/2} + π erf((2x)^{-1/2}))`.
    Printed,
    /// `√(x/(2π)) e^{-1/(2x)} - erfc((2x)^{-1/2})/2`.
    Corrected,
}

impl IgCandidate {
    pub fn name(self) -> &'static str {
        match self {
            IgCandidate::Printed => "inverse-gaussian/alpha-printed",
            IgCandidate::Corrected => "inverse-gaussian/alpha-corrected",
        }
    }

    /// Density of `α = β ∗ ρ` according to this candidate.
    pub fn alpha(self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let y = (0.5 / x).sqrt();
        match self {
            IgCandidate::Printed => {
                ((2.0 * PI).sqrt() * (-0.5 / x).exp() - PI / x.sqrt() + PI * erf(y)) / (2.0 * PI)
            }
            IgCandidate::Corrected => (x / (2.0 * PI)).sqrt() * (-0.5 / x).exp() - 0.5 * erfc(y),
        }
    }
}

/// `α/β` for the corrected candidate, `x² - √(π/2) x^{3/2} e^{1/(2x)} erfc((2x)^{-1/2})`,
/// switching to the asymptotic series `x³ - 3x⁴ + 15x⁵ - …` below `x = 0.01`.
pub fn ig_phi(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < 0.01 {
        let mut term = x * x * x;
        let mut sum = 0.0;
        for k in 1..60 {
            sum += term;
            let next = -term * (2 * k + 1) as f64 * x;
            if next.abs() >= term.abs() || next.abs() < 1e-17 * sum.abs() {
                break;
            }
            term = next;
        }
        return sum;
    }
    let y = (0.5 / x).sqrt();
    x * x - (PI / 2.0).sqrt() * x.powf(1.5) * (0.5 / x).exp() * erfc(y)
}

fn oracle_probes() -> Vec<f64> {
    probe_grid(-5.0, -0.1, 8)
}

fn check(candidate: IgCandidate) -> CandidateCheck {
    CandidateCheck::run(
        candidate.name(),
        1e-6,
        &oracle_probes(),
        |t| laplace_oracle(|x| candidate.alpha(x), 0.0, f64::INFINITY, &half_line_breakpoints(), t),
        ig_alpha_transform,
    )
}

/// Oracle checks for both candidates.
pub fn ig_candidates() -> Vec<CandidateCheck> {
    alloc::vec![check(IgCandidate::Printed), check(IgCandidate::Corrected)]
}

/// Reduction function built from `candidate`, provided it passes the oracle.
pub fn ig_rf_with(candidate: IgCandidate) -> Result<ReductionFunction> {
    check(candidate).require()?;
    Ok(match candidate {
        IgCandidate::Corrected => ReductionFunction::density_ratio("inverse-gaussian", ig_phi),
        IgCandidate::Printed => ReductionFunction::density_ratio("inverse-gaussian", move |x| {
            candidate.alpha(x) / ig_density(x)
        }),
    })
}

pub fn ig_rf() -> Result<ReductionFunction> {
    ig_rf_with(IgCandidate::Corrected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn target_at_minus_half() {
        assert!((ig_alpha_transform(-0.5) - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn basis_laplace_matches_closed_form() {
        for t in [-2.0, -0.5, -0.1] {
            let l = laplace_oracle(ig_density, 0.0, f64::INFINITY, &half_line_breakpoints(), t).unwrap();
            assert!((l - (-(-2.0 * t).sqrt()).exp()).abs() < 1e-9, "{t}");
        }
    }

    #[test]
    fn printed_candidate_is_rejected() {
        assert!(matches!(ig_rf_with(IgCandidate::Printed), Err(Error::FormulaInvalid { .. })));
    }

    #[test]
    fn corrected_candidate_passes() {
        let c = check(IgCandidate::Corrected);
        assert!(c.passed, "{}", c.max_rel_err);
        assert!(ig_rf().is_ok());
    }

    #[test]
    fn phi_branches_agree() {
        for x in [0.005, 0.009, 0.01, 0.05, 0.3, 1.0, 10.0] {
            let direct = IgCandidate::Corrected.alpha(x) / ig_density(x);
            assert!((ig_phi(x) - direct).abs() < 1e-9 * direct, "{x}");
        }
        assert!(ig_phi(1e-4) > 0.0);
    }
}
