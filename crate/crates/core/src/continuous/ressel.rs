//! Ressel (Kendall) family, `V(u) = u²(1+u)`, with basis density
//! `x^x e^{-x}/Γ(x+2)` and `ρ = Σ_{m≥2} C(m,2) β^{∗m}`.

#[allow(unused_imports)]
use num_traits::Float as _;
use alloc::format;

use super::{half_line_breakpoints, laplace_oracle, GridDensity};
use crate::error::{Error, Result};
use crate::math::{ln_gamma, LN_SQRT_2PI};
use crate::quad::{integrate, QuadOptions};
use crate::rf::ReductionFunction;

pub const RESSEL_DEFAULT_MMAX: usize = 48;

/// `ln(x^x e^{-x}/Γ(x+2))`; the density tends to 1 at the origin.
pub fn ressel_beta_log_density(x: f64) -> f64 {
    if x < 0.0 {
        f64::NEG_INFINITY
    } else if x == 0.0 {
        0.0
    } else if x < 50.0 {
        x * x.ln() - x - ln_gamma(x + 2.0)
    } else {
        // Stirling form; the direct expression cancels catastrophically
        let r = x.recip();
        let r2 = r * r;
        -(x + 1.0).ln() - 0.5 * x.ln() - LN_SQRT_2PI - r * (1.0 / 12.0 - r2 * (1.0 / 360.0 - r2 / 1260.0))
    }
}

const TAIL_START: f64 = 100.0;

/// `L(θ)` of the basis by quadrature. The `x^{-3/2}` tail past 100 is
/// integrated in `u = x^{-1/2}`, where it is smooth.
pub fn ressel_laplace(theta: f64) -> Result<f64> {
    let body = laplace_oracle(|x| ressel_beta_log_density(x).exp(), 0.0, TAIL_START, &half_line_breakpoints(), theta)?;
    let tail = integrate(
        |u: f64| {
            if u <= 0.0 {
                return 0.0;
            }
            let x = 1.0 / (u * u);
            2.0 * (ressel_beta_log_density(x) + theta * x).exp() / (u * u * u)
        },
        0.0,
        TAIL_START.sqrt().recip(),
        &QuadOptions::rel(1e-12),
    )
    .require()?;
    Ok(body + tail)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResselGrid {
    pub x_max: f64,
    pub points: usize,
}

impl ResselGrid {
    /// Resolves `e^{θx}`-weighted mass down to 1e-8 for θ ≤ `theta_max`.
    pub fn for_probe(theta_max: f64) -> Self {
        Self { x_max: 18.5 / -theta_max, points: 4096 }
    }
}

/// `β`, `ρ` (truncated at `m_max`) and `α = β ∗ ρ` on a common grid.
#[derive(Debug, Clone)]
pub struct ResselDensities {
    pub beta: GridDensity,
    pub rho: GridDensity,
    pub alpha: GridDensity,
}

pub fn ressel_densities(m_max: usize, grid: ResselGrid) -> Result<ResselDensities> {
    if m_max < 4 {
        return Err(Error::InvalidParameter(format!("ressel truncation m_max = {m_max} < 4")));
    }
    let h = grid.x_max / grid.points as f64;
    let beta = GridDensity::from_fn(h, grid.points, |x| ressel_beta_log_density(x).exp());
    let mut power = beta.clone();
    let mut rho = GridDensity::from_fn(h, grid.points, |_| 0.0);
    for m in 2..=m_max {
        power = power.convolve(&beta);
        let w = (m * (m - 1) / 2) as f64;
        for (r, p) in rho.values.iter_mut().zip(&power.values) {
            *r += w * p;
        }
    }
    let alpha = beta.convolve(&rho);
    Ok(ResselDensities { beta, rho, alpha })
}

/// Relative mass of `ρ` dropped by truncating at `m_max`, weighted by `e^{θx}`:
/// `(Σ_{m>m_max} C(m,2) L^m) / κ″(θ)` with `κ″ = L²/(1-L)³`.
pub fn ressel_truncation_tail(m_max: usize, theta: f64) -> Result<f64> {
    let l = ressel_laplace(theta)?;
    let full = l * l / (1.0 - l).powi(3);
    let mut kept = 0.0;
    let mut lm = l;
    for m in 2..=m_max {
        lm *= l;
        kept += (m * (m - 1) / 2) as f64 * lm;
    }
    Ok(((full - kept) / full).max(0.0))
}

/// `φ = α/β` on the grid, after checking the truncation tail at `theta_max`.
pub fn ressel_rf(m_max: usize, grid: ResselGrid, theta_max: f64, tol: f64) -> Result<ReductionFunction> {
    let tail = ressel_truncation_tail(m_max, theta_max)?;
    if tail > tol {
        return Err(Error::TailTooHeavy(tail));
    }
    let d = ressel_densities(m_max, grid)?;
    Ok(ReductionFunction::grid_ratio("ressel", &d.alpha, &d.beta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_is_a_probability() {
        let m = ressel_laplace(0.0).unwrap();
        assert!((m - 1.0).abs() < 1e-6, "{m}");
    }

    #[test]
    fn stirling_branch_is_continuous() {
        let direct = 50.0 * 50f64.ln() - 50.0 - ln_gamma(52.0);
        assert!((ressel_beta_log_density(50.0) - direct).abs() < 1e-12);
    }

    #[test]
    fn self_convolution_squares_transform() {
        // trapezoid error near the x ln x cusp at the origin dominates
        let g = ResselGrid { x_max: 40.0, points: 4000 };
        let h = g.x_max / g.points as f64;
        let b = GridDensity::from_fn(h, g.points, |x| ressel_beta_log_density(x).exp());
        let b2 = b.convolve(&b);
        let l = ressel_laplace(-1.0).unwrap();
        assert!((b2.laplace(-1.0) - l * l).abs() < 1e-3 * l * l);
    }

    #[test]
    fn alpha_transform_matches_kappa_pp() {
        let d = ressel_densities(RESSEL_DEFAULT_MMAX, ResselGrid::for_probe(-0.5)).unwrap();
        for t in [-2.0, -1.0, -0.5] {
            let l = ressel_laplace(t).unwrap();
            let target = l * l * l / (1.0 - l).powi(3);
            let got = d.alpha.laplace(t);
            assert!(((got - target) / target).abs() < 1e-3, "{t}: {got} vs {target}");
        }
    }

    #[test]
    fn short_truncation_is_rejected() {
        assert!(matches!(ressel_rf(4, ResselGrid::for_probe(-0.2), -0.2, 1e-6), Err(Error::TailTooHeavy(_))));
        assert!(ressel_densities(3, ResselGrid::for_probe(-1.0)).is_err());
    }
}
