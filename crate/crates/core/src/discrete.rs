//! Reduction functions for infinitely divisible families on ℕ.
//!
//! Pipeline: `c = log Σ β_n z^n` (Taylor coefficients), `ρ_n = n² c_n`,
//! `α = β ∗ ρ`, `φ(n) = α_n / β_n`. For families given by a Lagrange
//! generator `g`, `ρ` is also available as `[w^n] H_ρ(h(w))`.

#[allow(unused_imports)]
use num_traits::Float as _;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::nef::Nef;
use crate::rf::ReductionFunction;
use crate::series::RealSeries;

/// Default truncation order of the coefficient pipelines.
pub const DEFAULT_ORDER: usize = 40;

/// Coefficient tables of one family, all indexed `0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteIdFamily {
    pub beta: Vec<f64>,
    pub c: Vec<f64>,
    pub rho: Vec<f64>,
    pub alpha: Vec<f64>,
    pub generator: Option<RealSeries>,
}

impl DiscreteIdFamily {
    /// Runs the pipeline on `beta_0..beta_N`.
    pub fn from_beta(beta: Vec<f64>) -> Result<Self> {
        let c = cumulant_coeffs(&beta)?;
        let rho = rho_from_c(&c);
        let alpha = alpha_convolve(&beta, &rho);
        Ok(Self { beta, c, rho, alpha, generator: None })
    }

    pub fn order(&self) -> usize {
        self.beta.len() - 1
    }

    pub fn reduction_fn(&self) -> Result<ReductionFunction> {
        reduction_fn(&self.beta, &self.alpha)
    }
}

/// `c_n = [z^n] log Σ β_n z^n`.
pub fn cumulant_coeffs(beta: &[f64]) -> Result<Vec<f64>> {
    if beta.iter().filter(|&&b| b > 0.0).count() < 2 {
        return Err(Error::DegenerateBasis);
    }
    let c = RealSeries::new(beta.to_vec()).log()?.into_coeffs();
    let b0 = beta[0];
    for (n, &cn) in c.iter().enumerate().skip(1) {
        if cn < -1e-8 * (beta[n] / b0).max(1.0) {
            return Err(Error::NotInfinitelyDivisible { index: n, value: cn });
        }
    }
    Ok(c)
}

/// `ρ_n = n² c_n`.
pub fn rho_from_c(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().map(|(n, &cn)| (n * n) as f64 * cn).collect()
}

/// `α_n = Σ_{k≤n} β_{n-k} ρ_k`.
pub fn alpha_convolve(beta: &[f64], rho: &[f64]) -> Vec<f64> {
    let n = beta.len().min(rho.len());
    (0..n).map(|i| (0..=i).map(|k| beta[i - k] * rho[k]).sum()).collect()
}

/// Atom table `φ(n) = α_n/β_n`, absent where `β_n = 0`.
pub fn reduction_fn(beta: &[f64], alpha: &[f64]) -> Result<ReductionFunction> {
    let mut phi = Vec::with_capacity(alpha.len());
    for (n, (&a, &b)) in alpha.iter().zip(beta).enumerate() {
        if b > 0.0 {
            phi.push(Some(a / b));
        } else if a > 0.0 {
            return Err(Error::AbsoluteContinuityViolated { index: n });
        } else {
            phi.push(None);
        }
    }
    Ok(ReductionFunction::atom_table("discrete-id", phi))
}

/// Family with `Σ β_n w^n = h(w)/w` where `h = w·g(h)`.
pub fn lagrange_family(g: &RealSeries, order: usize) -> Result<DiscreteIdFamily> {
    let h = RealSeries::lagrange_invert(g, order + 1)?;
    let beta = h.coeffs()[1..].to_vec();
    let mut fam = DiscreteIdFamily::from_beta(beta)?;
    fam.generator = Some(g.clone());
    Ok(fam)
}

/// `ρ_n = [w^n] H_ρ(h(w))` with
/// `H_ρ(x) = x(1 - xg′/g)^{-3}(g′/g + xg″/g - x(g′/g)²)`.
/// `g` must be known to order `order + 2`.
pub fn rho_via_generator(g: &RealSeries, order: usize) -> Result<Vec<f64>> {
    if g.order() < order + 2 {
        return Err(Error::InvalidParameter(alloc::format!(
            "generator known to order {}, need {}",
            g.order(),
            order + 2
        )));
    }
    let g = g.truncate(order + 2);
    let gp = g.derivative();
    let gpp = gp.derivative();
    let g = g.truncate(order);
    let gp = gp.truncate(order);
    let r = gp.div(&g)?;
    let t = gpp.div(&g)?.shift_up();
    let xr = r.shift_up();
    let one = RealSeries::constant(1.0, order);
    let inner = r.add(&t).sub(&xr.mul(&r));
    let cube = one.sub(&xr).pow(3).recip()?;
    let big_h = cube.mul(&inner).shift_up();
    let h = RealSeries::lagrange_invert(&g, order)?;
    Ok(big_h.compose(&h)?.into_coeffs())
}

/// `p_n(t)`: `∏_{k<n/2}(t²+4k²)` for even `n`, `t∏_{k<(n-1)/2}(t²+(2k+1)²)` for odd.
pub fn arcsine_polynomials(t: f64, n: usize) -> f64 {
    let (mut p, mut j) = if n % 2 == 0 { (1.0, 0) } else { (t, 1) };
    while j + 2 <= n {
        p *= t * t + (j * j) as f64;
        j += 2;
    }
    p
}

/// `ln p_n(t)` for `t > 0`.
pub fn ln_arcsine_polynomial(t: f64, n: usize) -> f64 {
    let (mut p, mut j) = if n % 2 == 0 { (0.0, 0) } else { (t.ln(), 1) };
    while j + 2 <= n {
        p += (t * t + (j * j) as f64).ln();
        j += 2;
    }
    p
}

/// `max_θ |κ″(θ) - v(κ′(θ))| / max(1, κ″(θ))` over `thetas`, with `v` given
/// by ascending polynomial coefficients.
pub fn vf_parametric_check(nef: &Nef, v: &[f64], thetas: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &t in thetas {
        let c = nef.cumulant_derivs(t)?;
        let vu = v.iter().rev().fold(0.0, |acc, &a| acc * c.mean + a);
        worst = worst.max((c.variance - vu).abs() / c.variance.max(1.0));
    }
    Ok(worst)
}

/// Pipeline order large enough that the tilted weights at `theta_max` are
/// resolved (at least [`DEFAULT_ORDER`]).
pub fn pipeline_order(nef: &Nef, theta_max: f64) -> Result<usize> {
    match &nef.basis {
        crate::nef::Basis::Atoms(a) => Ok(a.log_terms(theta_max, nef.theta.hi)?.len().max(DEFAULT_ORDER + 1) - 1),
        crate::nef::Basis::Density(_) => Err(Error::InvalidParameter("pipeline needs an atom basis".into())),
    }
}

/// `β_0..β_N` of an atom basis.
pub fn beta_table(nef: &Nef, order: usize) -> Result<Vec<f64>> {
    match &nef.basis {
        crate::nef::Basis::Atoms(a) => Ok((0..=order).map(|n| a.weight(n)).collect()),
        crate::nef::Basis::Density(_) => Err(Error::InvalidParameter("not an atom basis".into())),
    }
}
