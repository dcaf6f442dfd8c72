//! Natural exponential families generated by a basis measure.
//!
//! The Laplace transform is written `L(θ) = ∫ e^{θx} β(dx)` throughout
//! (some sources call it `g`). Cumulants are computed from tilted moments by
//! summation over atoms or by quadrature, never by differencing.

mod basis;

pub use basis::{AtomBasis, Basis, DensityBasis, MAX_ATOMS};

#[allow(unused_imports)]
use num_traits::Float as _;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, InverseGaussian, Normal};

use crate::error::{Error, Result};
use crate::math::LogSum;
use crate::quad::{integrate_pieces, QuadOptions};

/// Open parameter interval `(lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaInterval {
    pub lo: f64,
    pub hi: f64,
}

impl ThetaInterval {
    pub const REAL_LINE: Self = Self { lo: f64::NEG_INFINITY, hi: f64::INFINITY };

    pub fn below(hi: f64) -> Self {
        Self { lo: f64::NEG_INFINITY, hi }
    }

    pub fn contains(&self, theta: f64) -> bool {
        theta > self.lo && theta < self.hi
    }

    /// A reference point inside the interval (0 when admissible).
    pub fn interior_point(&self) -> f64 {
        if self.contains(0.0) {
            0.0
        } else if self.lo.is_finite() && self.hi.is_finite() {
            0.5 * (self.lo + self.hi)
        } else if self.hi.is_finite() {
            self.hi - 1.0
        } else {
            self.lo + 1.0
        }
    }

    /// `count` evenly spaced points strictly inside `[lo, hi]`, with infinite
    /// ends replaced by `fallback` and a relative margin at finite ends.
    pub fn grid(&self, count: usize, fallback: (f64, f64)) -> Vec<f64> {
        let lo = if self.lo.is_finite() { self.lo } else { fallback.0 };
        let hi = if self.hi.is_finite() { self.hi } else { fallback.1 };
        let lo = lo.max(fallback.0);
        let hi = hi.min(fallback.1);
        let pad = 0.02 * (hi - lo);
        let (a, b) = (lo + pad, hi - pad);
        (0..count).map(|i| a + (b - a) * i as f64 / (count.max(2) - 1) as f64).collect()
    }
}

/// `κ(θ)`, `κ′(θ)` and `κ″(θ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cumulants {
    pub kappa: f64,
    pub mean: f64,
    pub variance: f64,
}

/// Direct samplers for continuous families, parametrised by θ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContinuousSampler {
    /// Unit-variance normal basis: `F_θ = N(θ, 1)`.
    Normal,
    /// Gamma(shape, 1) basis: `F_θ = Gamma(shape, scale 1/(1-θ))`.
    Gamma { shape: f64 },
    /// Lévy basis: `F_θ = IG(mean (-2θ)^{-1/2}, shape 1)`.
    InverseGaussian,
}

type MeanInverseFn = dyn Fn(f64) -> f64 + Send + Sync;

#[derive(Clone)]
pub struct Nef {
    pub label: String,
    pub basis: Basis,
    pub theta: ThetaInterval,
    sampler: Option<ContinuousSampler>,
    exact_mean_inverse: Option<Arc<MeanInverseFn>>,
}

impl fmt::Debug for Nef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nef")
            .field("label", &self.label)
            .field("basis", &self.basis)
            .field("theta", &self.theta)
            .finish()
    }
}

const QUAD_TARGET: f64 = 1e-13;
const QUAD_ACCEPT: f64 = 1e-10;

impl Nef {
    pub fn new(label: impl Into<String>, basis: Basis, theta: ThetaInterval) -> Self {
        Self { label: label.into(), basis, theta, sampler: None, exact_mean_inverse: None }
    }

    pub fn with_sampler(mut self, s: ContinuousSampler) -> Self {
        self.sampler = Some(s);
        self
    }

    /// Registers a closed-form `θ(μ)` used by [`Nef::theta_for_mean`].
    pub fn with_exact_mean_inverse(mut self, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.exact_mean_inverse = Some(Arc::new(f));
        self
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self.basis, Basis::Atoms(_))
    }

    fn check_theta(&self, theta: f64) -> Result<()> {
        if self.theta.contains(theta) {
            Ok(())
        } else {
            Err(Error::ThetaOutOfDomain(theta))
        }
    }

    /// Checks the basis invariants: nonnegative, not a point mass, and of unit
    /// mass when `0 ∈ Θ`.
    pub fn check_basis(&self) -> Result<()> {
        match &self.basis {
            Basis::Atoms(a) => {
                let positive = (0..64).filter(|&n| a.weight(n) > 0.0).count();
                if positive < 2 {
                    return Err(Error::DegenerateBasis);
                }
            }
            Basis::Density(d) => {
                let pts = d.pieces();
                let lo = if pts[0].is_finite() { pts[0] } else { -10.0 };
                let hi = if pts[pts.len() - 1].is_finite() { pts[pts.len() - 1] } else { lo + 20.0 };
                let positive = (1..64).filter(|&i| d.density(lo + (hi - lo) * i as f64 / 64.0) > 0.0).count();
                if positive < 2 {
                    return Err(Error::DegenerateBasis);
                }
            }
        }
        if self.theta.contains(0.0) {
            let mass = self.laplace(0.0)?;
            if (mass - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidParameter(alloc::format!(
                    "basis of {} has mass {mass}, expected 1",
                    self.label
                )));
            }
        }
        Ok(())
    }

    pub fn laplace(&self, theta: f64) -> Result<f64> {
        Ok(self.log_laplace(theta)?.exp())
    }

    /// `κ(θ) = ln L(θ)`.
    pub fn log_laplace(&self, theta: f64) -> Result<f64> {
        self.check_theta(theta)?;
        match &self.basis {
            Basis::Atoms(a) => {
                let mut acc = LogSum::new();
                for t in a.log_terms(theta, self.theta.hi)? {
                    acc.add(t);
                }
                Ok(acc.value())
            }
            Basis::Density(d) => {
                let shift = log_integrand_peak(d, theta);
                let i0 = density_moment(d, theta, shift, |_| 1.0, 0.0)?;
                Ok(shift + (i0 + d.atom_at_zero * (-shift).exp()).ln())
            }
        }
    }

    pub fn cumulant_derivs(&self, theta: f64) -> Result<Cumulants> {
        self.check_theta(theta)?;
        match &self.basis {
            Basis::Atoms(a) => {
                let terms = a.log_terms(theta, self.theta.hi)?;
                let mut acc = LogSum::new();
                for &t in &terms {
                    acc.add(t);
                }
                let kappa = acc.value();
                let mut mean = 0.0;
                for (n, &t) in terms.iter().enumerate() {
                    mean += n as f64 * (t - kappa).exp();
                }
                let mut var = 0.0;
                for (n, &t) in terms.iter().enumerate() {
                    let d = n as f64 - mean;
                    var += d * d * (t - kappa).exp();
                }
                Ok(Cumulants { kappa, mean, variance: var })
            }
            Basis::Density(d) => {
                let shift = log_integrand_peak(d, theta);
                let atom = d.atom_at_zero * (-shift).exp();
                let i0 = density_moment(d, theta, shift, |_| 1.0, 0.0)? + atom;
                let i1 = density_moment(d, theta, shift, |x| x, 1e-14 * i0)?;
                let mean = i1 / i0;
                let i2 = density_moment(d, theta, shift, |x| (x - mean) * (x - mean), 1e-15 * i0)?
                    + atom * mean * mean;
                Ok(Cumulants { kappa: shift + i0.ln(), mean, variance: i2 / i0 })
            }
        }
    }

    /// Solves `κ′(θ) = μ` by bracketing and safeguarded Newton steps.
    pub fn mean_inverse(&self, mu: f64) -> Result<f64> {
        let out_of_domain = |_| Error::MeanOutOfDomain(mu);
        let start = self.theta.interior_point();
        let c0 = self.cumulant_derivs(start)?;
        let tol = 1e-10 * mu.abs().max(1.0);
        if (c0.mean - mu).abs() < tol {
            return Ok(start);
        }
        let upward = c0.mean < mu;
        let (mut a, mut b) = (start, start);
        let mut step = 1.0;
        let mut bracketed = false;
        let mut edge = start;
        for _ in 0..200 {
            let next = if upward {
                let cand = edge + step;
                if self.theta.hi.is_finite() { cand.min(edge + 0.5 * (self.theta.hi - edge)) } else { cand }
            } else {
                let cand = edge - step;
                if self.theta.lo.is_finite() { cand.max(edge - 0.5 * (edge - self.theta.lo)) } else { cand }
            };
            if next == edge {
                break;
            }
            step *= 2.0;
            let m = self.cumulant_derivs(next).map_err(out_of_domain)?.mean;
            if upward {
                a = edge;
                b = next;
                if m >= mu {
                    bracketed = true;
                    break;
                }
            } else {
                b = edge;
                a = next;
                if m <= mu {
                    bracketed = true;
                    break;
                }
            }
            edge = next;
        }
        if !bracketed {
            return Err(Error::MeanOutOfDomain(mu));
        }
        let mut theta = 0.5 * (a + b);
        for _ in 0..200 {
            let c = self.cumulant_derivs(theta).map_err(out_of_domain)?;
            let f = c.mean - mu;
            if f.abs() < tol {
                return Ok(theta);
            }
            if f < 0.0 {
                a = theta;
            } else {
                b = theta;
            }
            let newton = theta - f / c.variance;
            theta = if newton > a && newton < b { newton } else { 0.5 * (a + b) };
            if b - a < 1e-15 * (1.0 + theta.abs()) {
                return Ok(theta);
            }
        }
        Err(Error::MeanOutOfDomain(mu))
    }

    /// `θ(μ)`, via the family's closed form when one is registered.
    pub fn theta_for_mean(&self, mu: f64) -> Result<f64> {
        match &self.exact_mean_inverse {
            Some(f) => {
                let theta = f(mu);
                if theta.is_finite() && self.theta.contains(theta) {
                    Ok(theta)
                } else {
                    Err(Error::MeanOutOfDomain(mu))
                }
            }
            None => self.mean_inverse(mu),
        }
    }

    /// Probability mass (atoms) or density of `F_θ` at `x`.
    pub fn tilted_pmf_or_pdf(&self, theta: f64, x: f64) -> Result<f64> {
        let kappa = self.log_laplace(theta)?;
        Ok(match &self.basis {
            Basis::Atoms(a) => {
                if x < 0.0 || x.fract() != 0.0 {
                    0.0
                } else {
                    (a.log_weight(x as usize) + theta * x - kappa).exp()
                }
            }
            Basis::Density(d) => {
                if x == 0.0 && d.atom_at_zero > 0.0 {
                    // point mass of F_θ at the origin
                    d.atom_at_zero * (-kappa).exp()
                } else {
                    (d.log_density(x) + theta * x - kappa).exp()
                }
            }
        })
    }

    /// Probabilities `F_θ({n})` for `n = 0..` until the tail is negligible.
    pub fn tilted_pmf_table(&self, theta: f64) -> Result<Vec<f64>> {
        self.check_theta(theta)?;
        let Basis::Atoms(a) = &self.basis else {
            return Err(Error::InvalidParameter(alloc::format!("{} has no atoms", self.label)));
        };
        let terms = a.log_terms(theta, self.theta.hi)?;
        let mut acc = LogSum::new();
        for &t in &terms {
            acc.add(t);
        }
        let k = acc.value();
        Ok(terms.iter().map(|&t| (t - k).exp()).collect())
    }

    /// `count` i.i.d. draws from `F_θ` with a ChaCha8 stream seeded by `seed`.
    pub fn sample(&self, theta: f64, seed: u64, count: usize) -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng, theta, count)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, theta: f64, count: usize) -> Result<Vec<f64>> {
        self.check_theta(theta)?;
        match &self.basis {
            Basis::Atoms(_) => {
                let cdf = cumulative(&self.tilted_pmf_table(theta)?);
                Ok((0..count).map(|_| invert_cdf(&cdf, rng.random::<f64>()) as f64).collect())
            }
            Basis::Density(_) => {
                let bad = || Error::InvalidParameter(alloc::format!("sampler parameters at θ = {theta}"));
                match self.sampler {
                    Some(ContinuousSampler::Normal) => {
                        let d = Normal::new(theta, 1.0).map_err(|_| bad())?;
                        Ok((0..count).map(|_| d.sample(rng)).collect())
                    }
                    Some(ContinuousSampler::Gamma { shape }) => {
                        let d = Gamma::new(shape, 1.0 / (1.0 - theta)).map_err(|_| bad())?;
                        Ok((0..count).map(|_| d.sample(rng)).collect())
                    }
                    Some(ContinuousSampler::InverseGaussian) => {
                        let mean = (-2.0 * theta).powf(-0.5);
                        let d = InverseGaussian::new(mean, 1.0).map_err(|_| bad())?;
                        Ok((0..count).map(|_| d.sample(rng)).collect())
                    }
                    None => Err(Error::SamplerUnavailable(self.label.clone())),
                }
            }
        }
    }

    pub fn has_sampler(&self) -> bool {
        self.is_discrete() || self.sampler.is_some()
    }
}

fn cumulative(pmf: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = pmf
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect();
    if let Some(last) = out.last_mut() {
        *last = f64::INFINITY;
    }
    out
}

fn invert_cdf(cdf: &[f64], u: f64) -> usize {
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

/// Largest value of `ln f(x) + θx` over a coarse probe set.
fn log_integrand_peak(d: &DensityBasis, theta: f64) -> f64 {
    let mut best = f64::NEG_INFINITY;
    let mut probe = |x: f64| {
        if x.is_finite() {
            let v = d.log_density(x) + theta * x;
            if v.is_finite() && v > best {
                best = v;
            }
        }
    };
    for &p in &d.breakpoints {
        probe(p);
    }
    for i in -12..=16 {
        let x = 10f64.powf(i as f64 / 4.0);
        probe(x);
        probe(-x);
    }
    probe(0.0);
    if best.is_finite() { best } else { 0.0 }
}

/// `∫ g(x) f(x) e^{θx - shift} dx` over the density part.
fn density_moment(
    d: &DensityBasis,
    theta: f64,
    shift: f64,
    g: impl Fn(f64) -> f64,
    abs_tol: f64,
) -> Result<f64> {
    let integrand = |x: f64| {
        let l = d.log_density(x);
        if l == f64::NEG_INFINITY {
            0.0
        } else {
            g(x) * (l + theta * x - shift).exp()
        }
    };
    let opts = QuadOptions { abs_tol, rel_tol: QUAD_TARGET, max_intervals: 6000 };
    let r = integrate_pieces(integrand, &d.pieces(), &opts);
    if r.converged || r.abs_err <= QUAD_ACCEPT * r.value.abs() + abs_tol {
        Ok(r.value)
    } else {
        Err(Error::NonConvergent { estimate: r.value, error: r.abs_err })
    }
}
