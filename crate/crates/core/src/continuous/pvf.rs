//! Power variance families `V(u) = a·u^r` for non-integer `r > 1`.
//!
//! Everything is computed for `a = 1` and mapped to general `a` through
//! `Y = cX`, `c = a^{1/(2-r)}`. Powers of θ use `s = -θ > 0`, which fixes
//! the real branch: `κ(θ) = (r-1)^γ s^γ / (2-r)` with `γ = (2-r)/(1-r)`.

#[allow(unused_imports)]
use num_traits::Float as _;
use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{half_line_breakpoints, laplace_oracle, probe_grid, CandidateCheck, GridDensity};
use crate::error::{Error, Result};
use crate::math::{gamma, ln_factorial, ln_gamma, LogSum};
use crate::rf::ReductionFunction;

const MAX_TERMS: usize = 400;
/// Largest tolerated ratio between the biggest term and the sum of the
/// alternating stable series.
const MAX_CANCELLATION: f64 = 1e8;
/// Below this argument the stable density comes from its integral
/// representation; the alternating series needs many terms there.
const STABLE_SERIES_MIN: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PvfCase {
    /// `1 < r < 2`, `γ < 0`: compound Poisson–gamma with an atom at 0.
    CompoundPoisson,
    /// `r > 2`, `0 < γ < 1`: positive stable.
    Stable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PvfKind {
    Beta,
    Alpha,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PvfSpec {
    pub a: f64,
    pub r: f64,
}

impl PvfSpec {
    pub fn new(a: f64, r: f64) -> Result<Self> {
        if !(a > 0.0) || !(r > 1.0) || r.fract() == 0.0 || !r.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "power variance needs a > 0 and non-integer r > 1, got a = {a}, r = {r}"
            )));
        }
        Ok(Self { a, r })
    }

    pub fn unit(r: f64) -> Result<Self> {
        Self::new(1.0, r)
    }

    pub fn gamma(&self) -> f64 {
        (2.0 - self.r) / (1.0 - self.r)
    }

    pub fn case(&self) -> PvfCase {
        if self.r < 2.0 {
            PvfCase::CompoundPoisson
        } else {
            PvfCase::Stable
        }
    }

    /// `c` with `Y = cX`.
    pub fn scale(&self) -> f64 {
        self.a.powf(1.0 / (2.0 - self.r))
    }

    /// `(C0, C2) = ((2-r)^{-1}(1-r)^γ, (1-r)^{γ-2})` when `γ` is an integer,
    /// where both are real.
    pub fn paper_constants(&self) -> Option<(f64, f64)> {
        let g = self.gamma();
        if (g - g.round()).abs() > 1e-12 {
            return None;
        }
        let g = g.round() as i32;
        let b = 1.0 - self.r;
        Some((b.powi(g) / (2.0 - self.r), b.powi(g - 2)))
    }

    /// `â = γ^{-1/γ}(1-γ)^{1/γ-1}`, the stable scale in the `r > 2` case.
    pub fn a_hat(&self) -> f64 {
        let g = self.gamma();
        g.powf(-1.0 / g) * (1.0 - g).powf(1.0 / g - 1.0)
    }

    /// `(r-1)^γ/(2-r)`; `κ_X(θ) = amp·s^γ`.
    fn amp(&self) -> f64 {
        (self.r - 1.0).powf(self.gamma()) / (2.0 - self.r)
    }

    fn rho_coef(&self) -> f64 {
        (self.r - 1.0).powf(self.gamma() - 2.0)
    }

    fn unit_s(&self, theta: f64) -> Result<f64> {
        if theta < 0.0 {
            Ok(-theta * self.scale())
        } else {
            Err(Error::ThetaOutOfDomain(theta))
        }
    }

    pub fn kappa(&self, theta: f64) -> Result<f64> {
        let s = self.unit_s(theta)?;
        Ok(self.amp() * s.powf(self.gamma()))
    }

    pub fn laplace(&self, theta: f64) -> Result<f64> {
        Ok(self.kappa(theta)?.exp())
    }

    pub fn mean(&self, theta: f64) -> Result<f64> {
        let s = self.unit_s(theta)?;
        Ok(self.scale() * ((self.r - 1.0) * s).powf(self.gamma() - 1.0))
    }

    pub fn kappa_pp(&self, theta: f64) -> Result<f64> {
        let s = self.unit_s(theta)?;
        let c = self.scale();
        Ok(c * c * self.rho_coef() * s.powf(self.gamma() - 2.0))
    }

    /// `L(θ)κ″(θ)`, the Laplace transform of `α`.
    pub fn alpha_transform(&self, theta: f64) -> Result<f64> {
        Ok(self.laplace(theta)? * self.kappa_pp(theta)?)
    }

    pub fn theta_for_mean(&self, mu: f64) -> Result<f64> {
        if !(mu > 0.0) {
            return Err(Error::MeanOutOfDomain(mu));
        }
        let c = self.scale();
        let s = (mu / c).powf(1.0 / (self.gamma() - 1.0)) / (self.r - 1.0);
        Ok(-s / c)
    }

    pub fn variance_fn(&self, u: f64) -> f64 {
        self.a * u.powf(self.r)
    }

    /// Mass of the atom at the origin (`r < 2` only).
    pub fn atom(&self) -> f64 {
        match self.case() {
            PvfCase::CompoundPoisson => 1.0,
            PvfCase::Stable => 0.0,
        }
    }

    /// `ln` of the density of the continuous part of `β` at `y`.
    pub fn log_beta(&self, y: f64) -> Result<f64> {
        if y <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        let c = self.scale();
        let x = y / c;
        let l = match self.case() {
            PvfCase::CompoundPoisson => self.log_q_case1(x)?,
            PvfCase::Stable => {
                let ah = self.a_hat();
                let z = x / ah;
                if z < STABLE_SERIES_MIN {
                    return Ok(self.log_stable_q_integral(z)? - ah.ln() - c.ln());
                }
                let l = match self.stable_q(z) {
                    Ok(v) if v > 0.0 => v.ln(),
                    Ok(_) | Err(Error::SeriesDiverged(_)) => self.log_stable_q_integral(z)?,
                    Err(e) => return Err(e),
                };
                l - ah.ln()
            }
        };
        Ok(l - c.ln())
    }

    /// `ln q(x) = ln Σ_{n≥1} A^n x^{ng-1}/(n! Γ(ng))`, `g = -γ`.
    fn log_q_case1(&self, x: f64) -> Result<f64> {
        let g = -self.gamma();
        let la = self.amp().ln();
        let lx = x.ln();
        positive_log_series(x, 1, |n| {
            let n_f = n as f64;
            n_f * la + (n_f * g - 1.0) * lx - ln_factorial(n) - ln_gamma(n_f * g)
        })
    }

    /// `ln q̃(x) = ln Σ_{n≥0} (r-1)^{γ-2} A^n x^{ng+g+1}/(n! Γ(ng+g+2))`.
    fn log_qtilde_case1(&self, x: f64) -> Result<f64> {
        let g = -self.gamma();
        let la = self.amp().ln();
        let lx = x.ln();
        let lc = self.rho_coef().ln();
        positive_log_series(x, 0, |n| {
            let n_f = n as f64;
            lc + n_f * la + (n_f * g + g + 1.0) * lx - ln_factorial(n) - ln_gamma(n_f * g + g + 2.0)
        })
    }

    /// Positive stable density with Laplace transform `exp(-s^γ)`:
    /// `-(1/π) Σ_{n≥1} (-1)^n sin(nπγ) Γ(1+γn)/(n! y^{1+γn})`.
    pub fn stable_q(&self, y: f64) -> Result<f64> {
        let g = self.gamma();
        let ly = y.ln();
        let mut sum = 0.0;
        let mut biggest: f64 = 0.0;
        let mut prev = f64::INFINITY;
        for n in 1..=MAX_TERMS {
            let n_f = n as f64;
            let mag = (ln_gamma(1.0 + g * n_f) - ln_factorial(n) - (1.0 + g * n_f) * ly).exp();
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let t = -sign * (n_f * PI * g).sin() * mag / PI;
            sum += t;
            biggest = biggest.max(mag);
            if !sum.is_finite() {
                return Err(Error::SeriesDiverged(y));
            }
            if mag < prev && mag < 1e-17 * sum.abs() {
                if biggest > MAX_CANCELLATION * sum.abs() {
                    return Err(Error::SeriesDiverged(y));
                }
                return Ok(sum);
            }
            prev = mag;
        }
        Err(Error::SeriesDiverged(y))
    }

    /// `ln` of the same stable density from the integral representation
    /// `f(y) = γ/(1-γ) · y^{-1/(1-γ)} · π⁻¹∫₀^π A(u) e^{-A(u) z} du`,
    /// `z = y^{-γ/(1-γ)}`, `A(u) = (sin(γu)^γ sin((1-γ)u)^{1-γ} / sin u)^{1/(1-γ)}`.
    /// Stable where the series cancels, i.e. for small `y`.
    pub fn log_stable_q_integral(&self, y: f64) -> Result<f64> {
        if y <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        let g = self.gamma();
        let e = 1.0 / (1.0 - g);
        let log_a = move |u: f64| e * (g * (g * u).sin().ln() + (1.0 - g) * ((1.0 - g) * u).sin().ln() - u.sin().ln());
        // A is increasing on (0, π) from A(0+) = γ^{γ/(1-γ)}(1-γ)
        let a0 = (g * e * g.ln() + (1.0 - g).ln()).exp();
        let z = y.powf(-g * e);
        let integrand = |u: f64| {
            if u <= 0.0 || u >= PI {
                return 0.0;
            }
            let a = log_a(u).exp();
            let v = a * (-(a - a0) * z).exp();
            if v.is_finite() { v } else { 0.0 }
        };
        let opts = crate::quad::QuadOptions { abs_tol: 0.0, rel_tol: 1e-12, max_intervals: 2000 };
        let pts = [0.0, 0.25 * PI, 0.5 * PI, 0.75 * PI, PI];
        let i = crate::quad::integrate_pieces(integrand, &pts, &opts).require()?;
        Ok((g * e).ln() - e * y.ln() - PI.ln() + i.ln() - a0 * z)
    }

    /// Density of `ρ` at `y`.
    pub fn rho_density(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        let c = self.scale();
        let x = y / c;
        let g = self.gamma();
        // dρ_Y(y) = c² dρ_X(y/c)/c
        c * self.rho_coef() * x.powf(1.0 - g) / gamma(2.0 - g)
    }

    /// `α/β` at `y > 0` in the `r < 2` case.
    pub fn phi_case1(&self, y: f64) -> Result<f64> {
        let c = self.scale();
        let x = y / c;
        Ok(c * c * (self.log_qtilde_case1(x)? - self.log_q_case1(x)?).exp())
    }

    /// `α` density at `y` in the `r < 2` case.
    pub fn alpha_case1(&self, y: f64) -> Result<f64> {
        if y <= 0.0 {
            return Ok(0.0);
        }
        let c = self.scale();
        Ok(c * self.log_qtilde_case1(y / c)?.exp())
    }
}

/// `ln Σ_{n≥start} e^{t(n)}` for unimodal log-terms.
fn positive_log_series(x: f64, start: usize, log_term: impl Fn(usize) -> f64) -> Result<f64> {
    let mut acc = LogSum::new();
    let mut prev = f64::NEG_INFINITY;
    for n in start..start + MAX_TERMS {
        let t = log_term(n);
        acc.add(t);
        if t < prev && t < acc.value() - 39.2 {
            return Ok(acc.value());
        }
        prev = t;
    }
    Err(Error::SeriesDiverged(x))
}

/// Grid layout for the `r > 2` convolution, in units of `Y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PvfGrid {
    pub x_max: f64,
    pub points: usize,
}

impl PvfGrid {
    /// Resolves `e^{θx}`-weighted mass down to 1e-8 for θ ≤ `theta_max`.
    pub fn for_probe(theta_max: f64) -> Self {
        Self { x_max: 18.5 / -theta_max, points: 1 << 14 }
    }
}

/// `β` (continuous part) or `α` sampled on a uniform grid.
pub fn pvf_density(spec: &PvfSpec, kind: PvfKind, grid: PvfGrid) -> Result<GridDensity> {
    let n = grid.points;
    let h = grid.x_max / n as f64;
    match (spec.case(), kind) {
        (PvfCase::CompoundPoisson, PvfKind::Beta) => {
            let mut values = Vec::with_capacity(n + 1);
            values.push(0.0);
            for i in 1..=n {
                values.push(spec.log_beta(i as f64 * h)?.exp());
            }
            let g = -spec.gamma();
            // q(x) ≈ A x^{g-1}/Γ(g) near 0; the first cell is integrated analytically
            let c = spec.scale();
            let head = spec.amp() * (h / c).powf(g) / gamma(g + 1.0);
            values[0] = (2.0 * head / h - values[1]).max(0.0);
            Ok(GridDensity::new(h, values).with_atom(1.0))
        }
        (PvfCase::CompoundPoisson, PvfKind::Alpha) => {
            let values = (0..=n).map(|i| spec.alpha_case1(i as f64 * h)).collect::<Result<Vec<_>>>()?;
            Ok(GridDensity::new(h, values))
        }
        (PvfCase::Stable, PvfKind::Beta) => stable_beta_grid(spec, h, n),
        (PvfCase::Stable, PvfKind::Alpha) => {
            let beta = stable_beta_grid(spec, h, n)?;
            let c = spec.scale();
            let g = spec.gamma();
            let k = c * spec.rho_coef() * c.powf(g - 1.0);
            // ρ(y) = k·y^{1-γ}/Γ(2-γ)
            let p0 = move |u: f64| k * u.powf(2.0 - g) / gamma(3.0 - g);
            let p1 = move |u: f64| k * u.powf(3.0 - g) / ((3.0 - g) * gamma(2.0 - g));
            Ok(beta.convolve_kernel(p0, p1))
        }
    }
}

fn stable_beta_grid(spec: &PvfSpec, h: f64, n: usize) -> Result<GridDensity> {
    let mut values = Vec::with_capacity(n + 1);
    let mut cut = 0.0;
    let mut first_ok = f64::NAN;
    for i in 0..=n {
        let y = i as f64 * h;
        match spec.log_beta(y) {
            Ok(l) => {
                if first_ok.is_nan() && y > 0.0 {
                    first_ok = l.exp();
                }
                values.push(l.exp());
            }
            Err(Error::SeriesDiverged(_)) if first_ok.is_nan() => {
                cut = y;
                values.push(0.0);
            }
            Err(e) => return Err(e),
        }
    }
    // the density increases up to the cut, so cut·β(cut) bounds the lost mass
    let tail = if first_ok.is_nan() { 1.0 } else { cut * first_ok };
    Ok(GridDensity::new(h, values).with_tail_bound(tail))
}

fn oracle_thetas(spec: &PvfSpec) -> Vec<f64> {
    let c = spec.scale();
    probe_grid(-3.0 / c, -0.3 / c, 6)
}

/// Oracle checks for the `β` and `α` formulas, plus the explicitly printed
/// `r = 3/2` forms when applicable.
pub fn pvf_candidates(spec: &PvfSpec) -> Vec<CandidateCheck> {
    let thetas = oracle_thetas(spec);
    let s = *spec;
    let bp = half_line_breakpoints();
    let beta_laplace = move |t: f64| -> Result<f64> {
        let dens = laplace_oracle(|y| s.log_beta(y).map(f64::exp).unwrap_or(0.0), 0.0, f64::INFINITY, &bp, t)?;
        Ok(s.atom() + dens)
    };
    let label = |what: &str| format!("pvf({})/{what}", spec.r);
    let mut out = alloc::vec![CandidateCheck::run(label("beta-series"), 1e-5, &thetas, beta_laplace, |t| {
        s.laplace(t).unwrap_or(f64::NAN)
    })];
    match spec.case() {
        PvfCase::CompoundPoisson => {
            let bp = half_line_breakpoints();
            out.push(CandidateCheck::run(
                label("alpha-series"),
                1e-5,
                &thetas,
                |t| laplace_oracle(|y| s.alpha_case1(y).unwrap_or(f64::NAN), 0.0, f64::INFINITY, &bp, t),
                |t| s.alpha_transform(t).unwrap_or(f64::NAN),
            ));
            if spec.r == 1.5 && spec.a == 1.0 {
                let bp = half_line_breakpoints();
                out.push(CandidateCheck::run(
                    label("beta-printed-explicit"),
                    1e-5,
                    &thetas,
                    |t| {
                        let q = |x: f64| {
                            positive_log_series(x, 1, |n| {
                                n as f64 * 4f64.ln() - (n as f64 + 1.0) * x.ln() - ln_factorial(n) - ln_factorial(n - 1)
                            })
                            .map(f64::exp)
                            .unwrap_or(f64::NAN)
                        };
                        Ok(1.0 + laplace_oracle(q, 0.0, f64::INFINITY, &bp, t)?)
                    },
                    |t| s.laplace(t).unwrap_or(f64::NAN),
                ));
                let bp = half_line_breakpoints();
                out.push(CandidateCheck::run(
                    label("alpha-printed-explicit"),
                    1e-5,
                    &thetas,
                    |t| {
                        let a = |x: f64| {
                            positive_log_series(x, 0, |n| {
                                (n as f64 + 2.0) * (4f64.ln() + x.ln()) - ln_factorial(n) - ln_factorial(n + 2)
                            })
                            .map(f64::exp)
                            .unwrap_or(f64::NAN)
                        };
                        laplace_oracle(a, 0.0, f64::INFINITY, &bp, t)
                    },
                    |t| s.alpha_transform(t).unwrap_or(f64::NAN),
                ));
            }
        }
        PvfCase::Stable => {
            let grid = PvfGrid::for_probe(thetas[thetas.len() - 1]);
            let alpha = pvf_density(spec, PvfKind::Alpha, grid);
            out.push(CandidateCheck::run(
                label("alpha-grid"),
                1e-4,
                &thetas,
                |t| alpha.as_ref().map(|a| a.laplace(t)).map_err(Clone::clone),
                |t| s.alpha_transform(t).unwrap_or(f64::NAN),
            ));
        }
    }
    out
}

/// `φ = dα/dβ` after the `β` and `α` formulas pass the oracle. For `r > 2`
/// the grid is sized for probes `θ ≤ theta_max`.
pub fn pvf_rf(spec: &PvfSpec, theta_max: f64) -> Result<ReductionFunction> {
    for check in pvf_candidates(spec).iter().filter(|c| !c.name.contains("printed")) {
        check.require()?;
    }
    let label = format!("pvf({})", spec.r);
    match spec.case() {
        PvfCase::CompoundPoisson => {
            let s = *spec;
            Ok(ReductionFunction::density_ratio(label, move |y| s.phi_case1(y).unwrap_or(f64::NAN))
                .with_value_at_zero_atom(0.0))
        }
        PvfCase::Stable => {
            let grid = PvfGrid::for_probe(theta_max);
            let beta = pvf_density(spec, PvfKind::Beta, grid)?;
            let alpha = pvf_density(spec, PvfKind::Alpha, grid)?;
            Ok(ReductionFunction::grid_ratio(label, &alpha, &beta))
        }
    }
}
