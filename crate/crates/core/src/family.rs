//! Registry of named families.

#[allow(unused_imports)]
use num_traits::Float as _;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, FRAC_PI_4, LN_2, PI};
use core::fmt;
use core::str::FromStr;

use num_complex::Complex64;

use crate::continuous::{
    half_line_breakpoints, ig_density, ig_rf, pvf_rf, qvf_rf, ressel_beta_log_density, ressel_rf, PvfSpec, QvfSpec,
    ResselGrid, RESSEL_DEFAULT_MMAX,
};
use crate::discrete::{beta_table, ln_arcsine_polynomial, pipeline_order, DiscreteIdFamily};
use crate::error::{Error, Result};
use crate::math::{ln_binomial, ln_factorial, ln_gamma, ln_gamma_complex, LN_SQRT_2PI};
use crate::nef::{AtomBasis, Basis, ContinuousSampler, DensityBasis, Nef, ThetaInterval};
use crate::rf::ReductionFunction;
use crate::series::RealSeries;

/// Tolerance on the Ressel truncation tail at the largest probe.
const RESSEL_TAIL_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Poisson,
    Binomial(u32),
    NegBin(f64),
    Gamma(f64),
    Normal,
    Ghs(f64),
    Abel,
    Takacs,
    StrictArcsine,
    LargeArcsine,
    InverseGaussian,
    Ressel,
    Pvf(f64),
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Poisson => f.write_str("poisson"),
            Family::Binomial(m) => write!(f, "binomial({m})"),
            Family::NegBin(m) => write!(f, "negbin({m})"),
            Family::Gamma(m) => write!(f, "gamma({m})"),
            Family::Normal => f.write_str("normal"),
            Family::Ghs(m) => write!(f, "ghs({m})"),
            Family::Abel => f.write_str("abel"),
            Family::Takacs => f.write_str("takacs"),
            Family::StrictArcsine => f.write_str("strict-arcsine"),
            Family::LargeArcsine => f.write_str("large-arcsine"),
            Family::InverseGaussian => f.write_str("inverse-gaussian"),
            Family::Ressel => f.write_str("ressel"),
            Family::Pvf(r) => write!(f, "pvf({r})"),
        }
    }
}

impl serde::Serialize for Family {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownFamily(s.to_string());
        let s = s.trim();
        let (name, arg) = match s.find('(') {
            Some(i) if s.ends_with(')') => (&s[..i], Some(s[i + 1..s.len() - 1].trim())),
            Some(_) => return Err(unknown()),
            None => (s, None),
        };
        let real = |a: Option<&str>| -> Result<f64> {
            let v: f64 = a.ok_or_else(unknown)?.parse().map_err(|_| unknown())?;
            if v > 0.0 && v.is_finite() { Ok(v) } else { Err(Error::InvalidParameter(format!("{s}: parameter must be positive"))) }
        };
        let fam = match (name, arg) {
            ("poisson", None) => Family::Poisson,
            ("normal", None) => Family::Normal,
            ("abel", None) => Family::Abel,
            ("takacs", None) => Family::Takacs,
            ("strict-arcsine", None) => Family::StrictArcsine,
            ("large-arcsine", None) => Family::LargeArcsine,
            ("inverse-gaussian", None) => Family::InverseGaussian,
            ("ressel", None) => Family::Ressel,
            ("binomial", Some(a)) => Family::Binomial(a.parse().map_err(|_| unknown())?),
            ("negbin", a @ Some(_)) => Family::NegBin(real(a)?),
            ("gamma", a @ Some(_)) => Family::Gamma(real(a)?),
            ("ghs", a @ Some(_)) => Family::Ghs(real(a)?),
            ("pvf", a @ Some(_)) => {
                let r = real(a)?;
                PvfSpec::unit(r)?;
                Family::Pvf(r)
            }
            _ => return Err(unknown()),
        };
        if let Family::Binomial(0) = fam {
            return Err(Error::InvalidParameter("binomial(0)".into()));
        }
        Ok(fam)
    }
}

impl Family {
    /// One representative of every registered family.
    pub fn defaults() -> Vec<Family> {
        alloc::vec![
            Family::Normal,
            Family::Poisson,
            Family::Binomial(2),
            Family::NegBin(2.0),
            Family::Gamma(2.0),
            Family::Ghs(2.0),
            Family::Abel,
            Family::Takacs,
            Family::StrictArcsine,
            Family::LargeArcsine,
            Family::InverseGaussian,
            Family::Ressel,
            Family::Pvf(1.5),
            Family::Pvf(2.5),
        ]
    }

    pub fn name(&self) -> String {
        self.to_string()
    }

    pub fn is_discrete(&self) -> bool {
        matches!(
            self,
            Family::Poisson
                | Family::Binomial(_)
                | Family::NegBin(_)
                | Family::Abel
                | Family::Takacs
                | Family::StrictArcsine
                | Family::LargeArcsine
        )
    }

    /// The six quadratic-variance rows.
    pub fn qvf(&self) -> Option<QvfSpec> {
        Some(match *self {
            Family::Normal => QvfSpec::normal(),
            Family::Poisson => QvfSpec::poisson(),
            Family::Binomial(m) => QvfSpec::binomial(m as f64),
            Family::NegBin(m) => QvfSpec::negbin(m),
            Family::Gamma(m) => QvfSpec::gamma(m),
            Family::Ghs(m) => QvfSpec::ghs(m),
            _ => return None,
        })
    }

    /// Ascending coefficients of a polynomial variance function.
    pub fn variance_polynomial(&self) -> Option<Vec<f64>> {
        if let Some(q) = self.qvf() {
            return Some(alloc::vec![q.a0, q.a1, q.a2]);
        }
        Some(match self {
            Family::Abel => alloc::vec![0.0, 1.0, 2.0, 1.0],
            Family::Takacs => alloc::vec![0.0, 1.0, 3.0, 2.0],
            Family::StrictArcsine => alloc::vec![0.0, 1.0, 0.0, 1.0],
            Family::LargeArcsine => alloc::vec![0.0, 1.0, 2.0, 2.0],
            Family::InverseGaussian => alloc::vec![0.0, 0.0, 0.0, 1.0],
            Family::Ressel => alloc::vec![0.0, 0.0, 1.0, 1.0],
            _ => return None,
        })
    }

    pub fn variance_fn(&self, u: f64) -> f64 {
        match self {
            Family::Pvf(r) => u.powf(*r),
            _ => self.variance_polynomial().map(|p| p.iter().rev().fold(0.0, |acc, &a| acc * u + a)).unwrap_or(f64::NAN),
        }
    }

    pub fn pvf_spec(&self) -> Option<PvfSpec> {
        match self {
            Family::Pvf(r) => PvfSpec::unit(*r).ok(),
            _ => None,
        }
    }

    /// `g` with `Σ β_n w^n = h(w)/w`, `h = w·g(h)`, to order `order`.
    pub fn lagrange_generator(&self, order: usize) -> Option<RealSeries> {
        match self {
            Family::Abel => Some(RealSeries::exp_z(order)),
            Family::Takacs => Some(RealSeries::geometric(order)),
            Family::LargeArcsine => RealSeries::arcsin_z(order).exp().ok(),
            _ => None,
        }
    }

    pub fn theta_interval(&self) -> ThetaInterval {
        match self {
            Family::Poisson | Family::Binomial(_) | Family::Normal => ThetaInterval::REAL_LINE,
            Family::NegBin(_) => ThetaInterval::below(LN_2),
            Family::Gamma(_) => ThetaInterval::below(1.0),
            Family::Ghs(_) => ThetaInterval { lo: -FRAC_PI_2, hi: FRAC_PI_2 },
            Family::Abel => ThetaInterval::below(-1.0),
            Family::Takacs => ThetaInterval::below(-(4f64.ln())),
            Family::LargeArcsine => ThetaInterval::below(-FRAC_PI_4 - 0.5 * LN_2),
            Family::StrictArcsine | Family::InverseGaussian | Family::Ressel | Family::Pvf(_) => {
                ThetaInterval::below(0.0)
            }
        }
    }

    /// Probe range `[lo, hi]` strictly inside Θ used by validation suites.
    pub fn probe_range(&self) -> (f64, f64) {
        match self {
            Family::Poisson | Family::Binomial(_) | Family::Normal => (-2.0, 2.0),
            Family::NegBin(_) => (-2.0, 0.5),
            Family::Gamma(_) => (-2.0, 0.8),
            Family::Ghs(_) => (-1.3, 1.3),
            Family::Abel => (-3.0, -1.2),
            Family::Takacs => (-3.5, -1.6),
            Family::LargeArcsine => (-3.5, -1.35),
            Family::StrictArcsine => (-3.0, -0.2),
            Family::InverseGaussian => (-3.0, -0.2),
            Family::Ressel => (-3.0, -0.5),
            Family::Pvf(_) => (-3.0, -0.3),
        }
    }

    pub fn probe_thetas(&self, count: usize) -> Vec<f64> {
        let (lo, hi) = self.probe_range();
        crate::continuous::probe_grid(lo, hi, count)
    }

    pub fn nef(&self) -> Result<Nef> {
        let label = self.name();
        let theta = self.theta_interval();
        let atoms = |f: AtomBasis| Basis::Atoms(f);
        let nef = match *self {
            Family::Poisson => Nef::new(label, atoms(AtomBasis::from_log_weights(|n| -1.0 - ln_factorial(n))), theta)
                .with_exact_mean_inverse(f64::ln),
            Family::Binomial(m) => {
                let mf = m as f64;
                let basis = AtomBasis::from_log_weights(move |n| ln_binomial(mf, n as f64) - mf * LN_2)
                    .with_support_max(m as usize);
                Nef::new(label, atoms(basis), theta).with_exact_mean_inverse(move |mu| (mu / (mf - mu)).ln())
            }
            Family::NegBin(m) => {
                let basis = AtomBasis::from_log_weights(move |n| {
                    let k = n as f64;
                    ln_gamma(k + m) - ln_gamma(m) - ln_factorial(n) - (k + m) * LN_2
                });
                Nef::new(label, atoms(basis), theta).with_exact_mean_inverse(move |mu| (2.0 * mu / (m + mu)).ln())
            }
            Family::Abel => {
                let basis = AtomBasis::from_log_weights(|n| (n as f64 - 1.0) * (n as f64 + 1.0).ln() - ln_factorial(n));
                Nef::new(label, atoms(basis), theta)
            }
            Family::Takacs => {
                let basis = AtomBasis::from_log_weights(|n| ln_factorial(2 * n) - ln_factorial(n) - ln_factorial(n + 1));
                Nef::new(label, atoms(basis), theta)
            }
            Family::StrictArcsine => {
                let basis = AtomBasis::from_log_weights(|n| ln_arcsine_polynomial(1.0, n) - ln_factorial(n));
                Nef::new(label, atoms(basis), theta)
            }
            Family::LargeArcsine => {
                let table: Vec<f64> =
                    (0..LARGE_ARCSINE_TABLE).map(|n| ln_arcsine_polynomial(n as f64 + 1.0, n) - ln_factorial(n + 1)).collect();
                let basis = AtomBasis::from_log_weights(move |n| match table.get(n) {
                    Some(&v) => v,
                    None => ln_arcsine_polynomial(n as f64 + 1.0, n) - ln_factorial(n + 1),
                });
                Nef::new(label, atoms(basis), theta)
            }
            Family::Normal => {
                let d = DensityBasis::new(f64::NEG_INFINITY, f64::INFINITY, |x| -0.5 * x * x - LN_SQRT_2PI)
                    .with_breakpoints(alloc::vec![0.0]);
                Nef::new(label, Basis::Density(d), theta)
                    .with_sampler(ContinuousSampler::Normal)
                    .with_exact_mean_inverse(|mu| mu)
            }
            Family::Gamma(m) => {
                let d = DensityBasis::new(0.0, f64::INFINITY, move |x| (m - 1.0) * x.ln() - x - ln_gamma(m))
                    .with_breakpoints(half_line_breakpoints());
                Nef::new(label, Basis::Density(d), theta)
                    .with_sampler(ContinuousSampler::Gamma { shape: m })
                    .with_exact_mean_inverse(move |mu| 1.0 - m / mu)
            }
            Family::Ghs(m) => {
                let c = (m - 2.0) * LN_2 - PI.ln() - ln_gamma(m);
                let d = DensityBasis::new(f64::NEG_INFINITY, f64::INFINITY, move |x| {
                    c + 2.0 * ln_gamma_complex(Complex64::new(0.5 * m, 0.5 * x)).re
                })
                .with_breakpoints(alloc::vec![-10.0, 0.0, 10.0]);
                Nef::new(label, Basis::Density(d), theta).with_exact_mean_inverse(move |mu| (mu / m).atan())
            }
            Family::InverseGaussian => {
                let d = DensityBasis::new(0.0, f64::INFINITY, |x| ig_density(x).ln())
                    .with_breakpoints(half_line_breakpoints());
                Nef::new(label, Basis::Density(d), theta)
                    .with_sampler(ContinuousSampler::InverseGaussian)
                    .with_exact_mean_inverse(|mu| -0.5 / (mu * mu))
            }
            Family::Ressel => {
                let d = DensityBasis::new(0.0, f64::INFINITY, ressel_beta_log_density)
                    .with_breakpoints(half_line_breakpoints());
                Nef::new(label, Basis::Density(d), theta)
            }
            Family::Pvf(r) => {
                let spec = PvfSpec::unit(r)?;
                let d = DensityBasis::new(0.0, f64::INFINITY, move |y| spec.log_beta(y).unwrap_or(f64::NEG_INFINITY))
                    .with_breakpoints(half_line_breakpoints())
                    .with_atom_at_zero(spec.atom());
                Nef::new(label, Basis::Density(d), theta)
                    .with_exact_mean_inverse(move |mu| spec.theta_for_mean(mu).unwrap_or(f64::NAN))
            }
        };
        Ok(nef)
    }

    /// Closed-form `κ″(θ)` where one is known.
    pub fn kappa_pp_exact(&self, theta: f64) -> Option<f64> {
        let e = theta.exp();
        Some(match *self {
            Family::Poisson => e,
            Family::Binomial(m) => m as f64 * e / ((1.0 + e) * (1.0 + e)),
            Family::NegBin(m) => {
                let q = 0.5 * e;
                m * q / ((1.0 - q) * (1.0 - q))
            }
            Family::Gamma(m) => m / ((1.0 - theta) * (1.0 - theta)),
            Family::Normal => 1.0,
            Family::Ghs(m) => m / (theta.cos() * theta.cos()),
            Family::StrictArcsine => e * (1.0 - e * e).powf(-1.5),
            Family::InverseGaussian => (-2.0 * theta).powf(-1.5),
            Family::Pvf(r) => PvfSpec::unit(r).ok()?.kappa_pp(theta).ok()?,
            _ => return None,
        })
    }

    /// Pipeline tables for an infinitely divisible family on ℕ.
    pub fn pipeline(&self, order: usize) -> Result<DiscreteIdFamily> {
        if !self.is_discrete() {
            return Err(Error::RfUnavailable(format!("{self} is not a family on ℕ")));
        }
        let nef = self.nef()?;
        let mut fam = DiscreteIdFamily::from_beta(beta_table(&nef, order)?)?;
        fam.generator = self.lagrange_generator(order + 2);
        Ok(fam)
    }

    /// Pipeline order that resolves the tilted weights at the top probe.
    pub fn default_order(&self) -> Result<usize> {
        pipeline_order(&self.nef()?, self.probe_range().1)
    }

    /// The shipped reduction function.
    pub fn reduction_function(&self) -> Result<ReductionFunction> {
        let label = self.name();
        let rf = match self {
            f if f.qvf().is_some() => qvf_rf(f.qvf().unwrap_or_else(QvfSpec::normal))?,
            Family::Abel | Family::Takacs | Family::StrictArcsine | Family::LargeArcsine => {
                self.pipeline(self.default_order()?)?.reduction_fn()?
            }
            Family::InverseGaussian => ig_rf()?,
            Family::Ressel => {
                let top = self.probe_range().1;
                ressel_rf(RESSEL_DEFAULT_MMAX, ResselGrid::for_probe(top), top, RESSEL_TAIL_TOL)?
            }
            Family::Pvf(r) => pvf_rf(&PvfSpec::unit(*r)?, self.probe_range().1)?,
            _ => return Err(Error::RfUnavailable(label)),
        };
        Ok(rf.with_label(label))
    }
}

const LARGE_ARCSINE_TABLE: usize = 1024;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trip() {
        for f in Family::defaults() {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
        }
        assert_eq!("binomial(3)".parse::<Family>().unwrap(), Family::Binomial(3));
        assert!(matches!("unknown".parse::<Family>(), Err(Error::UnknownFamily(_))));
        assert!(matches!("poisson(2)".parse::<Family>(), Err(Error::UnknownFamily(_))));
        assert!("pvf(2)".parse::<Family>().is_err());
        assert!("gamma(-1)".parse::<Family>().is_err());
    }

    #[test]
    fn laplace_examples() {
        let p = Family::Poisson.nef().unwrap();
        assert!((p.laplace(0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((p.laplace(LN_2).unwrap() - 1f64.exp()).abs() < 1e-14);
        let b = Family::Binomial(2).nef().unwrap();
        for t in [-1.0, 0.3, 2.0] {
            let e = f64::exp(t);
            assert!((b.laplace(t).unwrap() - (1.0 + e) * (1.0 + e) / 4.0).abs() < 1e-14);
        }
    }

    #[test]
    fn cumulant_examples() {
        let c = Family::Poisson.nef().unwrap().cumulant_derivs(0.0).unwrap();
        assert!(c.kappa.abs() < 1e-15 && (c.mean - 1.0).abs() < 1e-14 && (c.variance - 1.0).abs() < 1e-12);
        let n = Family::Normal.nef().unwrap();
        for t in [-1.5, 0.0, 0.7] {
            assert!((n.cumulant_derivs(t).unwrap().variance - 1.0).abs() < 1e-10);
        }
        let b = Family::Binomial(2).nef().unwrap().cumulant_derivs(0.0).unwrap();
        assert!((b.variance - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mean_inverse_examples() {
        let p = Family::Poisson.nef().unwrap();
        assert!(p.mean_inverse(1.0).unwrap().abs() < 1e-12);
        assert!((p.mean_inverse(2.0).unwrap() - LN_2).abs() < 1e-10);
        let g = Family::Gamma(1.0).nef().unwrap();
        assert!((g.mean_inverse(2.0).unwrap() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn tilted_examples() {
        let p = Family::Poisson.nef().unwrap();
        assert!((p.tilted_pmf_or_pdf(LN_2, 0.0).unwrap() - (-2.0f64).exp()).abs() < 1e-15);
        assert!((p.tilted_pmf_or_pdf(0.0, 3.0).unwrap() - (-1.0 - ln_factorial(3)).exp()).abs() < 1e-15);
        let b = Family::Binomial(2).nef().unwrap();
        let t = 0.8;
        let e = f64::exp(t);
        assert!((b.tilted_pmf_or_pdf(t, 2.0).unwrap() - e * e / ((1.0 + e) * (1.0 + e))).abs() < 1e-15);
    }

    #[test]
    fn closed_form_kappa_pp_agrees_with_summation() {
        for f in Family::defaults() {
            if matches!(f, Family::Pvf(_)) {
                continue;
            }
            let nef = f.nef().unwrap();
            for t in f.probe_thetas(5) {
                if let Some(exact) = f.kappa_pp_exact(t) {
                    let v = nef.cumulant_derivs(t).unwrap().variance;
                    assert!((v - exact).abs() < 1e-9 * exact, "{f} at {t}: {v} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn variance_function_evaluates() {
        assert_eq!(Family::Abel.variance_fn(1.0), 4.0);
        assert_eq!(Family::Ressel.variance_fn(2.0), 12.0);
        assert_eq!(Family::Pvf(1.5).variance_fn(4.0), 8.0);
        assert_eq!(Family::Ghs(2.0).variance_fn(2.0), 4.0);
    }
}
