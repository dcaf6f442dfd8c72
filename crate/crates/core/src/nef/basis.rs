#[allow(unused_imports)]
use num_traits::Float as _;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::math::LogSum;

/// Hard cap on the number of atoms summed for one Laplace evaluation.
pub const MAX_ATOMS: usize = 400_000;

type LogWeightFn = dyn Fn(usize) -> f64 + Send + Sync;
type LogDensityFn = dyn Fn(f64) -> f64 + Send + Sync;

/// Weights `β_n` on the nonnegative integers, given as `ln β_n`
/// (`-inf` for a zero weight).
#[derive(Clone)]
pub struct AtomBasis {
    log_weight: Arc<LogWeightFn>,
    support_max: Option<usize>,
}

impl fmt::Debug for AtomBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AtomBasis").field("support_max", &self.support_max).finish()
    }
}

impl AtomBasis {
    pub fn from_log_weights(f: impl Fn(usize) -> f64 + Send + Sync + 'static) -> Self {
        Self { log_weight: Arc::new(f), support_max: None }
    }

    pub fn with_support_max(mut self, m: usize) -> Self {
        self.support_max = Some(m);
        self
    }

    /// A finite table of weights; atoms past the table carry no mass.
    pub fn from_table(weights: Vec<f64>) -> Self {
        let m = weights.len().saturating_sub(1);
        let logs: Vec<f64> = weights.iter().map(|&w| if w > 0.0 { w.ln() } else { f64::NEG_INFINITY }).collect();
        Self::from_log_weights(move |n| logs.get(n).copied().unwrap_or(f64::NEG_INFINITY)).with_support_max(m)
    }

    pub fn log_weight(&self, n: usize) -> f64 {
        match self.support_max {
            Some(m) if n > m => f64::NEG_INFINITY,
            _ => (self.log_weight)(n),
        }
    }

    pub fn weight(&self, n: usize) -> f64 {
        self.log_weight(n).exp()
    }

    pub fn support_max(&self) -> Option<usize> {
        self.support_max
    }

    /// `ln(β_n e^{nθ})` for `n = 0, 1, ...` until the neglected tail is below
    /// `1e-16` of the partial sum. `theta_hi` is the right end of Θ and feeds the
    /// geometric tail bound.
    pub fn log_terms(&self, theta: f64, theta_hi: f64) -> Result<Vec<f64>> {
        let r_limit = if theta_hi.is_finite() { (theta - theta_hi).exp() } else { 0.0 };
        let mut terms = Vec::new();
        let mut acc = LogSum::new();
        let mut prev = f64::NEG_INFINITY;
        for n in 0.. {
            if let Some(m) = self.support_max {
                if n > m {
                    break;
                }
            }
            if n >= MAX_ATOMS {
                return Err(Error::NonConvergent { estimate: acc.value(), error: f64::INFINITY });
            }
            let t = self.log_weight(n) + theta * n as f64;
            terms.push(t);
            acc.add(t);
            if t.is_finite() && prev.is_finite() && n >= 2 {
                let r = (t - prev).exp().max(r_limit);
                if r < 1.0 {
                    let tail = t + (r / (1.0 - r)).ln();
                    if tail < acc.value() - 36.8 {
                        break;
                    }
                }
            }
            prev = t;
        }
        Ok(terms)
    }

    /// Right end of Θ from the root test `-ln limsup β_n^{1/n}`, estimated on
    /// the last ten retained weights of a table of length `n_max + 1`.
    pub fn estimate_theta_hi(&self, n_max: usize) -> f64 {
        if self.support_max.is_some_and(|m| m <= n_max) {
            return f64::INFINITY;
        }
        let lo = n_max.saturating_sub(9).max(1);
        let mut best = f64::NEG_INFINITY;
        for n in lo..=n_max {
            let lw = self.log_weight(n);
            if lw.is_finite() {
                best = best.max(lw / n as f64);
            }
        }
        -best
    }
}

/// A nonnegative density on an interval, given as `ln f(x)`, with an
/// optional point mass at the origin.
#[derive(Clone)]
pub struct DensityBasis {
    log_density: Arc<LogDensityFn>,
    pub lower: f64,
    pub upper: f64,
    /// Mass of an atom at `x = 0` (zero for purely continuous bases).
    pub atom_at_zero: f64,
    /// Interior points that split the quadrature range.
    pub breakpoints: Vec<f64>,
}

impl fmt::Debug for DensityBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensityBasis")
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .field("atom_at_zero", &self.atom_at_zero)
            .finish()
    }
}

impl DensityBasis {
    pub fn new(
        lower: f64,
        upper: f64,
        log_density: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { log_density: Arc::new(log_density), lower, upper, atom_at_zero: 0.0, breakpoints: Vec::new() }
    }

    pub fn with_atom_at_zero(mut self, mass: f64) -> Self {
        self.atom_at_zero = mass;
        self
    }

    pub fn with_breakpoints(mut self, pts: Vec<f64>) -> Self {
        self.breakpoints = pts;
        self
    }

    pub fn log_density(&self, x: f64) -> f64 {
        if x < self.lower || x > self.upper {
            f64::NEG_INFINITY
        } else {
            (self.log_density)(x)
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        self.log_density(x).exp()
    }

    /// Quadrature split points: support ends with the breakpoints in between.
    pub fn pieces(&self) -> Vec<f64> {
        let mut pts = Vec::with_capacity(self.breakpoints.len() + 2);
        pts.push(self.lower);
        pts.extend(self.breakpoints.iter().copied().filter(|&p| p > self.lower && p < self.upper));
        pts.push(self.upper);
        pts
    }
}

#[derive(Debug, Clone)]
pub enum Basis {
    Atoms(AtomBasis),
    Density(DensityBasis),
}
