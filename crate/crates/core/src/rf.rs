//! Reduction functions: maps `φ` with `E_θ[φ(ξ)] = κ″(θ)` for every θ.

#[allow(unused_imports)]
use num_traits::Float as _;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::continuous::GridDensity;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RfKind {
    ClosedForm,
    AtomTable,
    /// `dα/dβ` evaluated pointwise from two density formulas.
    DensityRatio,
    /// `dα/dβ` from densities sampled on a common grid.
    DensityRatioGrid,
}

impl RfKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RfKind::ClosedForm => "closed-form",
            RfKind::AtomTable => "atom-table",
            RfKind::DensityRatio => "density-ratio",
            RfKind::DensityRatioGrid => "density-ratio-grid",
        }
    }
}

type PointFn = dyn Fn(f64) -> f64 + Send + Sync;

#[derive(Clone)]
enum Repr {
    Point(Arc<PointFn>),
    /// `φ(n)`; `None` where `β_n = 0`.
    Table(Vec<Option<f64>>),
    /// Linear interpolation of `values` on `x = i·h`.
    Grid { h: f64, values: Vec<f64> },
}

#[derive(Clone)]
pub struct ReductionFunction {
    pub label: String,
    pub kind: RfKind,
    repr: Repr,
    /// Value on an atom at the origin, when the basis carries one.
    at_zero: Option<f64>,
}

impl fmt::Debug for ReductionFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReductionFunction").field("label", &self.label).field("kind", &self.kind).finish()
    }
}

impl ReductionFunction {
    pub fn closed_form(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { label: label.into(), kind: RfKind::ClosedForm, repr: Repr::Point(Arc::new(f)), at_zero: None }
    }

    pub fn density_ratio(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { label: label.into(), kind: RfKind::DensityRatio, repr: Repr::Point(Arc::new(f)), at_zero: None }
    }

    pub fn atom_table(label: impl Into<String>, phi: Vec<Option<f64>>) -> Self {
        Self { label: label.into(), kind: RfKind::AtomTable, repr: Repr::Table(phi), at_zero: None }
    }

    /// `α/β` on the grid shared by the two densities; zero where `β` vanishes.
    pub fn grid_ratio(label: impl Into<String>, alpha: &GridDensity, beta: &GridDensity) -> Self {
        let values = alpha
            .values
            .iter()
            .zip(&beta.values)
            .map(|(&a, &b)| if b > 0.0 { a / b } else { 0.0 })
            .collect();
        Self { label: label.into(), kind: RfKind::DensityRatioGrid, repr: Repr::Grid { h: beta.h, values }, at_zero: None }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_value_at_zero_atom(mut self, v: f64) -> Self {
        self.at_zero = Some(v);
        self
    }

    /// `φ` on the basis atom at the origin, if any.
    pub fn value_at_zero_atom(&self) -> Option<f64> {
        self.at_zero
    }

    /// `φ(x)`; `None` outside the tabulated range or where `β` has no mass.
    pub fn eval(&self, x: f64) -> Option<f64> {
        match &self.repr {
            Repr::Point(f) => Some(f(x)),
            Repr::Table(t) => {
                if x < 0.0 || x.fract() != 0.0 {
                    None
                } else {
                    t.get(x as usize).copied().flatten()
                }
            }
            Repr::Grid { h, values } => {
                let s = x / h;
                if !(s >= 0.0) || s > (values.len() - 1) as f64 {
                    return None;
                }
                let i = (s as usize).min(values.len() - 2);
                let w = s - i as f64;
                Some(values[i] * (1.0 - w) + values[i + 1] * w)
            }
        }
    }

    /// Table entries for the atom representation.
    pub fn table(&self) -> Option<&[Option<f64>]> {
        match &self.repr {
            Repr::Table(t) => Some(t),
            _ => None,
        }
    }

    /// Grid spacing and node values for the grid representation.
    pub fn grid(&self) -> Option<(f64, &[f64])> {
        match &self.repr {
            Repr::Grid { h, values } => Some((*h, values)),
            _ => None,
        }
    }

    /// Largest argument at which a table or grid is defined.
    pub fn domain_max(&self) -> f64 {
        match &self.repr {
            Repr::Point(_) => f64::INFINITY,
            Repr::Table(t) => (t.len() - 1) as f64,
            Repr::Grid { h, values } => h * (values.len() - 1) as f64,
        }
    }
}
