//! Validation suites: the master identity `E_θ[φ(ξ)] = κ″(θ)`, parametric
//! variance-function checks and the structural invariants of each NEF.

#[allow(unused_imports)]
use num_traits::Float as _;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::Serialize;

use crate::continuous::{ig_candidates, pvf_candidates, CandidateCheck, GridDensity};
use crate::error::{Error, Result};
use crate::family::Family;
use crate::nef::{Basis, Nef};
use crate::quad::{integrate_pieces, QuadOptions};
use crate::rf::ReductionFunction;

/// Probe points per family in the default suites.
pub const DEFAULT_PROBES: usize = 12;

/// Atoms whose tilted mass exceeds this must have a defined `φ`.
const MISSING_MASS: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityProbe {
    pub theta: f64,
    pub target: f64,
    pub computed: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MasterIdentityReport {
    pub family: String,
    pub rf_kind: &'static str,
    pub tolerance: f64,
    pub probes: Vec<IdentityProbe>,
    pub max_rel_err: f64,
    pub passed: bool,
}

/// Tolerance on `|E_θ[φ] − κ″| / κ″` by how `φ` is represented.
pub fn master_tolerance(family: Family) -> f64 {
    match family {
        f if f.is_discrete() => 1e-6,
        Family::Normal | Family::Gamma(_) | Family::Ghs(_) => 1e-6,
        Family::InverseGaussian | Family::Pvf(_) => 1e-4,
        _ => 1e-2,
    }
}

/// `∫ φ dF_θ`: a sum over atoms, quadrature for pointwise `φ`, and exact
/// piecewise-linear integration of `φ·β` for grid `φ`.
pub fn expectation_of_rf(nef: &Nef, rf: &ReductionFunction, theta: f64) -> Result<f64> {
    match &nef.basis {
        Basis::Atoms(_) => {
            let mut acc = 0.0;
            for (n, p) in nef.tilted_pmf_table(theta)?.into_iter().enumerate() {
                match rf.eval(n as f64) {
                    Some(v) => acc += v * p,
                    None if p > MISSING_MASS => {
                        return Err(Error::RfUnavailable(format!("{}: φ({n}) missing, mass {p:e}", rf.label)))
                    }
                    None => {}
                }
            }
            Ok(acc)
        }
        Basis::Density(d) => {
            let kappa = nef.log_laplace(theta)?;
            let atom = match rf.value_at_zero_atom() {
                Some(v) if d.atom_at_zero > 0.0 => v * d.atom_at_zero * (-kappa).exp(),
                _ => 0.0,
            };
            if let Some((h, phi)) = rf.grid() {
                let prod: Vec<f64> =
                    phi.iter().enumerate().map(|(i, &p)| if i == 0 { 0.0 } else { p * d.density(i as f64 * h) }).collect();
                let g = GridDensity::new(h, prod);
                return Ok(g.laplace(theta) * (-kappa).exp() + atom);
            }
            let opts = QuadOptions { abs_tol: 0.0, rel_tol: 1e-11, max_intervals: 8000 };
            let body = integrate_pieces(
                |x| {
                    let w = (d.log_density(x) + theta * x - kappa).exp();
                    if w == 0.0 {
                        0.0
                    } else {
                        rf.eval(x).unwrap_or(f64::NAN) * w
                    }
                },
                &d.pieces(),
                &opts,
            );
            if !body.converged && !(body.abs_err <= 1e-8 * body.value.abs()) {
                return Err(Error::NonConvergent { estimate: body.value, error: body.abs_err });
            }
            Ok(body.value + atom)
        }
    }
}

/// `κ″(θ)` from the closed form when known, else by tilted moments.
pub fn kappa_pp(family: Family, nef: &Nef, theta: f64) -> Result<f64> {
    match family.kappa_pp_exact(theta) {
        Some(v) => Ok(v),
        None => Ok(nef.cumulant_derivs(theta)?.variance),
    }
}

pub fn master_identity(family: Family, probes: usize, tol: Option<f64>) -> Result<MasterIdentityReport> {
    let nef = family.nef()?;
    let rf = family.reduction_function()?;
    master_identity_with(family, &nef, &rf, &family.probe_thetas(probes), tol.unwrap_or(master_tolerance(family)))
}

pub fn master_identity_with(
    family: Family,
    nef: &Nef,
    rf: &ReductionFunction,
    thetas: &[f64],
    tolerance: f64,
) -> Result<MasterIdentityReport> {
    let mut probes = Vec::with_capacity(thetas.len());
    let mut worst: f64 = 0.0;
    for &theta in thetas {
        let target = kappa_pp(family, nef, theta)?;
        let computed = expectation_of_rf(nef, rf, theta)?;
        let rel_err = ((computed - target) / target).abs();
        let rel_err = if rel_err.is_nan() { f64::INFINITY } else { rel_err };
        worst = worst.max(rel_err);
        probes.push(IdentityProbe { theta, target, computed, rel_err });
    }
    Ok(MasterIdentityReport {
        family: family.name(),
        rf_kind: rf.kind.as_str(),
        tolerance,
        probes,
        max_rel_err: worst,
        passed: worst <= tolerance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VfReport {
    pub family: String,
    pub tolerance: f64,
    /// `max |κ″ − V(κ′)| / max(1, κ″)`.
    pub max_deviation: f64,
    pub passed: bool,
}

pub fn vf_tolerance(family: Family) -> f64 {
    match family {
        Family::InverseGaussian => 1e-5,
        Family::Ressel | Family::Pvf(_) => 1e-6,
        _ => 1e-8,
    }
}

/// `κ″(θ) = V(κ′(θ))` on the probe grid, with moments by summation/quadrature.
pub fn vf_check(family: Family, probes: usize, tol: Option<f64>) -> Result<VfReport> {
    let nef = family.nef()?;
    let mut worst: f64 = 0.0;
    for theta in family.probe_thetas(probes) {
        let c = nef.cumulant_derivs(theta)?;
        let dev = (c.variance - family.variance_fn(c.mean)).abs() / c.variance.max(1.0);
        worst = worst.max(if dev.is_nan() { f64::INFINITY } else { dev });
    }
    let tolerance = tol.unwrap_or(vf_tolerance(family));
    Ok(VfReport { family: family.name(), tolerance, max_deviation: worst, passed: worst <= tolerance })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantReport {
    pub family: String,
    /// Smallest `κ″` over a 50-point grid.
    pub min_variance: f64,
    /// Largest `|Σ pmf − 1|` (atoms only).
    pub max_pmf_defect: f64,
    /// Largest `|θ(κ′(θ)) − θ|`.
    pub max_mean_inverse_err: f64,
    /// Smallest observed convergence order of central differences for `κ′` and `κ″`.
    pub min_fd_order: f64,
    pub passed: bool,
}

/// `|f′ − central difference|` at `h` and `h/10`, turned into an order.
/// Errors already at rounding level count as exact.
fn fd_order(f: impl Fn(f64) -> Result<f64>, exact: f64, theta: f64, h: f64, floor: f64) -> Result<f64> {
    let err = |h: f64| -> Result<f64> { Ok(((f(theta + h)? - f(theta - h)?) / (2.0 * h) - exact).abs()) };
    let (e1, e2) = (err(h)?, err(0.1 * h)?);
    if e1 <= floor {
        return Ok(f64::INFINITY);
    }
    Ok((e1 / e2.max(f64::MIN_POSITIVE)).log10())
}

pub fn nef_invariants(family: Family) -> Result<InvariantReport> {
    let nef = family.nef()?;
    nef.check_basis()?;
    let range = family.probe_range();
    let mut min_variance = f64::INFINITY;
    let mut max_pmf_defect: f64 = 0.0;
    for theta in nef.theta.grid(50, range) {
        min_variance = min_variance.min(nef.cumulant_derivs(theta)?.variance);
        if nef.is_discrete() {
            let total: f64 = nef.tilted_pmf_table(theta)?.iter().sum();
            max_pmf_defect = max_pmf_defect.max((total - 1.0).abs());
        }
    }
    let mut max_mean_inverse_err: f64 = 0.0;
    let mut min_fd_order = f64::INFINITY;
    let h = 1e-3;
    for theta in family.probe_thetas(6) {
        let c = nef.cumulant_derivs(theta)?;
        let back = nef.mean_inverse(c.mean)?;
        max_mean_inverse_err = max_mean_inverse_err.max((back - theta).abs());
        let floor = 1e-11 * c.mean.abs().max(c.variance).max(1.0);
        let o1 = fd_order(|t| nef.log_laplace(t), c.mean, theta, h, floor)?;
        let o2 = fd_order(|t| Ok(nef.cumulant_derivs(t)?.mean), c.variance, theta, h, floor)?;
        min_fd_order = min_fd_order.min(o1).min(o2);
    }
    let passed = min_variance > 0.0 && max_pmf_defect < 1e-10 && max_mean_inverse_err < 1e-9 && min_fd_order >= 1.9;
    Ok(InvariantReport {
        family: family.name(),
        min_variance,
        max_pmf_defect,
        max_mean_inverse_err,
        min_fd_order,
        passed,
    })
}

/// Oracle checks of the candidate closed forms behind a family's `φ`.
pub fn formula_checks(family: Family) -> Vec<CandidateCheck> {
    match family {
        Family::InverseGaussian => ig_candidates(),
        Family::Pvf(_) => family.pvf_spec().map(|s| pvf_candidates(&s)).unwrap_or_default(),
        _ => Vec::new(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyValidation {
    pub family: String,
    pub master: MasterIdentityReport,
    pub vf: VfReport,
    pub invariants: InvariantReport,
    /// Every candidate, including the rejected ones.
    pub formulas: Vec<CandidateCheck>,
    pub passed: bool,
}

/// All suites for one family. `tol` overrides the master-identity tolerance.
pub fn validate_family(family: Family, tol: Option<f64>) -> Result<FamilyValidation> {
    let master = master_identity(family, DEFAULT_PROBES, tol)?;
    let vf = vf_check(family, DEFAULT_PROBES, None)?;
    let invariants = nef_invariants(family)?;
    let formulas = formula_checks(family);
    let passed = master.passed && vf.passed && invariants.passed;
    Ok(FamilyValidation { family: family.name(), master, vf, invariants, formulas, passed })
}
