//! Residue checks for `v(u) = a0·u·(u−u1)ⁿ(u−ū1)ⁿ`.
//!
//! `τ = −2πi·Res(1/v, u1)` is computed twice: from the Laurent coefficient of
//! an exact rational series, and from the real-line principal value
//! `Re τ = −∫₀^∞ (ϑ(−z) − ϑ(z)) / (a0·z·ϑ(z)ϑ(−z)) dz`, `Im τ = π/v′(0)`.

#[allow(unused_imports)]
use num_traits::Float as _;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::{integrate, integrate_pieces, QuadOptions};
use crate::series::{ExactComplex, TruncatedSeries};

/// Relative threshold below which `Re τ` counts as zero (relative to `|τ|`).
pub const ZERO_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjectureVf {
    pub a0: f64,
    pub u1: Complex64,
    pub n: u32,
}

impl ConjectureVf {
    pub fn new(a0: f64, u1: Complex64, n: u32) -> Result<Self> {
        if !(a0 > 0.0 && a0.is_finite()) {
            return Err(Error::InvalidParameter(format!("a0 = {a0} must be positive")));
        }
        if !(u1.im > 0.0 && u1.re.is_finite() && u1.im.is_finite()) {
            return Err(Error::InvalidParameter(format!("u1 = {u1} must have positive imaginary part")));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        Ok(Self { a0, u1, n })
    }

    /// `ϑ(u)^{1/n} = u² − 2Re(u1)u + |u1|²`.
    fn quadratic(&self, u: f64) -> f64 {
        (u - self.u1.re) * (u - self.u1.re) + self.u1.im * self.u1.im
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.a0 * u * libm::pow(self.quadratic(u), self.n as f64)
    }

    /// `v′(0) = a0·|u1|^{2n}`.
    pub fn v_prime_zero(&self) -> f64 {
        self.a0 * libm::pow(self.u1.norm_sqr(), self.n as f64)
    }

    /// `d = 2π/v′(0)`.
    pub fn d(&self) -> f64 {
        2.0 * PI / self.v_prime_zero()
    }

    /// The contour integrand with the factor `z` cancelled:
    /// `4b·Σ_{k<n} P^{−(n−k)}Q^{−(k+1)} / a0`, `P = ϑ(−z)^{1/n}`, `Q = ϑ(z)^{1/n}`.
    pub fn contour_integrand(&self, z: f64) -> f64 {
        let b = self.u1.re;
        if b == 0.0 {
            return 0.0;
        }
        let p = self.quadratic(-z).recip();
        let q = self.quadratic(z).recip();
        let n = self.n as i32;
        let mut sum = 0.0;
        for k in 0..n {
            sum += libm::pow(p, (n - k) as f64) * libm::pow(q, (k + 1) as f64);
        }
        4.0 * b * sum / self.a0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TauMethod {
    SeriesResidue,
    ContourQuadrature,
}

impl TauMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            TauMethod::SeriesResidue => "series-residue",
            TauMethod::ContourQuadrature => "contour-quadrature",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauResult {
    pub tau: Complex64,
    pub method: TauMethod,
    pub tail_error: f64,
}

fn exact(x: f64) -> BigRational {
    // Finite by the `ConjectureVf` invariants.
    BigRational::from_float(x).unwrap_or_default()
}

/// Residue from the coefficient of `(z−u1)^{n−1}` in `1/(a0·z·(z−ū1)ⁿ)`.
///
/// The alternating sum behind that coefficient cancels by up to thirty
/// decimal orders at `n = 25`, so the expansion runs in exact rationals.
pub fn residue_series(vf: &ConjectureVf) -> TauResult {
    let n = vf.n as usize;
    let order = n - 1;
    let u1: ExactComplex = Complex::new(exact(vf.u1.re), exact(vf.u1.im));
    let two_ib: ExactComplex = Complex::new(exact(0.0), exact(2.0 * vf.u1.im));
    let one: ExactComplex = Complex::new(exact(1.0), exact(0.0));
    let a0: ExactComplex = Complex::new(exact(vf.a0), exact(0.0));

    let monic = |c: ExactComplex| {
        let mut coeffs = alloc::vec![c, one.clone()];
        coeffs.resize(order + 1, Complex::new(exact(0.0), exact(0.0)));
        TruncatedSeries::new(coeffs)
    };
    let denom = monic(u1).mul(&monic(two_ib).pow(vf.n)).scale(&a0);
    let res = match denom.recip() {
        Ok(w) => w.coeff(order),
        Err(_) => unreachable!("constant term a0·u1·(2i·Im u1)^n is nonzero"),
    };
    let re = res.re.to_f64().unwrap_or(f64::NAN);
    let im = res.im.to_f64().unwrap_or(f64::NAN);
    // −2πi·(re + i·im)
    TauResult { tau: Complex64::new(2.0 * PI * im, -2.0 * PI * re), method: TauMethod::SeriesResidue, tail_error: 0.0 }
}

/// `Re τ` by quadrature of the principal-value integrand, `Im τ = π/v′(0)`.
///
/// `tol` is relative to `|τ|`; the analytic tail bound on `[R, ∞)`
/// uses `P, Q ≥ z²/4` for `z ≥ 2(|Re u1| + |u1|)`.
pub fn contour_tau(vf: &ConjectureVf, tol: f64) -> Result<TauResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol = {tol} must be positive")));
    }
    let im_tau = PI / vf.v_prime_zero();
    let b = vf.u1.re;
    if b == 0.0 {
        return Ok(TauResult { tau: Complex64::new(0.0, im_tau), method: TauMethod::ContourQuadrature, tail_error: 0.0 });
    }
    let abs_tol = tol * im_tau;
    let n = vf.n as f64;
    let modulus = vf.u1.norm();
    let lead = 4.0 * b.abs() * n * libm::pow(4.0, n + 1.0) / (vf.a0 * (2.0 * n + 1.0));
    let tail = |r: f64| lead * libm::pow(r, -(2.0 * n + 1.0));
    let mut r = 2.0 * (b.abs() + modulus);
    while tail(r) > 0.1 * abs_tol {
        r *= 2.0;
    }
    let tail_error = tail(r);

    // Q peaks at z = |b| with width ~ Im(u1)/√n.
    let width = vf.u1.im / n.sqrt();
    let mut pts: Vec<f64> = alloc::vec![0.0, modulus / 5.0, modulus, r];
    for k in [-4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0] {
        pts.push(b.abs() + k * width);
    }
    pts.retain(|&p| (0.0..=r).contains(&p));
    pts.sort_by(|x, y| x.total_cmp(y));
    pts.dedup();

    let opts = QuadOptions { abs_tol: 0.1 * abs_tol, rel_tol: 1e-13, max_intervals: 20_000 };
    let q = integrate_pieces(|z| vf.contour_integrand(z), &pts, &opts);
    let err = q.abs_err + tail_error;
    let requested = tol * q.value.abs().max(im_tau);
    if !q.converged || !(err <= requested) {
        return Err(Error::ToleranceNotMet { requested, achieved: err });
    }
    Ok(TauResult { tau: Complex64::new(-q.value, im_tau), method: TauMethod::ContourQuadrature, tail_error: err })
}

/// `θ0 = ∫_{μ0}^∞ dt/v(t)`.
pub fn theta0(vf: &ConjectureVf, mu0: f64) -> Result<f64> {
    if !(mu0 > 0.0) {
        return Err(Error::InvalidParameter(format!("mu0 = {mu0} must be positive")));
    }
    let pts = [mu0, mu0 + vf.u1.norm(), f64::INFINITY];
    let body = integrate_pieces(|t| 1.0 / vf.eval(t), &pts[..2], &QuadOptions::rel(1e-12)).require()?;
    let tail = integrate(|t| 1.0 / vf.eval(t), pts[1], pts[2], &QuadOptions::rel(1e-12)).require()?;
    Ok(body + tail)
}

/// `−1`, `0` or `1` with `|x| < ZERO_THRESHOLD·scale` mapped to `0`.
pub fn sign_class(x: f64, scale: f64) -> i8 {
    if x.abs() < ZERO_THRESHOLD * scale {
        0
    } else if x > 0.0 {
        1
    } else {
        -1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NecessityReport {
    pub theta0: f64,
    pub tau_re: f64,
    pub tau_im: f64,
    pub theta1_re: f64,
    pub theta1_im: f64,
    pub d: f64,
    /// `Re θ1 ∈ Θ` and `0 < Im θ1 < d/2`.
    pub in_s0_plus: bool,
    /// `Re θ1 ∈ Θ` and `Im θ1 = d/2`.
    pub in_theta_shift: bool,
    /// `θ1 ∈ Θ + id/2` contradicts `(v, ℝ₊)` being a variance function.
    pub vf_impossible: bool,
}

/// Evaluates `θ1 = θ0 + τ` against `S0⁺` and `Θ + id/2`, `Θ = (−∞, θ0)`.
///
/// `Im τ` is `d/2` exactly, so membership reduces to the sign of `Re τ` and
/// the verdict does not depend on `μ0`.
pub fn necessity_predicate(vf: &ConjectureVf, mu0: f64) -> Result<NecessityReport> {
    let t0 = theta0(vf, mu0)?;
    let tau = contour_tau(vf, 1e-8)?.tau;
    let d = vf.d();
    let re_class = sign_class(tau.re, tau.norm());
    let theta1 = Complex64::new(t0 + tau.re, tau.im);
    let re_in_theta = re_class < 0;
    let im_rel = (theta1.im - 0.5 * d).abs() / (0.5 * d);
    let in_theta_shift = re_in_theta && im_rel < 1e-12;
    let in_s0_plus = re_in_theta && theta1.im > 0.0 && theta1.im < 0.5 * d && im_rel >= 1e-12;
    Ok(NecessityReport {
        theta0: t0,
        tau_re: tau.re,
        tau_im: tau.im,
        theta1_re: theta1.re,
        theta1_im: theta1.im,
        d,
        in_s0_plus,
        in_theta_shift,
        vf_impossible: in_theta_shift,
    })
}

/// The 5×3 grid `Re u1 ∈ {−2, −0.3, 0, 0.3, 2}`, `Im u1 ∈ {0.5, 1, 3}`.
pub fn default_u1_grid() -> Vec<Complex64> {
    let mut grid = Vec::with_capacity(15);
    for re in [-2.0, -0.3, 0.0, 0.3, 2.0] {
        for im in [0.5, 1.0, 3.0] {
            grid.push(Complex64::new(re, im));
        }
    }
    grid
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub n: u32,
    pub u1_re: f64,
    pub u1_im: f64,
    pub tau_re: f64,
    pub tau_im: f64,
    pub contour_re: f64,
    pub d: f64,
    /// `|τ_series − τ_contour| / |τ_series|`.
    pub method_gap: f64,
    /// `|Im τ_series − d/2| / (d/2)`.
    pub im_rel_err: f64,
    pub sign_ok: bool,
    pub vf_impossible: bool,
    pub violation: Option<String>,
}

/// Checks one `(n, u1)` cell with `a0 = 1`; violations are recorded, not raised.
pub fn scan_cell(n: u32, u1: Complex64) -> Result<ScanRow> {
    let vf = ConjectureVf::new(1.0, u1, n)?;
    let series = residue_series(&vf).tau;
    let half_d = 0.5 * vf.d();
    let mut problems: Vec<String> = Vec::new();
    let contour_re = match contour_tau(&vf, 1e-8) {
        Ok(t) => t.tau.re,
        Err(e) => {
            problems.push(format!("contour: {e}"));
            f64::NAN
        }
    };
    let scale = series.norm();
    let gap = (series - Complex64::new(contour_re, half_d)).norm() / scale;
    let im_rel_err = (series.im - half_d).abs() / half_d;
    let expected = -sign_class(u1.re, 1.0);
    let sign_ok = sign_class(series.re, scale) == expected && sign_class(contour_re, scale) == expected;
    if !(gap < 1e-6) {
        problems.push(format!("series/contour gap {gap:e}"));
    }
    if !(im_rel_err < 1e-8) {
        problems.push(format!("Im tau off by {im_rel_err:e}"));
    }
    if !sign_ok {
        problems.push(format!("sign of Re tau {:e} does not oppose Re u1", series.re));
    }
    Ok(ScanRow {
        n,
        u1_re: u1.re,
        u1_im: u1.im,
        tau_re: series.re,
        tau_im: series.im,
        contour_re,
        d: 2.0 * half_d,
        method_gap: gap,
        im_rel_err,
        sign_ok,
        vf_impossible: expected < 0,
        violation: if problems.is_empty() { None } else { Some(problems.join("; ")) },
    })
}

/// Every `n ≤ n_max` against every grid point, in `(n, grid)` order.
pub fn conjecture_scan(n_max: u32, u1_grid: &[Complex64]) -> Result<Vec<ScanRow>> {
    if n_max == 0 {
        return Err(Error::InvalidParameter("n_max must be at least 1".into()));
    }
    let mut rows = Vec::with_capacity(n_max as usize * u1_grid.len());
    for n in 1..=n_max {
        for &u1 in u1_grid {
            rows.push(scan_cell(n, u1)?);
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Closed form for `n = 1`: `τ = −2πi / (a0·u1·2i·Im u1)`.
    fn tau_n1(a0: f64, u1: Complex64) -> Complex64 {
        c(0.0, -2.0 * PI) / (u1 * c(0.0, 2.0 * u1.im) * a0)
    }

    #[test]
    fn series_residue_examples() {
        for (a0, u1) in [(1.0, c(0.0, 1.0)), (1.0, c(1.0, 1.0)), (2.0, c(0.0, 1.0)), (0.7, c(-2.0, 0.5))] {
            let vf = ConjectureVf::new(a0, u1, 1).unwrap();
            let got = residue_series(&vf).tau;
            assert!((got - tau_n1(a0, u1)).norm() < 1e-14, "{got} vs {}", tau_n1(a0, u1));
        }
        let t = residue_series(&ConjectureVf::new(1.0, c(1.0, 1.0), 1).unwrap()).tau;
        assert!((t.re + PI / 2.0).abs() < 1e-15 && (t.im - PI / 2.0).abs() < 1e-15);
    }

    /// Direct pole-order formula for `n = 2`: `Res = d/dz [1/(a0 z (z−ū1)²)]` at `u1`.
    #[test]
    fn series_residue_matches_derivative_formula_n2() {
        let u1 = c(0.3, 0.8);
        let a0 = 1.5;
        let w = u1 - u1.conj();
        let res = -(c(1.0, 0.0) / (u1 * u1 * w * w) + c(2.0, 0.0) / (u1 * w * w * w)) / a0;
        let want = c(0.0, -2.0 * PI) * res;
        let got = residue_series(&ConjectureVf::new(a0, u1, 2).unwrap()).tau;
        assert!((got - want).norm() < 1e-14 * want.norm());
    }

    #[test]
    fn contour_examples() {
        let vf = ConjectureVf::new(1.0, c(1.0, 1.0), 1).unwrap();
        assert!((contour_tau(&vf, 1e-10).unwrap().tau.re + PI / 2.0).abs() < 1e-6);
        let sym = ConjectureVf::new(1.0, c(0.0, 1.0), 3).unwrap();
        assert!(contour_tau(&sym, 1e-10).unwrap().tau.re.abs() < 1e-10);
        let pos = contour_tau(&ConjectureVf::new(1.0, c(1.0, 1.0), 2).unwrap(), 1e-10).unwrap().tau.re;
        let neg = contour_tau(&ConjectureVf::new(1.0, c(-1.0, 1.0), 2).unwrap(), 1e-10).unwrap().tau.re;
        assert!(neg > 0.0 && (neg + pos).abs() < 1e-12 * pos.abs());
    }

    #[test]
    fn contour_rejects_bad_tolerance() {
        let vf = ConjectureVf::new(1.0, c(1.0, 1.0), 1).unwrap();
        assert!(contour_tau(&vf, 0.0).is_err());
    }

    #[test]
    fn vf_constructor_enforces_invariants() {
        assert!(ConjectureVf::new(0.0, c(0.0, 1.0), 1).is_err());
        assert!(ConjectureVf::new(1.0, c(1.0, 0.0), 1).is_err());
        assert!(ConjectureVf::new(1.0, c(1.0, 1.0), 0).is_err());
    }

    #[test]
    fn theta0_examples() {
        let vf = ConjectureVf::new(1.0, c(0.0, 1.0), 1).unwrap();
        assert!((theta0(&vf, 1.0).unwrap() - 0.5 * core::f64::consts::LN_2).abs() < 1e-10);
        assert!(theta0(&vf, 2.0).unwrap() < theta0(&vf, 1.0).unwrap());
        let big = theta0(&vf, 1e3).unwrap();
        assert!(big > 0.25e-6 && big < 1e-6, "{big}");
    }

    #[test]
    fn necessity_examples() {
        let r = necessity_predicate(&ConjectureVf::new(1.0, c(1.0, 1.0), 1).unwrap(), 1.0).unwrap();
        assert!(r.vf_impossible && r.in_theta_shift && !r.in_s0_plus);
        let r = necessity_predicate(&ConjectureVf::new(1.0, c(0.0, 1.0), 2).unwrap(), 1.0).unwrap();
        assert!(!r.vf_impossible && r.theta1_re == r.theta0);
        let r = necessity_predicate(&ConjectureVf::new(1.0, c(-2.0, 1.0), 2).unwrap(), 1.0).unwrap();
        assert!(!r.vf_impossible && !r.in_s0_plus);
        let a = necessity_predicate(&ConjectureVf::new(1.0, c(0.5, 1.0), 2).unwrap(), 0.5).unwrap();
        let b = necessity_predicate(&ConjectureVf::new(1.0, c(0.5, 1.0), 2).unwrap(), 5.0).unwrap();
        assert_eq!(a.vf_impossible, b.vf_impossible);
    }

    #[test]
    fn high_order_cell_has_negative_real_part() {
        let row = scan_cell(25, c(0.3, 1.0)).unwrap();
        assert!(row.tau_re < 0.0 && row.violation.is_none(), "{row:?}");
    }

    #[test]
    fn small_scan_has_no_violations() {
        let rows = conjecture_scan(3, &default_u1_grid()).unwrap();
        assert_eq!(rows.len(), 45);
        for r in &rows {
            assert!(r.violation.is_none(), "{r:?}");
            if r.u1_re == 0.0 {
                assert_eq!(r.tau_re, 0.0);
            }
        }
        assert!(conjecture_scan(0, &default_u1_grid()).is_err());
    }
}
