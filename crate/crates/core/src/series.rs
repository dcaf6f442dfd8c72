//! Truncated formal power series.
//!
//! A [`TruncatedSeries`] of order `N` stores the coefficients of
//! `z^0 ..= z^N`. Binary operations truncate to the smaller operand order,
//! so every retained coefficient is exact up to scalar rounding.

#[allow(unused_imports)]
use num_traits::Float as _;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Scalars a series can carry: a field with a notion of finiteness.
pub trait Coefficient:
    Clone
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_int(k: i64) -> Self;
    fn is_zero(&self) -> bool;
    fn is_finite(&self) -> bool;
}

impl Coefficient for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_int(k: i64) -> Self {
        k as f64
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

impl Coefficient for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_int(k: i64) -> Self {
        Complex64::new(k as f64, 0.0)
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Exact complex rationals, used where double precision cancels catastrophically.
pub type ExactComplex = Complex<BigRational>;

impl Coefficient for ExactComplex {
    fn zero() -> Self {
        Complex::new(BigRational::zero(), BigRational::zero())
    }
    fn one() -> Self {
        Complex::new(BigRational::one(), BigRational::zero())
    }
    fn from_int(k: i64) -> Self {
        Complex::new(BigRational::from_integer(BigInt::from(k)), BigRational::zero())
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
    fn is_finite(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries<T> {
    coeffs: Vec<T>,
}

pub type RealSeries = TruncatedSeries<f64>;

impl<T: Coefficient> TruncatedSeries<T> {
    /// Builds a series from `coeffs[k] = [z^k]`; the order is `coeffs.len() - 1`.
    ///
    /// # Panics
    /// If `coeffs` is empty.
    pub fn new(coeffs: Vec<T>) -> Self {
        assert!(!coeffs.is_empty(), "a series needs at least the constant term");
        Self { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        Self { coeffs: vec![T::zero(); order + 1] }
    }

    pub fn constant(c: T, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = c;
        s
    }

    /// `c · z^k`, truncated to `order`.
    pub fn monomial(k: usize, c: T, order: usize) -> Self {
        let mut s = Self::zero(order);
        if k <= order {
            s.coeffs[k] = c;
        }
        s
    }

    /// Builds `Σ f(k) z^k` for `k ≤ order`.
    pub fn from_fn(order: usize, f: impl FnMut(usize) -> T) -> Self {
        Self { coeffs: (0..=order).map(f).collect() }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    /// Coefficient of `z^k` (zero beyond the order).
    pub fn coeff(&self, k: usize) -> T {
        self.coeffs.get(k).cloned().unwrap_or_else(T::zero)
    }

    pub fn truncate(&self, order: usize) -> Self {
        Self::from_fn(order, |k| self.coeff(k))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(Coefficient::is_finite)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        Self::from_fn(n, |k| self.coeffs[k].clone() + other.coeffs[k].clone())
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        Self::from_fn(n, |k| self.coeffs[k].clone() - other.coeffs[k].clone())
    }

    pub fn scale(&self, c: &T) -> Self {
        Self { coeffs: self.coeffs.iter().map(|a| a.clone() * c.clone()).collect() }
    }

    /// Cauchy product to the common order.
    pub fn mul(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        let mut out = vec![T::zero(); n + 1];
        for (i, a) in self.coeffs.iter().take(n + 1).enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().take(n + 1 - i).enumerate() {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        Self { coeffs: out }
    }

    pub fn pow(&self, mut e: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::constant(T::one(), self.order());
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Multiplicative inverse; requires a nonzero constant term.
    pub fn recip(&self) -> Result<Self> {
        let a0 = self.coeffs[0].clone();
        if a0.is_zero() {
            return Err(Error::ZeroConstantTerm);
        }
        let n = self.order();
        let mut out: Vec<T> = Vec::with_capacity(n + 1);
        out.push(T::one() / a0.clone());
        for k in 1..=n {
            let mut acc = T::zero();
            for j in 1..=k {
                if !self.coeffs[j].is_zero() {
                    acc = acc + self.coeffs[j].clone() * out[k - j].clone();
                }
            }
            out.push(-acc / a0.clone());
        }
        Ok(Self { coeffs: out })
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(&other.recip()?))
    }

    /// Term-wise derivative; the result has order `N - 1` (order 0 stays 0).
    pub fn derivative(&self) -> Self {
        let n = self.order();
        if n == 0 {
            return Self::zero(0);
        }
        Self::from_fn(n - 1, |k| self.coeffs[k + 1].clone() * T::from_int(k as i64 + 1))
    }

    /// Multiplies by `z`, keeping the order.
    pub fn shift_up(&self) -> Self {
        Self::from_fn(self.order(), |k| if k == 0 { T::zero() } else { self.coeffs[k - 1].clone() })
    }

    /// `outer(inner(z))`, truncated to the common order (Horner).
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        if !inner.coeffs[0].is_zero() {
            return Err(Error::NonzeroInnerConstant);
        }
        let n = self.order().min(inner.order());
        let inner = inner.truncate(n);
        let mut acc = Self::constant(self.coeff(n), n);
        for k in (0..n).rev() {
            acc = acc.mul(&inner);
            acc.coeffs[0] = acc.coeffs[0].clone() + self.coeffs[k].clone();
        }
        Ok(acc)
    }
}

impl TruncatedSeries<f64> {
    /// Evaluates the truncated polynomial at `x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    fn finite_or(self, what: &'static str) -> Result<Self> {
        if self.is_finite() {
            Ok(self)
        } else {
            Err(Error::Overflow(what))
        }
    }

    /// `log a` for `a[0] > 0`.
    pub fn log(&self) -> Result<Self> {
        let a0 = self.coeffs[0];
        if !(a0 > 0.0) {
            return Err(Error::NonpositiveConstantTerm(a0));
        }
        let n = self.order();
        let a = &self.coeffs;
        let mut b = vec![0.0; n + 1];
        b[0] = a0.ln();
        for k in 1..=n {
            let mut acc = 0.0;
            for j in 1..k {
                acc += j as f64 * b[j] * a[k - j];
            }
            b[k] = (a[k] - acc / k as f64) / a0;
        }
        Self { coeffs: b }.finite_or("log")
    }

    /// `exp a`.
    pub fn exp(&self) -> Result<Self> {
        let n = self.order();
        let a = &self.coeffs;
        let mut e = vec![0.0; n + 1];
        e[0] = a[0].exp();
        for k in 1..=n {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += j as f64 * a[j] * e[k - j];
            }
            e[k] = acc / k as f64;
        }
        Self { coeffs: e }.finite_or("exp")
    }

    /// Solves `h(w) = w · g(h(w))` to order `order`.
    ///
    /// Returns `h` with `[w^(n+1)] h = β_n = [z^n] g(z)^(n+1) / (n+1)`; the
    /// coefficients are computed from successive powers of `g`.
    pub fn lagrange_invert(g: &Self, order: usize) -> Result<Self> {
        if g.coeffs[0] == 0.0 {
            return Err(Error::ZeroConstantTerm);
        }
        let mut h = vec![0.0; order + 1];
        if order == 0 {
            return Ok(Self { coeffs: h });
        }
        let g = g.truncate(order - 1);
        let mut power = g.clone();
        for n in 0..order {
            // power = g^(n+1)
            h[n + 1] = power.coeffs[n] / (n + 1) as f64;
            if n + 1 < order {
                power = power.mul(&g);
            }
        }
        Self { coeffs: h }.finite_or("lagrange inversion")
    }

    /// `Σ z^k / k!`
    pub fn exp_z(order: usize) -> Self {
        let mut c = vec![1.0; order + 1];
        for k in 1..=order {
            c[k] = c[k - 1] / k as f64;
        }
        Self { coeffs: c }
    }

    /// `1 / (1 - z)`
    pub fn geometric(order: usize) -> Self {
        Self { coeffs: vec![1.0; order + 1] }
    }

    /// `log(1 + z)`
    pub fn log1p_z(order: usize) -> Self {
        Self::from_fn(order, |k| {
            if k == 0 {
                0.0
            } else if k % 2 == 1 {
                1.0 / k as f64
            } else {
                -1.0 / k as f64
            }
        })
    }

    /// `arcsin z = Σ (2k)! / (4^k (k!)² (2k+1)) z^(2k+1)`
    pub fn arcsin_z(order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        // ratio of consecutive (2k)!/(4^k (k!)^2) is (2k-1)/(2k)
        let mut central = 1.0;
        let mut k = 0usize;
        while 2 * k + 1 <= order {
            if k > 0 {
                central *= (2 * k - 1) as f64 / (2 * k) as f64;
            }
            c[2 * k + 1] = central / (2 * k + 1) as f64;
            k += 1;
        }
        Self { coeffs: c }
    }
}

#[cfg(test)]
mod tests {
    extern crate std;
    use super::*;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (k, (x, y)) in a.iter().zip(b).enumerate() {
            assert!((x - y).abs() <= tol * (1.0 + y.abs()), "k={k}: {x} vs {y}");
        }
    }

    #[test]
    fn binomial_square() {
        let a = RealSeries::new(vec![1.0, 1.0, 0.0, 0.0]);
        assert_eq!(a.mul(&a).coeffs(), &[1.0, 2.0, 1.0, 0.0]);
    }

    #[test]
    fn geometric_times_one_minus_z() {
        let p = RealSeries::geometric(10).mul(&RealSeries::new(vec![1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]));
        assert_eq!(p.coeff(0), 1.0);
        assert!(p.coeffs()[1..].iter().all(|&c| c == 0.0));
    }

    #[test]
    fn exp_times_exp_is_exp_2z() {
        let e = RealSeries::exp_z(20);
        let p = e.mul(&e);
        let mut expect = 1.0;
        for k in 0..=20 {
            if k > 0 {
                expect *= 2.0 / k as f64;
            }
            assert!((p.coeff(k) - expect).abs() <= 1e-15 * expect.max(1e-300) + 1e-300, "k={k}");
        }
    }

    #[test]
    fn order_is_min_of_operands() {
        let a = RealSeries::exp_z(5);
        let b = RealSeries::exp_z(9);
        assert_eq!(a.mul(&b).order(), 5);
        assert_eq!(b.add(&a).order(), 5);
    }

    #[test]
    fn compose_square_of_z_plus_z2() {
        let outer = RealSeries::monomial(2, 1.0, 6);
        let inner = RealSeries::new(vec![0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let c = outer.compose(&inner).unwrap();
        assert_eq!(c.coeffs(), &[0.0, 0.0, 1.0, 2.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn compose_exp_log_is_identity() {
        let c = RealSeries::exp_z(30).compose(&RealSeries::log1p_z(30)).unwrap();
        assert!((c.coeff(0) - 1.0).abs() < 1e-12);
        assert!((c.coeff(1) - 1.0).abs() < 1e-12);
        for k in 2..=30 {
            assert!(c.coeff(k).abs() < 1e-12, "k={k}: {}", c.coeff(k));
        }
    }

    #[test]
    fn compose_with_zero_inner() {
        let c = RealSeries::arcsin_z(8).compose(&RealSeries::zero(8)).unwrap();
        assert!(c.coeffs().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn compose_rejects_nonzero_inner_constant() {
        let inner = RealSeries::constant(1.0, 3);
        assert_eq!(RealSeries::exp_z(3).compose(&inner), Err(Error::NonzeroInnerConstant));
    }

    #[test]
    fn log_of_exp_z_is_z() {
        let b = RealSeries::exp_z(40).log().unwrap();
        assert!(b.coeff(0).abs() < 1e-15);
        assert!((b.coeff(1) - 1.0).abs() < 1e-15);
        for k in 2..=40 {
            assert!(b.coeff(k).abs() < 1e-14, "k={k}");
        }
    }

    #[test]
    fn log_of_geometric() {
        let b = RealSeries::geometric(30).log().unwrap();
        for k in 1..=30 {
            assert!((b.coeff(k) - 1.0 / k as f64).abs() < 1e-14);
        }
        let one = RealSeries::constant(1.0, 5).log().unwrap();
        assert!(one.coeffs().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn log_rejects_nonpositive_constant() {
        assert!(matches!(RealSeries::new(vec![0.0, 1.0]).log(), Err(Error::NonpositiveConstantTerm(_))));
        assert!(matches!(RealSeries::new(vec![-1.0, 1.0]).log(), Err(Error::NonpositiveConstantTerm(_))));
    }

    fn lagrange_residual(g: &RealSeries, h: &RealSeries) -> f64 {
        let gh = g.truncate(h.order()).compose(h).unwrap();
        let whg = gh.shift_up();
        let scale = h.coeffs().iter().fold(0.0f64, |m, c| m.max(c.abs()));
        h.sub(&whg).coeffs().iter().fold(0.0f64, |m, c| m.max(c.abs())) / scale
    }

    #[test]
    fn lagrange_abel() {
        let h = RealSeries::lagrange_invert(&RealSeries::exp_z(30), 30).unwrap();
        let expect = [1.0, 1.0, 1.5, 8.0 / 3.0];
        for (n, e) in expect.iter().enumerate() {
            assert!((h.coeff(n + 1) - e).abs() < 1e-14);
        }
        assert!(lagrange_residual(&RealSeries::exp_z(30), &h) < 1e-12);
    }

    #[test]
    fn lagrange_catalan() {
        let h = RealSeries::lagrange_invert(&RealSeries::geometric(20), 20).unwrap();
        for (n, e) in [1.0, 1.0, 2.0, 5.0, 14.0, 42.0].iter().enumerate() {
            assert!((h.coeff(n + 1) - e).abs() < 1e-12);
        }
        assert!(lagrange_residual(&RealSeries::geometric(20), &h) < 1e-12);
    }

    #[test]
    fn lagrange_one_plus_z_is_geometric() {
        // h = w(1 + h) ⇒ h = w / (1 - w)
        let g = RealSeries::new(vec![1.0, 1.0]);
        let h = RealSeries::lagrange_invert(&g, 25).unwrap();
        assert_eq!(h.coeff(0), 0.0);
        for n in 1..=25 {
            assert!((h.coeff(n) - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn lagrange_rejects_zero_constant() {
        let g = RealSeries::new(vec![0.0, 1.0]);
        assert_eq!(RealSeries::lagrange_invert(&g, 5), Err(Error::ZeroConstantTerm));
    }

    #[test]
    fn lagrange_overflow_is_reported() {
        let err = RealSeries::lagrange_invert(&RealSeries::exp_z(400).scale(&1e3), 400).unwrap_err();
        assert!(matches!(err, Error::Overflow(_)));
    }

    #[test]
    fn recip_and_derivative() {
        let g = RealSeries::geometric(6);
        let inv = g.recip().unwrap();
        assert_eq!(inv.coeffs(), &[1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let d = RealSeries::exp_z(6).derivative();
        close(d.coeffs(), RealSeries::exp_z(5).coeffs(), 1e-15);
    }

    #[test]
    fn exact_complex_arithmetic() {
        let i = ExactComplex::new(BigRational::zero(), BigRational::one());
        let s = TruncatedSeries::new(vec![i.clone(), <ExactComplex as Coefficient>::one()]);
        let r = s.recip().unwrap();
        // 1/(i + t) = -i - (-1) t ... = -i + t + i t^2 ...
        assert_eq!(r.coeff(0), -i.clone());
        assert_eq!(r.coeff(1), <ExactComplex as Coefficient>::one());
    }

    fn arb_series() -> impl Strategy<Value = RealSeries> {
        proptest::collection::vec(-2.0f64..2.0, 1..24).prop_map(RealSeries::new)
    }

    proptest! {
        #[test]
        fn exp_log_round_trip(mut c in proptest::collection::vec(-1.0f64..1.0, 2..64)) {
            c[0] = 0.0;
            let b = RealSeries::new(c);
            let back = b.exp().unwrap().log().unwrap();
            let scale = b.coeffs().iter().fold(1.0f64, |m, x| m.max(x.abs()));
            for k in 0..=b.order() {
                prop_assert!((back.coeff(k) - b.coeff(k)).abs() <= 1e-12 * scale, "k={} {} vs {}", k, back.coeff(k), b.coeff(k));
            }
        }

        #[test]
        fn cauchy_commutative_associative(a in arb_series(), b in arb_series(), c in arb_series()) {
            let ab = a.mul(&b);
            let ba = b.mul(&a);
            prop_assert_eq!(ab.order(), ba.order());
            for k in 0..=ab.order() {
                prop_assert!((ab.coeff(k) - ba.coeff(k)).abs() <= 1e-13 * (1.0 + ab.coeff(k).abs()));
            }
            let l = ab.mul(&c);
            let r = a.mul(&b.mul(&c));
            let scale = l.coeffs().iter().fold(1.0f64, |m, x| m.max(x.abs()));
            for k in 0..=l.order() {
                prop_assert!((l.coeff(k) - r.coeff(k)).abs() <= 1e-13 * scale * 64.0);
            }
        }
    }
}
