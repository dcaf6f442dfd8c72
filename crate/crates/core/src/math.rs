//! Scalar special functions on top of `libm`.

#[allow(unused_imports)]
use num_traits::Float as _;
use num_complex::Complex64;

pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// `ln n!`
pub fn ln_factorial(n: usize) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

pub fn ln_binomial(n: f64, k: f64) -> f64 {
    ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0)
}

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Principal `ln Γ(z)` for `Re z > 0` (Lanczos, g = 7).
pub fn ln_gamma_complex(z: Complex64) -> Complex64 {
    // Shift into the region where the approximation is sharpest.
    if z.re < 8.0 {
        let mut shift = Complex64::new(0.0, 0.0);
        let mut w = z;
        while w.re < 8.0 {
            shift += w.ln();
            w += 1.0;
        }
        return ln_gamma_complex(w) - shift;
    }
    let zm = z - 1.0;
    let mut acc = Complex64::new(LANCZOS[0], 0.0);
    for (k, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += *c / (zm + k as f64);
    }
    let t = zm + LANCZOS_G + 0.5;
    (zm + 0.5) * t.ln() - t + LN_SQRT_2PI + acc.ln()
}

/// Streaming log-sum-exp accumulator.
#[derive(Debug, Clone, Copy)]
pub struct LogSum {
    max: f64,
    scaled: f64,
}

impl Default for LogSum {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSum {
    pub fn new() -> Self {
        Self { max: f64::NEG_INFINITY, scaled: 0.0 }
    }

    pub fn add(&mut self, log_term: f64) {
        if log_term == f64::NEG_INFINITY {
            return;
        }
        if log_term > self.max {
            self.scaled = self.scaled * (self.max - log_term).exp() + 1.0;
            self.max = log_term;
        } else {
            self.scaled += (log_term - self.max).exp();
        }
    }

    pub fn value(&self) -> f64 {
        if self.scaled == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_lgamma_matches_real_axis() {
        for &x in &[0.3, 1.0, 2.5, 7.0, 20.0] {
            let z = ln_gamma_complex(Complex64::new(x, 0.0));
            assert!((z.re - ln_gamma(x)).abs() < 1e-12, "{x}");
            assert!(z.im.abs() < 1e-12);
        }
    }

    #[test]
    fn complex_lgamma_reflection_modulus() {
        // |Γ(1/2 + iy)|² = π / cosh(πy)
        for &y in &[0.0, 0.4, 1.3, 3.0] {
            let z = ln_gamma_complex(Complex64::new(0.5, y));
            let expect = (core::f64::consts::PI / (core::f64::consts::PI * y).cosh()).ln();
            assert!((2.0 * z.re - expect).abs() < 1e-12, "{y}");
        }
    }

    #[test]
    fn log_sum_handles_spread() {
        let mut s = LogSum::new();
        for t in [-1000.0, 0.0, 1000.0, 1000.0] {
            s.add(t);
        }
        assert!((s.value() - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }
}
