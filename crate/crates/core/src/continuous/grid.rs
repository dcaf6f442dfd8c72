#[allow(unused_imports)]
use num_traits::Float as _;
use alloc::vec::Vec;

/// Density samples on the uniform grid `x_i = i·h`, `i = 0..=N`, read as a
/// piecewise-linear function, plus an optional atom at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    pub h: f64,
    pub values: Vec<f64>,
    pub atom: f64,
    /// Estimated mass neglected by the grid (beyond `x_max` or below a cutoff).
    pub tail_bound: f64,
}

impl GridDensity {
    pub fn new(h: f64, values: Vec<f64>) -> Self {
        assert!(values.len() >= 2 && h > 0.0);
        Self { h, values, atom: 0.0, tail_bound: 0.0 }
    }

    pub fn from_fn(h: f64, n: usize, f: impl Fn(f64) -> f64) -> Self {
        Self::new(h, (0..=n).map(|i| f(i as f64 * h)).collect())
    }

    pub fn with_atom(mut self, atom: f64) -> Self {
        self.atom = atom;
        self
    }

    pub fn with_tail_bound(mut self, t: f64) -> Self {
        self.tail_bound = t;
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.values.len() - 1)
    }

    /// Linear interpolant; zero outside `[0, x_max]`.
    pub fn eval(&self, x: f64) -> f64 {
        let s = x / self.h;
        if !(s >= 0.0) || s > (self.values.len() - 1) as f64 {
            return 0.0;
        }
        let i = (s as usize).min(self.values.len() - 2);
        let w = s - i as f64;
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    /// Atom plus the integral of the interpolant.
    pub fn mass(&self) -> f64 {
        self.laplace(0.0)
    }

    /// `atom + ∫ e^{θx} f(x) dx` with the interpolant integrated exactly.
    pub fn laplace(&self, theta: f64) -> f64 {
        let z = theta * self.h;
        let (g0, g1) = segment_weights(z);
        let mut acc = 0.0;
        for (i, w) in self.values.windows(2).enumerate() {
            let ea = (theta * self.x(i)).exp();
            acc += ea * (w[0] * (g0 - g1) + w[1] * g1);
        }
        self.atom + self.h * acc
    }

    /// Trapezoidal self-similar convolution `(f ∗ g)(x_i)` on the shared grid.
    /// Atoms at the origin are carried analytically.
    pub fn convolve(&self, other: &Self) -> Self {
        assert!((self.h - other.h).abs() <= 1e-15 * self.h);
        let n = self.len().min(other.len());
        let (f, g) = (&self.values[..n], &other.values[..n]);
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..=i {
                s += f[i - j] * g[j];
            }
            s -= 0.5 * (f[i] * g[0] + f[0] * g[i]);
            out.push(self.h * s + self.atom * g[i] + other.atom * f[i]);
        }
        Self {
            h: self.h,
            values: out,
            atom: self.atom * other.atom,
            tail_bound: self.tail_bound + other.tail_bound,
        }
    }

    /// `(f ∗ ρ)(x_i)` for a kernel `ρ` known through its primitives
    /// `p0(u) = ∫_0^u ρ` and `p1(u) = ∫_0^u tρ(t) dt`. `f` is taken piecewise
    /// linear and each segment is integrated exactly against `ρ`.
    pub fn convolve_kernel(&self, p0: impl Fn(f64) -> f64, p1: impl Fn(f64) -> f64) -> Self {
        let n = self.len();
        let h = self.h;
        let mut m0 = Vec::with_capacity(n);
        let mut m1 = Vec::with_capacity(n);
        m0.push(0.0);
        m1.push(0.0);
        let (mut q0, mut q1) = (p0(0.0), p1(0.0));
        for k in 1..n {
            let u = k as f64 * h;
            let (r0, r1) = (p0(u), p1(u));
            let a = r0 - q0;
            m0.push(a);
            m1.push(k as f64 * a - (r1 - q1) / h);
            (q0, q1) = (r0, r1);
        }
        let f = &self.values;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..i {
                let k = i - j;
                s += f[j] * (m0[k] - m1[k]) + f[j + 1] * m1[k];
            }
            // atom · ρ(x_i) is left to the caller, which knows ρ pointwise
            out.push(s);
        }
        Self { h, values: out, atom: 0.0, tail_bound: self.tail_bound }
    }
}

/// `∫_0^1 e^{zs} ds` and `∫_0^1 s e^{zs} ds`.
fn segment_weights(z: f64) -> (f64, f64) {
    if z.abs() < 1e-2 {
        let g0 = 1.0 + z * (0.5 + z * (1.0 / 6.0 + z * (1.0 / 24.0 + z / 120.0)));
        let g1 = 0.5 + z * (1.0 / 3.0 + z * (0.125 + z * (1.0 / 30.0 + z / 144.0)));
        (g0, g1)
    } else {
        let em1 = libm::expm1(z);
        (em1 / z, ((z - 1.0) * (em1 + 1.0) + 1.0) / (z * z))
    }
}
