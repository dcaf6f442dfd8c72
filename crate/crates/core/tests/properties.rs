//! Properties of the public API checked against independent computations.

use nefkit_core::discrete::{cumulant_coeffs, rho_from_c};
use nefkit_core::family::Family;
use nefkit_core::linalg::{orthonormalize, subspace_distance, Matrix};
use nefkit_core::residue::{residue_series, sign_class, ConjectureVf};
use nefkit_core::series::RealSeries;
use nefkit_core::validate::{expectation_of_rf, kappa_pp};
use nefkit_core::Complex64;
use proptest::prelude::*;

/// `-2πi · Res(1/v, u1)` by the trapezoid rule on a circle around `u1`,
/// which converges geometrically for a meromorphic integrand.
fn tau_by_circle(vf: &ConjectureVf) -> Complex64 {
    let u1 = vf.u1;
    let radius = 0.5 * u1.im.min(u1.norm());
    let m = 512;
    let v = |u: Complex64| vf.a0 * u * ((u - u1) * (u - u1.conj())).powu(vf.n);
    let mut sum = Complex64::new(0.0, 0.0);
    for j in 0..m {
        let e = Complex64::from_polar(1.0, std::f64::consts::TAU * j as f64 / m as f64);
        // du = i r e^{it} dt
        sum += Complex64::new(0.0, radius) * e / v(u1 + radius * e);
    }
    let integral = sum * (std::f64::consts::TAU / m as f64);
    // ∮ = 2πi Res, so τ = -2πi Res = -∮
    -integral
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn residue_matches_circle_quadrature(
        n in 1u32..=6,
        re in -2.5f64..2.5,
        im in 0.4f64..3.0,
        a0 in 0.5f64..2.0,
    ) {
        let vf = ConjectureVf::new(a0, Complex64::new(re, im), n).unwrap();
        let series = residue_series(&vf).tau;
        let circle = tau_by_circle(&vf);
        prop_assert!((series - circle).norm() <= 1e-9 * series.norm(), "{} vs {}", series, circle);
        // imaginary part is half the vertical period scale
        let half_d = std::f64::consts::PI / (a0 * (re * re + im * im).powi(n as i32));
        prop_assert!((series.im - half_d).abs() <= 1e-10 * half_d);
        if re.abs() > 1e-6 {
            prop_assert_eq!(sign_class(series.re, series.norm()), -sign_class(re, 1.0));
        }
    }

    #[test]
    fn lagrange_solution_satisfies_functional_equation(
        mut g in proptest::collection::vec(-1.0f64..1.0, 3..20),
    ) {
        g[0] = 1.0;
        let g = RealSeries::new(g);
        let order = g.order();
        let h = RealSeries::lagrange_invert(&g, order).unwrap();
        // w · g(h(w)), truncated to the same order
        let gh = g.compose(&h).unwrap();
        let rhs: Vec<f64> = std::iter::once(0.0).chain(gh.coeffs().iter().copied()).take(order + 1).collect();
        for k in 0..=order {
            let scale = 1.0 + rhs[k].abs();
            prop_assert!((h.coeff(k) - rhs[k]).abs() <= 1e-10 * scale, "k={} {} vs {}", k, h.coeff(k), rhs[k]);
        }
    }

    #[test]
    fn compound_poisson_basis_gives_nonnegative_rho(
        rates in proptest::collection::vec(0.0f64..1.0, 1..8),
    ) {
        // β = exp(Σ λ_j z^j) is infinitely divisible with c_j = λ_j
        let mut lambda = vec![0.0];
        lambda.extend(rates.iter().copied());
        let order = 24;
        lambda.resize(order + 1, 0.0);
        let beta = RealSeries::new(lambda.clone()).exp().unwrap();
        if beta.coeffs().iter().filter(|&&b| b > 0.0).count() < 2 {
            return Ok(());
        }
        let c = cumulant_coeffs(beta.coeffs()).unwrap();
        for j in 1..=order {
            prop_assert!((c[j] - lambda[j]).abs() <= 1e-10 * (1.0 + lambda[j]));
        }
        let rho = rho_from_c(&c);
        prop_assert!(rho.iter().all(|&r| r >= -1e-10));
    }

    #[test]
    fn projection_distance_ignores_basis_choice(
        entries in proptest::collection::vec(-1.0f64..1.0, 18),
        mix in proptest::collection::vec(-1.0f64..1.0, 4),
    ) {
        let a = Matrix::from_fn(6, 3, |i, j| entries[3 * i + j] + if i == j { 2.0 } else { 0.0 });
        let r = Matrix::from_fn(3, 3, |i, j| {
            let off = if i < 2 && j < 2 { mix[2 * i + j] * 0.4 } else { 0.0 };
            off + if i == j { 1.0 } else { 0.0 }
        });
        let qa = orthonormalize(&a).unwrap();
        let qb = orthonormalize(&a.matmul(&r).unwrap()).unwrap();
        prop_assert!(subspace_distance(&qa, &qb).unwrap() < 1e-10);
    }
}

/// `κ″ = V(κ′)` and `E_θ[φ] = κ″` at off-grid θ for every family on ℕ.
#[test]
fn discrete_families_at_random_theta() {
    let mut runner = proptest::test_runner::TestRunner::new(ProptestConfig::with_cases(6));
    for fam in Family::defaults().into_iter().filter(Family::is_discrete) {
        let nef = fam.nef().unwrap();
        let rf = fam.reduction_function().unwrap();
        let v = fam.variance_polynomial().unwrap();
        let (lo, hi) = fam.probe_range();
        runner
            .run(&(lo..hi), |theta| {
                let c = nef.cumulant_derivs(theta).unwrap();
                let vu = v.iter().rev().fold(0.0, |acc, a| acc * c.mean + a);
                prop_assert!((c.variance - vu).abs() <= 1e-8 * c.variance.max(1.0), "{} at {}", fam, theta);
                let e = expectation_of_rf(&nef, &rf, theta).unwrap();
                let k2 = kappa_pp(fam, &nef, theta).unwrap();
                prop_assert!((e - k2).abs() <= 1e-6 * k2, "{}: {} vs {}", fam, e, k2);
                Ok(())
            })
            .unwrap();
    }
}
