//! Latent factor simulation: `E[Y | M] = ΦM` with NEF noise, variance
//! correction through a reduction function, and recovery of the row space
//! of `M` from the adjusted Gram matrix.
//!
//! `Y` is `k×n`; column `i` is averaged over its `k` rows when forming
//! `σ̂_{i,k} = k⁻¹ Σ_j φ(y_{ji})`.

#[allow(unused_imports)]
use num_traits::Float as _;
use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::Family;
use crate::linalg::{orthonormalize, subspace_distance, top_r_subspace, Matrix};
use crate::nef::Nef;
use crate::rf::ReductionFunction;

const MODEL_KEY: u64 = 0x6c61_7465_6e74_0001;

/// Independent stream for cell `(i, j)` of the draw keyed by `seed`.
pub fn cell_rng(seed: u64, i: usize, j: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((i as u64) << 20) | j as u64);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatentModel {
    pub family: Family,
    /// `k×r`.
    pub loadings: Matrix,
    /// `r×n`, rank `r`.
    pub factors: Matrix,
}

impl LatentModel {
    pub fn new(family: Family, loadings: Matrix, factors: Matrix) -> Result<Self> {
        if loadings.cols() != factors.rows() {
            return Err(Error::DimensionMismatch(format!(
                "loadings {}x{} vs factors {}x{}",
                loadings.rows(),
                loadings.cols(),
                factors.rows(),
                factors.cols()
            )));
        }
        if factors.rows() > factors.cols() {
            return Err(Error::DimensionMismatch("need n >= r".into()));
        }
        Ok(Self { family, loadings, factors })
    }

    /// Loadings from `U(0.2, 1.2)` and factors from `U(0.5, 1.5)`, so every
    /// mean lies in `[0.1r, 1.8r]`. Loading rows are drawn in order, so the
    /// first rows agree across `k` for a fixed seed.
    pub fn random(family: Family, k: usize, n: usize, r: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ MODEL_KEY);
        let factors = Matrix::from_fn(r, n, |_, _| rng.random_range(0.5..1.5));
        rng.set_stream(1);
        let loadings = Matrix::from_fn(k, r, |_, _| rng.random_range(0.2..1.2));
        Self::new(family, loadings, factors)
    }

    pub fn k(&self) -> usize {
        self.loadings.rows()
    }

    pub fn n(&self) -> usize {
        self.factors.cols()
    }

    pub fn r(&self) -> usize {
        self.factors.rows()
    }

    pub fn means(&self) -> Matrix {
        // Dimensions are checked on construction.
        self.loadings.matmul(&self.factors).unwrap_or_else(|_| Matrix::zeros(0, 0))
    }

    /// Orthonormal `n×r` basis of the row space of `M`.
    pub fn row_space(&self) -> Result<Matrix> {
        orthonormalize(&self.factors.transpose())
    }

    /// `σ_{i,k} = k⁻¹ Σ_j V(μ_{ji})`.
    pub fn true_variances(&self) -> Vec<f64> {
        let mu = self.means();
        let k = self.k() as f64;
        (0..self.n()).map(|i| (0..self.k()).map(|j| self.family.variance_fn(mu[(j, i)])).sum::<f64>() / k).collect()
    }
}

/// Draws `y_{ji} ~ F_{θ(μ_{ji})}` independently.
pub fn generate(model: &LatentModel, nef: &Nef, seed: u64) -> Result<Matrix> {
    let mu = model.means();
    let mut y = Matrix::zeros(model.k(), model.n());
    for j in 0..model.k() {
        for i in 0..model.n() {
            let m = mu[(j, i)];
            let theta =
                nef.theta_for_mean(m).map_err(|_| Error::CellMeanOutOfDomain { row: j, col: i, mean: m })?;
            let mut rng = cell_rng(seed, j, i);
            y[(j, i)] = nef.sample_with(&mut rng, theta, 1)?[0];
        }
    }
    Ok(y)
}

/// `σ̂_{i,k} = k⁻¹ Σ_j φ(y_{ji})` per column.
pub fn dk_hat(y: &Matrix, rf: &ReductionFunction) -> Result<Vec<f64>> {
    let k = y.rows() as f64;
    let mut out = alloc::vec![0.0; y.cols()];
    for j in 0..y.rows() {
        for (i, acc) in out.iter_mut().enumerate() {
            let x = y[(j, i)];
            let v = if x == 0.0 { rf.value_at_zero_atom().or_else(|| rf.eval(x)) } else { rf.eval(x) };
            *acc += v.ok_or_else(|| Error::RfUnavailable(format!("{}: φ undefined at {x}", rf.label)))?;
        }
    }
    for v in &mut out {
        *v /= k;
    }
    Ok(out)
}

/// `G_k = k⁻¹YᵀY − diag(dk)`, symmetrised exactly.
pub fn gram_adjusted(y: &Matrix, dk: &[f64]) -> Result<Matrix> {
    if dk.len() != y.cols() {
        return Err(Error::DimensionMismatch(format!("{} variances for {} columns", dk.len(), y.cols())));
    }
    let n = y.cols();
    let k = y.rows() as f64;
    let mut g = Matrix::zeros(n, n);
    for j in 0..y.rows() {
        let row = y.row(j);
        for a in 0..n {
            for b in 0..=a {
                g[(a, b)] += row[a] * row[b];
            }
        }
    }
    for a in 0..n {
        for b in 0..=a {
            let v = g[(a, b)] / k - if a == b { dk[a] } else { 0.0 };
            g[(a, b)] = v;
            g[(b, a)] = v;
        }
    }
    Ok(g)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub family: Family,
    pub ks: Vec<usize>,
    pub n: usize,
    pub r: usize,
    pub seeds: Vec<u64>,
}

impl ExperimentConfig {
    pub fn poisson_default() -> Self {
        Self { family: Family::Poisson, ks: alloc::vec![200, 2000, 20000], n: 10, r: 2, seeds: (1..=20).collect() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.r == 0 || self.n < self.r || self.n > 64 {
            return Err(Error::InvalidParameter(format!("need 1 <= r <= n <= 64, got r={} n={}", self.r, self.n)));
        }
        if self.ks.is_empty() || self.ks.iter().any(|&k| k < self.n) {
            return Err(Error::InvalidParameter("every k must be at least n".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidParameter("no seeds".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub seed: u64,
    pub k: usize,
    pub dk_hat: Vec<f64>,
    pub dk_true: Vec<f64>,
    #[serde(skip)]
    pub gram: Matrix,
    #[serde(skip)]
    pub subspace: Matrix,
    pub distance: f64,
    /// Distance when `D` is set to zero.
    pub distance_unadjusted: f64,
    pub max_dk_error: f64,
}

/// One replicate: model and draws keyed by `seed`, factors shared across `k`.
pub fn run_replicate(
    family: Family,
    nef: &Nef,
    rf: &ReductionFunction,
    k: usize,
    n: usize,
    r: usize,
    seed: u64,
) -> Result<ExperimentResult> {
    let model = LatentModel::random(family, k, n, r, seed)?;
    let y = generate(&model, nef, seed)?;
    let dk = dk_hat(&y, rf)?;
    let truth = model.true_variances();
    let gram = gram_adjusted(&y, &dk)?;
    let target = model.row_space()?;
    let subspace = top_r_subspace(&gram, r)?;
    let distance = subspace_distance(&subspace, &target)?;
    let raw = gram_adjusted(&y, &alloc::vec![0.0; n])?;
    let distance_unadjusted = subspace_distance(&top_r_subspace(&raw, r)?, &target)?;
    let max_dk_error = dk.iter().zip(&truth).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(ExperimentResult { seed, k, dk_hat: dk, dk_true: truth, gram, subspace, distance, distance_unadjusted, max_dk_error })
}

/// Every `(k, seed)` pair in ladder order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ExperimentResult>> {
    config.validate()?;
    let nef = config.family.nef()?;
    let rf = config.family.reduction_function()?;
    let mut out = Vec::with_capacity(config.ks.len() * config.seeds.len());
    for &k in &config.ks {
        for &seed in &config.seeds {
            out.push(run_replicate(config.family, &nef, &rf, k, config.n, config.r, seed)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderStep {
    pub k: usize,
    pub median_distance: f64,
    pub median_unadjusted: f64,
    /// Fraction of seeds where the adjusted distance is strictly smaller.
    pub adjusted_win_rate: f64,
    pub max_dk_error: f64,
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len();
    if m == 0 {
        f64::NAN
    } else if m % 2 == 1 {
        values[m / 2]
    } else {
        0.5 * (values[m / 2 - 1] + values[m / 2])
    }
}

pub fn summarize(results: &[ExperimentResult]) -> Vec<LadderStep> {
    let mut ks: Vec<usize> = results.iter().map(|r| r.k).collect();
    ks.dedup();
    ks.into_iter()
        .map(|k| {
            let rows: Vec<&ExperimentResult> = results.iter().filter(|r| r.k == k).collect();
            let mut d: Vec<f64> = rows.iter().map(|r| r.distance).collect();
            let mut u: Vec<f64> = rows.iter().map(|r| r.distance_unadjusted).collect();
            let wins = rows.iter().filter(|r| r.distance < r.distance_unadjusted).count();
            LadderStep {
                k,
                median_distance: median(&mut d),
                median_unadjusted: median(&mut u),
                adjusted_win_rate: wins as f64 / rows.len() as f64,
                max_dk_error: rows.iter().map(|r| r.max_dk_error).fold(0.0, f64::max),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnbiasednessColumn {
    pub column: usize,
    pub mean: f64,
    pub std_err: f64,
    pub truth: f64,
    pub passed: bool,
}

/// Replicates `σ̂` over fresh draws of a fixed model and compares each
/// column's average against `σ` at `3·SE`.
pub fn unbiasedness_check(
    model: &LatentModel,
    nef: &Nef,
    rf: &ReductionFunction,
    replicates: u64,
    seed: u64,
) -> Result<Vec<UnbiasednessColumn>> {
    let n = model.n();
    let mut sum = alloc::vec![0.0; n];
    let mut sum_sq = alloc::vec![0.0; n];
    for rep in 0..replicates {
        let y = generate(model, nef, seed.wrapping_add(rep))?;
        for (i, v) in dk_hat(&y, rf)?.into_iter().enumerate() {
            sum[i] += v;
            sum_sq[i] += v * v;
        }
    }
    let rr = replicates as f64;
    let truth = model.true_variances();
    Ok((0..n)
        .map(|i| {
            let mean = sum[i] / rr;
            let var = (sum_sq[i] - rr * mean * mean) / (rr - 1.0);
            let std_err = (var.max(0.0) / rr).sqrt();
            UnbiasednessColumn { column: i, mean, std_err, truth: truth[i], passed: (mean - truth[i]).abs() <= 3.0 * std_err }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_model(family: Family, k: usize, n: usize, mean: f64) -> LatentModel {
        LatentModel::new(family, Matrix::from_fn(k, 1, |_, _| 1.0), Matrix::from_fn(1, n, |_, _| mean)).unwrap()
    }

    #[test]
    fn normal_centered_columns() {
        let m = constant_model(Family::Normal, 4000, 3, 0.0);
        let y = generate(&m, &Family::Normal.nef().unwrap(), 5).unwrap();
        for i in 0..3 {
            let mean = y.column(i).iter().sum::<f64>() / 4000.0;
            assert!(mean.abs() < 4.0 / 4000f64.sqrt());
        }
    }

    #[test]
    fn poisson_moments_and_dk() {
        let k = 10_000;
        let m = constant_model(Family::Poisson, k, 2, 3.0);
        let nef = Family::Poisson.nef().unwrap();
        let y = generate(&m, &nef, 9).unwrap();
        let se = (3.0 / k as f64).sqrt();
        for i in 0..2 {
            let col = y.column(i);
            let mean = col.iter().sum::<f64>() / k as f64;
            let var = col.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k as f64 - 1.0);
            assert!((mean - 3.0).abs() < 4.0 * se);
            assert!((var - 3.0).abs() < 4.0 * (2.0 * 9.0 / k as f64 + 3.0 / k as f64).sqrt());
        }
        let dk = dk_hat(&y, &Family::Poisson.reduction_function().unwrap()).unwrap();
        assert!(dk.iter().all(|&d| (d - 3.0).abs() < 4.0 * se));
    }

    #[test]
    fn normal_dk_is_exactly_one() {
        let m = constant_model(Family::Normal, 50, 2, 0.5);
        let y = generate(&m, &Family::Normal.nef().unwrap(), 1).unwrap();
        assert_eq!(dk_hat(&y, &Family::Normal.reduction_function().unwrap()).unwrap(), alloc::vec![1.0, 1.0]);
    }

    #[test]
    fn negbin_dk() {
        let k = 20_000;
        let fam = Family::NegBin(2.0);
        let m = constant_model(fam, k, 1, 2.0);
        let y = generate(&m, &fam.nef().unwrap(), 3).unwrap();
        let dk = dk_hat(&y, &fam.reduction_function().unwrap()).unwrap();
        // φ(x) = (2x + x²)/3 has a finite fourth moment; 0.15 is ~4 SE here.
        assert!((dk[0] - 4.0).abs() < 0.15, "{}", dk[0]);
    }

    #[test]
    fn generation_is_deterministic() {
        let m = LatentModel::random(Family::Poisson, 30, 4, 2, 7).unwrap();
        let nef = Family::Poisson.nef().unwrap();
        assert_eq!(generate(&m, &nef, 7).unwrap(), generate(&m, &nef, 7).unwrap());
        assert_ne!(generate(&m, &nef, 7).unwrap(), generate(&m, &nef, 8).unwrap());
    }

    #[test]
    fn model_rows_are_prefix_stable() {
        let a = LatentModel::random(Family::Poisson, 10, 4, 2, 3).unwrap();
        let b = LatentModel::random(Family::Poisson, 20, 4, 2, 3).unwrap();
        assert_eq!(a.factors, b.factors);
        assert_eq!(a.loadings.row(9), b.loadings.row(9));
    }

    #[test]
    fn gram_examples() {
        let y = Matrix::zeros(5, 3);
        assert_eq!(gram_adjusted(&y, &[0.0; 3]).unwrap(), Matrix::zeros(3, 3));
        let k = 4;
        let y = Matrix::from_rows(&[
            alloc::vec![1.0, 1.0],
            alloc::vec![1.0, -1.0],
            alloc::vec![1.0, 1.0],
            alloc::vec![1.0, -1.0],
        ])
        .unwrap();
        assert_eq!(y.rows(), k);
        assert_eq!(gram_adjusted(&y, &[0.0, 0.0]).unwrap(), Matrix::identity(2));
        assert!(gram_adjusted(&y, &[0.0]).is_err());
    }

    #[test]
    fn out_of_domain_cell_reported() {
        let m = constant_model(Family::Binomial(2), 3, 2, 2.5);
        let err = generate(&m, &Family::Binomial(2).nef().unwrap(), 1).unwrap_err();
        assert!(matches!(err, Error::CellMeanOutOfDomain { row: 0, col: 0, .. }));
    }

    #[test]
    fn gram_bias_cancels_in_expectation() {
        let m = LatentModel::random(Family::Poisson, 40, 3, 1, 2).unwrap();
        let nef = Family::Poisson.nef().unwrap();
        let rf = Family::Poisson.reduction_function().unwrap();
        let mu = m.means();
        let reps = 200;
        let mut acc = [[0.0; 3]; 3];
        let mut acc_sq = [[0.0; 3]; 3];
        for s in 0..reps {
            let y = generate(&m, &nef, 100 + s).unwrap();
            let g = gram_adjusted(&y, &dk_hat(&y, &rf).unwrap()).unwrap();
            for a in 0..3 {
                for b in 0..3 {
                    acc[a][b] += g[(a, b)];
                    acc_sq[a][b] += g[(a, b)] * g[(a, b)];
                }
            }
        }
        let r = reps as f64;
        for a in 0..3 {
            for b in 0..3 {
                let want = (0..40).map(|j| mu[(j, a)] * mu[(j, b)]).sum::<f64>() / 40.0;
                let mean = acc[a][b] / r;
                let se = ((acc_sq[a][b] / r - mean * mean) / (r - 1.0)).sqrt();
                assert!((mean - want).abs() < 3.0 * se, "({a},{b}) {mean} vs {want} se {se}");
            }
        }
    }

    #[test]
    fn normal_adjustment_is_a_spectrum_shift() {
        let nef = Family::Normal.nef().unwrap();
        let rf = Family::Normal.reduction_function().unwrap();
        let res = run_replicate(Family::Normal, &nef, &rf, 300, 6, 2, 4).unwrap();
        let y = generate(&LatentModel::random(Family::Normal, 300, 6, 2, 4).unwrap(), &nef, 4).unwrap();
        let raw = top_r_subspace(&gram_adjusted(&y, &[0.0; 6]).unwrap(), 2).unwrap();
        assert!(subspace_distance(&res.subspace, &raw).unwrap() < 1e-10);
    }

    #[test]
    fn config_validation() {
        assert!(ExperimentConfig::poisson_default().validate().is_ok());
        let mut c = ExperimentConfig::poisson_default();
        c.r = 11;
        assert!(c.validate().is_err());
    }
}
