//! Coefficient noise, counting-estimator sampling and amplification cost.
//!
//! Synthetic block tridiagonal problems have entries drawn from `[0, 1]`.
//! Gaussian noise of width `η` is added to every coefficient entry and the
//! mean absolute error between sorted clean and noisy spectra is recorded.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::block::BlockCoefficients;
use crate::dense;
use crate::error::{Error, Result};
use crate::lanczos::{ritz_values, TridiagonalCoefficients};
use crate::matrix_io::csv_writer;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub eta: f64,
    pub seed: u64,
}

/// Real symmetric block tridiagonal problem with `block_count` blocks of
/// size `block_size`. `b_list[k]` couples block `k` to block `k + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticBlockProblem {
    pub block_size: usize,
    pub block_count: usize,
    pub a_list: Vec<DMatrix<f64>>,
    pub b_list: Vec<DMatrix<f64>>,
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

impl SyntheticBlockProblem {
    pub fn generate(block_size: usize, block_count: usize, seed: u64) -> Result<Self> {
        if block_size < 1 || block_count < 1 {
            return Err(Error::InvalidArgument(format!(
                "block size and count must be positive, got {block_size} and {block_count}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut uniform = |_: usize, _: usize| rng.random::<f64>();
        let a_list = (0..block_count)
            .map(|_| symmetrize(&DMatrix::from_fn(block_size, block_size, &mut uniform)))
            .collect();
        let b_list = (1..block_count)
            .map(|_| DMatrix::from_fn(block_size, block_size, &mut uniform))
            .collect();
        Ok(Self {
            block_size,
            block_count,
            a_list,
            b_list,
        })
    }

    /// `a = 1` corresponds to the scalar recursion.
    pub fn is_scalar(&self) -> bool {
        self.block_size == 1
    }

    pub fn dimension(&self) -> usize {
        self.block_size * self.block_count
    }

    /// Dense symmetric assembly with `B` below and `Bᵀ` above the diagonal.
    pub fn assemble(&self) -> DMatrix<f64> {
        let s = self.block_size;
        let mut m = DMatrix::zeros(self.dimension(), self.dimension());
        for (k, a) in self.a_list.iter().enumerate() {
            m.view_mut((k * s, k * s), (s, s)).copy_from(a);
        }
        for (k, b) in self.b_list.iter().enumerate() {
            m.view_mut(((k + 1) * s, k * s), (s, s)).copy_from(b);
            m.view_mut((k * s, (k + 1) * s), (s, s)).copy_from(&b.transpose());
        }
        m
    }

    pub fn to_block_coefficients(&self) -> BlockCoefficients {
        let cx = |m: &DMatrix<f64>| m.map(|x| Complex64::new(x, 0.0));
        BlockCoefficients {
            a: self.a_list.iter().map(cx).collect(),
            b: self.b_list.iter().map(cx).collect(),
        }
    }

    /// Copy with Gaussian noise added entrywise. Noise on each `A` is
    /// symmetrized; noise on `B` is not. `η = 0` returns an exact copy.
    pub fn perturbed(&self, noise: &NoiseModel) -> Result<Self> {
        if !(noise.eta >= 0.0) || !noise.eta.is_finite() {
            return Err(Error::InvalidArgument(format!("noise width must be finite and ≥ 0, got {}", noise.eta)));
        }
        if noise.eta == 0.0 {
            return Ok(self.clone());
        }
        let normal = Normal::new(0.0, noise.eta).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
        let s = self.block_size;
        let mut draw = |_: usize, _: usize| normal.sample(&mut rng);
        let a_list = self
            .a_list
            .iter()
            .map(|a| a + symmetrize(&DMatrix::from_fn(s, s, &mut draw)))
            .collect();
        let b_list = self.b_list.iter().map(|b| b + DMatrix::from_fn(s, s, &mut draw)).collect();
        Ok(Self {
            a_list,
            b_list,
            ..self.clone()
        })
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        dense::symmetric_eigenvalues(&self.assemble())
    }
}

/// `(1/M) Σ |xᵢ − yᵢ|` after sorting both.
pub fn mean_absolute_error(clean: &[f64], noisy: &[f64]) -> Result<f64> {
    if clean.len() != noisy.len() || clean.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: clean.len(),
            found: noisy.len(),
        });
    }
    let sorted = |v: &[f64]| {
        let mut v = v.to_vec();
        v.sort_by(f64::total_cmp);
        v
    };
    let (c, n) = (sorted(clean), sorted(noisy));
    Ok(c.iter().zip(&n).map(|(a, b)| (a - b).abs()).sum::<f64>() / c.len() as f64)
}

pub fn perturb_and_mae(problem: &SyntheticBlockProblem, noise: &NoiseModel) -> Result<f64> {
    let clean = problem.eigenvalues()?;
    let noisy = problem.perturbed(noise)?.eigenvalues()?;
    mean_absolute_error(&clean, &noisy)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaeSweepConfig {
    pub block_size: usize,
    pub block_counts: Vec<usize>,
    pub etas: Vec<f64>,
    pub seeds: usize,
    #[serde(default)]
    pub base_seed: u64,
}

impl Default for MaeSweepConfig {
    fn default() -> Self {
        Self {
            block_size: 20,
            block_counts: (4..=20).collect(),
            etas: vec![1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1],
            seeds: 32,
            base_seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaePoint {
    pub block_size: usize,
    pub block_count: usize,
    pub eta: f64,
    pub seed: u64,
    pub mae: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaeSummaryRow {
    pub block_size: usize,
    pub block_count: usize,
    pub eta: f64,
    pub mean_mae: f64,
    pub samples: usize,
}

/// Least-squares line `log₁₀ y = slope · log₁₀ x + intercept`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_log_log(xs: &[f64], ys: &[f64]) -> Result<SlopeFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidArgument("log-log fit needs at least two paired points".into()));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidArgument("log-log fit needs positive data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.log10()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.log10()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("log-log fit needs distinct x values".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(SlopeFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaeSweep {
    pub points: Vec<MaePoint>,
    pub summary: Vec<MaeSummaryRow>,
    /// One fit per block count, over the strictly positive `η` values.
    pub fits: Vec<(usize, SlopeFit)>,
}

fn noise_seed(problem_seed: u64, eta_index: usize) -> u64 {
    problem_seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(eta_index as u64 + 1)
}

/// Evaluates every `(block_count, seed, η)` point. Seed `s` fixes the clean
/// problem; the noise draw additionally depends on the `η` index.
pub fn mae_sweep(config: &MaeSweepConfig) -> Result<MaeSweep> {
    if config.seeds < 1 || config.etas.is_empty() || config.block_counts.is_empty() {
        return Err(Error::InvalidArgument("sweep needs seeds, etas and block counts".into()));
    }
    let jobs: Vec<(usize, u64)> = config
        .block_counts
        .iter()
        .flat_map(|&b| (0..config.seeds as u64).map(move |s| (b, config.base_seed + s)))
        .collect();
    let per_job = jobs
        .par_iter()
        .map(|&(b, seed)| -> Result<Vec<MaePoint>> {
            let problem = SyntheticBlockProblem::generate(config.block_size, b, seed)?;
            let clean = problem.eigenvalues()?;
            config
                .etas
                .iter()
                .enumerate()
                .map(|(k, &eta)| {
                    let noisy = problem
                        .perturbed(&NoiseModel { eta, seed: noise_seed(seed, k) })?
                        .eigenvalues()?;
                    Ok(MaePoint {
                        block_size: config.block_size,
                        block_count: b,
                        eta,
                        seed,
                        mae: mean_absolute_error(&clean, &noisy)?,
                    })
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<MaePoint> = per_job.into_iter().flatten().collect();

    let mut summary = Vec::new();
    let mut fits = Vec::new();
    for &b in &config.block_counts {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for &eta in &config.etas {
            let vals: Vec<f64> = points
                .iter()
                .filter(|p| p.block_count == b && p.eta == eta)
                .map(|p| p.mae)
                .collect();
            let mean_mae = vals.iter().sum::<f64>() / vals.len() as f64;
            summary.push(MaeSummaryRow {
                block_size: config.block_size,
                block_count: b,
                eta,
                mean_mae,
                samples: vals.len(),
            });
            if eta > 0.0 {
                xs.push(eta);
                ys.push(mean_mae);
            }
        }
        if xs.len() >= 2 {
            fits.push((b, fit_log_log(&xs, &ys)?));
        }
    }
    Ok(MaeSweep { points, summary, fits })
}

impl MaeSweep {
    pub fn write_points<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv_writer(writer);
        w.write_record(["block_size", "block_count", "eta", "seed", "mae"])?;
        for p in &self.points {
            w.write_record([
                p.block_size.to_string(),
                p.block_count.to_string(),
                p.eta.to_string(),
                p.seed.to_string(),
                p.mae.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_summary<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv_writer(writer);
        w.write_record(["block_size", "block_count", "eta", "mean_mae", "samples"])?;
        for r in &self.summary {
            w.write_record([
                r.block_size.to_string(),
                r.block_count.to_string(),
                r.eta.to_string(),
                r.mean_mae.to_string(),
                r.samples.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Plain-text fit report, one line per block count.
    pub fn slope_report(&self) -> String {
        let mut out = String::from("block_count slope intercept r_squared\n");
        for (b, f) in &self.fits {
            out.push_str(&format!("{b} {:.6} {:.6} {:.6}\n", f.slope, f.intercept, f.r_squared));
        }
        out
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        self.write_points(std::fs::File::create(dir.join("mae_points.csv"))?)?;
        self.write_summary(std::fs::File::create(dir.join("mae_summary.csv"))?)?;
        std::fs::write(dir.join("slope_report.txt"), self.slope_report())?;
        Ok(())
    }
}

/// Success-ratio estimator of a probability from `shots` trials.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountingSampler {
    pub true_p: f64,
    pub shots: u64,
    pub seed: u64,
}

impl CountingSampler {
    /// Upper bound on the standard error, `1/(2√shots)`.
    pub fn standard_error_bound(&self) -> f64 {
        0.5 / (self.shots as f64).sqrt()
    }
}

/// Draws `successes / shots` for success probability `p`.
pub fn sample_ratio<R: Rng + ?Sized>(p: f64, shots: u64, rng: &mut R) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be positive".into()));
    }
    let successes = Binomial::new(shots, p)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?
        .sample(rng);
    Ok(successes as f64 / shots as f64)
}

pub fn sample_expectation(sampler: &CountingSampler) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed);
    sample_ratio(sampler.true_p, sampler.shots, &mut rng)
}

/// Replaces each coefficient by a counting estimate. Alphas are encoded as
/// `p = (α/Λ + 1)/2` and betas as `p = β/Λ`, where `Λ` bounds `‖H‖`.
pub fn sample_coefficients<R: Rng + ?Sized>(
    coeffs: &TridiagonalCoefficients,
    scale: f64,
    shots: u64,
    rng: &mut R,
) -> Result<TridiagonalCoefficients> {
    if !(scale > 0.0) {
        return Err(Error::InvalidArgument(format!("scale must be positive, got {scale}")));
    }
    let alphas = coeffs
        .alphas
        .iter()
        .map(|a| sample_ratio((a / scale + 1.0) / 2.0, shots, rng).map(|p| scale * (2.0 * p - 1.0)))
        .collect::<Result<Vec<_>>>()?;
    let betas = coeffs
        .betas
        .iter()
        .map(|b| sample_ratio(b / scale, shots, rng).map(|p| scale * p))
        .collect::<Result<Vec<_>>>()?;
    TridiagonalCoefficients::new(alphas, betas)
}

/// Mean `|E₀(sampled) − E₀(exact)|` over `seeds` independent draws.
pub fn sampled_ground_error(coeffs: &TridiagonalCoefficients, scale: f64, shots: u64, seeds: usize, base_seed: u64) -> Result<f64> {
    let exact = ritz_values(coeffs)?[0];
    let total = (0..seeds as u64)
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(s));
            let sampled = sample_coefficients(coeffs, scale, shots, &mut rng)?;
            Ok((ritz_values(&sampled)?[0] - exact).abs())
        })
        .sum::<Result<f64>>()?;
    Ok(total / seeds as f64)
}

/// `q` auxiliary qubits applied in groups of `d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostModel {
    pub q: u32,
    pub d: u32,
}

/// `D · 2^(⌈q/D⌉/2)`.
pub fn oaa_cost(model: &CostModel) -> Result<f64> {
    if model.d < 1 || model.d > model.q {
        return Err(Error::InvalidArgument(format!(
            "group size must satisfy 1 ≤ D ≤ q, got D = {} and q = {}",
            model.d, model.q
        )));
    }
    let groups = model.q.div_ceil(model.d);
    Ok(model.d as f64 * 2f64.powf(groups as f64 / 2.0))
}

/// Cost for every admissible `D`, with `D` ascending.
pub fn cost_table(q: u32) -> Result<Vec<(u32, f64)>> {
    (1..=q).map(|d| oaa_cost(&CostModel { q, d }).map(|c| (d, c))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::block::block_ritz_values;

    #[test]
    fn zero_noise_is_exact() {
        let p = SyntheticBlockProblem::generate(5, 4, 3).unwrap();
        let noise = NoiseModel { eta: 0.0, seed: 9 };
        assert_eq!(p.perturbed(&noise).unwrap(), p);
        assert_eq!(perturb_and_mae(&p, &noise).unwrap(), 0.0);
    }

    #[test]
    fn generation_is_seeded_and_bounded() {
        let p = SyntheticBlockProblem::generate(4, 3, 1).unwrap();
        assert_eq!(p, SyntheticBlockProblem::generate(4, 3, 1).unwrap());
        assert_ne!(p, SyntheticBlockProblem::generate(4, 3, 2).unwrap());
        assert_eq!((p.a_list.len(), p.b_list.len()), (3, 2));
        for m in p.a_list.iter().chain(&p.b_list) {
            assert!(m.iter().all(|x| (0.0..=1.0).contains(x)));
        }
        for a in &p.a_list {
            assert_eq!(a, &a.transpose());
        }
        let m = p.assemble();
        assert_eq!(m, m.transpose());
        assert!(SyntheticBlockProblem::generate(0, 3, 1).is_err());
    }

    #[test]
    fn assembly_agrees_with_block_solver() {
        let p = SyntheticBlockProblem::generate(3, 5, 4).unwrap();
        let ours = p.eigenvalues().unwrap();
        let blocks = block_ritz_values(&p.to_block_coefficients()).unwrap();
        for (a, b) in ours.iter().zip(&blocks) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn mae_is_deterministic_and_weyl_bounded() {
        let p = SyntheticBlockProblem::generate(6, 5, 11).unwrap();
        for seed in 0..8 {
            let noise = NoiseModel { eta: 1e-2, seed };
            let mae = perturb_and_mae(&p, &noise).unwrap();
            assert_eq!(mae.to_bits(), perturb_and_mae(&p, &noise).unwrap().to_bits());
            let diff = p.perturbed(&noise).unwrap().assemble() - p.assemble();
            let spectral = diff.singular_values().max();
            assert!(mae > 0.0 && mae <= spectral, "mae {mae} vs ‖N‖ {spectral}");
        }
    }

    #[test]
    fn mae_permutation_invariant() {
        let a = [3.0, -1.0, 2.0, 0.5];
        let b = [2.9, -1.2, 2.05, 0.5];
        let base = mean_absolute_error(&a, &b).unwrap();
        assert!((base - (0.1 + 0.2 + 0.05) / 4.0).abs() < 1e-15);
        let pa = [a[2], a[0], a[3], a[1]];
        let pb = [b[1], b[3], b[0], b[2]];
        assert_eq!(mean_absolute_error(&pa, &pb).unwrap(), base);
        assert!(mean_absolute_error(&a, &b[..3]).is_err());
    }

    #[test]
    fn rejects_negative_noise() {
        let p = SyntheticBlockProblem::generate(2, 2, 0).unwrap();
        assert!(p.perturbed(&NoiseModel { eta: -1.0, seed: 0 }).is_err());
    }

    #[test]
    fn log_log_fit_recovers_power_law() {
        let xs = [1e-4, 1e-3, 1e-2, 1e-1];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(1.5)).collect();
        let fit = fit_log_log(&xs, &ys).unwrap();
        assert!((fit.slope - 1.5).abs() < 1e-12);
        assert!((fit.intercept - 3f64.log10()).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(fit_log_log(&[1.0], &[1.0]).is_err());
        assert!(fit_log_log(&[1.0, 2.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn small_sweep_outputs() {
        let cfg = MaeSweepConfig {
            block_size: 3,
            block_counts: vec![2, 3],
            etas: vec![0.0, 1e-3, 1e-2],
            seeds: 4,
            base_seed: 7,
        };
        let sweep = mae_sweep(&cfg).unwrap();
        assert_eq!(sweep.points.len(), 2 * 3 * 4);
        assert_eq!(sweep.summary.len(), 6);
        assert_eq!(sweep.fits.len(), 2);
        assert!(sweep.points.iter().filter(|p| p.eta == 0.0).all(|p| p.mae == 0.0));
        let mut buf = Vec::new();
        sweep.write_points(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("block_size,block_count,eta,seed,mae\n"));
        assert_eq!(text.lines().count(), 25);
        assert_eq!(sweep, mae_sweep(&cfg).unwrap());
    }

    #[test]
    fn certain_events() {
        for shots in [1, 10, 1000] {
            let one = CountingSampler { true_p: 1.0, shots, seed: 3 };
            assert_eq!(sample_expectation(&one).unwrap(), 1.0);
            let zero = CountingSampler { true_p: 0.0, ..one };
            assert_eq!(sample_expectation(&zero).unwrap(), 0.0);
        }
        let bad = CountingSampler { true_p: 1.5, shots: 10, seed: 0 };
        assert!(matches!(sample_expectation(&bad), Err(Error::InvalidProbability(_))));
    }

    #[test]
    fn million_shots_concentrate() {
        // Hoeffding: P(|p̂ − p| ≥ 0.002) ≤ 2 exp(−2·10⁶·0.002²) ≈ 6.7e−4
        let misses = (0..100)
            .filter(|&seed| {
                let s = CountingSampler { true_p: 0.5, shots: 1_000_000, seed };
                (sample_expectation(&s).unwrap() - 0.5).abs() >= 0.002
            })
            .count();
        assert!(misses <= 1);
    }

    #[test]
    fn estimator_is_unbiased() {
        let (p, shots, n) = (0.3, 50, 10_000u64);
        let mean = (0..n)
            .map(|seed| sample_expectation(&CountingSampler { true_p: p, shots, seed }).unwrap())
            .sum::<f64>()
            / n as f64;
        let se = (p * (1.0 - p) / (shots as f64 * n as f64)).sqrt();
        assert!((mean - p).abs() < 3.0 * se, "mean {mean}");
        let s = CountingSampler { true_p: p, shots, seed: 0 };
        assert!((p * (1.0 - p) / shots as f64).sqrt() <= s.standard_error_bound());
    }

    #[test]
    fn cost_formula() {
        assert_eq!(oaa_cost(&CostModel { q: 4, d: 1 }).unwrap(), 4.0);
        assert!((oaa_cost(&CostModel { q: 4, d: 4 }).unwrap() - 4.0 * 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(oaa_cost(&CostModel { q: 5, d: 2 }).unwrap(), 2.0 * 2f64.powf(1.5));
        assert!(oaa_cost(&CostModel { q: 4, d: 0 }).is_err());
        assert!(oaa_cost(&CostModel { q: 4, d: 5 }).is_err());
        let table = cost_table(40).unwrap();
        assert_eq!(table.len(), 40);
        assert_eq!(table[0], (1, 2f64.powi(20)));
    }
}
