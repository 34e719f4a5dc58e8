use std::fs::File;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use qkrylov::block::{block_lanczos_run, block_ritz_values, BlockVector, DEFAULT_DEFLATION_TOL};
use qkrylov::dense;
use qkrylov::incremental::run_incremental;
use qkrylov::lanczos::{lanczos_run, ritz_values, DEFAULT_BREAKDOWN_TOL};
use qkrylov::noise::{cost_table, mae_sweep, MaeSweepConfig};
use qkrylov::nonhermitian::{biorthogonality_check, random_nonsymmetric, two_sided_block_run};
use qkrylov::spin::{build_xxz, exact_diagonalize, exact_eigenvalues, CouplingKind, HamiltonianSpec, ED_MAX_SITES};
use qkrylov::{DenseOperator, StateVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{Command, ExperimentConfig, SolveStart};

/// Runs the configured command and returns the artifacts it wrote.
pub fn dispatch(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    match cfg.command {
        Command::Solve => solve(cfg, dir),
        Command::Incremental => incremental(cfg, dir),
        Command::NoiseSweep => noise_sweep(cfg, dir),
        Command::NonhermitianDemo => nonhermitian_demo(cfg, dir),
        Command::CostTable => cost(cfg, dir),
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file))
}

fn solve(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let p = &cfg.solve;
    let spec = match &p.hamiltonian_file {
        Some(path) => HamiltonianSpec::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => build_xxz(p.length, p.j_xy, p.j_z).context("building the chain")?,
    };
    if p.block_size == 0 || p.block_size > spec.dim() {
        bail!("solve.block_size must lie in 1..={}", spec.dim());
    }
    let start = match p.start {
        SolveStart::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            BlockVector::random_orthonormal(spec.dim(), p.block_size, &mut rng)?
        }
        SolveStart::H0Ground => {
            let mut h0 = spec.clone();
            h0.terms.retain(|t| t.kind == CouplingKind::XxPlusYy);
            let ed = exact_diagonalize(&h0).context("diagonalizing the XX+YY part")?;
            BlockVector::new(ed.eigenvectors.into_iter().take(p.block_size).collect())?
        }
    };

    let coeff_path;
    let ritz = if p.block_size == 1 {
        let v: &StateVector = &start.columns()[0];
        let run = lanczos_run(&spec, v, p.max_iter, DEFAULT_BREAKDOWN_TOL).context("scalar recursion")?;
        coeff_path = dir.join("solve_coefficients.csv");
        run.coefficients.save(&coeff_path)?;
        ritz_values(&run.coefficients)?
    } else {
        let run = block_lanczos_run(&spec, &start, p.max_iter, DEFAULT_DEFLATION_TOL).context("block recursion")?;
        coeff_path = dir.join("solve_coefficients.toml");
        run.coefficients.save(&coeff_path)?;
        block_ritz_values(&run.coefficients)?
    };
    let exact = if spec.length <= ED_MAX_SITES {
        Some(exact_eigenvalues(&spec)?)
    } else {
        None
    };

    let ritz_path = dir.join("solve_ritz.csv");
    let mut w = csv_writer(&ritz_path)?;
    w.write_record(["index", "ritz", "exact"])?;
    for (i, r) in ritz.iter().enumerate() {
        let e = exact.as_ref().map(|e| e[i].to_string()).unwrap_or_default();
        w.write_record([i.to_string(), r.to_string(), e])?;
    }
    w.flush()?;

    println!("ground energy {:.12}", ritz[0]);
    if let Some(e) = &exact {
        println!("exact         {:.12} (error {:.3e})", e[0], (ritz[0] - e[0]).abs());
    }
    Ok(vec![coeff_path, ritz_path])
}

fn incremental(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for run in &cfg.incremental.runs {
        let record = run_incremental(&run.scenario).with_context(|| format!("run `{}`", run.label))?;
        let path = dir.join(format!("{}_convergence.csv", run.label));
        record.save(&path)?;
        if let Some(last) = record.last() {
            println!(
                "{}: {} stages, final energy {:.10}, delta {:.3e}",
                run.label,
                record.rows.len(),
                last.energy,
                last.delta_vs_exact
            );
        }
        out.push(path);
    }
    Ok(out)
}

fn noise_sweep(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let p = &cfg.noise_sweep;
    let sweep = mae_sweep(&MaeSweepConfig {
        block_size: p.block_size,
        block_counts: p.block_counts.clone(),
        etas: p.etas.clone(),
        seeds: p.seeds,
        base_seed: cfg.seed,
    })
    .context("noise sweep")?;
    sweep.save(dir)?;
    for (b, fit) in &sweep.fits {
        println!("b = {b:>3}: slope {:.4} (r² {:.5})", fit.slope, fit.r_squared);
    }
    Ok(["mae_points.csv", "mae_summary.csv", "slope_report.txt"]
        .iter()
        .map(|f| dir.join(f))
        .collect())
}

fn nonhermitian_demo(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let p = &cfg.nonhermitian;
    if p.block_size == 0 || !p.dimension.is_multiple_of(p.block_size) {
        bail!("nonhermitian.block_size must be positive and divide dimension {}", p.dimension);
    }
    let max_iter = p.max_iter.unwrap_or(p.dimension / p.block_size - 1).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let m = random_nonsymmetric(p.dimension, &mut rng);
    let start = BlockVector::random_real_orthonormal(p.dimension, p.block_size, &mut rng)?;
    let op = DenseOperator::from_real(&m)?;
    let run = two_sided_block_run(&op, &start, &start, max_iter, qkrylov::nonhermitian::DEFAULT_BREAKDOWN_TOL)
        .context("two-sided recursion")?;
    let ritz = run.ritz_values()?;
    let exact = dense::real_general_eigenvalues(&m)?;
    let defect = biorthogonality_check(&run.pair)?;

    let coeff_path = dir.join("nonhermitian_coefficients.toml");
    run.coefficients.save(&coeff_path)?;
    let eig_path = dir.join("nonhermitian_eigenvalues.csv");
    let mut w = csv_writer(&eig_path)?;
    w.write_record(["source", "re", "im"])?;
    for (source, values) in [("ritz", &ritz), ("exact", &exact)] {
        for z in values {
            w.write_record([source.to_string(), z.re.to_string(), z.im.to_string()])?;
        }
    }
    w.flush()?;

    println!("{} iterations, {} Ritz values", run.iterations(), ritz.len());
    println!("biorthogonality defect {defect:.3e}");
    if ritz.len() == exact.len() {
        println!("spectrum pairing distance {:.3e}", dense::max_pairing_distance(&ritz, &exact));
    }
    Ok(vec![coeff_path, eig_path])
}

fn cost(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let q = cfg.cost.q;
    let table = cost_table(q)?;
    let path = dir.join("cost_table.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["q", "d", "cost"])?;
    for (d, c) in &table {
        w.write_record([q.to_string(), d.to_string(), c.to_string()])?;
    }
    w.flush()?;
    if let Some((d, c)) = table.iter().min_by(|a, b| a.1.total_cmp(&b.1)) {
        println!("q = {q}: cheapest D = {d} (cost {c:.3})");
    }
    Ok(vec![path])
}
