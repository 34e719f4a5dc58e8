use qkrylov::block::{block_lanczos_run, BlockCoefficients, BlockVector, DEFAULT_DEFLATION_TOL};
use qkrylov::incremental::{run_incremental, ScenarioConfig};
use qkrylov::lanczos::{lanczos_run, TridiagonalCoefficients, DEFAULT_BREAKDOWN_TOL};
use qkrylov::nonhermitian::{random_nonsymmetric, two_sided_block_run, NonHermitianBlockTridiagonal};
use qkrylov::noise::{mae_sweep, MaeSweepConfig};
use qkrylov::spin::{build_xxz, HamiltonianSpec};
use qkrylov::{DenseOperator, StateVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn spec_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("chain.toml");
    let spec = build_xxz(6, 1.0, 0.3).unwrap().with_constant(-0.5);
    spec.save(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("length = 6"));
    assert!(text.contains("XX+YY"));
    assert_eq!(HamiltonianSpec::load(&path).unwrap(), spec);
}

#[test]
fn scalar_coefficient_table_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("coefficients.csv");
    let spec = build_xxz(6, 1.0, 1.0).unwrap();
    let start = StateVector::random(spec.dim(), &mut ChaCha8Rng::seed_from_u64(2));
    let run = lanczos_run(&spec, &start, 8, DEFAULT_BREAKDOWN_TOL).unwrap();
    run.coefficients.save(&path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert!(!bytes.contains(&b'\r'));
    assert!(bytes.starts_with(b"alpha,beta\n"));
    assert_eq!(TridiagonalCoefficients::load(&path).unwrap(), run.coefficients);
}

#[test]
fn malformed_table_is_rejected() {
    let bad_header = "a,b\n1.0,\n";
    assert!(TridiagonalCoefficients::read_table(bad_header.as_bytes()).is_err());
    let beta_on_first_row = "alpha,beta\n1.0,2.0\n";
    assert!(TridiagonalCoefficients::read_table(beta_on_first_row.as_bytes()).is_err());
    let not_a_number = "alpha,beta\n1.0,\nx,1.0\n";
    assert!(TridiagonalCoefficients::read_table(not_a_number.as_bytes()).is_err());
}

#[test]
fn block_coefficients_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("block.toml");
    let spec = build_xxz(5, 1.0, 0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let start = BlockVector::random_orthonormal(spec.dim(), 2, &mut rng).unwrap();
    let run = block_lanczos_run(&spec, &start, 4, DEFAULT_DEFLATION_TOL).unwrap();
    run.coefficients.save(&path).unwrap();
    assert_eq!(BlockCoefficients::load(&path).unwrap(), run.coefficients);
}

#[test]
fn two_sided_coefficients_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("two_sided.toml");
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let m = random_nonsymmetric(12, &mut rng);
    let op = DenseOperator::from_real(&m).unwrap();
    let start = BlockVector::random_real_orthonormal(12, 2, &mut rng).unwrap();
    let run = two_sided_block_run(&op, &start, &start, 3, DEFAULT_BREAKDOWN_TOL).unwrap();
    run.coefficients.save(&path).unwrap();
    assert_eq!(NonHermitianBlockTridiagonal::load(&path).unwrap(), run.coefficients);
    // a block file lacks the c section
    let plain = BlockCoefficients {
        a: run.coefficients.a.clone(),
        b: run.coefficients.b.clone(),
    };
    assert!(NonHermitianBlockTridiagonal::from_toml_str(&plain.to_toml_string().unwrap()).is_err());
}

#[test]
fn convergence_record_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ramp.csv");
    let cfg = ScenarioConfig {
        length: 6,
        ..ScenarioConfig::small()
    };
    run_incremental(&cfg).unwrap().save(&path).unwrap();
    let mut reader = csv::Reader::from_path(&path).unwrap();
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        ["terms_added", "lambda_fraction", "energy", "delta_vs_exact", "lanczos_iters"]
    );
    assert_eq!(reader.records().count(), 5);
}

#[test]
fn sweep_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = MaeSweepConfig {
        block_size: 2,
        block_counts: vec![3],
        etas: vec![1e-3, 1e-2],
        seeds: 3,
        base_seed: 0,
    };
    mae_sweep(&cfg).unwrap().save(dir.path()).unwrap();
    let points = std::fs::read_to_string(dir.path().join("mae_points.csv")).unwrap();
    assert_eq!(points.lines().count(), 7);
    let summary = std::fs::read_to_string(dir.path().join("mae_summary.csv")).unwrap();
    assert!(summary.starts_with("block_size,block_count,eta,mean_mae,samples\n"));
    let report = std::fs::read_to_string(dir.path().join("slope_report.txt")).unwrap();
    assert_eq!(report.lines().count(), 2);
}
