//! Scalar Lanczos recursion with full reorthogonalization.
//!
//! Starting from a normalized `|ψ₀⟩`, each step forms
//! `|r⟩ = H|ψₙ⟩ − αₙ|ψₙ⟩ − βₙ|ψₙ₋₁⟩` with `αₙ = ⟨ψₙ|H|ψₙ⟩`, projects out every
//! stored basis vector, and sets `βₙ₊₁ = ‖r‖`, `|ψₙ₊₁⟩ = |r⟩/βₙ₊₁`. The betas are
//! therefore real and non-negative, and `βₙ = ⟨ψₙ|H|ψₙ₋₁⟩`.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::{check_dim, LinearOperator};
use crate::state::StateVector;
use crate::tridiagonal::symmetric_tridiagonal_eigen;

/// Default residual norm below which the Krylov space is treated as invariant.
pub const DEFAULT_BREAKDOWN_TOL: f64 = 1e-10;

/// Accepted deviation of a start vector's norm from one.
pub const START_NORM_TOL: f64 = 1e-10;

/// Diagonal (`alphas`) and off-diagonal (`betas`) of the Krylov-space Hamiltonian.
#[derive(Clone, Debug, PartialEq)]
pub struct TridiagonalCoefficients {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl TridiagonalCoefficients {
    pub fn new(alphas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        let c = Self { alphas, betas };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() {
            return Err(Error::InvalidArgument("no alpha coefficients".into()));
        }
        if self.betas.len() + 1 != self.alphas.len() {
            return Err(Error::InvalidArgument(format!(
                "{} alphas need {} betas, got {}",
                self.alphas.len(),
                self.alphas.len() - 1,
                self.betas.len()
            )));
        }
        Ok(())
    }

    /// Dimension of the Krylov space.
    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    /// Leading `n × n` section, i.e. the coefficients of an `n`-vector run.
    pub fn truncated(&self, n: usize) -> Self {
        let n = n.clamp(1, self.alphas.len());
        Self {
            alphas: self.alphas[..n].to_vec(),
            betas: self.betas[..n - 1].to_vec(),
        }
    }

    /// Two-column `alpha,beta` table. Row `n` holds `αₙ` and `βₙ`; row 0 has no beta.
    pub fn write_table<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = crate::matrix_io::csv_writer(writer);
        w.write_record(["alpha", "beta"])?;
        for (n, a) in self.alphas.iter().enumerate() {
            let beta = if n == 0 {
                String::new()
            } else {
                self.betas[n - 1].to_string()
            };
            w.write_record([a.to_string(), beta])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_table<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["alpha", "beta"] {
            return Err(Error::Parse(format!("unexpected table header {headers:?}")));
        }
        let mut alphas = Vec::new();
        let mut betas = Vec::new();
        for (n, record) in r.records().enumerate() {
            let record = record?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}: {e}", n + 1)))
            };
            alphas.push(parse(&record[0])?);
            match (n, record[1].trim()) {
                (0, "") => {}
                (0, _) => return Err(Error::Parse("row 1 must not carry a beta".into())),
                (_, s) => betas.push(parse(s)?),
            }
        }
        Self::new(alphas, betas)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_table(std::fs::File::create(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_table(std::fs::File::open(path)?)
    }
}

/// Orthonormal Krylov vectors `|ψ₀⟩ … |ψₙ⟩`.
#[derive(Clone, Debug)]
pub struct KrylovBasis {
    pub vectors: Vec<StateVector>,
}

impl KrylovBasis {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, u) in self.vectors.iter().enumerate() {
            for (j, v) in self.vectors.iter().enumerate().skip(i) {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((u.dot(v) - target).norm());
            }
        }
        worst
    }
}

/// One Ritz pair: energy and its coefficients in the Krylov basis.
///
/// `gammas` are complex so that the same type serves the block recursion;
/// for scalar runs the imaginary parts are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenpairReconstruction {
    /// Position in ascending energy order, 0 for the ground state.
    pub excitation_index: usize,
    pub energy: f64,
    pub gammas: Vec<Complex64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    /// The requested number of iterations was performed.
    MaxIterations,
    /// The residual vanished: the Krylov space is invariant under `H`.
    InvariantSubspace,
}

#[derive(Clone, Debug)]
pub struct LanczosRun {
    pub coefficients: TridiagonalCoefficients,
    pub basis: KrylovBasis,
    pub termination: Termination,
}

impl LanczosRun {
    /// Number of completed iterations, i.e. new basis vectors generated.
    pub fn iterations(&self) -> usize {
        self.coefficients.betas.len()
    }
}

pub(crate) fn orthogonalize_against(r: &mut StateVector, basis: &[StateVector]) {
    // two classical Gram-Schmidt passes
    for _ in 0..2 {
        for v in basis {
            let overlap = v.dot(r);
            r.axpy(-overlap, v);
        }
    }
}

/// Runs up to `max_iter` Lanczos iterations from `start`.
///
/// A run of `n` iterations yields `n + 1` alphas, `n` betas and `n + 1` basis
/// vectors. The run stops early when the residual norm drops below
/// `breakdown_tol`.
pub fn lanczos_run<O: LinearOperator + ?Sized>(
    op: &O,
    start: &StateVector,
    max_iter: usize,
    breakdown_tol: f64,
) -> Result<LanczosRun> {
    check_dim(op.dim(), start.len())?;
    if max_iter < 1 {
        return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
    }
    let norm = start.norm();
    if (norm - 1.0).abs() > START_NORM_TOL {
        return Err(Error::NotNormalized { norm });
    }

    let mut basis = vec![start.clone()];
    let mut alphas = Vec::with_capacity(max_iter + 1);
    let mut betas: Vec<f64> = Vec::with_capacity(max_iter);
    let mut termination = Termination::MaxIterations;
    loop {
        let n = basis.len() - 1;
        let mut w = op.apply(&basis[n])?;
        let alpha = basis[n].dot(&w).re;
        alphas.push(alpha);
        if n == max_iter {
            break;
        }
        w.axpy(Complex64::new(-alpha, 0.0), &basis[n]);
        if n > 0 {
            w.axpy(Complex64::new(-betas[n - 1], 0.0), &basis[n - 1]);
        }
        orthogonalize_against(&mut w, &basis);
        let beta = w.norm();
        if beta < breakdown_tol {
            termination = Termination::InvariantSubspace;
            break;
        }
        w.scale(Complex64::new(1.0 / beta, 0.0));
        betas.push(beta);
        basis.push(w);
    }

    Ok(LanczosRun {
        coefficients: TridiagonalCoefficients { alphas, betas },
        basis: KrylovBasis { vectors: basis },
        termination,
    })
}

/// Diagonalizes the tridiagonal matrix; pairs come back in ascending energy.
pub fn tridiagonal_eigensolve(coeffs: &TridiagonalCoefficients) -> Result<Vec<EigenpairReconstruction>> {
    coeffs.validate()?;
    let (values, vectors) = symmetric_tridiagonal_eigen(&coeffs.alphas, &coeffs.betas)?;
    Ok(values
        .into_iter()
        .enumerate()
        .map(|(g, energy)| EigenpairReconstruction {
            excitation_index: g,
            energy,
            gammas: vectors
                .column(g)
                .iter()
                .map(|&x| Complex64::new(x, 0.0))
                .collect(),
        })
        .collect())
}

/// Ascending Ritz values of the coefficient set.
pub fn ritz_values(coeffs: &TridiagonalCoefficients) -> Result<Vec<f64>> {
    coeffs.validate()?;
    Ok(symmetric_tridiagonal_eigen(&coeffs.alphas, &coeffs.betas)?.0)
}

/// Builds `Σₙ γₙ|ψₙ⟩` and normalizes it.
pub fn reconstruct_state(basis: &KrylovBasis, rec: &EigenpairReconstruction) -> Result<StateVector> {
    combine(&basis.vectors, &rec.gammas)
}

pub(crate) fn combine(vectors: &[StateVector], gammas: &[Complex64]) -> Result<StateVector> {
    if gammas.len() > vectors.len() {
        return Err(Error::DimensionMismatch {
            expected: vectors.len(),
            found: gammas.len(),
        });
    }
    let dim = vectors
        .first()
        .map(StateVector::len)
        .ok_or_else(|| Error::InvalidArgument("empty Krylov basis".into()))?;
    let mut out = StateVector::zeros(dim);
    for (g, v) in gammas.iter().zip(vectors) {
        out.axpy(*g, v);
    }
    out.normalized()
}

/// `‖H v − E v‖`.
pub fn residual_norm<O: LinearOperator + ?Sized>(op: &O, v: &StateVector, energy: f64) -> Result<f64> {
    let mut r = op.apply(v)?;
    r.axpy(Complex64::new(-energy, 0.0), v);
    Ok(r.norm())
}

/// Rayleigh quotient `⟨v|H|v⟩ / ⟨v|v⟩`.
pub fn rayleigh_quotient<O: LinearOperator + ?Sized>(op: &O, v: &StateVector) -> Result<f64> {
    let hv = op.apply(v)?;
    Ok(v.dot(&hv).re / v.dot(v).re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{build_xxz, exact_diagonalize, ProductState};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eigenvector_start_terminates_immediately() {
        let spec = build_xxz(6, 1.0, 1.0).unwrap();
        let sp = exact_diagonalize(&spec).unwrap();
        let run = lanczos_run(&spec, &sp.eigenvectors[3], 5, DEFAULT_BREAKDOWN_TOL).unwrap();
        assert_eq!(run.iterations(), 0);
        assert_eq!(run.termination, Termination::InvariantSubspace);
        assert!(run.coefficients.betas.is_empty());
        assert!((run.coefficients.alphas[0] - sp.eigenvalues[3]).abs() < 1e-12);
    }

    #[test]
    fn two_site_heisenberg_by_hand() {
        let spec = build_xxz(2, 1.0, 1.0).unwrap();
        let start = "↑↓".parse::<ProductState>().unwrap().to_state_vector();
        let run = lanczos_run(&spec, &start, 5, DEFAULT_BREAKDOWN_TOL).unwrap();
        let c = &run.coefficients;
        assert_eq!(c.alphas.len(), 2);
        assert!((c.alphas[0] + 0.25).abs() < 1e-15);
        assert!((c.betas[0] - 0.5).abs() < 1e-15);
        assert!((c.alphas[1] + 0.25).abs() < 1e-15);
        let e = ritz_values(c).unwrap();
        assert!((e[0] + 0.75).abs() < 1e-15 && (e[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        let spec = build_xxz(3, 1.0, 1.0).unwrap();
        let mut v = StateVector::basis(8, 1);
        assert!(matches!(
            lanczos_run(&spec, &v, 0, DEFAULT_BREAKDOWN_TOL),
            Err(Error::InvalidArgument(_))
        ));
        v.scale(Complex64::new(2.0, 0.0));
        assert!(matches!(
            lanczos_run(&spec, &v, 3, DEFAULT_BREAKDOWN_TOL),
            Err(Error::NotNormalized { .. })
        ));
        assert!(lanczos_run(&spec, &StateVector::basis(4, 0), 3, DEFAULT_BREAKDOWN_TOL).is_err());
    }

    #[test]
    fn basis_is_orthonormal_and_h_is_tridiagonal() {
        let spec = build_xxz(7, 1.0, 0.4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let start = StateVector::random(128, &mut rng);
        let run = lanczos_run(&spec, &start, 40, DEFAULT_BREAKDOWN_TOL).unwrap();
        assert!(run.basis.orthonormality_defect() < 1e-8);
        let hv: Vec<_> = run.basis.vectors.iter().map(|v| spec.apply(v).unwrap()).collect();
        for (i, u) in run.basis.vectors.iter().enumerate() {
            for (j, h) in hv.iter().enumerate() {
                let m = u.dot(h);
                if i.abs_diff(j) >= 2 {
                    assert!(m.norm() < 1e-8);
                } else if i == j {
                    assert!((m.re - run.coefficients.alphas[i]).abs() < 1e-10);
                } else if i == j + 1 {
                    assert!((m - run.coefficients.betas[j]).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn tridiagonal_solve_examples() {
        let c = TridiagonalCoefficients::new(vec![-0.25, -0.25], vec![0.5]).unwrap();
        let pairs = tridiagonal_eigensolve(&c).unwrap();
        assert!((pairs[0].energy + 0.75).abs() < 1e-15);
        assert!((pairs[1].energy - 0.25).abs() < 1e-15);
        let g = &pairs[0].gammas;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((g[0].re.abs() - s).abs() < 1e-15);
        assert!((g[0].re + g[1].re).abs() < 1e-15);

        let single = TridiagonalCoefficients::new(vec![1.7], vec![]).unwrap();
        let p = tridiagonal_eigensolve(&single).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].energy, 1.7);
        assert_eq!(p[0].gammas, vec![Complex64::new(1.0, 0.0)]);

        assert!(TridiagonalCoefficients::new(vec![], vec![]).is_err());
    }

    #[test]
    fn gammas_are_normalized() {
        let c = TridiagonalCoefficients::new(vec![0.1, -0.4, 0.3, 0.9], vec![0.5, 0.2, 0.7]).unwrap();
        for p in tridiagonal_eigensolve(&c).unwrap() {
            let s: f64 = p.gammas.iter().map(|g| g.norm_sqr()).sum();
            assert!((s - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn identity_reconstruction() {
        let v = StateVector::basis(4, 2);
        let basis = KrylovBasis { vectors: vec![v.clone()] };
        let rec = EigenpairReconstruction {
            excitation_index: 0,
            energy: 0.0,
            gammas: vec![Complex64::new(1.0, 0.0)],
        };
        assert_eq!(reconstruct_state(&basis, &rec).unwrap(), v);
        let too_long = EigenpairReconstruction {
            gammas: vec![Complex64::new(1.0, 0.0); 2],
            ..rec
        };
        assert!(reconstruct_state(&basis, &too_long).is_err());
    }

    #[test]
    fn two_site_singlet_reconstruction() {
        let spec = build_xxz(2, 1.0, 1.0).unwrap();
        let start = "↑↓".parse::<ProductState>().unwrap().to_state_vector();
        let run = lanczos_run(&spec, &start, 5, DEFAULT_BREAKDOWN_TOL).unwrap();
        let pairs = tridiagonal_eigensolve(&run.coefficients).unwrap();
        let ground = reconstruct_state(&run.basis, &pairs[0]).unwrap();
        let sp = exact_diagonalize(&spec).unwrap();
        assert!((ground.dot(&sp.eigenvectors[0]).norm() - 1.0).abs() < 1e-12);
        assert!((rayleigh_quotient(&spec, &ground).unwrap() + 0.75).abs() < 1e-14);
    }

    #[test]
    fn residual_norm_examples() {
        let spec = build_xxz(5, 1.0, 0.5).unwrap();
        let sp = exact_diagonalize(&spec).unwrap();
        assert!(residual_norm(&spec, &sp.eigenvectors[0], sp.eigenvalues[0]).unwrap() < 1e-10);

        let (e0, e1) = (sp.eigenvalues[0], sp.eigenvalues[1]);
        let mut mix = sp.eigenvectors[0].clone();
        mix.axpy(Complex64::new(1.0, 0.0), &sp.eigenvectors[1]);
        let mix = mix.normalized().unwrap();
        let r = residual_norm(&spec, &mix, 0.5 * (e0 + e1)).unwrap();
        assert!((r - 0.5 * (e1 - e0).abs()).abs() < 1e-10);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = StateVector::random(32, &mut rng);
        let e = rayleigh_quotient(&spec, &v).unwrap();
        let r = residual_norm(&spec, &v, e).unwrap();
        assert!(r >= 0.0 && r <= 2.0 * spec.norm_bound());
    }

    #[test]
    fn table_round_trip_and_errors() {
        let c = TridiagonalCoefficients::new(vec![-0.25, 0.125, 3.0], vec![0.5, 1e-3]).unwrap();
        let mut buf = Vec::new();
        c.write_table(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next(), Some("alpha,beta"));
        assert_eq!(text.lines().nth(1), Some("-0.25,"));
        assert_eq!(TridiagonalCoefficients::read_table(&buf[..]).unwrap(), c);
        assert!(TridiagonalCoefficients::read_table("alpha,beta\n1.0,2.0\n".as_bytes()).is_err());
        assert!(TridiagonalCoefficients::read_table("a,b\n1.0,\n".as_bytes()).is_err());
    }
}
