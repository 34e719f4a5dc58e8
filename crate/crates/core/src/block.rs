//! Block Lanczos recursion for several excitations at once.
//!
//! With blocks `Ψₙ` of orthonormal columns, each step forms
//! `R = HΨₙ − ΨₙAₙ − Ψₙ₋₁Bₙ†`, projects `R` against all stored blocks, and
//! factors `R = Ψₙ₊₁Bₙ₊₁` with orthonormal `Ψₙ₊₁` and upper-triangular
//! `Bₙ₊₁` with a non-negative diagonal. Residual columns that vanish are
//! deflated, so later blocks may be narrower than the start block.
//!
//! `Aₙ = Ψₙ†HΨₙ` is read off as expectation values. `Bₙ₊₁` is the
//! triangular factor, which equals `Ψₙ₊₁†HΨₙ` away from breakdown. Each
//! coefficient entry counts as one extraction.

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::dense;
use crate::error::{Error, Result};
use crate::lanczos::{combine, EigenpairReconstruction, Termination};
use crate::matrix_io::{CoefficientFile, MatrixRecord};
use crate::operator::{check_dim, LinearOperator};
use crate::state::StateVector;

/// Default norm below which a residual column is deflated.
pub const DEFAULT_DEFLATION_TOL: f64 = 1e-10;

/// Accepted Gram-matrix defect of a start block.
pub const START_ORTHONORMALITY_TOL: f64 = 1e-8;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// An ordered set of equally long state vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockVector {
    columns: Vec<StateVector>,
}

impl BlockVector {
    pub fn new(columns: Vec<StateVector>) -> Result<Self> {
        if let Some(first) = columns.first() {
            for c in &columns[1..] {
                check_dim(first.len(), c.len())?;
            }
        }
        Ok(Self { columns })
    }

    /// `width` orthonormal columns spanning a random subspace.
    pub fn random_orthonormal<R: Rng + ?Sized>(dim: usize, width: usize, rng: &mut R) -> Result<Self> {
        let columns = (0..width).map(|_| StateVector::random(dim, rng)).collect();
        Self::new(columns)?.orthonormalized()
    }

    /// Real-valued variant of [`random_orthonormal`](Self::random_orthonormal).
    pub fn random_real_orthonormal<R: Rng + ?Sized>(dim: usize, width: usize, rng: &mut R) -> Result<Self> {
        let columns = (0..width).map(|_| StateVector::random_real(dim, rng)).collect();
        Self::new(columns)?.orthonormalized()
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn dim(&self) -> usize {
        self.columns.first().map_or(0, StateVector::len)
    }

    pub fn columns(&self) -> &[StateVector] {
        &self.columns
    }

    pub fn into_columns(self) -> Vec<StateVector> {
        self.columns
    }

    /// `selfᴴ·other`.
    pub fn adjoint_times(&self, other: &Self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.width(), other.width(), |i, j| {
            self.columns[i].dot(&other.columns[j])
        })
    }

    /// `selfᵀ·other`, no conjugation.
    pub fn transpose_times(&self, other: &Self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.width(), other.width(), |i, j| {
            self.columns[i].bilinear(&other.columns[j])
        })
    }

    /// Largest entry of `ΨᴴΨ − I`.
    pub fn orthonormality_defect(&self) -> f64 {
        let n = self.width();
        dense::max_abs(&(self.adjoint_times(self) - DMatrix::identity(n, n)))
    }

    /// `Ψ·m` for a `width × k` matrix.
    pub fn times(&self, m: &DMatrix<Complex64>) -> Self {
        let dim = self.dim();
        let columns = (0..m.ncols())
            .map(|j| {
                let mut v = StateVector::zeros(dim);
                for (i, c) in self.columns.iter().enumerate() {
                    v.axpy(m[(i, j)], c);
                }
                v
            })
            .collect();
        Self { columns }
    }

    /// `self −= other·m`.
    pub(crate) fn sub_product(&mut self, other: &Self, m: &DMatrix<Complex64>) {
        for (j, col) in self.columns.iter_mut().enumerate() {
            for (i, o) in other.columns.iter().enumerate() {
                let coef = m[(i, j)];
                if coef != ZERO {
                    col.axpy(-coef, o);
                }
            }
        }
    }

    pub fn apply<O: LinearOperator + ?Sized>(&self, op: &O) -> Result<Self> {
        let columns = self
            .columns
            .iter()
            .map(|c| op.apply(c))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { columns })
    }

    /// Modified Gram-Schmidt with two passes; fails on a rank-deficient block.
    pub fn orthonormalized(self) -> Result<Self> {
        let width = self.width();
        let (q, _) = qr_deflate(self, 1e-12);
        if q.width() < width {
            return Err(Error::NotOrthonormal { defect: 1.0 });
        }
        Ok(q)
    }
}

/// Factors `r = q·b` with orthonormal `q` and upper-trapezoidal `b`.
/// Columns whose remaining norm is below `tol` are dropped from `q`.
fn qr_deflate(r: BlockVector, tol: f64) -> (BlockVector, DMatrix<Complex64>) {
    let width = r.width();
    let mut kept: Vec<StateVector> = Vec::with_capacity(width);
    let mut factor = DMatrix::zeros(width, width);
    for (j, mut v) in r.columns.into_iter().enumerate() {
        for _ in 0..2 {
            for (i, q) in kept.iter().enumerate() {
                let overlap = q.dot(&v);
                v.axpy(-overlap, q);
                factor[(i, j)] += overlap;
            }
        }
        let n = v.norm();
        if n < tol {
            continue;
        }
        v.scale(Complex64::new(1.0 / n, 0.0));
        factor[(kept.len(), j)] = Complex64::new(n, 0.0);
        kept.push(v);
    }
    let rows = kept.len();
    (BlockVector { columns: kept }, factor.rows(0, rows).into_owned())
}

/// Projects every column of `r` off all stored blocks (two passes).
fn project_out(r: &mut BlockVector, blocks: &[BlockVector]) {
    for _ in 0..2 {
        for b in blocks {
            let overlaps = b.adjoint_times(r);
            r.sub_product(b, &overlaps);
        }
    }
}

/// `⟨left_i | right_j⟩` for every pair, each counted as one extraction.
fn extract(left: &BlockVector, right: &BlockVector, counter: &mut usize) -> DMatrix<Complex64> {
    *counter += left.width() * right.width();
    left.adjoint_times(right)
}

/// Coefficient matrices `{Aₙ}` and `{Bₙ}`; `b[k]` holds `B_{k+1}`.
///
/// `b[k]` has shape `width(k+1) × width(k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockCoefficients {
    pub a: Vec<DMatrix<Complex64>>,
    pub b: Vec<DMatrix<Complex64>>,
}

impl BlockCoefficients {
    pub fn validate(&self) -> Result<()> {
        validate_band(&self.a, &self.b, None)
    }

    /// Number of blocks.
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn widths(&self) -> Vec<usize> {
        self.a.iter().map(|m| m.nrows()).collect()
    }

    /// Coefficients of the first `n` blocks.
    pub fn truncated(&self, n: usize) -> Self {
        let n = n.clamp(1, self.a.len());
        Self {
            a: self.a[..n].to_vec(),
            b: self.b[..n - 1].to_vec(),
        }
    }

    pub fn to_toml_string(&self) -> Result<String> {
        CoefficientFile::from_matrices(&self.a, &self.b, None).to_toml_string()
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file = CoefficientFile::from_toml_str(text)?;
        let c = Self {
            a: MatrixRecord::to_matrices(&file.a)?,
            b: MatrixRecord::to_matrices(&file.b)?,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_toml_string()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}

/// Checks the shapes of a block band: square diagonal blocks, one fewer
/// sub-diagonal block, and (when present) super-diagonal blocks of the
/// transposed shape.
pub(crate) fn validate_band(
    a: &[DMatrix<Complex64>],
    b: &[DMatrix<Complex64>],
    c: Option<&[DMatrix<Complex64>]>,
) -> Result<()> {
    if a.is_empty() {
        return Err(Error::InvalidArgument("no diagonal blocks".into()));
    }
    let mismatch = |what: &str, found: usize| {
        Error::InvalidArgument(format!(
            "{} diagonal blocks need {} {what} blocks, got {found}",
            a.len(),
            a.len() - 1
        ))
    };
    if b.len() + 1 != a.len() {
        return Err(mismatch("sub-diagonal", b.len()));
    }
    if let Some(c) = c {
        if c.len() + 1 != a.len() {
            return Err(mismatch("super-diagonal", c.len()));
        }
    }
    for (k, m) in a.iter().enumerate() {
        if !m.is_square() {
            return Err(Error::InvalidArgument(format!("diagonal block {k} is not square")));
        }
    }
    for k in 0..b.len() {
        let (rows, cols) = (a[k + 1].nrows(), a[k].nrows());
        if b[k].shape() != (rows, cols) {
            return Err(Error::InvalidArgument(format!(
                "sub-diagonal block {} has shape {:?}, expected {:?}",
                k + 1,
                b[k].shape(),
                (rows, cols)
            )));
        }
        if let Some(c) = c {
            if c[k].shape() != (cols, rows) {
                return Err(Error::InvalidArgument(format!(
                    "super-diagonal block {} has shape {:?}, expected {:?}",
                    k + 1,
                    c[k].shape(),
                    (cols, rows)
                )));
            }
        }
    }
    Ok(())
}

/// Scalar extractions spent on each coefficient block, one per entry.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExtractionCount {
    /// `a[n]` for `Aₙ`.
    pub a: Vec<usize>,
    /// `b[k]` for `B_{k+1}`.
    pub b: Vec<usize>,
}

impl ExtractionCount {
    pub fn total(&self) -> usize {
        self.a.iter().sum::<usize>() + self.b.iter().sum::<usize>()
    }
}

#[derive(Clone, Debug)]
pub struct BlockLanczosRun {
    pub coefficients: BlockCoefficients,
    pub blocks: Vec<BlockVector>,
    pub cost: ExtractionCount,
    pub termination: Termination,
}

impl BlockLanczosRun {
    pub fn iterations(&self) -> usize {
        self.blocks.len() - 1
    }

    /// Largest entry of the stacked Gram matrix minus the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let all = BlockVector {
            columns: self.blocks.iter().flat_map(|b| b.columns.iter().cloned()).collect(),
        };
        all.orthonormality_defect()
    }
}

/// Runs up to `max_iter` block iterations, producing at most `max_iter + 1` blocks.
pub fn block_lanczos_run<O: LinearOperator + ?Sized>(
    op: &O,
    start: &BlockVector,
    max_iter: usize,
    deflation_tol: f64,
) -> Result<BlockLanczosRun> {
    if start.width() == 0 {
        return Err(Error::InvalidArgument("start block has no columns".into()));
    }
    if max_iter < 1 {
        return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
    }
    check_dim(op.dim(), start.dim())?;
    let defect = start.orthonormality_defect();
    if defect > START_ORTHONORMALITY_TOL {
        return Err(Error::NotOrthonormal { defect });
    }

    let mut blocks = vec![start.clone()];
    let mut a_list = Vec::new();
    let mut b_list: Vec<DMatrix<Complex64>> = Vec::new();
    let mut cost = ExtractionCount::default();
    let mut termination = Termination::MaxIterations;
    loop {
        let n = blocks.len() - 1;
        let w = blocks[n].apply(op)?;
        let mut count = 0;
        let raw = extract(&blocks[n], &w, &mut count);
        cost.a.push(count);
        let a = (&raw + raw.adjoint()) * Complex64::new(0.5, 0.0);
        a_list.push(a);
        if n == max_iter {
            break;
        }

        let mut r = w.clone();
        r.sub_product(&blocks[n], &a_list[n]);
        if n > 0 {
            r.sub_product(&blocks[n - 1], &b_list[n - 1].adjoint());
        }
        project_out(&mut r, &blocks);
        let (q, b) = qr_deflate(r, deflation_tol);
        if q.width() == 0 {
            termination = Termination::InvariantSubspace;
            break;
        }
        cost.b.push(b.len());
        b_list.push(b);
        blocks.push(q);
    }

    Ok(BlockLanczosRun {
        coefficients: BlockCoefficients {
            a: a_list,
            b: b_list,
        },
        blocks,
        cost,
        termination,
    })
}

/// Dense Hermitian assembly of the block-tridiagonal Krylov Hamiltonian.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockTridiagonalMatrix {
    pub matrix: DMatrix<Complex64>,
    /// Width of each diagonal block, in assembly order.
    pub block_widths: Vec<usize>,
}

impl BlockTridiagonalMatrix {
    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }
}

pub(crate) fn offsets(widths: &[usize]) -> Vec<usize> {
    widths
        .iter()
        .scan(0, |acc, w| {
            let o = *acc;
            *acc += w;
            Some(o)
        })
        .collect()
}

/// Places `Aₙ` on the diagonal, `Bₙ` below it and `Bₙ†` above it.
pub fn assemble_block_tridiagonal(coeffs: &BlockCoefficients) -> Result<BlockTridiagonalMatrix> {
    coeffs.validate()?;
    let widths = coeffs.widths();
    let offs = offsets(&widths);
    let dim: usize = widths.iter().sum();
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for (k, a) in coeffs.a.iter().enumerate() {
        m.view_mut((offs[k], offs[k]), a.shape()).copy_from(a);
    }
    for (k, b) in coeffs.b.iter().enumerate() {
        m.view_mut((offs[k + 1], offs[k]), b.shape()).copy_from(b);
        m.view_mut((offs[k], offs[k + 1]), (b.ncols(), b.nrows()))
            .copy_from(&b.adjoint());
    }
    Ok(BlockTridiagonalMatrix {
        matrix: m,
        block_widths: widths,
    })
}

/// Ritz pairs of the assembled matrix in ascending energy. `gammas` are
/// indexed by (block, column) flattened in assembly order.
pub fn block_eigensolve(mat: &BlockTridiagonalMatrix) -> Result<Vec<EigenpairReconstruction>> {
    let (values, vectors) = dense::hermitian_eigen(&mat.matrix)?;
    Ok(values
        .into_iter()
        .enumerate()
        .map(|(g, energy)| EigenpairReconstruction {
            excitation_index: g,
            energy,
            gammas: vectors.column(g).iter().copied().collect(),
        })
        .collect())
}

/// Ritz values of the first `n` blocks of `coeffs`, ascending.
pub fn block_ritz_values(coeffs: &BlockCoefficients) -> Result<Vec<f64>> {
    dense::hermitian_eigenvalues(&assemble_block_tridiagonal(coeffs)?.matrix)
}

/// Normalized states `Σ γ Ψ` for the `count` lowest Ritz pairs.
pub fn reconstruct_excitations(
    blocks: &[BlockVector],
    recs: &[EigenpairReconstruction],
    count: usize,
) -> Result<Vec<StateVector>> {
    if count == 0 || count > recs.len() {
        return Err(Error::InvalidArgument(format!(
            "requested {count} excitations but {} Ritz pairs are available",
            recs.len()
        )));
    }
    let columns: Vec<StateVector> = blocks.iter().flat_map(|b| b.columns.iter().cloned()).collect();
    let mut sorted: Vec<&EigenpairReconstruction> = recs.iter().collect();
    sorted.sort_by(|x, y| x.energy.total_cmp(&y.energy));
    sorted
        .into_iter()
        .take(count)
        .map(|r| combine(&columns, &r.gammas))
        .collect()
}

/// Principal angles (radians, ascending) between the spans of two sets of vectors.
pub fn principal_angles(a: &[StateVector], b: &[StateVector]) -> Result<Vec<f64>> {
    let qa = BlockVector::new(a.to_vec())?.orthonormalized()?;
    let qb = BlockVector::new(b.to_vec())?.orthonormalized()?;
    let overlap = qa.adjoint_times(&qb);
    let mut angles: Vec<f64> = overlap
        .singular_values()
        .iter()
        .map(|s| s.min(1.0).acos())
        .collect();
    angles.sort_by(f64::total_cmp);
    Ok(angles)
}
