//! Matrix-free operator interfaces consumed by the Krylov recursions.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::state::StateVector;

/// A linear map `v → M·v` on vectors of a fixed dimension.
///
/// The Hermitian solvers assume `M` is Hermitian; nothing here checks that.
pub trait LinearOperator {
    fn dim(&self) -> usize;

    /// Writes `M·x` into `out`. Both slices have length [`dim`](Self::dim).
    fn apply_into(&self, x: &[Complex64], out: &mut [Complex64]);

    fn apply(&self, v: &StateVector) -> Result<StateVector> {
        check_dim(self.dim(), v.len())?;
        let mut out = StateVector::zeros(v.len());
        self.apply_into(v.as_slice(), out.as_mut_slice());
        Ok(out)
    }
}

/// An operator that also exposes its plain transpose `v → Mᵀ·v`.
///
/// The transpose is never conjugated, even for complex entries, so that
/// `uᵀ(M v) = (Mᵀ u)ᵀ v`.
pub trait TransposeOperator: LinearOperator {
    fn apply_transpose_into(&self, x: &[Complex64], out: &mut [Complex64]);

    fn apply_transpose(&self, v: &StateVector) -> Result<StateVector> {
        check_dim(self.dim(), v.len())?;
        let mut out = StateVector::zeros(v.len());
        self.apply_transpose_into(v.as_slice(), out.as_mut_slice());
        Ok(out)
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Square dense matrix backing, intended for desk-scale dimensions.
#[derive(Clone, Debug)]
pub struct DenseOperator {
    matrix: DMatrix<Complex64>,
}

impl DenseOperator {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidArgument(format!(
                "operator matrix must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { matrix })
    }

    pub fn from_real(matrix: &DMatrix<f64>) -> Result<Self> {
        Self::new(matrix.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }
}

impl LinearOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply_into(&self, x: &[Complex64], out: &mut [Complex64]) {
        let n = self.dim();
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..n {
                acc += self.matrix[(i, j)] * x[j];
            }
            *o = acc;
        }
    }
}

impl TransposeOperator for DenseOperator {
    fn apply_transpose_into(&self, x: &[Complex64], out: &mut [Complex64]) {
        // column-major storage: column i of M is row i of Mᵀ
        for (i, o) in out.iter_mut().enumerate() {
            *o = self
                .matrix
                .column(i)
                .iter()
                .zip(x)
                .map(|(m, xj)| m * xj)
                .sum();
        }
    }
}
