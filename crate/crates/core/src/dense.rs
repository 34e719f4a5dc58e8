//! Dense eigen solvers, backed by faer and exchanged as nalgebra matrices.

use faer::{Mat, Side};
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

fn to_faer<T: Copy>(m: &DMatrix<T>) -> Mat<T> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Largest entry modulus of a complex matrix.
pub fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

fn evd_error(e: impl std::fmt::Debug) -> Error {
    Error::Eigen(format!("{e:?}"))
}

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns) of a Hermitian matrix.
/// Only the lower triangle is read.
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    let evd = to_faer(m).self_adjoint_eigen(Side::Lower).map_err(evd_error)?;
    let n = m.nrows();
    let s = evd.S();
    let u = evd.U();
    let values = (0..n).map(|i| s[i].re).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| u[(i, j)]);
    Ok((values, vectors))
}

/// Eigenvalues (ascending) and eigenvectors of a real symmetric matrix.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let evd = to_faer(m).self_adjoint_eigen(Side::Lower).map_err(evd_error)?;
    let n = m.nrows();
    let s = evd.S();
    let u = evd.U();
    let values = (0..n).map(|i| s[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| u[(i, j)]);
    Ok((values, vectors))
}

/// Ascending eigenvalues of a real symmetric matrix.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    to_faer(m)
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(evd_error)
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    to_faer(m)
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(evd_error)
}

/// Eigenvalues of a general square complex matrix, in no particular order.
pub fn general_eigenvalues(m: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    to_faer(m).eigenvalues().map_err(evd_error)
}

/// Eigenvalues of a general square real matrix.
pub fn real_general_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    to_faer(m).eigenvalues().map_err(evd_error)
}

/// Greedily pairs each value of `found` with the nearest unused value of
/// `reference` and returns the largest pairing distance.
///
/// Pairs are taken in increasing order of distance over all candidates, so
/// the result does not depend on the order of either list.
pub fn max_pairing_distance(found: &[Complex64], reference: &[Complex64]) -> f64 {
    let mut candidates: Vec<(f64, usize, usize)> = Vec::with_capacity(found.len() * reference.len());
    for (i, a) in found.iter().enumerate() {
        for (j, b) in reference.iter().enumerate() {
            candidates.push(((a - b).norm(), i, j));
        }
    }
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut used_found = vec![false; found.len()];
    let mut used_ref = vec![false; reference.len()];
    let mut worst: f64 = 0.0;
    let mut paired = 0;
    for (d, i, j) in candidates {
        if used_found[i] || used_ref[j] {
            continue;
        }
        used_found[i] = true;
        used_ref[j] = true;
        worst = worst.max(d);
        paired += 1;
        if paired == found.len().min(reference.len()) {
            break;
        }
    }
    if found.len() != reference.len() {
        return f64::INFINITY;
    }
    worst
}
