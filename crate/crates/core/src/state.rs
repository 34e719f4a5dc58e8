//! Complex state vectors and the dense helpers shared by the Krylov solvers.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Tolerance used when a vector is required to be normalized.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Complex amplitude vector.
///
/// For spin chains the amplitudes are indexed by the bit-encoded spin
/// configuration: bit `i` is the spin at site `i` (1 = up), so site 0 is the
/// least significant bit and the vector has `2^L` entries. The Krylov solvers
/// also use this type for operators whose dimension is not a power of two.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn zeros(dim: usize) -> Self {
        Self {
            amplitudes: vec![Complex64::new(0.0, 0.0); dim],
        }
    }

    /// Zero vector over the `2^sites` configurations of a spin chain.
    pub fn for_sites(sites: usize) -> Self {
        Self::zeros(1 << sites)
    }

    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Self {
        Self { amplitudes }
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self {
            amplitudes: values.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }

    /// Unit vector `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.amplitudes[index] = Complex64::new(1.0, 0.0);
        v
    }

    /// Normalized vector with independent complex Gaussian entries.
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        let amplitudes = (0..dim)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let mut v = Self { amplitudes };
        v.normalize().expect("a Gaussian vector has nonzero norm");
        v
    }

    /// Normalized vector with independent real Gaussian entries.
    pub fn random_real<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        let amplitudes = (0..dim)
            .map(|_| Complex64::new(rng.sample(StandardNormal), 0.0))
            .collect();
        let mut v = Self { amplitudes };
        v.normalize().expect("a Gaussian vector has nonzero norm");
        v
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    /// Number of spin sites when the length is a power of two.
    pub fn sites(&self) -> Option<usize> {
        let n = self.amplitudes.len();
        n.is_power_of_two().then(|| n.trailing_zeros() as usize)
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.amplitudes
    }

    /// Hermitian inner product `⟨self|other⟩`, antilinear in `self`.
    pub fn dot(&self, other: &Self) -> Complex64 {
        dot(&self.amplitudes, &other.amplitudes)
    }

    /// Bilinear form `selfᵀ·other` without conjugation.
    pub fn bilinear(&self, other: &Self) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amplitudes)
    }

    /// Scales to unit norm and returns the previous norm.
    pub fn normalize(&mut self) -> Result<f64> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::NotNormalized { norm: n });
        }
        self.scale(Complex64::new(1.0 / n, 0.0));
        Ok(n)
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= NORMALIZATION_TOL
    }

    pub fn scale(&mut self, a: Complex64) {
        for x in &mut self.amplitudes {
            *x *= a;
        }
    }

    /// `self += a·x`
    pub fn axpy(&mut self, a: Complex64, x: &Self) {
        axpy(&mut self.amplitudes, a, &x.amplitudes);
    }

    /// Entrywise maximum of `|self − other|`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn axpy(y: &mut [Complex64], a: Complex64, x: &[Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}
