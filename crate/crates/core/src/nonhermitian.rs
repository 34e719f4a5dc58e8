//! Two-sided block Lanczos for non-Hermitian operators.
//!
//! Right blocks `R⁽ⁿ⁾` and left blocks `L⁽ⁿ⁾` are kept biorthogonal,
//! `L⁽ⁱ⁾ᵀR⁽ʲ⁾ = δᵢⱼ I`, where `ᵀ` is the plain transpose even for complex
//! entries. The operator is represented as the block tridiagonal matrix `Ť`
//! with `Aₙ` on the diagonal, `Bₙ` below and `Cₙ` above it:
//!
//! ```text
//!   H R⁽ⁿ⁾  = R⁽ⁿ⁻¹⁾Cₙ + R⁽ⁿ⁾Aₙ + R⁽ⁿ⁺¹⁾Bₙ₊₁
//!   Hᵀ L⁽ⁿ⁾ = L⁽ⁿ⁻¹⁾Bₙᵀ + L⁽ⁿ⁾Aₙᵀ + L⁽ⁿ⁺¹⁾Cₙ₊₁ᵀ
//! ```
//!
//! New residual pairs are biorthogonalized against every stored block, then
//! split through the SVD of their Gram matrix `M = R_Lᵀ R_R = U Σ Vᴴ` as
//! `Bₙ₊₁ = Σ^½ Vᴴ` and `Cₙ₊₁ = U Σ^½`, so `M = Cₙ₊₁Bₙ₊₁`.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::block::{offsets, validate_band, BlockVector};
use crate::dense;
use crate::error::{Error, Result};
use crate::lanczos::Termination;
use crate::matrix_io::{CoefficientFile, MatrixRecord};
use crate::operator::{check_dim, TransposeOperator};

/// Default relative tolerance for residual vanishing and Gram singularity.
pub const DEFAULT_BREAKDOWN_TOL: f64 = 1e-10;

/// Accepted defect of `leftᵀ·right − I` for the start blocks.
pub const START_BIORTHOGONALITY_TOL: f64 = 1e-10;

/// Coefficients of `Ť`: `b[k]` and `c[k]` hold `B_{k+1}` and `C_{k+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct NonHermitianBlockTridiagonal {
    pub a: Vec<DMatrix<Complex64>>,
    pub b: Vec<DMatrix<Complex64>>,
    pub c: Vec<DMatrix<Complex64>>,
}

impl NonHermitianBlockTridiagonal {
    pub fn validate(&self) -> Result<()> {
        validate_band(&self.a, &self.b, Some(&self.c))
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn truncated(&self, n: usize) -> Self {
        let n = n.clamp(1, self.a.len());
        Self {
            a: self.a[..n].to_vec(),
            b: self.b[..n - 1].to_vec(),
            c: self.c[..n - 1].to_vec(),
        }
    }

    pub fn to_toml_string(&self) -> Result<String> {
        CoefficientFile::from_matrices(&self.a, &self.b, Some(&self.c)).to_toml_string()
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file = CoefficientFile::from_toml_str(text)?;
        let c = file
            .c
            .as_deref()
            .ok_or_else(|| Error::Parse("missing c section".into()))?;
        let coeffs = Self {
            a: MatrixRecord::to_matrices(&file.a)?,
            b: MatrixRecord::to_matrices(&file.b)?,
            c: MatrixRecord::to_matrices(c)?,
        };
        coeffs.validate()?;
        Ok(coeffs)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_toml_string()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}

/// Left and right block sequences of a two-sided run.
#[derive(Clone, Debug)]
pub struct BiorthogonalBlockPair {
    pub left_blocks: Vec<BlockVector>,
    pub right_blocks: Vec<BlockVector>,
}

#[derive(Clone, Debug)]
pub struct TwoSidedRun {
    pub coefficients: NonHermitianBlockTridiagonal,
    pub pair: BiorthogonalBlockPair,
    pub termination: Termination,
}

impl TwoSidedRun {
    pub fn iterations(&self) -> usize {
        self.coefficients.a.len() - 1
    }

    /// Eigenvalues of the assembled `Ť`.
    pub fn ritz_values(&self) -> Result<Vec<Complex64>> {
        dense::general_eigenvalues(&assemble_t(&self.coefficients)?)
    }
}

fn frobenius(b: &BlockVector) -> f64 {
    b.columns().iter().map(|c| c.norm().powi(2)).sum::<f64>().sqrt()
}

/// Removes from `r` its components along `targets`, measured by `duals`:
/// `r −= T⁽ᵏ⁾ (D⁽ᵏ⁾ᵀ r)` for every stored block `k`.
fn biorthogonalize(r: &mut BlockVector, targets: &[BlockVector], duals: &[BlockVector]) {
    for _ in 0..2 {
        for (t, d) in targets.iter().zip(duals) {
            let overlaps = d.transpose_times(r);
            r.sub_product(t, &overlaps);
        }
    }
}

/// Runs up to `max_iter` two-sided iterations.
///
/// Stops cleanly when either residual block vanishes (relative to the size of
/// `H` applied to the current block). Each SVD direction of the residual Gram
/// matrix pairs a right vector `r` with a left vector `l`; directions whose
/// cosine `|lᵀr| / (‖l‖‖r‖)` is below `breakdown_tol` are dropped. If that
/// leaves nothing, or discards residual weight, the run fails with
/// [`Error::SeriousBreakdown`].
pub fn two_sided_block_run<O: TransposeOperator + ?Sized>(
    op: &O,
    right_start: &BlockVector,
    left_start: &BlockVector,
    max_iter: usize,
    breakdown_tol: f64,
) -> Result<TwoSidedRun> {
    if max_iter < 1 {
        return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
    }
    if right_start.width() == 0 || right_start.width() != left_start.width() {
        return Err(Error::InvalidArgument(format!(
            "start blocks must have equal nonzero width, got {} and {}",
            right_start.width(),
            left_start.width()
        )));
    }
    check_dim(op.dim(), right_start.dim())?;
    check_dim(op.dim(), left_start.dim())?;
    let d = right_start.width();
    let defect = dense::max_abs(&(left_start.transpose_times(right_start) - DMatrix::identity(d, d)));
    if defect > START_BIORTHOGONALITY_TOL {
        return Err(Error::NotBiorthogonal { defect });
    }

    let apply_t = |b: &BlockVector| -> Result<BlockVector> {
        let cols = b
            .columns()
            .iter()
            .map(|c| op.apply_transpose(c))
            .collect::<Result<Vec<_>>>()?;
        BlockVector::new(cols)
    };

    let mut rights = vec![right_start.clone()];
    let mut lefts = vec![left_start.clone()];
    let mut a_list: Vec<DMatrix<Complex64>> = Vec::new();
    let mut b_list: Vec<DMatrix<Complex64>> = Vec::new();
    let mut c_list: Vec<DMatrix<Complex64>> = Vec::new();
    let mut termination = Termination::MaxIterations;

    loop {
        let n = rights.len() - 1;
        let wr = rights[n].apply(op)?;
        let wl = apply_t(&lefts[n])?;
        let a = lefts[n].transpose_times(&wr);
        a_list.push(a);
        if n == max_iter {
            break;
        }

        let mut rr = wr.clone();
        rr.sub_product(&rights[n], &a_list[n]);
        let mut rl = wl.clone();
        rl.sub_product(&lefts[n], &a_list[n].transpose());
        if n > 0 {
            rr.sub_product(&rights[n - 1], &c_list[n - 1]);
            rl.sub_product(&lefts[n - 1], &b_list[n - 1].transpose());
        }
        biorthogonalize(&mut rr, &rights, &lefts);
        biorthogonalize(&mut rl, &lefts, &rights);

        let (rr_norm, rl_norm) = (frobenius(&rr), frobenius(&rl));
        if rr_norm <= breakdown_tol * frobenius(&wr).max(f64::MIN_POSITIVE)
            || rl_norm <= breakdown_tol * frobenius(&wl).max(f64::MIN_POSITIVE)
        {
            termination = Termination::InvariantSubspace;
            break;
        }

        let gram = rl.transpose_times(&rr);
        let svd = gram.svd(true, true);
        let u = svd.u.as_ref().expect("requested U");
        let v_t = svd.v_t.as_ref().expect("requested Vᴴ");
        let sigma = &svd.singular_values;
        // direction i pairs r = R_R vᵢ with l = R_L ūᵢ, where lᵀr = σᵢ
        let r_dirs = rr.times(&v_t.adjoint());
        let l_dirs = rl.times(&u.map(|x| x.conj()));
        let cosines: Vec<f64> = (0..sigma.len())
            .map(|i| {
                let scale = r_dirs.columns()[i].norm() * l_dirs.columns()[i].norm();
                if scale > 0.0 {
                    sigma[i] / scale
                } else {
                    0.0
                }
            })
            .collect();
        let worst_cosine = cosines.iter().copied().fold(f64::INFINITY, f64::min);
        let keep: Vec<usize> = (0..sigma.len()).filter(|&i| cosines[i] > breakdown_tol).collect();
        if keep.is_empty() {
            return Err(Error::SeriousBreakdown {
                iteration: n,
                cosine: worst_cosine,
            });
        }

        let k = keep.len();
        let root = DVector::from_iterator(k, keep.iter().map(|&i| sigma[i].sqrt()));
        let u_k = DMatrix::from_fn(u.nrows(), k, |i, j| u[(i, keep[j])]);
        let vh_k = DMatrix::from_fn(k, v_t.ncols(), |i, j| v_t[(keep[i], j)]);
        let pick = |dirs: &BlockVector| {
            let cols = keep
                .iter()
                .zip(root.iter())
                .map(|(&i, s)| {
                    let mut c = dirs.columns()[i].clone();
                    c.scale(Complex64::new(1.0 / s, 0.0));
                    c
                })
                .collect();
            BlockVector::new(cols)
        };
        let right_next = pick(&r_dirs)?;
        let left_next = pick(&l_dirs)?;

        if k < sigma.len() {
            // truncated directions must not carry residual weight on either side
            let kept = |dirs: &BlockVector| BlockVector::new(keep.iter().map(|&i| dirs.columns()[i].clone()).collect());
            let mut lost_r = rr.clone();
            lost_r.sub_product(&kept(&r_dirs)?, &vh_k);
            let mut lost_l = rl.clone();
            lost_l.sub_product(&kept(&l_dirs)?, &u_k.transpose());
            let limit = breakdown_tol.sqrt();
            if frobenius(&lost_r) > limit * rr_norm || frobenius(&lost_l) > limit * rl_norm {
                return Err(Error::SeriousBreakdown {
                    iteration: n,
                    cosine: worst_cosine,
                });
            }
        }

        let b = left_next.transpose_times(&wr);
        let c = wl.transpose_times(&right_next);
        b_list.push(b);
        c_list.push(c);
        rights.push(right_next);
        lefts.push(left_next);
    }

    Ok(TwoSidedRun {
        coefficients: NonHermitianBlockTridiagonal {
            a: a_list,
            b: b_list,
            c: c_list,
        },
        pair: BiorthogonalBlockPair {
            left_blocks: lefts,
            right_blocks: rights,
        },
        termination,
    })
}

/// Dense `Ť`: `Aₙ` on the diagonal, `Bₙ` on the sub-diagonal, `Cₙ` on the
/// super-diagonal, zero elsewhere.
pub fn assemble_t(coeffs: &NonHermitianBlockTridiagonal) -> Result<DMatrix<Complex64>> {
    coeffs.validate()?;
    let widths: Vec<usize> = coeffs.a.iter().map(|m| m.nrows()).collect();
    let offs = offsets(&widths);
    let dim = widths.iter().sum();
    let mut m = DMatrix::zeros(dim, dim);
    for (k, a) in coeffs.a.iter().enumerate() {
        m.view_mut((offs[k], offs[k]), a.shape()).copy_from(a);
    }
    for k in 0..coeffs.b.len() {
        let (b, c) = (&coeffs.b[k], &coeffs.c[k]);
        m.view_mut((offs[k + 1], offs[k]), b.shape()).copy_from(b);
        m.view_mut((offs[k], offs[k + 1]), c.shape()).copy_from(c);
    }
    Ok(m)
}

/// Largest entry of `L⁽ⁱ⁾ᵀR⁽ʲ⁾ − δᵢⱼI` over all block pairs.
pub fn biorthogonality_check(pair: &BiorthogonalBlockPair) -> Result<f64> {
    if pair.left_blocks.len() != pair.right_blocks.len() {
        return Err(Error::DimensionMismatch {
            expected: pair.left_blocks.len(),
            found: pair.right_blocks.len(),
        });
    }
    let mut worst: f64 = 0.0;
    for (i, l) in pair.left_blocks.iter().enumerate() {
        for (j, r) in pair.right_blocks.iter().enumerate() {
            let mut g = l.transpose_times(r);
            if i == j {
                for k in 0..g.nrows().min(g.ncols()) {
                    g[(k, k)] -= Complex64::new(1.0, 0.0);
                }
            }
            worst = worst.max(g.iter().map(|x| x.norm()).fold(0.0, f64::max));
        }
    }
    Ok(worst)
}

/// Real `n × n` matrix with independent `N(0, 1/n)` entries; its spectrum
/// fills roughly the unit disk.
pub fn random_nonsymmetric<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let scale = 1.0 / (n as f64).sqrt();
    DMatrix::from_fn(n, n, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::DenseOperator;
    use crate::state::StateVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn diagonal_operator_with_eigenvector_start() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]));
        let op = DenseOperator::from_real(&m).unwrap();
        let e1 = BlockVector::new(vec![StateVector::basis(4, 0)]).unwrap();
        let run = two_sided_block_run(&op, &e1, &e1, 5, DEFAULT_BREAKDOWN_TOL).unwrap();
        assert_eq!(run.termination, Termination::InvariantSubspace);
        assert_eq!(run.coefficients.a, vec![DMatrix::from_element(1, 1, c(1.0))]);
    }

    #[test]
    fn rejects_non_biorthogonal_starts() {
        let op = DenseOperator::from_real(&DMatrix::identity(3, 3)).unwrap();
        let r = BlockVector::new(vec![StateVector::basis(3, 0)]).unwrap();
        let l = BlockVector::new(vec![StateVector::basis(3, 1)]).unwrap();
        assert!(matches!(
            two_sided_block_run(&op, &r, &l, 2, DEFAULT_BREAKDOWN_TOL),
            Err(Error::NotBiorthogonal { .. })
        ));
    }

    #[test]
    fn serious_breakdown_is_reported() {
        // right residual ∝ e₂, left residual ∝ e₃: nonzero but mutually orthogonal
        let mut m = DMatrix::<f64>::zeros(3, 3);
        m[(1, 0)] = 1.0;
        m[(0, 2)] = 1.0;
        let op = DenseOperator::from_real(&m).unwrap();
        let e1 = BlockVector::new(vec![StateVector::basis(3, 0)]).unwrap();
        let err = two_sided_block_run(&op, &e1, &e1, 3, DEFAULT_BREAKDOWN_TOL).unwrap_err();
        assert!(matches!(err, Error::SeriousBreakdown { iteration: 0, .. }));
    }

    #[test]
    fn recovers_spectrum_and_stays_biorthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let m = random_nonsymmetric(24, &mut rng);
        let op = DenseOperator::from_real(&m).unwrap();
        let start = BlockVector::random_real_orthonormal(24, 2, &mut rng).unwrap();
        let run = two_sided_block_run(&op, &start, &start, 50, DEFAULT_BREAKDOWN_TOL).unwrap();
        assert!(biorthogonality_check(&run.pair).unwrap() < 1e-8);
        let exact = dense::real_general_eigenvalues(&m).unwrap();
        let ritz = run.ritz_values().unwrap();
        assert!(dense::max_pairing_distance(&ritz, &exact) < 1e-6);
    }

    #[test]
    fn coefficients_match_post_hoc_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_nonsymmetric(16, &mut rng);
        let op = DenseOperator::from_real(&m).unwrap();
        let start = BlockVector::random_real_orthonormal(16, 2, &mut rng).unwrap();
        let run = two_sided_block_run(&op, &start, &start, 4, DEFAULT_BREAKDOWN_TOL).unwrap();
        let (l, r) = (&run.pair.left_blocks, &run.pair.right_blocks);
        let co = &run.coefficients;
        for n in 0..l.len() {
            let hr = r[n].apply(&op).unwrap();
            assert!(dense::max_abs(&(l[n].transpose_times(&hr) - &co.a[n])) < 1e-8);
            if n + 1 < l.len() {
                assert!(dense::max_abs(&(l[n + 1].transpose_times(&hr) - &co.b[n])) < 1e-8);
                let hr_next = r[n + 1].apply(&op).unwrap();
                assert!(dense::max_abs(&(l[n].transpose_times(&hr_next) - &co.c[n])) < 1e-8);
            }
        }
    }

    #[test]
    fn symmetric_input_gives_transposed_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let g = random_nonsymmetric(20, &mut rng);
        let sym = (&g + g.transpose()) * 0.5;
        let op = DenseOperator::from_real(&sym).unwrap();
        let start = BlockVector::random_real_orthonormal(20, 2, &mut rng).unwrap();
        let run = two_sided_block_run(&op, &start, &start, 6, DEFAULT_BREAKDOWN_TOL).unwrap();
        for (b, cm) in run.coefficients.b.iter().zip(&run.coefficients.c) {
            assert!(dense::max_abs(&(cm - b.transpose())) < 1e-8);
        }
    }

    #[test]
    fn assembly_band_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut rand_block = |r: usize, c_: usize| {
            DMatrix::from_fn(r, c_, |_, _| Complex64::new(rng.random_range(1.0..2.0), rng.random_range(1.0..2.0)))
        };
        let coeffs = NonHermitianBlockTridiagonal {
            a: vec![rand_block(2, 2), rand_block(2, 2), rand_block(2, 2)],
            b: vec![rand_block(2, 2), rand_block(2, 2)],
            c: vec![rand_block(2, 2), rand_block(2, 2)],
        };
        let t = assemble_t(&coeffs).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let nonzero = t[(i, j)] != c(0.0);
                assert_eq!(nonzero, (i / 2).abs_diff(j / 2) <= 1, "entry ({i},{j})");
            }
        }
        assert_eq!(t.view((0, 2), (2, 2)), coeffs.c[0]);
        assert_eq!(t.view((2, 0), (2, 2)), coeffs.b[0]);

        let one = NonHermitianBlockTridiagonal { a: vec![coeffs.a[0].clone()], b: vec![], c: vec![] };
        assert_eq!(assemble_t(&one).unwrap(), coeffs.a[0]);

        let bad = NonHermitianBlockTridiagonal { c: vec![], ..coeffs.clone() };
        assert!(assemble_t(&bad).is_err());

        let text = coeffs.to_toml_string().unwrap();
        assert!(text.contains("[[c]]"));
        assert_eq!(NonHermitianBlockTridiagonal::from_toml_str(&text).unwrap(), coeffs);
    }

    #[test]
    fn biorthogonality_check_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let q = BlockVector::random_real_orthonormal(10, 3, &mut rng).unwrap();
        let pair = BiorthogonalBlockPair {
            left_blocks: vec![q.clone()],
            right_blocks: vec![q.clone()],
        };
        let defect = biorthogonality_check(&pair).unwrap();
        assert!((defect - q.orthonormality_defect()).abs() < 1e-15);

        let doubled = q.times(&(DMatrix::identity(3, 3) * c(2.0)));
        let scaled = BiorthogonalBlockPair {
            left_blocks: vec![q.clone()],
            right_blocks: vec![doubled],
        };
        assert!((biorthogonality_check(&scaled).unwrap() - 1.0).abs() < 1e-12);

        let uneven = BiorthogonalBlockPair {
            left_blocks: vec![q.clone(), q.clone()],
            right_blocks: vec![q],
        };
        assert!(biorthogonality_check(&uneven).is_err());
    }
}
