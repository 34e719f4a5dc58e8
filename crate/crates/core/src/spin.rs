//! Open spin-½ chains with nearest-neighbour XXZ couplings.
//!
//! Spin operators are `S = σ/2`. A `ZZ` term contributes `±c/4` on the
//! diagonal (`+` for parallel neighbours) and an `XX+YY` term flips an
//! antiparallel neighbour pair with amplitude `c/2`. Basis index bit `i` holds
//! the spin at site `i`, with 1 meaning up.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dense;
use crate::error::{Error, Result};
use crate::operator::{LinearOperator, TransposeOperator};
use crate::state::StateVector;

/// Largest chain handled by [`exact_diagonalize`].
pub const ED_MAX_SITES: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CouplingKind {
    #[serde(rename = "XX+YY")]
    XxPlusYy,
    #[serde(rename = "ZZ")]
    Zz,
}

impl CouplingKind {
    /// Operator norm of the unit-coefficient two-site term.
    fn unit_norm(self) -> f64 {
        match self {
            CouplingKind::XxPlusYy => 0.5,
            CouplingKind::Zz => 0.25,
        }
    }
}

impl fmt::Display for CouplingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CouplingKind::XxPlusYy => "XX+YY",
            CouplingKind::Zz => "ZZ",
        })
    }
}

/// Two-site coupling between `site` and `site + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingTerm {
    pub kind: CouplingKind,
    pub site: usize,
    pub coefficient: f64,
}

impl CouplingTerm {
    pub fn new(kind: CouplingKind, site: usize, coefficient: f64) -> Self {
        Self {
            kind,
            site,
            coefficient,
        }
    }

    pub fn xx_yy(site: usize, coefficient: f64) -> Self {
        Self::new(CouplingKind::XxPlusYy, site, coefficient)
    }

    pub fn zz(site: usize, coefficient: f64) -> Self {
        Self::new(CouplingKind::Zz, site, coefficient)
    }

    /// Same term with its coefficient multiplied by `factor`.
    pub fn scaled(self, factor: f64) -> Self {
        Self {
            coefficient: self.coefficient * factor,
            ..self
        }
    }
}

/// Ordered list of couplings plus a constant energy offset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    pub length: usize,
    pub constant: f64,
    #[serde(default)]
    pub terms: Vec<CouplingTerm>,
}

impl HamiltonianSpec {
    pub fn new(length: usize) -> Result<Self> {
        if length < 2 {
            return Err(Error::InvalidSize(length));
        }
        Ok(Self {
            length,
            constant: 0.0,
            terms: Vec::new(),
        })
    }

    /// Appends a term, keeping insertion order.
    pub fn push(&mut self, term: CouplingTerm) -> Result<()> {
        self.check_term(&term)?;
        self.terms.push(term);
        Ok(())
    }

    pub fn with_term(mut self, term: CouplingTerm) -> Result<Self> {
        self.push(term)?;
        Ok(self)
    }

    pub fn with_constant(mut self, constant: f64) -> Self {
        self.constant = constant;
        self
    }

    fn check_term(&self, term: &CouplingTerm) -> Result<()> {
        if term.site + 1 >= self.length {
            return Err(Error::TermOutOfRange {
                site: term.site,
                sites: self.length,
            });
        }
        Ok(())
    }

    /// Checks the invariants of a deserialized spec.
    pub fn validate(&self) -> Result<()> {
        if self.length < 2 {
            return Err(Error::InvalidSize(self.length));
        }
        self.terms.iter().try_for_each(|t| self.check_term(t))
    }

    pub fn dim(&self) -> usize {
        1 << self.length
    }

    /// Upper bound on the operator norm from the triangle inequality.
    pub fn norm_bound(&self) -> f64 {
        self.constant.abs()
            + self
                .terms
                .iter()
                .map(|t| t.coefficient.abs() * t.kind.unit_norm())
                .sum::<f64>()
    }

    /// Diagonal matrix element `⟨s|H|s⟩`.
    pub fn diagonal_element(&self, config: usize) -> f64 {
        self.constant
            + self
                .terms
                .iter()
                .filter(|t| t.kind == CouplingKind::Zz)
                .map(|t| {
                    let parallel = ((config >> t.site) ^ (config >> (t.site + 1))) & 1 == 0;
                    if parallel {
                        0.25 * t.coefficient
                    } else {
                        -0.25 * t.coefficient
                    }
                })
                .sum::<f64>()
    }

    /// Calls `f(target, amplitude)` for every off-diagonal element `⟨target|H|config⟩`.
    fn for_each_flip(&self, config: usize, mut f: impl FnMut(usize, f64)) {
        for t in self.terms.iter().filter(|t| t.kind == CouplingKind::XxPlusYy) {
            let mask = 0b11 << t.site;
            let pair = (config & mask) >> t.site;
            if pair == 0b01 || pair == 0b10 {
                f(config ^ mask, 0.5 * t.coefficient);
            }
        }
    }

    /// `H·v` without assembling a matrix.
    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        LinearOperator::apply(self, v)
    }

    /// Dense `2^L × 2^L` matrix assembled from the same matrix elements as [`apply`](Self::apply).
    pub fn dense_matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for s in 0..n {
            m[(s, s)] = self.diagonal_element(s);
            self.for_each_flip(s, |t, amp| m[(t, s)] += amp);
        }
        m
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_toml_string()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}

impl LinearOperator for HamiltonianSpec {
    fn dim(&self) -> usize {
        HamiltonianSpec::dim(self)
    }

    fn apply_into(&self, x: &[Complex64], out: &mut [Complex64]) {
        for (s, o) in out.iter_mut().enumerate() {
            *o = x[s] * self.diagonal_element(s);
        }
        for (s, &amp) in x.iter().enumerate() {
            if amp == Complex64::new(0.0, 0.0) {
                continue;
            }
            self.for_each_flip(s, |t, c| out[t] += amp * c);
        }
    }
}

// real symmetric, so the transpose is the operator itself
impl TransposeOperator for HamiltonianSpec {
    fn apply_transpose_into(&self, x: &[Complex64], out: &mut [Complex64]) {
        self.apply_into(x, out);
    }
}

/// Open XXZ chain: `J_xy (SˣSˣ + SʸSʸ) + J_z SᶻSᶻ` on every bond.
///
/// All `XX+YY` terms come first, then the `ZZ` terms, both ordered left to
/// right. With `j_z == 0` the `ZZ` terms are omitted, giving the XY model.
pub fn build_xxz(length: usize, j_xy: f64, j_z: f64) -> Result<HamiltonianSpec> {
    let mut spec = HamiltonianSpec::new(length)?;
    if j_xy != 0.0 {
        for i in 0..length - 1 {
            spec.push(CouplingTerm::xx_yy(i, j_xy))?;
        }
    }
    if j_z != 0.0 {
        for i in 0..length - 1 {
            spec.push(CouplingTerm::zz(i, j_z))?;
        }
    }
    Ok(spec)
}

/// Full spectrum of a spin chain.
#[derive(Clone, Debug)]
pub struct Spectrum {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal, in the order of `eigenvalues`.
    pub eigenvectors: Vec<StateVector>,
}

impl Spectrum {
    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }
}

fn check_ed_size(spec: &HamiltonianSpec) -> Result<()> {
    spec.validate()?;
    if spec.length > ED_MAX_SITES {
        return Err(Error::SizeCap {
            sites: spec.length,
            cap: ED_MAX_SITES,
        });
    }
    Ok(())
}

/// Configurations with `ups` up spins, in increasing order.
fn sector_configs(length: usize, ups: u32) -> Vec<usize> {
    (0..1usize << length)
        .filter(|s| s.count_ones() == ups)
        .collect()
}

fn sector_matrix(spec: &HamiltonianSpec, configs: &[usize], position: &[usize]) -> DMatrix<f64> {
    let n = configs.len();
    let mut m = DMatrix::zeros(n, n);
    for (col, &s) in configs.iter().enumerate() {
        m[(col, col)] = spec.diagonal_element(s);
        spec.for_each_flip(s, |t, amp| m[(position[t], col)] += amp);
    }
    m
}

/// Dense diagonalization, block by block over total-Sᶻ sectors.
fn diagonalize_sectors(spec: &HamiltonianSpec, vectors: bool) -> Result<Spectrum> {
    check_ed_size(spec)?;
    let dim = spec.dim();
    let mut position = vec![0usize; dim];
    let mut pairs: Vec<(f64, Option<StateVector>)> = Vec::with_capacity(dim);
    for ups in 0..=spec.length as u32 {
        let configs = sector_configs(spec.length, ups);
        for (i, &s) in configs.iter().enumerate() {
            position[s] = i;
        }
        let m = sector_matrix(spec, &configs, &position);
        if vectors {
            let (values, vecs) = dense::symmetric_eigen(&m)?;
            for (k, &e) in values.iter().enumerate() {
                let mut v = StateVector::zeros(dim);
                for (i, &s) in configs.iter().enumerate() {
                    v.as_mut_slice()[s] = Complex64::new(vecs[(i, k)], 0.0);
                }
                pairs.push((e, Some(v)));
            }
        } else {
            pairs.extend(dense::symmetric_eigenvalues(&m)?.into_iter().map(|e| (e, None)));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let eigenvalues = pairs.iter().map(|p| p.0).collect();
    let eigenvectors = pairs.into_iter().filter_map(|p| p.1).collect();
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// Full spectrum and eigenvectors, for chains of at most [`ED_MAX_SITES`] sites.
pub fn exact_diagonalize(spec: &HamiltonianSpec) -> Result<Spectrum> {
    diagonalize_sectors(spec, true)
}

/// Ascending eigenvalues only.
pub fn exact_eigenvalues(spec: &HamiltonianSpec) -> Result<Vec<f64>> {
    Ok(diagonalize_sectors(spec, false)?.eigenvalues)
}

/// Ground energy of the open XY chain from its free-fermion single-particle
/// energies `J_xy·cos(kπ/(L+1))`, `k = 1..L`: every negative level is filled.
pub fn xy_analytic_ground_energy(length: usize, j_xy: f64) -> Result<f64> {
    if length < 2 {
        return Err(Error::InvalidSize(length));
    }
    if j_xy <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "J_xy must be positive, got {j_xy}"
        )));
    }
    let step = std::f64::consts::PI / (length + 1) as f64;
    Ok((1..=length)
        .map(|k| (j_xy * (k as f64 * step).cos()).min(0.0))
        .sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Spin {
    Up,
    Down,
}

/// A single spin configuration, listed from site 0 upward.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductState {
    pub pattern: Vec<Spin>,
}

impl ProductState {
    pub fn new(pattern: Vec<Spin>) -> Self {
        Self { pattern }
    }

    pub fn len(&self) -> usize {
        self.pattern.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pattern.is_empty()
    }

    /// Basis index of the configuration.
    pub fn index(&self) -> usize {
        self.pattern
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == Spin::Up)
            .map(|(i, _)| 1 << i)
            .sum()
    }

    /// Total Sᶻ in units of ħ.
    pub fn total_sz(&self) -> f64 {
        self.pattern
            .iter()
            .map(|s| if *s == Spin::Up { 0.5 } else { -0.5 })
            .sum()
    }

    pub fn to_state_vector(&self) -> StateVector {
        StateVector::basis(1 << self.len(), self.index())
    }
}

impl FromStr for ProductState {
    type Err = Error;

    /// Accepts `↑`/`↓` or `u`/`d` (either case), one symbol per site.
    fn from_str(s: &str) -> Result<Self> {
        let pattern = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '↑' | 'u' | 'U' => Ok(Spin::Up),
                '↓' | 'd' | 'D' => Ok(Spin::Down),
                other => Err(Error::Parse(format!("unknown spin symbol {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { pattern })
    }
}

impl fmt::Display for ProductState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.pattern {
            f.write_str(if *s == Spin::Up { "↑" } else { "↓" })?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn xy_chain_has_only_flip_terms() {
        let spec = build_xxz(10, 1.0, 0.0).unwrap();
        let xy = spec
            .terms
            .iter()
            .filter(|t| t.kind == CouplingKind::XxPlusYy)
            .count();
        assert_eq!(xy, 9);
        assert_eq!(spec.terms.len(), 9);
    }

    #[test]
    fn heisenberg_term_counts() {
        let spec = build_xxz(10, 1.0, 1.0).unwrap();
        assert_eq!(spec.terms.len(), 18);
        assert!(spec.terms[..9].iter().all(|t| t.kind == CouplingKind::XxPlusYy));
        assert!(spec.terms[9..].iter().all(|t| t.kind == CouplingKind::Zz));
    }

    #[test]
    fn rejects_short_chain() {
        assert!(matches!(build_xxz(1, 1.0, 1.0), Err(Error::InvalidSize(1))));
    }

    #[test]
    fn rejects_term_past_the_end() {
        let mut spec = HamiltonianSpec::new(3).unwrap();
        assert!(spec.push(CouplingTerm::zz(2, 1.0)).is_err());
        assert!(spec.push(CouplingTerm::zz(1, 1.0)).is_ok());
    }

    #[test]
    fn two_site_ising_spectrum() {
        let spec = build_xxz(2, 0.0, 1.0).unwrap();
        assert_eq!(spec.terms.len(), 1);
        let ev = exact_eigenvalues(&spec).unwrap();
        assert_eq!(ev, vec![-0.25, -0.25, 0.25, 0.25]);
    }

    #[test]
    fn two_site_heisenberg_singlet_triplet() {
        let spec = build_xxz(2, 1.0, 1.0).unwrap();
        let ev = exact_eigenvalues(&spec).unwrap();
        let expected = [-0.75, 0.25, 0.25, 0.25];
        for (a, b) in ev.iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn polarized_state_is_an_eigenstate() {
        let spec = build_xxz(10, 1.0, 1.0).unwrap();
        let up = StateVector::basis(1024, 1023);
        let hv = spec.apply(&up).unwrap();
        let mut expected = up.clone();
        expected.scale(c(2.25));
        assert!(hv.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn single_flip_amplitude() {
        let spec = build_xxz(2, 1.0, 0.0).unwrap();
        // |↑↓⟩: site 0 up, site 1 down
        let v: ProductState = "↑↓".parse().unwrap();
        let hv = spec.apply(&v.to_state_vector()).unwrap();
        let flipped: ProductState = "↓↑".parse().unwrap();
        let mut expected = flipped.to_state_vector();
        expected.scale(c(0.5));
        assert!(hv.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn apply_rejects_wrong_dimension() {
        let spec = build_xxz(4, 1.0, 1.0).unwrap();
        let v = StateVector::zeros(8);
        assert!(matches!(
            spec.apply(&v),
            Err(Error::DimensionMismatch { expected: 16, found: 8 })
        ));
    }

    #[test]
    fn apply_matches_dense_assembly() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = build_xxz(8, 0.7, 1.3).unwrap().with_constant(0.2);
        let v = StateVector::random(256, &mut rng);
        let hv = spec.apply(&v).unwrap();
        let m = spec.dense_matrix().map(c);
        let dense = m * nalgebra::DVector::from_column_slice(v.as_slice());
        for (a, b) in hv.as_slice().iter().zip(dense.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn ed_size_cap() {
        let spec = build_xxz(15, 1.0, 1.0).unwrap();
        assert!(matches!(
            exact_diagonalize(&spec),
            Err(Error::SizeCap { sites: 15, cap: 14 })
        ));
    }

    #[test]
    fn ed_eigenvectors_are_orthonormal_eigenpairs() {
        let spec = build_xxz(6, 1.0, 0.6).unwrap();
        let sp = exact_diagonalize(&spec).unwrap();
        assert_eq!(sp.eigenvalues.len(), 64);
        assert!(sp.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        for (i, u) in sp.eigenvectors.iter().enumerate() {
            for (j, v) in sp.eigenvectors.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((u.dot(v) - c(expected)).norm() < 1e-10);
            }
            let mut r = spec.apply(u).unwrap();
            r.axpy(c(-sp.eigenvalues[i]), u);
            assert!(r.norm() < 1e-10);
        }
    }

    #[test]
    fn xy_analytic_small_chains() {
        assert!((xy_analytic_ground_energy(2, 1.0).unwrap() + 0.5).abs() < 1e-15);
        let e3 = xy_analytic_ground_energy(3, 1.0).unwrap();
        assert!((e3 + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        for l in 2..=6 {
            let ed = exact_eigenvalues(&build_xxz(l, 1.0, 0.0).unwrap()).unwrap()[0];
            assert!((ed - xy_analytic_ground_energy(l, 1.0).unwrap()).abs() < 1e-10);
        }
        assert!(xy_analytic_ground_energy(4, -1.0).is_err());
    }

    #[test]
    fn product_state_parsing() {
        let p: ProductState = "uudd".parse().unwrap();
        assert_eq!(p.index(), 0b0011);
        assert_eq!(p.total_sz(), 0.0);
        assert_eq!(p.to_string(), "↑↑↓↓");
        assert!("uxd".parse::<ProductState>().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let spec = build_xxz(4, 1.0, 0.5).unwrap().with_constant(-1.5);
        let text = spec.to_toml_string().unwrap();
        assert!(text.contains("length = 4"));
        assert!(text.contains("kind = \"XX+YY\""));
        assert_eq!(HamiltonianSpec::from_toml_str(&text).unwrap(), spec);
    }

    #[test]
    fn toml_rejects_out_of_range_term() {
        let text = "length = 3\nconstant = 0.0\n[[terms]]\nkind = \"ZZ\"\nsite = 2\ncoefficient = 1.0\n";
        assert!(HamiltonianSpec::from_toml_str(text).is_err());
    }
}
