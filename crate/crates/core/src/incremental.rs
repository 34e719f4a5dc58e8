//! Incremental ramping from the XY chain to a target XXZ chain.
//!
//! The working Hamiltonian starts as the XY model `H₀`. Each `ZZ` bond of the
//! target is then switched on, whole or in `N` equal slices, and after every
//! slice a short Lanczos run seeded by the previous ground-state estimate
//! produces the next estimate.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lanczos::{lanczos_run, reconstruct_state, tridiagonal_eigensolve, DEFAULT_BREAKDOWN_TOL};
use crate::matrix_io::csv_writer;
use crate::spin::{build_xxz, exact_diagonalize, CouplingKind, CouplingTerm, HamiltonianSpec, ProductState, ED_MAX_SITES};
use crate::state::StateVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// `J_xy = J_z`.
    Small,
    /// `J_xy ≪ J_z`.
    Large,
    /// Starts from an explicit product state instead of the `H₀` ground state.
    RandomStart,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum StartState {
    H0Ground,
    Product(ProductState),
}

impl FromStr for StartState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "h0-ground" => Ok(Self::H0Ground),
            other => other.parse().map(Self::Product),
        }
    }
}

impl TryFrom<String> for StartState {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl fmt::Display for StartState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::H0Ground => f.write_str("h0-ground"),
            Self::Product(p) => write!(f, "{p}"),
        }
    }
}

impl From<StartState> for String {
    fn from(s: StartState) -> Self {
        s.to_string()
    }
}

/// Order in which the `ZZ` bonds are switched on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TermOrder {
    #[default]
    LeftToRight,
    RightToLeft,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub length: usize,
    pub j_xy: f64,
    pub j_z: f64,
    pub lanczos_per_step: usize,
    #[serde(default = "one")]
    pub dlambda_fractions: usize,
    pub start_state: StartState,
    #[serde(default)]
    pub term_order: TermOrder,
}

fn one() -> usize {
    1
}

impl ScenarioConfig {
    /// Ten-site XY → Heisenberg with one iteration per term.
    pub fn small() -> Self {
        Self {
            scenario: Scenario::Small,
            length: 10,
            j_xy: 1.0,
            j_z: 1.0,
            lanczos_per_step: 1,
            dlambda_fractions: 1,
            start_state: StartState::H0Ground,
            term_order: TermOrder::LeftToRight,
        }
    }

    /// Ten-site chain with `J_z = 100 J_xy`.
    pub fn large(lanczos_per_step: usize, dlambda_fractions: usize) -> Self {
        Self {
            scenario: Scenario::Large,
            j_xy: 0.01,
            j_z: 1.0,
            lanczos_per_step,
            dlambda_fractions,
            ..Self::small()
        }
    }

    /// Heisenberg target reached from [`alternating_spin_start`].
    pub fn random_start() -> Self {
        Self {
            scenario: Scenario::RandomStart,
            start_state: StartState::Product(alternating_spin_start()),
            ..Self::small()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.length < 2 {
            return Err(Error::InvalidSize(self.length));
        }
        if self.length > ED_MAX_SITES {
            return Err(Error::SizeCap {
                sites: self.length,
                cap: ED_MAX_SITES,
            });
        }
        if self.lanczos_per_step < 1 || self.dlambda_fractions < 1 {
            return Err(Error::InvalidArgument(
                "lanczos_per_step and dlambda_fractions must be positive".into(),
            ));
        }
        match &self.start_state {
            StartState::H0Ground if self.scenario == Scenario::RandomStart => Err(Error::InvalidArgument(
                "random-start scenario needs an explicit product state".into(),
            )),
            StartState::Product(p) if p.len() != self.length => Err(Error::DimensionMismatch {
                expected: self.length,
                found: p.len(),
            }),
            _ => Ok(()),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Terms appended to `base`, each in `N` slices of `c/N`.
#[derive(Clone, Debug, PartialEq)]
pub struct RampSchedule {
    pub base: HamiltonianSpec,
    pub additions: Vec<(CouplingTerm, usize)>,
}

impl RampSchedule {
    pub fn new(base: HamiltonianSpec, additions: Vec<(CouplingTerm, usize)>) -> Result<Self> {
        base.validate()?;
        for (term, n) in &additions {
            if *n < 1 {
                return Err(Error::InvalidArgument("fraction_count must be at least 1".into()));
            }
            if term.site + 1 >= base.length {
                return Err(Error::TermOutOfRange {
                    site: term.site,
                    sites: base.length,
                });
            }
        }
        Ok(Self { base, additions })
    }

    /// XY base plus every `ZZ` bond of the target chain.
    pub fn for_config(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let base = build_xxz(config.length, config.j_xy, 0.0)?;
        let target = build_xxz(config.length, config.j_xy, config.j_z)?;
        let mut zz: Vec<CouplingTerm> = target
            .terms
            .into_iter()
            .filter(|t| t.kind == CouplingKind::Zz)
            .collect();
        if config.term_order == TermOrder::RightToLeft {
            zz.reverse();
        }
        let additions = zz.into_iter().map(|t| (t, config.dlambda_fractions)).collect();
        Self::new(base, additions)
    }

    /// Number of slices over all additions.
    pub fn slice_count(&self) -> usize {
        self.additions.iter().map(|(_, n)| n).sum()
    }

    /// Working specs after each slice, tagged with the 1-based term index and
    /// the ramped fraction `k/N` of that term.
    pub fn stages(&self) -> Vec<(usize, f64, HamiltonianSpec)> {
        let mut spec = self.base.clone();
        let mut out = Vec::with_capacity(self.slice_count());
        for (t, (term, n)) in self.additions.iter().enumerate() {
            let slot = spec.terms.len();
            spec.terms.push(CouplingTerm { coefficient: 0.0, ..*term });
            for k in 1..=*n {
                // the last slice lands on the exact coefficient
                spec.terms[slot].coefficient = if k == *n {
                    term.coefficient
                } else {
                    term.coefficient * k as f64 / *n as f64
                };
                out.push((t + 1, k as f64 / *n as f64, spec.clone()));
            }
        }
        out
    }

    /// Base plus all additions at full strength.
    pub fn fully_ramped(&self) -> HamiltonianSpec {
        let mut spec = self.base.clone();
        spec.terms.extend(self.additions.iter().map(|(t, _)| *t));
        spec
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub terms_added: usize,
    pub lambda_fraction: f64,
    pub energy: f64,
    pub delta_vs_exact: f64,
    pub lanczos_iters_used: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceRecord {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceRecord {
    pub const HEADER: [&'static str; 5] = ["terms_added", "lambda_fraction", "energy", "delta_vs_exact", "lanczos_iters"];

    pub fn last(&self) -> Option<&ConvergenceRow> {
        self.rows.last()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv_writer(writer);
        w.write_record(Self::HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.terms_added.to_string(),
                r.lambda_fraction.to_string(),
                r.energy.to_string(),
                r.delta_vs_exact.to_string(),
                r.lanczos_iters_used.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// The ten-site start `|↑↑↓↓↓↑↓↓↑↑⟩`.
pub fn alternating_spin_start() -> ProductState {
    "↑↑↓↓↓↑↓↓↑↑".parse().expect("fixed pattern")
}

/// Runs the ramp from `start`, one short Lanczos run per slice.
pub fn run_schedule(schedule: &RampSchedule, start: &StateVector, lanczos_per_step: usize) -> Result<ConvergenceRecord> {
    let mut state = start.clone().normalized()?;
    let mut record = ConvergenceRecord::default();
    for (terms_added, lambda_fraction, spec) in schedule.stages() {
        let run = lanczos_run(&spec, &state, lanczos_per_step, DEFAULT_BREAKDOWN_TOL)?;
        let pairs = tridiagonal_eigensolve(&run.coefficients)?;
        let energy = pairs[0].energy;
        state = reconstruct_state(&run.basis, &pairs[0])?;
        let exact = exact_diagonalize(&spec)?.ground_energy();
        record.rows.push(ConvergenceRow {
            terms_added,
            lambda_fraction,
            energy,
            delta_vs_exact: energy - exact,
            lanczos_iters_used: run.iterations(),
        });
    }
    Ok(record)
}

pub fn run_incremental(config: &ScenarioConfig) -> Result<ConvergenceRecord> {
    let schedule = RampSchedule::for_config(config)?;
    let start = match &config.start_state {
        StartState::H0Ground => exact_diagonalize(&schedule.base)?.eigenvectors.swap_remove(0),
        StartState::Product(p) => p.to_state_vector(),
    };
    run_schedule(&schedule, &start, config.lanczos_per_step)
}
