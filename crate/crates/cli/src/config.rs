use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use qkrylov::incremental::ScenarioConfig;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Solve,
    Incremental,
    NoiseSweep,
    NonhermitianDemo,
    CostTable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub solve: SolveParams,
    #[serde(default)]
    pub incremental: IncrementalParams,
    #[serde(default)]
    pub noise_sweep: NoiseSweepParams,
    #[serde(default)]
    pub nonhermitian: NonHermitianParams,
    #[serde(default)]
    pub cost: CostParams,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStart {
    /// Seeded random complex block.
    Random,
    /// Lowest eigenvectors of the `XX+YY` part of the chain.
    H0Ground,
}

/// Ground-state solve of an open XXZ chain, or of a Hamiltonian file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveParams {
    pub length: usize,
    pub j_xy: f64,
    pub j_z: f64,
    /// Overrides the chain parameters when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hamiltonian_file: Option<PathBuf>,
    pub block_size: usize,
    pub max_iter: usize,
    pub start: SolveStart,
}

impl Default for SolveParams {
    fn default() -> Self {
        Self {
            length: 2,
            j_xy: 1.0,
            j_z: 1.0,
            hamiltonian_file: None,
            block_size: 1,
            max_iter: 40,
            start: SolveStart::Random,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledScenario {
    pub label: String,
    #[serde(flatten)]
    pub scenario: ScenarioConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IncrementalParams {
    pub runs: Vec<LabeledScenario>,
}

impl Default for IncrementalParams {
    fn default() -> Self {
        Self {
            runs: vec![LabeledScenario {
                label: "fig1".into(),
                scenario: ScenarioConfig::small(),
            }],
        }
    }
}

/// MAE sweep over synthetic block problems; the seed comes from the top level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSweepParams {
    pub block_size: usize,
    pub block_counts: Vec<usize>,
    pub etas: Vec<f64>,
    pub seeds: usize,
}

impl Default for NoiseSweepParams {
    fn default() -> Self {
        let d = qkrylov::noise::MaeSweepConfig::default();
        Self {
            block_size: d.block_size,
            block_counts: d.block_counts,
            etas: d.etas,
            seeds: d.seeds,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NonHermitianParams {
    pub dimension: usize,
    pub block_size: usize,
    /// Defaults to the saturation length `dimension / block_size - 1`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
}

impl Default for NonHermitianParams {
    fn default() -> Self {
        Self {
            dimension: 32,
            block_size: 2,
            max_iter: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostParams {
    pub q: u32,
}

impl Default for CostParams {
    fn default() -> Self {
        Self { q: 40 }
    }
}

impl ExperimentConfig {
    /// Reads `path` and applies `key=value` overrides on top of it.
    pub fn load(path: &Path, overrides: &[String]) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let context = || format!("parsing {}", path.display());
        if overrides.is_empty() {
            // straight from text so that errors carry line and column
            return toml::from_str(&text).with_context(context);
        }
        let mut table: Table = toml::from_str(&text).with_context(context)?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        Value::Table(table)
            .try_into()
            .with_context(|| format!("{} with overrides", context()))
    }

    pub fn to_toml_string(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }
}

/// Sets a dotted `key=value` path; the value is read as TOML, else as a bare string.
pub fn apply_override(table: &mut Table, assignment: &str) -> anyhow::Result<()> {
    let Some((key, raw)) = assignment.split_once('=') else {
        bail!("override `{assignment}` is not of the form key=value");
    };
    let value = parse_value(raw.trim());
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        bail!("override key `{key}` has an empty component");
    }
    let mut slot = table
        .entry(parts[0])
        .or_insert_with(|| Value::Table(Table::new()));
    for part in &parts[1..] {
        slot = match slot {
            Value::Table(t) => t.entry(*part).or_insert_with(|| Value::Table(Table::new())),
            Value::Array(items) => {
                let index: usize = part
                    .parse()
                    .with_context(|| format!("`{part}` in `{key}` must index an array"))?;
                let len = items.len();
                items
                    .get_mut(index)
                    .with_context(|| format!("index {index} in `{key}` out of range (length {len})"))?
            }
            _ => bail!("`{key}` descends into a value that is neither a table nor an array"),
        };
    }
    *slot = value;
    Ok(())
}

fn parse_value(raw: &str) -> Value {
    toml::from_str::<Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}
