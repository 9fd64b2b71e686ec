use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::bandit::Strategy;
use crate::bounds::{BoundParams, CorollaryInputs, ThresholdVariant};
use crate::expfam::{FamilyModel, RegionBox};

/// Version of the experiment-spec format; see `schemas/v1/`.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Command {
    #[serde(rename = "kinf")]
    Kinf,
    #[serde(rename = "bound.cor1")]
    BoundCor1,
    #[serde(rename = "bound.cor2")]
    BoundCor2,
    #[serde(rename = "bound.theorem")]
    BoundTheorem,
    #[serde(rename = "bound.prior")]
    BoundPrior,
    #[serde(rename = "bound.sanov")]
    BoundSanov,
    #[serde(rename = "simulate.regret")]
    SimulateRegret,
    #[serde(rename = "simulate.crossing")]
    SimulateCrossing,
    #[serde(rename = "verify.envelope")]
    VerifyEnvelope,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Kinf => "kinf",
            Command::BoundCor1 => "bound.cor1",
            Command::BoundCor2 => "bound.cor2",
            Command::BoundTheorem => "bound.theorem",
            Command::BoundPrior => "bound.prior",
            Command::BoundSanov => "bound.sanov",
            Command::SimulateRegret => "simulate.regret",
            Command::SimulateCrossing => "simulate.crossing",
            Command::VerifyEnvelope => "verify.envelope",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn default_version() -> u32 {
    SCHEMA_VERSION
}

/// Contents of a `--spec` file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default = "default_version")]
    pub version: u32,
    /// Optional; must match the subcommand when given.
    #[serde(default)]
    pub command: Option<Command>,
    pub config: serde_json::Value,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub replicates: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KinfConfig {
    pub family: FamilyModel,
    /// Interpretable parameters of ν (see `FamilyModel::theta_from_interpretable`).
    pub params: Vec<f64>,
    pub mu: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub base: RegionBox,
    pub rho: f64,
}

/// Bound constants resolved from a family and region, or given directly.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoundSetup {
    Family(FamilySetup),
    Constants(ConstantsSetup),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySetup {
    pub family: FamilyModel,
    pub theta_star: Vec<f64>,
    pub region: RegionSpec,
    pub params: BoundParams,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSetup {
    pub k: usize,
    pub rho: f64,
    pub v_rho: f64,
    #[serde(rename = "V_rho")]
    pub big_v_rho: f64,
    pub rho_eps: f64,
    pub cover_count: usize,
    pub params: BoundParams,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorollaryConfig {
    #[serde(default)]
    pub setup: Option<BoundSetup>,
    #[serde(default)]
    pub inputs: Option<CorollaryInputs>,
    pub t: Vec<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoremConfig {
    pub setup: BoundSetup,
    pub variant: ThresholdVariant,
    pub t: Vec<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorConfig {
    pub xi: f64,
    pub t: Vec<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SanovConfig {
    pub family: FamilyModel,
    pub params: Vec<f64>,
    pub mu: f64,
    pub t: Vec<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegretConfig {
    pub family: FamilyModel,
    /// Interpretable parameters of each arm.
    pub arms: Vec<Vec<f64>>,
    pub strategy: Strategy,
    pub xi: f64,
    pub horizon: u64,
    #[serde(default)]
    pub epsilon: Option<f64>,
}

fn yes() -> bool {
    true
}

/// Shared by `simulate crossing` and `verify envelope`; one row per (t, ξ).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossingConfig {
    pub family: FamilyModel,
    pub theta_star: Vec<f64>,
    pub epsilon: f64,
    pub region: RegionSpec,
    pub t: Vec<u64>,
    pub xi: Vec<f64>,
    pub variant: ThresholdVariant,
    #[serde(default = "yes")]
    pub restrict_to_region: bool,
    /// Adds the dynamic-programming value for Bernoulli families.
    #[serde(default = "yes")]
    pub exact: bool,
}
