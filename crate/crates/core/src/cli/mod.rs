//! The `klbound` command line: JSON experiment specs in, CSV or JSON tables
//! plus a JSON sidecar with every derived constant out.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid spec or configuration,
//! 3 a bound's validity condition fails, 4 `verify envelope` found a FAIL row.
//! Nothing is written unless the command succeeds (a FAIL still writes).

mod commands;
pub mod spec;
pub mod table;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub use commands::Outcome;
pub use spec::{Command, ExperimentSpec, SCHEMA_VERSION};
pub use table::{format_real, Cell, Table};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_VALIDITY: i32 = 3;
pub const EXIT_FAIL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "klbound", version, about = "K_inf, KL-UCB and boundary-crossing bound experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: TopCommand,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Experiment spec (JSON).
    #[arg(long, global = true)]
    pub spec: Option<PathBuf>,
    /// Output table; the sidecar goes to `<out>.json`. Defaults to the spec's
    /// `output`, then to stdout without a sidecar.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides the spec's seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for simulations; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum TopCommand {
    /// K_inf(ν, μ) for a list of thresholds μ.
    Kinf,
    #[command(subcommand)]
    Bound(BoundCommand),
    #[command(subcommand)]
    Simulate(SimulateCommand),
    #[command(subcommand)]
    Verify(VerifyCommand),
}

#[derive(Debug, Subcommand)]
pub enum BoundCommand {
    /// The f(t) corollary.
    Cor1,
    /// The f(t/n) corollary.
    Cor2,
    /// The peeled-sum bound.
    Theorem,
    /// The earlier f(t) bound e⌈f(t) log t⌉e^{−f(t)}.
    Prior,
    /// exp(−t K_inf).
    Sanov,
}

#[derive(Debug, Subcommand)]
pub enum SimulateCommand {
    /// KL-UCB / KL-UCB+ regret at geometric checkpoints.
    Regret,
    /// Crossing probabilities by Monte Carlo (and exactly for Bernoulli).
    Crossing,
}

#[derive(Debug, Subcommand)]
pub enum VerifyCommand {
    /// Crossing probabilities against the bounds; exit 4 on any FAIL.
    Envelope,
}

impl TopCommand {
    pub fn command(&self) -> Command {
        match self {
            TopCommand::Kinf => Command::Kinf,
            TopCommand::Bound(b) => match b {
                BoundCommand::Cor1 => Command::BoundCor1,
                BoundCommand::Cor2 => Command::BoundCor2,
                BoundCommand::Theorem => Command::BoundTheorem,
                BoundCommand::Prior => Command::BoundPrior,
                BoundCommand::Sanov => Command::BoundSanov,
            },
            TopCommand::Simulate(SimulateCommand::Regret) => Command::SimulateRegret,
            TopCommand::Simulate(SimulateCommand::Crossing) => Command::SimulateCrossing,
            TopCommand::Verify(VerifyCommand::Envelope) => Command::VerifyEnvelope,
        }
    }
}

/// Failure of a CLI run with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn io(what: &str, path: &Path, e: std::io::Error) -> Self {
        Self { code: EXIT_IO, message: format!("{what} {}: {e}", path.display()) }
    }

    fn invalid(message: String) -> Self {
        Self { code: EXIT_INVALID, message }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = if matches!(e, Error::Validity(_)) { EXIT_VALIDITY } else { EXIT_INVALID };
        Self { code, message: e.to_string() }
    }
}

/// First 16 hex digits of the SHA-256 of the canonical (key-sorted, compact)
/// JSON of command, config, seed and replicates.
pub fn config_hash(command: Command, config: &Value, seed: u64, replicates: Option<u64>) -> String {
    let canonical = json!({
        "version": SCHEMA_VERSION,
        "command": command.as_str(),
        "config": config,
        "seed": seed,
        "replicates": replicates,
    });
    let bytes = serde_json::to_vec(&canonical).expect("canonical JSON");
    hex::encode(Sha256::digest(&bytes))[..16].to_string()
}

/// Rendered table and sidecar of a successful run.
pub struct Artifacts {
    pub table: Vec<u8>,
    pub sidecar: Vec<u8>,
    pub failed: bool,
}

/// Loads the spec and runs the command without touching the file system
/// beyond reading the spec.
pub fn compute(cli: &Cli) -> Result<(Artifacts, Option<PathBuf>), CliError> {
    let command = cli.command.command();
    let path = cli.common.spec.as_ref().ok_or_else(|| CliError::invalid("--spec <path> is required".into()))?;
    let text = fs::read_to_string(path).map_err(|e| CliError::io("cannot read spec", path, e))?;
    let spec: ExperimentSpec =
        serde_json::from_str(&text).map_err(|e| CliError::invalid(format!("invalid spec {}: {e}", path.display())))?;
    if spec.version != SCHEMA_VERSION {
        return Err(CliError::invalid(format!(
            "spec version {} is not supported (expected {SCHEMA_VERSION})",
            spec.version
        )));
    }
    if let Some(c) = spec.command {
        if c != command {
            return Err(CliError::invalid(format!("spec is for `{c}` but `{command}` was requested")));
        }
    }
    let seed = cli.common.seed.or(spec.seed).unwrap_or(0);
    let hash = config_hash(command, &spec.config, seed, spec.replicates);
    let ctx = commands::RunContext { seed, replicates: spec.replicates, threads: cli.common.threads, hash: hash.clone() };
    let outcome = commands::execute(command, &spec.config, &ctx)?;
    let table = match cli.common.format {
        Format::Csv => outcome.table.to_csv()?,
        Format::Json => outcome.table.to_json(),
    };
    let sidecar = json!({
        "version": SCHEMA_VERSION,
        "command": command.as_str(),
        "config_hash": hash,
        "seed": seed,
        "replicates": spec.replicates,
        "config": spec.config,
        "derived": outcome.derived,
        "status": if outcome.failed { "FAIL" } else { "PASS" },
    });
    let mut sidecar = serde_json::to_vec_pretty(&sidecar).expect("sidecar serializes");
    sidecar.push(b'\n');
    let out = cli.common.out.clone().or(spec.output);
    Ok((Artifacts { table, sidecar, failed: outcome.failed }, out))
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Runs a parsed command line and returns the exit code.
pub fn run(cli: &Cli) -> i32 {
    match run_inner(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn run_inner(cli: &Cli) -> Result<i32, CliError> {
    let (art, out) = compute(cli)?;
    match out {
        Some(path) => {
            fs::write(&path, &art.table).map_err(|e| CliError::io("cannot write", &path, e))?;
            let side = sidecar_path(&path);
            fs::write(&side, &art.sidecar).map_err(|e| CliError::io("cannot write", &side, e))?;
        }
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&art.table).map_err(|e| CliError::io("cannot write", Path::new("stdout"), e))?;
        }
    }
    if art.failed {
        eprintln!("verify: at least one row FAILED");
        return Ok(EXIT_FAIL);
    }
    Ok(EXIT_OK)
}

/// Parses `args` (program name first) and runs; clap usage errors exit 2.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            }
        }
    }
}
