//! The `finicode` command line: exact reports on the code family, window
//! transduction, and reproducible Monte Carlo experiments.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

pub use config::{CodeName, ExperimentConfig, Format};
pub use error::CliError;

use io::Emitter;

#[derive(Debug, Parser)]
#[command(name = "finicode", version, about = "Finitary codes between dyadic Bernoulli shifts")]
pub struct Cli {
    /// Experiment config (JSON); flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the result here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Omit the timestamp so reruns are byte-identical.
    #[arg(long, global = true)]
    pub reproducible: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// The vectors p and q of one family member, with their exact invariants.
    Vectors(FamilyArgs),
    /// The matching ladder of one family member, with its identities checked.
    Matchings(FamilyArgs),
    /// Encode a window (read from --input, or sampled from the source vector).
    Encode(TransduceArgs),
    /// Decode a window (read from --input, or sampled from the target vector).
    Decode(TransduceArgs),
    /// Encode then decode sampled windows and compare with the input.
    Roundtrip(ExperimentArgs),
    /// Survival and truncated moments of the coding length at the origin.
    Tails(ExperimentArgs),
    /// Information random walks against the coding bound.
    Walk(ExperimentArgs),
    /// Entropy rate and asymptotic information variance of a Markov chain.
    Markov(MarkovArgs),
}

#[derive(Debug, Args)]
pub struct FamilyArgs {
    #[arg(long)]
    pub n: Option<u32>,
    /// Ladder levels to build and check.
    #[arg(long)]
    pub depth: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CodeArgs {
    #[arg(long, value_enum)]
    pub code: Option<CodeName>,
    /// Family member for `--code phi`.
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub half_width: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TransduceArgs {
    #[command(flatten)]
    pub code: CodeArgs,
    /// CSV ids (`?` = unknown), `.json` window, or `.bin` little-endian u16.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Position of the first input symbol.
    #[arg(long, allow_hyphen_values = true)]
    pub lo: Option<i64>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub code: CodeArgs,
    #[arg(long)]
    pub trials: Option<u64>,
    /// Sampled windows for `roundtrip`.
    #[arg(long)]
    pub windows: Option<u64>,
    /// Round-trip this window instead of sampling.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Option<Vec<u64>>,
    #[arg(long = "theta", value_delimiter = ',')]
    pub thetas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub n_list: Option<Vec<u64>>,
    /// Exponent fit range `LO HI`.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub fit_range: Option<Vec<u64>>,
}

#[derive(Debug, Args)]
pub struct MarkovArgs {
    /// JSON row-stochastic matrix; without it, the i.i.d. chain of the code's source vector.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[command(flatten)]
    pub code: CodeArgs,
    #[arg(long)]
    pub blocks: Option<u64>,
}

impl CodeArgs {
    fn config(&self) -> ExperimentConfig {
        ExperimentConfig {
            code: self.code,
            n: self.n,
            half_width: self.half_width,
            seed: self.seed,
            ..Default::default()
        }
    }
}

impl Cli {
    fn name(&self) -> &'static str {
        match self.command {
            Command::Vectors(_) => "vectors",
            Command::Matchings(_) => "matchings",
            Command::Encode(_) => "encode",
            Command::Decode(_) => "decode",
            Command::Roundtrip(_) => "roundtrip",
            Command::Tails(_) => "tails",
            Command::Walk(_) => "walk",
            Command::Markov(_) => "markov",
        }
    }

    /// Flags of the subcommand and the global ones, as a config layer.
    fn flag_config(&self) -> ExperimentConfig {
        let mut c = match &self.command {
            Command::Vectors(a) | Command::Matchings(a) => {
                ExperimentConfig { n: a.n, depth: a.depth, ..Default::default() }
            }
            Command::Encode(a) | Command::Decode(a) => {
                ExperimentConfig { input: a.input.clone(), lo: a.lo, ..a.code.config() }
            }
            Command::Roundtrip(a) | Command::Tails(a) | Command::Walk(a) => ExperimentConfig {
                trials: a.trials,
                windows: a.windows,
                input: a.input.clone(),
                thresholds: a.thresholds.clone(),
                thetas: a.thetas.clone(),
                n_list: a.n_list.clone(),
                fit_range: a.fit_range.as_ref().map(|r| (r[0], r[1])),
                ..a.code.config()
            },
            Command::Markov(a) => ExperimentConfig { matrix: a.matrix.clone(), blocks: a.blocks, ..a.code.config() },
        };
        c.output = self.output.clone();
        c.format = self.format;
        c
    }

    /// Flags over the config file over defaults.
    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let flags = self.flag_config();
        flags.validate()?;
        let file = match &self.config {
            Some(path) => {
                let c = ExperimentConfig::load(path)?;
                c.validate()?;
                c
            }
            None => ExperimentConfig::default(),
        };
        Ok(flags.over(file).with_defaults())
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("FINICODE_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|t| *t > 0)
        .ok_or_else(|| CliError::Usage(format!("FINICODE_THREADS must be a positive integer, got {value:?}")))?;
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

/// Runs a parsed command line.
pub fn execute(cli: &Cli) -> Result<(), CliError> {
    configure_threads()?;
    let config = cli.resolve()?;
    let emitter = Emitter { command: cli.name(), config: &config, reproducible: cli.reproducible };
    match cli.command {
        Command::Vectors(_) => commands::vectors(&config, &emitter),
        Command::Matchings(_) => commands::matchings(&config, &emitter),
        Command::Encode(_) => commands::transduce(&config, &emitter, false),
        Command::Decode(_) => commands::transduce(&config, &emitter, true),
        Command::Roundtrip(_) => commands::roundtrip(&config, &emitter),
        Command::Tails(_) => commands::tails(&config, &emitter),
        Command::Walk(_) => commands::walk(&config, &emitter),
        Command::Markov(_) => commands::markov(&config, &emitter),
    }
}

/// Parses `args`, runs the command, and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
