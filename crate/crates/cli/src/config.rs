use std::path::{Path, PathBuf};

use clap::ValueEnum;
use finicode_core::codebook::DEFAULT_MAX_N;
use finicode_core::coder::Code;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

pub const MAX_TRIALS: u64 = 100_000_000;
pub const MAX_HALF_WIDTH: u64 = 10_000_000;
/// Deepest ladder the `vectors`/`matchings` reports will build; deeper requests are truncated.
/// The exact polynomial checks grow several-fold per level beyond this.
pub const MAX_DEPTH: usize = 16;
pub const MAX_WINDOWS: u64 = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CodeName {
    Meshalkin,
    Phi,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Everything an experiment depends on. Fields left out fall back to defaults;
/// command-line flags override the file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<CodeName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thetas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_range: Option<(u64, u64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    /// Number of windows for `roundtrip`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub windows: Option<u64>,
    /// Regeneration blocks for `markov`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    /// Position of the first symbol of a CSV or binary input window.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

macro_rules! overlay {
    ($hi:expr, $lo:expr, $($field:ident),*) => {
        ExperimentConfig { schema_version: SCHEMA_VERSION, $($field: $hi.$field.or($lo.$field),)* }
    };
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let config: Self =
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        if config.schema_version != SCHEMA_VERSION {
            return Err(CliError::Usage(format!(
                "config schema version {} is not supported (expected {SCHEMA_VERSION})",
                config.schema_version
            )));
        }
        Ok(config)
    }

    /// `self` wins wherever it sets a field.
    pub fn over(self, base: Self) -> Self {
        overlay!(
            self, base, code, n, trials, half_width, seed, thresholds, thetas, n_list, fit_range, depth, windows,
            blocks, matrix, input, lo, output, format
        )
    }

    /// Fills every field with its default.
    pub fn with_defaults(self) -> Self {
        let defaults = Self {
            schema_version: SCHEMA_VERSION,
            code: Some(CodeName::Meshalkin),
            n: Some(2),
            trials: Some(10_000),
            half_width: Some(10_000),
            seed: Some(0),
            thresholds: Some(Vec::new()),
            thetas: Some(vec![0.25, 0.5, 0.75, 1.0]),
            n_list: Some(vec![100, 1_000]),
            fit_range: Some((100, 10_000)),
            depth: Some(3),
            windows: Some(1),
            blocks: Some(100_000),
            matrix: None,
            input: None,
            lo: None,
            output: None,
            format: Some(Format::Json),
        };
        self.over(defaults)
    }

    /// Checks every set value against the caps.
    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |msg: String| Err(CliError::Usage(msg));
        if let Some(n) = self.n {
            if n == 0 || n > DEFAULT_MAX_N {
                return usage(format!("n must be in 1..={DEFAULT_MAX_N}, got {n}"));
            }
        }
        if let Some(t) = self.trials {
            if t == 0 || t > MAX_TRIALS {
                return usage(format!("trials must be in 1..={MAX_TRIALS}, got {t}"));
            }
        }
        if let Some(h) = self.half_width {
            if h == 0 || h > MAX_HALF_WIDTH {
                return usage(format!("half-width must be in 1..={MAX_HALF_WIDTH}, got {h}"));
            }
        }
        if let Some(w) = self.windows {
            if w == 0 || w > MAX_WINDOWS {
                return usage(format!("windows must be in 1..={MAX_WINDOWS}, got {w}"));
            }
        }
        if let Some(b) = self.blocks {
            if !(2..=MAX_TRIALS).contains(&b) {
                return usage(format!("blocks must be in 2..={MAX_TRIALS}, got {b}"));
            }
        }
        if self.thresholds.iter().flatten().any(|t| *t == 0) {
            return usage("thresholds must be positive".into());
        }
        if self.thetas.iter().flatten().any(|t| !(t.is_finite() && *t > 0.0)) {
            return usage("thetas must be positive".into());
        }
        if self.n_list.iter().flatten().any(|n| *n == 0 || *n > MAX_HALF_WIDTH) {
            return usage(format!("n-list entries must be in 1..={MAX_HALF_WIDTH}"));
        }
        if let Some((lo, hi)) = self.fit_range {
            if lo == 0 || lo >= hi {
                return usage(format!("fit range {lo}..{hi} is empty"));
            }
        }
        if self.depth == Some(0) {
            return usage("depth must be positive".into());
        }
        Ok(())
    }

    /// Only the fields `command` reads, for recording alongside its result.
    pub fn used_by(&self, command: &str) -> Self {
        let all = self.clone();
        let keep = |fields: &[&str]| {
            let mut c = Self { schema_version: SCHEMA_VERSION, format: all.format, ..Default::default() };
            for f in fields {
                match *f {
                    "code" => c.code = all.code,
                    "n" => c.n = all.n,
                    "trials" => c.trials = all.trials,
                    "half_width" => c.half_width = all.half_width,
                    "seed" => c.seed = all.seed,
                    "thresholds" => c.thresholds = all.thresholds.clone(),
                    "thetas" => c.thetas = all.thetas.clone(),
                    "n_list" => c.n_list = all.n_list.clone(),
                    "fit_range" => c.fit_range = all.fit_range,
                    "depth" => c.depth = all.depth,
                    "windows" => c.windows = all.windows,
                    "blocks" => c.blocks = all.blocks,
                    "matrix" => c.matrix = all.matrix.clone(),
                    "input" => c.input = all.input.clone(),
                    "lo" => c.lo = all.lo,
                    _ => unreachable!("unknown field {f}"),
                }
            }
            if c.code == Some(CodeName::Meshalkin) {
                c.n = None;
            }
            c
        };
        match command {
            "vectors" | "matchings" => keep(&["n", "depth"]),
            "encode" | "decode" => keep(&["code", "n", "half_width", "seed", "input", "lo"]),
            "roundtrip" => keep(&["code", "n", "half_width", "seed", "windows", "input", "lo"]),
            "tails" => keep(&["code", "n", "trials", "half_width", "seed", "thresholds", "thetas", "fit_range"]),
            "walk" => keep(&["code", "n", "trials", "half_width", "seed", "n_list"]),
            "markov" if all.matrix.is_some() => keep(&["matrix", "seed", "blocks"]),
            "markov" => keep(&["code", "n", "seed", "blocks"]),
            _ => all,
        }
    }

    /// The code named by `code` and `n` (defaults must already be filled).
    pub fn build_code(&self) -> Result<Code, CliError> {
        match self.code.unwrap_or(CodeName::Meshalkin) {
            CodeName::Meshalkin => Ok(Code::meshalkin()),
            CodeName::Phi => Ok(Code::phi(self.n.unwrap_or(2))?),
        }
    }
}
