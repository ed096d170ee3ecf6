//! Key-value config files and the usage-error exit-code contract.
//!
//! A config file holds `key=value` lines (blank lines and `#` comments are
//! ignored) mirroring the solver and benchmark options: `mu`, `max_iter`,
//! `scheme`, `ridge_epsilon`, `add_bias`, `residual_tol`, `seed`,
//! `mean_over_observed`, `rates`, `schemes`, `trials`, `train_fraction`.
//! Command-line flags override config-file values, which override defaults.

use anyhow::{anyhow, Result};
use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use winldl::solver::SolverConfig;
use winldl::weighting::WeightScheme;

/// Error class that maps to exit code 2 (usage / configuration problems).
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage_err(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

/// Parsed config file contents.
#[derive(Debug, Default, Clone)]
pub struct FileConfig {
    values: HashMap<String, String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage_err(format!("cannot read config {}: {e}", path.display())))?;
        let mut values = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                usage_err(format!(
                    "{}:{}: expected key=value",
                    path.display(),
                    lineno + 1
                ))
            })?;
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(FileConfig { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| usage_err(format!("config key `{key}`: {e}"))),
        }
    }
}

/// Solver options shared by `train` and `benchmark`.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct SolverArgs {
    /// ADMM penalty factor (positive; affects convergence rate only).
    #[arg(long)]
    pub mu: Option<f64>,
    /// Number of solver iterations.
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Weighting scheme: winldl, inldl-u, inldl-i, inldl-ii, inldl-rand.
    #[arg(long)]
    pub scheme: Option<String>,
    /// Relative diagonal shift for the Gram factorization.
    #[arg(long)]
    pub ridge_epsilon: Option<f64>,
    /// Append a constant-1 feature column before fitting.
    #[arg(long)]
    pub add_bias: bool,
    /// Early-stop threshold on the primal residual (0 disables).
    #[arg(long)]
    pub residual_tol: Option<f64>,
    /// Estimate missing degrees over observed entries only.
    #[arg(long)]
    pub mean_over_observed: bool,
}

/// Resolves the solver config from defaults, then the config file, then flags.
pub fn resolve_solver_config(
    args: &SolverArgs,
    file: Option<&FileConfig>,
    seed: Option<u64>,
) -> Result<SolverConfig<f64>> {
    let mut cfg = SolverConfig::default();
    if let Some(fc) = file {
        if let Some(v) = fc.parse::<f64>("mu")? {
            cfg.mu = v;
        }
        if let Some(v) = fc.parse::<usize>("max_iter")? {
            cfg.max_iter = v;
        }
        if let Some(raw) = fc.get("scheme") {
            cfg.scheme = parse_scheme(raw)?;
        }
        if let Some(v) = fc.parse::<f64>("ridge_epsilon")? {
            cfg.ridge_epsilon = v;
        }
        if let Some(v) = fc.parse::<bool>("add_bias")? {
            cfg.add_bias = v;
        }
        if let Some(v) = fc.parse::<f64>("residual_tol")? {
            cfg.residual_tol = v;
        }
        if let Some(v) = fc.parse::<u64>("seed")? {
            cfg.seed = v;
        }
        if let Some(v) = fc.parse::<bool>("mean_over_observed")? {
            cfg.mean_over_observed = v;
        }
    }
    if let Some(v) = args.mu {
        cfg.mu = v;
    }
    if let Some(v) = args.max_iter {
        cfg.max_iter = v;
    }
    if let Some(raw) = &args.scheme {
        cfg.scheme = parse_scheme(raw)?;
    }
    if let Some(v) = args.ridge_epsilon {
        cfg.ridge_epsilon = v;
    }
    if args.add_bias {
        cfg.add_bias = true;
    }
    if let Some(v) = args.residual_tol {
        cfg.residual_tol = v;
    }
    if args.mean_over_observed {
        cfg.mean_over_observed = true;
    }
    if let Some(v) = seed {
        cfg.seed = v;
    }
    cfg.validate()
        .map_err(|e| usage_err(format!("invalid solver config: {e}")))?;
    Ok(cfg)
}

pub fn parse_scheme(raw: &str) -> Result<WeightScheme> {
    raw.parse::<WeightScheme>()
        .map_err(|e| usage_err(e.to_string()))
}

/// Parses a comma-separated list like `0.1,0.3,0.5`.
pub fn parse_list<T: FromStr>(raw: &str, what: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|e| usage_err(format!("bad {what} entry `{s}`: {e}")))
        })
        .collect()
}

pub fn parse_scheme_list(raw: &str) -> Result<Vec<WeightScheme>> {
    raw.split(',')
        .map(|s| parse_scheme(s.trim()))
        .collect::<Result<Vec<_>>>()
        .and_then(|v| {
            if v.is_empty() {
                Err(anyhow!(UsageError("empty scheme list".into())))
            } else {
                Ok(v)
            }
        })
}
