//! Model persistence: the transformation matrix plus a config echo, as
//! full-precision decimal text. Bit-exactness of a model file is defined at
//! this decimal-text level.

use anyhow::{bail, Context, Result};
use std::fmt::Write as _;
use std::path::Path;
use winldl::data::{fmt_full, FeatureStats};
use winldl::solver::{FittedModel, SolverConfig};
use winldl::{Mat, Mat64};

const MAGIC: &str = "winldl-model v1";

/// Writes the model, the config it was fit with, and any feature
/// standardization applied before fitting.
pub fn save_model(
    model: &FittedModel<f64>,
    config: &SolverConfig<f64>,
    stats: Option<&FeatureStats<f64>>,
    path: &Path,
) -> Result<()> {
    let (rows, cols) = model.w.dim();
    let mut out = String::new();
    writeln!(out, "{MAGIC}").unwrap();
    writeln!(out, "rows={rows}").unwrap();
    writeln!(out, "cols={cols}").unwrap();
    writeln!(out, "add_bias={}", model.add_bias).unwrap();
    writeln!(out, "scheme={}", config.scheme).unwrap();
    writeln!(out, "mu={}", fmt_full(config.mu)).unwrap();
    writeln!(out, "max_iter={}", config.max_iter).unwrap();
    writeln!(out, "ridge_epsilon={}", fmt_full(config.ridge_epsilon)).unwrap();
    writeln!(out, "residual_tol={}", fmt_full(config.residual_tol)).unwrap();
    writeln!(out, "seed={}", config.seed).unwrap();
    writeln!(out, "mean_over_observed={}", config.mean_over_observed).unwrap();
    if let Some(stats) = stats {
        let join = |v: &[f64]| v.iter().map(|&x| fmt_full(x)).collect::<Vec<_>>().join(",");
        writeln!(out, "feature_means={}", join(&stats.means)).unwrap();
        writeln!(out, "feature_stds={}", join(&stats.stds)).unwrap();
    }
    writeln!(out, "w:").unwrap();
    for row in model.w.rows() {
        let fields: Vec<String> = row.iter().map(|&v| fmt_full(v)).collect();
        writeln!(out, "{}", fields.join(",")).unwrap();
    }
    std::fs::write(path, out).with_context(|| format!("writing model to {}", path.display()))?;
    Ok(())
}

/// Model file contents: the fitted model, the config echo, and any feature
/// standardization recorded at training time.
pub type LoadedModel = (
    FittedModel<f64>,
    SolverConfig<f64>,
    Option<FeatureStats<f64>>,
);

/// Reads a model file back; the trace is not persisted.
pub fn load_model(path: &Path) -> Result<LoadedModel> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading model from {}", path.display()))?;
    let mut lines = text.lines();
    if lines.next() != Some(MAGIC) {
        bail!("{} is not a winldl model file", path.display());
    }

    let mut rows = None;
    let mut cols = None;
    let mut add_bias = false;
    let mut config = SolverConfig::<f64>::default();
    let mut feature_means: Option<Vec<f64>> = None;
    let mut feature_stds: Option<Vec<f64>> = None;
    let parse_floats = |value: &str| -> Result<Vec<f64>> {
        value
            .split(',')
            .map(|f| f.trim().parse::<f64>().map_err(Into::into))
            .collect()
    };
    for line in lines.by_ref() {
        if line == "w:" {
            break;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("malformed model header line `{line}`");
        };
        match key {
            "rows" => rows = Some(value.parse()?),
            "cols" => cols = Some(value.parse()?),
            "add_bias" => add_bias = value.parse()?,
            "scheme" => config.scheme = value.parse().map_err(|e| anyhow::anyhow!("{e}"))?,
            "mu" => config.mu = value.parse()?,
            "max_iter" => config.max_iter = value.parse()?,
            "ridge_epsilon" => config.ridge_epsilon = value.parse()?,
            "residual_tol" => config.residual_tol = value.parse()?,
            "seed" => config.seed = value.parse()?,
            "mean_over_observed" => config.mean_over_observed = value.parse()?,
            "feature_means" => feature_means = Some(parse_floats(value)?),
            "feature_stds" => feature_stds = Some(parse_floats(value)?),
            other => bail!("unknown model header key `{other}`"),
        }
    }
    let (rows, cols) = match (rows, cols) {
        (Some(r), Some(c)) => (r, c),
        _ => bail!("model file missing rows/cols"),
    };

    let mut w: Mat64 = Mat::zeros((rows, cols));
    let mut seen = 0usize;
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        if i >= rows {
            bail!("model file has more than {rows} matrix rows");
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols {
            bail!(
                "matrix row {i} has {} fields, expected {cols}",
                fields.len()
            );
        }
        for (j, f) in fields.iter().enumerate() {
            w[(i, j)] = f.trim().parse()?;
        }
        seen += 1;
    }
    if seen != rows {
        bail!("model file has {seen} matrix rows, expected {rows}");
    }

    let stats = match (feature_means, feature_stds) {
        (Some(means), Some(stds)) => {
            if means.len() != stds.len() {
                bail!("feature_means and feature_stds lengths differ");
            }
            Some(FeatureStats { means, stds })
        }
        (None, None) => None,
        _ => bail!("feature_means and feature_stds must appear together"),
    };

    Ok((
        FittedModel {
            w,
            add_bias,
            trace: Vec::new(),
        },
        config,
        stats,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.txt");
        let w = Mat::from_shape_fn((3, 2), |(i, j)| (i as f64 + 0.1) / (j as f64 + 3.7));
        let model = FittedModel {
            w: w.clone(),
            add_bias: true,
            trace: Vec::new(),
        };
        let config = SolverConfig {
            mu: 0.5,
            seed: 42,
            ..SolverConfig::default()
        };
        let stats = FeatureStats {
            means: vec![0.5, -1.25],
            stds: vec![1.0, 2.5],
        };
        save_model(&model, &config, Some(&stats), &path).unwrap();
        let (loaded, loaded_cfg, loaded_stats) = load_model(&path).unwrap();
        assert_eq!(loaded_stats, Some(stats));
        let bits: Vec<u64> = w.iter().map(|v| v.to_bits()).collect();
        let loaded_bits: Vec<u64> = loaded.w.iter().map(|v| v.to_bits()).collect();
        assert_eq!(bits, loaded_bits);
        assert!(loaded.add_bias);
        assert_eq!(loaded_cfg.mu, 0.5);
        assert_eq!(loaded_cfg.seed, 42);
    }

    #[test]
    fn rejects_foreign_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.txt");
        std::fs::write(&path, "hello\n").unwrap();
        assert!(load_model(&path).is_err());
    }
}
