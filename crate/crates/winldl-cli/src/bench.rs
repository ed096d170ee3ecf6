//! The benchmark grid: (dataset x missing rate x trial) cells, each fitting
//! every scheme on an identical masked training partition.
//!
//! Each cell derives its seeds from the base seed by a stable hash, so any
//! cell reproduces in isolation. Within a cell, all schemes consume the same
//! split and the same mask; a checksum of the masked training data is
//! recorded per cell. Cells are independent, so they may run in parallel;
//! outputs are assembled in plan order, which makes the result tables
//! byte-identical whether the run was serial or parallel. Wall times go to a
//! separate file because they are the one non-deterministic output.

use crate::seeding;
use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;
use winldl::data::{
    apply_mask, fmt_full, generate_synthetic, load_dataset, split, Dataset, FeatureStats, MaskSpec,
    SplitSpec,
};
use winldl::metrics::evaluate;
use winldl::solver::{fit, predict, SolverConfig};
use winldl::weighting::{MaskedDegrees, WeightScheme};

#[derive(Debug, Clone)]
pub enum DatasetSource {
    File(PathBuf),
    Synthetic {
        n: usize,
        k: usize,
        c: usize,
        noise: f64,
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone)]
pub struct BenchmarkPlan {
    pub sources: Vec<DatasetSource>,
    pub rates: Vec<f64>,
    pub schemes: Vec<WeightScheme>,
    pub trials: usize,
    pub base_seed: u64,
    pub train_fraction: f64,
    pub solver: SolverConfig<f64>,
    pub jobs: usize,
    pub renormalize: bool,
    pub standardize: bool,
}

/// Aggregate metrics of one scheme on one cell.
#[derive(Debug, Clone, Serialize)]
pub struct CellMetrics {
    pub cosine: f64,
    pub intersection: f64,
    pub chebyshev: f64,
    pub clark: f64,
    pub canberra: f64,
    pub mre_low: f64,
    pub mre_high: f64,
}

impl CellMetrics {
    pub const NAMES: [&'static str; 7] = [
        "cosine",
        "intersection",
        "chebyshev",
        "clark",
        "canberra",
        "mre_low",
        "mre_high",
    ];

    fn values(&self) -> [f64; 7] {
        [
            self.cosine,
            self.intersection,
            self.chebyshev,
            self.clark,
            self.canberra,
            self.mre_low,
            self.mre_high,
        ]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SchemeResult {
    pub scheme: String,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<CellMetrics>,
}

/// Everything recorded for one (dataset, rate, trial) cell.
#[derive(Debug, Clone, Serialize)]
pub struct CellRecord {
    pub dataset: String,
    pub missing_rate: f64,
    pub trial: usize,
    pub cell_seed: u64,
    pub split_seed: u64,
    pub mask_seed: u64,
    pub weight_seed: u64,
    pub train_rows: usize,
    pub test_rows: usize,
    pub masked_entries: usize,
    /// SHA-256 over the masked training data every scheme consumed.
    pub train_checksum: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub schemes: Vec<SchemeResult>,
}

/// One aggregate row of the result table.
#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub dataset: String,
    pub scheme: String,
    pub missing_rate: f64,
    pub metric: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    /// Across-trial population standard deviation of the per-trial means.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std: Option<f64>,
    pub status: String,
}

pub struct BenchmarkOutcome {
    pub any_failed: bool,
    pub failed_cells: usize,
    pub rows: Vec<TableRow>,
}

/// Canonical byte encoding of the masked training inputs, hashed per cell.
fn checksum_training_data(features: &winldl::Mat64, masked: &MaskedDegrees<f64>) -> String {
    let mut hasher = Sha256::new();
    hasher.update(b"winldl-train-v1\n");
    for &v in features.iter() {
        hasher.update(fmt_full(v).as_bytes());
        hasher.update(b",");
    }
    hasher.update(b"\n");
    for &v in masked.values.iter() {
        hasher.update(fmt_full(v).as_bytes());
        hasher.update(b",");
    }
    hasher.update(b"\n");
    for &obs in masked.mask.observed.iter() {
        hasher.update(if obs { b"1" } else { b"0" });
    }
    format!("{:x}", hasher.finalize())
}

fn load_sources(plan: &BenchmarkPlan) -> Result<Vec<Dataset<f64>>> {
    let mut datasets = Vec::new();
    for source in &plan.sources {
        let ds = match source {
            DatasetSource::File(path) => load_dataset::<f64>(path, plan.renormalize)
                .with_context(|| format!("loading {}", path.display()))?,
            DatasetSource::Synthetic {
                n,
                k,
                c,
                noise,
                seed,
            } => generate_synthetic::<f64>(*n, *k, *c, *noise, seed.unwrap_or(plan.base_seed))?,
        };
        datasets.push(ds);
    }
    let mut names: Vec<&str> = datasets.iter().map(|d| d.name.as_str()).collect();
    names.sort_unstable();
    names.dedup();
    if names.len() != datasets.len() {
        anyhow::bail!("dataset names must be unique within a benchmark plan");
    }
    Ok(datasets)
}

/// Runs one cell: split, mask, then fit and evaluate every scheme on the
/// identical masked training set and untouched test set.
pub fn run_cell(
    dataset: &Dataset<f64>,
    rate: f64,
    trial: usize,
    plan: &BenchmarkPlan,
) -> CellRecord {
    let cell_seed = seeding::cell_seed(plan.base_seed, &dataset.name, rate, trial);
    let split_seed = seeding::derive(cell_seed, "split");
    let mask_seed = seeding::derive(cell_seed, "mask");
    let weight_seed = seeding::derive(cell_seed, "weights");

    let mut record = CellRecord {
        dataset: dataset.name.clone(),
        missing_rate: rate,
        trial,
        cell_seed,
        split_seed,
        mask_seed,
        weight_seed,
        train_rows: 0,
        test_rows: 0,
        masked_entries: 0,
        train_checksum: String::new(),
        error: None,
        schemes: Vec::new(),
    };

    let prepared = (|| -> winldl::Result<(Dataset<f64>, Dataset<f64>, MaskedDegrees<f64>)> {
        let (train, test) = split(
            dataset,
            &SplitSpec {
                train_fraction: plan.train_fraction,
                seed: split_seed,
            },
        )?;
        let masked = apply_mask(
            &train.degrees,
            &MaskSpec {
                missing_rate: rate,
                seed: mask_seed,
            },
        )?;
        Ok((train, test, masked))
    })();
    let (train, test, masked) = match prepared {
        Ok(v) => v,
        Err(e) => {
            record.error = Some(e.to_string());
            return record;
        }
    };

    let (train_features, test_features) = if plan.standardize {
        let stats = FeatureStats::compute(&train.features);
        match (stats.apply(&train.features), stats.apply(&test.features)) {
            (Ok(tr), Ok(te)) => (tr, te),
            (Err(e), _) | (_, Err(e)) => {
                record.error = Some(e.to_string());
                return record;
            }
        }
    } else {
        (train.features.clone(), test.features.clone())
    };

    record.train_rows = train.n_samples();
    record.test_rows = test.n_samples();
    record.masked_entries = masked.mask.n_missing();
    record.train_checksum = checksum_training_data(&train_features, &masked);

    for &scheme in &plan.schemes {
        let config = SolverConfig {
            scheme,
            seed: weight_seed,
            ..plan.solver
        };
        let result = fit(&train_features, &masked, &config)
            .and_then(|model| predict(&model, &test_features))
            .and_then(|pred| evaluate(&pred, &test.degrees));
        match result {
            Ok(report) => record.schemes.push(SchemeResult {
                scheme: scheme.name().into(),
                ok: true,
                error: None,
                metrics: Some(CellMetrics {
                    cosine: report.mean.cosine,
                    intersection: report.mean.intersection,
                    chebyshev: report.mean.chebyshev,
                    clark: report.mean.clark,
                    canberra: report.mean.canberra,
                    mre_low: report.mre_low,
                    mre_high: report.mre_high,
                }),
            }),
            Err(e) => record.schemes.push(SchemeResult {
                scheme: scheme.name().into(),
                ok: false,
                error: Some(e.to_string()),
                metrics: None,
            }),
        }
    }
    record
}

fn aggregate(
    plan: &BenchmarkPlan,
    datasets: &[Dataset<f64>],
    records: &[CellRecord],
) -> Vec<TableRow> {
    let mut rows = Vec::new();
    for dataset in datasets {
        for &scheme in &plan.schemes {
            for &rate in &plan.rates {
                // Per-trial metric values for this (dataset, scheme, rate).
                let mut per_metric: Vec<Vec<f64>> = vec![Vec::new(); CellMetrics::NAMES.len()];
                let mut failed = false;
                for record in records
                    .iter()
                    .filter(|r| r.dataset == dataset.name && r.missing_rate == rate)
                {
                    if record.error.is_some() {
                        failed = true;
                        continue;
                    }
                    match record
                        .schemes
                        .iter()
                        .find(|s| s.scheme == scheme.name())
                        .and_then(|s| s.metrics.as_ref())
                    {
                        Some(m) => {
                            for (bucket, v) in per_metric.iter_mut().zip(m.values()) {
                                bucket.push(v);
                            }
                        }
                        None => failed = true,
                    }
                }
                for (name, values) in CellMetrics::NAMES.iter().zip(&per_metric) {
                    let (mean, std, status) = if failed || values.len() != plan.trials {
                        (None, None, "failed")
                    } else {
                        let n = values.len() as f64;
                        let mean = values.iter().sum::<f64>() / n;
                        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                        (Some(mean), Some(var.sqrt()), "ok")
                    };
                    rows.push(TableRow {
                        dataset: dataset.name.clone(),
                        scheme: scheme.name().into(),
                        missing_rate: rate,
                        metric: (*name).into(),
                        mean,
                        std,
                        status: status.into(),
                    });
                }
            }
        }
    }
    rows
}

fn write_outputs(
    out_dir: &Path,
    records: &[CellRecord],
    timings: &[(String, f64, usize, f64)],
    rows: &[TableRow],
) -> Result<()> {
    let cells_dir = out_dir.join("cells");
    std::fs::create_dir_all(&cells_dir)?;
    for record in records {
        let file = cells_dir.join(format!(
            "{}_r{}_t{}.json",
            record.dataset, record.missing_rate, record.trial
        ));
        std::fs::write(&file, serde_json::to_string_pretty(record)?)?;
    }

    let mut csv = String::from("dataset,scheme,missing_rate,metric,mean,std,status\n");
    for row in rows {
        let mean = row.mean.map(|v| v.to_string()).unwrap_or_default();
        let std = row.std.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            row.dataset, row.scheme, row.missing_rate, row.metric, mean, std, row.status
        )
        .unwrap();
    }
    std::fs::write(out_dir.join("results.csv"), csv)?;
    std::fs::write(
        out_dir.join("results.json"),
        serde_json::to_string_pretty(rows)?,
    )?;

    let mut tcsv = String::from("dataset,missing_rate,trial,wall_time_s\n");
    for (dataset, rate, trial, secs) in timings {
        writeln!(tcsv, "{dataset},{rate},{trial},{secs}").unwrap();
    }
    std::fs::write(out_dir.join("timings.csv"), tcsv)?;
    Ok(())
}

/// Executes the whole grid and writes `results.csv`, `results.json`,
/// `cells/*.json`, and `timings.csv` under `out_dir`.
pub fn run_benchmark(plan: &BenchmarkPlan, out_dir: &Path) -> Result<BenchmarkOutcome> {
    let datasets = load_sources(plan)?;

    // Cells in plan order; parallel execution preserves this order on collect.
    let cells: Vec<(usize, f64, usize)> = datasets
        .iter()
        .enumerate()
        .flat_map(|(d, _)| {
            plan.rates
                .iter()
                .flat_map(move |&rate| (0..plan.trials).map(move |trial| (d, rate, trial)))
        })
        .collect();

    let execute = |&(d, rate, trial): &(usize, f64, usize)| -> (CellRecord, f64) {
        let started = Instant::now();
        let record = run_cell(&datasets[d], rate, trial, plan);
        (record, started.elapsed().as_secs_f64())
    };

    let results: Vec<(CellRecord, f64)> = if plan.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(plan.jobs)
            .build()
            .context("building worker pool")?;
        pool.install(|| {
            use rayon::prelude::*;
            cells.par_iter().map(execute).collect()
        })
    } else {
        cells.iter().map(execute).collect()
    };

    let records: Vec<CellRecord> = results.iter().map(|(r, _)| r.clone()).collect();
    let timings: Vec<(String, f64, usize, f64)> = results
        .iter()
        .map(|(r, secs)| (r.dataset.clone(), r.missing_rate, r.trial, *secs))
        .collect();

    let rows = aggregate(plan, &datasets, &records);
    write_outputs(out_dir, &records, &timings, &rows)?;

    let failed_cells = records
        .iter()
        .filter(|r| r.error.is_some() || r.schemes.iter().any(|s| !s.ok))
        .count();
    Ok(BenchmarkOutcome {
        any_failed: failed_cells > 0,
        failed_cells,
        rows,
    })
}
