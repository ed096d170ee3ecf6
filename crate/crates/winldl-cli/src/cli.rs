//! Argument definitions and command dispatch.
//!
//! Exit codes: 0 on success, 1 on runtime or numerical failure, 2 on usage
//! or configuration errors.

use crate::bench::{self, BenchmarkPlan, DatasetSource};
use crate::config::{
    parse_list, parse_scheme_list, resolve_solver_config, usage_err, FileConfig, SolverArgs,
    UsageError,
};
use crate::model_io;
use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use winldl::data::{
    apply_mask, generate_synthetic, load_dataset, load_mask, save_dataset, save_mask, split,
    Dataset, FeatureStats, MaskSpec, SplitSpec,
};
use winldl::metrics::evaluate;
use winldl::solver::{fit, predict};
use winldl::weighting::MaskedDegrees;

/// Weighted incomplete label distribution learning: train and evaluate
/// simplex-constrained linear models, or run seeded benchmark grids over
/// missing rates and weighting schemes.
#[derive(Debug, Parser)]
#[command(name = "winldl", version)]
pub struct Cli {
    /// Output directory for generated files.
    #[arg(long, global = true, env = "WINLDL_OUT", default_value = ".")]
    pub out: PathBuf,

    /// Key-value config file mirroring the solver and benchmark options.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Base seed for seeded operations.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Number of parallel benchmark cells (default 1 = serial).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset and write it in the dataset format.
    Synth(SynthArgs),
    /// Draw a uniform-random mask for a dataset and write the index pairs.
    Mask(MaskArgs),
    /// Fit a model and persist it.
    Train(TrainArgs),
    /// Evaluate a persisted model against a dataset.
    Eval(EvalArgs),
    /// Run the full benchmark grid: rates x schemes x trials.
    Benchmark(BenchArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Number of samples.
    #[arg(long)]
    pub n: usize,
    /// Number of features.
    #[arg(long)]
    pub k: usize,
    /// Number of labels.
    #[arg(long)]
    pub c: usize,
    /// Noise level added to the linear responses before projection.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Dataset name; also the output file stem.
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Args)]
pub struct MaskArgs {
    /// Dataset file to draw the mask for.
    #[arg(long)]
    pub data: PathBuf,
    /// Fraction of degree entries to mask, in [0, 1).
    #[arg(long)]
    pub rate: f64,
    /// Output path for the mask file (defaults next to the dataset stem).
    #[arg(long)]
    pub out_mask: Option<PathBuf>,
    /// Rescale degree rows whose sum is within 1e-3 of 1.
    #[arg(long)]
    pub renormalize: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training dataset file.
    #[arg(long)]
    pub data: PathBuf,
    /// Mask this fraction of training degrees before fitting.
    #[arg(long, conflicts_with = "mask_file")]
    pub missing_rate: Option<f64>,
    /// Seed for the mask draw (defaults to the global seed).
    #[arg(long)]
    pub mask_seed: Option<u64>,
    /// Apply a previously saved mask file instead of drawing one.
    #[arg(long)]
    pub mask_file: Option<PathBuf>,
    /// Train on a seeded partition of this fraction of the rows.
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Seed for the train/test partition.
    #[arg(long)]
    pub split_seed: Option<u64>,
    /// Rescale degree rows whose sum is within 1e-3 of 1.
    #[arg(long)]
    pub renormalize: bool,
    /// Z-score standardize the training features (stats echoed in the model).
    #[arg(long)]
    pub standardize: bool,
    /// Model output path (default `<out>/<stem>-model.txt`).
    #[arg(long)]
    pub model_out: Option<PathBuf>,
    /// Optional trace CSV with columns iter,residual,objective.
    #[arg(long)]
    pub trace_out: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Model file written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Dataset file to evaluate against.
    #[arg(long)]
    pub data: PathBuf,
    /// Re-create a seeded partition and evaluate one side of it.
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Seed for the partition; must match the one used at training time.
    #[arg(long)]
    pub split_seed: Option<u64>,
    /// Which partition to evaluate when a split is requested.
    #[arg(long, default_value = "test", value_parser = ["train", "test"])]
    pub partition: String,
    /// Rescale degree rows whose sum is within 1e-3 of 1.
    #[arg(long)]
    pub renormalize: bool,
    /// Report JSON output path (default `<out>/<stem>-report.json`).
    #[arg(long)]
    pub out_json: Option<PathBuf>,
    /// Report CSV output path (default `<out>/<stem>-report.csv`).
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Dataset files to include in the grid (repeatable).
    #[arg(long)]
    pub data: Vec<PathBuf>,
    /// Synthetic dataset specs like `n=1000,k=20,c=6,noise=0.05` (repeatable).
    #[arg(long = "synth")]
    pub synth: Vec<String>,
    /// Missing rates for the grid (default 0.1,0.3,0.5,0.7,0.9).
    #[arg(long)]
    pub rates: Option<String>,
    /// Weighting schemes to compare on identical cells (default winldl).
    #[arg(long)]
    pub schemes: Option<String>,
    /// Trials (seeded partitions) per rate (default 5).
    #[arg(long)]
    pub trials: Option<usize>,
    /// Train fraction for each trial partition (default 0.8).
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Rescale degree rows whose sum is within 1e-3 of 1.
    #[arg(long)]
    pub renormalize: bool,
    /// Z-score standardize features using each cell's training statistics.
    #[arg(long)]
    pub standardize: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
}

/// Runs the CLI, translating errors into the exit-code contract.
pub fn run(cli: Cli) -> i32 {
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<UsageError>().is_some() {
                2
            } else {
                1
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    let file_config = match &cli.config {
        Some(path) => Some(FileConfig::load(path)?),
        None => None,
    };
    std::fs::create_dir_all(&cli.out)
        .with_context(|| format!("creating output directory {}", cli.out.display()))?;

    match &cli.command {
        Command::Synth(args) => cmd_synth(&cli, args),
        Command::Mask(args) => cmd_mask(&cli, args),
        Command::Train(args) => cmd_train(&cli, file_config.as_ref(), args),
        Command::Eval(args) => cmd_eval(&cli, args),
        Command::Benchmark(args) => cmd_benchmark(&cli, file_config.as_ref(), args),
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into())
}

fn cmd_synth(cli: &Cli, args: &SynthArgs) -> Result<i32> {
    let seed = cli.seed.unwrap_or(0);
    let mut ds = generate_synthetic::<f64>(args.n, args.k, args.c, args.noise, seed)
        .map_err(|e| usage_err(e.to_string()))?;
    if let Some(name) = &args.name {
        ds.name = name.clone();
    }
    let path = cli.out.join(format!("{}.csv", ds.name));
    save_dataset(&ds, &path)?;
    println!("wrote {}", path.display());
    Ok(0)
}

fn cmd_mask(cli: &Cli, args: &MaskArgs) -> Result<i32> {
    let ds = load_dataset::<f64>(&args.data, args.renormalize)?;
    let seed = cli.seed.unwrap_or(0);
    let masked = apply_mask(
        &ds.degrees,
        &MaskSpec {
            missing_rate: args.rate,
            seed,
        },
    )
    .map_err(|e| usage_err(e.to_string()))?;
    let out_mask = args.out_mask.clone().unwrap_or_else(|| {
        cli.out.join(format!(
            "{}-mask-r{}-s{seed}.csv",
            stem(&args.data),
            args.rate
        ))
    });
    save_mask(&masked.mask, &out_mask)?;
    println!(
        "wrote {} ({} masked entries)",
        out_mask.display(),
        masked.mask.n_missing()
    );
    Ok(0)
}

/// Builds the masked training degrees according to the train flags.
fn masked_for_training(
    cli: &Cli,
    args: &TrainArgs,
    train: &Dataset<f64>,
) -> Result<MaskedDegrees<f64>> {
    if let Some(mask_path) = &args.mask_file {
        let mask = load_mask(mask_path, train.n_samples(), train.n_labels())?;
        let mut values = train.degrees.clone();
        for ((i, j), &obs) in mask.observed.indexed_iter() {
            if !obs {
                values[(i, j)] = 0.0;
            }
        }
        return Ok(MaskedDegrees::new(values, mask)?);
    }
    if let Some(rate) = args.missing_rate {
        let seed = args.mask_seed.or(cli.seed).unwrap_or(0);
        return apply_mask(
            &train.degrees,
            &MaskSpec {
                missing_rate: rate,
                seed,
            },
        )
        .map_err(|e| usage_err(e.to_string()));
    }
    Ok(MaskedDegrees::fully_observed(train.degrees.clone())?)
}

fn split_if_requested(
    fraction: Option<f64>,
    seed: Option<u64>,
    ds: &Dataset<f64>,
) -> Result<Option<(Dataset<f64>, Dataset<f64>)>> {
    match fraction {
        None => Ok(None),
        Some(frac) => {
            let spec = SplitSpec {
                train_fraction: frac,
                seed: seed.unwrap_or(0),
            };
            Ok(Some(
                split(ds, &spec).map_err(|e| usage_err(e.to_string()))?,
            ))
        }
    }
}

fn cmd_train(cli: &Cli, file_config: Option<&FileConfig>, args: &TrainArgs) -> Result<i32> {
    let config = resolve_solver_config(&args.solver, file_config, cli.seed)?;
    let ds = load_dataset::<f64>(&args.data, args.renormalize)?;
    let parts = split_if_requested(args.train_fraction, args.split_seed, &ds)?;
    let train = parts.as_ref().map(|(tr, _)| tr).unwrap_or(&ds);

    let masked = masked_for_training(cli, args, train)?;
    let (features, stats) = if args.standardize {
        let stats = FeatureStats::compute(&train.features);
        (stats.apply(&train.features)?, Some(stats))
    } else {
        (train.features.clone(), None)
    };
    let model = fit(&features, &masked, &config)?;

    let model_path = args
        .model_out
        .clone()
        .unwrap_or_else(|| cli.out.join(format!("{}-model.txt", stem(&args.data))));
    model_io::save_model(&model, &config, stats.as_ref(), &model_path)?;
    if let Some(trace_path) = &args.trace_out {
        let mut buf = Vec::new();
        model.write_trace_csv(&mut buf)?;
        std::fs::write(trace_path, buf)?;
    }
    let last = model.trace.last().expect("at least one iteration ran");
    println!(
        "wrote {} (iterations: {}, residual: {:.3e}, objective: {:.6e})",
        model_path.display(),
        last.iter,
        last.residual,
        last.objective
    );
    Ok(0)
}

fn cmd_eval(cli: &Cli, args: &EvalArgs) -> Result<i32> {
    let (model, _config, stats) = model_io::load_model(&args.model)?;
    let ds = load_dataset::<f64>(&args.data, args.renormalize)?;
    let parts = split_if_requested(args.train_fraction, args.split_seed, &ds)?;
    let target = match (&parts, args.partition.as_str()) {
        (Some((train, _)), "train") => train,
        (Some((_, test)), "test") => test,
        (None, _) => &ds,
        _ => unreachable!("clap restricts partition values"),
    };

    let features = match &stats {
        Some(stats) => stats.apply(&target.features)?,
        None => target.features.clone(),
    };
    let pred = predict(&model, &features)?;
    let report = evaluate(&pred, &target.degrees)?;

    let json_path = args
        .out_json
        .clone()
        .unwrap_or_else(|| cli.out.join(format!("{}-report.json", stem(&args.data))));
    let csv_path = args
        .out_csv
        .clone()
        .unwrap_or_else(|| cli.out.join(format!("{}-report.csv", stem(&args.data))));
    std::fs::write(&json_path, report.to_json())?;
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    std::fs::write(&csv_path, buf)?;

    println!(
        "cosine {:.4}  intersection {:.4}  chebyshev {:.4}  clark {:.4}  canberra {:.4}",
        report.mean.cosine,
        report.mean.intersection,
        report.mean.chebyshev,
        report.mean.clark,
        report.mean.canberra
    );
    println!("wrote {} and {}", json_path.display(), csv_path.display());
    Ok(0)
}

fn parse_synth_spec(raw: &str) -> Result<DatasetSource> {
    let mut n = None;
    let mut k = None;
    let mut c = None;
    let mut noise = 0.0;
    let mut seed = None;
    for part in raw.split(',') {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| usage_err(format!("bad synth spec entry `{part}`")))?;
        match key.trim() {
            "n" => {
                n = Some(
                    value
                        .trim()
                        .parse()
                        .map_err(|e| usage_err(format!("{e}")))?,
                )
            }
            "k" => {
                k = Some(
                    value
                        .trim()
                        .parse()
                        .map_err(|e| usage_err(format!("{e}")))?,
                )
            }
            "c" => {
                c = Some(
                    value
                        .trim()
                        .parse()
                        .map_err(|e| usage_err(format!("{e}")))?,
                )
            }
            "noise" => {
                noise = value
                    .trim()
                    .parse()
                    .map_err(|e| usage_err(format!("{e}")))?
            }
            "seed" => {
                seed = Some(
                    value
                        .trim()
                        .parse()
                        .map_err(|e| usage_err(format!("{e}")))?,
                )
            }
            other => return Err(usage_err(format!("unknown synth spec key `{other}`"))),
        }
    }
    match (n, k, c) {
        (Some(n), Some(k), Some(c)) => Ok(DatasetSource::Synthetic {
            n,
            k,
            c,
            noise,
            seed,
        }),
        _ => Err(usage_err("synth spec needs n=, k=, and c=")),
    }
}

fn cmd_benchmark(cli: &Cli, file_config: Option<&FileConfig>, args: &BenchArgs) -> Result<i32> {
    let solver = resolve_solver_config(&args.solver, file_config, None)?;

    // Resolution order: command line, then config file, then defaults.
    let mut rates: Vec<f64> = vec![0.1, 0.3, 0.5, 0.7, 0.9];
    let mut schemes = vec![winldl::weighting::WeightScheme::WInLdl];
    let mut trials = 5usize;
    let mut train_fraction = 0.8f64;
    if let Some(fc) = file_config {
        if let Some(raw) = fc.get("rates") {
            rates = parse_list(raw, "rate")?;
        }
        if let Some(raw) = fc.get("schemes") {
            schemes = parse_scheme_list(raw)?;
        }
        if let Some(v) = fc.parse::<usize>("trials")? {
            trials = v;
        }
        if let Some(v) = fc.parse::<f64>("train_fraction")? {
            train_fraction = v;
        }
    }
    if let Some(raw) = &args.rates {
        rates = parse_list(raw, "rate")?;
    }
    if let Some(raw) = &args.schemes {
        schemes = parse_scheme_list(raw)?;
    }
    if let Some(v) = args.trials {
        trials = v;
    }
    if let Some(v) = args.train_fraction {
        train_fraction = v;
    }
    if rates.is_empty() || rates.iter().any(|r| !(0.0..1.0).contains(r)) {
        return Err(usage_err("rates must be a non-empty list within [0, 1)"));
    }
    if trials == 0 {
        return Err(usage_err("trials must be at least 1"));
    }

    let mut sources: Vec<DatasetSource> = args
        .data
        .iter()
        .map(|p| DatasetSource::File(p.clone()))
        .collect();
    for spec in &args.synth {
        sources.push(parse_synth_spec(spec)?);
    }
    if sources.is_empty() {
        return Err(usage_err(
            "benchmark needs at least one --data or --synth source",
        ));
    }

    let plan = BenchmarkPlan {
        sources,
        rates,
        schemes,
        trials,
        base_seed: cli.seed.unwrap_or(0),
        train_fraction,
        solver,
        jobs: cli.jobs.unwrap_or(1).max(1),
        renormalize: args.renormalize,
        standardize: args.standardize,
    };
    let outcome = bench::run_benchmark(&plan, &cli.out)?;
    println!(
        "wrote {} and {}",
        cli.out.join("results.csv").display(),
        cli.out.join("results.json").display()
    );
    if outcome.any_failed {
        eprintln!(
            "{} cell(s) failed; see the cell records",
            outcome.failed_cells
        );
        Ok(1)
    } else {
        Ok(0)
    }
}
