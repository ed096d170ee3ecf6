//! Dataset ingestion, synthetic generation, masking, and partitioning.
//!
//! On-disk format: one delimited text file (comma or tab, auto-detected) with
//! an optional header row; the first `k` columns are features and the last
//! `C` columns are degrees. A sidecar descriptor at `<path>.meta` holds
//! `key=value` lines declaring `n_features`, `n_labels`, `name`, and optional
//! column names. Degrees are written with 18 significant digits so a
//! save/load round trip is value-exact.
//!
//! Masks and splits are seeded with a counter-based RNG, so they depend only
//! on the matrix shape and the spec — never on global state.

use crate::error::{Error, Result};
use crate::simplex::project_rows;
use crate::weighting::{MaskedDegrees, ObservationMask};
use crate::{Mat, Real};
use ndarray::{Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// Absolute row-sum tolerance accepted without renormalization.
pub const STRICT_ROW_SUM_TOL: f64 = 1e-6;
/// Absolute row-sum tolerance accepted when renormalization is requested.
pub const RENORMALIZE_ROW_SUM_TOL: f64 = 1e-3;

/// A feature matrix paired with its ground-truth degree matrix.
#[derive(Debug, Clone)]
pub struct Dataset<A> {
    pub features: Mat<A>,
    /// Rows lie on the probability simplex.
    pub degrees: Mat<A>,
    pub name: String,
    pub feature_names: Option<Vec<String>>,
    pub label_names: Option<Vec<String>>,
    /// For synthetic data, the generating transformation (not persisted).
    pub generator_w: Option<Mat<A>>,
}

impl<A: Real> Dataset<A> {
    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_labels(&self) -> usize {
        self.degrees.ncols()
    }

    /// Returns the dataset restricted to the given row indices.
    fn select_rows(&self, indices: &[usize], name: String) -> Dataset<A> {
        Dataset {
            features: self.features.select(Axis(0), indices),
            degrees: self.degrees.select(Axis(0), indices),
            name,
            feature_names: self.feature_names.clone(),
            label_names: self.label_names.clone(),
            generator_w: self.generator_w.clone(),
        }
    }
}

/// Uniform-random masking of a fixed fraction of degree entries.
#[derive(Debug, Clone, Copy)]
pub struct MaskSpec<A> {
    /// Fraction of entries masked, in [0, 1).
    pub missing_rate: A,
    pub seed: u64,
}

/// Seeded train/test partition.
#[derive(Debug, Clone, Copy)]
pub struct SplitSpec<A> {
    /// Fraction of rows assigned to the training partition, in (0, 1).
    pub train_fraction: A,
    pub seed: u64,
}

impl<A: Real> Default for SplitSpec<A> {
    fn default() -> Self {
        SplitSpec {
            train_fraction: A::from_f64_lit(0.8),
            seed: 0,
        }
    }
}

/// Draws features and a generating transformation at random, then projects
/// the noisy linear responses onto the simplex to obtain the degrees.
///
/// Features are i.i.d. standard normal; the generator has i.i.d. normal
/// entries scaled by `1/sqrt(k)`; `degrees = project_rows(X W + noise G)`
/// with `G` standard normal. Deterministic in `seed`; the generator is kept
/// on the dataset for recovery checks.
pub fn generate_synthetic<A: Real>(
    n: usize,
    k: usize,
    c: usize,
    noise: A,
    seed: u64,
) -> Result<Dataset<A>> {
    if n < 1 || k < 1 {
        return Err(Error::invalid("n and k must be at least 1"));
    }
    if c < 2 {
        return Err(Error::invalid("c must be at least 2"));
    }
    if noise.is_nan() || noise < A::zero() {
        return Err(Error::invalid("noise must be nonnegative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || {
        let v: f64 = StandardNormal.sample(&mut rng);
        A::from_f64_lit(v)
    };
    let features = Array2::from_shape_simple_fn((n, k), &mut normal);
    let scale = A::one() / A::from_usize(k).unwrap().sqrt();
    let generator = Array2::from_shape_simple_fn((k, c), &mut normal) * scale;
    let noise_mat = Array2::from_shape_simple_fn((n, c), &mut normal);
    let raw = features.dot(&generator) + noise_mat * noise;
    let degrees = project_rows(&raw)?;
    Ok(Dataset {
        features,
        degrees,
        name: format!("synth-n{n}-k{k}-c{c}-s{seed}"),
        feature_names: None,
        label_names: None,
        generator_w: Some(generator),
    })
}

/// Number of entries masked at `rate`: `floor(rate * n * c)`, computed with a
/// small epsilon so decimal rates like 0.3 hit the intended integer.
fn mask_count(rate: f64, total: usize) -> usize {
    (rate * total as f64 + 1e-9).floor() as usize
}

/// Masks exactly `floor(rate * N * C)` entries drawn uniformly without
/// replacement, zeroing them in the returned matrix. No row or column is
/// protected; at high rates a row may lose every observed degree.
pub fn apply_mask<A: Real>(degrees: &Mat<A>, spec: &MaskSpec<A>) -> Result<MaskedDegrees<A>> {
    let rate = spec
        .missing_rate
        .to_f64()
        .ok_or_else(|| Error::invalid("missing_rate is not finite"))?;
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::invalid(format!(
            "missing_rate must lie in [0, 1), got {rate}"
        )));
    }
    let (n, c) = degrees.dim();
    let total = n * c;
    let m = mask_count(rate, total);

    // Partial Fisher-Yates over the flat indices: the first m slots end up
    // holding a uniform sample without replacement.
    let mut indices: Vec<usize> = (0..total).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for i in 0..m {
        let j = rng.random_range(i..total);
        indices.swap(i, j);
    }

    let mut values = degrees.clone();
    let mut observed = Array2::from_elem((n, c), true);
    for &flat in &indices[..m] {
        let (i, j) = (flat / c, flat % c);
        values[(i, j)] = A::zero();
        observed[(i, j)] = false;
    }
    MaskedDegrees::new(values, ObservationMask::new(observed))
}

/// Splits the dataset into disjoint, exhaustive train/test partitions via a
/// seeded permutation. The training partition gets `round(fraction * N)` rows.
pub fn split<A: Real>(
    dataset: &Dataset<A>,
    spec: &SplitSpec<A>,
) -> Result<(Dataset<A>, Dataset<A>)> {
    let n = dataset.n_samples();
    if n < 2 {
        return Err(Error::invalid("need at least 2 samples to split"));
    }
    let frac = spec
        .train_fraction
        .to_f64()
        .ok_or_else(|| Error::invalid("train_fraction is not finite"))?;
    if !(0.0 < frac && frac < 1.0) {
        return Err(Error::invalid(format!(
            "train_fraction must lie in (0, 1), got {frac}"
        )));
    }
    let train_size = (frac * n as f64).round() as usize;
    if train_size == 0 || train_size == n {
        return Err(Error::invalid(format!(
            "train_fraction {frac} leaves an empty partition for {n} samples"
        )));
    }

    let mut perm: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        perm.swap(i, j);
    }
    let train = dataset.select_rows(&perm[..train_size], dataset.name.clone());
    let test = dataset.select_rows(&perm[train_size..], dataset.name.clone());
    Ok((train, test))
}

/// Full-precision decimal rendering that round-trips the value exactly.
pub fn fmt_full<A: Real>(x: A) -> String {
    format!("{:.17e}", x)
}

/// Per-column mean and population standard deviation of a feature matrix,
/// for optional z-score standardization.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStats<A> {
    pub means: Vec<A>,
    pub stds: Vec<A>,
}

impl<A: Real> FeatureStats<A> {
    pub fn compute(features: &Mat<A>) -> Self {
        let n = A::from_usize(features.nrows()).unwrap();
        let mut means = Vec::with_capacity(features.ncols());
        let mut stds = Vec::with_capacity(features.ncols());
        for col in features.columns() {
            let mean = col.iter().copied().sum::<A>() / n;
            let var = col.iter().map(|&v| (v - mean) * (v - mean)).sum::<A>() / n;
            means.push(mean);
            stds.push(var.sqrt());
        }
        FeatureStats { means, stds }
    }

    /// Centers each column and divides by its standard deviation; constant
    /// columns are centered only.
    pub fn apply(&self, features: &Mat<A>) -> Result<Mat<A>> {
        if features.ncols() != self.means.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} feature columns", self.means.len()),
                actual: format!("{}", features.ncols()),
            });
        }
        let mut out = features.clone();
        for (j, mut col) in out.columns_mut().into_iter().enumerate() {
            let mean = self.means[j];
            let std = self.stds[j];
            if std > A::zero() {
                col.mapv_inplace(|v| (v - mean) / std);
            } else {
                col.mapv_inplace(|v| v - mean);
            }
        }
        Ok(out)
    }
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut os = path.as_os_str().to_os_string();
    os.push(".meta");
    PathBuf::from(os)
}

/// Writes the dataset file (comma-delimited, header when column names are
/// present) and its sidecar descriptor.
pub fn save_dataset<A: Real>(dataset: &Dataset<A>, path: &Path) -> Result<()> {
    let k = dataset.n_features();
    let c = dataset.n_labels();
    let mut out = String::new();
    if let (Some(fnames), Some(lnames)) = (&dataset.feature_names, &dataset.label_names) {
        let header: Vec<&str> = fnames.iter().chain(lnames).map(String::as_str).collect();
        writeln!(out, "{}", header.join(",")).unwrap();
    }
    for i in 0..dataset.n_samples() {
        let mut fields = Vec::with_capacity(k + c);
        for j in 0..k {
            fields.push(fmt_full(dataset.features[(i, j)]));
        }
        for j in 0..c {
            fields.push(fmt_full(dataset.degrees[(i, j)]));
        }
        writeln!(out, "{}", fields.join(",")).unwrap();
    }
    fs::write(path, out)?;

    let mut meta = String::new();
    writeln!(meta, "name={}", dataset.name).unwrap();
    writeln!(meta, "n_features={k}").unwrap();
    writeln!(meta, "n_labels={c}").unwrap();
    if let Some(names) = &dataset.feature_names {
        writeln!(meta, "feature_names={}", names.join(",")).unwrap();
    }
    if let Some(names) = &dataset.label_names {
        writeln!(meta, "label_names={}", names.join(",")).unwrap();
    }
    fs::write(sidecar_path(path), meta)?;
    Ok(())
}

/// (name, n_features, n_labels, feature names, label names).
type Descriptor = (
    String,
    usize,
    usize,
    Option<Vec<String>>,
    Option<Vec<String>>,
);

fn parse_descriptor(path: &Path) -> Result<Descriptor> {
    let meta_path = sidecar_path(path);
    let text = fs::read_to_string(&meta_path).map_err(|e| {
        Error::Validation(format!(
            "missing or unreadable descriptor {}: {e}",
            meta_path.display()
        ))
    })?;
    let mut name = None;
    let mut n_features = None;
    let mut n_labels = None;
    let mut feature_names = None;
    let mut label_names = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            path: meta_path.display().to_string(),
            line: lineno + 1,
            msg: "expected key=value".into(),
        })?;
        let value = value.trim();
        match key.trim() {
            "name" => name = Some(value.to_string()),
            "n_features" => {
                n_features = Some(value.parse::<usize>().map_err(|e| Error::Parse {
                    path: meta_path.display().to_string(),
                    line: lineno + 1,
                    msg: format!("bad n_features: {e}"),
                })?)
            }
            "n_labels" => {
                n_labels = Some(value.parse::<usize>().map_err(|e| Error::Parse {
                    path: meta_path.display().to_string(),
                    line: lineno + 1,
                    msg: format!("bad n_labels: {e}"),
                })?)
            }
            "feature_names" => feature_names = Some(value.split(',').map(str::to_string).collect()),
            "label_names" => label_names = Some(value.split(',').map(str::to_string).collect()),
            _ => {} // unknown keys are ignored for forward compatibility
        }
    }
    let name = name.unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into())
    });
    let k = n_features.ok_or_else(|| {
        Error::Validation(format!(
            "{} does not declare n_features",
            meta_path.display()
        ))
    })?;
    let c = n_labels.ok_or_else(|| {
        Error::Validation(format!("{} does not declare n_labels", meta_path.display()))
    })?;
    Ok((name, k, c, feature_names, label_names))
}

/// Loads and validates a dataset.
///
/// With `renormalize`, degree rows whose sum is within `1e-3` of 1 are
/// rescaled to sum to 1; rows further out are errors either way. Negative
/// degrees are always errors.
pub fn load_dataset<A: Real>(path: &Path, renormalize: bool) -> Result<Dataset<A>> {
    let (name, k, c, feature_names, label_names) = parse_descriptor(path)?;
    let text = fs::read_to_string(path)?;
    let path_str = path.display().to_string();

    let delimiter = text
        .lines()
        .find(|l| !l.trim().is_empty())
        .map(|l| if l.contains('\t') { '\t' } else { ',' })
        .unwrap_or(',');

    let mut rows: Vec<Vec<A>> = Vec::new();
    let mut first_data_line = true;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(delimiter).collect();
        let parsed: std::result::Result<Vec<A>, _> = fields
            .iter()
            .map(|f| f.trim().parse::<f64>().map(A::from_f64_lit))
            .collect();
        let values = match parsed {
            Ok(v) => v,
            Err(e) => {
                if first_data_line {
                    // Optional header row.
                    first_data_line = false;
                    continue;
                }
                return Err(Error::Parse {
                    path: path_str,
                    line: lineno + 1,
                    msg: format!("unparseable numeric field: {e}"),
                });
            }
        };
        first_data_line = false;
        if values.len() != k + c {
            return Err(Error::Parse {
                path: path_str,
                line: lineno + 1,
                msg: format!("expected {} fields, found {}", k + c, values.len()),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse {
                path: path_str,
                line: lineno + 1,
                msg: "non-finite value".into(),
            });
        }
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(Error::Validation(format!("{path_str} holds no data rows")));
    }

    let n = rows.len();
    let mut features = Mat::<A>::zeros((n, k));
    let mut degrees = Mat::<A>::zeros((n, c));
    for (i, row) in rows.iter().enumerate() {
        for j in 0..k {
            features[(i, j)] = row[j];
        }
        for j in 0..c {
            degrees[(i, j)] = row[k + j];
        }
    }

    // Degree validation: nonnegativity, then row sums.
    for ((i, j), &d) in degrees.indexed_iter() {
        if d < A::zero() {
            return Err(Error::Validation(format!(
                "negative degree {d} at row {i}, label {j}"
            )));
        }
    }
    let tol = if renormalize {
        A::from_f64_lit(RENORMALIZE_ROW_SUM_TOL)
    } else {
        A::from_f64_lit(STRICT_ROW_SUM_TOL)
    };
    let mut offenders = Vec::new();
    for (i, mut row) in degrees.rows_mut().into_iter().enumerate() {
        let sum: A = row.iter().copied().sum();
        if (sum - A::one()).abs() > tol {
            offenders.push(i);
        } else if renormalize && sum != A::one() {
            row.mapv_inplace(|v| v / sum);
        }
    }
    if !offenders.is_empty() {
        return Err(Error::Validation(format!(
            "degree rows do not sum to 1 within tolerance: rows {offenders:?}"
        )));
    }

    Ok(Dataset {
        features,
        degrees,
        name,
        feature_names,
        label_names,
        generator_w: None,
    })
}

/// Writes the unobserved index pairs, one `row,col` line each, row-major.
pub fn save_mask(mask: &ObservationMask, path: &Path) -> Result<()> {
    let mut out = String::new();
    for ((i, j), &obs) in mask.observed.indexed_iter() {
        if !obs {
            writeln!(out, "{i},{j}").unwrap();
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads a mask file written by [`save_mask`] for an `n` x `c` matrix.
pub fn load_mask(path: &Path, n: usize, c: usize) -> Result<ObservationMask> {
    let text = fs::read_to_string(path)?;
    let path_str = path.display().to_string();
    let mut observed = Array2::from_elem((n, c), true);
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parse = || -> Option<(usize, usize)> {
            let (a, b) = line.split_once(',')?;
            Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
        };
        let (i, j) = parse().ok_or_else(|| Error::Parse {
            path: path_str.clone(),
            line: lineno + 1,
            msg: "expected `row,col`".into(),
        })?;
        if i >= n || j >= c {
            return Err(Error::Parse {
                path: path_str,
                line: lineno + 1,
                msg: format!("index ({i},{j}) out of bounds for {n}x{c}"),
            });
        }
        observed[(i, j)] = false;
    }
    Ok(ObservationMask::new(observed))
}
