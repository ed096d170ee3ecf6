//! Observation masks and the weighting schemes applied to the residuals.
//!
//! The weight matrix `Q` multiplies the element-wise residuals of the fit, so
//! its square plays the role of a per-entry loss weight. The default scheme
//! takes the weights straight from the observed degrees: an observed degree
//! `d` gets weight `2^(1-d)` (small degrees, large weights), and a missing
//! entry gets `a^(1-m)` where `m` is the column-mean estimate of the missing
//! degree and the base `a = 1 + iter/max_iter` grows from 1 to 2 over the
//! run, raising the influence of the missing entries as the fit stabilizes.
//! Four alternative schemes are provided for ablations.

use crate::error::{Error, Result};
use crate::{Mat, Real};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Which entries of the degree matrix are observed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationMask {
    /// `true` marks an observed entry, `false` an unobserved one.
    pub observed: Array2<bool>,
    /// Number of observed entries per column.
    pub observed_count_per_column: Vec<usize>,
}

impl ObservationMask {
    /// Builds a mask from the observation flags, computing column counts.
    pub fn new(observed: Array2<bool>) -> Self {
        let counts = observed
            .columns()
            .into_iter()
            .map(|col| col.iter().filter(|&&o| o).count())
            .collect();
        ObservationMask {
            observed,
            observed_count_per_column: counts,
        }
    }

    /// Mask with every entry observed.
    pub fn all_observed(n: usize, c: usize) -> Self {
        ObservationMask::new(Array2::from_elem((n, c), true))
    }

    pub fn n_samples(&self) -> usize {
        self.observed.nrows()
    }

    pub fn n_labels(&self) -> usize {
        self.observed.ncols()
    }

    /// Number of unobserved entries.
    pub fn n_missing(&self) -> usize {
        let total: usize = self.observed_count_per_column.iter().sum();
        self.observed.len() - total
    }
}

/// The observed degree matrix: unobserved entries are held at zero.
#[derive(Debug, Clone)]
pub struct MaskedDegrees<A> {
    /// Observed degrees, zero wherever the mask says unobserved.
    pub values: Mat<A>,
    pub mask: ObservationMask,
}

impl<A: Real> MaskedDegrees<A> {
    /// Validates the zero-at-unobserved and range invariants.
    pub fn new(values: Mat<A>, mask: ObservationMask) -> Result<Self> {
        if values.dim() != mask.observed.dim() {
            return Err(Error::ShapeMismatch {
                expected: format!("{:?}", values.dim()),
                actual: format!("{:?}", mask.observed.dim()),
            });
        }
        for ((i, j), &v) in values.indexed_iter() {
            if !v.is_finite() || v < A::zero() || v > A::one() {
                return Err(Error::Validation(format!(
                    "degree at ({i},{j}) is {v}, outside [0,1]"
                )));
            }
            if !mask.observed[(i, j)] && v != A::zero() {
                return Err(Error::Validation(format!(
                    "unobserved entry at ({i},{j}) holds {v}, expected 0"
                )));
            }
        }
        Ok(MaskedDegrees { values, mask })
    }

    /// Treats a full degree matrix as observed everywhere (0% missing).
    pub fn fully_observed(degrees: Mat<A>) -> Result<Self> {
        let (n, c) = degrees.dim();
        MaskedDegrees::new(degrees, ObservationMask::all_observed(n, c))
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_labels(&self) -> usize {
        self.values.ncols()
    }
}

/// Per-column estimate of the missing degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct MissingEstimate<A> {
    pub column_means: Vec<A>,
}

/// Estimates missing degrees as the column mean over all `N` rows, zeros
/// included. A fully masked column therefore estimates to 0.
pub fn estimate_missing<A: Real>(masked: &MaskedDegrees<A>) -> MissingEstimate<A> {
    let n = A::from_usize(masked.n_samples()).unwrap();
    let column_means = masked
        .values
        .columns()
        .into_iter()
        .map(|col| col.iter().copied().sum::<A>() / n)
        .collect();
    MissingEstimate { column_means }
}

/// Variant that averages only over the observed entries of each column; a
/// column with no observed entries estimates to 0. Selected by the
/// `mean_over_observed` config switch.
pub fn estimate_missing_over_observed<A: Real>(masked: &MaskedDegrees<A>) -> MissingEstimate<A> {
    let column_means = masked
        .values
        .columns()
        .into_iter()
        .zip(&masked.mask.observed_count_per_column)
        .map(|(col, &count)| {
            if count == 0 {
                A::zero()
            } else {
                col.iter().copied().sum::<A>() / A::from_usize(count).unwrap()
            }
        })
        .collect();
    MissingEstimate { column_means }
}

/// The five weighting schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WeightScheme {
    /// Observed: `2^(1-d)`; missing: `a^(1-m)` with `a = 1 + iter/max_iter`.
    WInLdl,
    /// Observed: 1; missing: 0 (unweighted, missing entries dropped).
    InLdlU,
    /// Observed: `d`; missing: `m` (large weights on large degrees).
    InLdlI,
    /// Observed: `2^d`; missing: `a^m` (exponential, large on large).
    InLdlIi,
    /// All entries i.i.d. uniform on (0,1), drawn once and held fixed.
    InLdlRand,
}

impl WeightScheme {
    pub const ALL: [WeightScheme; 5] = [
        WeightScheme::WInLdl,
        WeightScheme::InLdlU,
        WeightScheme::InLdlI,
        WeightScheme::InLdlIi,
        WeightScheme::InLdlRand,
    ];

    /// Whether the missing-entry weights depend on the iteration counter.
    pub fn iteration_dependent(self) -> bool {
        matches!(self, WeightScheme::WInLdl | WeightScheme::InLdlIi)
    }

    pub fn name(self) -> &'static str {
        match self {
            WeightScheme::WInLdl => "winldl",
            WeightScheme::InLdlU => "inldl-u",
            WeightScheme::InLdlI => "inldl-i",
            WeightScheme::InLdlIi => "inldl-ii",
            WeightScheme::InLdlRand => "inldl-rand",
        }
    }
}

impl fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WeightScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "winldl" => Ok(WeightScheme::WInLdl),
            "inldl-u" => Ok(WeightScheme::InLdlU),
            "inldl-i" => Ok(WeightScheme::InLdlI),
            "inldl-ii" => Ok(WeightScheme::InLdlIi),
            "inldl-rand" => Ok(WeightScheme::InLdlRand),
            other => Err(Error::invalid(format!(
                "unknown weighting scheme `{other}`; expected one of \
                 winldl, inldl-u, inldl-i, inldl-ii, inldl-rand"
            ))),
        }
    }
}

/// The weight matrix `Q` applied element-wise to the residuals.
#[derive(Debug, Clone)]
pub struct WeightMatrix<A> {
    pub q: Mat<A>,
    pub scheme: WeightScheme,
}

/// Iteration-dependent base `a = 1 + iter/max_iter`.
fn base<A: Real>(iter: usize, max_iter: usize) -> A {
    A::one() + A::from_usize(iter).unwrap() / A::from_usize(max_iter).unwrap()
}

/// Builds the weight matrix for `scheme` at iteration `iter`.
///
/// `rng_seed` only matters for the random scheme, whose draw ignores `iter`
/// so the matrix stays fixed over the whole run.
pub fn build_weights<A: Real>(
    masked: &MaskedDegrees<A>,
    estimate: &MissingEstimate<A>,
    scheme: WeightScheme,
    iter: usize,
    max_iter: usize,
    rng_seed: u64,
) -> Result<WeightMatrix<A>> {
    if max_iter < 1 {
        return Err(Error::invalid("max_iter must be at least 1"));
    }
    if iter > max_iter {
        return Err(Error::invalid(format!(
            "iter {iter} exceeds max_iter {max_iter}"
        )));
    }
    if estimate.column_means.len() != masked.n_labels() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} column means", masked.n_labels()),
            actual: format!("{}", estimate.column_means.len()),
        });
    }

    if scheme == WeightScheme::InLdlRand {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let (n, c) = masked.values.dim();
        let q = Array2::from_shape_simple_fn((n, c), || A::from_f64_lit(rng.random::<f64>()));
        return Ok(WeightMatrix { q, scheme });
    }

    let a = base::<A>(iter, max_iter);
    let two = A::from_f64_lit(2.0);
    let mut q = Mat::zeros(masked.values.dim());
    for ((i, j), w) in q.indexed_iter_mut() {
        let observed = masked.mask.observed[(i, j)];
        let d = masked.values[(i, j)];
        let m = estimate.column_means[j];
        *w = match scheme {
            WeightScheme::WInLdl => {
                if observed {
                    two.powf(A::one() - d)
                } else {
                    a.powf(A::one() - m)
                }
            }
            WeightScheme::InLdlU => {
                if observed {
                    A::one()
                } else {
                    A::zero()
                }
            }
            WeightScheme::InLdlI => {
                if observed {
                    d
                } else {
                    m
                }
            }
            WeightScheme::InLdlIi => {
                if observed {
                    two.powf(d)
                } else {
                    a.powf(m)
                }
            }
            WeightScheme::InLdlRand => unreachable!(),
        };
    }
    Ok(WeightMatrix { q, scheme })
}

/// Recomputes the missing-entry weights for the given iteration.
///
/// Touches exactly the unobserved entries; observed weights are untouched.
/// A no-op for schemes whose missing weights do not depend on the iteration.
pub fn refresh_missing_weights<A: Real>(
    weights: &mut WeightMatrix<A>,
    masked: &MaskedDegrees<A>,
    estimate: &MissingEstimate<A>,
    iter: usize,
    max_iter: usize,
) {
    if !weights.scheme.iteration_dependent() {
        return;
    }
    let a = base::<A>(iter, max_iter);
    for ((i, j), w) in weights.q.indexed_iter_mut() {
        if !masked.mask.observed[(i, j)] {
            let m = estimate.column_means[j];
            *w = match weights.scheme {
                WeightScheme::WInLdl => a.powf(A::one() - m),
                WeightScheme::InLdlIi => a.powf(m),
                _ => unreachable!(),
            };
        }
    }
}
