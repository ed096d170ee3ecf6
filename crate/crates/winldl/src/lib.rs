//! Weighted incomplete label distribution learning.
//!
//! Learns a linear map from features to label distributions when a uniformly
//! random subset of the training degrees is unobserved. The model minimizes a
//! weighted least-squares loss under a per-row probability simplex constraint
//! and is solved by ADMM with closed-form sub-problems. Weights come straight
//! from the observed degrees (no weight learning, no explicit regularizer):
//! small observed degrees get large weights, and the weights of missing
//! degrees grow over the iterations.
//!
//! The crate is organized around the solver pipeline:
//!
//! - [`simplex`]: exact Euclidean projection onto the probability simplex
//! - [`weighting`]: observation masks and the five weighting schemes
//! - [`solver`]: the ADMM optimizer and fitted-model prediction
//! - [`metrics`]: the five distribution-comparison metrics and reports
//! - [`data`]: dataset IO, synthetic generation, masking, and splitting
//!
//! All numeric code is generic over the scalar type through [`Real`];
//! concrete `f64` aliases are exported at the crate root for the common case.
//!
//! ```
//! use winldl::data::{apply_mask, generate_synthetic, MaskSpec};
//! use winldl::metrics::evaluate;
//! use winldl::solver::{fit, predict, SolverConfig};
//!
//! let ds = generate_synthetic::<f64>(200, 8, 4, 0.05, 42)?;
//! let masked = apply_mask(&ds.degrees, &MaskSpec { missing_rate: 0.5, seed: 7 })?;
//! let config = SolverConfig { add_bias: true, ..SolverConfig::default() };
//! let model = fit(&ds.features, &masked, &config)?;
//! let report = evaluate(&predict(&model, &ds.features)?, &ds.degrees)?;
//! assert!(report.mean.cosine > 0.5);
//! # Ok::<(), winldl::Error>(())
//! ```

pub mod data;
pub mod error;
pub mod metrics;
pub mod simplex;
pub mod solver;
pub mod weighting;

mod linalg;

pub use error::{Error, Result};

use ndarray::ScalarOperand;
use num_traits::{Float, FromPrimitive, NumAssign};
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

/// Floating-point scalar used by every numeric routine in this crate.
pub trait Real:
    Float
    + FromPrimitive
    + NumAssign
    + ScalarOperand
    + Sum
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Shorthand for lossless-enough conversion from `f64` literals.
    fn from_f64_lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal not representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Dense matrix of scalars, the working representation throughout.
pub type Mat<A> = ndarray::Array2<A>;

/// `f64` aliases for the types most callers use directly.
pub type Mat64 = Mat<f64>;
pub type Dataset64 = data::Dataset<f64>;
pub type MaskedDegrees64 = weighting::MaskedDegrees<f64>;
pub type SolverConfig64 = solver::SolverConfig<f64>;
pub type FittedModel64 = solver::FittedModel<f64>;
pub type EvalReport64 = metrics::EvalReport<f64>;
