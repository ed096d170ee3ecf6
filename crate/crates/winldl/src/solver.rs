//! ADMM solver for the simplex-constrained weighted least-squares model.
//!
//! The model seeks a transformation `W` minimizing
//! `1/2 ||Q ⊙ (XW - D~)||_F^2` subject to every row of `XW` lying on the
//! probability simplex. Splitting `Z = XW` gives three closed-form
//! sub-problems per iteration:
//!
//! - `W = (XᵀX)⁻¹ Xᵀ (Z - Λ/μ)`, solved against a Cholesky factorization of
//!   the Gram matrix computed once per fit;
//! - `Z = proj((μ XW + Λ + Q⊙Q⊙D~) / (Q⊙Q + μ))` element-wise, then
//!   projected row-wise onto the simplex;
//! - `Λ ← Λ + μ (XW - Z)`.
//!
//! The weight matrix is refreshed at the top of each iteration, so the
//! missing-entry base `a = 1 + iter/max_iter` runs over `(1, 2]` and reaches
//! exactly 2 on the final iteration. Every step is deterministic in the
//! inputs and the config.

use crate::error::{Error, Result};
use crate::linalg::Cholesky;
use crate::simplex::{project_rows, project_rows_in_place};
use crate::weighting::{
    build_weights, estimate_missing, estimate_missing_over_observed, refresh_missing_weights,
    MaskedDegrees, WeightMatrix, WeightScheme,
};
use crate::{Mat, Real};
use ndarray::{concatenate, Axis};
use serde::{Deserialize, Serialize};

/// Solver parameters. The penalty `mu` only affects the convergence rate,
/// not the solution, and does not need tuning.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolverConfig<A> {
    /// ADMM penalty factor, must be positive.
    pub mu: A,
    /// Number of iterations; also the denominator of the weight base.
    pub max_iter: usize,
    pub scheme: WeightScheme,
    /// Relative diagonal shift applied to the Gram matrix before
    /// factorization: the actual shift is `ridge_epsilon * trace(XᵀX)/k`.
    /// A numerical safeguard only; it does not enter the objective.
    pub ridge_epsilon: A,
    /// Append a constant-1 feature column before fitting.
    pub add_bias: bool,
    /// Early-stop threshold on the primal residual; 0 disables early stop.
    pub residual_tol: A,
    /// Seed for the random weighting scheme.
    pub seed: u64,
    /// Estimate missing degrees by the mean over observed entries only,
    /// instead of the mean over all rows (zeros included).
    pub mean_over_observed: bool,
}

impl<A: Real> Default for SolverConfig<A> {
    fn default() -> Self {
        SolverConfig {
            mu: A::from_f64_lit(2.0),
            max_iter: 50,
            scheme: WeightScheme::WInLdl,
            ridge_epsilon: A::from_f64_lit(1e-8),
            add_bias: false,
            residual_tol: A::zero(),
            seed: 0,
            mean_over_observed: false,
        }
    }
}

impl<A: Real> SolverConfig<A> {
    pub fn validate(&self) -> Result<()> {
        if !self.mu.is_finite() || self.mu <= A::zero() {
            return Err(Error::invalid(format!(
                "mu must be positive, got {}",
                self.mu
            )));
        }
        if self.max_iter < 1 {
            return Err(Error::invalid("max_iter must be at least 1"));
        }
        if self.ridge_epsilon.is_nan() || self.ridge_epsilon < A::zero() {
            return Err(Error::invalid("ridge_epsilon must be nonnegative"));
        }
        if self.residual_tol.is_nan() || self.residual_tol < A::zero() {
            return Err(Error::invalid("residual_tol must be nonnegative"));
        }
        Ok(())
    }
}

/// One row of the training trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord<A> {
    pub iter: usize,
    /// Primal residual `||XW - Z||_F` after the iteration's updates.
    pub residual: A,
    /// Weighted objective `1/2 ||Q ⊙ (XW - D~)||_F^2`.
    pub objective: A,
}

/// The ADMM triplet plus the cached Gram factorization.
#[derive(Debug, Clone)]
pub struct SolverState<A> {
    /// Transformation matrix, `k x C`.
    pub w: Mat<A>,
    /// Auxiliary variable, `N x C`; rows are on the simplex after each Z-update.
    pub z: Mat<A>,
    /// Dual multipliers, `N x C`.
    pub lambda: Mat<A>,
    /// 1-based iteration counter; 0 before the first iteration.
    pub iter: usize,
    gram: Cholesky<A>,
}

impl<A: Real> SolverState<A> {
    /// Factors `XᵀX + ridge I` once and initializes `W = 0`, `Λ = 0`.
    ///
    /// `x` must already carry the bias column if one is wanted.
    pub fn new(x: &Mat<A>, z0: Mat<A>, config: &SolverConfig<A>) -> Result<Self> {
        config.validate()?;
        let (n, k) = x.dim();
        if z0.nrows() != n {
            return Err(Error::ShapeMismatch {
                expected: format!("{n} rows"),
                actual: format!("{} rows", z0.nrows()),
            });
        }
        let mut gram = x.t().dot(x);
        if config.ridge_epsilon > A::zero() {
            let trace: A = (0..k).map(|i| gram[(i, i)]).sum();
            let shift = config.ridge_epsilon * trace / A::from_usize(k).unwrap();
            for i in 0..k {
                gram[(i, i)] += shift;
            }
        }
        let gram = Cholesky::new(&gram)?;
        let c = z0.ncols();
        Ok(SolverState {
            w: Mat::zeros((k, c)),
            lambda: Mat::zeros((n, c)),
            z: z0,
            iter: 0,
            gram,
        })
    }

    /// `W = (XᵀX + ridge I)⁻¹ Xᵀ (Z - Λ/μ)` via the cached factorization.
    pub fn update_w(&mut self, x: &Mat<A>, config: &SolverConfig<A>) -> Result<()> {
        let target = &self.z - &(&self.lambda / config.mu);
        let rhs = x.t().dot(&target);
        self.w = self.gram.solve(&rhs)?;
        Ok(())
    }

    /// Element-wise closed-form Z step followed by row-wise simplex projection.
    pub fn update_z(
        &mut self,
        x: &Mat<A>,
        weights: &WeightMatrix<A>,
        masked: &MaskedDegrees<A>,
        config: &SolverConfig<A>,
    ) -> Result<()> {
        let xw = x.dot(&self.w);
        let mut z = z_pre_projection(&xw, &self.lambda, weights, masked, config.mu);
        project_rows_in_place(&mut z).map_err(|e| Error::NumericalFailure {
            iter: self.iter,
            msg: e.to_string(),
        })?;
        self.z = z;
        Ok(())
    }

    /// `Λ ← Λ + μ (XW - Z)`.
    pub fn update_lambda(&mut self, x: &Mat<A>, config: &SolverConfig<A>) {
        let xw = x.dot(&self.w);
        self.lambda = &self.lambda + &((&xw - &self.z) * config.mu);
    }

    /// Frobenius norm of the consensus gap `XW - Z`.
    pub fn primal_residual(&self, x: &Mat<A>) -> A {
        let diff = x.dot(&self.w) - &self.z;
        diff.iter().map(|&v| v * v).sum::<A>().sqrt()
    }
}

/// The Z sub-problem solution before projection:
/// `(μ XW + Λ + Q⊙Q⊙D~) / (Q⊙Q + μ)` element-wise. Each cell minimizes
/// `1/2 q² (z - d)² + (μ/2) (z - xw - λ/μ)²`.
pub fn z_pre_projection<A: Real>(
    xw: &Mat<A>,
    lambda: &Mat<A>,
    weights: &WeightMatrix<A>,
    masked: &MaskedDegrees<A>,
    mu: A,
) -> Mat<A> {
    let mut out = Mat::zeros(xw.dim());
    for ((i, j), v) in out.indexed_iter_mut() {
        let q2 = weights.q[(i, j)] * weights.q[(i, j)];
        *v = (mu * xw[(i, j)] + lambda[(i, j)] + q2 * masked.values[(i, j)]) / (q2 + mu);
    }
    out
}

/// `1/2 ||Q ⊙ (XW - D~)||_F^2`.
pub fn weighted_objective<A: Real>(
    xw: &Mat<A>,
    weights: &WeightMatrix<A>,
    masked: &MaskedDegrees<A>,
) -> A {
    let half = A::from_f64_lit(0.5);
    let mut sum = A::zero();
    for ((i, j), &v) in xw.indexed_iter() {
        let r = weights.q[(i, j)] * (v - masked.values[(i, j)]);
        sum += r * r;
    }
    half * sum
}

/// A fitted transformation plus its training trace.
#[derive(Debug, Clone)]
pub struct FittedModel<A> {
    /// `k x C` (or `(k+1) x C` when a bias column was added).
    pub w: Mat<A>,
    pub add_bias: bool,
    pub trace: Vec<TraceRecord<A>>,
}

impl<A: Real> FittedModel<A> {
    /// Writes the trace as CSV with columns `iter,residual,objective`.
    pub fn write_trace_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "iter,residual,objective")?;
        for rec in &self.trace {
            writeln!(out, "{},{},{}", rec.iter, rec.residual, rec.objective)?;
        }
        Ok(())
    }
}

fn append_bias_column<A: Real>(x: &Mat<A>) -> Mat<A> {
    let ones = Mat::ones((x.nrows(), 1));
    concatenate(Axis(1), &[x.view(), ones.view()]).expect("row counts match")
}

/// Fits the model by ADMM.
///
/// Each iteration refreshes the missing-entry weights, then runs the W, Z,
/// and Λ updates in that order. Runs `max_iter` iterations, or stops early
/// once the primal residual drops below `residual_tol` when that is enabled.
pub fn fit<A: Real>(
    x: &Mat<A>,
    masked: &MaskedDegrees<A>,
    config: &SolverConfig<A>,
) -> Result<FittedModel<A>> {
    config.validate()?;
    let (n, k) = x.dim();
    if n < 1 || k < 1 {
        return Err(Error::invalid("feature matrix must be at least 1x1"));
    }
    if masked.n_labels() < 2 {
        return Err(Error::invalid("need at least 2 labels"));
    }
    if masked.n_samples() != n {
        return Err(Error::ShapeMismatch {
            expected: format!("{n} degree rows"),
            actual: format!("{} degree rows", masked.n_samples()),
        });
    }
    if let Some(bad) = x.iter().find(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("non-finite feature value {bad}")));
    }

    let x_aug;
    let x = if config.add_bias {
        x_aug = append_bias_column(x);
        &x_aug
    } else {
        x
    };

    let estimate = if config.mean_over_observed {
        estimate_missing_over_observed(masked)
    } else {
        estimate_missing(masked)
    };
    let mut weights = build_weights(
        masked,
        &estimate,
        config.scheme,
        0,
        config.max_iter,
        config.seed,
    )?;

    let z0 = project_rows(&masked.values)?;
    let mut state = SolverState::new(x, z0, config)?;
    let mut trace = Vec::with_capacity(config.max_iter);

    for iter in 1..=config.max_iter {
        state.iter = iter;
        refresh_missing_weights(&mut weights, masked, &estimate, iter, config.max_iter);
        state.update_w(x, config)?;
        state.update_z(x, &weights, masked, config)?;
        state.update_lambda(x, config);

        let xw = x.dot(&state.w);
        let residual = (&xw - &state.z).iter().map(|&v| v * v).sum::<A>().sqrt();
        let objective = weighted_objective(&xw, &weights, masked);
        if !residual.is_finite() || !objective.is_finite() {
            return Err(Error::NumericalFailure {
                iter,
                msg: format!("diverged: residual {residual}, objective {objective}"),
            });
        }
        trace.push(TraceRecord {
            iter,
            residual,
            objective,
        });
        if config.residual_tol > A::zero() && residual < config.residual_tol {
            break;
        }
    }

    Ok(FittedModel {
        w: state.w,
        add_bias: config.add_bias,
        trace,
    })
}

/// Predicts degree rows for `x_test`: `project_rows(x_test W)`, with the bias
/// column appended first when the model was fit with one.
pub fn predict<A: Real>(model: &FittedModel<A>, x_test: &Mat<A>) -> Result<Mat<A>> {
    let x_aug;
    let x = if model.add_bias {
        x_aug = append_bias_column(x_test);
        &x_aug
    } else {
        x_test
    };
    if x.ncols() != model.w.nrows() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} feature columns", model.w.nrows()),
            actual: format!("{} feature columns", x.ncols()),
        });
    }
    project_rows(&x.dot(&model.w))
}
