//! Dense symmetric positive-definite factorization for the normal equations.

use crate::error::{Error, Result};
use crate::{Mat, Real};

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub(crate) struct Cholesky<A> {
    l: Mat<A>,
}

impl<A: Real> Cholesky<A> {
    /// Factors `a = L Lᵀ`. Fails if a pivot is non-positive or non-finite,
    /// i.e. the matrix is not numerically positive definite.
    pub(crate) fn new(a: &Mat<A>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::ShapeMismatch {
                expected: format!("{n}x{n}"),
                actual: format!("{}x{}", a.nrows(), a.ncols()),
            });
        }
        let mut l = Mat::zeros((n, n));
        for i in 0..n {
            for j in 0..=i {
                let mut sum = a[(i, j)];
                for k in 0..j {
                    sum -= l[(i, k)] * l[(j, k)];
                }
                if i == j {
                    if !sum.is_finite() || sum <= A::zero() {
                        return Err(Error::NumericalFailure {
                            iter: 0,
                            msg: format!(
                                "Gram matrix is not positive definite (pivot {sum} at {i})"
                            ),
                        });
                    }
                    l[(i, j)] = sum.sqrt();
                } else {
                    l[(i, j)] = sum / l[(j, j)];
                }
            }
        }
        Ok(Cholesky { l })
    }

    /// Solves `A X = B` for all columns of `B` by forward/back substitution.
    pub(crate) fn solve(&self, b: &Mat<A>) -> Result<Mat<A>> {
        let n = self.l.nrows();
        if b.nrows() != n {
            return Err(Error::ShapeMismatch {
                expected: format!("{n} rows"),
                actual: format!("{} rows", b.nrows()),
            });
        }
        let mut x = b.clone();
        let cols = x.ncols();
        // L y = b
        for i in 0..n {
            for k in 0..i {
                let lik = self.l[(i, k)];
                for col in 0..cols {
                    let yk = x[(k, col)];
                    x[(i, col)] -= lik * yk;
                }
            }
            let lii = self.l[(i, i)];
            for col in 0..cols {
                x[(i, col)] /= lii;
            }
        }
        // Lᵀ x = y
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let lki = self.l[(k, i)];
                for col in 0..cols {
                    let xk = x[(k, col)];
                    x[(i, col)] -= lki * xk;
                }
            }
            let lii = self.l[(i, i)];
            for col in 0..cols {
                x[(i, col)] /= lii;
            }
        }
        Ok(x)
    }
}
