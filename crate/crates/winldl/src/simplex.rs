//! Exact Euclidean projection onto the probability simplex.
//!
//! The projection solves `argmin_z ||z - v||_2` over `{z : z >= 0, sum z = 1}`
//! with the sort-based closed form: sort the entries in decreasing order, find
//! the largest prefix whose running mean keeps the shifted entries positive,
//! and subtract the resulting threshold, clamping at zero. Cost is
//! `O(C log C)` per vector, which is plenty for the label counts this crate
//! targets.

use crate::error::{Error, Result};
use crate::{Mat, Real};

/// Absolute tolerance on the unit-sum invariant of a [`SimplexVector`].
pub const SIMPLEX_SUM_TOL: f64 = 1e-9;

/// A probability vector: nonnegative entries summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexVector<A>(Vec<A>);

impl<A: Real> SimplexVector<A> {
    /// Validates the simplex invariants and wraps the vector.
    pub fn new(values: Vec<A>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("simplex vector must be non-empty"));
        }
        let mut sum = A::zero();
        for (i, &x) in values.iter().enumerate() {
            if !x.is_finite() || x < A::zero() {
                return Err(Error::invalid(format!("simplex entry {i} is invalid: {x}")));
            }
            sum += x;
        }
        if (sum - A::one()).abs() > A::from_f64_lit(SIMPLEX_SUM_TOL) {
            return Err(Error::invalid(format!(
                "simplex vector sums to {sum}, expected 1"
            )));
        }
        Ok(SimplexVector(values))
    }

    /// Wraps without validation; caller guarantees the invariants.
    pub fn new_unchecked(values: Vec<A>) -> Self {
        SimplexVector(values)
    }

    pub fn values(&self) -> &[A] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<A> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Projects `v` onto the probability simplex.
///
/// Returns the unique Euclidean projection. Entries that land exactly on the
/// computed threshold map to zero. Idempotent: projecting a simplex vector
/// returns it unchanged.
pub fn project_simplex<A: Real>(v: &[A]) -> Result<SimplexVector<A>> {
    if v.is_empty() {
        return Err(Error::invalid("cannot project an empty vector"));
    }
    for (i, &x) in v.iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::invalid(format!("non-finite entry {x} at index {i}")));
        }
    }
    let mut out = v.to_vec();
    let mut scratch = Vec::with_capacity(v.len());
    project_in_place(&mut out, &mut scratch);
    Ok(SimplexVector::new_unchecked(out))
}

/// Projects every row of `z` onto the simplex.
///
/// Rows are independent; row `i` of the output equals
/// `project_simplex(row i of z)`.
pub fn project_rows<A: Real>(z: &Mat<A>) -> Result<Mat<A>> {
    let mut out = z.clone();
    project_rows_in_place(&mut out)?;
    Ok(out)
}

/// In-place variant of [`project_rows`] used on the solver hot path.
pub fn project_rows_in_place<A: Real>(z: &mut Mat<A>) -> Result<()> {
    if z.ncols() == 0 {
        return Err(Error::invalid("cannot project rows of width 0"));
    }
    let mut scratch = Vec::with_capacity(z.ncols());
    let mut staging = Vec::with_capacity(z.ncols());
    for (i, mut row) in z.rows_mut().into_iter().enumerate() {
        for &x in row.iter() {
            if !x.is_finite() {
                return Err(Error::invalid(format!("non-finite entry {x} in row {i}")));
            }
        }
        match row.as_slice_mut() {
            Some(row) => project_in_place(row, &mut scratch),
            None => {
                // Non-contiguous row (e.g. a column-major matrix): project
                // through a staging buffer.
                staging.clear();
                staging.extend(row.iter().copied());
                project_in_place(&mut staging, &mut scratch);
                for (dst, &src) in row.iter_mut().zip(&staging) {
                    *dst = src;
                }
            }
        }
    }
    Ok(())
}

/// Core sort-based projection. `v` must be finite and non-empty.
fn project_in_place<A: Real>(v: &mut [A], scratch: &mut Vec<A>) {
    scratch.clear();
    scratch.extend_from_slice(v);
    // Finite entries only, so partial_cmp cannot fail.
    scratch.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());

    let mut cumsum = A::zero();
    let mut tau = A::zero();
    for (j, &u) in scratch.iter().enumerate() {
        cumsum += u;
        let count = A::from_usize(j + 1).unwrap();
        let candidate = (cumsum - A::one()) / count;
        if u - candidate > A::zero() {
            tau = candidate;
        } else {
            break;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - tau).max(A::zero());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn identity_on_simplex_point() {
        let p = project_simplex(&[0.3, 0.7]).unwrap();
        assert_close(p.values(), &[0.3, 0.7], 1e-15);
    }

    #[test]
    fn zero_vector_projects_to_uniform() {
        let p = project_simplex(&[0.0, 0.0]).unwrap();
        assert_close(p.values(), &[0.5, 0.5], 1e-15);
    }

    #[test]
    fn clamps_negative_coordinate() {
        let p = project_simplex(&[2.0, -1.0]).unwrap();
        assert_close(p.values(), &[1.0, 0.0], 1e-15);
    }

    #[test]
    fn uniform_shift_onto_simplex() {
        let p = project_simplex(&[0.6, 0.6]).unwrap();
        assert_close(p.values(), &[0.5, 0.5], 1e-15);
    }

    #[test]
    fn rejects_non_finite_and_empty() {
        assert!(project_simplex(&[f64::NAN, 0.0]).is_err());
        assert!(project_simplex(&[f64::INFINITY, 0.0]).is_err());
        assert!(project_simplex::<f64>(&[]).is_err());
    }

    #[test]
    fn one_hot_rows_unchanged() {
        let z = array![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let out = project_rows(&z).unwrap();
        assert_eq!(out, z);
    }

    #[test]
    fn zero_matrix_rows_become_uniform() {
        let z = Mat::<f64>::zeros((3, 4));
        let out = project_rows(&z).unwrap();
        for &x in out.iter() {
            assert!((x - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn row_error_names_offending_row() {
        let z = array![[0.1, 0.2], [f64::NAN, 0.0]];
        let err = project_rows(&z).unwrap_err();
        assert!(err.to_string().contains("row 1"), "{err}");
    }

    #[test]
    fn simplex_vector_validation() {
        assert!(SimplexVector::new(vec![0.5, 0.5]).is_ok());
        assert!(SimplexVector::new(vec![0.5, 0.4]).is_err());
        assert!(SimplexVector::new(vec![1.5, -0.5]).is_err());
        assert!(SimplexVector::new(Vec::<f64>::new()).is_err());
    }

    #[test]
    fn handles_column_major_matrices() {
        use ndarray::ShapeBuilder;
        let standard = array![[2.0, -1.0], [0.6, 0.6], [0.0, 0.0]];
        let column_major =
            Mat::from_shape_vec((3, 2).f(), vec![2.0, 0.6, 0.0, -1.0, 0.6, 0.0]).unwrap();
        assert_eq!(column_major, standard);
        assert!(column_major.row(0).as_slice().is_none());
        let a = project_rows(&standard).unwrap();
        let b = project_rows(&column_major).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn works_for_f32() {
        let p = project_simplex(&[2.0f32, -1.0]).unwrap();
        assert!((p.values()[0] - 1.0).abs() < 1e-6);
        assert!(p.values()[1].abs() < 1e-6);
    }
}
