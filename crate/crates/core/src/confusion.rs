//! Column-stochastic confusion matrices with a cached inverse.
//!
//! Entry `[p][q]` is the probability of observing label `p` when the true
//! class is `q`, so every column is a distribution.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Smallest accepted reciprocal condition number (1-norm).
pub const MIN_RCOND: f64 = 1e-10;
/// Largest accepted entry of `|C C^-1 - I|`.
pub const MAX_INVERSE_RESIDUAL: f64 = 1e-8;
const COLUMN_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    matrix: DMatrix<f64>,
    inverse: DMatrix<f64>,
}

impl ConfusionMatrix {
    pub fn identity(q: usize) -> Self {
        ConfusionMatrix { matrix: DMatrix::identity(q, q), inverse: DMatrix::identity(q, q) }
    }

    /// Validates `c` and caches its inverse.
    pub fn new(c: DMatrix<f64>) -> Result<Self> {
        invert_confusion(c)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let q = rows.len();
        if let Some(r) = rows.iter().find(|r| r.len() != q) {
            return Err(Error::DimensionMismatch { expected: q, got: r.len() });
        }
        invert_confusion(DMatrix::from_fn(q, q, |i, j| rows[i][j]))
    }

    pub fn num_classes(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    /// `P(observed = p | true = q)`
    pub fn get(&self, p: usize, q: usize) -> f64 {
        self.matrix[(p, q)]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.matrix.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    /// `‖C - diag(C)‖_F`
    pub fn off_diagonal_norm(&self) -> f64 {
        let q = self.num_classes();
        (0..q)
            .flat_map(|i| (0..q).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| self.matrix[(i, j)].powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Checks that `c` is a square column-stochastic matrix and inverts it.
///
/// Rejects exactly singular input and input whose reciprocal 1-norm condition
/// number `1 / (‖C‖₁ ‖C⁻¹‖₁)` is below [`MIN_RCOND`].
pub fn invert_confusion(c: DMatrix<f64>) -> Result<ConfusionMatrix> {
    let q = c.nrows();
    if q == 0 || c.ncols() != q {
        return Err(Error::InvalidConfusion(format!("expected a square matrix, got {}x{}", q, c.ncols())));
    }
    if let Some(v) = c.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidConfusion(format!("entry {v} outside [0, 1]")));
    }
    for (j, col) in c.column_iter().enumerate() {
        let s: f64 = col.iter().sum();
        if (s - 1.0).abs() > COLUMN_SUM_TOLERANCE {
            return Err(Error::InvalidConfusion(format!("column {} sums to {s}", j + 1)));
        }
    }
    let inverse = c.clone().try_inverse().ok_or(Error::SingularConfusion { rcond: 0.0 })?;
    let rcond = 1.0 / (one_norm(&c) * one_norm(&inverse));
    if !rcond.is_finite() || rcond < MIN_RCOND {
        return Err(Error::SingularConfusion { rcond: if rcond.is_finite() { rcond } else { 0.0 } });
    }
    let residual = (&c * &inverse - DMatrix::<f64>::identity(q, q)).amax();
    if residual > MAX_INVERSE_RESIDUAL {
        return Err(Error::SingularConfusion { rcond });
    }
    Ok(ConfusionMatrix { matrix: c, inverse })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_inverts_to_identity() {
        let c = invert_confusion(DMatrix::identity(4, 4)).unwrap();
        assert_eq!(c.inverse(), &DMatrix::<f64>::identity(4, 4));
    }

    #[test]
    fn two_by_two_closed_form() {
        let c = ConfusionMatrix::from_rows(&[vec![0.9, 0.2], vec![0.1, 0.8]]).unwrap();
        // det = 0.7
        let expected = [[8.0 / 7.0, -2.0 / 7.0], [-1.0 / 7.0, 9.0 / 7.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(c.inverse()[(i, j)], expected[i][j], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn rank_one_is_singular() {
        let err = ConfusionMatrix::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap_err();
        assert!(matches!(err, Error::SingularConfusion { .. }));
    }

    #[test]
    fn nearly_singular_is_rejected() {
        let e = 1e-12;
        let err = ConfusionMatrix::from_rows(&[vec![0.5 + e, 0.5], vec![0.5 - e, 0.5]]).unwrap_err();
        assert!(matches!(err, Error::SingularConfusion { .. }));
    }

    #[test]
    fn rejects_non_stochastic_columns() {
        assert!(matches!(
            ConfusionMatrix::from_rows(&[vec![0.9, 0.9], vec![0.1, 0.8]]),
            Err(Error::InvalidConfusion(_))
        ));
        assert!(matches!(
            ConfusionMatrix::from_rows(&[vec![1.1, 0.0], vec![-0.1, 1.0]]),
            Err(Error::InvalidConfusion(_))
        ));
    }

    #[test]
    fn off_diagonal_norm_of_swap() {
        let c = ConfusionMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_abs_diff_eq!(c.off_diagonal_norm(), 2f64.sqrt(), epsilon = 1e-15);
    }
}
