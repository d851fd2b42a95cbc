//! Synthetic confusion noise.
//!
//! Reference matrices are generated row-stochastic (row = true class). The
//! family members are transposed once here, in [`confusion_at`], so callers
//! always receive the column-stochastic [`ConfusionMatrix`] orientation.

use nalgebra::DMatrix;
use rand::Rng as _;

use crate::confusion::{invert_confusion, ConfusionMatrix};
use crate::error::{Error, Result};
use crate::rng::Rng;

const MAX_REFERENCE_DRAWS: usize = 1000;

/// Reference matrix `M` and direction `N = (M - I) / 10`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseFamily {
    reference: DMatrix<f64>,
    direction: DMatrix<f64>,
}

impl NoiseFamily {
    /// Builds a family from a row-stochastic, invertible reference matrix.
    pub fn from_reference(reference: DMatrix<f64>) -> Result<Self> {
        invert_confusion(reference.transpose())?;
        let q = reference.nrows();
        let direction = (&reference - DMatrix::<f64>::identity(q, q)) / 10.0;
        Ok(NoiseFamily { reference, direction })
    }

    pub fn num_classes(&self) -> usize {
        self.reference.nrows()
    }

    /// `M`, row-stochastic.
    pub fn reference(&self) -> &DMatrix<f64> {
        &self.reference
    }

    /// `N = (M - I) / 10`.
    pub fn direction(&self) -> &DMatrix<f64> {
        &self.direction
    }

    /// `Ω(I + i N)` in row-stochastic form.
    pub fn row_form(&self, i: f64) -> Result<DMatrix<f64>> {
        let q = self.num_classes();
        omega(&(DMatrix::<f64>::identity(q, q) + &self.direction * i))
    }
}

/// Clamps negative entries to zero, then normalizes each row to sum 1.
pub fn omega(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut out = a.map(|v| v.max(0.0));
    for (r, mut row) in out.row_iter_mut().enumerate() {
        let s: f64 = row.iter().sum();
        if !(s > 0.0) {
            return Err(Error::DegenerateRow { row: r + 1 });
        }
        row /= s;
    }
    Ok(out)
}

/// Draws `M` with i.i.d. uniform entries, rows normalized, redrawn until `Mᵀ`
/// passes the confusion-matrix invertibility guard.
pub fn sample_reference(num_classes: usize, rng: &mut Rng) -> Result<NoiseFamily> {
    if num_classes < 2 {
        return Err(Error::InvalidInput("a noise family needs at least two classes".into()));
    }
    for _ in 0..MAX_REFERENCE_DRAWS {
        let raw = DMatrix::from_fn(num_classes, num_classes, |_, _| rng.random::<f64>());
        let m = match omega(&raw) {
            Ok(m) => m,
            Err(_) => continue,
        };
        match NoiseFamily::from_reference(m) {
            Ok(f) => return Ok(f),
            Err(Error::SingularConfusion { .. } | Error::InvalidConfusion(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::ReferenceSampling { attempts: MAX_REFERENCE_DRAWS })
}

/// `C_i = Ω(I + i N)` as a column-stochastic confusion matrix.
pub fn confusion_at(family: &NoiseFamily, i: u32) -> Result<ConfusionMatrix> {
    invert_confusion(family.row_form(f64::from(i))?.transpose())
}

/// `ρ(i) = 1 - i / 10`
pub fn approximation_factor(i: i64) -> f64 {
    1.0 - i as f64 / 10.0
}

/// Draws each observed label from column `t` of `c`, where `t` is the true label.
pub fn corrupt_labels(truth: &[usize], c: &ConfusionMatrix, rng: &mut Rng) -> Vec<usize> {
    let q = c.num_classes();
    // Cumulative columns; the last entry is forced to 1 so rounding never
    // leaves a gap at the top.
    let cdf: Vec<Vec<f64>> = (0..q)
        .map(|t| {
            let mut acc = 0.0;
            let mut col: Vec<f64> = (0..q)
                .map(|p| {
                    acc += c.get(p, t);
                    acc
                })
                .collect();
            col[q - 1] = 1.0;
            col
        })
        .collect();
    truth
        .iter()
        .map(|&t| {
            let u: f64 = rng.random();
            cdf[t].iter().position(|&v| u < v).unwrap_or(q - 1)
        })
        .collect()
}
