//! Classification metrics on ground truth.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Recall-style confusion estimate with a zero diagonal.
///
/// Entry `[p][q]` is the fraction of class-`q` examples predicted as `p`.
/// Every class must occur in `truths`.
pub fn recall_confusion(preds: &[usize], truths: &[usize], num_classes: usize) -> Result<DMatrix<f64>> {
    let counts = count_matrix(preds, truths, num_classes)?;
    let mut out = DMatrix::zeros(num_classes, num_classes);
    for q in 0..num_classes {
        let total: f64 = counts.column(q).sum();
        if total == 0.0 {
            return Err(Error::MissingClass { class: q + 1 });
        }
        for p in (0..num_classes).filter(|&p| p != q) {
            out[(p, q)] = counts[(p, q)] / total;
        }
    }
    Ok(out)
}

/// Raw `[predicted][true]` counts.
pub fn count_matrix(preds: &[usize], truths: &[usize], num_classes: usize) -> Result<DMatrix<f64>> {
    if preds.len() != truths.len() {
        return Err(Error::DimensionMismatch { expected: truths.len(), got: preds.len() });
    }
    let mut counts = DMatrix::zeros(num_classes, num_classes);
    for (&p, &t) in preds.iter().zip(truths) {
        if p >= num_classes || t >= num_classes {
            return Err(Error::InvalidInput(format!("label outside 1..={num_classes}")));
        }
        counts[(p, t)] += 1.0;
    }
    Ok(counts)
}

/// `‖Ĉ‖_F / √Q`
pub fn confusion_rate(chat: &DMatrix<f64>) -> f64 {
    chat.norm() / (chat.nrows() as f64).sqrt()
}

pub fn error_rate(preds: &[usize], truths: &[usize]) -> Result<f64> {
    if preds.len() != truths.len() {
        return Err(Error::DimensionMismatch { expected: truths.len(), got: preds.len() });
    }
    if preds.is_empty() {
        return Err(Error::InvalidInput("error rate of an empty sequence".into()));
    }
    let wrong = preds.iter().zip(truths).filter(|(a, b)| a != b).count();
    Ok(wrong as f64 / preds.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn recall_examples() {
        let t = [0, 1, 1, 0];
        assert_eq!(recall_confusion(&t, &t, 2).unwrap(), DMatrix::zeros(2, 2));
        let c = recall_confusion(&[1, 1, 0, 0], &[0, 0, 1, 1], 2).unwrap();
        assert_eq!(c, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        let c = recall_confusion(&[0, 1, 0, 1], &[0, 0, 0, 1], 2).unwrap();
        assert_abs_diff_eq!(c[(1, 0)], 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(c[(0, 1)], 0.0);
    }

    #[test]
    fn missing_class_is_an_error() {
        assert!(matches!(recall_confusion(&[0, 0], &[0, 0], 3), Err(Error::MissingClass { class: 2 })));
    }

    #[test]
    fn rate_examples() {
        assert_eq!(confusion_rate(&DMatrix::zeros(3, 3)), 0.0);
        let swap = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert_abs_diff_eq!(confusion_rate(&swap), 1.0, epsilon = 1e-15);
        let mut one = DMatrix::zeros(10, 10);
        one[(3, 7)] = 0.5;
        assert_abs_diff_eq!(confusion_rate(&one), 0.5 / 10f64.sqrt(), epsilon = 1e-15);

        assert_eq!(error_rate(&[1, 2, 3], &[1, 2, 3]).unwrap(), 0.0);
        assert_eq!(error_rate(&[1, 2], &[2, 1]).unwrap(), 1.0);
        let truths = [0; 10];
        let preds = [1, 1, 1, 0, 0, 0, 0, 0, 0, 0];
        assert_abs_diff_eq!(error_rate(&preds, &truths).unwrap(), 0.3, epsilon = 1e-15);
        assert!(error_rate(&[], &[]).is_err());
    }

    proptest! {
        #[test]
        fn column_mass_is_class_error(pairs in prop::collection::vec((0usize..4, 0usize..4), 1..200)) {
            let mut preds: Vec<usize> = pairs.iter().map(|p| p.0).collect();
            let mut truths: Vec<usize> = pairs.iter().map(|p| p.1).collect();
            // Make sure every class is present.
            preds.extend(0..4);
            truths.extend(0..4);
            let c = recall_confusion(&preds, &truths, 4).unwrap();
            for q in 0..4 {
                let n = truths.iter().filter(|&&t| t == q).count() as f64;
                let wrong = preds.iter().zip(&truths).filter(|(p, t)| **t == q && **p != q).count() as f64;
                prop_assert!((c.column(q).sum() - wrong / n).abs() < 1e-12);
            }
            let r = confusion_rate(&c);
            prop_assert!((0.0..=1.0).contains(&r));
        }
    }
}
