//! Data that no linear classifier separates becomes separable after a
//! Gaussian kernel projection.

use uma::data::holdout_split;
use uma::experiment::evaluate;
use uma::kpca::{kpca_fit, median_bandwidth};
use uma::{train_ultraconservative, Dataset, Features, TauPolicy};

/// Two concentric rings, inner class 0 and outer class 1.
fn rings(n: usize) -> uma::Result<Dataset> {
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let angle = i as f64 * 2.399_963;
        let (radius, label) = if i % 2 == 0 { (1.0, 0) } else { (2.5, 1) };
        rows.push(vec![radius * angle.cos(), radius * angle.sin()]);
        labels.push(label);
    }
    Dataset::clean(Features::from_rows(2, &rows)?, labels, 2)
}

fn main() -> uma::Result<()> {
    let mut rng = uma::rng::seeded(3);
    let (test, train) = holdout_split(&rings(600)?, 0.3, &mut rng)?;

    let (w, stats) = train_ultraconservative(&train, TauPolicy::PerceptronSingle, 0.0, 50)?;
    println!("raw inputs:  test error {:.3}, converged {}", evaluate(&w, &test)?.error_rate, stats.converged);

    let sigma = median_bandwidth(train.features(), 1000, &mut rng)?;
    let proj = kpca_fit(train.features(), sigma, 10)?;
    let mut tr = proj.transform_features(train.features())?;
    let mut te = proj.transform_features(test.features())?;
    tr.normalize_rows();
    te.normalize_rows();
    let (train, test) = (train.with_features(tr)?, test.with_features(te)?);
    let (w, stats) = train_ultraconservative(&train, TauPolicy::PerceptronSingle, 0.0, 50)?;
    println!(
        "10 kernel axes (sigma {sigma:.2}): test error {:.3}, converged {}",
        evaluate(&w, &test)?.error_rate,
        stats.converged
    );
    Ok(())
}
