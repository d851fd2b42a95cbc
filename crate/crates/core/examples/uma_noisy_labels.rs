//! Labels corrupted by a known confusion matrix: UMA given that matrix
//! against the online learner run directly on the noisy labels.

use uma::data::{generate, sample_from_concept, SyntheticConfig};
use uma::experiment::{evaluate, sample_family};
use uma::noise::{confusion_at, corrupt_labels};
use uma::{train_ultraconservative, train_uma, TauPolicy, UmaConfig};

fn main() -> uma::Result<()> {
    let mut rng = uma::rng::seeded(42);
    let (train, w_star) = generate(&SyntheticConfig::default(), &mut rng)?;
    let test = sample_from_concept(&w_star, 10_000, 0.025, &mut rng)?;
    let family = sample_family(10, &[2, 6, 10], &mut rng)?;

    for level in [2, 6, 10] {
        let c = confusion_at(&family, level)?;
        let noisy = corrupt_labels(train.truth_or_err()?, &c, &mut rng);
        let flipped = noisy.iter().zip(train.observed()).filter(|(a, b)| a != b).count();
        let noisy = train.with_observed(noisy)?;

        let (w, stats) = train_uma(&noisy, &c, &UmaConfig { seed: 7, ..UmaConfig::default() })?;
        let with_c = evaluate(&w, &test)?;
        let (w, _) = train_ultraconservative(&noisy, TauPolicy::PerceptronSingle, 0.0, 100)?;
        let online = evaluate(&w, &test)?;
        println!(
            "C_{level:<2} flipped {flipped:>3}/1000  uma: err {:.3} conf {:.3} ({} updates)  online: err {:.3} conf {:.3}",
            with_c.error_rate, with_c.confusion_rate, stats.updates, online.error_rate, online.confusion_rate
        );
    }
    Ok(())
}
