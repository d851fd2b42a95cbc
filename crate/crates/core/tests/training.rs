use proptest::prelude::*;

use uma::data::generate_synthetic;
use uma::experiment::{sample_family, ExperimentConfig, ExperimentKind, CONFUSION_RATE};
use uma::noise::{confusion_at, corrupt_labels};
use uma::uma::train_uma_with_observer;
use uma::{
    dataset_margin, train_ultraconservative, train_uma, ConfusionMatrix, SelectionStrategy, TauPolicy, UmaConfig,
    WeightMatrix,
};

fn training_error(w: &WeightMatrix, data: &uma::Dataset) -> usize {
    let preds = w.predict_all(data.features()).unwrap();
    preds.iter().zip(data.truth().unwrap()).filter(|(p, t)| p != t).count()
}

#[test]
fn online_learner_separates_synthetic_data() {
    for policy in [TauPolicy::PerceptronSingle, TauPolicy::UniformSplit] {
        for seed in 0..5 {
            let (data, w_star) = generate_synthetic(10, 1000, 0.025, seed).unwrap();
            let (w, stats) = train_ultraconservative(&data, policy, 0.0, 200).unwrap();
            assert!(stats.converged, "{policy:?} seed {seed}");
            assert_eq!(training_error(&w, &data), 0);
            let theta = dataset_margin(&w_star.normalized(), data.features(), data.observed()).unwrap();
            assert!(stats.updates as f64 <= 2.0 / (theta * theta));
        }
    }
}

#[test]
fn uma_without_noise_fits_the_training_set() {
    for seed in 0..5 {
        let (data, _) = generate_synthetic(10, 1000, 0.025, seed).unwrap();
        let cfg = UmaConfig { seed, ..UmaConfig::default() };
        let (w, stats) = train_uma(&data, &ConfusionMatrix::identity(10), &cfg).unwrap();
        assert!(stats.updates < cfg.max_updates, "seed {seed} hit the update cap");
        assert_eq!(training_error(&w, &data), 0, "seed {seed}");
    }
}

#[test]
fn uma_update_count_scales_with_inverse_squared_margin() {
    for seed in 0..10 {
        let (clean, w_star) = generate_synthetic(10, 1000, 0.025, seed).unwrap();
        let theta = dataset_margin(&w_star.normalized(), clean.features(), clean.observed()).unwrap();
        let mut r = uma::rng::seeded(seed);
        let c = confusion_at(&sample_family(10, &[10], &mut r).unwrap(), 10).unwrap();
        let noisy = clean.with_observed(corrupt_labels(clean.truth().unwrap(), &c, &mut r)).unwrap();
        let (_, stats) = train_uma(&noisy, &c, &UmaConfig { seed, ..UmaConfig::default() }).unwrap();
        assert!(stats.updates as f64 <= 8.0 / (theta * theta), "seed {seed}: {} updates", stats.updates);
    }
}

#[test]
fn uma_beats_the_online_learner_at_the_reference_noise_level() {
    let mut c = ExperimentConfig::for_kind(ExperimentKind::SweepNoise);
    c.experiment.noise_indices = vec![10];
    let report = uma::experiment::run(&c).unwrap();
    let row = &report.rows[0];
    let with_c = row.series("uma", CONFUSION_RATE).unwrap().mean();
    let baseline = row.series("perceptron", CONFUSION_RATE).unwrap().mean();
    assert!(with_c < baseline, "{with_c} vs {baseline}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn prototypes_stay_balanced_and_runs_repeat(
        seed in 0u64..1000,
        q in 2usize..6,
        level in 1u32..12,
        strategy in prop::sample::select(SelectionStrategy::ALL.to_vec()),
        policy in prop::sample::select(vec![TauPolicy::PerceptronSingle, TauPolicy::UniformSplit]),
    ) {
        let (clean, _) = generate_synthetic(q, 200, 0.02, seed).unwrap();
        let mut r = uma::rng::seeded(seed);
        let c = confusion_at(&sample_family(q, &[level], &mut r).unwrap(), level).unwrap();
        let noisy = clean.with_observed(corrupt_labels(clean.truth().unwrap(), &c, &mut r)).unwrap();
        let cfg = UmaConfig { strategy, policy, seed, max_updates: 300, ..UmaConfig::default() };
        let mut worst: f64 = 0.0;
        let (w, stats) = train_uma_with_observer(&noisy, &c, &cfg, |_, w| {
            worst = w.prototype_sum().iter().fold(worst, |m, v| m.max(v.abs()));
        }).unwrap();
        prop_assert!(worst < 1e-9);
        prop_assert!(stats.updates <= cfg.max_updates);
        let (again, stats_again) = train_uma(&noisy, &c, &cfg).unwrap();
        prop_assert_eq!(w, again);
        prop_assert_eq!(stats, stats_again);
    }
}
