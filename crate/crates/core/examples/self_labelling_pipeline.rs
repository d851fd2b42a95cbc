//! A few labelled points per class train a rough classifier, which labels
//! the rest; UMA then learns from those labels and an estimate of the
//! rough classifier's confusion.
//!
//! Pass a TOML config path to use other data, e.g. `configs/digits.toml`.

use uma::experiment::{pipeline_once, prepare_data, ExperimentConfig, ExperimentKind};

fn main() -> uma::Result<()> {
    let mut config = match std::env::args().nth(1) {
        Some(path) => ExperimentConfig::load(path)?,
        None => {
            let mut c = ExperimentConfig::for_kind(ExperimentKind::Pipeline);
            c.data.preset = uma::experiment::Preset::Imbalanced;
            c.data.dim = 64;
            c.data.n_train = 3800;
            c.data.n_test = 1800;
            c.data.theta = 0.01;
            c.data.imbalance = 1.0;
            c.data.spread = 2.25;
            c
        }
    };
    config.experiment.kind = ExperimentKind::Pipeline;
    config.apply_preset_defaults();
    config.validate()?;

    let mut rng = uma::rng::seeded(config.experiment.seed);
    let prepared = prepare_data(&config, &mut rng)?;
    let run = pipeline_once(&config, &prepared, &mut rng)?;
    println!(
        "{} training points, confusion estimated on {}{}",
        prepared.train.len(),
        run.conf_size,
        if run.retried { " (after a retry)" } else { "" }
    );
    for (name, eval, updates) in &run.models {
        println!(
            "{name:<7} test error {:.4}  confusion rate {:.4}  updates {updates}",
            eval.error_rate, eval.confusion_rate
        );
    }
    Ok(())
}
