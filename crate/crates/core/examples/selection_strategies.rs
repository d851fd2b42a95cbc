//! Test error of UMA as training proceeds, for each way of choosing the
//! class pair to update.

use uma::experiment::{run_strategy_study, ExperimentConfig, ExperimentKind, ERROR_RATE};

fn main() -> uma::Result<()> {
    let mut config = ExperimentConfig::for_kind(ExperimentKind::StrategyStudy);
    config.experiment.repeats = 3;
    config.data.n_test = 2000;
    config.study.log_every = 50;
    config.study.noise_index = 6;
    let report = run_strategy_study(&config)?;

    println!("updates  error   confusion  random");
    for row in report.rows.iter().step_by(20).chain(report.rows.last()) {
        let mean = |name| row.series(name, ERROR_RATE).map_or(f64::NAN, |s| s.mean());
        println!("{:>7}  {:.4}  {:.4}     {:.4}", row.index, mean("error"), mean("confusion"), mean("random"));
    }
    Ok(())
}
