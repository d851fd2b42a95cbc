//! Online ultraconservative training on separable data, compared with the
//! 2/θ² mistake bound.

use uma::data::generate_synthetic;
use uma::{dataset_margin, train_ultraconservative, TauPolicy};

fn main() -> uma::Result<()> {
    println!("seed  margin   updates  bound");
    for seed in 0..8 {
        let (data, w_star) = generate_synthetic(10, 1000, 0.025, seed)?;
        let theta = dataset_margin(&w_star.normalized(), data.features(), data.observed())?;
        for policy in [TauPolicy::PerceptronSingle, TauPolicy::UniformSplit] {
            let (_, stats) = train_ultraconservative(&data, policy, 0.0, 1000)?;
            println!(
                "{seed:>4}  {theta:.4}  {:>7}  {:>6.0}  {policy:?}{}",
                stats.updates,
                2.0 / (theta * theta),
                if stats.converged { "" } else { " (not converged)" }
            );
        }
    }
    Ok(())
}
