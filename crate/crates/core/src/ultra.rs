//! Ultraconservative additive training on trusted labels.
//!
//! Each visited example `(x, y)` whose error set is nonempty triggers the
//! update `w_r += τ_r x` with `τ_y = 1`, `τ_r ≤ 0` on the error set, zero
//! elsewhere and `Σ τ = 0`.

use crate::error::{Error, Result};
use crate::model::{Dataset, Row, WeightMatrix};

pub const DEFAULT_MAX_EPOCHS: usize = 1000;

/// How the negative step mass is spread over the error set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TauPolicy {
    /// `-1` on the highest-scoring class of the error set (the Perceptron).
    #[default]
    PerceptronSingle,
    /// `-1/|E|` on every member of the error set.
    UniformSplit,
}

impl std::str::FromStr for TauPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "perceptron" | "perceptron_single" => Ok(TauPolicy::PerceptronSingle),
            "uniform" | "uniform_split" => Ok(TauPolicy::UniformSplit),
            _ => Err(Error::InvalidInput(format!("unknown tau policy `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrainStats {
    pub updates: usize,
    /// Epochs for the online trainer, selection rounds for UMA.
    pub iterations: usize,
    pub final_update_norm: f64,
    pub converged: bool,
}

/// Classes `r != y` with `<w_r, x> - <w_y, x> >= alpha`, in increasing order.
pub fn error_set(w: &WeightMatrix, x: Row<'_>, y: usize, alpha: f64) -> Vec<usize> {
    error_set_from_scores(&w.scores(x), y, alpha)
}

pub fn error_set_from_scores(scores: &[f64], y: usize, alpha: f64) -> Vec<usize> {
    let sy = scores[y];
    scores.iter().enumerate().filter(|&(r, &s)| r != y && s - sy >= alpha).map(|(r, _)| r).collect()
}

/// Step sizes for an update on class `y` against `error`.
///
/// `scores` are the current `<w_r, x>`; only the perceptron policy reads them.
pub fn taus(error: &[usize], y: usize, num_classes: usize, policy: TauPolicy, scores: &[f64]) -> Result<Vec<f64>> {
    if error.is_empty() {
        return Err(Error::InvalidInput("step sizes requested for an empty error set".into()));
    }
    if error.contains(&y) || y >= num_classes || error.iter().any(|&r| r >= num_classes) {
        return Err(Error::InvalidInput("error set must exclude the target class".into()));
    }
    let mut tau = vec![0.0; num_classes];
    tau[y] = 1.0;
    match policy {
        TauPolicy::PerceptronSingle => {
            let mut best = error[0];
            for &r in &error[1..] {
                if scores[r] > scores[best] || scores[r] == scores[best] && r < best {
                    best = r;
                }
            }
            tau[best] = -1.0;
        }
        TauPolicy::UniformSplit => {
            let share = -1.0 / error.len() as f64;
            for &r in error {
                tau[r] = share;
            }
        }
    }
    Ok(tau)
}

/// `w_r += τ_r x` for every nonzero step.
pub fn apply_update(w: &mut WeightMatrix, tau: &[f64], x: Row<'_>) {
    for (r, &t) in tau.iter().enumerate() {
        if t != 0.0 {
            w.add_scaled(r, t, x);
        }
    }
}

/// Trains on `data.observed()` in dataset order, starting from `W = 0`.
///
/// Stops after an epoch without updates (`converged = true`) or after
/// `max_epochs` epochs.
pub fn train_ultraconservative(
    data: &Dataset,
    policy: TauPolicy,
    alpha: f64,
    max_epochs: usize,
) -> Result<(WeightMatrix, TrainStats)> {
    if data.is_empty() {
        return Err(Error::InvalidInput("cannot train on an empty dataset".into()));
    }
    let q = data.num_classes();
    let mut w = WeightMatrix::zeros(data.dim(), q);
    let mut stats = TrainStats::default();
    let mut scores = vec![0.0; q];
    for _ in 0..max_epochs {
        stats.iterations += 1;
        let mut epoch_updates = 0;
        for (i, &y) in data.observed().iter().enumerate() {
            let x = data.row(i);
            w.scores_into(x, &mut scores);
            let err = error_set_from_scores(&scores, y, alpha);
            if err.is_empty() {
                continue;
            }
            let tau = taus(&err, y, q, policy, &scores)?;
            apply_update(&mut w, &tau, x);
            epoch_updates += 1;
            stats.final_update_norm = x.norm_sq().sqrt();
        }
        stats.updates += epoch_updates;
        if epoch_updates == 0 {
            stats.converged = true;
            break;
        }
    }
    Ok((w, stats))
}
