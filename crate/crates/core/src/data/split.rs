use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::model::Dataset;
use crate::rng::Rng;

/// Index partition of a dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub selected: Vec<usize>,
    pub rest: Vec<usize>,
}

impl Split {
    pub fn apply(&self, data: &Dataset) -> (Dataset, Dataset) {
        (data.subset(&self.selected), data.subset(&self.rest))
    }
}

fn complement(n: usize, selected: &[usize]) -> Vec<usize> {
    let mut mask = vec![false; n];
    selected.iter().for_each(|&i| mask[i] = true);
    (0..n).filter(|&i| !mask[i]).collect()
}

/// Exactly `m_per_class` examples of every class, without replacement.
///
/// Classes come from the ground truth when present, else the observed labels.
pub fn stratified_indices(data: &Dataset, m_per_class: usize, rng: &mut Rng) -> Result<Split> {
    let labels = data.truth().unwrap_or(data.observed());
    let mut by_class = vec![Vec::new(); data.num_classes()];
    for (i, &y) in labels.iter().enumerate() {
        by_class[y].push(i);
    }
    let mut selected = Vec::with_capacity(m_per_class * by_class.len());
    for (class, members) in by_class.iter_mut().enumerate() {
        if members.len() < m_per_class {
            return Err(Error::InsufficientClass {
                class: class + 1,
                available: members.len(),
                requested: m_per_class,
            });
        }
        let (picked, _) = members.partial_shuffle(rng, m_per_class);
        selected.extend_from_slice(picked);
    }
    selected.sort_unstable();
    let rest = complement(data.len(), &selected);
    Ok(Split { selected, rest })
}

pub fn stratified_sample(data: &Dataset, m_per_class: usize, rng: &mut Rng) -> Result<(Dataset, Dataset)> {
    Ok(stratified_indices(data, m_per_class, rng)?.apply(data))
}

/// Uniform split with `ceil(fraction * n)` selected indices.
pub fn holdout_indices(n: usize, fraction: f64, rng: &mut Rng) -> Result<Split> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidInput(format!("holdout fraction must lie in (0, 1), got {fraction}")));
    }
    let k = ((fraction * n as f64).ceil() as usize).min(n);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let mut selected = idx[..k].to_vec();
    selected.sort_unstable();
    let rest = complement(n, &selected);
    Ok(Split { selected, rest })
}

pub fn holdout_split(data: &Dataset, fraction: f64, rng: &mut Rng) -> Result<(Dataset, Dataset)> {
    Ok(holdout_indices(data.len(), fraction, rng)?.apply(data))
}
