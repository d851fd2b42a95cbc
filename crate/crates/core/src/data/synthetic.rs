use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{argmax, Dataset, Features, WeightMatrix};
use crate::rng::{self, Rng};

/// Below this acceptance rate the margin filter is considered infeasible.
const MIN_ACCEPTANCE_RATE: f64 = 1e-4;
const ACCEPTANCE_CHECK_AFTER: usize = 100_000;
const MAX_CONCEPT_DRAWS: usize = 100_000;
/// Concepts on which the margin filter is infeasible before giving up.
const MAX_INFEASIBLE_CONCEPTS: usize = 20;
const PILOT_SIZE: usize = 1000;

/// Points uniform on the unit sphere of `R^dim`, labelled by a random linear
/// concept whose prototypes are also uniform on the sphere, with every point
/// closer than `theta` to a decision boundary rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub num_classes: usize,
    pub n: usize,
    pub theta: f64,
    pub dim: usize,
    /// The concept is redrawn until every class has at least this many points.
    pub min_class_count: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig { num_classes: 10, n: 1000, theta: 0.025, dim: 2, min_class_count: 5 }
    }
}

pub fn unit_vector(dim: usize, rng: &mut Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn unit_vector_2d(rng: &mut Rng) -> Vec<f64> {
    let a = rng.random::<f64>() * std::f64::consts::TAU;
    vec![a.cos(), a.sin()]
}

fn draw_unit(dim: usize, rng: &mut Rng) -> Vec<f64> {
    if dim == 2 {
        unit_vector_2d(rng)
    } else {
        unit_vector(dim, rng)
    }
}

/// Label and margin of `x` under `w`.
pub(crate) fn label_and_margin(w: &WeightMatrix, x: &[f64], buf: &mut [f64]) -> (usize, f64) {
    w.scores_into(crate::model::Row::Dense(x), buf);
    let y = argmax(buf);
    let gap = buf.iter().enumerate().filter(|&(k, _)| k != y).map(|(_, &s)| buf[y] - s).fold(f64::INFINITY, f64::min);
    (y, gap)
}

/// Draws `n` points from the margin-filtered distribution of concept `w_star`.
pub fn sample_from_concept(w_star: &WeightMatrix, n: usize, theta: f64, rng: &mut Rng) -> Result<Dataset> {
    let dim = w_star.dim();
    let mut data = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    let mut buf = vec![0.0; w_star.num_classes()];
    let mut attempts = 0usize;
    while labels.len() < n {
        attempts += 1;
        let x = draw_unit(dim, rng);
        let (y, gap) = label_and_margin(w_star, &x, &mut buf);
        if gap >= theta {
            data.extend_from_slice(&x);
            labels.push(y);
        }
        if attempts >= ACCEPTANCE_CHECK_AFTER && (labels.len() as f64) < MIN_ACCEPTANCE_RATE * attempts as f64 {
            return Err(Error::Generation(format!("margin {theta} accepted {} of {attempts} draws", labels.len())));
        }
    }
    Dataset::clean(Features::Dense { dim, data }, labels, w_star.num_classes())
}

/// Generates a clean dataset and its reference separator `W*` (unit Frobenius norm).
pub fn generate(config: &SyntheticConfig, rng: &mut Rng) -> Result<(Dataset, WeightMatrix)> {
    if config.num_classes < 2 {
        return Err(Error::InvalidInput("need at least two classes".into()));
    }
    if config.dim < 1 || !(config.theta >= 0.0) {
        return Err(Error::InvalidInput("dimension must be positive and theta nonnegative".into()));
    }
    let need = config.min_class_count.min(config.n / config.num_classes);
    let mut infeasible = 0;
    for _ in 0..MAX_CONCEPT_DRAWS {
        let protos: Vec<Vec<f64>> = (0..config.num_classes).map(|_| draw_unit(config.dim, rng)).collect();
        let w_star = WeightMatrix::from_prototypes(&protos)?.normalized();
        // Large requests are screened on a small pilot sample first.
        let sizes = if config.n > PILOT_SIZE { vec![PILOT_SIZE, config.n] } else { vec![config.n] };
        for (k, &size) in sizes.iter().enumerate() {
            let data = match sample_from_concept(&w_star, size, config.theta, rng) {
                Ok(d) => d,
                Err(e) => {
                    infeasible += 1;
                    if infeasible >= MAX_INFEASIBLE_CONCEPTS {
                        return Err(e);
                    }
                    break;
                }
            };
            let want = need.min(size / config.num_classes);
            if data.observed_counts().iter().any(|&c| c < want) {
                break;
            }
            if k + 1 == sizes.len() {
                return Ok((data, w_star));
            }
        }
    }
    Err(Error::Generation(format!("no concept gave every class {need} points in {MAX_CONCEPT_DRAWS} draws")))
}

/// 2-D convenience wrapper seeded directly.
pub fn generate_synthetic(num_classes: usize, n: usize, theta: f64, seed: u64) -> Result<(Dataset, WeightMatrix)> {
    let config = SyntheticConfig { num_classes, n, theta, ..SyntheticConfig::default() };
    generate(&config, &mut rng::seeded(seed))
}

/// Class-imbalanced, linearly separable data: class proportions decay
/// geometrically from the first to the last class by `imbalance`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImbalancedConfig {
    pub num_classes: usize,
    pub n: usize,
    pub dim: usize,
    pub theta: f64,
    /// Ratio between the largest and the smallest class.
    pub imbalance: f64,
    /// Standard deviation of the Gaussian jitter around each prototype.
    pub spread: f64,
}

impl Default for ImbalancedConfig {
    fn default() -> Self {
        ImbalancedConfig { num_classes: 9, n: 2000, dim: 20, theta: 0.01, imbalance: 8.0, spread: 0.6 }
    }
}

impl ImbalancedConfig {
    pub fn class_proportions(&self) -> Vec<f64> {
        let q = self.num_classes;
        let raw: Vec<f64> = (0..q).map(|k| self.imbalance.powf(-(k as f64) / (q.max(2) - 1) as f64)).collect();
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / s).collect()
    }
}

pub fn generate_imbalanced(config: &ImbalancedConfig, rng: &mut Rng) -> Result<(Dataset, WeightMatrix)> {
    if config.num_classes < 2 || config.dim < 2 || !(config.imbalance >= 1.0) {
        return Err(Error::InvalidInput("imbalanced generator needs Q >= 2, d >= 2, ratio >= 1".into()));
    }
    let protos: Vec<Vec<f64>> = (0..config.num_classes).map(|_| unit_vector(config.dim, rng)).collect();
    let w_star = WeightMatrix::from_prototypes(&protos)?.normalized();
    let props = config.class_proportions();
    let mut counts: Vec<usize> = props.iter().map(|p| (p * config.n as f64).floor() as usize).collect();
    let short = config.n - counts.iter().sum::<usize>();
    counts.iter_mut().take(short).for_each(|c| *c += 1);

    let mut data = Vec::with_capacity(config.n * config.dim);
    let mut labels = Vec::with_capacity(config.n);
    let mut buf = vec![0.0; config.num_classes];
    for (k, &want) in counts.iter().enumerate() {
        let mut got = 0;
        let mut attempts = 0usize;
        while got < want {
            attempts += 1;
            let mut x: Vec<f64> = protos[k]
                .iter()
                .map(|&c| {
                    let g: f64 = StandardNormal.sample(rng);
                    c + config.spread * g / (config.dim as f64).sqrt()
                })
                .collect();
            let nrm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            x.iter_mut().for_each(|v| *v /= nrm);
            let (y, gap) = label_and_margin(&w_star, &x, &mut buf);
            if y == k && gap >= config.theta {
                data.extend_from_slice(&x);
                labels.push(k);
                got += 1;
            }
            if attempts >= ACCEPTANCE_CHECK_AFTER && (got as f64) < MIN_ACCEPTANCE_RATE * attempts as f64 {
                return Err(Error::Generation(format!("class {} rejected almost every draw", k + 1)));
            }
        }
    }
    let ds = Dataset::clean(Features::Dense { dim: config.dim, data }, labels, config.num_classes)?;
    Ok((ds, w_star))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::dataset_margin;

    #[test]
    fn points_are_unit_norm_and_margin_holds() {
        let (d, w) = generate_synthetic(10, 1000, 0.025, 17).unwrap();
        assert_eq!(d.len(), 1000);
        assert!((w.frobenius_norm() - 1.0).abs() < 1e-12);
        for x in d.features().rows() {
            assert!((x.norm_sq().sqrt() - 1.0).abs() < 1e-12);
        }
        assert!(dataset_margin(&w, d.features(), d.observed()).unwrap() >= 0.025);
        assert_eq!(w.predict_all(d.features()).unwrap(), d.observed());
    }

    #[test]
    fn zero_margin_keeps_everything() {
        let (d, _) = generate_synthetic(3, 200, 0.0, 1).unwrap();
        assert_eq!(d.len(), 200);
    }

    #[test]
    fn impossible_margin_fails() {
        // Two-class margins under a unit-Frobenius W* never exceed √2.
        assert!(matches!(generate_synthetic(2, 10, 1.5, 3), Err(Error::Generation(_))));
    }

    #[test]
    fn higher_dimensional_variant() {
        let cfg = SyntheticConfig { num_classes: 4, n: 300, theta: 0.01, dim: 5, min_class_count: 5 };
        let (d, w) = generate(&cfg, &mut rng::seeded(2)).unwrap();
        assert_eq!(d.dim(), 5);
        assert!(dataset_margin(&w, d.features(), d.observed()).unwrap() >= 0.01);
    }

    #[test]
    fn imbalanced_proportions() {
        let cfg = ImbalancedConfig { n: 1800, ..ImbalancedConfig::default() };
        let (d, w) = generate_imbalanced(&cfg, &mut rng::seeded(8)).unwrap();
        let counts = d.observed_counts();
        assert_eq!(counts.iter().sum::<usize>(), 1800);
        let ratio = counts[0] as f64 / counts[8] as f64;
        assert!((ratio - 8.0).abs() < 0.5, "{counts:?}");
        assert!(dataset_margin(&w, d.features(), d.observed()).unwrap() >= cfg.theta);
    }
}
