//! Unconfused ultraconservative training from noisy labels.
//!
//! For a class `p`, the region `A_p` holds the training points that the
//! current classifier assigns to `p` with a score gap of at least `alpha`.
//! The noisy per-label moments of that region, `Γᵖ`, are pushed through the
//! inverse confusion matrix; row `q` of `C⁻¹Γᵖ` estimates the moment of the
//! points of true class `q` that land in `A_p`. For `p != q` that vector is a
//! point of class `q` predicted as `p`, which is fed to an ultraconservative
//! update as if it were a mistaken training example.

use nalgebra::DMatrix;
use rand::Rng as _;

use crate::confusion::ConfusionMatrix;
use crate::error::{Error, Result};
use crate::model::{Dataset, Features, Row, WeightMatrix};
use crate::rng::{self, Rng};
use crate::ultra::{error_set_from_scores, taus, TauPolicy, TrainStats};

/// Floor applied to estimated class priors.
pub const PRIOR_FLOOR: f64 = 1e-6;
pub const DEFAULT_STOP_EPSILON: f64 = 1e-3;
const MAX_UPDATES_CAP: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelectionStrategy {
    /// Largest `‖z_pq‖`.
    #[default]
    Error,
    /// Largest `‖z_pq‖ / π̂_q`.
    Confusion,
    /// Uniform over pairs with a nonzero update vector.
    Random,
}

impl SelectionStrategy {
    pub const ALL: [SelectionStrategy; 3] =
        [SelectionStrategy::Error, SelectionStrategy::Confusion, SelectionStrategy::Random];

    pub fn name(self) -> &'static str {
        match self {
            SelectionStrategy::Error => "error",
            SelectionStrategy::Confusion => "confusion",
            SelectionStrategy::Random => "random",
        }
    }
}

impl std::str::FromStr for SelectionStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "error" => Ok(SelectionStrategy::Error),
            "confusion" => Ok(SelectionStrategy::Confusion),
            "random" => Ok(SelectionStrategy::Random),
            _ => Err(Error::InvalidInput(format!("unknown selection strategy `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UmaConfig {
    pub alpha: f64,
    /// Training stops once the selected update vector is shorter than this.
    pub stop_epsilon: f64,
    pub max_updates: usize,
    pub strategy: SelectionStrategy,
    pub policy: TauPolicy,
    pub seed: u64,
}

impl Default for UmaConfig {
    fn default() -> Self {
        UmaConfig {
            alpha: 0.0,
            stop_epsilon: DEFAULT_STOP_EPSILON,
            max_updates: default_max_updates(0.0),
            strategy: SelectionStrategy::Error,
            policy: TauPolicy::PerceptronSingle,
            seed: 0,
        }
    }
}

impl UmaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.stop_epsilon > 0.0) {
            return Err(Error::InvalidInput("stop_epsilon must be positive".into()));
        }
        if !(self.alpha >= 0.0) {
            return Err(Error::InvalidInput("alpha must be nonnegative".into()));
        }
        Ok(())
    }
}

/// `10 * ceil(2 / max(alpha, 0.01)^2)`, capped at 10 000.
pub fn default_max_updates(alpha: f64) -> usize {
    let a = alpha.max(0.01);
    let n = 10.0 * (2.0 / (a * a)).ceil();
    (n as usize).min(MAX_UPDATES_CAP)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateCandidate {
    pub p: usize,
    pub q: usize,
    pub z: Vec<f64>,
    pub norm: f64,
}

impl UpdateCandidate {
    pub fn new(p: usize, q: usize, z: Vec<f64>) -> Self {
        let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        UpdateCandidate { p, q, z, norm }
    }
}

/// Indices `i` with `<w_p, x_i> - <w_k, x_i> >= alpha` for every `k != p`.
pub fn region(w: &WeightMatrix, data: &Dataset, p: usize, alpha: f64) -> Vec<usize> {
    let mut scores = vec![0.0; w.num_classes()];
    (0..data.len())
        .filter(|&i| {
            w.scores_into(data.row(i), &mut scores);
            scores.iter().enumerate().all(|(k, &s)| k == p || scores[p] - s >= alpha)
        })
        .collect()
}

/// `Γᵖ`: row `k` is `(1/n) Σ_{i in region, y_i = k} x_i`, with `n` the full dataset size.
pub fn class_moments(data: &Dataset, region: &[usize]) -> DMatrix<f64> {
    let (q, d) = (data.num_classes(), data.dim());
    let mut rows = vec![vec![0.0; d]; q];
    for &i in region {
        data.row(i).add_scaled_to(1.0, &mut rows[data.observed()[i]]);
    }
    let n = data.len() as f64;
    DMatrix::from_fn(q, d, |k, j| rows[k][j] / n)
}

/// `Zᵖ = C⁻¹ Γᵖ`; row `q` is the candidate `z_pq`.
pub fn unconfused_updates(gamma: &DMatrix<f64>, c: &ConfusionMatrix) -> Result<DMatrix<f64>> {
    if gamma.nrows() != c.num_classes() {
        return Err(Error::DimensionMismatch { expected: c.num_classes(), got: gamma.nrows() });
    }
    let inv = c.inverse();
    Ok(DMatrix::from_fn(gamma.nrows(), gamma.ncols(), |q, j| {
        let mut acc = 0.0;
        for k in 0..gamma.nrows() {
            acc += inv[(q, k)] * gamma[(k, j)];
        }
        acc
    }))
}

/// All candidates `z_pq`, `p != q`, in lexicographic `(p, q)` order.
pub fn candidates(w: &WeightMatrix, data: &Dataset, c: &ConfusionMatrix, alpha: f64) -> Result<Vec<UpdateCandidate>> {
    let q = data.num_classes();
    let mut out = Vec::with_capacity(q * (q - 1));
    for p in 0..q {
        let gamma = class_moments(data, &region(w, data, p, alpha));
        let z = unconfused_updates(&gamma, c)?;
        for t in (0..q).filter(|&t| t != p) {
            out.push(UpdateCandidate::new(p, t, z.row(t).iter().copied().collect()));
        }
    }
    Ok(out)
}

/// `(1/n) C⁻¹ ŷ` where `ŷ` counts the observed labels, before clamping.
pub fn unclamped_priors(data: &Dataset, c: &ConfusionMatrix) -> Result<Vec<f64>> {
    let q = data.num_classes();
    if c.num_classes() != q {
        return Err(Error::DimensionMismatch { expected: q, got: c.num_classes() });
    }
    let n = data.len().max(1) as f64;
    let counts = data.observed_counts();
    let inv = c.inverse();
    Ok((0..q).map(|r| (0..q).map(|k| inv[(r, k)] * counts[k] as f64).sum::<f64>() / n).collect())
}

/// Estimated true-class proportions, clamped to `[PRIOR_FLOOR, 1]`.
pub fn estimate_priors(data: &Dataset, c: &ConfusionMatrix) -> Result<Vec<f64>> {
    Ok(unclamped_priors(data, c)?.into_iter().map(|v| v.clamp(PRIOR_FLOOR, 1.0)).collect())
}

/// Picks a pair according to `strategy`; `None` when every norm is zero.
pub fn select_pair(
    cands: &[UpdateCandidate],
    strategy: SelectionStrategy,
    priors: &[f64],
    rng: &mut Rng,
) -> Option<(usize, usize)> {
    select_index(cands, strategy, priors, rng, &vec![false; cands.len()]).map(|k| (cands[k].p, cands[k].q))
}

fn select_index(
    cands: &[UpdateCandidate],
    strategy: SelectionStrategy,
    priors: &[f64],
    rng: &mut Rng,
    excluded: &[bool],
) -> Option<usize> {
    let eligible = || cands.iter().enumerate().filter(|(k, c)| !excluded[*k] && c.norm > 0.0);
    let argmax_by = |key: &dyn Fn(&UpdateCandidate) -> f64| {
        let mut best: Option<(usize, f64)> = None;
        for (k, c) in eligible() {
            let v = key(c);
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((k, v));
            }
        }
        best.map(|(k, _)| k)
    };
    match strategy {
        SelectionStrategy::Error => argmax_by(&|c| c.norm),
        SelectionStrategy::Confusion => argmax_by(&|c| c.norm / priors[c.q].clamp(PRIOR_FLOOR, 1.0)),
        SelectionStrategy::Random => {
            let pool: Vec<usize> = eligible().map(|(k, _)| k).collect();
            if pool.is_empty() {
                None
            } else {
                Some(pool[rng.random_range(0..pool.len())])
            }
        }
    }
}

/// Runs UMA on the observed (noisy) labels of `data` with confusion `c`.
pub fn train_uma(data: &Dataset, c: &ConfusionMatrix, config: &UmaConfig) -> Result<(WeightMatrix, TrainStats)> {
    train_uma_with_observer(data, c, config, |_, _| {})
}

/// Like [`train_uma`], calling `observer(updates, &w)` on the initial weights
/// and after every update.
pub fn train_uma_with_observer(
    data: &Dataset,
    c: &ConfusionMatrix,
    config: &UmaConfig,
    mut observer: impl FnMut(usize, &WeightMatrix),
) -> Result<(WeightMatrix, TrainStats)> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidInput("cannot train on an empty dataset".into()));
    }
    let (n, d, nq) = (data.len(), data.dim(), data.num_classes());
    if c.num_classes() != nq {
        return Err(Error::DimensionMismatch { expected: nq, got: c.num_classes() });
    }
    let priors = estimate_priors(data, c)?;
    let inv = c.inverse();
    let mut rng = rng::stream(config.seed, &[0x0075_6d61]);
    let mut w = WeightMatrix::zeros(d, nq);
    let mut stats = TrainStats::default();
    observer(0, &w);

    // scores[i * nq + r] = <w_r, x_i>, maintained incrementally.
    let mut scores = vec![0.0; n * nq];
    let mut gamma = vec![0.0; nq * nq * d];
    let mut region_size = vec![0usize; nq];
    let mut cands: Vec<UpdateCandidate> = Vec::with_capacity(nq * (nq - 1));
    let mut proj = vec![0.0; n];
    let inv_n = 1.0 / n as f64;
    let dense = match data.features() {
        Features::Dense { data, .. } => Some(data.as_slice()),
        Features::Sparse { .. } => None,
    };

    while stats.updates < config.max_updates {
        stats.iterations += 1;

        gamma.iter_mut().for_each(|v| *v = 0.0);
        region_size.iter_mut().for_each(|v| *v = 0);
        let observed = data.observed();
        for (i, s) in scores.chunks_exact(nq).enumerate() {
            let y = observed[i];
            for_each_region(s, config.alpha, |p| {
                region_size[p] += 1;
                let g = &mut gamma[(p * nq + y) * d..(p * nq + y + 1) * d];
                match dense {
                    Some(x) => g.iter_mut().zip(&x[i * d..(i + 1) * d]).for_each(|(g, v)| *g += v),
                    None => data.row(i).add_scaled_to(1.0, g),
                }
            });
        }

        cands.clear();
        let mut zrow = vec![0.0; d];
        for p in 0..nq {
            for t in (0..nq).filter(|&t| t != p) {
                zrow.iter_mut().for_each(|v| *v = 0.0);
                if region_size[p] > 0 {
                    for k in 0..nq {
                        let a = inv[(t, k)];
                        if a != 0.0 {
                            let g = &gamma[(p * nq + k) * d..(p * nq + k + 1) * d];
                            zrow.iter_mut().zip(g).for_each(|(z, gv)| *z += a * gv);
                        }
                    }
                    zrow.iter_mut().for_each(|z| *z *= inv_n);
                }
                cands.push(UpdateCandidate::new(p, t, zrow.clone()));
            }
        }

        let mut excluded = vec![false; cands.len()];
        let mut applied = false;
        let mut wscores = vec![0.0; nq];
        while let Some(k) = select_index(&cands, config.strategy, &priors, &mut rng, &excluded) {
            let cand = &cands[k];
            stats.final_update_norm = cand.norm;
            if cand.norm < config.stop_epsilon {
                break;
            }
            let z = Row::Dense(&cand.z);
            w.scores_into(z, &mut wscores);
            let err = error_set_from_scores(&wscores, cand.q, config.alpha);
            if err.is_empty() {
                excluded[k] = true;
                continue;
            }
            let tau = taus(&err, cand.q, nq, config.policy, &wscores)?;
            match dense {
                Some(x) => proj
                    .iter_mut()
                    .zip(x.chunks_exact(d))
                    .for_each(|(pv, xi)| *pv = xi.iter().zip(&cand.z).map(|(a, b)| a * b).sum()),
                None => proj.iter_mut().enumerate().for_each(|(i, pv)| *pv = data.row(i).dot(&cand.z)),
            }
            for (r, &t) in tau.iter().enumerate().filter(|(_, t)| **t != 0.0) {
                w.add_scaled(r, t, z);
                for (s, pv) in scores.chunks_exact_mut(nq).zip(&proj) {
                    s[r] += t * pv;
                }
            }
            applied = true;
            break;
        }
        if !applied {
            stats.converged = true;
            break;
        }
        stats.updates += 1;
        observer(stats.updates, &w);
    }
    Ok((w, stats))
}

/// Calls `f(p)` for every class whose region contains a point with these scores.
#[inline]
fn for_each_region(scores: &[f64], alpha: f64, mut f: impl FnMut(usize)) {
    let (mut top, mut best, mut runner_up) = (0, scores[0], f64::NEG_INFINITY);
    for (k, &s) in scores.iter().enumerate().skip(1) {
        if s > best {
            runner_up = best;
            best = s;
            top = k;
        } else if s > runner_up {
            runner_up = s;
        }
    }
    if best - runner_up >= alpha {
        f(top);
    }
    // Any other class trails `top` by at least zero, so it can only qualify
    // on an exact tie with alpha = 0.
    if alpha <= 0.0 && runner_up == best {
        for (k, &s) in scores.iter().enumerate() {
            if k != top && s == best {
                f(k);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Features;
    use approx::assert_abs_diff_eq;

    fn ds(rows: &[Vec<f64>], labels: &[usize], q: usize) -> Dataset {
        let f = Features::from_rows(rows[0].len(), rows).unwrap();
        Dataset::new(f, labels.to_vec(), None, q).unwrap()
    }

    #[test]
    fn region_examples() {
        let data = ds(&[vec![1.0, 0.0], vec![-1.0, 0.0]], &[0, 1], 2);
        let zero = WeightMatrix::zeros(2, 2);
        for p in 0..2 {
            assert_eq!(region(&zero, &data, p, 0.0), vec![0, 1]);
            assert!(region(&zero, &data, p, 0.5).is_empty());
        }
        let w = WeightMatrix::from_prototypes(&[vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
        assert_eq!(region(&w, &data, 0, 0.0), vec![0]);
    }

    #[test]
    fn moments_divide_by_full_size() {
        let data = ds(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[0, 1], 2);
        let g = class_moments(&data, &[0, 1]);
        assert_eq!(g, DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.5]));
        assert_eq!(class_moments(&data, &[]), DMatrix::zeros(2, 2));

        let data = ds(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![3.0, 3.0], vec![3.0, 3.0]], &[2, 2, 0, 1], 3);
        let g = class_moments(&data, &[0, 1]);
        assert_eq!(g, DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 0.0, 0.0, 0.25, 0.25]));
    }

    #[test]
    fn unconfused_updates_examples() {
        let gamma = DMatrix::from_row_slice(2, 3, &[0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
        assert_eq!(unconfused_updates(&gamma, &ConfusionMatrix::identity(2)).unwrap(), gamma);

        let mu = [0.3, -0.7];
        let c = ConfusionMatrix::from_rows(&[vec![0.9, 0.0], vec![0.1, 1.0]]).unwrap();
        let gamma = DMatrix::from_row_slice(2, 2, &[0.9 * mu[0], 0.9 * mu[1], 0.1 * mu[0], 0.1 * mu[1]]);
        let z = unconfused_updates(&gamma, &c).unwrap();
        assert_abs_diff_eq!(z[(0, 0)], mu[0], epsilon = 1e-12);
        assert_abs_diff_eq!(z[(0, 1)], mu[1], epsilon = 1e-12);
        assert_abs_diff_eq!(z[(1, 0)], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn priors_examples() {
        let rows: Vec<Vec<f64>> = (0..100).map(|_| vec![1.0]).collect();
        let labels: Vec<usize> = (0..100).map(|i| usize::from(i >= 60)).collect();
        let data = ds(&rows, &labels, 2);
        let pi = estimate_priors(&data, &ConfusionMatrix::identity(2)).unwrap();
        assert_eq!(pi, vec![0.6, 0.4]);
        let c = ConfusionMatrix::from_rows(&[vec![0.9, 0.2], vec![0.1, 0.8]]).unwrap();
        let pi = estimate_priors(&data, &c).unwrap();
        assert_abs_diff_eq!(pi[0], 4.0 / 7.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pi[1], 3.0 / 7.0, epsilon = 1e-12);
    }

    #[test]
    fn priors_are_floored() {
        let rows: Vec<Vec<f64>> = (0..10).map(|_| vec![1.0]).collect();
        let data = ds(&rows, &[0; 10], 2);
        let c = ConfusionMatrix::from_rows(&[vec![0.9, 0.2], vec![0.1, 0.8]]).unwrap();
        let raw = unclamped_priors(&data, &c).unwrap();
        assert!(raw[1] < 0.0);
        assert_abs_diff_eq!(raw.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert_eq!(estimate_priors(&data, &c).unwrap()[1], PRIOR_FLOOR);
    }

    #[test]
    fn selection_examples() {
        let mut rng = rng::seeded(1);
        let cands = vec![UpdateCandidate::new(0, 1, vec![0.4, 0.0]), UpdateCandidate::new(1, 0, vec![0.0, 0.3])];
        assert_eq!(select_pair(&cands, SelectionStrategy::Error, &[0.5, 0.5], &mut rng), Some((0, 1)));
        assert_eq!(select_pair(&cands, SelectionStrategy::Confusion, &[0.8, 0.2], &mut rng), Some((0, 1)));
        assert_eq!(select_pair(&cands, SelectionStrategy::Confusion, &[0.1, 0.9], &mut rng), Some((1, 0)));

        let zeros = vec![UpdateCandidate::new(0, 1, vec![0.0]), UpdateCandidate::new(1, 0, vec![0.0])];
        for s in SelectionStrategy::ALL {
            assert_eq!(select_pair(&zeros, s, &[0.5, 0.5], &mut rng), None);
        }
    }

    #[test]
    fn selection_ties_go_to_first_pair() {
        let mut rng = rng::seeded(1);
        let cands = vec![
            UpdateCandidate::new(0, 1, vec![0.5]),
            UpdateCandidate::new(0, 2, vec![-0.5]),
            UpdateCandidate::new(1, 0, vec![0.5]),
        ];
        assert_eq!(select_pair(&cands, SelectionStrategy::Error, &[1.0; 3], &mut rng), Some((0, 1)));
    }

    #[test]
    fn random_selection_skips_zero_vectors() {
        let mut rng = rng::seeded(3);
        let cands = vec![
            UpdateCandidate::new(0, 1, vec![0.0]),
            UpdateCandidate::new(1, 0, vec![0.2]),
            UpdateCandidate::new(0, 2, vec![0.0]),
        ];
        for _ in 0..50 {
            assert_eq!(select_pair(&cands, SelectionStrategy::Random, &[0.3; 3], &mut rng), Some((1, 0)));
        }
    }

    #[test]
    fn region_helper_matches_brute_force() {
        let cases: [(&[f64], f64); 5] = [
            (&[0.0, 0.0, 0.0], 0.0),
            (&[0.0, 0.0, 0.0], 0.1),
            (&[1.0, 0.5, 1.0], 0.0),
            (&[1.0, 0.5, 0.2], 0.3),
            (&[1.0, 0.5, 0.2], 0.6),
        ];
        for (s, alpha) in cases {
            let mut fast = Vec::new();
            for_each_region(s, alpha, |p| fast.push(p));
            fast.sort();
            let brute: Vec<usize> =
                (0..s.len()).filter(|&p| (0..s.len()).all(|k| k == p || s[p] - s[k] >= alpha)).collect();
            assert_eq!(fast, brute, "{s:?} {alpha}");
        }
    }

    #[test]
    fn identity_confusion_candidates_equal_moments() {
        let data = ds(&[vec![0.6, 0.8], vec![-0.8, 0.6], vec![0.0, -1.0], vec![1.0, 0.0]], &[0, 1, 2, 1], 3);
        let w = WeightMatrix::from_prototypes(&[vec![1.0, 0.2], vec![-0.3, 1.0], vec![0.1, -1.0]]).unwrap();
        let c = ConfusionMatrix::identity(3);
        for cand in candidates(&w, &data, &c, 0.0).unwrap() {
            let g = class_moments(&data, &region(&w, &data, cand.p, 0.0));
            let row: Vec<f64> = g.row(cand.q).iter().copied().collect();
            assert_eq!(cand.z, row);
        }
    }

    #[test]
    fn config_validation() {
        let cfg = UmaConfig { stop_epsilon: 0.0, ..UmaConfig::default() };
        assert!(cfg.validate().is_err());
        assert_eq!(default_max_updates(0.0), 10_000);
        assert_eq!(default_max_updates(0.1), 2_000);
    }
}
