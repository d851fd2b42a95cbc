use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::ultra::TauPolicy;
use crate::uma::{default_max_updates, SelectionStrategy, UmaConfig, DEFAULT_STOP_EPSILON};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    #[default]
    SweepNoise,
    SweepApprox,
    Pipeline,
    StrategyStudy,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::SweepNoise => "sweep-noise",
            ExperimentKind::SweepApprox => "sweep-approx",
            ExperimentKind::Pipeline => "pipeline",
            ExperimentKind::StrategyStudy => "strategy-study",
        }
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Self::SweepNoise, Self::SweepApprox, Self::Pipeline, Self::StrategyStudy]
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment kind `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// 2-D points on the unit circle with a margin.
    #[default]
    Synthetic,
    /// Class-imbalanced separable data in higher dimension.
    Imbalanced,
    /// Dense train/test files, kernel projection to 640 axes.
    Digits,
    /// One dense file split 15000/5000, label first, kernel projection to 1600 axes.
    Letter,
    /// Arbitrary files described by the `[data]` section.
    Files,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FileFormat {
    #[default]
    Dense,
    Sparse,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSettings {
    pub preset: Preset,
    pub num_classes: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub theta: f64,
    pub dim: usize,
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub format: FileFormat,
    pub delimiter: String,
    /// `first`, `last`, a 1-based position or `-k` from the end.
    pub label_column: String,
    /// With a single file: the first `split_at` lines train, the rest test.
    pub split_at: Option<usize>,
    /// With a single file and no `split_at`: random test fraction.
    pub test_fraction: f64,
    /// Scale every feature row to unit norm after loading.
    pub normalize: bool,
    /// Imbalance ratio for the imbalanced preset.
    pub imbalance: f64,
    /// Cluster spread for the imbalanced preset.
    pub spread: f64,
}

impl Default for DataSettings {
    fn default() -> Self {
        DataSettings {
            preset: Preset::Synthetic,
            num_classes: 10,
            n_train: 1000,
            n_test: 10_000,
            theta: 0.025,
            dim: 2,
            train: None,
            test: None,
            format: FileFormat::Dense,
            delimiter: ",".into(),
            label_column: "last".into(),
            split_at: None,
            test_fraction: 0.25,
            normalize: true,
            imbalance: 8.0,
            spread: 0.6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UmaSettings {
    pub alpha: f64,
    pub stop_epsilon: f64,
    /// Defaults to the alpha-dependent rule when absent.
    pub max_updates: Option<usize>,
    pub strategy: String,
    pub policy: String,
}

impl Default for UmaSettings {
    fn default() -> Self {
        UmaSettings {
            alpha: 0.0,
            stop_epsilon: DEFAULT_STOP_EPSILON,
            max_updates: None,
            strategy: "error".into(),
            policy: "perceptron".into(),
        }
    }
}

impl UmaSettings {
    pub fn to_config(&self, seed: u64) -> Result<UmaConfig> {
        let strategy: SelectionStrategy = self.strategy.parse().map_err(config_err)?;
        let policy: TauPolicy = self.policy.parse().map_err(config_err)?;
        let cfg = UmaConfig {
            alpha: self.alpha,
            stop_epsilon: self.stop_epsilon,
            max_updates: self.max_updates.unwrap_or_else(|| default_max_updates(self.alpha)),
            strategy,
            policy,
            seed,
        };
        cfg.validate().map_err(config_err)?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerceptronSettings {
    pub epochs: usize,
    pub policy: String,
}

impl Default for PerceptronSettings {
    fn default() -> Self {
        PerceptronSettings { epochs: 100, policy: "perceptron".into() }
    }
}

impl PerceptronSettings {
    pub fn tau_policy(&self) -> Result<TauPolicy> {
        self.policy.parse().map_err(config_err)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct KpcaSettings {
    /// Number of kernel axes; 0 disables the projection.
    pub dims: usize,
    /// Gaussian bandwidth; the median pairwise distance when absent.
    pub sigma: Option<f64>,
    /// Fit on at most this many training points; 0 means all.
    pub fit_points: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSettings {
    pub m_per_class: usize,
    pub conf_fraction: f64,
    /// Added to every count before the confusion estimate is normalized.
    pub smoothing: f64,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        PipelineSettings { m_per_class: 10, conf_fraction: 0.05, smoothing: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudySettings {
    /// Noise level used to corrupt the training labels.
    pub noise_index: u32,
    /// Evaluate every this many updates.
    pub log_every: usize,
}

impl Default for StudySettings {
    fn default() -> Self {
        StudySettings { noise_index: 10, log_every: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSettings {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub repeats: usize,
    pub noise_indices: Vec<u32>,
    pub out: Option<PathBuf>,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            kind: ExperimentKind::SweepNoise,
            seed: 0,
            repeats: 10,
            noise_indices: (1..=20).collect(),
            out: None,
        }
    }
}

/// Everything an experiment run depends on.
#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: RunSettings,
    pub data: DataSettings,
    pub uma: UmaSettings,
    pub perceptron: PerceptronSettings,
    pub kpca: KpcaSettings,
    pub pipeline: PipelineSettings,
    pub study: StudySettings,
}

fn config_err(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

impl ExperimentConfig {
    pub fn for_kind(kind: ExperimentKind) -> Self {
        let mut c = ExperimentConfig::default();
        c.experiment.kind = kind;
        c
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file; relative data paths are taken from its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut c = Self::from_toml(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut c.data.train, &mut c.data.test].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(c)
    }

    /// Applies the defaults implied by a named real-data preset.
    pub fn apply_preset_defaults(&mut self) {
        match self.data.preset {
            Preset::Digits if self.kpca.dims == 0 => self.kpca.dims = 640,
            Preset::Letter => {
                if self.kpca.dims == 0 {
                    self.kpca.dims = 1600;
                }
                if self.data.split_at.is_none() {
                    self.data.split_at = Some(15_000);
                }
                if self.data.label_column == "last" {
                    self.data.label_column = "first".into();
                }
            }
            _ => {}
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.experiment.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        if self.data.num_classes < 2 {
            return Err(Error::Config("num_classes must be at least 2".into()));
        }
        if self.data.delimiter.len() != 1 {
            return Err(Error::Config(format!("delimiter must be one byte, got `{}`", self.data.delimiter)));
        }
        if self.study.log_every == 0 {
            return Err(Error::Config("log_every must be positive".into()));
        }
        let p = &self.pipeline;
        if !(p.conf_fraction > 0.0 && p.conf_fraction < 1.0) || !(p.smoothing >= 0.0) {
            return Err(Error::Config("conf_fraction must lie in (0, 1) and smoothing be nonnegative".into()));
        }
        for path in [&self.data.train, &self.data.test].into_iter().flatten() {
            if !path.exists() {
                return Err(Error::Config(format!("{} does not exist", path.display())));
            }
        }
        if matches!(self.data.preset, Preset::Digits | Preset::Letter | Preset::Files) && self.data.train.is_none() {
            return Err(Error::Config("file-based presets need data.train".into()));
        }
        self.uma.to_config(0)?;
        self.perceptron.tau_policy()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_defaults() {
        let c = ExperimentConfig::from_toml(
            r#"
            [experiment]
            kind = "sweep-approx"
            seed = 7
            noise_indices = [2, 4]

            [uma]
            strategy = "confusion"
            max_updates = 50
            "#,
        )
        .unwrap();
        assert_eq!(c.experiment.kind, ExperimentKind::SweepApprox);
        assert_eq!(c.experiment.repeats, 10);
        assert_eq!(c.experiment.noise_indices, vec![2, 4]);
        assert_eq!(c.data.n_test, 10_000);
        let u = c.uma.to_config(3).unwrap();
        assert_eq!(u.strategy, SelectionStrategy::Confusion);
        assert_eq!(u.max_updates, 50);
        c.validate().unwrap();
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(ExperimentConfig::from_toml("[uma]\nalfa = 1").is_err());
        let mut c = ExperimentConfig::default();
        c.experiment.repeats = 0;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.uma.strategy = "greedy".into();
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = ExperimentConfig::default();
        c.data.preset = Preset::Digits;
        assert!(c.validate().is_err());
    }

    #[test]
    fn letter_preset_defaults() {
        let mut c = ExperimentConfig::default();
        c.data.preset = Preset::Letter;
        c.apply_preset_defaults();
        assert_eq!((c.kpca.dims, c.data.split_at), (1600, Some(15_000)));
        assert_eq!(c.data.label_column, "first");
    }
}
