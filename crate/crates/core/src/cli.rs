//! Command-line front end.
//!
//! Every subcommand reads an optional TOML experiment config; `--seed`,
//! `--repeats` and `--out` override the corresponding `[experiment]` keys.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::confusion::ConfusionMatrix;
use crate::data::{write_dense, write_sparse};
use crate::error::{Error, Result};
use crate::experiment::{
    self, evaluate, load_file, prepare_data, sample_family, ExperimentConfig, ExperimentKind, FileFormat,
};
use crate::kpca::{kpca_fit, median_bandwidth};
use crate::model::{Dataset, WeightMatrix};
use crate::noise::{confusion_at, corrupt_labels};
use crate::rng;
use crate::ultra::train_ultraconservative;
use crate::uma::train_uma;

#[derive(Debug, Parser)]
#[command(name = "uma", version, about = "Multiclass linear learning from noisy labels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of repeat seeds for experiments.
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Output file; experiments print CSV to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// TOML experiment config.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Dense,
    Sparse,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Algorithm {
    Uma,
    Perceptron,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a synthetic train set (and optionally a test set).
    Generate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        test_out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Corrupt the labels of a file with a member of the noise family.
    Corrupt {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 10)]
        noise_index: u32,
        /// Where to write the confusion matrix used.
        #[arg(long)]
        confusion_out: Option<PathBuf>,
        /// Append the clean label after the noisy one (dense only).
        #[arg(long)]
        with_truth: bool,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Train a weight matrix.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "uma")]
        algorithm: Algorithm,
        /// Confusion matrix for UMA; the identity when absent.
        #[arg(long)]
        confusion: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Error and confusion rate of a weight matrix on a labelled file.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Fit a Gaussian kernel projection and write projected data.
    Kpca {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        dims: usize,
        #[arg(long)]
        sigma: Option<f64>,
        /// Second file projected with the same fit.
        #[arg(long, requires = "test_out")]
        test: Option<PathBuf>,
        #[arg(long)]
        test_out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    SweepNoise {
        #[command(flatten)]
        common: Common,
    },
    SweepApprox {
        #[command(flatten)]
        common: Common,
    },
    Pipeline {
        #[command(flatten)]
        common: Common,
    },
    StrategyStudy {
        #[command(flatten)]
        common: Common,
    },
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}

fn load_config(common: &Common, kind: Option<ExperimentKind>, format: Option<Format>) -> Result<ExperimentConfig> {
    let mut c = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(kind) = kind {
        c.experiment.kind = kind;
    }
    if let Some(seed) = common.seed {
        c.experiment.seed = seed;
    }
    if let Some(repeats) = common.repeats {
        c.experiment.repeats = repeats;
    }
    if let Some(out) = &common.out {
        c.experiment.out = Some(out.clone());
    }
    match format {
        Some(Format::Dense) => c.data.format = FileFormat::Dense,
        Some(Format::Sparse) => c.data.format = FileFormat::Sparse,
        None => {}
    }
    c.apply_preset_defaults();
    Ok(c)
}

fn required_out(c: &ExperimentConfig) -> Result<&Path> {
    c.experiment.out.as_deref().ok_or_else(|| Error::Config("--out is required".into()))
}

/// Loads a labelled file whose labels are taken as the truth.
fn load_labelled(path: &Path, c: &ExperimentConfig) -> Result<Dataset> {
    let d = load_file(path, &c.data, None)?;
    let clean = Dataset::clean(d.features().clone(), d.observed().to_vec(), d.num_classes())?;
    match d.label_names() {
        Some(names) => clean.with_label_names(names.to_vec()),
        None => Ok(clean),
    }
}

fn write_data(path: &Path, data: &Dataset, c: &ExperimentConfig, with_truth: bool) -> Result<()> {
    match c.data.format {
        FileFormat::Dense => write_dense(path, data, c.data.delimiter.as_bytes()[0], with_truth),
        FileFormat::Sparse if with_truth => Err(Error::Config("the sparse format has no truth column".into())),
        FileFormat::Sparse => write_sparse(path, data),
    }
}

/// Reads a headerless CSV of numbers, one row per line.
pub fn read_matrix(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    let mut rows = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Ingestion { path: path.into(), line: k + 1, message: e.to_string() })?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_matrix(path: &Path, rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for row in rows {
        w.write_record(row.iter().map(f64::to_string))?;
    }
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { common, test_out, format } => {
            let c = load_config(&common, None, format)?;
            c.validate()?;
            let out = required_out(&c)?;
            let prepared = prepare_data(&c, &mut rng::seeded(c.experiment.seed))?;
            write_data(out, &prepared.train, &c, false)?;
            if let Some(t) = test_out {
                write_data(&t, &prepared.test, &c, false)?;
            }
            eprintln!("train {} x {}, test {}", prepared.train.len(), prepared.train.dim(), prepared.test.len());
        }
        Command::Corrupt { common, input, noise_index, confusion_out, with_truth, format } => {
            let c = load_config(&common, None, format)?;
            let out = required_out(&c)?;
            let data = load_labelled(&input, &c)?;
            let seed = c.experiment.seed;
            let family = sample_family(data.num_classes(), &[noise_index], &mut rng::stream(seed, &[0]))?;
            let conf = confusion_at(&family, noise_index)?;
            let noisy = corrupt_labels(data.truth_or_err()?, &conf, &mut rng::stream(seed, &[1]));
            let flipped = noisy.iter().zip(data.observed()).filter(|(a, b)| a != b).count();
            write_data(out, &data.with_observed(noisy)?, &c, with_truth)?;
            if let Some(path) = confusion_out {
                write_matrix(&path, conf.rows())?;
            }
            eprintln!("flipped {flipped} of {} labels", data.len());
        }
        Command::Train { common, input, algorithm, confusion, format } => {
            let c = load_config(&common, None, format)?;
            let out = required_out(&c)?;
            let data = load_file(&input, &c.data, None)?;
            let (w, updates) = match algorithm {
                Algorithm::Uma => {
                    let conf = match confusion {
                        Some(path) => ConfusionMatrix::from_rows(&read_matrix(&path)?)?,
                        None => ConfusionMatrix::identity(data.num_classes()),
                    };
                    if conf.num_classes() != data.num_classes() {
                        return Err(Error::DimensionMismatch { expected: data.num_classes(), got: conf.num_classes() });
                    }
                    let (w, stats) = train_uma(&data, &conf, &c.uma.to_config(c.experiment.seed)?)?;
                    (w, stats.updates)
                }
                Algorithm::Perceptron => {
                    let (w, stats) =
                        train_ultraconservative(&data, c.perceptron.tau_policy()?, 0.0, c.perceptron.epochs)?;
                    (w, stats.updates)
                }
            };
            write_matrix(out, (0..w.num_classes()).map(|q| w.prototype(q).to_vec()))?;
            eprintln!("{updates} updates");
        }
        Command::Eval { common, model, input, format } => {
            let c = load_config(&common, None, format)?;
            let w = WeightMatrix::from_prototypes(&read_matrix(&model)?)?;
            let data = load_labelled(&input, &c)?;
            if w.dim() != data.dim() {
                return Err(Error::DimensionMismatch { expected: w.dim(), got: data.dim() });
            }
            if w.num_classes() != data.num_classes() {
                return Err(Error::DimensionMismatch { expected: w.num_classes(), got: data.num_classes() });
            }
            let e = evaluate(&w, &data)?;
            let text = format!("error_rate,confusion_rate\n{},{}\n", e.error_rate, e.confusion_rate);
            emit(c.experiment.out.as_deref(), &text)?;
        }
        Command::Kpca { common, input, dims, sigma, test, test_out, format } => {
            let c = load_config(&common, None, format)?;
            let out = required_out(&c)?;
            let train = load_labelled(&input, &c)?;
            let sigma = match sigma {
                Some(s) => s,
                None => median_bandwidth(train.features(), 1000, &mut rng::seeded(c.experiment.seed))?,
            };
            let proj = kpca_fit(train.features(), sigma, dims)?;
            write_data(out, &train.with_features(proj.transform_features(train.features())?)?, &c, false)?;
            if let (Some(t), Some(t_out)) = (test, test_out) {
                let test = load_file(&t, &c.data, Some(&train))?;
                write_data(&t_out, &test.with_features(proj.transform_features(test.features())?)?, &c, false)?;
            }
            eprintln!("sigma {sigma}, {} axes", proj.output_dim());
        }
        Command::SweepNoise { common } => experiment_command(&common, ExperimentKind::SweepNoise)?,
        Command::SweepApprox { common } => experiment_command(&common, ExperimentKind::SweepApprox)?,
        Command::Pipeline { common } => experiment_command(&common, ExperimentKind::Pipeline)?,
        Command::StrategyStudy { common } => experiment_command(&common, ExperimentKind::StrategyStudy)?,
    }
    Ok(())
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn experiment_command(common: &Common, kind: ExperimentKind) -> Result<()> {
    let c = load_config(common, Some(kind), None)?;
    let report = experiment::run(&c)?;
    match &c.experiment.out {
        Some(path) => report.save(path)?,
        None => report.write_csv(std::io::stdout().lock())?,
    }
    Ok(())
}
