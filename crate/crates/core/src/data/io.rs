//! Text dataset formats.
//!
//! Dense: one example per line, fields separated by a single delimiter byte,
//! every field numeric except the label column(s). Labels are arbitrary
//! tokens mapped onto classes through a vocabulary.
//!
//! Sparse: `label idx:val idx:val ...` with a positive integer label,
//! 1-based feature indices in strictly increasing order, separated by
//! whitespace.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Dataset, Features};

/// Position of a column, counted from either end of the line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    /// 0-based from the start.
    Index(usize),
    /// 1-based from the end: `FromEnd(1)` is the last field.
    FromEnd(usize),
}

impl Column {
    pub const FIRST: Column = Column::Index(0);
    pub const LAST: Column = Column::FromEnd(1);

    fn resolve(self, width: usize) -> Option<usize> {
        match self {
            Column::Index(i) if i < width => Some(i),
            Column::FromEnd(k) if k >= 1 && k <= width => Some(width - k),
            _ => None,
        }
    }
}

impl std::str::FromStr for Column {
    type Err = Error;

    /// `first`, `last`, a 1-based position, or `-k` for the k-th from the end.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" => Ok(Column::FIRST),
            "last" => Ok(Column::LAST),
            _ => match s.parse::<i64>() {
                Ok(k) if k > 0 => Ok(Column::Index(k as usize - 1)),
                Ok(k) if k < 0 => Ok(Column::FromEnd(k.unsigned_abs() as usize)),
                _ => Err(Error::InvalidInput(format!("bad column `{s}`"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseFormat {
    pub delimiter: u8,
    pub label_column: Column,
    /// Optional column holding ground-truth labels.
    pub truth_column: Option<Column>,
    /// Fixed label vocabulary; unseen labels are an error when set.
    pub vocabulary: Option<Vec<String>>,
}

impl Default for DenseFormat {
    fn default() -> Self {
        DenseFormat { delimiter: b',', label_column: Column::LAST, truth_column: None, vocabulary: None }
    }
}

impl DenseFormat {
    pub fn with_truth(mut self, column: Column) -> Self {
        self.truth_column = Some(column);
        self
    }

    pub fn with_vocabulary(mut self, vocabulary: Vec<String>) -> Self {
        self.vocabulary = Some(vocabulary);
        self
    }
}

/// Sorted label vocabulary: numerically when every token is an integer.
pub fn sorted_vocabulary<'a>(labels: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    let mut v: Vec<String> = labels.into_iter().map(str::to_owned).collect();
    v.sort();
    v.dedup();
    if v.iter().all(|s| s.parse::<i64>().is_ok()) {
        v.sort_by_key(|s| s.parse::<i64>().unwrap());
    }
    v
}

pub fn load_dense(path: impl AsRef<Path>, format: &DenseFormat) -> Result<Dataset> {
    let path = path.as_ref();
    let reader = BufReader::new(fs::File::open(path)?);
    let delim = format.delimiter as char;
    let mut data = Vec::new();
    let mut labels: Vec<(usize, String)> = Vec::new();
    let mut truths: Vec<String> = Vec::new();
    let mut dim = None;

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(delim).map(str::trim).collect();
        let width = fields.len();
        let lc = format
            .label_column
            .resolve(width)
            .ok_or_else(|| Error::ingestion(path, lineno, "label column out of range"))?;
        let tc = match format.truth_column {
            Some(c) => {
                Some(c.resolve(width).ok_or_else(|| Error::ingestion(path, lineno, "truth column out of range"))?)
            }
            None => None,
        };
        let mut row_dim = 0;
        for (j, f) in fields.iter().enumerate() {
            if j == lc || Some(j) == tc {
                continue;
            }
            let v: f64 = f
                .parse()
                .map_err(|_| Error::ingestion(path, lineno, format!("field {} is not a number: `{f}`", j + 1)))?;
            data.push(v);
            row_dim += 1;
        }
        match dim {
            None => dim = Some(row_dim),
            Some(d) if d != row_dim => {
                return Err(Error::ingestion(path, lineno, format!("expected {d} features, found {row_dim}")));
            }
            _ => {}
        }
        labels.push((lineno, fields[lc].to_owned()));
        if let Some(tc) = tc {
            truths.push(fields[tc].to_owned());
        }
    }
    let dim = dim.ok_or_else(|| Error::ingestion(path, 1, "no examples"))?;

    let vocab = match &format.vocabulary {
        Some(v) => v.clone(),
        None => sorted_vocabulary(labels.iter().map(|(_, s)| s.as_str()).chain(truths.iter().map(String::as_str))),
    };
    let lookup = |lineno: usize, s: &str| {
        vocab.iter().position(|v| v == s).ok_or_else(|| Error::ingestion(path, lineno, format!("unknown label `{s}`")))
    };
    let observed = labels.iter().map(|(l, s)| lookup(*l, s)).collect::<Result<Vec<_>>>()?;
    let truth = if format.truth_column.is_some() {
        Some(labels.iter().zip(&truths).map(|((l, _), s)| lookup(*l, s)).collect::<Result<Vec<_>>>()?)
    } else {
        None
    };
    let q = vocab.len();
    Dataset::new(Features::dense(dim, data)?, observed, truth, q)?.with_label_names(vocab)
}

fn label_token(data: &Dataset, y: usize) -> String {
    match data.label_names() {
        Some(names) => names[y].clone(),
        None => (y + 1).to_string(),
    }
}

/// Writes `features..., label[, truth]` with labels as names or 1-based numbers.
pub fn write_dense(path: impl AsRef<Path>, data: &Dataset, delimiter: u8, with_truth: bool) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    let delim = delimiter as char;
    let dim = data.dim();
    let mut line = String::new();
    for i in 0..data.len() {
        line.clear();
        for v in data.row(i).to_dense(dim) {
            write!(line, "{v}{delim}").unwrap();
        }
        line.push_str(&label_token(data, data.observed()[i]));
        if with_truth {
            let t = data.truth_or_err()?[i];
            write!(line, "{delim}{}", label_token(data, t)).unwrap();
        }
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

/// Optional overrides for the sparse reader.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SparseOptions {
    pub num_classes: Option<usize>,
    pub dim: Option<usize>,
}

pub fn load_sparse(path: impl AsRef<Path>) -> Result<Dataset> {
    load_sparse_with(path, SparseOptions::default())
}

pub fn load_sparse_with(path: impl AsRef<Path>, options: SparseOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_sparse(&text, path, options)
}

pub(crate) fn parse_sparse(text: &str, path: &Path, options: SparseOptions) -> Result<Dataset> {
    let mut indptr = vec![0];
    let mut indices: Vec<u32> = Vec::new();
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut max_index = 0usize;
    let mut max_label = 0usize;

    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let mut tokens = line.split_whitespace();
        let Some(label) = tokens.next() else { continue };
        let y: usize = label.parse().ok().filter(|&y| y >= 1).ok_or_else(|| {
            Error::ingestion(path, lineno, format!("label must be a positive integer, got `{label}`"))
        })?;
        let mut prev = 0usize;
        for tok in tokens {
            let (i, v) = tok
                .split_once(':')
                .ok_or_else(|| Error::ingestion(path, lineno, format!("expected idx:val, got `{tok}`")))?;
            let i: usize = i
                .parse()
                .ok()
                .filter(|&i| i >= 1 && i <= u32::MAX as usize)
                .ok_or_else(|| Error::ingestion(path, lineno, format!("bad feature index `{i}`")))?;
            if i <= prev {
                return Err(Error::ingestion(path, lineno, format!("feature index {i} does not increase")));
            }
            let v: f64 = v.parse().map_err(|_| Error::ingestion(path, lineno, format!("bad feature value `{v}`")))?;
            prev = i;
            indices.push((i - 1) as u32);
            values.push(v);
        }
        max_index = max_index.max(prev);
        max_label = max_label.max(y);
        labels.push((lineno, y - 1));
        indptr.push(indices.len());
    }
    if labels.is_empty() {
        return Err(Error::ingestion(path, 1, "no examples"));
    }
    let dim = options.dim.unwrap_or(max_index);
    if max_index > dim {
        return Err(Error::ingestion(path, labels.len(), format!("feature index {max_index} exceeds dimension {dim}")));
    }
    let q = options.num_classes.unwrap_or(max_label);
    if let Some((l, y)) = labels.iter().find(|(_, y)| *y >= q) {
        return Err(Error::ingestion(path, *l, format!("label {} exceeds {q} classes", y + 1)));
    }
    let features = Features::Sparse { dim, indptr, indices, values };
    Dataset::new(features, labels.into_iter().map(|(_, y)| y).collect(), None, q)
}

/// Writes observed labels (1-based) and nonzero features.
pub fn write_sparse(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    out.write_all(format_sparse(data).as_bytes())?;
    out.flush()?;
    Ok(())
}

pub(crate) fn format_sparse(data: &Dataset) -> String {
    let mut s = String::new();
    for i in 0..data.len() {
        write!(s, "{}", data.observed()[i] + 1).unwrap();
        match data.row(i) {
            crate::model::Row::Sparse { indices, values } => {
                for (j, v) in indices.iter().zip(values) {
                    write!(s, " {}:{v}", j + 1).unwrap();
                }
            }
            crate::model::Row::Dense(x) => {
                for (j, v) in x.iter().enumerate().filter(|(_, v)| **v != 0.0) {
                    write!(s, " {}:{v}", j + 1).unwrap();
                }
            }
        }
        s.push('\n');
    }
    s
}
