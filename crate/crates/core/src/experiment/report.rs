use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// CSV header, one line per (sweep point, series).
pub const CSV_HEADER: [&str; 10] =
    ["index", "x", "series", "metric", "mean", "std", "values", "updates", "wall_seconds", "flagged"];

/// One metric tracked across repeat seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub metric: String,
    /// One value per seed, in seed order.
    pub values: Vec<f64>,
    /// Training updates per seed; empty when the series is not a trained model.
    pub updates: Vec<usize>,
}

impl Series {
    pub fn new(name: impl Into<String>, metric: impl Into<String>) -> Self {
        Series { name: name.into(), metric: metric.into(), values: Vec::new(), updates: Vec::new() }
    }

    pub fn mean(&self) -> f64 {
        mean(&self.values)
    }

    /// Sample standard deviation; 0 for fewer than two values.
    pub fn std(&self) -> f64 {
        let n = self.values.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        (self.values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    }
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Results at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    /// Noise index, iteration number, or row number.
    pub index: i64,
    /// Sweep parameter on the plot's x axis.
    pub x: f64,
    pub series: Vec<Series>,
    pub wall_seconds: f64,
    /// Set when a run had to be retried or otherwise deviated.
    pub flagged: bool,
}

impl ReportRow {
    pub fn new(index: i64, x: f64) -> Self {
        ReportRow { index, x, series: Vec::new(), wall_seconds: 0.0, flagged: false }
    }

    pub fn series(&self, name: &str, metric: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name && s.metric == metric)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(";")
}

fn split<T: std::str::FromStr>(s: &str, line: usize) -> Result<Vec<T>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(';').map(|t| t.parse().map_err(|_| bad_line(line, format!("bad list entry `{t}`")))).collect()
}

fn bad_line(line: usize, message: String) -> Error {
    Error::Ingestion { path: "<report>".into(), line, message }
}

impl ExperimentReport {
    /// Mean of `name`/`metric` at every row.
    pub fn means(&self, name: &str, metric: &str) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.series(name, metric).map(Series::mean)).collect()
    }

    /// Same report with every wall time zeroed, for reproducibility checks.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        r.rows.iter_mut().for_each(|row| row.wall_seconds = 0.0);
        r
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for row in &self.rows {
            for s in &row.series {
                w.write_record([
                    row.index.to_string(),
                    row.x.to_string(),
                    s.name.clone(),
                    s.metric.clone(),
                    s.mean().to_string(),
                    s.std().to_string(),
                    join(&s.values),
                    join(&s.updates),
                    row.wall_seconds.to_string(),
                    u8::from(row.flagged).to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    /// Reads a report written by [`write_csv`](Self::write_csv). The `mean`
    /// and `std` columns are derived and ignored.
    pub fn read_csv(input: impl Read) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        if r.headers()?.iter().ne(CSV_HEADER) {
            return Err(bad_line(1, "unexpected header".into()));
        }
        let mut report = ExperimentReport::default();
        for (k, rec) in r.records().enumerate() {
            let rec = rec?;
            let line = k + 2;
            let field = |j: usize| rec.get(j).ok_or_else(|| bad_line(line, format!("missing column {}", j + 1)));
            let num = |j: usize| -> Result<f64> {
                field(j)?.parse().map_err(|_| bad_line(line, format!("bad number in column {}", j + 1)))
            };
            let index: i64 = field(0)?.parse().map_err(|_| bad_line(line, "bad index".into()))?;
            let x = num(1)?;
            let wall = num(8)?;
            let flagged = match field(9)? {
                "0" => false,
                "1" => true,
                f => return Err(bad_line(line, format!("bad flag `{f}`"))),
            };
            let series = Series {
                name: field(2)?.to_owned(),
                metric: field(3)?.to_owned(),
                values: split(field(6)?, line)?,
                updates: split(field(7)?, line)?,
            };
            let same_row = report.rows.last().is_some_and(|r: &ReportRow| {
                r.index == index && r.x.to_bits() == x.to_bits() && r.wall_seconds.to_bits() == wall.to_bits()
            });
            if !same_row {
                report.rows.push(ReportRow { index, x, series: Vec::new(), wall_seconds: wall, flagged });
            }
            report.rows.last_mut().unwrap().series.push(series);
        }
        Ok(report)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}
