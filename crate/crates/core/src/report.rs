//! Flat result records and their CSV and JSON forms.

use std::io::{Read, Write};

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::experiment::{CrossingRow, ExperimentResult};
use crate::lattice::LatticeModel;
use crate::stats::{ExponentFit, RunningStats};

pub const BASE_COLUMNS: [&str; 9] = ["model", "p", "n", "trials", "seed", "statistic", "mean", "stderr", "count"];

/// One row of output: a statistic at one size, or a fit (`n = 0`).
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRecord {
    pub model: String,
    pub p: f64,
    pub n: u32,
    pub trials: u64,
    pub seed: u64,
    pub statistic: String,
    pub mean: f64,
    pub stderr: f64,
    pub count: u64,
    /// Statistic-specific values, in emission order.
    pub extra: Vec<(String, f64)>,
}

impl ResultRecord {
    pub fn new(model: LatticeModel, n: u32, trials: u64, seed: u64, statistic: impl Into<String>) -> Self {
        Self {
            model: model.kind.as_str().to_string(),
            p: model.p,
            n,
            trials,
            seed,
            statistic: statistic.into(),
            mean: 0.0,
            stderr: 0.0,
            count: 0,
            extra: Vec::new(),
        }
    }

    pub fn with_stats(mut self, s: &RunningStats) -> Self {
        self.mean = s.mean;
        self.stderr = s.stderr();
        self.count = s.count;
        self
    }

    pub fn with_value(mut self, mean: f64, stderr: f64, count: u64) -> Self {
        self.mean = mean;
        self.stderr = stderr;
        self.count = count;
        self
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.extra.push((key.to_string(), value));
        self
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.extra.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    /// A fit row: slope as the mean, its standard error, and the number of points.
    pub fn fit(model: LatticeModel, trials: u64, seed: u64, statistic: &str, fit: &ExponentFit) -> Self {
        Self::new(model, 0, trials, seed, format!("{statistic}-fit"))
            .with_value(fit.slope, fit.slope_stderr, fit.points.len() as u64)
            .with("intercept", fit.intercept)
            .with("r_squared", fit.r_squared)
    }
}

/// Records of a [`run_experiment`](crate::experiment::run_experiment) result.
pub fn experiment_records(result: &ExperimentResult) -> Vec<ResultRecord> {
    let s = &result.spec;
    result
        .rows
        .iter()
        .map(|row| {
            ResultRecord::new(s.model, row.n, s.trials, s.seed, s.statistic.as_str())
                .with_stats(&row.stats)
                .with("accepted", row.accepted as f64)
                .with("attempted", row.attempted as f64)
        })
        .collect()
}

/// Records of a crossing experiment, skipping empty statistics.
pub fn crossing_records(model: LatticeModel, trials: u64, seed: u64, rows: &[CrossingRow]) -> Vec<ResultRecord> {
    let mut out = Vec::new();
    for row in rows {
        let p = row.accepted as f64 / row.attempted as f64;
        out.push(
            ResultRecord::new(model, row.n, trials, seed, "crossing-probability")
                .with_value(p, (p * (1.0 - p) / row.attempted as f64).sqrt(), row.attempted)
                .with("accepted", row.accepted as f64)
                .with("attempted", row.attempted as f64),
        );
        for s in [&row.shortest, &row.lowest, &row.ratio, &row.sigma_ratio] {
            if !s.is_empty() {
                out.push(
                    ResultRecord::new(model, row.n, trials, seed, s.statistic.clone())
                        .with_stats(s)
                        .with("accepted", row.accepted as f64)
                        .with("attempted", row.attempted as f64),
                );
            }
        }
    }
    out
}

/// Extra column names in order of first appearance.
fn extra_columns(records: &[ResultRecord]) -> Vec<String> {
    let mut cols: Vec<String> = Vec::new();
    for r in records {
        for (k, _) in &r.extra {
            if !cols.contains(k) {
                cols.push(k.clone());
            }
        }
    }
    cols
}

fn base_values(r: &ResultRecord) -> [String; 9] {
    [
        r.model.clone(),
        r.p.to_string(),
        r.n.to_string(),
        r.trials.to_string(),
        r.seed.to_string(),
        r.statistic.clone(),
        r.mean.to_string(),
        r.stderr.to_string(),
        r.count.to_string(),
    ]
}

/// Writes a header and one row per record. Records lacking an extra column
/// leave its cell empty. Floats use the shortest representation that
/// parses back exactly.
pub fn write_csv<W: Write>(records: &[ResultRecord], sink: W) -> Result<()> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let extras = extra_columns(records);
    let mut w = csv::Writer::from_writer(sink);
    let header: Vec<&str> = BASE_COLUMNS.iter().copied().chain(extras.iter().map(String::as_str)).collect();
    w.write_record(&header)?;
    for r in records {
        let mut row: Vec<String> = base_values(r).into();
        row.extend(extras.iter().map(|k| r.get(k).map_or_else(String::new, |v| v.to_string())));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn number(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

/// Writes a JSON array of flat objects. Non-finite numbers become `null`.
pub fn write_json<W: Write>(records: &[ResultRecord], mut sink: W) -> Result<()> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let array: Vec<Value> = records
        .iter()
        .map(|r| {
            let mut m = Map::new();
            m.insert("model".into(), Value::String(r.model.clone()));
            m.insert("p".into(), number(r.p));
            m.insert("n".into(), r.n.into());
            m.insert("trials".into(), r.trials.into());
            m.insert("seed".into(), r.seed.into());
            m.insert("statistic".into(), Value::String(r.statistic.clone()));
            m.insert("mean".into(), number(r.mean));
            m.insert("stderr".into(), number(r.stderr));
            m.insert("count".into(), r.count.into());
            for (k, v) in &r.extra {
                m.insert(k.clone(), number(*v));
            }
            Value::Object(m)
        })
        .collect();
    serde_json::to_writer_pretty(&mut sink, &array)?;
    writeln!(sink)?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

pub fn emit<W: Write>(records: &[ResultRecord], format: Format, sink: W) -> Result<()> {
    match format {
        Format::Csv => write_csv(records, sink),
        Format::Json => write_json(records, sink),
    }
}

fn parse_field<T: std::str::FromStr>(s: &str, name: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::InvalidExperiment(format!("cannot parse `{name}` value `{s}`")))
}

pub fn read_csv<R: Read>(source: R) -> Result<Vec<ResultRecord>> {
    let mut rd = csv::Reader::from_reader(source);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header.len() < BASE_COLUMNS.len() || header[..BASE_COLUMNS.len()] != BASE_COLUMNS {
        return Err(Error::InvalidExperiment(format!(
            "CSV header must start with {}",
            BASE_COLUMNS.join(",")
        )));
    }
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row?;
        let f = |i: usize| row.get(i).unwrap_or("");
        let mut r = ResultRecord {
            model: f(0).to_string(),
            p: parse_field(f(1), "p")?,
            n: parse_field(f(2), "n")?,
            trials: parse_field(f(3), "trials")?,
            seed: parse_field(f(4), "seed")?,
            statistic: f(5).to_string(),
            mean: parse_field(f(6), "mean")?,
            stderr: parse_field(f(7), "stderr")?,
            count: parse_field(f(8), "count")?,
            extra: Vec::new(),
        };
        for (i, name) in header.iter().enumerate().skip(BASE_COLUMNS.len()) {
            if !f(i).is_empty() {
                r.extra.push((name.clone(), parse_field(f(i), name)?));
            }
        }
        out.push(r);
    }
    Ok(out)
}

pub fn read_json<R: Read>(source: R) -> Result<Vec<ResultRecord>> {
    let array: Vec<Map<String, Value>> = serde_json::from_reader(source)?;
    let missing = |k: &str| Error::InvalidExperiment(format!("record lacks `{k}`"));
    let float = |m: &Map<String, Value>, k: &str| -> Result<f64> {
        match m.get(k) {
            Some(Value::Null) => Ok(f64::NAN),
            Some(v) => v.as_f64().ok_or_else(|| missing(k)),
            None => Err(missing(k)),
        }
    };
    let int = |m: &Map<String, Value>, k: &str| m.get(k).and_then(Value::as_u64).ok_or_else(|| missing(k));
    let text = |m: &Map<String, Value>, k: &str| {
        m.get(k)
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| missing(k))
    };
    array
        .iter()
        .map(|m| {
            let extra = m
                .keys()
                .filter(|k| !BASE_COLUMNS.contains(&k.as_str()))
                .map(|k| Ok((k.clone(), float(m, k)?)))
                .collect::<Result<_>>()?;
            Ok(ResultRecord {
                model: text(m, "model")?,
                p: float(m, "p")?,
                n: u32::try_from(int(m, "n")?).map_err(|_| missing("n"))?,
                trials: int(m, "trials")?,
                seed: int(m, "seed")?,
                statistic: text(m, "statistic")?,
                mean: float(m, "mean")?,
                stderr: float(m, "stderr")?,
                count: int(m, "count")?,
                extra,
            })
        })
        .collect()
}
