//! CSV interchange: a header row, one response column, every other column
//! a feature in file order.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Response};
use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Regression,
    Classification,
}

impl TaskKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "regression" => Some(Self::Regression),
            "classification" => Some(Self::Classification),
            _ => None,
        }
    }
}

fn parse_cell(raw: &str, line: u64, column: &str) -> Result<f64> {
    let cell = raw.trim();
    let bad = |what: &str| Error::Csv {
        line,
        reason: format!("column `{column}`: {what} `{cell}`"),
    };
    let v: f64 = cell.parse().map_err(|_| bad("non-numeric cell"))?;
    if v.is_nan() {
        return Err(bad("NaN literal"));
    }
    if v.is_infinite() {
        return Err(bad("infinite value"));
    }
    Ok(v)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => Error::Csv {
            line,
            reason: format!("ragged row: {len} fields, header has {expected_len}"),
        },
        csv::ErrorKind::Utf8 { err, .. } => Error::Csv {
            line,
            reason: format!("invalid UTF-8: {err}"),
        },
        other => Error::Csv {
            line,
            reason: format!("{other:?}"),
        },
    }
}

/// Reads a dataset. Classification labels must be integers; distinct
/// values are mapped to `0..K` in increasing order.
pub fn read_csv<R: Read>(reader: R, response: &str, task: TaskKind) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers().map_err(csv_error)?.iter().map(|h| h.trim().to_string()).collect();
    for (i, h) in header.iter().enumerate() {
        if header[..i].contains(h) {
            return Err(Error::Csv {
                line: 1,
                reason: format!("duplicate header `{h}`"),
            });
        }
    }
    let y_col = header
        .iter()
        .position(|h| h == response)
        .ok_or_else(|| invalid("response", format!("unknown column `{response}`")))?;
    let names: Vec<String> = header.iter().enumerate().filter(|&(i, _)| i != y_col).map(|(_, h)| h.clone()).collect();
    if names.is_empty() {
        return Err(Error::InvalidData("no feature columns besides the response".into()));
    }
    let p = names.len();
    let mut rows: Vec<f64> = Vec::new();
    let mut y = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        for (i, cell) in record.iter().enumerate() {
            let v = parse_cell(cell, line, &header[i])?;
            if i == y_col {
                y.push((v, line));
            } else {
                rows.push(v);
            }
        }
    }
    let n = y.len();
    let mut x = vec![0.0; n * p];
    for (k, v) in rows.into_iter().enumerate() {
        x[(k % p) * n + k / p] = v;
    }
    let response = match task {
        TaskKind::Regression => Response::Regression(y.into_iter().map(|(v, _)| v).collect()),
        TaskKind::Classification => {
            let mut codes = Vec::with_capacity(n);
            for &(v, line) in &y {
                if v.fract() != 0.0 || v.abs() > 1e15 {
                    return Err(Error::Csv {
                        line,
                        reason: format!("column `{response}`: class label `{v}` is not an integer"),
                    });
                }
                codes.push(v as i64);
            }
            let mut levels = codes.clone();
            levels.sort_unstable();
            levels.dedup();
            let labels = codes.iter().map(|c| levels.binary_search(c).expect("level present")).collect();
            Response::Classification {
                labels,
                classes: levels.len(),
            }
        }
    };
    Dataset::new(n, p, x, response)?.with_feature_names(names)
}

pub fn read_csv_path(path: &Path, response: &str, task: TaskKind) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    read_csv(std::io::BufReader::new(file), response, task)
}

/// Writes the response as column `y` followed by every feature. Values use
/// the shortest representation that parses back to the same `f64`.
pub fn write_csv<W: Write>(data: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    let mut record = Vec::with_capacity(data.p() + 1);
    record.push("y".to_string());
    record.extend((0..data.p()).map(|j| data.feature_name(j)));
    w.write_record(&record).map_err(csv_error)?;
    let y: Vec<String> = match data.response() {
        Response::Regression(y) => y.iter().map(|v| v.to_string()).collect(),
        Response::Classification { labels, .. } => labels.iter().map(|l| l.to_string()).collect(),
    };
    for (i, yi) in y.into_iter().enumerate() {
        record.clear();
        record.push(yi);
        record.extend((0..data.p()).map(|j| data.column(j)[i].to_string()));
        w.write_record(&record).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}
