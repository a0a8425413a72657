//! CSV form of a [`RegretSeries`]: one row per stage.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

use super::experiment::RegretSeries;
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 5] = ["t", "mean_cum_loss", "best_cum_loss", "regret", "mean_Qt"];

/// One CSV row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesRow {
    pub t: usize,
    pub mean_cum_loss: f64,
    pub best_cum_loss: f64,
    pub regret: f64,
    pub mean_qt: Option<f64>,
}

impl RegretSeries {
    pub fn rows(&self) -> impl Iterator<Item = SeriesRow> + '_ {
        (0..self.horizon()).map(move |i| SeriesRow {
            t: i + 1,
            mean_cum_loss: self.mean_cum_loss[i],
            best_cum_loss: self.best_cum_loss[i],
            regret: self.regret[i],
            mean_qt: self.mean_qt.as_ref().map(|q| q[i]),
        })
    }
}

fn csv_to_io(e: csv::Error) -> io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => e,
        other => io::Error::other(format!("{other:?}")),
    }
}

/// Writes the series to `out`. Floats use Rust's shortest round-trip
/// decimal form, and `mean_Qt` is left empty without diagnostics.
pub fn write_csv_to<W: Write>(series: &RegretSeries, out: W) -> io::Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    writer.write_record(CSV_HEADER).map_err(csv_to_io)?;
    for row in series.rows() {
        let qt = row.mean_qt.map(|q| q.to_string()).unwrap_or_default();
        writer
            .write_record([
                row.t.to_string(),
                row.mean_cum_loss.to_string(),
                row.best_cum_loss.to_string(),
                row.regret.to_string(),
                qt,
            ])
            .map_err(csv_to_io)?;
    }
    writer.flush()
}

pub fn write_csv(series: &RegretSeries, path: &Path) -> Result<()> {
    let io_error = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_error)?;
    write_csv_to(series, BufWriter::new(file)).map_err(io_error)
}

/// Parses rows written by [`write_csv_to`].
pub fn read_csv_from<R: Read>(input: R) -> Result<Vec<SeriesRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let header = reader.headers().map_err(|e| parse_error(1, e))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Parse {
            line: 1,
            message: format!("unexpected header {header:?}"),
        });
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| parse_error(line, e))?;
        let field = |j: usize| -> Result<f64> {
            record[j].parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad {} `{}`", CSV_HEADER[j], &record[j]),
            })
        };
        rows.push(SeriesRow {
            t: record[0].parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad stage `{}`", &record[0]),
            })?,
            mean_cum_loss: field(1)?,
            best_cum_loss: field(2)?,
            regret: field(3)?,
            mean_qt: if record[4].is_empty() {
                None
            } else {
                Some(field(4)?)
            },
        });
    }
    Ok(rows)
}

pub fn read_csv(path: &Path) -> Result<Vec<SeriesRow>> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv_from(file)
}

fn parse_error(line: usize, e: csv::Error) -> Error {
    Error::Parse {
        line,
        message: e.to_string(),
    }
}
