use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use super::sweep::SweepRecord;
use crate::error::{Error, Result};

const COLUMNS: [&str; 7] = [
    "delta1",
    "delta2",
    "scheme",
    "kl",
    "frobenius",
    "admissible",
    "preserving",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::InvalidArgument(format!("unknown output format {other:?}"))),
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Fixed columns; missing values are empty fields.
pub fn write_csv<W: Write>(records: &[SweepRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(COLUMNS)?;
    for r in records {
        out.write_record([
            r.delta1.to_string(),
            opt(r.delta2),
            r.scheme.clone(),
            opt(r.kl),
            opt(r.frobenius),
            r.admissible.to_string(),
            r.preserving.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

fn parse_field<T: FromStr>(row: usize, col: usize, text: &str) -> Result<T> {
    text.parse().map_err(|_| Error::Format {
        field: format!("row {row}, column {}", COLUMNS[col]),
        message: format!("cannot parse {text:?}"),
    })
}

fn parse_opt(row: usize, col: usize, text: &str) -> Result<Option<f64>> {
    if text.is_empty() {
        Ok(None)
    } else {
        parse_field(row, col, text).map(Some)
    }
}

/// Reads records written by [`write_csv`]. Error messages are not stored in CSV.
pub fn read_csv<R: Read>(r: R) -> Result<Vec<SweepRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers()?.clone();
    if header.iter().ne(COLUMNS) {
        return Err(Error::Format {
            field: "header".into(),
            message: format!("expected columns {}", COLUMNS.join(",")),
        });
    }
    let mut out = Vec::new();
    for (k, row) in rdr.records().enumerate() {
        let row = row?;
        let line = k + 2;
        out.push(SweepRecord {
            delta1: parse_field(line, 0, &row[0])?,
            delta2: parse_opt(line, 1, &row[1])?,
            scheme: row[2].to_string(),
            kl: parse_opt(line, 3, &row[3])?,
            frobenius: parse_opt(line, 4, &row[4])?,
            admissible: parse_field(line, 5, &row[5])?,
            preserving: parse_field(line, 6, &row[6])?,
            error: None,
        });
    }
    Ok(out)
}

pub fn write_json<W: Write>(records: &[SweepRecord], mut w: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, records)?;
    writeln!(w)?;
    Ok(())
}

pub fn read_json<R: Read>(r: R) -> Result<Vec<SweepRecord>> {
    Ok(serde_json::from_reader(r)?)
}

/// Writes `records` to `path` in `format`.
pub fn emit(records: &[SweepRecord], format: OutputFormat, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    match format {
        OutputFormat::Csv => write_csv(records, &mut w)?,
        OutputFormat::Json => write_json(records, &mut w)?,
    }
    w.flush()?;
    Ok(())
}
