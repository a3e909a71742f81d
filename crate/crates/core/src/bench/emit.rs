use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use super::run::{Row, RunRecord};
use crate::transcript::sig17;

pub const CSV_HEADER: &str = "seed,epoch,step,lr,loss,grad_norm,param_norm";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("malformed record in {path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("CSV line {line}: {reason}")]
    Csv { line: usize, reason: String },
}

/// Serde adapter writing finite reals with 17 significant digits and
/// non-finite ones as `null` (read back as NaN).
pub(crate) mod f64_field {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use serde_json::value::RawValue;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            let raw = RawValue::from_string(super::sig17(*x)).map_err(serde::ser::Error::custom)?;
            raw.serialize(s)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

pub(crate) mod opt_f64_field {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(v) => super::f64_field::serialize(v, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Option::<f64>::deserialize(d)
    }
}

/// A [`Row`] with its reals already formatted to 17 significant digits.
#[derive(Serialize)]
struct CsvRow {
    seed: u64,
    epoch: u64,
    step: u64,
    lr: String,
    loss: String,
    grad_norm: String,
    param_norm: String,
}

pub fn write_csv<W: Write>(record: &RunRecord, out: W) -> io::Result<()> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    writer.write_record(CSV_HEADER.split(','))?;
    for r in &record.rows {
        writer.serialize(CsvRow {
            seed: r.seed,
            epoch: r.epoch,
            step: r.step,
            lr: sig17(r.lr),
            loss: sig17(r.loss),
            grad_norm: sig17(r.grad_norm),
            param_norm: sig17(r.param_norm),
        })?;
    }
    writer.flush()
}

pub fn parse_csv_rows(text: &str) -> Result<Vec<Row>, EmitError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(csv_error)?;
    if header.iter().ne(CSV_HEADER.split(',')) {
        return Err(EmitError::Csv { line: 1, reason: format!("expected header `{CSV_HEADER}`") });
    }
    reader.deserialize().map(|row| row.map_err(csv_error)).collect()
}

fn csv_error(e: csv::Error) -> EmitError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    EmitError::Csv { line, reason: e.to_string() }
}

pub fn to_json(record: &RunRecord) -> String {
    serde_json::to_string_pretty(record).expect("run records always serialise")
}

/// Writes `record` to `path` in the given format.
pub fn emit(record: &RunRecord, format: Format, path: &Path) -> Result<(), EmitError> {
    let wrap = |source| EmitError::Write { path: path.to_path_buf(), source };
    let bytes = match format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_csv(record, &mut buf).map_err(wrap)?;
            buf
        }
        Format::Json => {
            let mut text = to_json(record);
            text.push('\n');
            text.into_bytes()
        }
    };
    fs::write(path, bytes).map_err(wrap)
}

pub fn read_json(path: &Path) -> Result<RunRecord, EmitError> {
    let text = fs::read_to_string(path).map_err(|source| EmitError::Read { path: path.to_path_buf(), source })?;
    serde_json::from_str(&text).map_err(|source| EmitError::Json { path: path.to_path_buf(), source })
}
