//! Fixed output file set of a run.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::CliError;
use crate::pipeline::{RunOutput, Summary};

pub const VERIFY_HEADER: [&str; 8] = ["name", "function", "s", "t", "lhs", "rhs", "margin", "pass"];

fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::Io(io),
        other => CliError::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Writes certificate.json, tau.csv, pairs.csv, verify.csv, mc.csv and summary.json.
pub fn emit_report(out: &RunOutput, dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    write_json(&dir.join("certificate.json"), &out.certificates)?;
    write_csv(&dir.join("tau.csv"), &["s", "t", "d", "tau"], &out.tau)?;
    write_csv(&dir.join("pairs.csv"), &["s", "t", "d", "tau", "bound_t1", "modulus_t3"], &out.pairs)?;
    write_csv(&dir.join("verify.csv"), &VERIFY_HEADER, &out.verify)?;
    write_csv(&dir.join("mc.csv"), &["theorem", "statistic", "path", "value"], &out.mc)?;
    write_summary(&out.summary, dir)
}

pub fn write_summary(summary: &Summary, dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    write_json(&dir.join("summary.json"), summary)
}
