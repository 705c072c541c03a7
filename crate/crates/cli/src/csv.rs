//! Trajectory logs as CSV.

use std::io::{self, Write};
use std::path::Path;

use ambient_attitude::simulate::{LogRow, TrajectoryLog};
use csv::{ReaderBuilder, Terminator, WriterBuilder};

use crate::error::{CliError, CliResult};

pub const HEADER: &str = "t,R11,R12,R13,R21,R22,R23,R31,R32,R33,w1,w2,w3,u1,u2,u3,err_R,err_W,defect";

fn to_io(e: csv::Error) -> io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => e,
        other => io::Error::other(format!("{other:?}")),
    }
}

/// Writes the header and one row per log entry. Values use 17 significant
/// digits so that they parse back to the same `f64`.
pub fn write_csv<W: Write>(log: &TrajectoryLog, out: W) -> io::Result<()> {
    let mut w = WriterBuilder::new().terminator(Terminator::Any(b'\n')).from_writer(out);
    w.write_record(HEADER.split(',')).map_err(to_io)?;
    for row in &log.rows {
        w.write_record(row.to_values().iter().map(|v| format!("{v:.16e}"))).map_err(to_io)?;
    }
    w.flush()
}

pub fn write_csv_file(log: &TrajectoryLog, path: &Path) -> CliResult<()> {
    let file = std::fs::File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    write_csv(log, io::BufWriter::new(file)).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Reads a file written by [`write_csv`]. Fails on a wrong header or a row
/// with the wrong number of fields.
pub fn read_csv(path: &Path) -> CliResult<Vec<[f64; LogRow::COLUMNS]>> {
    let at = |e: &dyn std::fmt::Display| format!("{}: {e}", path.display());
    let mut reader = ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| CliError::Io(at(&e)))?;
    let header = reader.headers().map_err(|e| CliError::Io(at(&e)))?;
    if header.iter().ne(HEADER.split(',')) {
        let got = header.iter().collect::<Vec<_>>().join(",");
        return Err(CliError::Schema(at(&format!("unexpected header `{got}`"))));
    }
    let mut rows = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Io(at(&e)))?;
        let bad = |msg: String| CliError::Schema(format!("{}:{}: {msg}", path.display(), n + 2));
        if record.len() != LogRow::COLUMNS {
            return Err(bad(format!("expected {} fields, got {}", LogRow::COLUMNS, record.len())));
        }
        let mut row = [0.0; LogRow::COLUMNS];
        for (slot, field) in row.iter_mut().zip(record.iter()) {
            *slot = field.parse().map_err(|e| bad(format!("`{field}`: {e}")))?;
        }
        rows.push(row);
    }
    Ok(rows)
}
