//! CSV and JSON artifacts. Field files carry a header row of x positions and
//! one row per time level; study files have fixed column sets so downstream
//! plotting stays schema-stable. All numbers are written in Rust's shortest
//! round-trip form, which makes seeded reruns byte-identical.

use std::fs::File;
use std::io::{BufWriter, Write as _};
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::carleman::CarlemanReport;
use crate::hum::SweepReport;
use crate::mesh::{Grid, SpaceSlice, SpaceTimeField};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o error on {path}: {source}")]
    File {
        path: String,
        source: std::io::Error,
    },
    #[error("csv error on {path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path}: expected {expected} columns, got {got}")]
    ColumnMismatch {
        path: String,
        expected: usize,
        got: usize,
    },
    #[error("{path}: expected {expected} data rows, got {got}")]
    RowMismatch {
        path: String,
        expected: usize,
        got: usize,
    },
    #[error("{path}: could not parse `{token}` as a number")]
    BadNumber { path: String, token: String },
    #[error("json error on {path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
}

fn file_err(path: &Path, source: std::io::Error) -> IoError {
    IoError::File {
        path: path.display().to_string(),
        source,
    }
}

fn csv_err(path: &Path, source: csv::Error) -> IoError {
    IoError::Csv {
        path: path.display().to_string(),
        source,
    }
}

fn x_header(grid: &Grid) -> Vec<String> {
    (0..grid.n())
        .map(|j| grid.x_interior(j).to_string())
        .collect()
}

/// Writes a space-time field: header of interior x positions, one row per
/// time level `0..m`.
pub fn write_field_csv(path: &Path, field: &SpaceTimeField, grid: &Grid) -> Result<(), IoError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    writer
        .write_record(x_header(grid))
        .map_err(|e| csv_err(path, e))?;
    for k in 0..field.rows() {
        let row: Vec<String> = field.slice(k).iter().map(|v| v.to_string()).collect();
        writer.write_record(row).map_err(|e| csv_err(path, e))?;
    }
    writer.flush().map_err(|e| file_err(path, e))?;
    Ok(())
}

/// Writes a single slice as a one-row field file.
pub fn write_slice_csv(path: &Path, slice: &SpaceSlice, grid: &Grid) -> Result<(), IoError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    writer
        .write_record(x_header(grid))
        .map_err(|e| csv_err(path, e))?;
    let row: Vec<String> = slice.values().iter().map(|v| v.to_string()).collect();
    writer.write_record(row).map_err(|e| csv_err(path, e))?;
    writer.flush().map_err(|e| file_err(path, e))?;
    Ok(())
}

fn read_rows(path: &Path, grid: &Grid) -> Result<Vec<Vec<f64>>, IoError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header_len = reader.headers().map_err(|e| csv_err(path, e))?.len();
    if header_len != grid.n() {
        return Err(IoError::ColumnMismatch {
            path: path.display().to_string(),
            expected: grid.n(),
            got: header_len,
        });
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        if record.len() != grid.n() {
            return Err(IoError::ColumnMismatch {
                path: path.display().to_string(),
                expected: grid.n(),
                got: record.len(),
            });
        }
        let row: Result<Vec<f64>, IoError> = record
            .iter()
            .map(|token| {
                token.trim().parse::<f64>().map_err(|_| IoError::BadNumber {
                    path: path.display().to_string(),
                    token: token.to_string(),
                })
            })
            .collect();
        rows.push(row?);
    }
    Ok(rows)
}

/// Reads a field written by [`write_field_csv`], checking the shape against
/// the grid.
pub fn read_field_csv(path: &Path, grid: &Grid) -> Result<SpaceTimeField, IoError> {
    let rows = read_rows(path, grid)?;
    if rows.len() != grid.m() + 1 {
        return Err(IoError::RowMismatch {
            path: path.display().to_string(),
            expected: grid.m() + 1,
            got: rows.len(),
        });
    }
    let mut field = SpaceTimeField::zeros(grid);
    for (k, row) in rows.iter().enumerate() {
        field.slice_mut(k).copy_from_slice(row);
    }
    Ok(field)
}

/// Reads a single-row slice file.
pub fn read_slice_csv(path: &Path, grid: &Grid) -> Result<SpaceSlice, IoError> {
    let rows = read_rows(path, grid)?;
    if rows.len() != 1 {
        return Err(IoError::RowMismatch {
            path: path.display().to_string(),
            expected: 1,
            got: rows.len(),
        });
    }
    Ok(SpaceSlice::new(rows.into_iter().next().unwrap()))
}

/// Ratio-study rows, one per `(s, λ, sample)`.
pub fn write_ratio_csv(path: &Path, reports: &[CarlemanReport]) -> Result<(), IoError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    writer
        .write_record([
            "s",
            "lambda",
            "sample_id",
            "lhs_term1",
            "lhs_term2",
            "lhs_term3",
            "lhs_term4",
            "rhs_source",
            "rhs_local",
            "ratio",
        ])
        .map_err(|e| csv_err(path, e))?;
    for r in reports {
        writer
            .write_record([
                r.s.to_string(),
                r.lambda.to_string(),
                r.sample_id.to_string(),
                r.lhs_terms[0].to_string(),
                r.lhs_terms[1].to_string(),
                r.lhs_terms[2].to_string(),
                r.lhs_terms[3].to_string(),
                r.rhs_source.to_string(),
                r.rhs_local.to_string(),
                r.ratio.to_string(),
            ])
            .map_err(|e| csv_err(path, e))?;
    }
    writer.flush().map_err(|e| file_err(path, e))?;
    Ok(())
}

/// Sweep rows with the fixed column set.
pub fn write_sweep_csv(path: &Path, report: &SweepReport) -> Result<(), IoError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    writer
        .write_record([
            "eps",
            "cost",
            "terminal_sq",
            "terminal_ratio",
            "cost_ratio",
            "cg_iterations",
        ])
        .map_err(|e| csv_err(path, e))?;
    for row in &report.rows {
        writer
            .write_record([
                row.eps.to_string(),
                row.cost.to_string(),
                row.terminal_sq.to_string(),
                row.terminal_ratio.to_string(),
                row.cost_ratio.to_string(),
                row.cg_iterations.to_string(),
            ])
            .map_err(|e| csv_err(path, e))?;
    }
    writer.flush().map_err(|e| file_err(path, e))?;
    Ok(())
}

/// Observability quotients in sample order.
pub fn write_observability_csv(path: &Path, quotients: &[f64]) -> Result<(), IoError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    writer
        .write_record(["sample_id", "quotient"])
        .map_err(|e| csv_err(path, e))?;
    for (i, q) in quotients.iter().enumerate() {
        writer
            .write_record([i.to_string(), q.to_string()])
            .map_err(|e| csv_err(path, e))?;
    }
    writer.flush().map_err(|e| file_err(path, e))?;
    Ok(())
}

/// Pretty-printed JSON report.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let file = File::create(path).map_err(|e| file_err(path, e))?;
    let mut writer = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut writer, value).map_err(|e| IoError::Json {
        path: path.display().to_string(),
        source: e,
    })?;
    writer.write_all(b"\n").map_err(|e| file_err(path, e))?;
    Ok(())
}
