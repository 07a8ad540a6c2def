//! Artifact files: iteration records, boundary traces and PGM snapshots.
//!
//! CSV files carry a header row and LF line endings; numbers use the
//! shortest representation that round-trips, so re-reading a trace gives
//! back the exact values.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BoundaryTrace, Grid, ScalarField};
use crate::inversion::IterationRecord;

pub const RECORDS_FILE: &str = "records.csv";
pub const DATA_FILE: &str = "data.csv";
pub const NOISY_DATA_FILE: &str = "data_noisy.csv";
pub const RESOLVED_SPEC_FILE: &str = "spec.resolved.toml";

pub fn snapshot_file_name(k: usize) -> String {
    format!("snapshot_{k}.pgm")
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(File::create(path)?))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config { path: path.to_path_buf(), message: format!("{other:?}") },
    }
}

pub fn write_records(path: &Path, records: &[IterationRecord]) -> Result<()> {
    let mut w = csv_writer(path)?;
    if records.is_empty() {
        w.write_record(["index", "residual_sq", "bv_value", "penalty", "functional", "component_count"])
            .map_err(|e| csv_error(path, e))?;
    }
    for r in records {
        w.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<IterationRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    r.deserialize().collect::<std::result::Result<_, _>>().map_err(|e| csv_error(path, e))
}

#[derive(Debug, Serialize, Deserialize)]
struct TraceRow {
    index: usize,
    x: f64,
    y: f64,
    value: f64,
}

/// One row per boundary node in traversal order.
pub fn write_trace(path: &Path, trace: &BoundaryTrace) -> Result<()> {
    let g = trace.grid();
    let mut w = csv_writer(path)?;
    for (index, ((i, j), &value)) in g.boundary_nodes().zip(trace.values()).enumerate() {
        let (x, y) = g.position(i, j);
        w.serialize(TraceRow { index, x, y, value }).map_err(|e| csv_error(path, e))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace(path: &Path, grid: Grid) -> Result<BoundaryTrace> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut values = Vec::with_capacity(grid.boundary_count());
    for (k, row) in r.deserialize::<TraceRow>().enumerate() {
        let row = row.map_err(|e| csv_error(path, e))?;
        if row.index != k {
            return Err(Error::Config { path: path.to_path_buf(), message: format!("row {k} has index {}", row.index) });
        }
        values.push(row.value);
    }
    if values.len() != grid.boundary_count() {
        return Err(Error::Config {
            path: path.to_path_buf(),
            message: format!("{} boundary values for a grid with {}", values.len(), grid.boundary_count()),
        });
    }
    BoundaryTrace::from_values(grid, values)
}

/// Binary PGM, maxval 255, top row first; values are clamped to `[0, 1]`.
pub fn encode_pgm(field: &ScalarField) -> Vec<u8> {
    let n = field.grid().n();
    let mut out = format!("P5\n{n} {n}\n255\n").into_bytes();
    for j in (0..n).rev() {
        for i in 0..n {
            out.push((field.at(i, j).clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    out
}

pub fn write_pgm(path: &Path, field: &ScalarField) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    f.write_all(&encode_pgm(field))?;
    f.flush()?;
    Ok(())
}

/// Width, height and pixel bytes of a P5 file as written by [`write_pgm`].
pub fn read_pgm(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    let bad = |m: &str| Error::Config { path: path.to_path_buf(), message: m.to_string() };
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated PGM header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    if fields[0] != "P5" || fields[3] != "255" {
        return Err(bad("expected P5 with maxval 255"));
    }
    let w: usize = fields[1].parse().map_err(|_| bad("bad width"))?;
    let h: usize = fields[2].parse().map_err(|_| bad("bad height"))?;
    let pixels = bytes.get(pos..).unwrap_or_default().to_vec();
    if pixels.len() != w * h {
        return Err(bad("pixel count does not match header"));
    }
    Ok((w, h, pixels))
}
