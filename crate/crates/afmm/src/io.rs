//! File formats: point CSV, result JSON, and the sweep grid CSV.
//!
//! Floating-point values are written with 17 significant digits, which
//! round-trips `f64` exactly, so rerunning any command yields byte-identical
//! artifacts.

use crate::optimizer::SweepResult;
use crate::pointgen::PointSet;
use crate::{Error, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::path::Path;

/// Write a point set as `x,y,z,sigma` CSV.
pub fn write_points_csv(path: &Path, points: &PointSet) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "y", "z", "sigma"])?;
    for (p, &q) in points.positions.iter().zip(&points.intensities) {
        w.write_record([
            format!("{:.16e}", p[0]),
            format!("{:.16e}", p[1]),
            format!("{:.16e}", p[2]),
            format!("{q:.16e}"),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Read an `x,y,z,sigma` CSV back into a point set. The dimension is
/// inferred from the coordinates actually used: all-zero `z` (and `y`)
/// columns mark lower-dimensional data.
pub fn read_points_csv(path: &Path) -> Result<PointSet> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let expect = ["x", "y", "z", "sigma"];
    if headers.iter().ne(expect) {
        return Err(Error::Input(format!(
            "expected CSV header {expect:?}, got {:?} in {}",
            headers.iter().collect::<Vec<_>>(),
            path.display()
        )));
    }
    let mut positions = Vec::new();
    let mut intensities = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record?;
        let mut vals = [0.0f64; 4];
        for (slot, field) in vals.iter_mut().zip(record.iter()) {
            *slot = field.trim().parse::<f64>().map_err(|e| {
                Error::Input(format!(
                    "{}: row {}: bad number {field:?}: {e}",
                    path.display(),
                    line + 2
                ))
            })?;
        }
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input(format!(
                "{}: row {} contains a non-finite value",
                path.display(),
                line + 2
            )));
        }
        positions.push([vals[0], vals[1], vals[2]]);
        intensities.push(vals[3]);
    }
    if positions.is_empty() {
        return Err(Error::Input(format!("{} contains no points", path.display())));
    }
    let dim = if positions.iter().any(|p| p[2] != 0.0) {
        3
    } else if positions.iter().any(|p| p[1] != 0.0) {
        2
    } else {
        1
    };
    Ok(PointSet { positions, intensities, dim })
}

/// Write any serializable value as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Read a JSON file into any deserializable value.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Write a sweep grid as CSV with one row per evaluated cell.
pub fn write_sweep_csv(path: &Path, sweep: &SweepResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "lmax",
        "t",
        "cycles_total",
        "cycles_p2p",
        "cycles_m2l",
        "cycles_m2p",
        "cycles_p2l",
        "cycles_other",
        "s_lmax",
    ])?;
    for cell in &sweep.cells {
        let s = cell
            .lmax
            .and_then(|cap| {
                sweep
                    .s_at_cap
                    .iter()
                    .find(|(c, _)| *c == cap)
                    .map(|(_, s)| s.to_string())
            })
            .unwrap_or_default();
        w.write_record([
            cell.lmax.map(|l| l.to_string()).unwrap_or_default(),
            cell.t.to_string(),
            format!("{:.16e}", cell.total_cycles),
            format!("{:.16e}", cell.cycles.p2p),
            format!("{:.16e}", cell.cycles.m2l),
            format!("{:.16e}", cell.cycles.m2p),
            format!("{:.16e}", cell.cycles.p2l),
            format!("{:.16e}", cell.cycles.other()),
            s,
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Parsed row of a sweep CSV, for refitting the heuristic model.
#[derive(Debug, Clone, Copy)]
pub struct SweepRow {
    pub lmax: Option<u32>,
    pub t: usize,
    pub cycles_total: f64,
    pub cycles_p2p: f64,
    pub cycles_m2l: f64,
}

/// Read back the columns of [`write_sweep_csv`] needed for model fitting.
pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record?;
        let parse = |i: usize| -> Result<f64> {
            record
                .get(i)
                .unwrap_or("")
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Input(format!("{}: bad sweep field: {e}", path.display())))
        };
        let lmax_field = record.get(0).unwrap_or("").trim();
        let lmax = if lmax_field.is_empty() {
            None
        } else {
            Some(lmax_field.parse::<u32>().map_err(|e| {
                Error::Input(format!("{}: bad lmax field: {e}", path.display()))
            })?)
        };
        rows.push(SweepRow {
            lmax,
            t: parse(1)? as usize,
            cycles_total: parse(2)?,
            cycles_p2p: parse(3)?,
            cycles_m2l: parse(4)?,
        });
    }
    Ok(rows)
}
