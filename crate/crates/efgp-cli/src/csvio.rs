//! CSV ingestion/emission. Data files carry a header `x1,..,xd,y`; target
//! files carry `x1,..,xd`. UTF-8, '.' decimal point.

use crate::output;
use efgp::error::{EfgpError, Result};
use std::path::Path;

pub struct RawData {
    pub d: usize,
    pub points: Vec<f64>,
    pub y: Vec<f64>,
}

fn check_coordinate_header(headers: &csv::StringRecord, expect_y: bool) -> Result<usize> {
    let cols = headers.len();
    let d = if expect_y {
        cols.checked_sub(1).filter(|&d| d > 0).ok_or_else(|| {
            EfgpError::InvalidInput("need at least columns x1,y".into())
        })?
    } else {
        cols
    };
    if !(1..=3).contains(&d) {
        return Err(EfgpError::InvalidInput(format!(
            "{d} coordinate columns; supported dimensions are 1..=3"
        )));
    }
    for (i, name) in headers.iter().take(d).enumerate() {
        let expected = format!("x{}", i + 1);
        if name.trim() != expected {
            return Err(EfgpError::InvalidInput(format!(
                "header column {} is '{name}', expected '{expected}'",
                i + 1
            )));
        }
    }
    if expect_y && headers.get(d).map(str::trim) != Some("y") {
        return Err(EfgpError::InvalidInput(format!(
            "last header column must be 'y', got '{}'",
            headers.get(d).unwrap_or("")
        )));
    }
    Ok(d)
}

fn parse_field(field: &str, line: u64, col: usize) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| {
        EfgpError::InvalidInput(format!("line {line}: column {} is not a number: '{field}'", col + 1))
    })?;
    if !v.is_finite() {
        return Err(EfgpError::InvalidInput(format!(
            "line {line}: column {} is not finite ({field})",
            col + 1
        )));
    }
    Ok(v)
}

pub fn read_data(path: &Path) -> Result<RawData> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| EfgpError::InvalidInput(format!("{}: {e}", path.display())))?;
    let d = check_coordinate_header(
        reader
            .headers()
            .map_err(|e| EfgpError::InvalidInput(e.to_string()))?,
        true,
    )?;
    let mut points = Vec::new();
    let mut y = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| EfgpError::InvalidInput(e.to_string()))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != d + 1 {
            return Err(EfgpError::InvalidInput(format!(
                "line {line}: expected {} fields, got {}",
                d + 1,
                record.len()
            )));
        }
        for col in 0..d {
            points.push(parse_field(&record[col], line, col)?);
        }
        y.push(parse_field(&record[d], line, d)?);
    }
    if y.is_empty() {
        return Err(EfgpError::InvalidInput("no data rows".into()));
    }
    Ok(RawData { d, points, y })
}

/// Targets CSV with columns `x1..xd`; an empty file (header only) is valid.
pub fn read_targets(path: &Path, d: usize) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| EfgpError::InvalidInput(format!("{}: {e}", path.display())))?;
    let file_d = check_coordinate_header(
        reader
            .headers()
            .map_err(|e| EfgpError::InvalidInput(e.to_string()))?,
        false,
    )?;
    if file_d != d {
        return Err(EfgpError::Shape(format!(
            "targets have {file_d} coordinates but the model is {d}-dimensional"
        )));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| EfgpError::InvalidInput(e.to_string()))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != d {
            return Err(EfgpError::InvalidInput(format!(
                "line {line}: expected {d} fields, got {}",
                record.len()
            )));
        }
        for col in 0..d {
            out.push(parse_field(&record[col], line, col)?);
        }
    }
    Ok(out)
}

pub fn write_predictions(
    path: &Path,
    raw_targets: &[f64],
    d: usize,
    mu: &[f64],
    var: Option<&[f64]>,
) -> Result<()> {
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let mut header: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
        header.push("mu".into());
        if var.is_some() {
            header.push("var".into());
        }
        w.write_record(&header)
            .map_err(|e| EfgpError::InvalidInput(e.to_string()))?;
        for (i, x) in raw_targets.chunks(d).enumerate() {
            let mut record: Vec<String> = x.iter().map(|v| format!("{v}")).collect();
            record.push(format!("{}", mu[i]));
            if let Some(vs) = var {
                record.push(format!("{}", vs[i]));
            }
            w.write_record(&record)
                .map_err(|e| EfgpError::InvalidInput(e.to_string()))?;
        }
        w.flush()?;
    }
    output::write_atomic(path, &buf)
}
