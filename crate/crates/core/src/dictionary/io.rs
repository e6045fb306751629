//! CSV layout for design matrices.
//!
//! ```text
//! x1,…,xk,weight[,y],h1,…,hN
//! ```
//!
//! One row per design point: its coordinates, its measure weight, an
//! optional label column `y`, then the dictionary values. Floats are written
//! in shortest round-trip decimal form. The `kind` of the measure is not
//! stored; readers choose it.

use std::io::{Read, Write};

use nalgebra::DMatrix;

use super::design::{DesignMatrix, ValueRange};
use super::measure::{MeasureKind, MeasureRep};
use crate::error::{Error, Result};

/// A design read from CSV, with labels when the file has a `y` column.
#[derive(Debug, Clone)]
pub struct DesignFile {
    pub design: DesignMatrix,
    pub labels: Option<Vec<f64>>,
}

pub fn write_design_csv<W: Write>(out: W, design: &DesignMatrix, labels: Option<&[f64]>) -> Result<()> {
    if let Some(y) = labels {
        if y.len() != design.n_points() {
            return Err(Error::DimensionMismatch { expected: design.n_points(), found: y.len() });
        }
    }
    let dim = design.measure().point_dim();
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=dim).map(|k| format!("x{k}")).collect();
    header.push("weight".into());
    if labels.is_some() {
        header.push("y".into());
    }
    header.extend((1..=design.n_atoms()).map(|j| format!("h{j}")));
    w.write_record(&header)?;
    for i in 0..design.n_points() {
        let mut row: Vec<String> = design.measure().points()[i].iter().map(|v| v.to_string()).collect();
        row.push(design.measure().weights()[i].to_string());
        if let Some(y) = labels {
            row.push(y[i].to_string());
        }
        row.extend(design.values().row(i).iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_design_csv<R: Read>(input: R, kind: MeasureKind, range: ValueRange) -> Result<DesignFile> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    let pos = |name: &str| header.iter().position(|h| h.trim() == name);
    let weight_col = pos("weight").ok_or_else(|| Error::Malformed("missing `weight` column".into()))?;
    let y_col = pos("y");
    let x_cols: Vec<usize> = (0..weight_col).collect();
    if x_cols.iter().any(|&c| !header[c].trim().starts_with('x')) {
        return Err(Error::Malformed("coordinate columns must precede `weight` and be named x1..xk".into()));
    }
    let h_cols: Vec<usize> = (0..header.len()).filter(|&c| header[c].trim().starts_with('h')).collect();
    if h_cols.is_empty() {
        return Err(Error::Malformed("no dictionary columns h1..hN".into()));
    }
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut labels = Vec::new();
    let mut values = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let num = |c: usize| -> Result<f64> {
            rec.get(c)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::Malformed(format!("row {}: bad number in column {}", line + 2, c + 1)))
        };
        points.push(x_cols.iter().map(|&c| num(c)).collect::<Result<Vec<_>>>()?);
        weights.push(num(weight_col)?);
        if let Some(c) = y_col {
            labels.push(num(c)?);
        }
        for &c in &h_cols {
            values.push(num(c)?);
        }
    }
    if points.is_empty() {
        return Err(Error::Malformed("design file has no rows".into()));
    }
    let n = points.len();
    let measure = MeasureRep::weighted(points, weights, kind)?;
    let values = DMatrix::from_row_slice(n, h_cols.len(), &values);
    let design = DesignMatrix::with_range(values, measure, range)?;
    Ok(DesignFile { design, labels: y_col.map(|_| labels) })
}
