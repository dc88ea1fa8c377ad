//! Point sets as CSV: a header row, one point per line. Planar sets use the
//! columns `x,y`; other dimensions use `x0,x1,...`. An optional trailing
//! `label` column carries integer component labels.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::points::PointSet;

fn coordinate_names(d: usize) -> Vec<String> {
    if d == 2 {
        vec!["x".into(), "y".into()]
    } else {
        (0..d).map(|i| format!("x{i}")).collect()
    }
}

pub fn write_points_csv<W: Write>(out: W, points: &PointSet, labels: Option<&[u8]>) -> Result<()> {
    if let Some(l) = labels {
        if l.len() != points.len() {
            return Err(Error::size(
                format!("{} points", points.len()),
                format!("{} labels", l.len()),
            ));
        }
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = coordinate_names(points.dim());
    if labels.is_some() {
        header.push("label".into());
    }
    w.write_record(&header)?;
    let mut record = Vec::with_capacity(header.len());
    for (i, p) in points.points().enumerate() {
        record.clear();
        record.extend(p.iter().map(|v| v.to_string()));
        if let Some(l) = labels {
            record.push(l[i].to_string());
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a point CSV written by [`write_points_csv`] (or any CSV whose header
/// names numeric columns). A `label` column, if present, is returned
/// separately.
pub fn read_points_csv<R: Read>(input: R) -> Result<(PointSet, Option<Vec<u8>>)> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    let label_col = header.iter().position(|h| h.trim() == "label");
    let d = header.len() - usize::from(label_col.is_some());
    if d == 0 {
        return Err(Error::Parse("CSV has no coordinate columns".into()));
    }
    let mut data = Vec::new();
    let mut labels = label_col.map(|_| Vec::new());
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        for (col, field) in rec.iter().enumerate() {
            let parse_err = || {
                Error::Parse(format!(
                    "row {}, column '{}': cannot parse '{field}'",
                    line + 1,
                    &header[col]
                ))
            };
            if Some(col) == label_col {
                let v: u8 = field.trim().parse().map_err(|_| parse_err())?;
                labels.as_mut().expect("label column").push(v);
            } else {
                let v: f64 = field.trim().parse().map_err(|_| parse_err())?;
                data.push(v);
            }
        }
    }
    if data.is_empty() {
        return Err(Error::Parse("CSV contains no points".into()));
    }
    let k = data.len() / d;
    Ok((PointSet::new(k, d, data)?, labels))
}
