//! Delimited-text point sets: header `id,x,y,<predictor...>[,response]`.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::pointset::PointSet;
use crate::error::{Error, Result};

pub const RESPONSE_COLUMN: &str = "response";

pub fn read_point_set(path: impl AsRef<Path>) -> Result<PointSet> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: 0,
        message: e.to_string(),
    })?;
    parse_point_set(file, &path.display().to_string())
}

/// Parses a point set. `source` names the input in error messages.
pub fn parse_point_set<R: Read>(reader: R, source: &str) -> Result<PointSet> {
    let err = |line: u64, message: String| Error::Parse {
        path: source.to_string(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| err(1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.len() < 3 || header[0] != "id" || header[1] != "x" || header[2] != "y" {
        return Err(err(1, "header must start with id,x,y".into()));
    }
    let has_response = header.last().is_some_and(|h| h == RESPONSE_COLUMN);
    let predictor_end = if has_response {
        header.len() - 1
    } else {
        header.len()
    };
    let names: Vec<String> = header[3..predictor_end].to_vec();
    if let Some(dup) = names.iter().find(|n| n.as_str() == RESPONSE_COLUMN) {
        return Err(err(1, format!("column '{dup}' must be last")));
    }

    let mut ids = Vec::new();
    let mut coords = Vec::new();
    let mut predictors = Vec::new();
    let mut response = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(err(
                line,
                format!("expected {} fields, found {}", header.len(), record.len()),
            ));
        }
        let id: i64 = record[0]
            .parse()
            .map_err(|_| err(line, format!("invalid id '{}'", &record[0])))?;
        let mut values = Vec::with_capacity(record.len() - 1);
        for (field, name) in record.iter().zip(&header).skip(1) {
            let v: f64 = field
                .parse()
                .map_err(|_| err(line, format!("invalid number '{field}' in column '{name}'")))?;
            if !v.is_finite() {
                return Err(err(line, format!("non-finite value in column '{name}'")));
            }
            values.push(v);
        }
        ids.push(id);
        coords.push([values[0], values[1]]);
        predictors.extend_from_slice(&values[2..predictor_end - 1]);
        if has_response {
            response.push(values[values.len() - 1]);
        }
    }
    if ids.is_empty() {
        return Err(err(1, "no data rows".into()));
    }
    PointSet::new(
        ids,
        coords,
        names,
        predictors,
        has_response.then_some(response),
    )
    .map_err(|e| match e {
        Error::DuplicateId(id) => err(0, format!("duplicate id {id}")),
        other => other,
    })
}

pub fn write_point_set<W: Write>(points: &PointSet, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["id".to_string(), "x".into(), "y".into()];
    header.extend(points.predictor_names().iter().cloned());
    if points.response().is_some() {
        header.push(RESPONSE_COLUMN.into());
    }
    w.write_record(&header)?;
    for i in 0..points.len() {
        let mut row = vec![points.ids()[i].to_string()];
        row.extend(points.coords()[i].iter().map(|v| v.to_string()));
        row.extend(points.predictor_row(i).iter().map(|v| v.to_string()));
        if let Some(r) = points.response() {
            row.push(r[i].to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
