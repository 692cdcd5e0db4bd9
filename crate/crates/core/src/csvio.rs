//! Plain-CSV input and output for matrices, group files, forecast summaries
//! and network edge lists.
//!
//! Numbers are written in the shortest form that parses back to the same
//! `f64`, so write → read → write is byte-stable.

use std::io::{Read, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::forecast::{ForecastResult, Networks};
use crate::harness::csv_err;
use crate::types::GroupPartition;

/// Shortest round-trip representation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// A numeric table with optional column names.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Option<Vec<String>>,
    pub values: DMatrix<f64>,
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input)
}

fn parse_error(line: u64, column: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Reads a numeric CSV. The first row is taken as a header when any of its
/// fields is not a number.
pub fn read_matrix<R: Read>(input: R) -> Result<Table> {
    let mut rdr = reader(input);
    let mut header = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (idx, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(idx as u64 + 1, |p| p.line());
        if idx == 0 && record.iter().any(|f| f.parse::<f64>().is_err()) {
            header = Some(record.iter().map(str::to_string).collect::<Vec<_>>());
            width = Some(record.len());
            continue;
        }
        if let Some(w) = width {
            if record.len() != w {
                return Err(parse_error(
                    line,
                    record.len().min(w) as u64 + 1,
                    format!("expected {w} fields, found {}", record.len()),
                ));
            }
        }
        width = Some(record.len());
        let row = record
            .iter()
            .enumerate()
            .map(|(c, f)| match f.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                Ok(_) => Err(parse_error(line, c as u64 + 1, format!("non-finite value {f:?}"))),
                Err(_) => Err(parse_error(line, c as u64 + 1, format!("not a number: {f:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::InvalidInput("no numeric rows".into()));
    }
    let ncols = rows[0].len();
    Ok(Table {
        header,
        values: DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]),
    })
}

pub fn write_matrix<W: Write>(out: W, m: &DMatrix<f64>, header: Option<&[String]>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if let Some(h) = header {
        if h.len() != m.ncols() {
            return Err(Error::Conformance(format!(
                "{} header names for {} columns",
                h.len(),
                m.ncols()
            )));
        }
        w.write_record(h).map_err(csv_err)?;
    }
    for row in m.row_iter() {
        w.write_record(row.iter().map(|v| fmt_f64(*v))).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `row,column,group` triples (1-based indices, arbitrary integer
/// group labels, optional header) covering every cell of a `p × q`
/// coefficient matrix.
pub fn read_groups<R: Read>(input: R, p: usize, q: usize) -> Result<GroupPartition> {
    let mut rdr = reader(input);
    let mut triples = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(idx as u64 + 1, |p| p.line());
        if idx == 0 && record.get(0).is_some_and(|f| f.parse::<u64>().is_err()) {
            continue;
        }
        if record.len() != 3 {
            return Err(parse_error(
                line,
                1,
                format!("expected row,column,group but found {} fields", record.len()),
            ));
        }
        let field = |c: usize| -> Result<u64> {
            record[c]
                .parse::<u64>()
                .map_err(|_| parse_error(line, c as u64 + 1, format!("not an integer: {:?}", &record[c])))
        };
        let (i, k, g) = (field(0)?, field(1)?, field(2)?);
        if i == 0 || k == 0 {
            return Err(parse_error(
                line,
                if i == 0 { 1 } else { 2 },
                "indices are 1-based",
            ));
        }
        triples.push((i as usize - 1, k as usize - 1, g));
    }
    GroupPartition::from_triples(p, q, &triples)
}

/// Writes `row,column,group` with 1-based indices and group ids.
pub fn write_groups<W: Write>(out: W, partition: &GroupPartition) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["row", "column", "group"]).map_err(csv_err)?;
    for k in 0..partition.q() {
        for i in 0..partition.p() {
            w.write_record([
                (i + 1).to_string(),
                (k + 1).to_string(),
                (partition.group_of(i, k) + 1).to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `estimator,sample,MAFE`, one row per result.
pub fn write_mafe<W: Write>(out: W, results: &[(String, ForecastResult)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["estimator", "sample", "MAFE"]).map_err(csv_err)?;
    for (sample, r) in results {
        w.write_record([r.estimator.clone(), sample.clone(), fmt_f64(r.mafe)])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// `estimator,sample,origin,series,abs_error` for every successful origin.
/// `entries` pairs each result with its sample name and series names.
pub fn write_forecast_errors<W: Write>(
    out: W,
    entries: &[(&str, &[String], &ForecastResult)],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["estimator", "sample", "origin", "series", "abs_error"])
        .map_err(csv_err)?;
    for (sample, names, r) in entries {
        for o in &r.origins {
            let Some(errors) = &o.abs_errors else { continue };
            if errors.len() != names.len() {
                return Err(Error::Conformance(format!(
                    "{} series names for {} forecast errors",
                    names.len(),
                    errors.len()
                )));
            }
            for (name, e) in names.iter().zip(errors) {
                w.write_record([
                    r.estimator.as_str(),
                    sample,
                    &o.origin.to_string(),
                    name,
                    &fmt_f64(*e),
                ])
                .map_err(csv_err)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// `from,to` rows for the lagged effects.
pub fn write_directed_edges<W: Write>(out: W, net: &Networks) -> Result<()> {
    write_edges(out, ["from", "to"], &net.names, &net.directed)
}

/// `node_a,node_b` rows for the contemporaneous interactions.
pub fn write_undirected_edges<W: Write>(out: W, net: &Networks) -> Result<()> {
    write_edges(out, ["node_a", "node_b"], &net.names, &net.undirected)
}

fn write_edges<W: Write>(
    out: W,
    header: [&str; 2],
    names: &[String],
    edges: &[(usize, usize)],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for &(a, b) in edges {
        w.write_record([&names[a], &names[b]]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
