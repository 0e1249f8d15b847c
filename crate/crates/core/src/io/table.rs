use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Axis, Channel, SensorDataset, SensorKind, SourceMeta};
use crate::{Error, Result};

/// Column indices are 1-based. Gyro and accel columns map to axes X, Y, Z in
/// the order given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableOptions {
    pub delimiter: u8,
    pub header: bool,
    pub freq: f64,
    pub gyro_cols: Vec<usize>,
    pub accel_cols: Vec<usize>,
    pub time_col: Option<usize>,
}

impl Default for TableOptions {
    fn default() -> Self {
        TableOptions {
            delimiter: b',',
            header: false,
            freq: 1.0,
            gyro_cols: vec![1],
            accel_cols: vec![],
            time_col: None,
        }
    }
}

pub fn read_table(path: &Path, opts: &TableOptions) -> Result<SensorDataset> {
    let f = std::fs::File::open(path)?;
    let mut ds = read_table_from(f, opts)?;
    ds.source.path = Some(path.display().to_string());
    Ok(ds)
}

/// As [`read_table`], from any reader.
pub fn read_table_from<R: Read>(reader: R, opts: &TableOptions) -> Result<SensorDataset> {
    if opts.gyro_cols.len() > 3 || opts.accel_cols.len() > 3 {
        return Err(Error::InvalidArgument("at most three gyro and three accel columns".into()));
    }
    if opts.gyro_cols.is_empty() && opts.accel_cols.is_empty() {
        return Err(Error::InvalidArgument("select at least one gyro or accel column".into()));
    }
    let mut wanted: Vec<usize> = opts.gyro_cols.iter().chain(&opts.accel_cols).cloned().collect();
    wanted.extend(opts.time_col);
    if wanted.contains(&0) {
        return Err(Error::InvalidArgument("column indices start at 1".into()));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(opts.delimiter)
        .has_headers(opts.header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let names: Option<Vec<String>> = if opts.header {
        Some(rdr.headers()?.iter().map(str::to_string).collect())
    } else {
        None
    };
    let mut width = names.as_ref().map(|n| n.len());
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(r + 1, |p| p.line() as usize);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        match width {
            None => width = Some(rec.len()),
            Some(w) if w != rec.len() => {
                return Err(Error::Data(format!("line {line}: {} fields, expected {w} (ragged table)", rec.len())));
            }
            _ => {}
        }
        if cols.is_empty() {
            let w = rec.len();
            if let Some(&bad) = wanted.iter().find(|&&c| c > w) {
                return Err(Error::InvalidArgument(format!("column {bad} out of range: the table has {w} columns")));
            }
            cols = vec![Vec::new(); w];
        }
        for (k, cell) in rec.iter().enumerate() {
            if !wanted.contains(&(k + 1)) {
                continue;
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| Error::Data(format!("line {line}, column {}: `{cell}` is not a number", k + 1)))?;
            if !v.is_finite() {
                return Err(Error::Data(format!("line {line}, column {}: non-finite value", k + 1)));
            }
            cols[k].push(v);
        }
    }
    if cols.is_empty() {
        return Err(Error::Data("table has no data rows".into()));
    }
    let name = |c: usize| names.as_ref().map(|n| n[c - 1].clone());
    let mut channels = Vec::new();
    for (kind, list) in [(SensorKind::Gyro, &opts.gyro_cols), (SensorKind::Accel, &opts.accel_cols)] {
        for (&c, axis) in list.iter().zip(Axis::ALL) {
            channels.push(Channel {
                kind,
                axis,
                name: name(c),
                samples: cols[c - 1].clone(),
            });
        }
    }
    let time = opts.time_col.map(|c| cols[c - 1].clone());
    SensorDataset::new(channels, opts.freq, time, SourceMeta::default())
}
