use std::io::{Cursor, Read};
use std::path::Path;

use gmwm::io::{infer_freq, read_imu_binary, read_table_from, Axis, Channel, ChannelSelector, SensorDataset, TableOptions};

use crate::args::{ChannelArg, InputArgs};
use crate::config::Settings;
use crate::error::{CliError, CliResult};

fn from_stdin(path: Option<&Path>) -> bool {
    path.is_none_or(|p| p.as_os_str() == "-")
}

/// Reads the dataset named by the input flags.
pub fn load(args: &InputArgs, s: &Settings) -> CliResult<SensorDataset> {
    let path = args.input.as_deref();
    if let Some(name) = args.imu_type.as_ref().or(s.imu_type.as_ref()) {
        let schema = s.registry.get(name)?;
        let Some(p) = path.filter(|_| !from_stdin(path)) else {
            return Err(CliError::usage("binary logs are read from a file: pass --input"));
        };
        return Ok(read_imu_binary(p, schema, s.freq)?);
    }
    let mut text = String::new();
    match path {
        Some(p) if !from_stdin(path) => {
            text = std::fs::read_to_string(p).map_err(|e| CliError::data(format!("cannot read {}: {e}", p.display())))?;
        }
        _ => {
            std::io::stdin().read_to_string(&mut text)?;
        }
    }
    let delimiter = delimiter(args.delimiter.as_deref(), path, &text)?;
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    let fields: Vec<&str> = first.split(delimiter as char).map(str::trim).collect();
    let header = if args.header {
        true
    } else if args.no_header {
        false
    } else {
        fields.iter().any(|f| f.parse::<f64>().is_err())
    };
    let mut opts = TableOptions {
        delimiter,
        header,
        freq: s.freq.unwrap_or(1.0),
        gyro_cols: args.gyro_cols.clone(),
        accel_cols: args.accel_cols.clone(),
        time_col: args.time_col,
    };
    let mut named_axes = None;
    if opts.gyro_cols.is_empty() && opts.accel_cols.is_empty() {
        let layout = if header { by_names(&fields) } else { None };
        match layout {
            Some(l) => {
                opts.gyro_cols = l.gyro.iter().map(|c| c.0).collect();
                opts.accel_cols = l.accel.iter().map(|c| c.0).collect();
                opts.time_col = opts.time_col.or(l.time);
                named_axes = Some(l.gyro.iter().chain(&l.accel).map(|c| c.1).collect::<Vec<_>>());
            }
            None => by_width(fields.len(), &mut opts)?,
        }
    }
    let mut ds = read_table_from(Cursor::new(text), &opts)?;
    if let Some(axes) = named_axes {
        for (c, a) in ds.channels.iter_mut().zip(axes) {
            c.axis = a;
        }
    }
    if s.freq.is_none() {
        if let Some(t) = &ds.time {
            ds.freq = infer_freq(t)?;
        }
    }
    ds.source.path = path.filter(|_| !from_stdin(path)).map(|p| p.display().to_string());
    Ok(ds)
}

fn delimiter(flag: Option<&str>, path: Option<&Path>, text: &str) -> CliResult<u8> {
    if let Some(d) = flag {
        return match d {
            "tab" | "\\t" => Ok(b'\t'),
            d if d.len() == 1 => Ok(d.as_bytes()[0]),
            _ => Err(CliError::usage(format!("--delimiter takes one character or `tab`, got `{d}`"))),
        };
    }
    let ext = path.and_then(|p| p.extension()).and_then(|e| e.to_str()).unwrap_or("");
    if ext.eq_ignore_ascii_case("tsv") {
        return Ok(b'\t');
    }
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    Ok(if first.contains('\t') && !first.contains(',') {
        b'\t'
    } else if first.contains(';') && !first.contains(',') {
        b';'
    } else {
        b','
    })
}

struct Layout {
    gyro: Vec<(usize, Axis)>,
    accel: Vec<(usize, Axis)>,
    time: Option<usize>,
}

/// Recognizes headers such as `gyro_x`, `AccelZ` or `time`.
fn by_names(fields: &[&str]) -> Option<Layout> {
    let mut l = Layout {
        gyro: Vec::new(),
        accel: Vec::new(),
        time: None,
    };
    for (i, f) in fields.iter().enumerate() {
        let key: String = f.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        if key == "time" || key == "t" {
            l.time = Some(i + 1);
            continue;
        }
        let axis = match key.chars().last() {
            Some('x') => Axis::X,
            Some('y') => Axis::Y,
            Some('z') => Axis::Z,
            _ => continue,
        };
        if key.starts_with("gyro") {
            l.gyro.push((i + 1, axis));
        } else if key.starts_with("acc") {
            l.accel.push((i + 1, axis));
        }
    }
    for list in [&mut l.gyro, &mut l.accel] {
        list.sort_by_key(|c| c.1);
        if list.windows(2).any(|w| w[0].1 == w[1].1) || list.len() > 3 {
            return None;
        }
    }
    (!l.gyro.is_empty() || !l.accel.is_empty()).then_some(l)
}

/// Column roles by table width: one to three gyroscope columns, six
/// sensor columns, or a time column followed by six sensor columns.
fn by_width(width: usize, opts: &mut TableOptions) -> CliResult<()> {
    match width {
        1..=3 => opts.gyro_cols = (1..=width).collect(),
        6 => {
            opts.gyro_cols = vec![1, 2, 3];
            opts.accel_cols = vec![4, 5, 6];
        }
        7 => {
            opts.time_col = opts.time_col.or(Some(1));
            opts.gyro_cols = vec![2, 3, 4];
            opts.accel_cols = vec![5, 6, 7];
        }
        w => {
            return Err(CliError::usage(format!(
                "cannot tell the roles of {w} columns; pass --gyro-cols and --accel-cols"
            )))
        }
    }
    Ok(())
}

/// The channel picked by `--channel`, or the first one.
pub fn pick<'a>(ds: &'a SensorDataset, c: &ChannelArg) -> CliResult<&'a Channel> {
    match &c.channel {
        Some(text) => {
            let sel: ChannelSelector = text.parse()?;
            Ok(ds.select(sel)?)
        }
        None => Ok(&ds.channels[0]),
    }
}

/// Every channel, or only the one picked by `--channel`.
pub fn pick_all<'a>(ds: &'a SensorDataset, c: &ChannelArg) -> CliResult<Vec<&'a Channel>> {
    match &c.channel {
        Some(_) => Ok(vec![pick(ds, c)?]),
        None => Ok(ds.channels.iter().collect()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_names_map_to_axes() {
        let l = by_names(&["time", "gyro_z", "gyro_x", "AccelY"]).unwrap();
        assert_eq!(l.time, Some(1));
        assert_eq!(l.gyro, vec![(3, Axis::X), (2, Axis::Z)]);
        assert_eq!(l.accel, vec![(4, Axis::Y)]);
        assert!(by_names(&["a", "b"]).is_none());
        assert!(by_names(&["gyro_x", "gyrox"]).is_none());
    }

    #[test]
    fn width_layouts() {
        let mut o = TableOptions::default();
        by_width(7, &mut o).unwrap();
        assert_eq!((o.time_col, o.gyro_cols.clone(), o.accel_cols.clone()), (Some(1), vec![2, 3, 4], vec![5, 6, 7]));
        assert!(by_width(5, &mut TableOptions::default()).is_err());
    }

    #[test]
    fn delimiter_sniffing() {
        assert_eq!(delimiter(None, None, "a\tb\n").unwrap(), b'\t');
        assert_eq!(delimiter(None, None, "a;b\n").unwrap(), b';');
        assert_eq!(delimiter(None, None, "1,2\n").unwrap(), b',');
        assert_eq!(delimiter(Some("tab"), None, "1,2").unwrap(), b'\t');
        assert!(delimiter(Some("ab"), None, "").is_err());
    }
}
