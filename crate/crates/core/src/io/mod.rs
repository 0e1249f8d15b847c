//! Sensor datasets: the seven-column binary IMU record format and
//! delimited text tables.

mod binary;
mod table;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::wv::fmt_num;
use crate::{Error, Result};

pub use binary::{infer_freq, read_imu_binary, write_imu_binary, Endian, FieldEncoding, ImuBinarySchema, NumType, SchemaRegistry, REGISTRY_NAMES};
pub use table::{read_table, read_table_from, TableOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensorKind {
    Gyro,
    Accel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];
}

impl fmt::Display for SensorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SensorKind::Gyro => "gyro",
            SensorKind::Accel => "accel",
        })
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "X",
            Axis::Y => "Y",
            Axis::Z => "Z",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub kind: SensorKind,
    pub axis: Axis,
    /// Column header of a text table, when there was one.
    pub name: Option<String>,
    pub samples: Vec<f64>,
}

impl Channel {
    /// `gyro:X` style label.
    pub fn label(&self) -> String {
        format!("{}:{}", self.kind, self.axis)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SourceMeta {
    pub path: Option<String>,
    pub imu_type: Option<String>,
}

/// Equal-length sensor channels sampled at `freq` Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorDataset {
    pub channels: Vec<Channel>,
    pub freq: f64,
    pub time: Option<Vec<f64>>,
    pub source: SourceMeta,
}

/// A channel reference: `gyro:Y`, `accel:x`, or a 1-based channel index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelSelector {
    Label(SensorKind, Axis),
    Index(usize),
}

impl FromStr for ChannelSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Ok(i) = s.parse::<usize>() {
            if i == 0 {
                return Err(Error::InvalidArgument("channel indices start at 1".into()));
            }
            return Ok(ChannelSelector::Index(i));
        }
        let bad = || Error::InvalidArgument(format!("channel `{s}` is neither kind:axis (e.g. gyro:Y) nor an index"));
        let (kind, axis) = s.split_once(':').ok_or_else(bad)?;
        let kind = match kind.to_ascii_lowercase().as_str() {
            "gyro" | "gyroscope" => SensorKind::Gyro,
            "accel" | "acc" | "accelerometer" => SensorKind::Accel,
            _ => return Err(bad()),
        };
        let axis = match axis.to_ascii_uppercase().as_str() {
            "X" => Axis::X,
            "Y" => Axis::Y,
            "Z" => Axis::Z,
            _ => return Err(bad()),
        };
        Ok(ChannelSelector::Label(kind, axis))
    }
}

impl SensorDataset {
    /// Checks the dataset invariants.
    pub fn new(channels: Vec<Channel>, freq: f64, time: Option<Vec<f64>>, source: SourceMeta) -> Result<Self> {
        if !(freq > 0.0 && freq.is_finite()) {
            return Err(Error::InvalidArgument(format!("frequency must be positive, got {freq}")));
        }
        if channels.is_empty() {
            return Err(Error::Data("dataset has no channels".into()));
        }
        let len = channels[0].samples.len();
        if len == 0 {
            return Err(Error::Data("dataset has no samples".into()));
        }
        for (i, c) in channels.iter().enumerate() {
            if c.samples.len() != len {
                return Err(Error::Data(format!(
                    "channel {} has {} samples, expected {len}",
                    c.label(),
                    c.samples.len()
                )));
            }
            if channels[..i].iter().any(|o| o.kind == c.kind && o.axis == c.axis) {
                return Err(Error::Data(format!("channel {} appears twice", c.label())));
            }
        }
        if let Some(t) = &time {
            if t.len() != len {
                return Err(Error::Data(format!("time column has {} samples, expected {len}", t.len())));
            }
        }
        Ok(SensorDataset {
            channels,
            freq,
            time,
            source,
        })
    }

    pub fn len(&self) -> usize {
        self.channels[0].samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, kind: SensorKind, axis: Axis) -> Option<&Channel> {
        self.channels.iter().find(|c| c.kind == kind && c.axis == axis)
    }

    pub fn select(&self, sel: ChannelSelector) -> Result<&Channel> {
        match sel {
            ChannelSelector::Label(k, a) => self
                .get(k, a)
                .ok_or_else(|| Error::Data(format!("dataset has no {k}:{a} channel"))),
            ChannelSelector::Index(i) => self.channels.get(i - 1).ok_or_else(|| {
                Error::Data(format!("channel index {i} out of range (dataset has {})", self.channels.len()))
            }),
        }
    }

    /// RFC 4180 CSV with a header row: the time column (when present)
    /// followed by one column per channel labelled `kind:axis`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = Vec::new();
        if self.time.is_some() {
            header.push("time".into());
        }
        header.extend(self.channels.iter().map(|c| c.label()));
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut row: Vec<String> = Vec::with_capacity(header.len());
            if let Some(t) = &self.time {
                row.push(fmt_num(t[i]));
            }
            row.extend(self.channels.iter().map(|c| fmt_num(c.samples[i])));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests;
