use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Axis, Channel, SensorDataset, SensorKind, SourceMeta};
use crate::{Error, Result};

/// Names of the built-in schemas.
pub const REGISTRY_NAMES: [&str; 6] = ["IMAR", "LN200", "LN200IG", "IXSEA", "NAVCHIP_INT", "NAVCHIP_FLT"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NumType {
    F32,
    F64,
    I16,
    I32,
    I64,
}

impl NumType {
    pub fn width(self) -> usize {
        match self {
            NumType::I16 => 2,
            NumType::F32 | NumType::I32 => 4,
            NumType::F64 | NumType::I64 => 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endian {
    Little,
    Big,
}

/// Encoding shared by the seven fields of a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldEncoding {
    #[serde(rename = "type")]
    pub ty: NumType,
    pub endian: Endian,
}

impl Default for FieldEncoding {
    fn default() -> Self {
        FieldEncoding {
            ty: NumType::F64,
            endian: Endian::Little,
        }
    }
}

/// Fixed-size records of seven fields: time, gyro X/Y/Z, accel X/Y/Z.
/// Stored values are multiplied by `scale[k]` on reading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImuBinarySchema {
    pub name: String,
    #[serde(default)]
    pub encoding: FieldEncoding,
    #[serde(default = "unit_scale")]
    pub scale: [f64; 7],
    /// Sampling frequency; inferred from the time column when absent.
    #[serde(default)]
    pub freq: Option<f64>,
}

fn unit_scale() -> [f64; 7] {
    [1.0; 7]
}

impl ImuBinarySchema {
    /// Default layout: seven little-endian f64 fields, unit scale.
    pub fn new(name: &str) -> Self {
        ImuBinarySchema {
            name: name.to_string(),
            encoding: FieldEncoding::default(),
            scale: unit_scale(),
            freq: None,
        }
    }

    pub fn record_size(&self) -> usize {
        7 * self.encoding.ty.width()
    }

    fn validate(&self) -> Result<()> {
        if self.scale.iter().any(|s| !s.is_finite() || *s == 0.0) {
            return Err(Error::InvalidArgument(format!(
                "schema {}: scale factors must be finite and non-zero",
                self.name
            )));
        }
        if let Some(f) = self.freq {
            if !(f > 0.0 && f.is_finite()) {
                return Err(Error::InvalidArgument(format!("schema {}: frequency must be positive", self.name)));
            }
        }
        Ok(())
    }

    fn decode(&self, b: &[u8]) -> f64 {
        let le = self.encoding.endian == Endian::Little;
        macro_rules! get {
            ($t:ty, $n:expr) => {{
                let a: [u8; $n] = b.try_into().expect("field width");
                (if le { <$t>::from_le_bytes(a) } else { <$t>::from_be_bytes(a) }) as f64
            }};
        }
        match self.encoding.ty {
            NumType::F32 => get!(f32, 4),
            NumType::F64 => get!(f64, 8),
            NumType::I16 => get!(i16, 2),
            NumType::I32 => get!(i32, 4),
            NumType::I64 => get!(i64, 8),
        }
    }

    fn encode(&self, v: f64, out: &mut Vec<u8>) -> Result<()> {
        let le = self.encoding.endian == Endian::Little;
        macro_rules! put {
            ($x:expr) => {{
                let x = $x;
                out.extend_from_slice(&if le { x.to_le_bytes() } else { x.to_be_bytes() });
            }};
        }
        macro_rules! int {
            ($t:ty) => {{
                let r = v.round();
                if !(r >= <$t>::MIN as f64 && r <= <$t>::MAX as f64) {
                    return Err(Error::Data(format!("{v} does not fit the {} field of schema {}", stringify!($t), self.name)));
                }
                put!(r as $t)
            }};
        }
        match self.encoding.ty {
            NumType::F32 => put!(v as f32),
            NumType::F64 => put!(v),
            NumType::I16 => int!(i16),
            NumType::I32 => int!(i32),
            NumType::I64 => int!(i64),
        }
        Ok(())
    }
}

/// Named schemas: the built-in entries, optionally overridden from a JSON
/// configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaRegistry {
    pub schemas: Vec<ImuBinarySchema>,
}

impl SchemaRegistry {
    /// The built-in IMU types. Their true scale factors are not published,
    /// so every entry ships with unit scale and the default encoding;
    /// override them with [`SchemaRegistry::merge_json`].
    pub fn builtin() -> Self {
        SchemaRegistry {
            schemas: REGISTRY_NAMES.iter().map(|n| ImuBinarySchema::new(n)).collect(),
        }
    }

    /// Adds the schemas of a `{"schemas": [...]}` document, replacing
    /// entries of the same name (case-insensitive).
    pub fn merge_json(&mut self, text: &str) -> Result<()> {
        let extra: SchemaRegistry = serde_json::from_str(text)?;
        for s in extra.schemas {
            s.validate()?;
            match self.schemas.iter_mut().find(|o| o.name.eq_ignore_ascii_case(&s.name)) {
                Some(o) => *o = s,
                None => self.schemas.push(s),
            }
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&ImuBinarySchema> {
        self.schemas
            .iter()
            .find(|s| s.name.eq_ignore_ascii_case(name))
            .ok_or_else(|| {
                let known: Vec<&str> = self.schemas.iter().map(|s| s.name.as_str()).collect();
                Error::InvalidArgument(format!("unknown IMU type `{name}`; known types: {}", known.join(", ")))
            })
    }
}

/// Decodes a whole binary file. `freq` overrides the schema frequency;
/// without either, it is the inverse of the median time step.
pub fn read_imu_binary(path: &Path, schema: &ImuBinarySchema, freq: Option<f64>) -> Result<SensorDataset> {
    let bytes = std::fs::read(path)?;
    let mut ds = decode_records(&bytes, schema, freq)?;
    ds.source.path = Some(path.display().to_string());
    Ok(ds)
}

pub(crate) fn decode_records(bytes: &[u8], schema: &ImuBinarySchema, freq: Option<f64>) -> Result<SensorDataset> {
    schema.validate()?;
    let rec = schema.record_size();
    if bytes.is_empty() {
        return Err(Error::Data("binary file is empty".into()));
    }
    if bytes.len() % rec != 0 {
        return Err(Error::Data(format!(
            "binary file of {} bytes is not a whole number of {rec}-byte records (truncated?)",
            bytes.len()
        )));
    }
    let n = bytes.len() / rec;
    let w = schema.encoding.ty.width();
    let mut cols = vec![Vec::with_capacity(n); 7];
    for (r, record) in bytes.chunks_exact(rec).enumerate() {
        for (k, col) in cols.iter_mut().enumerate() {
            let v = schema.decode(&record[k * w..(k + 1) * w]) * schema.scale[k];
            if !v.is_finite() {
                return Err(Error::Data(format!("record {r}, field {}: non-finite value after scaling", k + 1)));
            }
            col.push(v);
        }
    }
    let time = cols.remove(0);
    let freq = match freq.or(schema.freq) {
        Some(f) => f,
        None => infer_freq(&time)?,
    };
    let mut channels = Vec::with_capacity(6);
    for (i, samples) in cols.into_iter().enumerate() {
        channels.push(Channel {
            kind: if i < 3 { SensorKind::Gyro } else { SensorKind::Accel },
            axis: Axis::ALL[i % 3],
            name: None,
            samples,
        });
    }
    SensorDataset::new(
        channels,
        freq,
        Some(time),
        SourceMeta {
            path: None,
            imu_type: Some(schema.name.clone()),
        },
    )
}

/// Inverse of the median step of a time column.
pub fn infer_freq(time: &[f64]) -> Result<f64> {
    let mut dt: Vec<f64> = time.windows(2).map(|w| w[1] - w[0]).collect();
    if dt.is_empty() {
        return Err(Error::Data("cannot infer the frequency from a single record; pass it explicitly".into()));
    }
    dt.sort_by(f64::total_cmp);
    let med = dt[dt.len() / 2];
    if !(med > 0.0) {
        return Err(Error::Data("time column is not increasing; pass the frequency explicitly".into()));
    }
    Ok(1.0 / med)
}

/// Encodes a dataset with all six gyro/accel channels. Values are divided
/// by the schema scale factors; a missing time column is written as
/// `i / freq`.
pub fn write_imu_binary(path: &Path, ds: &SensorDataset, schema: &ImuBinarySchema) -> Result<()> {
    std::fs::write(path, encode_records(ds, schema)?)?;
    Ok(())
}

pub(crate) fn encode_records(ds: &SensorDataset, schema: &ImuBinarySchema) -> Result<Vec<u8>> {
    schema.validate()?;
    let mut cols: Vec<&[f64]> = Vec::with_capacity(6);
    for kind in [SensorKind::Gyro, SensorKind::Accel] {
        for axis in Axis::ALL {
            let c = ds
                .get(kind, axis)
                .ok_or_else(|| Error::Data(format!("the binary format needs a {kind}:{axis} channel")))?;
            cols.push(&c.samples);
        }
    }
    let n = ds.len();
    let mut out = Vec::with_capacity(n * schema.record_size());
    for i in 0..n {
        let t = ds.time.as_ref().map_or(i as f64 / ds.freq, |t| t[i]);
        schema.encode(t / schema.scale[0], &mut out)?;
        for (k, c) in cols.iter().enumerate() {
            schema.encode(c[i] / schema.scale[k + 1], &mut out)?;
        }
    }
    Ok(out)
}
