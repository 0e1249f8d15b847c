use std::io::Cursor;

use proptest::prelude::*;

use super::binary::{decode_records, encode_records};
use super::*;

fn synthetic(n: usize) -> SensorDataset {
    let channels = (0..6)
        .map(|i| Channel {
            kind: if i < 3 { SensorKind::Gyro } else { SensorKind::Accel },
            axis: Axis::ALL[i % 3],
            name: None,
            samples: (0..n).map(|t| ((t * 7 + i * 13) % 17) as f64 * 0.125 - 1.0).collect(),
        })
        .collect();
    SensorDataset::new(
        channels,
        100.0,
        Some((0..n).map(|t| t as f64 / 100.0).collect()),
        SourceMeta::default(),
    )
    .unwrap()
}

#[test]
fn binary_round_trip_every_registry_schema() {
    let reg = SchemaRegistry::builtin();
    let ds = synthetic(50);
    for name in REGISTRY_NAMES {
        let schema = reg.get(name).unwrap();
        let bytes = encode_records(&ds, schema).unwrap();
        assert_eq!(bytes.len(), 50 * 56);
        let back = decode_records(&bytes, schema, None).unwrap();
        assert_eq!(back.len(), 50);
        assert!((back.freq - 100.0).abs() < 1e-9);
        for (a, b) in ds.channels.iter().zip(&back.channels) {
            assert_eq!((a.kind, a.axis), (b.kind, b.axis));
            assert!(a.samples.iter().zip(&b.samples).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        assert_eq!(encode_records(&back, schema).unwrap(), bytes);
    }
}

#[test]
fn registry_lookup_and_override() {
    let mut reg = SchemaRegistry::builtin();
    assert!(reg.get("navchip_flt").is_ok());
    assert!(matches!(reg.get("KVH"), Err(Error::InvalidArgument(_))));
    reg.merge_json(
        r#"{"schemas": [
            {"name": "NAVCHIP_INT", "encoding": {"type": "i32", "endian": "big"},
             "scale": [1e-3, 1e-6, 1e-6, 1e-6, 1e-5, 1e-5, 1e-5], "freq": 250},
            {"name": "CUSTOM"}
        ]}"#,
    )
    .unwrap();
    let s = reg.get("NAVCHIP_INT").unwrap();
    assert_eq!(s.record_size(), 28);
    assert_eq!(s.freq, Some(250.0));
    assert_eq!(reg.get("custom").unwrap().record_size(), 56);
    assert_eq!(reg.schemas.len(), 7);
    assert!(reg.merge_json(r#"{"schemas": [{"name": "BAD", "scale": [0, 1, 1, 1, 1, 1, 1]}]}"#).is_err());
}

#[test]
fn integer_schema_applies_scale() {
    let mut s = ImuBinarySchema::new("INT");
    s.encoding = FieldEncoding {
        ty: NumType::I16,
        endian: Endian::Big,
    };
    s.scale = [0.01, 0.5, 0.5, 0.5, 0.25, 0.25, 0.25];
    let mut bytes = Vec::new();
    for rec in [[0i16, 2, 4, 6, 8, 10, 12], [1, -2, -4, -6, -8, -10, -12]] {
        for v in rec {
            bytes.extend_from_slice(&v.to_be_bytes());
        }
    }
    let ds = decode_records(&bytes, &s, None).unwrap();
    assert_eq!(ds.get(SensorKind::Gyro, Axis::X).unwrap().samples, vec![1.0, -1.0]);
    assert_eq!(ds.get(SensorKind::Accel, Axis::Z).unwrap().samples, vec![3.0, -3.0]);
    assert!((ds.freq - 100.0).abs() < 1e-9);
    assert_eq!(encode_records(&ds, &s).unwrap(), bytes);
}

#[test]
fn binary_errors() {
    let s = ImuBinarySchema::new("X");
    assert!(matches!(decode_records(&[0u8; 57], &s, None), Err(Error::Data(_))));
    assert!(matches!(decode_records(&[], &s, None), Err(Error::Data(_))));
    let mut nan = vec![0u8; 56];
    nan[8..16].copy_from_slice(&f64::NAN.to_le_bytes());
    assert!(matches!(decode_records(&nan, &s, Some(1.0)), Err(Error::Data(_))));
    let one = vec![0u8; 56];
    assert!(decode_records(&one, &s, None).is_err());
    assert_eq!(decode_records(&one, &s, Some(5.0)).unwrap().len(), 1);
}

#[test]
fn six_column_csv() {
    let text = "1,2,3,4,5,6\n7,8,9,10,11,12\n";
    let opts = TableOptions {
        freq: 100.0,
        gyro_cols: vec![1, 2, 3],
        accel_cols: vec![4, 5, 6],
        ..TableOptions::default()
    };
    let ds = read_table_from(Cursor::new(text), &opts).unwrap();
    assert_eq!(ds.channels.len(), 6);
    assert_eq!(ds.freq, 100.0);
    assert_eq!(ds.get(SensorKind::Accel, Axis::Y).unwrap().samples, vec![5.0, 11.0]);
    assert_eq!(ds.select("gyro:z".parse().unwrap()).unwrap().samples, vec![3.0, 9.0]);
    assert_eq!(ds.select("4".parse().unwrap()).unwrap().label(), "accel:X");
}

#[test]
fn table_errors() {
    let opts = TableOptions::default();
    assert!(matches!(read_table_from(Cursor::new(""), &opts), Err(Error::Data(_))));
    assert!(matches!(read_table_from(Cursor::new("1,2\n3\n"), &opts), Err(Error::Data(_))));
    assert!(matches!(read_table_from(Cursor::new("1,x\n"), &TableOptions { gyro_cols: vec![2], ..opts.clone() }), Err(Error::Data(_))));
    assert!(matches!(
        read_table_from(Cursor::new("1,2\n"), &TableOptions { gyro_cols: vec![3], ..opts.clone() }),
        Err(Error::InvalidArgument(_))
    ));
    // unselected columns may hold anything
    assert!(read_table_from(Cursor::new("1,x\n"), &opts).is_ok());
    assert!("gyro:W".parse::<ChannelSelector>().is_err());
    assert!("0".parse::<ChannelSelector>().is_err());
}

#[test]
fn tsv_header_names_kept() {
    let text = "wx\twy\tax\n0.5\t1\t2\n1.5\t3\t4\n";
    let opts = TableOptions {
        delimiter: b'\t',
        header: true,
        gyro_cols: vec![1, 2],
        accel_cols: vec![3],
        ..TableOptions::default()
    };
    let ds = read_table_from(Cursor::new(text), &opts).unwrap();
    let names: Vec<_> = ds.channels.iter().map(|c| c.name.clone().unwrap()).collect();
    assert_eq!(names, ["wx", "wy", "ax"]);
}

#[test]
fn dataset_invariants() {
    let mk = |kind, axis, n| Channel {
        kind,
        axis,
        name: None,
        samples: vec![0.0; n],
    };
    let s = SourceMeta::default();
    assert!(SensorDataset::new(vec![mk(SensorKind::Gyro, Axis::X, 3), mk(SensorKind::Gyro, Axis::Y, 4)], 1.0, None, s.clone()).is_err());
    assert!(SensorDataset::new(vec![mk(SensorKind::Gyro, Axis::X, 3), mk(SensorKind::Gyro, Axis::X, 3)], 1.0, None, s.clone()).is_err());
    assert!(SensorDataset::new(vec![mk(SensorKind::Gyro, Axis::X, 3), mk(SensorKind::Accel, Axis::X, 3)], 1.0, None, s.clone()).is_ok());
    assert!(SensorDataset::new(vec![mk(SensorKind::Gyro, Axis::X, 3)], 0.0, None, s).is_err());
}

proptest! {
    #[test]
    fn csv_and_tsv_agree(rows in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 4), 1..30)) {
        let render = |sep: &str| rows.iter().map(|r| r.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(sep)).collect::<Vec<_>>().join("\n");
        let opts = TableOptions { gyro_cols: vec![2, 4], accel_cols: vec![1], ..TableOptions::default() };
        let a = read_table_from(Cursor::new(render(",")), &opts).unwrap();
        let b = read_table_from(Cursor::new(render("\t")), &TableOptions { delimiter: b'\t', ..opts }).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn binary_round_trip_arbitrary(values in prop::collection::vec(prop::num::f64::NORMAL, 7..70), big in any::<bool>()) {
        let n = values.len() / 7;
        let mut s = ImuBinarySchema::new("P");
        if big {
            s.encoding.endian = Endian::Big;
        }
        let mut bytes = Vec::new();
        for v in &values[..n * 7] {
            bytes.extend_from_slice(&if big { v.to_be_bytes() } else { v.to_le_bytes() });
        }
        let ds = decode_records(&bytes, &s, Some(1.0)).unwrap();
        prop_assert_eq!(encode_records(&ds, &s).unwrap(), bytes);
    }
}
