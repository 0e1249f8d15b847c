use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::CliResult;

/// Identifiers of the JSON documents; each names a file under
/// `docs/schemas/`.
pub fn schema_id(kind: &str) -> &'static str {
    match kind {
        "dataset" => "gmwm/dataset/v1",
        "wv" => "gmwm/wv/v1",
        "cluster" => "gmwm/cluster/v1",
        "fit" => "gmwm/fit/v1",
        "ranking" => "gmwm/ranking/v1",
        "auto" => "gmwm/auto/v1",
        "compare" => "gmwm/compare/v1",
        "simulation" => "gmwm/simulation/v1",
        "error" => "gmwm/error/v1",
        other => panic!("no schema for document kind {other}"),
    }
}

/// The `-o` file, or stdout.
pub fn sink(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) if p.as_os_str() != "-" => Box::new(BufWriter::new(File::create(p)?)),
        _ => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

#[derive(Serialize)]
struct Envelope<'a, T> {
    schema: &'a str,
    data: &'a T,
}

pub fn write_json<T: Serialize>(out: &mut dyn Write, kind: &str, data: &T) -> CliResult<()> {
    serde_json::to_writer_pretty(
        &mut *out,
        &Envelope {
            schema: schema_id(kind),
            data,
        },
    )?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}
