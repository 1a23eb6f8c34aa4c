//! CSV observations: one row per point, one column per coordinate.

use std::io::{Read, Write};
use std::path::Path;

use eclose::Sample;

use crate::error::{CliError, CliResult};

/// Reads a sample. A first row with any non-numeric cell is taken as a
/// header. Blank lines and lines starting with `#` are skipped. An empty
/// file gives an empty one-dimensional sample.
pub fn read_sample<R: Read>(input: R, source: &str) -> CliResult<Sample> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input);
    let mut dim: Option<usize> = None;
    let mut coords = Vec::new();
    let mut first = true;
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Data(format!("{source}: {e}")))?;
        let line = record.position().map_or(0, |p| p.line());
        let parsed: Vec<Option<f64>> = record.iter().map(|c| c.parse::<f64>().ok()).collect();
        if first {
            first = false;
            if parsed.iter().any(Option::is_none) {
                continue;
            }
        }
        let width = *dim.get_or_insert(parsed.len());
        if parsed.len() != width {
            return Err(CliError::Data(format!(
                "{source}: line {line}: expected {width} columns, found {}",
                parsed.len()
            )));
        }
        for (col, (v, raw)) in parsed.iter().zip(record.iter()).enumerate() {
            match v {
                Some(v) if v.is_finite() => coords.push(*v),
                _ => {
                    return Err(CliError::Data(format!(
                        "{source}: line {line}, column {}: {raw:?} is not a finite number",
                        col + 1
                    )))
                }
            }
        }
    }
    match dim {
        None => Ok(Sample::empty(1)),
        Some(d) => Sample::new(d, coords).map_err(|e| CliError::Data(format!("{source}: {e}"))),
    }
}

pub fn read_sample_file(path: &Path) -> CliResult<Sample> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))?;
    read_sample(file, &path.display().to_string())
}

/// Writes a sample with shortest round-trip formatting, no header.
pub fn write_sample<W: Write>(out: W, s: &Sample) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in s.points() {
        w.write_record(p.iter().map(|v| v.to_string()))?;
    }
    w.flush()
}
