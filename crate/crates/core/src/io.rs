//! On-disk formats.
//!
//! * field snapshot: one JSON header line, then row-major little-endian `f64` values
//! * contour: CSV (`chain,index,x0,x1`, blank line between chains) or JSON
//! * time series: CSV with a header row
//! * reports: pretty-printed JSON

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levelsets::Contour;
use crate::manifold::grid::ChartGrid;
use crate::solver::{Checkpoint, LevelSetField};

pub const FIELD_FORMAT: &str = "riemflow-field";
pub const FIELD_VERSION: u32 = 1;
pub const CONTOUR_FORMAT: &str = "riemflow-contour";
pub const CONTOUR_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FieldHeader {
    format: String,
    version: u32,
    extents: [[f64; 2]; 2],
    resolution: [usize; 2],
    periodic: [bool; 2],
    time: f64,
    endianness: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    step: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    initial_max: Option<f64>,
}

fn encode(field: &LevelSetField, step: Option<usize>, initial_max: Option<f64>) -> Result<Vec<u8>> {
    let g = &field.grid;
    let header = FieldHeader {
        format: FIELD_FORMAT.into(),
        version: FIELD_VERSION,
        extents: g.extents(),
        resolution: g.resolution(),
        periodic: g.periodic(),
        time: field.time,
        endianness: "little".into(),
        step,
        initial_max,
    };
    let mut buf = serde_json::to_vec(&header).map_err(|e| Error::Format { offset: 0, message: e.to_string() })?;
    buf.push(b'\n');
    buf.reserve(8 * field.values.len());
    for v in &field.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    Ok(buf)
}

fn decode(bytes: &[u8]) -> Result<(LevelSetField, FieldHeader)> {
    let nl = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| Error::Format {
        offset: bytes.len() as u64,
        message: "header line is not terminated".into(),
    })?;
    let header: FieldHeader = serde_json::from_slice(&bytes[..nl]).map_err(|e| Error::Format {
        offset: e.column().saturating_sub(1) as u64,
        message: format!("bad header: {e}"),
    })?;
    if header.format != FIELD_FORMAT {
        return Err(Error::Format { offset: 0, message: format!("expected format {FIELD_FORMAT}, found {}", header.format) });
    }
    if header.version != FIELD_VERSION {
        return Err(Error::Format {
            offset: 0,
            message: format!("unsupported version: expected {FIELD_VERSION}, found {}", header.version),
        });
    }
    if header.endianness != "little" {
        return Err(Error::Format { offset: 0, message: format!("unsupported endianness {}", header.endianness) });
    }
    let grid = ChartGrid::new(header.extents, header.resolution, header.periodic)
        .map_err(|e| Error::Format { offset: 0, message: e.to_string() })?;
    let start = nl + 1;
    let payload = &bytes[start..];
    let expect = 8 * grid.len();
    if payload.len() != expect {
        return Err(Error::Format {
            offset: (start + payload.len().min(expect)) as u64,
            message: format!("expected {expect} payload bytes, found {}", payload.len()),
        });
    }
    let values: Vec<f64> = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    if let Some(k) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Format { offset: (start + 8 * k) as u64, message: "non-finite value".into() });
    }
    let time = header.time;
    Ok((LevelSetField { grid, values, time }, header))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_snapshot(field: &LevelSetField, path: &Path) -> Result<()> {
    write_atomic(path, &encode(field, None, None)?)
}

pub fn read_snapshot(path: &Path) -> Result<LevelSetField> {
    Ok(decode(&fs::read(path)?)?.0)
}

pub fn write_checkpoint(cp: &Checkpoint, path: &Path) -> Result<()> {
    write_atomic(path, &encode(&cp.field, Some(cp.steps), Some(cp.initial_max))?)
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let (field, header) = decode(&fs::read(path)?)?;
    let (Some(steps), Some(initial_max)) = (header.step, header.initial_max) else {
        return Err(Error::Format { offset: 0, message: "snapshot carries no checkpoint state".into() });
    };
    Ok(Checkpoint { field, steps, initial_max })
}

pub fn contour_csv(c: &Contour) -> String {
    let mut s = String::from("chain,index,x0,x1\n");
    for (k, ch) in c.chains.iter().enumerate() {
        if k > 0 {
            s.push('\n');
        }
        for (i, p) in ch.points.iter().enumerate() {
            s.push_str(&format!("{k},{i},{},{}\n", p[0], p[1]));
        }
    }
    s
}

#[derive(Serialize)]
struct ContourDoc<'a> {
    format: &'static str,
    version: u32,
    level: f64,
    source_time: f64,
    chains: &'a [crate::levelsets::Chain],
}

pub fn contour_json(c: &Contour) -> Result<String> {
    let doc = ContourDoc {
        format: CONTOUR_FORMAT,
        version: CONTOUR_VERSION,
        level: c.level,
        source_time: c.source_time,
        chains: &c.chains,
    };
    serde_json::to_string_pretty(&doc).map_err(|e| Error::Io(e.to_string()))
}

pub fn write_contour(c: &Contour, csv_path: &Path, json_path: &Path) -> Result<()> {
    write_atomic(csv_path, contour_csv(c).as_bytes())?;
    write_atomic(json_path, contour_json(c)?.as_bytes())
}

pub fn series_csv(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        let line: Vec<String> = r.iter().map(|v| v.to_string()).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

pub fn write_series(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    write_atomic(path, series_csv(header, rows).as_bytes())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let s = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    write_atomic(path, s.as_bytes())
}
