//! `tf2d` and `sino2d` containers: one JSON header line followed by a
//! little-endian f64 payload.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use tensoray::grid::CartesianGrid;
use tensoray::ray::Sinogram;
use tensoray::tensor::TensorField2D;

use crate::error::{CliError, CliResult};

pub const FIELD_FORMAT: &str = "tf2d";
pub const SINOGRAM_FORMAT: &str = "sino2d";
const VERSION: u32 = 1;
const DTYPE: &str = "f64le";
const FIELD_LAYOUT: &str = "row-major, components outermost";

#[derive(Debug, Serialize, Deserialize)]
struct FieldHeader {
    format: String,
    version: u32,
    m: usize,
    n: usize,
    radius: f64,
    dtype: String,
    layout: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct SinogramHeader {
    format: String,
    version: u32,
    m: usize,
    np: usize,
    ntheta: usize,
    pmax: f64,
    dtype: String,
}

/// Contents of a container file.
#[derive(Debug)]
pub enum Container {
    Field(TensorField2D),
    Sinogram(Sinogram),
}

impl Container {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Field(_) => FIELD_FORMAT,
            Self::Sinogram(_) => SINOGRAM_FORMAT,
        }
    }
}

fn malformed(path: &Path, offset: usize, reason: impl Into<String>) -> CliError {
    CliError::Format { path: path.to_path_buf(), offset, reason: reason.into() }
}

fn io_error(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io { path: path.to_path_buf(), source }
}

/// Parses a container from raw bytes; `path` is used for messages only.
pub fn parse(path: &Path, bytes: &[u8]) -> CliResult<Container> {
    let end = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| malformed(path, bytes.len(), "header line is not terminated by a newline"))?;
    let line = &bytes[..end];
    let value: Value = serde_json::from_slice(line).map_err(|e| {
        // Single-line header: the column is the byte position within it.
        let offset = if e.column() == 0 { line.len() } else { e.column() - 1 };
        malformed(path, offset.min(line.len()), format!("invalid JSON header: {e}"))
    })?;
    let format = value.get("format").and_then(Value::as_str).unwrap_or_default().to_string();
    let payload = &bytes[end + 1..];
    let start = end + 1;
    match format.as_str() {
        FIELD_FORMAT => {
            let h: FieldHeader = serde_json::from_value(value)
                .map_err(|e| malformed(path, 0, format!("invalid {FIELD_FORMAT} header: {e}")))?;
            check_common(path, h.version, &h.dtype)?;
            if h.layout != FIELD_LAYOUT {
                return Err(malformed(path, 0, format!("unsupported layout {:?}", h.layout)));
            }
            let len = (h.m + 1) * h.n * h.n;
            let values = decode(path, payload, start, len)?;
            let grid = CartesianGrid::new(h.n, h.radius)?;
            let components = values.chunks(h.n * h.n).map(<[f64]>::to_vec).collect();
            Ok(Container::Field(TensorField2D::new(h.m, grid, components)?))
        }
        SINOGRAM_FORMAT => {
            let h: SinogramHeader = serde_json::from_value(value)
                .map_err(|e| malformed(path, 0, format!("invalid {SINOGRAM_FORMAT} header: {e}")))?;
            check_common(path, h.version, &h.dtype)?;
            let values = decode(path, payload, start, h.np * h.ntheta)?;
            Ok(Container::Sinogram(Sinogram::new(h.m, h.np, h.ntheta, h.pmax, values)?))
        }
        other => Err(malformed(path, 0, format!("unknown format {other:?}"))),
    }
}

fn check_common(path: &Path, version: u32, dtype: &str) -> CliResult<()> {
    if version != VERSION {
        return Err(malformed(path, 0, format!("unsupported version {version}")));
    }
    if dtype != DTYPE {
        return Err(malformed(path, 0, format!("unsupported dtype {dtype:?}")));
    }
    Ok(())
}

fn decode(path: &Path, payload: &[u8], start: usize, count: usize) -> CliResult<Vec<f64>> {
    let expected = count * 8;
    if payload.len() != expected {
        return Err(malformed(
            path,
            start + payload.len().min(expected),
            format!("payload holds {} bytes, header implies {expected}", payload.len()),
        ));
    }
    payload
        .chunks_exact(8)
        .enumerate()
        .map(|(i, c)| {
            let v = f64::from_le_bytes(c.try_into().expect("8-byte chunk"));
            if v.is_finite() {
                Ok(v)
            } else {
                Err(malformed(path, start + 8 * i, "non-finite value"))
            }
        })
        .collect()
}

pub fn read(path: &Path) -> CliResult<Container> {
    let bytes = fs::read(path).map_err(|e| io_error(path, e))?;
    parse(path, &bytes)
}

pub fn encode_field(f: &TensorField2D) -> Vec<u8> {
    let header = FieldHeader {
        format: FIELD_FORMAT.into(),
        version: VERSION,
        m: f.rank(),
        n: f.grid().n(),
        radius: f.grid().radius(),
        dtype: DTYPE.into(),
        layout: FIELD_LAYOUT.into(),
    };
    let values = f.components().iter().flatten();
    encode(&serde_json::to_string(&header).expect("header serializes"), values)
}

pub fn encode_sinogram(psi: &Sinogram) -> Vec<u8> {
    let header = SinogramHeader {
        format: SINOGRAM_FORMAT.into(),
        version: VERSION,
        m: psi.rank(),
        np: psi.np(),
        ntheta: psi.ntheta(),
        pmax: psi.pmax(),
        dtype: DTYPE.into(),
    };
    encode(&serde_json::to_string(&header).expect("header serializes"), psi.samples().iter())
}

fn encode<'a>(header: &str, values: impl Iterator<Item = &'a f64>) -> Vec<u8> {
    let mut out = Vec::from(header.as_bytes());
    out.push(b'\n');
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn write(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| io_error(path, e))
}

/// CSV with 17 significant digits: `p,theta,psi` for sinograms and
/// `x,y,j,f_j` for fields.
pub fn to_csv(container: &Container) -> String {
    let mut out = String::new();
    match container {
        Container::Sinogram(psi) => {
            out.push_str("p,theta,psi\n");
            for i in 0..psi.np() {
                for j in 0..psi.ntheta() {
                    out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", psi.p(i), psi.theta(j), psi.get(i, j)));
                }
            }
        }
        Container::Field(f) => {
            out.push_str("x,y,j,f_j\n");
            let g = f.grid();
            let n = g.n();
            for (j, comp) in f.components().iter().enumerate() {
                for (idx, v) in comp.iter().enumerate() {
                    let (x, y) = (g.coord(idx / n), g.coord(idx % n));
                    out.push_str(&format!("{x:.16e},{y:.16e},{j},{v:.16e}\n"));
                }
            }
        }
    }
    out
}
