//! File formats: the GHK1 grid-function container and the phase-sample blob.
//!
//! GHK1 layout: ASCII header lines
//! `ghk1`, `n=<int>`, `shape=<i0,...>`, `spacing=<f0,...>`, `origin=<f0,...>`,
//! `layout=row-major complex128 little-endian`, one blank line, then the raw
//! binary values (re,im interleaved, 8-byte little-endian floats).

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{GhkError, Result};
use crate::grid::GridFunction;
use crate::phase::PhaseSamples;

const GHK1_MAGIC: &str = "ghk1";
const GHK1_LAYOUT: &str = "row-major complex128 little-endian";

pub fn write_ghk1(f: &GridFunction, w: &mut impl Write) -> Result<()> {
    writeln!(w, "{GHK1_MAGIC}")?;
    writeln!(w, "n={}", f.dim())?;
    writeln!(w, "shape={}", join(f.shape().iter()))?;
    writeln!(w, "spacing={}", join(f.spacing().iter()))?;
    writeln!(w, "origin={}", join(f.origin().iter()))?;
    writeln!(w, "layout={GHK1_LAYOUT}")?;
    writeln!(w)?;
    let mut buf = Vec::with_capacity(f.len() * 16);
    for v in f.values() {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_ghk1(r: &mut impl Read) -> Result<GridFunction> {
    let mut br = BufReader::new(r);
    let magic = read_line(&mut br)?;
    if magic.trim() != GHK1_MAGIC {
        return Err(GhkError::Parse(format!("bad magic line {magic:?}")));
    }
    let n: usize = parse_field(&read_line(&mut br)?, "n")?
        .parse()
        .map_err(|e| GhkError::Parse(format!("n: {e}")))?;
    let shape = parse_list::<usize>(&parse_field(&read_line(&mut br)?, "shape")?)?;
    let spacing = parse_list::<f64>(&parse_field(&read_line(&mut br)?, "spacing")?)?;
    let origin = parse_list::<f64>(&parse_field(&read_line(&mut br)?, "origin")?)?;
    let layout = parse_field(&read_line(&mut br)?, "layout")?;
    if layout != GHK1_LAYOUT {
        return Err(GhkError::Parse(format!("unsupported layout {layout:?}")));
    }
    let blank = read_line(&mut br)?;
    if !blank.trim().is_empty() {
        return Err(GhkError::Parse("expected blank line before binary block".into()));
    }
    if shape.len() != n {
        return Err(GhkError::Parse("shape length does not match n".into()));
    }
    let count: usize = shape.iter().product();
    let mut buf = vec![0u8; count * 16];
    br.read_exact(&mut buf)?;
    let mut values = Vec::with_capacity(count);
    for c in buf.chunks_exact(16) {
        let re = f64::from_le_bytes(c[0..8].try_into().unwrap());
        let im = f64::from_le_bytes(c[8..16].try_into().unwrap());
        values.push(Complex64::new(re, im));
    }
    GridFunction::new(shape, spacing, origin, values)
}

pub fn write_ghk1_file(f: &GridFunction, path: impl AsRef<Path>) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    write_ghk1(f, &mut file)
}

pub fn read_ghk1_file(path: impl AsRef<Path>) -> Result<GridFunction> {
    let mut file = std::fs::File::open(path)?;
    read_ghk1(&mut file)
}

fn join<T: std::fmt::Display>(items: impl Iterator<Item = T>) -> String {
    items.map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn read_line(br: &mut impl BufRead) -> Result<String> {
    let mut line = String::new();
    let n = br.read_line(&mut line)?;
    if n == 0 {
        return Err(GhkError::Parse("unexpected end of header".into()));
    }
    Ok(line.trim_end_matches(['\n', '\r']).to_string())
}

fn parse_field(line: &str, key: &str) -> Result<String> {
    let (k, v) = line
        .split_once('=')
        .ok_or_else(|| GhkError::Parse(format!("expected {key}=..., got {line:?}")))?;
    if k != key {
        return Err(GhkError::Parse(format!("expected field {key}, got {k}")));
    }
    Ok(v.to_string())
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<T>()
                .map_err(|e| GhkError::Parse(format!("list entry {t:?}: {e}")))
        })
        .collect()
}

/// Phase-sample container: one-line JSON header, a blank line, then binary
/// float64 blocks (points row-major, then values).
pub fn write_phase_samples(s: &PhaseSamples, w: &mut impl Write) -> Result<()> {
    let header = serde_json::json!({
        "format": "ghk-phase",
        "n": s.n,
        "center": s.center,
        "radius": s.radius,
        "count": s.len(),
    });
    writeln!(w, "{header}")?;
    writeln!(w)?;
    let mut buf = Vec::with_capacity(s.points.len() * 8 + s.values.len() * 8);
    for x in &s.points {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    for v in &s.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_phase_samples(r: &mut impl Read) -> Result<PhaseSamples> {
    let mut br = BufReader::new(r);
    let header_line = read_line(&mut br)?;
    let header: serde_json::Value = serde_json::from_str(&header_line)?;
    if header["format"] != "ghk-phase" {
        return Err(GhkError::Parse("bad phase-sample header".into()));
    }
    let n = header["n"]
        .as_u64()
        .ok_or_else(|| GhkError::Parse("missing n".into()))? as usize;
    let count = header["count"]
        .as_u64()
        .ok_or_else(|| GhkError::Parse("missing count".into()))? as usize;
    let center: Vec<f64> = serde_json::from_value(header["center"].clone())?;
    let radius = header["radius"]
        .as_f64()
        .ok_or_else(|| GhkError::Parse("missing radius".into()))?;
    let blank = read_line(&mut br)?;
    if !blank.trim().is_empty() {
        return Err(GhkError::Parse("expected blank line before binary block".into()));
    }
    let mut buf = vec![0u8; count * n * 8 + count * 8];
    br.read_exact(&mut buf)?;
    let mut points = Vec::with_capacity(count * n);
    for c in buf[..count * n * 8].chunks_exact(8) {
        points.push(f64::from_le_bytes(c.try_into().unwrap()));
    }
    let mut values = Vec::with_capacity(count);
    for c in buf[count * n * 8..].chunks_exact(8) {
        values.push(f64::from_le_bytes(c.try_into().unwrap()));
    }
    PhaseSamples::new(n, center, radius, points, values)
}

pub fn read_phase_samples_file(path: impl AsRef<Path>) -> Result<PhaseSamples> {
    let mut file = std::fs::File::open(path)?;
    read_phase_samples(&mut file)
}

pub fn write_phase_samples_file(s: &PhaseSamples, path: impl AsRef<Path>) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    write_phase_samples(s, &mut file)
}
