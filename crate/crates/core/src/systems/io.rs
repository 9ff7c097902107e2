//! The `WTS1` system file: one ASCII header line, then `N·2^J` little-endian
//! `f64` values, function after function.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::OrthonormalSystem;
use crate::error::{LabError, Result};
use crate::grid::{DyadicGrid, SampledFunction, MAX_LEVEL};

const MAGIC: &str = "WTS1";
const MAX_HEADER: usize = 4096;

fn format_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(LabError::Format(msg.into()))
}

fn opt_float(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:?}"),
        None => "none".to_string(),
    }
}

pub fn write_system(s: &OrthonormalSystem, mut w: impl Write) -> Result<()> {
    writeln!(
        w,
        "{MAGIC} name={} N={} J={} delta={} alpha={} special_first={}",
        s.name(),
        s.len(),
        s.grid().level(),
        opt_float(s.delta),
        opt_float(s.alpha),
        u8::from(s.first_index_special())
    )?;
    let mut buf = Vec::with_capacity(8 * s.grid().cell_count());
    for f in s.functions() {
        buf.clear();
        for v in f.values() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_system(s: &OrthonormalSystem, path: impl AsRef<Path>) -> Result<()> {
    write_system(s, BufWriter::new(File::create(path)?))
}

struct Header {
    name: String,
    n: usize,
    level: u32,
    delta: Option<f64>,
    alpha: Option<f64>,
    special_first: bool,
}

fn parse_header(line: &str) -> Result<Header> {
    let mut parts = line.split(' ');
    if parts.next() != Some(MAGIC) {
        return format_err("missing WTS1 magic");
    }
    let mut fields = std::collections::BTreeMap::new();
    for p in parts {
        let Some((k, v)) = p.split_once('=') else {
            return format_err(format!("header token {p:?} is not key=value"));
        };
        if fields.insert(k, v).is_some() {
            return format_err(format!("duplicate header key {k}"));
        }
    }
    let get = |k: &str| {
        fields
            .get(k)
            .copied()
            .ok_or_else(|| LabError::Format(format!("header lacks {k}")))
    };
    let float = |k: &str| -> Result<Option<f64>> {
        match get(k)? {
            "none" => Ok(None),
            v => match v.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(Some(x)),
                _ => format_err(format!("{k}={v} is not a finite float")),
            },
        }
    };
    let int = |k: &str| -> Result<u64> {
        get(k)?
            .parse::<u64>()
            .map_err(|_| LabError::Format(format!("{k} is not an integer")))
    };
    if fields.len() != 6 {
        return format_err(format!("expected 6 header fields, found {}", fields.len()));
    }
    let level = int("J")?;
    if level > MAX_LEVEL as u64 {
        return format_err(format!("J={level} exceeds {MAX_LEVEL}"));
    }
    let special_first = match get("special_first")? {
        "0" => false,
        "1" => true,
        v => return format_err(format!("special_first={v} is not 0 or 1")),
    };
    Ok(Header {
        name: get("name")?.to_string(),
        n: usize::try_from(int("N")?).map_err(|_| LabError::Format("N too large".into()))?,
        level: level as u32,
        delta: float("delta")?,
        alpha: float("alpha")?,
        special_first,
    })
}

/// Parses a system file. Only the structure is validated; orthonormality is
/// a property reported by [`super::verify_wavelet_type`] and
/// [`OrthonormalSystem::orthonormality_defect`].
pub fn read_system(r: impl Read) -> Result<OrthonormalSystem> {
    let mut r = BufReader::new(r);
    let mut header = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        if r.read(&mut byte)? == 0 {
            return format_err("file ends inside the header");
        }
        if byte[0] == b'\n' {
            break;
        }
        header.push(byte[0]);
        if header.len() > MAX_HEADER {
            return format_err("header line too long");
        }
    }
    let line = std::str::from_utf8(&header).map_err(|_| LabError::Format("header is not UTF-8".into()))?;
    let h = parse_header(line)?;
    let grid = DyadicGrid::new(h.level).map_err(|e| LabError::Format(e.to_string()))?;
    let cells = grid.cell_count();
    let expected = h
        .n
        .checked_mul(cells)
        .and_then(|v| v.checked_mul(8))
        .ok_or_else(|| LabError::Format("N·2^J overflows".into()))?;

    let mut payload = Vec::new();
    r.take(expected as u64 + 1).read_to_end(&mut payload)?;
    if payload.len() != expected {
        return format_err(format!(
            "payload has {} bytes, header declares N·2^J·8 = {expected}",
            payload.len()
        ));
    }
    let mut functions = Vec::with_capacity(h.n);
    for (k, chunk) in payload.chunks_exact(8 * cells.max(1)).take(h.n).enumerate() {
        let values: Vec<f64> = chunk
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return format_err(format!("function {} has non-finite values", k + 1));
        }
        functions.push(SampledFunction::from_raw(grid, values));
    }
    let s = OrthonormalSystem::new(h.name, grid, functions, h.special_first)
        .map_err(|e| LabError::Format(e.to_string()))?;
    Ok(s.with_params(h.delta, h.alpha))
}

pub fn load_system(path: impl AsRef<Path>) -> Result<OrthonormalSystem> {
    read_system(File::open(path)?)
}
