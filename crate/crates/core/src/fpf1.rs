//! FPF1 field dumps.
//!
//! A dump is a pair of files: a text header `<name>.fpf1` and a sibling
//! `<name>.bin` holding `value_count` little-endian IEEE-754 doubles in
//! row-major order. The header is a magic line followed by `key = value`
//! lines:
//!
//! ```text
//! FPF1
//! dim = 2
//! extents = 401 401
//! origin = -4 -4
//! spacing = 0.02
//! time = 0
//! value_count = 160801
//! data = u_0000.bin
//! sentinel = 1e300
//! ```
//!
//! `sentinel` is optional. When present, every stored value equal to it reads
//! back as `+inf` (used by partial fields such as arrival times).

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const MAGIC: &str = "FPF1";

/// Stored in place of `+inf` when a field has unreached cells.
pub const INFINITY_SENTINEL: f64 = 1e300;

/// Header contents of an FPF1 dump.
#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub grid: Grid,
    pub time: f64,
    pub value_count: usize,
    pub data_file: String,
    pub sentinel: Option<f64>,
}

/// Writes `field` as `<stem>.fpf1` + `<stem>.bin` inside `dir`. Returns the
/// header path.
pub fn write_field(dir: &Path, stem: &str, field: &ScalarField) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let has_inf = field.values().iter().any(|&v| v.is_infinite() || v == INFINITY_SENTINEL);
    let data_file = format!("{stem}.bin");
    let g = field.grid();
    let mut header = String::new();
    header.push_str(MAGIC);
    header.push('\n');
    header.push_str(&format!("dim = {}\n", g.dim()));
    let dims = g.dim();
    header.push_str(&format!(
        "extents = {}\n",
        join(g.extents()[..dims].iter().map(|e| e.to_string()))
    ));
    header.push_str(&format!("origin = {}\n", join(g.origin()[..dims].iter().map(|o| fmt_f64(*o)))));
    header.push_str(&format!("spacing = {}\n", fmt_f64(g.spacing())));
    header.push_str(&format!("time = {}\n", fmt_f64(field.time())));
    header.push_str(&format!("value_count = {}\n", field.values().len()));
    header.push_str(&format!("data = {data_file}\n"));
    if has_inf {
        header.push_str(&format!("sentinel = {}\n", fmt_f64(INFINITY_SENTINEL)));
    }
    let header_path = dir.join(format!("{stem}.fpf1"));
    fs::write(&header_path, header)?;

    let mut bytes = Vec::with_capacity(field.values().len() * 8);
    for &v in field.values() {
        let v = if v == f64::INFINITY { INFINITY_SENTINEL } else { v };
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let mut f = fs::File::create(dir.join(&data_file))?;
    f.write_all(&bytes)?;
    Ok(header_path)
}

pub fn read_header(path: &Path) -> Result<Header> {
    let text = fs::read_to_string(path)?;
    let fail = |msg: String| Error::Format { path: path.to_path_buf(), msg };
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(MAGIC) {
        return Err(fail("missing FPF1 magic line".into()));
    }
    let mut kv = BTreeMap::new();
    for line in lines {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| fail(format!("malformed line `{line}`")))?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    let get = |k: &str| kv.get(k).ok_or_else(|| fail(format!("missing key `{k}`")));
    let nums = |k: &str| -> Result<Vec<f64>> {
        get(k)?
            .split_whitespace()
            .map(|s| s.parse::<f64>().map_err(|e| fail(format!("{k}: {e}"))))
            .collect()
    };
    let dim: usize = get("dim")?.parse().map_err(|e| fail(format!("dim: {e}")))?;
    let extents: Vec<usize> = get("extents")?
        .split_whitespace()
        .map(|s| s.parse::<usize>().map_err(|e| fail(format!("extents: {e}"))))
        .collect::<Result<_>>()?;
    let origin = nums("origin")?;
    if extents.len() != dim || origin.len() != dim {
        return Err(fail(format!("extents/origin must have {dim} entries")));
    }
    let spacing = nums("spacing")?.first().copied().ok_or_else(|| fail("empty spacing".into()))?;
    let time = nums("time")?.first().copied().ok_or_else(|| fail("empty time".into()))?;
    let value_count: usize =
        get("value_count")?.parse().map_err(|e| fail(format!("value_count: {e}")))?;
    let data_file = get("data")?.clone();
    let sentinel = match kv.get("sentinel") {
        Some(s) => Some(s.parse::<f64>().map_err(|e| fail(format!("sentinel: {e}")))?),
        None => None,
    };
    let grid = Grid::new(
        dim,
        [origin[0], origin.get(1).copied().unwrap_or(0.0)],
        spacing,
        [extents[0], extents.get(1).copied().unwrap_or(1)],
    )
    .map_err(|e| fail(e.to_string()))?;
    if grid.len() != value_count {
        return Err(fail(format!("value_count {value_count} does not match extents")));
    }
    Ok(Header { grid, time, value_count, data_file, sentinel })
}

pub fn read_field(path: &Path) -> Result<ScalarField> {
    let header = read_header(path)?;
    let data_path = path.parent().unwrap_or(Path::new(".")).join(&header.data_file);
    let bytes = fs::read(&data_path)?;
    if bytes.len() != header.value_count * 8 {
        return Err(Error::Format {
            path: data_path,
            msg: format!("expected {} bytes, found {}", header.value_count * 8, bytes.len()),
        });
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| {
            let v = f64::from_le_bytes(c.try_into().expect("chunk of 8"));
            match header.sentinel {
                Some(s) if v == s => f64::INFINITY,
                _ => v,
            }
        })
        .collect();
    if let Some(i) = values.iter().position(|v| v.is_nan()) {
        return Err(Error::NonFinite(i));
    }
    Ok(ScalarField::from_raw(header.grid, values, header.time))
}

fn join(items: impl Iterator<Item = String>) -> String {
    items.collect::<Vec<_>>().join(" ")
}

/// Shortest representation that parses back to the same double.
fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}
