//! Reading and writing [`SignalGrid`] files.
//!
//! CSV: the first line is `M,N`, followed by M lines of N comma-separated
//! decimal values.
//!
//! Binary (little endian): the 4-byte magic `C2DG`, a `u32` format version
//! (currently 1), `u64` M, `u64` N, then M·N `f64` values in row-major order.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::SignalGrid;

pub const BINARY_MAGIC: &[u8; 4] = b"C2DG";
pub const BINARY_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridFormat {
    Csv,
    Binary,
}

impl GridFormat {
    /// `.csv` selects CSV; anything else is binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => GridFormat::Csv,
            _ => GridFormat::Binary,
        }
    }
}

pub fn write_csv<W: Write>(grid: &SignalGrid, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{},{}", grid.rows(), grid.cols())?;
    for m in 1..=grid.rows() {
        let line = grid
            .row(m)
            .iter()
            .map(|v| format!("{v:?}"))
            .collect::<Vec<_>>()
            .join(",");
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<SignalGrid> {
    let mut lines = BufReader::new(input).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty CSV".into()))?
        .map_err(|e| Error::Parse(e.to_string()))?;
    let (rows, cols) = parse_header(&header)?;
    let mut values = Vec::with_capacity(rows * cols);
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::Parse(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let before = values.len();
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::Parse(format!("line {}: bad value {field:?}", i + 2))
            })?;
            values.push(v);
        }
        if values.len() - before != cols {
            return Err(Error::Parse(format!(
                "line {}: expected {cols} values, found {}",
                i + 2,
                values.len() - before
            )));
        }
    }
    SignalGrid::from_vec(rows, cols, values)
}

fn parse_header(line: &str) -> Result<(usize, usize)> {
    let mut it = line.split(',').map(|s| s.trim().parse::<usize>());
    match (it.next(), it.next(), it.next()) {
        (Some(Ok(m)), Some(Ok(n)), None) => Ok((m, n)),
        _ => Err(Error::Parse(format!("bad header {line:?}, expected \"M,N\""))),
    }
}

pub fn write_binary<W: Write>(grid: &SignalGrid, mut out: W) -> std::io::Result<()> {
    out.write_all(BINARY_MAGIC)?;
    out.write_all(&BINARY_VERSION.to_le_bytes())?;
    out.write_all(&(grid.rows() as u64).to_le_bytes())?;
    out.write_all(&(grid.cols() as u64).to_le_bytes())?;
    for v in grid.values() {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut input: R) -> Result<SignalGrid> {
    let mut bytes = Vec::new();
    input
        .read_to_end(&mut bytes)
        .map_err(|e| Error::Parse(e.to_string()))?;
    if bytes.len() < 24 || &bytes[..4] != BINARY_MAGIC {
        return Err(Error::Parse("not a C2DG grid file".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != BINARY_VERSION {
        return Err(Error::Parse(format!("unsupported grid version {version}")));
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let cols = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
    let body = &bytes[24..];
    if rows.checked_mul(cols).and_then(|c| c.checked_mul(8)) != Some(body.len()) {
        return Err(Error::Parse(format!(
            "payload of {} bytes does not match {rows}×{cols}",
            body.len()
        )));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    SignalGrid::from_vec(rows, cols, values)
}

pub fn save(grid: &SignalGrid, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    match GridFormat::from_path(path) {
        GridFormat::Csv => write_csv(grid, &mut buf),
        GridFormat::Binary => write_binary(grid, &mut buf),
    }
    .map_err(|e| Error::io(path, e))?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<SignalGrid> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    match GridFormat::from_path(path) {
        GridFormat::Csv => read_csv(file),
        GridFormat::Binary => read_binary(file),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn csv_layout() {
        let g = SignalGrid::from_vec(2, 3, vec![1.0, 2.5, -3.0, 0.0, 1e-20, 7.0]).unwrap();
        let mut buf = Vec::new();
        write_csv(&g, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("2,3"));
        assert_eq!(text.lines().count(), 3);
        assert_eq!(read_csv(text.as_bytes()).unwrap(), g);
    }

    #[test]
    fn csv_rejects_malformed() {
        assert!(read_csv("".as_bytes()).is_err());
        assert!(read_csv("2;2\n1,2\n3,4\n".as_bytes()).is_err());
        assert!(read_csv("2,2\n1,2\n3\n".as_bytes()).is_err());
        assert!(read_csv("2,2\n1,2\n".as_bytes()).is_err());
        assert!(read_csv("1,2\n1,x\n".as_bytes()).is_err());
    }

    #[test]
    fn binary_rejects_bad_magic_and_length() {
        assert!(read_binary(&b"XXXX\x01\0\0\0"[..]).is_err());
        let g = SignalGrid::zeros(2, 2).unwrap();
        let mut buf = Vec::new();
        write_binary(&g, &mut buf).unwrap();
        buf.pop();
        assert!(read_binary(&buf[..]).is_err());
    }

    proptest! {
        #[test]
        fn round_trips(rows in 1usize..6, cols in 1usize..6, seed in prop::collection::vec(-1e6..1e6f64, 36)) {
            let g = SignalGrid::from_vec(rows, cols, seed[..rows * cols].to_vec()).unwrap();
            let mut csv = Vec::new();
            write_csv(&g, &mut csv).unwrap();
            prop_assert_eq!(read_csv(&csv[..]).unwrap(), g.clone());
            let mut bin = Vec::new();
            write_binary(&g, &mut bin).unwrap();
            prop_assert_eq!(read_binary(&bin[..]).unwrap(), g);
        }
    }
}
