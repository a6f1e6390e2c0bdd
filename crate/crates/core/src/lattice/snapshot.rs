//! Snapshot formats: a compact binary file and a line-oriented text dump.
//!
//! Binary layout (little endian): magic `LMCA`, schema version (u32),
//! dimension (u32), side (u32), time (u64), then the bincode-encoded cells in
//! site-index order. The text dump starts with a header line and lists every
//! non-default cell as `x y z <json>`.

use std::io::{BufRead, Read, Write};

use super::{Cell, Grid, Torus, Vector};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"LMCA";
pub const SCHEMA_VERSION: u32 = 1;

pub fn write_binary<W: Write>(grid: &Grid<Cell>, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&SCHEMA_VERSION.to_le_bytes())?;
    w.write_all(&(grid.torus.d as u32).to_le_bytes())?;
    w.write_all(&(grid.torus.side as u32).to_le_bytes())?;
    w.write_all(&grid.t.to_le_bytes())?;
    bincode::serialize_into(&mut w, &grid.cells).map_err(|e| Error::Snapshot(e.to_string()))?;
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<Grid<Cell>> {
    let mut head = [0u8; 24];
    r.read_exact(&mut head)?;
    if &head[0..4] != MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let u32_at = |i: usize| u32::from_le_bytes(head[i..i + 4].try_into().unwrap());
    if u32_at(4) != SCHEMA_VERSION {
        return Err(Error::Snapshot(format!("unsupported schema version {}", u32_at(4))));
    }
    let torus = Torus::new(u32_at(8) as usize, u32_at(12) as i32)?;
    let t = u64::from_le_bytes(head[16..24].try_into().unwrap());
    let cells: Vec<Cell> = bincode::deserialize_from(r).map_err(|e| Error::Snapshot(e.to_string()))?;
    if cells.len() != torus.volume() {
        return Err(Error::Snapshot(format!("{} cells for a torus of {}", cells.len(), torus.volume())));
    }
    Ok(Grid { torus, t, cells })
}

pub fn write_text<W: Write>(grid: &Grid<Cell>, mut w: W) -> Result<()> {
    writeln!(w, "limca-snapshot v{SCHEMA_VERSION} d={} L={} t={}", grid.torus.d, grid.torus.side, grid.t)?;
    let blank = Cell::default();
    for (i, c) in grid.cells.iter().enumerate() {
        if *c != blank {
            let v = grid.torus.coord(i).0;
            let json = serde_json::to_string(c).map_err(|e| Error::Snapshot(e.to_string()))?;
            writeln!(w, "{} {} {} {json}", v[0], v[1], v[2])?;
        }
    }
    Ok(())
}

pub fn read_text<R: BufRead>(r: R) -> Result<Grid<Cell>> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| Error::Snapshot("empty dump".into()))??;
    let field = |key: &str| -> Result<u64> {
        header
            .split_whitespace()
            .find_map(|f| f.strip_prefix(key))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Snapshot(format!("header lacks {key}")))
    };
    if !header.starts_with(&format!("limca-snapshot v{SCHEMA_VERSION} ")) {
        return Err(Error::Snapshot(format!("bad header {header:?}")));
    }
    let torus = Torus::new(field("d=")? as usize, field("L=")? as i32)?;
    let mut grid = Grid::filled(torus, Cell::default());
    grid.t = field("t=")?;
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.splitn(4, ' ');
        let mut v = [0i32; 3];
        for x in v.iter_mut() {
            *x = parts
                .next()
                .and_then(|p| p.parse().ok())
                .ok_or_else(|| Error::Snapshot(format!("bad line {line:?}")))?;
        }
        let json = parts.next().ok_or_else(|| Error::Snapshot(format!("bad line {line:?}")))?;
        let cell: Cell = serde_json::from_str(json).map_err(|e| Error::Snapshot(e.to_string()))?;
        *grid.get_mut(Vector(v)) = cell;
    }
    Ok(grid)
}
