//! On-disk containers: versioned binary coefficient tables, snapshot
//! bundles with JSON sidecars, and full-precision CSV.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use besovlab_core::domain::Square;
use besovlab_core::field::{Field, Grid};
use besovlab_core::wavelet::{band_dims, CoefficientTable, Family, Normalization};

const TABLE_MAGIC: &[u8; 4] = b"BLT1";
const SNAP_MAGIC: &[u8; 4] = b"BLS1";
const VERSION: u32 = 1;

fn write_f64(w: &mut impl Write, x: f64) -> Result<()> {
    w.write_all(&x.to_le_bytes())?;
    Ok(())
}

fn write_u32(w: &mut impl Write, x: u32) -> Result<()> {
    w.write_all(&x.to_le_bytes())?;
    Ok(())
}

fn write_u64(w: &mut impl Write, x: u64) -> Result<()> {
    w.write_all(&x.to_le_bytes())?;
    Ok(())
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn write_slice(w: &mut impl Write, xs: &[f64]) -> Result<()> {
    write_u64(w, xs.len() as u64)?;
    for x in xs {
        write_f64(w, *x)?;
    }
    Ok(())
}

fn read_vec(r: &mut impl Read, expect: usize) -> Result<Vec<f64>> {
    let len = read_u64(r)? as usize;
    if len != expect {
        bail!("container length {len}, expected {expect}");
    }
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push(read_f64(r)?);
    }
    Ok(out)
}

/// Write a coefficient table; the container round-trips bit-exactly.
pub fn write_table(path: &Path, table: &CoefficientTable) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(TABLE_MAGIC)?;
    write_u32(&mut w, VERSION)?;
    let family_tag: u8 = match table.family {
        Family::SplineBiorthogonal => 0,
    };
    w.write_all(&[family_tag])?;
    write_u32(&mut w, table.vanishing_moments as u32)?;
    write_u32(&mut w, table.j0)?;
    write_u32(&mut w, table.grid_level)?;
    match table.normalization {
        Normalization::L2 => {
            w.write_all(&[0])?;
            write_f64(&mut w, 0.0)?;
        }
        Normalization::Lp(p) => {
            w.write_all(&[1])?;
            write_f64(&mut w, p)?;
        }
    }
    write_f64(&mut w, table.square.x0)?;
    write_f64(&mut w, table.square.y0)?;
    write_f64(&mut w, table.square.side)?;
    write_slice(&mut w, &table.scaling)?;
    for bands in &table.levels {
        for band in bands {
            write_slice(&mut w, band)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a coefficient table written by [`write_table`].
pub fn read_table(path: &Path) -> Result<CoefficientTable> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != TABLE_MAGIC {
        bail!("not a coefficient table container");
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        bail!("unsupported table container version {version}");
    }
    let mut tag = [0u8; 1];
    r.read_exact(&mut tag)?;
    let family = match tag[0] {
        0 => Family::SplineBiorthogonal,
        other => bail!("unknown family tag {other}"),
    };
    let vanishing_moments = read_u32(&mut r)? as usize;
    let j0 = read_u32(&mut r)?;
    let grid_level = read_u32(&mut r)?;
    r.read_exact(&mut tag)?;
    let p = read_f64(&mut r)?;
    let normalization = match tag[0] {
        0 => Normalization::L2,
        1 => Normalization::Lp(p),
        other => bail!("unknown normalization tag {other}"),
    };
    let square = Square::new(read_f64(&mut r)?, read_f64(&mut r)?, read_f64(&mut r)?);
    let ns = (1usize << j0) + 1;
    let scaling = read_vec(&mut r, ns * ns)?;
    let mut levels = Vec::new();
    for j in j0..grid_level {
        let mut bands: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        for (kind, slot) in bands.iter_mut().enumerate() {
            let (w, h) = band_dims(j, kind as u8 + 1);
            *slot = read_vec(&mut r, w * h)?;
        }
        levels.push(bands);
    }
    Ok(CoefficientTable {
        family,
        vanishing_moments,
        square,
        j0,
        grid_level,
        normalization,
        scaling,
        levels,
    })
}

/// JSON sidecar describing a snapshot container.
#[derive(Debug, Serialize, Deserialize)]
pub struct SnapshotSidecar {
    pub domain: String,
    pub grid_level: u32,
    pub square: [f64; 3],
    pub times: Vec<f64>,
    pub paths: u32,
}

/// Write the snapshot fields of one path (masked row-major values).
pub fn write_snapshots(path: &Path, snapshots: &[(f64, Field)]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(SNAP_MAGIC)?;
    write_u32(&mut w, VERSION)?;
    let grid = snapshots
        .first()
        .map(|(_, f)| f.grid)
        .context("no snapshots to write")?;
    write_u32(&mut w, grid.level)?;
    write_f64(&mut w, grid.square.x0)?;
    write_f64(&mut w, grid.square.y0)?;
    write_f64(&mut w, grid.square.side)?;
    write_u32(&mut w, snapshots.len() as u32)?;
    for (t, f) in snapshots {
        write_f64(&mut w, *t)?;
        write_slice(&mut w, &f.values)?;
    }
    w.flush()?;
    Ok(())
}

/// Read a snapshot container written by [`write_snapshots`].
pub fn read_snapshots(path: &Path) -> Result<Vec<(f64, Field)>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != SNAP_MAGIC {
        bail!("not a snapshot container");
    }
    if read_u32(&mut r)? != VERSION {
        bail!("unsupported snapshot container version");
    }
    let level = read_u32(&mut r)?;
    let square = Square::new(read_f64(&mut r)?, read_f64(&mut r)?, read_f64(&mut r)?);
    let grid = Grid::new(square, level);
    let count = read_u32(&mut r)?;
    let mut out = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let t = read_f64(&mut r)?;
        let values = read_vec(&mut r, grid.len())?;
        out.push((t, Field { grid, values }));
    }
    Ok(out)
}

/// Write a CSV with '.' decimals; rows are already formatted.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use besovlab_core::rng::{derive_key, role, PhiloxStream};
    use besovlab_core::wavelet::{build_basis, dwt2};

    #[test]
    fn table_container_round_trips_bit_exactly() {
        let basis = build_basis("spline-biorthogonal", 4).unwrap();
        let grid = Grid::new(Square::new(-1.0, -1.0, 2.0), 5);
        let mut stream = PhiloxStream::new(derive_key(3, 0, role::GENERIC), [0, 0, 0]);
        let f = Field {
            grid,
            values: (0..grid.len()).map(|_| stream.next_gaussian()).collect(),
        };
        let table = dwt2(&f, &basis, 1).unwrap().to_lp(3.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.blt");
        write_table(&path, &table).unwrap();
        let back = read_table(&path).unwrap();
        assert_eq!(table, back);
    }

    #[test]
    fn snapshot_container_round_trips() {
        let grid = Grid::new(Square::new(0.0, 0.0, 1.0), 4);
        let mut stream = PhiloxStream::new(derive_key(5, 0, role::GENERIC), [0, 0, 0]);
        let snaps: Vec<(f64, Field)> = (0..3)
            .map(|i| {
                (
                    0.1 * i as f64,
                    Field {
                        grid,
                        values: (0..grid.len()).map(|_| stream.next_gaussian()).collect(),
                    },
                )
            })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.bls");
        write_snapshots(&path, &snaps).unwrap();
        let back = read_snapshots(&path).unwrap();
        assert_eq!(snaps.len(), back.len());
        for ((ta, fa), (tb, fb)) in snaps.iter().zip(&back) {
            assert_eq!(ta, tb);
            assert_eq!(fa.values, fb.values);
        }
    }
}
