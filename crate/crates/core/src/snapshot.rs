//! Binary state snapshots. Layout: magic "NSF1", u32 nx, u32 ny (little
//! endian), f64 lx, ly, time, then rho, u, v, theta, pi as consecutive
//! little-endian f64 arrays in their native orderings. Bit exact on write
//! then read; anything short, long or mislabeled is refused.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField, VectorField};
use crate::state::State;

const MAGIC: &[u8; 4] = b"NSF1";

fn write_f64s(w: &mut impl Write, xs: &[f64]) -> Result<()> {
    for &x in xs {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn read_f64s(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf)
        .map_err(|_| Error::Snapshot("truncated field data".into()))?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

pub fn write_snapshot(path: &Path, s: &State, g: &Grid) -> Result<()> {
    s.validate(g)?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(g.nx as u32).to_le_bytes())?;
    w.write_all(&(g.ny as u32).to_le_bytes())?;
    for x in [g.lx, g.ly, s.time] {
        w.write_all(&x.to_le_bytes())?;
    }
    write_f64s(&mut w, &s.rho.data)?;
    write_f64s(&mut w, &s.vel.u)?;
    write_f64s(&mut w, &s.vel.v)?;
    write_f64s(&mut w, &s.theta.data)?;
    write_f64s(&mut w, &s.pi.data)?;
    w.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<(Grid, State)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Snapshot("file too short for a header".into()))?;
    if &magic != MAGIC {
        return Err(Error::Snapshot(format!(
            "bad magic {:02x?}, not a snapshot",
            magic
        )));
    }
    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u32buf)
        .map_err(|_| Error::Snapshot("truncated header".into()))?;
    let nx = u32::from_le_bytes(u32buf) as usize;
    r.read_exact(&mut u32buf)
        .map_err(|_| Error::Snapshot("truncated header".into()))?;
    let ny = u32::from_le_bytes(u32buf) as usize;
    let head = read_f64s(&mut r, 3)?;
    let (lx, ly, time) = (head[0], head[1], head[2]);
    let g = Grid::new(nx, ny, lx, ly)?;

    let rho_data = read_f64s(&mut r, g.n_cells())?;
    let u = read_f64s(&mut r, (nx + 1) * ny)?;
    let v = read_f64s(&mut r, nx * (ny + 1))?;
    let theta_data = read_f64s(&mut r, g.n_cells())?;
    let pi_data = read_f64s(&mut r, g.n_cells())?;
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::Snapshot("trailing bytes after the fields".into()));
    }

    let mut rho = ScalarField::zeros(&g);
    rho.data = rho_data;
    let mut theta = ScalarField::zeros(&g);
    theta.data = theta_data;
    let mut pi = ScalarField::zeros(&g);
    pi.data = pi_data;
    let mut vel = VectorField::zeros(&g);
    vel.u = u;
    vel.v = v;
    let s = State::new(&g, rho, vel, theta, pi, time)?;
    Ok((g, s))
}
