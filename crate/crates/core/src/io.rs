//! Plain-text and binary serialization of fields and trajectories.
//!
//! Binary trajectory layout (all little-endian):
//!
//! ```text
//! n_modes: u64 | n_steps: u64 | L: f64 | dt: f64 | (n_steps + 1) * n_modes f64, row-major
//! ```
//!
//! Fields are flat coefficient arrays: one CSV line or `n_modes` raw f64s.

use std::io::{BufRead, Read, Write};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::spectral::{Domain, SpectralField};
use crate::trajectory::Trajectory;

fn io_err(e: std::io::Error) -> Error {
    Error::Parse(e.to_string())
}

pub fn write_field_csv<W: Write>(field: &SpectralField, mut w: W) -> Result<()> {
    let line: Vec<String> = field.coeffs().iter().map(|c| c.to_string()).collect();
    writeln!(w, "{}", line.join(",")).map_err(io_err)
}

pub fn read_field_csv<R: Read>(domain: &Arc<Domain>, mut r: R) -> Result<SpectralField> {
    let mut s = String::new();
    r.read_to_string(&mut s).map_err(io_err)?;
    let coeffs = s
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad coefficient {t:?}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    SpectralField::from_coeffs(domain, coeffs)
}

pub fn write_field_binary<W: Write>(field: &SpectralField, mut w: W) -> Result<()> {
    for c in field.coeffs() {
        w.write_all(&c.to_le_bytes()).map_err(io_err)?;
    }
    Ok(())
}

pub fn read_field_binary<R: Read>(domain: &Arc<Domain>, mut r: R) -> Result<SpectralField> {
    let mut coeffs = Vec::with_capacity(domain.n_modes());
    let mut buf = [0u8; 8];
    for _ in 0..domain.n_modes() {
        r.read_exact(&mut buf).map_err(io_err)?;
        coeffs.push(f64::from_le_bytes(buf));
    }
    SpectralField::from_coeffs(domain, coeffs)
}

/// CSV with header `t,coeff_1,..,coeff_n`, one row per grid time.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, mut w: W) -> Result<()> {
    let n = traj.domain().n_modes();
    let mut header = String::from("t");
    for i in 1..=n {
        header.push_str(&format!(",coeff_{i}"));
    }
    writeln!(w, "{header}").map_err(io_err)?;
    for (t, s) in traj.times().iter().zip(traj.states()) {
        let mut row = t.to_string();
        for c in s.coeffs() {
            row.push(',');
            row.push_str(&c.to_string());
        }
        writeln!(w, "{row}").map_err(io_err)?;
    }
    Ok(())
}

pub fn read_trajectory_csv<R: BufRead>(domain: &Arc<Domain>, r: R) -> Result<Trajectory> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty trajectory csv".into()))?
        .map_err(io_err)?;
    let cols = header.split(',').count();
    if cols != domain.n_modes() + 1 {
        return Err(Error::DimensionMismatch {
            expected: domain.n_modes() + 1,
            got: cols,
        });
    }
    let mut times = Vec::new();
    let mut states = Vec::new();
    for line in lines {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let vals = line
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad value {t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if vals.len() != cols {
            return Err(Error::DimensionMismatch {
                expected: cols,
                got: vals.len(),
            });
        }
        times.push(vals[0]);
        states.push(SpectralField::from_coeffs(domain, vals[1..].to_vec())?);
    }
    Trajectory::new(times, states)
}

/// Binary dump with the fixed header described in the module docs. The grid
/// must be uniform starting at 0.
pub fn write_trajectory_binary<W: Write>(traj: &Trajectory, mut w: W) -> Result<()> {
    let n_steps = traj.n_steps();
    let dt = if n_steps == 0 {
        0.0
    } else {
        traj.times()[n_steps] / n_steps as f64
    };
    let dom = traj.domain();
    let mut put = |bytes: &[u8]| w.write_all(bytes).map_err(io_err);
    put(&(dom.n_modes() as u64).to_le_bytes())?;
    put(&(n_steps as u64).to_le_bytes())?;
    put(&dom.length().to_le_bytes())?;
    put(&dt.to_le_bytes())?;
    for s in traj.states() {
        for c in s.coeffs() {
            put(&c.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Header of a binary trajectory dump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinaryHeader {
    pub n_modes: usize,
    pub n_steps: usize,
    pub length: f64,
    pub dt: f64,
}

pub fn read_trajectory_binary<R: Read>(
    domain: &Arc<Domain>,
    mut r: R,
) -> Result<(BinaryHeader, Trajectory)> {
    let mut b8 = [0u8; 8];
    let mut next = |r: &mut R| -> Result<[u8; 8]> {
        r.read_exact(&mut b8).map_err(io_err)?;
        Ok(b8)
    };
    let header = BinaryHeader {
        n_modes: u64::from_le_bytes(next(&mut r)?) as usize,
        n_steps: u64::from_le_bytes(next(&mut r)?) as usize,
        length: f64::from_le_bytes(next(&mut r)?),
        dt: f64::from_le_bytes(next(&mut r)?),
    };
    if header.n_modes != domain.n_modes() {
        return Err(Error::DimensionMismatch {
            expected: domain.n_modes(),
            got: header.n_modes,
        });
    }
    if header.length != domain.length() {
        return Err(Error::Parse(format!(
            "dump length {} does not match domain length {}",
            header.length,
            domain.length()
        )));
    }
    let mut states = Vec::with_capacity(header.n_steps + 1);
    for _ in 0..=header.n_steps {
        let mut coeffs = Vec::with_capacity(header.n_modes);
        for _ in 0..header.n_modes {
            coeffs.push(f64::from_le_bytes(next(&mut r)?));
        }
        states.push(SpectralField::from_coeffs(domain, coeffs)?);
    }
    let traj = Trajectory::uniform(header.dt, states)?;
    Ok((header, traj))
}
