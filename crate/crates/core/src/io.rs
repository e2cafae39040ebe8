//! File formats: a bit-exact binary field format, CSV field dumps, solver
//! traces and sweep tables.
//!
//! Binary layout, all little endian:
//!
//! | bytes | content                                   |
//! |-------|-------------------------------------------|
//! | 8     | magic `MCNLSFLD`                          |
//! | 4     | format version (`u32`, currently 1)       |
//! | 4     | dimension (`u32`)                         |
//! | 8     | points per axis (`u64`)                   |
//! | 8     | half-width `L` (`f64`)                    |
//! | 8     | sharp constant realized on the grid, NaN if absent |
//! | 4     | flags (`u32`, bit 0: complex samples)     |
//! | ...   | real parts, then imaginary parts if complex (`f64`) |
//!
//! CSV files start with one `#` comment line carrying provenance, then a
//! header row. Floats are written with 17 significant digits.

use std::io::{Read, Write};

use rustfft::num_complex::Complex64;

use crate::blowup::SweepRecord;
use crate::error::{Error, Result};
use crate::gn_profile::GnProfile;
use crate::grid::{Field, Grid};
use crate::minimizer::TraceEntry;

const MAGIC: &[u8; 8] = b"MCNLSFLD";
const VERSION: u32 = 1;
const FLAG_COMPLEX: u32 = 1;

/// Header of a binary field file.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldHeader {
    pub dim: usize,
    pub points: usize,
    pub half_width: f64,
    pub a_star: Option<f64>,
    pub complex: bool,
}

pub fn write_field<W: Write>(mut w: W, field: &Field, a_star: Option<f64>) -> Result<()> {
    let grid = field.grid();
    let complex = !field.is_real();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(grid.dim() as u32).to_le_bytes())?;
    w.write_all(&(grid.points() as u64).to_le_bytes())?;
    w.write_all(&grid.half_width().to_le_bytes())?;
    w.write_all(&a_star.unwrap_or(f64::NAN).to_le_bytes())?;
    w.write_all(&(if complex { FLAG_COMPLEX } else { 0 }).to_le_bytes())?;
    let mut buf = Vec::with_capacity(8 * field.values().len() * if complex { 2 } else { 1 });
    for v in field.values() {
        buf.extend_from_slice(&v.re.to_le_bytes());
    }
    if complex {
        for v in field.values() {
            buf.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b).map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    Ok(b)
}

pub fn read_field<R: Read>(mut r: R) -> Result<(Field, FieldHeader)> {
    if &read_array::<8, _>(&mut r)? != MAGIC {
        return Err(Error::Format("not a field file (bad magic)".into()));
    }
    let version = u32::from_le_bytes(read_array(&mut r)?);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported format version {version}")));
    }
    let dim = u32::from_le_bytes(read_array(&mut r)?) as usize;
    let points = u64::from_le_bytes(read_array(&mut r)?) as usize;
    let half_width = f64::from_le_bytes(read_array(&mut r)?);
    let a_star = f64::from_le_bytes(read_array(&mut r)?);
    let flags = u32::from_le_bytes(read_array(&mut r)?);
    let complex = flags & FLAG_COMPLEX != 0;
    let grid = Grid::new(dim, half_width, points)?;
    let len = grid.len();
    let mut bytes = vec![0u8; 8 * len * if complex { 2 } else { 1 }];
    r.read_exact(&mut bytes).map_err(|e| Error::Format(format!("truncated samples: {e}")))?;
    let word = |i: usize| f64::from_le_bytes(bytes[8 * i..8 * i + 8].try_into().expect("8 bytes"));
    let values: Vec<Complex64> = (0..len)
        .map(|i| Complex64::new(word(i), if complex { word(len + i) } else { 0.0 }))
        .collect();
    let header = FieldHeader { dim, points, half_width, a_star: (!a_star.is_nan()).then_some(a_star), complex };
    Ok((Field::new(&grid, values)?, header))
}

/// Writes `Q0` with the grid-realized sharp constant.
pub fn write_profile<W: Write>(w: W, profile: &GnProfile) -> Result<()> {
    write_field(w, &profile.q0, Some(profile.a_star_discrete))
}

/// Reads a profile written by [`write_profile`]. The ODE constant and the
/// moment cache are not stored.
pub fn read_profile<R: Read>(r: R) -> Result<GnProfile> {
    let (q0, header) = read_field(r)?;
    let a_star_discrete =
        header.a_star.ok_or_else(|| Error::Format("profile file lacks the sharp constant".into()))?;
    let d = header.dim as f64;
    Ok(GnProfile {
        dim: header.dim,
        q0,
        a_star_discrete,
        a_star_ode: None,
        mass_q: ((d + 2.0) / d * a_star_discrete).powf(0.25 * d),
        moments: Vec::new(),
    })
}

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn header_line<W: Write>(w: &mut W, provenance: &str, columns: &[&str]) -> Result<()> {
    writeln!(w, "# {provenance}")?;
    writeln!(w, "{}", columns.join(","))?;
    Ok(())
}

/// Sample table `x[,y[,z]],re,im`.
pub fn write_field_csv<W: Write>(mut w: W, field: &Field, provenance: &str) -> Result<()> {
    let grid = field.grid();
    let d = grid.dim();
    let mut cols: Vec<&str> = ["x", "y", "z"][..d].to_vec();
    cols.extend(["re", "im"]);
    header_line(&mut w, provenance, &cols)?;
    for (i, v) in field.values().iter().enumerate() {
        let x = grid.point(i);
        let mut row: Vec<String> = x[..d].iter().map(|&c| fmt_f64(c)).collect();
        row.push(fmt_f64(v.re));
        row.push(fmt_f64(v.im));
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_csv<W: Write>(mut w: W, trace: &[TraceEntry], provenance: &str) -> Result<()> {
    header_line(&mut w, provenance, &["iteration", "energy", "kinetic", "residual", "tau", "norm"])?;
    for t in trace {
        let row = [fmt_f64(t.energy), fmt_f64(t.kinetic), fmt_f64(t.residual), fmt_f64(t.tau), fmt_f64(t.norm)];
        writeln!(w, "{},{}", t.iter, row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub const SWEEP_COLUMNS: [&str; 14] = [
    "delta",
    "energy",
    "kinetic",
    "ratio_E",
    "ratio_kin",
    "z_hat",
    "dist_L2",
    "dist_H1",
    "mass_in_ball",
    "status",
    "points",
    "iters",
    "residual",
    "trial_bound",
];

/// One row per record; multi-dimensional `z_hat` is joined with `;`.
pub fn write_sweep_csv<W: Write>(mut w: W, records: &[SweepRecord], provenance: &str) -> Result<()> {
    header_line(&mut w, provenance, &SWEEP_COLUMNS)?;
    for r in records {
        let z: Vec<String> = r.z_hat.iter().map(|&c| fmt_f64(c)).collect();
        let row = [
            fmt_f64(r.delta),
            fmt_f64(r.energy),
            fmt_f64(r.kinetic),
            fmt_f64(r.ratio_e),
            fmt_f64(r.ratio_kin),
            z.join(";"),
            fmt_f64(r.dist_l2),
            fmt_f64(r.dist_h1),
            fmt_f64(r.mass_in_ball),
            r.status.name().to_string(),
            r.points.to_string(),
            r.iters.to_string(),
            fmt_f64(r.residual),
            fmt_f64(r.trial_bound),
        ];
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip_is_bit_exact() {
        let g = Grid::new(2, 3.0, 16).unwrap();
        let f = Field::from_fn(&g, |x| (x[0] * 1.3).sin() * (-x[1] * x[1]).exp() + 1e-300);
        let mut buf = Vec::new();
        write_field(&mut buf, &f, Some(std::f64::consts::PI)).unwrap();
        let (back, header) = read_field(buf.as_slice()).unwrap();
        assert_eq!(header.a_star, Some(std::f64::consts::PI));
        assert!(!header.complex);
        assert_eq!(back.grid(), f.grid());
        for (a, b) in back.values().iter().zip(f.values()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn complex_round_trip() {
        let g = Grid::new(1, 2.0, 8).unwrap();
        let f = Field::from_fn_complex(&g, |x| Complex64::new(x[0], -2.0 * x[0] + 0.1));
        let mut buf = Vec::new();
        write_field(&mut buf, &f, None).unwrap();
        let (back, header) = read_field(buf.as_slice()).unwrap();
        assert!(header.complex && header.a_star.is_none());
        assert_eq!(back.values(), f.values());
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(read_field(&b"NOTAFILE0000"[..]), Err(Error::Format(_))));
        let g = Grid::new(1, 2.0, 8).unwrap();
        let mut buf = Vec::new();
        write_field(&mut buf, &Field::constant(&g, 1.0), None).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(matches!(read_field(buf.as_slice()), Err(Error::Format(_))));
    }

    #[test]
    fn csv_has_provenance_and_full_precision() {
        let g = Grid::new(1, 2.0, 8).unwrap();
        let f = Field::constant(&g, 1.0 / 3.0);
        let mut buf = Vec::new();
        write_field_csv(&mut buf, &f, "test v0").unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# test v0"));
        assert_eq!(lines.next(), Some("x,re,im"));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[1].parse::<f64>().unwrap(), 1.0 / 3.0);
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
    }
}
