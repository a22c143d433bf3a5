//! Plain-text field files.
//!
//! ```text
//! # bosepath field
//! # kind=density d=2 R=8 n=128 bc=dirichlet
//! x0,x1,value
//! -7.875968992248062,-7.875968992248062,1.2e-30
//! ...
//! ```
//! Rows are in flat (row-major) order; coordinates are informational.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{DensityField, ScalarField};
use crate::error::{Error, Result};
use crate::grid::{Boundary, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Scalar,
    Density,
}

pub fn format_field(grid: &Grid, values: &[f64], kind: FieldKind) -> String {
    let mut s = String::with_capacity(values.len() * 40);
    let kind = match kind {
        FieldKind::Scalar => "scalar",
        FieldKind::Density => "density",
    };
    let bc = match grid.bc {
        Boundary::Dirichlet => "dirichlet",
        Boundary::Periodic => "periodic",
    };
    s.push_str("# bosepath field\n");
    let _ = writeln!(s, "# kind={kind} d={} R={} n={} bc={bc}", grid.d, grid.r, grid.n);
    let cols: Vec<String> = (0..grid.d).map(|a| format!("x{a}")).collect();
    let _ = writeln!(s, "{},value", cols.join(","));
    let mut x = vec![0.0; grid.d];
    for (i, v) in values.iter().enumerate() {
        grid.position(i, &mut x);
        for xa in &x {
            let _ = write!(s, "{xa},");
        }
        let _ = writeln!(s, "{v}");
    }
    s
}

pub fn write_field(path: &Path, grid: &Grid, values: &[f64], kind: FieldKind) -> Result<()> {
    fs::write(path, format_field(grid, values, kind))?;
    Ok(())
}

impl ScalarField {
    pub fn write(&self, path: &Path) -> Result<()> {
        write_field(path, &self.grid, &self.values, FieldKind::Scalar)
    }
}

impl DensityField {
    pub fn write(&self, path: &Path) -> Result<()> {
        write_field(path, &self.grid, &self.values, FieldKind::Density)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let (grid, values, _) = read_field(path)?;
        DensityField::new(grid, values)
    }
}

pub fn parse_field(text: &str) -> Result<(Grid, Vec<f64>, FieldKind)> {
    let bad = |m: &str| Error::Io(format!("field file: {m}"));
    let mut lines = text.lines();
    let magic = lines.next().ok_or_else(|| bad("empty"))?;
    if magic.trim() != "# bosepath field" {
        return Err(bad("missing magic line"));
    }
    let header = lines.next().ok_or_else(|| bad("missing header"))?;
    let header = header.strip_prefix('#').ok_or_else(|| bad("header must start with #"))?;
    let (mut kind, mut d, mut r, mut n, mut bc) = (None, None, None, None, None);
    for tok in header.split_whitespace() {
        let (k, v) = tok.split_once('=').ok_or_else(|| bad("malformed header token"))?;
        match k {
            "kind" => {
                kind = Some(match v {
                    "scalar" => FieldKind::Scalar,
                    "density" => FieldKind::Density,
                    _ => return Err(bad("unknown kind")),
                })
            }
            "d" => d = v.parse::<usize>().ok(),
            "R" => r = v.parse::<f64>().ok(),
            "n" => n = v.parse::<usize>().ok(),
            "bc" => {
                bc = Some(match v {
                    "dirichlet" => Boundary::Dirichlet,
                    "periodic" => Boundary::Periodic,
                    _ => return Err(bad("unknown bc")),
                })
            }
            _ => return Err(bad(&format!("unknown header key {k}"))),
        }
    }
    let grid = Grid::new(
        d.ok_or_else(|| bad("missing d"))?,
        r.ok_or_else(|| bad("missing R"))?,
        n.ok_or_else(|| bad("missing n"))?,
        bc.ok_or_else(|| bad("missing bc"))?,
    )?;
    let _columns = lines.next().ok_or_else(|| bad("missing column line"))?;
    let mut values = Vec::with_capacity(grid.len());
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let last = line.rsplit(',').next().ok_or_else(|| bad("empty row"))?;
        values.push(last.trim().parse::<f64>().map_err(|_| bad(&format!("bad value {last:?}")))?);
    }
    if values.len() != grid.len() {
        return Err(bad(&format!("{} rows for {} cells", values.len(), grid.len())));
    }
    Ok((grid, values, kind.ok_or_else(|| bad("missing kind"))?))
}

pub fn read_field(path: &Path) -> Result<(Grid, Vec<f64>, FieldKind)> {
    parse_field(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip_is_exact() {
        let g = Grid::new(2, 1.3, 5, Boundary::Periodic).unwrap();
        let vals: Vec<f64> = (0..g.len()).map(|i| (i as f64 * 0.37).sin() / 3.0).collect();
        let text = format_field(&g, &vals, FieldKind::Scalar);
        let (g2, v2, k) = parse_field(&text).unwrap();
        assert_eq!(g, g2);
        assert_eq!(vals, v2);
        assert_eq!(k, FieldKind::Scalar);
        assert!(parse_field(&text.replace("bc=periodic", "bc=mixed")).is_err());
    }
}
