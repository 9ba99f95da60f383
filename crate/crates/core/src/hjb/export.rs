//! CSV round trip of recorded solution layers.

use std::io::{BufRead, Write};

use ndarray::Array2;

use super::{Grid, SolutionFields};
use crate::error::{domain, Error, Result};
use crate::scalar::Scalar;

pub const FIELD_HEADER: &str = "t,x,y,psi,u_star,phi_star";

fn sig9(v: f64) -> String {
    format!("{v:.8e}")
}

/// Writes the recorded positions `positions` (all recorded layers if empty),
/// row-major over `(j, k)` within each slice.
pub fn write_field_csv<S: Scalar, W: Write>(
    fields: &SolutionFields<S>,
    positions: &[usize],
    mut out: W,
) -> Result<()> {
    let all: Vec<usize> = (0..fields.layers.len()).collect();
    let positions = if positions.is_empty() { &all[..] } else { positions };
    writeln!(out, "{FIELD_HEADER}")?;
    let g = &fields.grid;
    for &pos in positions {
        if pos >= fields.layers.len() {
            return Err(Error::Contract(format!("slice position {pos} not recorded")));
        }
        let t = sig9(fields.time(pos).to_f64_lossy());
        for j in 0..=g.nx {
            let x = sig9(g.x(j).to_f64_lossy());
            for k in 0..=g.ny {
                writeln!(
                    out,
                    "{t},{x},{},{},{},{}",
                    sig9(g.y(k).to_f64_lossy()),
                    sig9(fields.psi[pos][[j, k]].to_f64_lossy()),
                    sig9(fields.u_star[pos][[j, k]].to_f64_lossy()),
                    sig9(fields.phi_star[pos][[j, k]].to_f64_lossy()),
                )?;
            }
        }
    }
    Ok(())
}

/// Reads slices written by [`write_field_csv`] back onto `grid`.
pub fn read_field_csv<S: Scalar, R: BufRead>(grid: &Grid<S>, input: R) -> Result<SolutionFields<S>> {
    let mut lines = input.lines().enumerate();
    match lines.next() {
        Some((_, Ok(h))) if h.trim() == FIELD_HEADER => {}
        Some((_, Err(e))) => return Err(e.into()),
        _ => return Err(domain(format!("field file must start with '{FIELD_HEADER}'"))),
    }
    let per_slice = (grid.nx + 1) * (grid.ny + 1);
    let mut rows: Vec<[f64; 6]> = Vec::new();
    for (n, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| domain(format!("line {}: {e}", n + 1)))?;
        if vals.len() != 6 {
            return Err(domain(format!("line {}: expected 6 columns, got {}", n + 1, vals.len())));
        }
        rows.push([vals[0], vals[1], vals[2], vals[3], vals[4], vals[5]]);
    }
    if rows.is_empty() || !rows.len().is_multiple_of(per_slice) {
        return Err(domain(format!(
            "field file has {} rows, not a multiple of the {per_slice} vertices of the grid",
            rows.len()
        )));
    }
    let tol = 1e-6;
    let mut layers = Vec::new();
    let (mut psi, mut u_star, mut phi_star) = (Vec::new(), Vec::new(), Vec::new());
    for chunk in rows.chunks(per_slice) {
        let t = chunk[0][0];
        let i = grid.nearest_layer(S::lit(t));
        if (grid.t(i).to_f64_lossy() - t).abs() > tol * (1.0 + t.abs()) {
            return Err(domain(format!("slice time {t} is not a layer of the grid")));
        }
        let mut p = Array2::zeros(grid.shape());
        let mut u = Array2::zeros(grid.shape());
        let mut f = Array2::zeros(grid.shape());
        for (idx, row) in chunk.iter().enumerate() {
            let (j, k) = (idx / (grid.ny + 1), idx % (grid.ny + 1));
            let (x, y) = (grid.x(j).to_f64_lossy(), grid.y(k).to_f64_lossy());
            if row[0] != t || (row[1] - x).abs() > tol || (row[2] - y).abs() > tol {
                return Err(domain(format!(
                    "field row ({}, {}, {}) does not match grid vertex ({t}, {x}, {y})",
                    row[0], row[1], row[2]
                )));
            }
            p[[j, k]] = S::lit(row[3]);
            u[[j, k]] = S::lit(row[4]);
            f[[j, k]] = S::lit(row[5]);
        }
        layers.push(i);
        psi.push(p);
        u_star.push(u);
        phi_star.push(f);
    }
    if layers.windows(2).any(|w| w[0] >= w[1]) {
        return Err(domain("field slices must have strictly increasing times"));
    }
    Ok(SolutionFields { grid: *grid, layers, psi, u_star, phi_star })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fields() -> SolutionFields<f64> {
        let grid = Grid::new(4, 3, 2, 0.5, 1.0, 1.0).unwrap();
        let f = |s: f64| Array2::from_shape_fn(grid.shape(), |(j, k)| s + j as f64 / 3.0 - k as f64 * 1e-3);
        SolutionFields {
            grid,
            layers: vec![0, 2, 4],
            psi: vec![f(1.0), f(2.0), f(3.0)],
            u_star: vec![f(0.1), f(0.2), f(0.3)],
            phi_star: vec![f(-1.0), f(-2.0), f(-3.0)],
        }
    }

    #[test]
    fn round_trip() {
        let src = fields();
        let mut buf = Vec::new();
        write_field_csv(&src, &[], &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,x,y,psi,u_star,phi_star\n"));
        assert_eq!(text.lines().count(), 1 + 3 * 12);
        assert!(text.lines().nth(1).unwrap().starts_with("5.00000000e-1,0.00000000e0,"));
        let back = read_field_csv(&src.grid, &buf[..]).unwrap();
        assert_eq!(back.layers, src.layers);
        for (a, b) in back.psi.iter().zip(&src.psi) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() <= 1e-8 * y.abs());
            }
        }
    }

    #[test]
    fn mismatched_grid_rejected() {
        let src = fields();
        let mut buf = Vec::new();
        write_field_csv(&src, &[1], &mut buf).unwrap();
        let other = Grid::new(4, 4, 2, 0.5, 1.0, 1.0).unwrap();
        assert!(read_field_csv(&other, &buf[..]).is_err());
        assert!(read_field_csv(&src.grid, &b"a,b\n"[..]).is_err());
        assert!(write_field_csv(&src, &[7], Vec::new()).is_err());
    }
}
