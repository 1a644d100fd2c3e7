//! Exact Euclidean distance transform and signed distance to sampled shapes.
//!
//! The transform is the separable lower-envelope-of-parabolas algorithm: one
//! pass per axis, each computing `min_q (p - q)^2 + f(q)` in linear time.

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use rayon::prelude::*;

/// Squared distance transform of a 1D sampled function, in index units.
/// Samples equal to `+inf` never contribute.
fn envelope_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let Some(first) = f.iter().position(|x| x.is_finite()) else {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    };
    let mut k = 0usize;
    v[0] = first;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in first + 1..f.len() {
        if f[q].is_infinite() {
            continue;
        }
        let parabola = |p: usize| f[p] + (p * p) as f64;
        let mut s;
        loop {
            let p = v[k];
            s = (parabola(q) - parabola(p)) / (2.0 * (q - p) as f64);
            if s <= z[k] {
                k -= 1;
            } else {
                break;
            }
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Squared Euclidean distance (index units) from every cell to the nearest
/// seed cell. Cells with no seed anywhere get `+inf`.
pub fn squared_edt(grid: &Grid, seeds: &[bool]) -> Vec<f64> {
    let nx = grid.nx();
    let ny = grid.ny();
    let mut d: Vec<f64> = seeds.iter().map(|&s| if s { 0.0 } else { f64::INFINITY }).collect();
    d.par_chunks_mut(nx).for_each(|row| {
        let f = row.to_vec();
        let mut v = vec![0usize; nx];
        let mut z = vec![0.0; nx + 1];
        envelope_1d(&f, row, &mut v, &mut z);
    });
    if grid.dim() == 2 {
        let cols: Vec<Vec<f64>> = (0..nx)
            .into_par_iter()
            .map(|ix| {
                let f: Vec<f64> = (0..ny).map(|iy| d[iy * nx + ix]).collect();
                let mut out = vec![0.0; ny];
                let mut v = vec![0usize; ny];
                let mut z = vec![0.0; ny + 1];
                envelope_1d(&f, &mut out, &mut v, &mut z);
                out
            })
            .collect();
        for (ix, col) in cols.iter().enumerate() {
            for (iy, &val) in col.iter().enumerate() {
                d[iy * nx + ix] = val;
            }
        }
    }
    d
}

/// Signed distance to the shape `{indicator >= 1/2}`: positive outside,
/// negative inside, zero half a cell past the last inside sample.
pub fn signed_distance(grid: &Grid, indicator: &[f64]) -> Result<ScalarField> {
    if indicator.len() != grid.len() {
        return Err(Error::GridMismatch);
    }
    let inside: Vec<bool> = indicator.iter().map(|&v| v >= 0.5).collect();
    if !inside.iter().any(|&b| b) {
        return Err(Error::EmptyShape);
    }
    if inside.iter().all(|&b| b) {
        return Err(Error::FullShape);
    }
    let outside: Vec<bool> = inside.iter().map(|b| !b).collect();
    let (to_inside, to_outside) =
        rayon::join(|| squared_edt(grid, &inside), || squared_edt(grid, &outside));
    let h = grid.spacing();
    let values = inside
        .par_iter()
        .enumerate()
        .map(|(i, &inn)| {
            if inn {
                -(to_outside[i].sqrt() - 0.5) * h
            } else {
                (to_inside[i].sqrt() - 0.5) * h
            }
        })
        .collect();
    ScalarField::new(*grid, values, 0.0)
}
