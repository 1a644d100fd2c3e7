//! Linear (non-periodic) convolution on a grid by zero-padded FFT.

use crate::error::{Error, Result};
use crate::grid::Grid;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Convolution with a fixed kernel whose spectrum is computed once.
///
/// The kernel lives on its own grid with the same spacing, odd extents and
/// its middle cell at the origin. The result at cell `x` is
/// `sum_y k(y) f(x - y) h^dim`, with `f` extended by zero off the grid.
pub struct Convolver {
    grid: Grid,
    half: [usize; 2],
    size: [usize; 2],
    spectrum: Vec<Complex64>,
    fwd: [Arc<dyn Fft<f64>>; 2],
    inv: [Arc<dyn Fft<f64>>; 2],
}

impl std::fmt::Debug for Convolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Convolver").field("grid", &self.grid).field("size", &self.size).finish()
    }
}

fn fft_2d(data: &mut [Complex64], size: [usize; 2], plans: &[Arc<dyn Fft<f64>>; 2]) {
    let [px, py] = size;
    data.par_chunks_mut(px).for_each(|row| plans[0].process(row));
    if py > 1 {
        let mut cols = vec![Complex64::default(); px * py];
        cols.par_chunks_mut(py).enumerate().for_each(|(ix, col)| {
            for (iy, c) in col.iter_mut().enumerate() {
                *c = data[iy * px + ix];
            }
            plans[1].process(col);
        });
        data.par_chunks_mut(px).enumerate().for_each(|(iy, row)| {
            for (ix, r) in row.iter_mut().enumerate() {
                *r = cols[ix * py + iy];
            }
        });
    }
}

impl Convolver {
    pub fn new(grid: &Grid, kernel_grid: &Grid, kernel: &[f64]) -> Result<Self> {
        let h = grid.spacing();
        if (kernel_grid.spacing() - h).abs() > 1e-12 * h || kernel_grid.dim() != grid.dim() {
            return Err(Error::PaddingTooSmall("kernel grid must share the field spacing and dimension".into()));
        }
        let [kx, ky] = kernel_grid.extents();
        if kx % 2 == 0 || (grid.dim() == 2 && ky % 2 == 0) {
            return Err(Error::PaddingTooSmall("kernel extents must be odd (centered kernel)".into()));
        }
        if kernel.len() != kernel_grid.len() {
            return Err(Error::GridMismatch);
        }
        if let Some(i) = (0..kernel.len()).find(|&i| kernel[i] != 0.0 && kernel_grid.near_boundary(i, 1)) {
            return Err(Error::PaddingTooSmall(format!(
                "kernel support reaches the edge of its grid at cell {i}"
            )));
        }
        let size = [grid.nx() + kx - 1, grid.ny() + ky - 1];
        let mut planner = FftPlanner::new();
        let fwd = [planner.plan_fft_forward(size[0]), planner.plan_fft_forward(size[1])];
        let inv = [planner.plan_fft_inverse(size[0]), planner.plan_fft_inverse(size[1])];
        let half = [kx / 2, ky / 2];
        let mut spectrum = vec![Complex64::default(); size[0] * size[1]];
        let w = grid.cell_volume();
        for iy in 0..ky {
            for ix in 0..kx {
                spectrum[iy * size[0] + ix] = Complex64::new(kernel[iy * kx + ix] * w, 0.0);
            }
        }
        fft_2d(&mut spectrum, size, &fwd);
        Ok(Convolver { grid: *grid, half, size, spectrum, fwd, inv })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `(k * f)` sampled on the field grid.
    pub fn apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        if f.len() != self.grid.len() {
            return Err(Error::GridMismatch);
        }
        let [px, py] = self.size;
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let mut buf = vec![Complex64::default(); px * py];
        for iy in 0..ny {
            for ix in 0..nx {
                buf[iy * px + ix] = Complex64::new(f[iy * nx + ix], 0.0);
            }
        }
        fft_2d(&mut buf, self.size, &self.fwd);
        buf.par_iter_mut().zip(&self.spectrum).for_each(|(b, s)| *b *= s);
        fft_2d(&mut buf, self.size, &self.inv);
        let norm = 1.0 / (px * py) as f64;
        let [hx, hy] = self.half;
        let mut out = vec![0.0; nx * ny];
        out.par_chunks_mut(nx).enumerate().for_each(|(iy, row)| {
            for (ix, o) in row.iter_mut().enumerate() {
                *o = buf[(iy + hy) * px + ix + hx].re * norm;
            }
        });
        Ok(out)
    }
}

/// Reference `O(n m)` direct summation of the same convolution.
pub fn direct_convolution(grid: &Grid, kernel_grid: &Grid, kernel: &[f64], f: &[f64]) -> Vec<f64> {
    let (nx, ny) = (grid.nx() as isize, grid.ny() as isize);
    let [kx, ky] = kernel_grid.extents();
    let (hx, hy) = ((kx / 2) as isize, (ky / 2) as isize);
    let w = grid.cell_volume();
    (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let (x, y) = grid.coords(i);
            let mut s = 0.0;
            for jy in 0..ky {
                for jx in 0..kx {
                    let k = kernel[jy * kx + jx];
                    if k == 0.0 {
                        continue;
                    }
                    let sx = x as isize - (jx as isize - hx);
                    let sy = y as isize - (jy as isize - hy);
                    if sx >= 0 && sy >= 0 && sx < nx && sy < ny {
                        s += k * f[(sy * nx + sx) as usize];
                    }
                }
            }
            s * w
        })
        .collect()
}
