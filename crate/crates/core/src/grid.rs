//! Uniform cell grids in one or two dimensions and the fields sampled on them.
//!
//! Values are stored row-major: in 2D the cell `(ix, iy)` lives at
//! `iy * nx + ix`. A cell's sample point is `origin + index * spacing`, so the
//! origin is the sample point of the first cell.

use crate::error::{Error, Result};
use rayon::prelude::*;

/// Smallest admissible cell count per axis.
pub const MIN_EXTENT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    origin: [f64; 2],
    spacing: f64,
    extents: [usize; 2],
}

impl Grid {
    pub fn new(dim: usize, origin: [f64; 2], spacing: f64, extents: [usize; 2]) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dim must be 1 or 2, got {dim}")));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {spacing}")));
        }
        if extents[0] < MIN_EXTENT || (dim == 2 && extents[1] < MIN_EXTENT) {
            return Err(Error::InvalidGrid(format!(
                "extents must be at least {MIN_EXTENT} per axis, got {extents:?}"
            )));
        }
        let (extents, origin) = if dim == 1 {
            ([extents[0], 1], [origin[0], 0.0])
        } else {
            (extents, origin)
        };
        Ok(Grid { dim, origin, spacing, extents })
    }

    /// Grid whose sample points cover `[-half_width, half_width]` on every
    /// axis, with a sample exactly at the origin.
    pub fn centered(dim: usize, half_width: f64, spacing: f64) -> Result<Self> {
        let half = (half_width / spacing).round() as usize;
        let n = 2 * half + 1;
        let o = -(half as f64) * spacing;
        Grid::new(dim, [o, o], spacing, [n, n])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn extents(&self) -> [usize; 2] {
        self.extents
    }

    pub fn nx(&self) -> usize {
        self.extents[0]
    }

    pub fn ny(&self) -> usize {
        self.extents[1]
    }

    pub fn len(&self) -> usize {
        self.extents[0] * self.extents[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Measure of one cell (`h` in 1D, `h^2` in 2D).
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    pub fn volume(&self) -> f64 {
        self.cell_volume() * self.len() as f64
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.extents[0] + ix
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.extents[0], idx / self.extents[0])
    }

    /// Sample point of a cell.
    #[inline]
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let (ix, iy) = self.coords(idx);
        [
            self.origin[0] + ix as f64 * self.spacing,
            if self.dim == 2 { self.origin[1] + iy as f64 * self.spacing } else { 0.0 },
        ]
    }

    /// Fractional cell coordinates of a point.
    #[inline]
    pub fn locate(&self, p: [f64; 2]) -> [f64; 2] {
        [
            (p[0] - self.origin[0]) / self.spacing,
            if self.dim == 2 { (p[1] - self.origin[1]) / self.spacing } else { 0.0 },
        ]
    }

    /// Largest radius `r` such that the closed ball `B(0, r)` stays at least
    /// `margin_cells` cells away from the boundary.
    pub fn inscribed_radius(&self, margin_cells: usize) -> f64 {
        let m = margin_cells as f64 * self.spacing;
        let mut r = f64::INFINITY;
        for axis in 0..self.dim {
            let lo = self.origin[axis];
            let hi = lo + (self.extents[axis] - 1) as f64 * self.spacing;
            r = r.min(-lo - m).min(hi - m);
        }
        r
    }

    /// Whether a cell lies within `margin` cells of the boundary.
    #[inline]
    pub fn near_boundary(&self, idx: usize, margin: usize) -> bool {
        let (ix, iy) = self.coords(idx);
        let nx = self.extents[0];
        let x_edge = ix < margin || ix + margin >= nx;
        if self.dim == 1 {
            return x_edge;
        }
        let ny = self.extents[1];
        x_edge || iy < margin || iy + margin >= ny
    }

    /// Axis neighbours of a cell: `(backward, forward)` per axis, `None` off-grid.
    #[inline]
    pub fn neighbors(&self, idx: usize, axis: usize) -> (Option<usize>, Option<usize>) {
        let (ix, iy) = self.coords(idx);
        match axis {
            0 => (
                (ix > 0).then(|| idx - 1),
                (ix + 1 < self.extents[0]).then(|| idx + 1),
            ),
            _ => {
                let nx = self.extents[0];
                ((iy > 0).then(|| idx - nx), (iy + 1 < self.extents[1]).then(|| idx + nx))
            }
        }
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.dim == other.dim
            && self.extents == other.extents
            && (self.spacing - other.spacing).abs() <= 1e-12 * self.spacing
            && (self.origin[0] - other.origin[0]).abs() <= 1e-9 * self.spacing
            && (self.origin[1] - other.origin[1]).abs() <= 1e-9 * self.spacing
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// A real-valued function sampled on a grid at one time instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
    time: f64,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(ScalarField { grid, values, time })
    }

    /// Builds a field without the finiteness scan; used for partial fields
    /// such as arrival times that carry an infinite sentinel.
    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>, time: f64) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        ScalarField { grid, values, time }
    }

    pub fn constant(grid: Grid, value: f64, time: f64) -> Self {
        ScalarField { grid, values: vec![value; grid.len()], time }
    }

    /// Samples `f` at every cell point.
    pub fn from_fn(grid: Grid, time: f64, f: impl Fn([f64; 2]) -> f64 + Sync) -> Result<Self> {
        let values: Vec<f64> = (0..grid.len()).into_par_iter().map(|i| f(grid.point(i))).collect();
        ScalarField::new(grid, values, time)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn set_time(&mut self, time: f64) {
        self.time = time;
    }

    #[inline]
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[self.grid.index(ix, iy)]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync) -> ScalarField {
        let values = self.values.par_iter().map(|&v| f(v)).collect();
        ScalarField { grid: self.grid, values, time: self.time }
    }

    /// Integral of the field over the grid (cell sum).
    pub fn integral(&self) -> f64 {
        pairwise_sum(&self.values) * self.grid.cell_volume()
    }

    /// Bilinear (linear in 1D) interpolation at an arbitrary point, clamped
    /// to the grid.
    pub fn interpolate(&self, p: [f64; 2]) -> f64 {
        let g = &self.grid;
        let f = g.locate(p);
        let (ix, tx) = split_coordinate(f[0], g.nx());
        if g.dim() == 1 {
            let a = self.values[ix];
            let b = self.values[(ix + 1).min(g.nx() - 1)];
            return a + tx * (b - a);
        }
        let (iy, ty) = split_coordinate(f[1], g.ny());
        let ix1 = (ix + 1).min(g.nx() - 1);
        let iy1 = (iy + 1).min(g.ny() - 1);
        let v00 = self.at(ix, iy);
        let v10 = self.at(ix1, iy);
        let v01 = self.at(ix, iy1);
        let v11 = self.at(ix1, iy1);
        let a = v00 + tx * (v10 - v00);
        let b = v01 + tx * (v11 - v01);
        a + ty * (b - a)
    }

    /// Gradient by centered differences, one-sided at the grid edge.
    pub fn gradient_at(&self, idx: usize) -> [f64; 2] {
        let mut g = [0.0; 2];
        let h = self.grid.spacing();
        for (axis, slot) in g.iter_mut().enumerate().take(self.grid.dim()) {
            let (b, f) = self.grid.neighbors(idx, axis);
            *slot = match (b, f) {
                (Some(b), Some(f)) => (self.values[f] - self.values[b]) / (2.0 * h),
                (None, Some(f)) => (self.values[f] - self.values[idx]) / h,
                (Some(b), None) => (self.values[idx] - self.values[b]) / h,
                (None, None) => 0.0,
            };
        }
        g
    }

    /// Magnitude of the centered-difference gradient at every cell.
    pub fn gradient_norm(&self) -> ScalarField {
        let values = (0..self.grid.len())
            .into_par_iter()
            .map(|i| {
                let g = self.gradient_at(i);
                (g[0] * g[0] + g[1] * g[1]).sqrt()
            })
            .collect();
        ScalarField { grid: self.grid, values, time: self.time }
    }

    /// Discrete Lipschitz constant: the largest slope between a cell and any
    /// of its (axis or diagonal) neighbours.
    pub fn lipschitz_estimate(&self) -> f64 {
        let g = self.grid;
        let h = g.spacing();
        let nx = g.nx() as isize;
        let ny = g.ny() as isize;
        let offsets: &[(isize, isize, f64)] = if g.dim() == 1 {
            &[(1, 0, 1.0)]
        } else {
            &[(1, 0, 1.0), (0, 1, 1.0), (1, 1, std::f64::consts::SQRT_2), (1, -1, std::f64::consts::SQRT_2)]
        };
        (0..g.len())
            .into_par_iter()
            .map(|i| {
                let (ix, iy) = g.coords(i);
                let mut m: f64 = 0.0;
                for &(dx, dy, scale) in offsets {
                    let jx = ix as isize + dx;
                    let jy = iy as isize + dy;
                    if jx < 0 || jy < 0 || jx >= nx || jy >= ny {
                        continue;
                    }
                    let j = g.index(jx as usize, jy as usize);
                    m = m.max((self.values[j] - self.values[i]).abs() / (scale * h));
                }
                m
            })
            .reduce(|| 0.0, f64::max)
    }

    pub(crate) fn check_grid(&self, other: &ScalarField) -> Result<()> {
        self.grid.check_same(&other.grid)
    }
}

fn split_coordinate(f: f64, n: usize) -> (usize, f64) {
    let max = (n - 1) as f64;
    let f = f.clamp(0.0, max);
    let i = (f.floor() as usize).min(n.saturating_sub(2));
    (i, f - i as f64)
}

/// Order-fixed pairwise summation, so reductions do not depend on the thread
/// count.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 256;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let (a, b) = values.split_at(values.len() / 2);
    let (x, y) = rayon::join(|| pairwise_sum(a), || pairwise_sum(b));
    x + y
}

/// Space-time occupancy: one `[0, 1]`-valued field per frame time.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseIndicator {
    grid: Grid,
    times: Vec<f64>,
    frames: Vec<Vec<f64>>,
}

impl PhaseIndicator {
    pub fn new(grid: Grid, times: Vec<f64>, frames: Vec<Vec<f64>>) -> Result<Self> {
        if times.len() != frames.len() || times.is_empty() {
            return Err(Error::InvalidArgument("one frame per time required".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::UnorderedFrames);
        }
        for f in &frames {
            if f.len() != grid.len() {
                return Err(Error::GridMismatch);
            }
            if f.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::InvalidArgument("indicator values must lie in [0, 1]".into()));
            }
        }
        Ok(PhaseIndicator { grid, times, frames })
    }

    /// The same spatial frame at every time.
    pub fn constant(grid: Grid, times: &[f64], frame: &[f64]) -> Result<Self> {
        PhaseIndicator::new(grid, times.to_vec(), vec![frame.to_vec(); times.len()])
    }

    /// `1_{u >= 0}` for every slice of a trajectory.
    pub fn from_trajectory(traj: &crate::eikonal::Trajectory) -> Self {
        let frames = traj.slices().iter().map(superlevel_indicator).collect();
        PhaseIndicator { grid: *traj.grid(), times: traj.times().to_vec(), frames }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn frames(&self) -> &[Vec<f64>] {
        &self.frames
    }

    pub fn frame(&self, k: usize) -> &[f64] {
        &self.frames[k]
    }

    /// Frame in force at time `t`: the last frame whose time is `<= t`.
    pub fn frame_at(&self, t: f64) -> &[f64] {
        let k = self.times.partition_point(|&s| s <= t + 1e-12).saturating_sub(1);
        &self.frames[k]
    }

    /// Whether every frame's support keeps `margin` cells from the boundary.
    pub fn support_inside(&self, margin: usize) -> bool {
        self.frames.iter().all(|f| {
            f.iter().enumerate().all(|(i, &v)| v == 0.0 || !self.grid.near_boundary(i, margin))
        })
    }

    /// Space-time L1 distance, trapezoid rule in time.
    pub fn l1_distance(&self, other: &PhaseIndicator) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        if self.times.len() != other.times.len()
            || self.times.iter().zip(&other.times).any(|(a, b)| (a - b).abs() > 1e-12)
        {
            return Err(Error::InvalidArgument("indicators use different frame times".into()));
        }
        let cell = self.grid.cell_volume();
        let per_frame: Vec<f64> = self
            .frames
            .iter()
            .zip(&other.frames)
            .map(|(a, b)| {
                let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect();
                pairwise_sum(&d) * cell
            })
            .collect();
        Ok(trapezoid(&self.times, &per_frame))
    }
}

/// `1_{u >= 0}`; cells with `u == 0` count as inside.
pub fn superlevel_indicator(u: &ScalarField) -> Vec<f64> {
    u.values().iter().map(|&v| if v >= 0.0 { 1.0 } else { 0.0 }).collect()
}

/// Trapezoid rule on arbitrary nodes. A single node integrates to zero.
pub fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}
