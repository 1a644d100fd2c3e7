//! Initial data: truncated signed-distance profiles and their certificates.
//!
//! A datum `u0` is positive inside the initial shape, crosses zero on its
//! boundary and equals a negative floor (normally `-1`) outside a ball
//! `B(0, R0)`. The certificate records the largest `eta0` for which the
//! pointwise inequality `-|u0| - |Du0| + eta0 <= 0` holds at every cell.

use crate::distance::signed_distance;
use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use rayon::prelude::*;

/// Below this, a candidate `eta0` is treated as zero.
pub const ETA_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct H2Certificate {
    pub eta0: f64,
    /// Cell where `|u0| + |Du0|` attains its minimum.
    pub worst_cell: usize,
    /// Cells where the one-sided slopes disagree in sign along some axis
    /// (ridges of the profile). The pointwise check there uses the centered
    /// slope, which is the midpoint of the one-sided ones.
    pub kink_cells: usize,
}

#[derive(Debug, Clone)]
pub struct InitialDatum {
    field: ScalarField,
    floor: f64,
    r0: f64,
    front_radius: f64,
    lipschitz: f64,
    certificate: H2Certificate,
}

impl InitialDatum {
    /// Clamps `profile` to `[floor, -floor]`, then certifies it.
    pub fn from_profile(profile: &ScalarField, floor: f64) -> Result<Self> {
        if !(floor < 0.0) {
            return Err(Error::InvalidArgument(format!("floor must be negative, got {floor}")));
        }
        let field = profile.map(|v| v.clamp(floor, -floor)).with_time(0.0);
        let grid = *field.grid();
        if !field.values().iter().any(|&v| v > 0.0) {
            return Err(Error::EmptyShape);
        }
        let h = grid.spacing();
        let mut r0: f64 = 0.0;
        let mut front_radius: f64 = 0.0;
        let mut touches = false;
        for (i, &v) in field.values().iter().enumerate() {
            if v > floor {
                let p = grid.point(i);
                let r = p[0].hypot(p[1]);
                r0 = r0.max(r);
                if v >= 0.0 {
                    front_radius = front_radius.max(r);
                }
                touches |= grid.near_boundary(i, 1);
            }
        }
        let certificate = certify_h2(&field, floor);
        if touches || certificate.eta0 <= ETA_TOL {
            return Err(Error::NoEta { best: if touches { 0.0 } else { certificate.eta0 } });
        }
        let lipschitz = field.lipschitz_estimate();
        Ok(InitialDatum { field, floor, r0: r0 + h, front_radius, lipschitz, certificate })
    }

    /// Analytic profile `clamp(f(x), floor, -floor)`.
    pub fn from_fn(grid: Grid, floor: f64, f: impl Fn([f64; 2]) -> f64 + Sync) -> Result<Self> {
        InitialDatum::from_profile(&ScalarField::from_fn(grid, 0.0, f)?, floor)
    }

    pub fn field(&self) -> &ScalarField {
        &self.field
    }

    pub fn grid(&self) -> &Grid {
        self.field.grid()
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// Radius outside of which the datum equals its floor (one cell of slack).
    pub fn r0(&self) -> f64 {
        self.r0
    }

    /// Largest `|x|` over cells with `u0 >= 0`.
    pub fn front_radius(&self) -> f64 {
        self.front_radius
    }

    pub fn eta0(&self) -> f64 {
        self.certificate.eta0
    }

    /// Discrete `|Du0|_inf`.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn certificate(&self) -> &H2Certificate {
        &self.certificate
    }
}

/// Truncated signed-distance datum for the shape `{indicator >= 1/2}`:
/// `clamp(-d, floor, -floor)` where `d` is the signed distance (negative
/// inside).
pub fn build_truncated_sdf(grid: &Grid, shape: &[f64], floor: f64) -> Result<InitialDatum> {
    let sd = signed_distance(grid, shape)?;
    InitialDatum::from_profile(&sd.map(|v| -v), floor)
}

/// Centered slopes, except next to the floor, where the slope is taken on the
/// side that stays on the ramp.
fn certificate_slope(u: &ScalarField, floor: f64, idx: usize) -> (f64, bool) {
    let g = u.grid();
    let h = g.spacing();
    let vals = u.values();
    let c = vals[idx];
    let mut norm2 = 0.0;
    let mut kink = false;
    for axis in 0..g.dim() {
        let (b, f) = g.neighbors(idx, axis);
        let back = b.map(|j| (c - vals[j]) / h);
        let fwd = f.map(|j| (vals[j] - c) / h);
        let at_floor = |j: Option<usize>| j.is_some_and(|j| vals[j] <= floor);
        let slope = match (back, fwd) {
            (Some(bs), Some(fs)) => {
                if bs > 0.0 && fs < 0.0 {
                    kink = true;
                }
                if c > floor && at_floor(b) != at_floor(f) {
                    if bs.abs() >= fs.abs() { bs } else { fs }
                } else {
                    0.5 * (bs + fs)
                }
            }
            (Some(s), None) | (None, Some(s)) => s,
            (None, None) => 0.0,
        };
        norm2 += slope * slope;
    }
    (norm2.sqrt(), kink)
}

/// Largest `eta0` with `-|u0| - |Du0| + eta0 <= 0` at every cell.
pub fn certify_h2(u: &ScalarField, floor: f64) -> H2Certificate {
    let per_cell: Vec<(f64, bool)> = (0..u.grid().len())
        .into_par_iter()
        .map(|i| {
            let (slope, kink) = certificate_slope(u, floor, i);
            (u.values()[i].abs() + slope, kink)
        })
        .collect();
    let (worst_cell, eta0) = per_cell
        .iter()
        .enumerate()
        .map(|(i, (v, _))| (i, *v))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((0, 0.0));
    let kink_cells = per_cell.iter().filter(|(_, k)| *k).count();
    H2Certificate { eta0, worst_cell, kink_cells }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk(grid: &Grid, r: f64) -> Vec<f64> {
        (0..grid.len())
            .map(|i| {
                let p = grid.point(i);
                if p[0].hypot(p[1]) <= r { 1.0 } else { 0.0 }
            })
            .collect()
    }

    #[test]
    fn disk_datum() {
        let g = Grid::centered(2, 4.0, 0.02).unwrap();
        let h = g.spacing();
        let d = build_truncated_sdf(&g, &disk(&g, 1.0), -1.0).unwrap();
        let u = d.field();
        assert!((u.interpolate([0.0, 0.0]) - 1.0).abs() <= h);
        for i in 0..g.len() {
            let p = g.point(i);
            if p[0].hypot(p[1]) >= 2.0 + 2.0 * h {
                assert_eq!(u.values()[i], -1.0);
            }
        }
        assert!(d.eta0() >= 0.5, "eta0 = {}", d.eta0());
        assert!(d.r0() <= 2.0 + 2.0 * h);
        assert!(u.interpolate([1.0, 0.0]).abs() <= h);
        assert!(u.interpolate([0.6, 0.8]).abs() <= h);
        assert!(d.certificate().kink_cells > 0);
    }

    #[test]
    fn certificate_holds_at_every_cell() {
        let g = Grid::centered(2, 3.0, 0.03).unwrap();
        let shape: Vec<f64> = (0..g.len())
            .map(|i| {
                let p = g.point(i);
                let a = (p[0] - 0.4).hypot(p[1]) <= 0.7;
                let b = (p[0] + 0.5).hypot(p[1] - 0.2) <= 0.6;
                if a || b { 1.0 } else { 0.0 }
            })
            .collect();
        let d = build_truncated_sdf(&g, &shape, -1.0).unwrap();
        let eta0 = d.eta0();
        let u = d.field();
        for i in 0..g.len() {
            let (slope, _) = certificate_slope(u, -1.0, i);
            assert!(-u.values()[i].abs() - slope + eta0 <= 1e-12);
        }
    }

    #[test]
    fn full_and_empty_shapes_fail() {
        let g = Grid::centered(2, 1.0, 0.1).unwrap();
        assert!(matches!(build_truncated_sdf(&g, &vec![1.0; g.len()], -1.0), Err(Error::FullShape)));
        assert!(matches!(build_truncated_sdf(&g, &vec![0.0; g.len()], -1.0), Err(Error::EmptyShape)));
    }

    #[test]
    fn shape_touching_the_boundary_has_no_eta() {
        let g = Grid::centered(2, 1.0, 0.05).unwrap();
        let shape: Vec<f64> = (0..g.len()).map(|i| if g.point(i)[0] > 0.3 { 1.0 } else { 0.0 }).collect();
        assert!(matches!(build_truncated_sdf(&g, &shape, -1.0), Err(Error::NoEta { .. })));
    }

    #[test]
    fn flat_plateau_at_zero_level_kills_eta() {
        let g = Grid::centered(2, 3.0, 0.05).unwrap();
        // zero on an annulus: |u| + |Du| vanishes there
        let d = InitialDatum::from_fn(g, -1.0, |p| {
            let r = p[0].hypot(p[1]);
            if r < 0.5 { 0.5 - r } else if r < 1.0 { 0.0 } else { 1.0 - r }
        });
        assert!(matches!(d, Err(Error::NoEta { .. })));
    }

    #[test]
    fn one_dimensional_datum() {
        let g = Grid::centered(1, 3.0, 0.01).unwrap();
        let d = InitialDatum::from_fn(g, -1.0, |p| 1.0 - p[0].abs()).unwrap();
        assert!((d.r0() - 2.0).abs() < 1e-9);
        assert!(d.eta0() > 0.9);
        assert!((d.lipschitz() - 1.0).abs() < 1e-9);
    }
}
