//! Dislocation-type velocity `c[chi] = c0 * chi + c1`.

use super::conv::Convolver;
use super::{PhaseSource, TimeSeries};
use crate::eikonal::Velocity;
use crate::error::{Error, Result};
use crate::grid::{pairwise_sum, Grid, ScalarField};
use crate::report::{EstimateReport, ReportRow};

/// Constants induced by the kernel and the background speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct H3Constants {
    /// `min_t min_x (c1 - |c0(., t)|_{L1})`.
    pub c_lo: f64,
    /// `max_t max_x (c1 + |c0(., t)|_{L1})`.
    pub c_hi: f64,
    /// Spatial Lipschitz bound of `c[chi]`, uniform over `0 <= chi <= 1`.
    pub lipschitz: f64,
    pub kernel_l1: f64,
    pub kernel_sup: f64,
}

/// Kernel `scale * 1_{B(0, radius)}` sampled on the smallest centered grid
/// that leaves two empty cells around the disk.
pub fn disk_kernel(dim: usize, h: f64, radius: f64, scale: f64) -> Result<ScalarField> {
    let half = ((radius / h).ceil() as usize + 2).max(4);
    let g = Grid::centered(dim, half as f64 * h, h)?;
    ScalarField::from_fn(g, 0.0, |p| if p[0].hypot(p[1]) <= radius { scale } else { 0.0 })
}

/// Largest `sum_y |k(y + d) - k(y)| h^dim / |d|` over the axis and diagonal
/// neighbour offsets `d`. For `0 <= chi <= 1` the discrete slope of `k * chi`
/// along `d` never exceeds this number.
pub fn kernel_lipschitz(kernel: &ScalarField) -> f64 {
    let g = kernel.grid();
    let h = g.spacing();
    let (nx, ny) = (g.nx() as isize, g.ny() as isize);
    let offsets: &[(isize, isize)] = if g.dim() == 1 { &[(1, 0)] } else { &[(1, 0), (0, 1), (1, 1), (1, -1)] };
    let v = kernel.values();
    let at = |x: isize, y: isize| {
        if x < 0 || y < 0 || x >= nx || y >= ny { 0.0 } else { v[(y * nx + x) as usize] }
    };
    offsets
        .iter()
        .map(|&(dx, dy)| {
            let mut diffs = Vec::new();
            for y in -1..=ny {
                if g.dim() == 1 && y != 0 {
                    continue;
                }
                for x in -1..=nx {
                    diffs.push((at(x + dx, y + dy) - at(x, y)).abs());
                }
            }
            let len = ((dx * dx + dy * dy) as f64).sqrt() * h;
            pairwise_sum(&diffs) * g.cell_volume() / len
        })
        .fold(0.0, f64::max)
}

#[derive(Debug)]
pub struct DislocationModel {
    grid: Grid,
    kernels: TimeSeries,
    c1: TimeSeries,
    convolvers: Vec<Convolver>,
    constants: H3Constants,
}

impl DislocationModel {
    /// `kernels` live on a centered kernel grid with the field spacing; `c1`
    /// on the simulation grid.
    pub fn new(grid: Grid, kernels: TimeSeries, c1: TimeSeries) -> Result<Self> {
        for f in c1.fields() {
            grid.check_same(f.grid())?;
        }
        let convolvers = kernels
            .fields()
            .iter()
            .map(|k| Convolver::new(&grid, k.grid(), k.values()))
            .collect::<Result<Vec<_>>>()?;
        let constants = derive_constants(&kernels, &c1);
        Ok(DislocationModel { grid, kernels, c1, convolvers, constants })
    }

    /// Time-independent kernel and background speed.
    pub fn stationary(grid: Grid, kernel: ScalarField, c1: ScalarField) -> Result<Self> {
        DislocationModel::new(grid, TimeSeries::constant(kernel), TimeSeries::constant(c1))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn constants(&self) -> H3Constants {
        self.constants
    }

    pub fn kernels(&self) -> &TimeSeries {
        &self.kernels
    }

    pub fn c1(&self) -> &TimeSeries {
        &self.c1
    }
}

fn l1(f: &ScalarField) -> f64 {
    let a: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();
    pairwise_sum(&a) * f.grid().cell_volume()
}

fn merged_times(a: &TimeSeries, b: &TimeSeries) -> Vec<f64> {
    let mut t: Vec<f64> = a.times().iter().chain(b.times()).copied().collect();
    t.sort_by(f64::total_cmp);
    t.dedup();
    t
}

fn derive_constants(kernels: &TimeSeries, c1: &TimeSeries) -> H3Constants {
    let mut k = H3Constants {
        c_lo: f64::INFINITY,
        c_hi: f64::NEG_INFINITY,
        lipschitz: 0.0,
        kernel_l1: 0.0,
        kernel_sup: 0.0,
    };
    let mut kernel_lip: f64 = 0.0;
    let mut c1_lip: f64 = 0.0;
    for t in merged_times(kernels, c1) {
        let c0 = kernels.at(t);
        let bg = c1.at(t);
        let m = l1(&c0);
        k.kernel_l1 = k.kernel_l1.max(m);
        k.kernel_sup = k.kernel_sup.max(c0.max_abs());
        k.c_lo = k.c_lo.min(bg.min() - m);
        k.c_hi = k.c_hi.max(bg.max() + m);
        kernel_lip = kernel_lip.max(kernel_lipschitz(&c0));
        c1_lip = c1_lip.max(bg.lipschitz_estimate());
    }
    k.lipschitz = kernel_lip + c1_lip;
    k
}

/// Checks the four inequalities of the dislocation hypothesis and returns the
/// induced constants.
pub fn validate_h3(model: &DislocationModel) -> Result<(H3Constants, EstimateReport)> {
    let k = model.constants;
    let mut report = EstimateReport::new("h3");
    report.metric("c_lo", k.c_lo);
    report.metric("c_hi", k.c_hi);
    report.metric("lipschitz", k.lipschitz);
    report.metric("kernel_l1", k.kernel_l1);
    for t in merged_times(&model.kernels, &model.c1) {
        let c0 = model.kernels.at(t);
        let bg = model.c1.at(t);
        let m = l1(&c0);
        let lower = bg.min() - m;
        let upper = bg.max() + m;
        let checks = [
            ("|c0| <= c_hi", ReportRow::upper(t, c0.max_abs(), k.c_hi, k.c_hi)),
            ("0 < c_lo", ReportRow::lower(t, k.c_lo, 0.0, f64::MIN_POSITIVE)),
            ("c_lo <= c1 - |c0|_L1", ReportRow::lower(t, lower, k.c_lo, k.c_lo)),
            ("c1 + |c0|_L1 <= c_hi", ReportRow::upper(t, upper, k.c_hi, k.c_hi)),
        ];
        for (name, row) in checks {
            if !row.pass {
                return Err(Error::H3Violation(format!(
                    "{name} fails at t = {t}: lhs {:.6}, rhs {:.6}",
                    row.lhs, row.rhs
                )));
            }
            report.push(row);
        }
    }
    Ok((k, report))
}

/// `c = c0(., t) * chi + c1(., t)` on the model grid.
pub fn dislocation_velocity(model: &DislocationModel, chi: &[f64], t: f64) -> Result<ScalarField> {
    let (i, j, w) = model.kernels.bracket(t);
    let mut conv = model.convolvers[i].apply(chi)?;
    if w > 0.0 {
        let other = model.convolvers[j].apply(chi)?;
        conv.iter_mut().zip(other).for_each(|(a, b)| *a += w * (b - *a));
    }
    let bg = model.c1.at(t);
    let values = conv.iter().zip(bg.values()).map(|(a, b)| a + b).collect();
    ScalarField::new(model.grid, values, t)
}

/// Velocity provider for the eikonal solver.
pub struct DislocationVelocity<'a> {
    pub model: &'a DislocationModel,
    pub phase: PhaseSource,
}

impl Velocity for DislocationVelocity<'_> {
    fn velocity(&mut self, t: f64, u: &ScalarField) -> Result<ScalarField> {
        let chi = self.phase.frame(t, u);
        dislocation_velocity(self.model, &chi, t)
    }

    fn c_bar(&self) -> f64 {
        self.model.constants.c_hi
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn disk_kernel_constants() {
        let h = 0.02;
        let grid = Grid::centered(2, 3.0, h).unwrap();
        let kernel = disk_kernel(2, h, 1.0, 0.25).unwrap();
        let model = DislocationModel::stationary(grid, kernel, ScalarField::constant(grid, 1.0, 0.0)).unwrap();
        let (k, report) = validate_h3(&model).unwrap();
        assert!(report.pass());
        assert!((k.kernel_l1 - PI / 4.0).abs() < 2e-3, "{}", k.kernel_l1);
        assert!((k.c_lo - (1.0 - PI / 4.0)).abs() < 2e-3);
        assert!((k.c_hi - (1.0 + PI / 4.0)).abs() < 2e-3);
        // directional variation of a disk indicator: scale * 2 * diameter
        assert!((k.lipschitz - 1.0).abs() < 0.03, "{}", k.lipschitz);
    }

    #[test]
    fn weak_background_violates_h3() {
        let h = 0.05;
        let grid = Grid::centered(2, 3.0, h).unwrap();
        let kernel = disk_kernel(2, h, 1.0, 0.25).unwrap();
        let model = DislocationModel::stationary(grid, kernel, ScalarField::constant(grid, 0.5, 0.0)).unwrap();
        match validate_h3(&model) {
            Err(Error::H3Violation(msg)) => assert!(msg.contains("0 < c_lo"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_kernel_gives_background() {
        let h = 0.05;
        let grid = Grid::centered(2, 2.0, h).unwrap();
        let kernel = disk_kernel(2, h, 1.0, 0.0).unwrap();
        let model = DislocationModel::stationary(grid, kernel, ScalarField::constant(grid, 1.0, 0.0)).unwrap();
        let (k, _) = validate_h3(&model).unwrap();
        assert_eq!((k.c_lo, k.c_hi), (1.0, 1.0));
    }
}
