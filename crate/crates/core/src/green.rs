//! Heat-kernel potential of a moving set and its Lipschitz dependence on the
//! dilation radius.

use crate::distance::squared_edt;
use crate::error::{Error, Result};
use crate::grid::{Grid, PhaseIndicator};
use crate::report::{EstimateReport, ReportRow};
use rayon::prelude::*;
use std::f64::consts::PI;

/// Default number of time-quadrature intervals.
pub const TIME_NODES: usize = 64;

/// `G(y, s) = (4 pi s)^{-N/2} exp(-|y|^2 / 4s)`.
pub fn heat_kernel(y: [f64; 2], s: f64, dim: usize) -> f64 {
    let r2 = if dim == 1 { y[0] * y[0] } else { y[0] * y[0] + y[1] * y[1] };
    (4.0 * PI * s).powf(-(dim as f64) / 2.0) * (-r2 / (4.0 * s)).exp()
}

/// Mass of the one-dimensional kernel at time `s` over each cell of one axis,
/// centred at `x`; returns the first index with non-negligible weight and
/// the weights from there on.
fn cell_weights(origin: f64, h: f64, n: usize, x: f64, s: f64) -> (usize, Vec<f64>) {
    let width = 2.0 * s.sqrt();
    let reach = 9.0 * width + h;
    let lo = (((x - reach - origin) / h).floor().max(0.0) as usize).min(n);
    let hi = (((x + reach - origin) / h).ceil().max(0.0) as usize + 1).min(n);
    let w = (lo..hi)
        .map(|i| {
            let c = origin + i as f64 * h;
            0.5 * (libm::erf((c + 0.5 * h - x) / width) - libm::erf((c - 0.5 * h - x) / width))
        })
        .collect();
    (lo, w)
}

/// `phi(x, t, r)` for a fixed space-time set `K` and a fixed list of radii.
/// Each dilation `K(s) + r B` is computed once per frame, as a fractional
/// cell indicator.
#[derive(Debug, Clone)]
pub struct GreenPotential {
    grid: Grid,
    times: Vec<f64>,
    radii: Vec<f64>,
    /// `dilated[r][frame]`
    dilated: Vec<Vec<Vec<f64>>>,
    nodes: usize,
}

impl GreenPotential {
    pub fn new(k: &PhaseIndicator, radii: &[f64]) -> Result<Self> {
        if radii.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
            return Err(Error::InvalidArgument("dilation radii must be finite and nonnegative".into()));
        }
        let grid = *k.grid();
        let h = grid.spacing();
        let edts: Vec<Vec<f64>> = k
            .frames()
            .par_iter()
            .map(|f| squared_edt(&grid, &f.iter().map(|&v| v >= 0.5).collect::<Vec<_>>()))
            .collect();
        let dilated = radii
            .iter()
            .map(|&r| {
                // cells at distance r + h carry no weight, so width r is exact on grid-aligned fronts
                let reach = 1.0 + r / h;
                edts.iter().map(|d| d.iter().map(|&d2| (reach - d2.sqrt()).clamp(0.0, 1.0)).collect()).collect()
            })
            .collect();
        Ok(GreenPotential { grid, times: k.times().to_vec(), radii: radii.to_vec(), dilated, nodes: TIME_NODES })
    }

    /// Number of time-quadrature intervals (rounded up to even).
    pub fn with_nodes(mut self, nodes: usize) -> Self {
        self.nodes = (nodes.max(2) + 1) & !1;
        self
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    fn frame(&self, ri: usize, s: f64) -> &[f64] {
        let k = self.times.partition_point(|&q| q <= s + 1e-12).saturating_sub(1);
        &self.dilated[ri][k]
    }

    /// `(G(., tau) * 1_F)(x)` with the kernel integrated exactly over cells.
    fn smoothed(&self, frame: &[f64], x: [f64; 2], tau: f64) -> f64 {
        let g = &self.grid;
        if tau <= 0.0 {
            let l = g.locate(x);
            let ix = (l[0].round().max(0.0) as usize).min(g.nx() - 1);
            let iy = (l[1].round().max(0.0) as usize).min(g.ny() - 1);
            return frame[g.index(ix, iy)];
        }
        let (h, o) = (g.spacing(), g.origin());
        let (x0, wx) = cell_weights(o[0], h, g.nx(), x[0], tau);
        let (y0, wy) = if g.dim() == 2 { cell_weights(o[1], h, g.ny(), x[1], tau) } else { (0, vec![1.0]) };
        let nx = g.nx();
        wy.iter()
            .enumerate()
            .map(|(jy, wyv)| {
                let row = &frame[(y0 + jy) * nx..(y0 + jy + 1) * nx];
                wyv * wx.iter().enumerate().map(|(jx, w)| w * row[x0 + jx]).sum::<f64>()
            })
            .sum()
    }

    /// Radius index, matching to `1e-12`.
    fn radius_index(&self, r: f64) -> Result<usize> {
        self.radii
            .iter()
            .position(|q| (q - r).abs() <= 1e-12)
            .ok_or_else(|| Error::InvalidArgument(format!("radius {r} was not precomputed")))
    }

    /// `int_0^t int G(x - y, t - s) 1_{K(s) + rB}(y) dy ds`, with
    /// `t - s = sigma^2` and Simpson's rule in `sigma`. `t = 0` gives `0`.
    pub fn phi(&self, x: [f64; 2], t: f64, r: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::InvalidArgument("negative time".into()));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        let ri = self.radius_index(r)?;
        let n = self.nodes;
        let top = t.sqrt();
        let dsig = top / n as f64;
        let total: f64 = (0..=n)
            .into_par_iter()
            .map(|k| {
                let sig = k as f64 * dsig;
                let w = if k == 0 || k == n {
                    1.0
                } else if k % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                w * 2.0 * sig * self.smoothed(self.frame(ri, t - sig * sig), x, sig * sig)
            })
            .sum();
        Ok(total * dsig / 3.0)
    }
}

/// One-off `phi` for a single radius.
pub fn phi(x: [f64; 2], t: f64, r: f64, k: &PhaseIndicator) -> Result<f64> {
    GreenPotential::new(k, &[r])?.phi(x, t, r)
}

/// `|phi(x,t,r) - phi(x,t,0)| <= lambda0 r` over all samples; `coverage`
/// is the smallest cone-certificate coverage over the frames of `K`. The
/// potential must hold radius `0` and every sampled radius.
pub fn lipschitz_in_r_check(
    potential: &GreenPotential,
    coverage: f64,
    xs: &[[f64; 2]],
    ts: &[f64],
    rs: &[f64],
    lambda0: f64,
) -> Result<EstimateReport> {
    if coverage < 1.0 {
        return Err(Error::CertificateMissing { coverage });
    }
    let tol = 1e-6;
    let mut report = EstimateReport::new("green_lipschitz_in_r");
    let mut worst: f64 = 0.0;
    for &t in ts {
        for &x in xs {
            let base = potential.phi(x, t, 0.0)?;
            for &r in rs {
                let d = (potential.phi(x, t, r)? - base).abs();
                if r > 0.0 {
                    worst = worst.max(d / r);
                }
                report.push(ReportRow::upper(t, d, lambda0 * r, lambda0 * r + tol));
            }
        }
    }
    report.metric("lambda_hat0", worst);
    Ok(report)
}

fn integrand(dim: usize, q: f64) -> f64 {
    // u = exp(-q^2) turns the 1/sqrt(u) singularity into a Gaussian weight
    let nm1 = (dim - 1) as f64;
    let inner = (2.0 * nm1 * q * q).sqrt() + 1.0;
    2.0 * q * (inner.powi(dim as i32) + 1.0) * (-0.5 * q * q).exp()
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// `int_0^1 ((|2(N-1) log u|^{1/2} + 1)^N + 1) / sqrt(u) du` for `N` in
/// `{1, 2}`, to relative accuracy `1e-8` or better.
pub fn i_n_constant(dim: usize) -> Result<f64> {
    i_n_with_tolerance(dim, 1e-12)
}

/// As [`i_n_constant`] with an explicit absolute tolerance for the
/// adaptive rule.
pub fn i_n_with_tolerance(dim: usize, tol: f64) -> Result<f64> {
    if !(1..=2).contains(&dim) {
        return Err(Error::InvalidArgument(format!("dimension {dim} not supported")));
    }
    // the tail beyond q = 14 is below 1e-40
    Ok(adaptive_simpson(&|q| integrand(dim, q), 0.0, 14.0, tol))
}
