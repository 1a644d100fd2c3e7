//! Front extraction, perimeter and volume, interior cone certification and
//! the level-band measure estimate.

use crate::eikonal::Trajectory;
use crate::error::{Error, Result};
use crate::grid::{pairwise_sum, trapezoid, Grid, ScalarField};
use crate::measure::{band_measure, superlevel_measure};
use crate::report::{EstimateReport, ReportRow};
use rayon::prelude::*;
use std::collections::HashMap;
use std::fmt::Write as _;

/// Contour `{u = level}` as closed polylines (2D) or crossing points (1D).
#[derive(Debug, Clone, PartialEq)]
pub struct FrontSet {
    pub grid: Grid,
    pub level: f64,
    /// Closed polylines; the last vertex connects back to the first.
    pub polylines: Vec<Vec<[f64; 2]>>,
    /// `1_{u >= level}`.
    pub enclosed: Vec<f64>,
}

fn crossing(pa: [f64; 2], pb: [f64; 2], ua: f64, ub: f64, level: f64) -> [f64; 2] {
    let s = ((level - ua) / (ub - ua)).clamp(0.0, 1.0);
    [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])]
}

/// Marching squares with linear interpolation along cell edges; saddles are
/// resolved by the cell average.
pub fn extract_front(u: &ScalarField, level: f64) -> Result<FrontSet> {
    let g = *u.grid();
    let v = u.values();
    let enclosed: Vec<f64> = v.iter().map(|&x| if x >= level { 1.0 } else { 0.0 }).collect();
    if enclosed.iter().all(|&e| e == 0.0) {
        return Err(Error::EmptyLevelSet { level });
    }
    if (0..g.len()).any(|i| enclosed[i] == 1.0 && g.near_boundary(i, 1)) {
        return Err(Error::TouchesBoundary);
    }
    if g.dim() == 1 {
        let polylines = (0..g.len() - 1)
            .filter(|&i| enclosed[i] != enclosed[i + 1])
            .map(|i| vec![crossing(g.point(i), g.point(i + 1), v[i], v[i + 1], level)])
            .collect();
        return Ok(FrontSet { grid: g, level, polylines, enclosed });
    }
    let (nx, ny) = (g.nx(), g.ny());
    // edge ids: 2 * idx for the edge to the right of node idx, 2 * idx + 1 upward
    let mut points: HashMap<usize, [f64; 2]> = HashMap::new();
    let mut links: HashMap<usize, Vec<usize>> = HashMap::new();
    let point_of = |e: usize| -> [f64; 2] {
        let idx = e / 2;
        let other = if e.is_multiple_of(2) { idx + 1 } else { idx + nx };
        crossing(g.point(idx), g.point(other), v[idx], v[other], level)
    };
    for iy in 0..ny - 1 {
        for ix in 0..nx - 1 {
            let c = [g.index(ix, iy), g.index(ix + 1, iy), g.index(ix + 1, iy + 1), g.index(ix, iy + 1)];
            let inside = c.map(|i| enclosed[i] == 1.0);
            let bottom = 2 * c[0];
            let right = 2 * c[1] + 1;
            let top = 2 * c[3];
            let left = 2 * c[0] + 1;
            let cut = |a: usize, b: usize| inside[a] != inside[b];
            let edges: Vec<usize> = [(bottom, 0, 1), (right, 1, 2), (top, 3, 2), (left, 0, 3)]
                .iter()
                .filter(|&&(_, a, b)| cut(a, b))
                .map(|&(e, _, _)| e)
                .collect();
            let segments: Vec<(usize, usize)> = match edges.len() {
                0 => Vec::new(),
                2 => vec![(edges[0], edges[1])],
                _ => {
                    let centre = c.iter().map(|&i| v[i]).sum::<f64>() / 4.0 >= level;
                    // true when corners 0 and 2 are the inside pair
                    let diag02 = inside[0];
                    if centre == diag02 {
                        vec![(bottom, right), (top, left)]
                    } else {
                        vec![(left, bottom), (right, top)]
                    }
                }
            };
            for (a, b) in segments {
                for e in [a, b] {
                    points.entry(e).or_insert_with(|| point_of(e));
                }
                links.entry(a).or_default().push(b);
                links.entry(b).or_default().push(a);
            }
        }
    }
    let mut keys: Vec<usize> = links.keys().copied().collect();
    keys.sort_unstable();
    let mut visited: HashMap<usize, bool> = HashMap::new();
    let mut polylines = Vec::new();
    for start in keys {
        if visited.contains_key(&start) {
            continue;
        }
        let mut line = vec![points[&start]];
        visited.insert(start, true);
        let mut prev = start;
        let mut cur = links[&start][0];
        while cur != start {
            visited.insert(cur, true);
            line.push(points[&cur]);
            let next = links[&cur].iter().copied().find(|&n| n != prev).unwrap_or(start);
            prev = cur;
            cur = next;
        }
        polylines.push(line);
    }
    Ok(FrontSet { grid: g, level, polylines, enclosed })
}

fn segments(front: &FrontSet) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
    front.polylines.iter().flat_map(|line| {
        let n = line.len();
        (0..if n > 1 { n } else { 0 }).map(move |k| (line[k], line[(k + 1) % n]))
    })
}

/// Total polyline length in 2D; the number of crossing points in 1D.
pub fn perimeter(front: &FrontSet) -> f64 {
    if front.grid.dim() == 1 {
        return front.polylines.len() as f64;
    }
    let lens: Vec<f64> = segments(front).map(|(a, b)| (b[0] - a[0]).hypot(b[1] - a[1])).collect();
    pairwise_sum(&lens)
}

/// Length of the part of `[a, b]` inside the closed disk `B(0, r)`.
fn clipped_length(a: [f64; 2], b: [f64; 2], r: f64) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    if len2 == 0.0 {
        return 0.0;
    }
    // |a + s d|^2 <= r^2 for s in [s0, s1]
    let bq = a[0] * d[0] + a[1] * d[1];
    let cq = a[0] * a[0] + a[1] * a[1] - r * r;
    let disc = bq * bq - len2 * cq;
    if disc <= 0.0 {
        return 0.0;
    }
    let root = disc.sqrt();
    let s0 = ((-bq - root) / len2).max(0.0);
    let s1 = ((-bq + root) / len2).min(1.0);
    (s1 - s0).max(0.0) * len2.sqrt()
}

/// Perimeter inside the closed ball `B(0, r)`.
pub fn perimeter_within(front: &FrontSet, r: f64) -> f64 {
    if front.grid.dim() == 1 {
        return front.polylines.iter().filter(|p| p[0][0].abs() <= r).count() as f64;
    }
    let lens: Vec<f64> = segments(front).map(|(a, b)| clipped_length(a, b, r)).collect();
    pairwise_sum(&lens)
}

/// Cell-sum volume of the enclosed set inside `B(0, r)`.
pub fn volume_within(front: &FrontSet, r: f64) -> f64 {
    let g = front.grid;
    let cells: Vec<f64> = (0..g.len())
        .map(|i| {
            let p = g.point(i);
            if p[0].hypot(p[1]) <= r { front.enclosed[i] } else { 0.0 }
        })
        .collect();
    pairwise_sum(&cells) * g.cell_volume()
}

/// Symmetric Hausdorff distance between the vertex sets of two fronts.
pub fn hausdorff_distance(a: &FrontSet, b: &FrontSet) -> f64 {
    let pa: Vec<[f64; 2]> = a.polylines.iter().flatten().copied().collect();
    let pb: Vec<[f64; 2]> = b.polylines.iter().flatten().copied().collect();
    if pa.is_empty() || pb.is_empty() {
        return if pa.is_empty() && pb.is_empty() { 0.0 } else { f64::INFINITY };
    }
    let one_way = |x: &[[f64; 2]], y: &[[f64; 2]]| {
        x.par_iter()
            .map(|p| y.iter().map(|q| (p[0] - q[0]).hypot(p[1] - q[1])).fold(f64::INFINITY, f64::min))
            .reduce(|| 0.0, f64::max)
    };
    one_way(&pa, &pb).max(one_way(&pb, &pa))
}

/// `x, y, polyline_id` rows with header.
pub fn front_to_csv(front: &FrontSet) -> String {
    let mut out = String::from("x,y,polyline_id\n");
    for (id, line) in front.polylines.iter().enumerate() {
        for p in line {
            let _ = writeln!(out, "{},{},{}", p[0], p[1], id);
        }
    }
    out
}

/// Height `theta` and base radius `rho` of the interior cones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeParams {
    pub rho: f64,
    pub theta: f64,
}

impl ConeParams {
    pub fn new(rho: f64, theta: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < theta) {
            return Err(Error::BadParams { rho, theta });
        }
        Ok(ConeParams { rho, theta })
    }

    /// Both lengths multiplied by `1 - 4h / theta`; `None` when that factor
    /// is not positive.
    pub fn with_grid_slack(&self, h: f64) -> Option<ConeParams> {
        let s = 1.0 - 4.0 * h / self.theta;
        (s > 0.0).then_some(ConeParams { rho: self.rho * s, theta: self.theta * s })
    }
}

/// `theta = min(c_lo^2 / (6 C c_hi), c_lo omega_R^{-1}(c_lo / 4), r)` and
/// `rho = c_lo theta / (2 c_hi)`. Pass `|_| f64::INFINITY` as the inverse
/// modulus for velocities constant in time.
pub fn cone_parameters(
    c_lo: f64,
    c_hi: f64,
    c: f64,
    omega_r_inverse: impl Fn(f64) -> f64,
    r: f64,
) -> Result<ConeParams> {
    for (name, value) in [("c_lo", c_lo), ("c_hi", c_hi), ("C", c), ("r", r)] {
        if !(value > 0.0) {
            return Err(Error::NonpositiveInput(name));
        }
    }
    let theta = (c_lo * c_lo / (6.0 * c * c_hi)).min(c_lo * omega_r_inverse(c_lo / 4.0)).min(r);
    let rho = c_lo * theta / (2.0 * c_hi);
    ConeParams::new(rho, theta)
}

/// Velocity constants realised along a run: bounds, spatial Lipschitz
/// constant and time-Lipschitz constant `L_t` (so `omega_R(s) = L_t s`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityConstants {
    pub c_lo: f64,
    pub c_hi: f64,
    pub lipschitz: f64,
    pub time_lipschitz: f64,
}

impl VelocityConstants {
    /// `L_t` is measured inside `B(0, radius)` between consecutive recorded
    /// velocities.
    pub fn measure(traj: &Trajectory, radius: f64) -> Self {
        let vel = traj.velocities();
        let g = traj.grid();
        let inside: Vec<usize> = (0..g.len())
            .filter(|&i| {
                let p = g.point(i);
                p[0].hypot(p[1]) <= radius
            })
            .collect();
        let mut time_lipschitz: f64 = 0.0;
        for k in 1..vel.len() {
            let dt = traj.times()[k] - traj.times()[k - 1];
            let (a, b) = (vel[k - 1].values(), vel[k].values());
            let gap = inside.iter().map(|&i| (a[i] - b[i]).abs()).fold(0.0, f64::max);
            time_lipschitz = time_lipschitz.max(gap / dt);
        }
        VelocityConstants {
            c_lo: vel.iter().map(|c| c.min()).fold(f64::INFINITY, f64::min),
            c_hi: vel.iter().map(|c| c.max()).fold(0.0, f64::max),
            lipschitz: vel.iter().map(|c| c.lipschitz_estimate()).fold(0.0, f64::max),
            time_lipschitz,
        }
    }

    /// Cone parameters with `omega_R^{-1}(s) = s / L_t` and interior ball
    /// radius `r`. A zero Lipschitz constant makes the first branch inactive.
    pub fn cone_parameters(&self, r: f64) -> Result<ConeParams> {
        let lt = self.time_lipschitz;
        let c = if self.lipschitz > 0.0 { self.lipschitz } else { f64::MIN_POSITIVE };
        cone_parameters(self.c_lo, self.c_hi, c, |s| if lt > 0.0 { s / lt } else { f64::INFINITY }, r)
    }
}

/// Sample offsets `(along, across)` of the cone in the frame of its axis,
/// on a lattice of spacing at most `h / 2`. The lattice depends on `theta`
/// and `h` only, so samples for a smaller `rho` are a subset.
fn cone_samples(params: &ConeParams, h: f64, dim: usize) -> Vec<[f64; 2]> {
    let step = h / 2.0;
    let n = (params.theta / step).ceil() as usize;
    let dl = params.theta / n as f64;
    let slope = params.rho / params.theta;
    let mut out = Vec::new();
    for k in 0..=n {
        let lambda = k as f64 * dl;
        let radius = lambda * slope;
        let m = (radius / step).floor() as i64 + 1;
        for ia in -m..=m {
            let a = ia as f64 * step;
            if dim == 1 {
                if a.abs() <= radius {
                    out.push([lambda + a, 0.0]);
                }
                continue;
            }
            for ib in -m..=m {
                let b = ib as f64 * step;
                if a * a + b * b <= radius * radius {
                    out.push([lambda + a, b]);
                }
            }
        }
    }
    out
}

fn fits_with(u: &ScalarField, x: [f64; 2], nu: [f64; 2], samples: &[[f64; 2]], slack: f64) -> bool {
    let g = u.grid();
    let ext = g.extents();
    let perp = [-nu[1], nu[0]];
    samples.iter().all(|s| {
        let p = [x[0] + s[0] * nu[0] + s[1] * perp[0], x[1] + s[0] * nu[1] + s[1] * perp[1]];
        let loc = g.locate(p);
        let inside_grid = loc[0] >= 0.0
            && loc[0] <= (ext[0] - 1) as f64
            && (g.dim() == 1 || (loc[1] >= 0.0 && loc[1] <= (ext[1] - 1) as f64));
        inside_grid && u.interpolate(p) >= -slack
    })
}

/// Whether the cone `x + [0, theta] B(nu, rho / theta)` lies in `{u >= 0}`
/// up to the grid slack `h |Du|_inf`.
pub fn cone_fits(u: &ScalarField, x: [f64; 2], nu: [f64; 2], params: &ConeParams) -> Result<bool> {
    let params = ConeParams::new(params.rho, params.theta)?;
    let h = u.grid().spacing();
    let n = nu[0].hypot(nu[1]);
    let nu = [nu[0] / n, nu[1] / n];
    let samples = cone_samples(&params, h, u.grid().dim());
    Ok(fits_with(u, x, nu, &samples, h * u.lipschitz_estimate()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeSample {
    pub point: [f64; 2],
    pub axis: [f64; 2],
    pub fits: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeCertificate {
    pub params: ConeParams,
    pub samples: Vec<ConeSample>,
    pub coverage: f64,
}

/// Tries the inward normal `Du / |Du|` first and then `axis_count` evenly
/// spread directions at every front vertex.
pub fn cone_certificate(
    u: &ScalarField,
    front: &FrontSet,
    params: &ConeParams,
    axis_count: usize,
) -> Result<ConeCertificate> {
    let params = ConeParams::new(params.rho, params.theta)?;
    if axis_count < 8 {
        return Err(Error::InvalidArgument("axis_count must be at least 8".into()));
    }
    let g = u.grid();
    let h = g.spacing();
    let lattice = cone_samples(&params, h, g.dim());
    let slack = h * u.lipschitz_estimate();
    let vertices: Vec<[f64; 2]> = front.polylines.iter().flatten().copied().collect();
    let axes: Vec<[f64; 2]> = if g.dim() == 1 {
        vec![[1.0, 0.0], [-1.0, 0.0]]
    } else {
        (0..axis_count)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * k as f64 / axis_count as f64;
                [a.cos(), a.sin()]
            })
            .collect()
    };
    let samples: Vec<ConeSample> = vertices
        .par_iter()
        .map(|&x| {
            let d = [
                (u.interpolate([x[0] + h, x[1]]) - u.interpolate([x[0] - h, x[1]])) / (2.0 * h),
                if g.dim() == 2 {
                    (u.interpolate([x[0], x[1] + h]) - u.interpolate([x[0], x[1] - h])) / (2.0 * h)
                } else {
                    0.0
                },
            ];
            let n = d[0].hypot(d[1]);
            let normal = if n > 0.0 { Some([d[0] / n, d[1] / n]) } else { None };
            let found = normal
                .into_iter()
                .chain(axes.iter().copied())
                .find(|&nu| fits_with(u, x, nu, &lattice, slack));
            ConeSample { point: x, axis: found.or(normal).unwrap_or([1.0, 0.0]), fits: found.is_some() }
        })
        .collect();
    let coverage = if samples.is_empty() {
        0.0
    } else {
        samples.iter().filter(|s| s.fits).count() as f64 / samples.len() as f64
    };
    Ok(ConeCertificate { params, samples, coverage })
}

/// Perimeter in `B(0, R)` against `lambda_hat` times the volume in
/// `B(0, R + rho / 4)`. The measured ratio is kept as metric `ratio`.
pub fn perimeter_bound_check(
    front: &FrontSet,
    certificate: &ConeCertificate,
    radius: f64,
    lambda_hat: f64,
) -> Result<EstimateReport> {
    if certificate.coverage < 1.0 {
        return Err(Error::CertificateMissing { coverage: certificate.coverage });
    }
    let lhs = perimeter_within(front, radius);
    let volume = volume_within(front, radius + certificate.params.rho / 4.0);
    let rhs = lambda_hat * volume;
    let mut report = EstimateReport::new("perimeter_bound");
    report.metric("ratio", lhs / volume);
    report.metric("lambda_hat", lambda_hat);
    report.push(ReportRow::upper(0.0, lhs, rhs, rhs));
    Ok(report)
}

/// Time-integrated band measure `int_0^tau L^N({a <= u <= b})` against the
/// datum-level bound `(b - a) / (eta_bar c_lo) [L^N({u0 >= a - c_hi |Du0| tau}) - L^N({u0 >= b})]`,
/// for every recorded `tau` up to `horizon`.
#[allow(clippy::too_many_arguments)]
pub fn band_estimate_check(
    traj: &Trajectory,
    a: f64,
    b: f64,
    eta: f64,
    eta_bar: f64,
    c_lo: f64,
    c_hi: f64,
    du0_inf: f64,
    horizon: f64,
) -> Result<EstimateReport> {
    if !(a < b) {
        return Err(Error::BadBand { a, b });
    }
    if a < -eta / 2.0 || b > eta / 2.0 {
        return Err(Error::BandOutsideEta { a, b, lo: -eta / 2.0, hi: eta / 2.0 });
    }
    let h = traj.grid().spacing();
    let u0 = traj.first();
    let measures: Vec<f64> = traj.slices().iter().map(|s| band_measure(s, a, b)).collect::<Result<_>>()?;
    let mut report = EstimateReport::new("band_estimate");
    report.metric("eta", eta);
    report.metric("eta_bar", eta_bar);
    let last = traj.times().partition_point(|&t| t <= horizon + 1e-12);
    for k in 1..last {
        let tau = traj.times()[k];
        let lhs = trapezoid(&traj.times()[..=k], &measures[..=k]);
        let outer = superlevel_measure(u0, a - c_hi * du0_inf * tau);
        let rhs = (b - a) / (eta_bar * c_lo) * (outer - superlevel_measure(u0, b));
        report.push(ReportRow::upper(tau, lhs, rhs, rhs * (1.0 + 10.0 * h)));
    }
    Ok(report)
}
