//! Minimal-time function of the expanding front and Pontryagin extremals.

use crate::eikonal::Trajectory;
use crate::error::{Error, Result};
use crate::fpf1::INFINITY_SENTINEL;
use crate::grid::{Grid, ScalarField};
use crate::report::{EstimateReport, ReportRow};
use rayon::prelude::*;
use std::fmt::Write as _;

/// First arrival time of `{u >= 0}` per cell; `f64::INFINITY` where the
/// front never arrives within the recorded horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimalTimeField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl MinimalTimeField {
    /// The field with unreached cells encoded by [`INFINITY_SENTINEL`].
    pub fn to_field(&self) -> ScalarField {
        let v = self.values.iter().map(|&t| if t.is_finite() { t } else { INFINITY_SENTINEL }).collect();
        ScalarField::new(self.grid, v, 0.0).expect("sentinel-encoded values are finite")
    }
}

/// Per cell, the first recorded time with `u >= 0`, refined linearly in time
/// between slices.
pub fn minimal_time(traj: &Trajectory) -> Result<MinimalTimeField> {
    let g = *traj.grid();
    let slices = traj.slices();
    let times = traj.times();
    let values = (0..g.len())
        .into_par_iter()
        .map(|i| {
            let mut prev = slices[0].values()[i];
            if prev >= 0.0 {
                return Ok(0.0);
            }
            for k in 1..slices.len() {
                let cur = slices[k].values()[i];
                if cur < prev - 1e-12 {
                    return Err(Error::NotMonotone { cell: i, drop: prev - cur });
                }
                if cur >= 0.0 {
                    let w = -prev / (cur - prev);
                    return Ok(times[k - 1] + w * (times[k] - times[k - 1]));
                }
                prev = cur;
            }
            Ok(f64::INFINITY)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(MinimalTimeField { grid: g, values })
}

/// Largest `|v(x) - v(y)| / h` over axis neighbours with finite times,
/// against `1 / c_lo` plus `10 h / c_lo^2`.
pub fn lipschitz_check(mt: &MinimalTimeField, c_lo: f64) -> Result<EstimateReport> {
    if !(c_lo > 0.0) {
        return Err(Error::NonpositiveInput("c_lo"));
    }
    let g = mt.grid;
    let h = g.spacing();
    let v = &mt.values;
    let slope = (0..g.len())
        .into_par_iter()
        .filter(|&i| v[i].is_finite())
        .map(|i| {
            let mut s: f64 = 0.0;
            for axis in 0..g.dim() {
                if let (_, Some(j)) = g.neighbors(i, axis) {
                    if v[j].is_finite() {
                        s = s.max((v[j] - v[i]).abs() / h);
                    }
                }
            }
            s
        })
        .reduce(|| 0.0, f64::max);
    let rhs = 1.0 / c_lo;
    let mut report = EstimateReport::new("minimal_time_lipschitz");
    report.metric("slope", slope);
    report.push(ReportRow::upper(0.0, slope, rhs, rhs + 10.0 * h / (c_lo * c_lo)));
    Ok(report)
}

/// `{v <= t}` against `{u(., t) >= 0}` per recorded slice. A mismatch
/// counts only if no axis neighbour of the cell lies on the other side of
/// the zero level of `u`.
pub fn duality_check(mt: &MinimalTimeField, traj: &Trajectory) -> Result<EstimateReport> {
    traj.grid().check_same(&mt.grid)?;
    let g = mt.grid;
    let mut report = EstimateReport::new("arrival_duality");
    for s in traj.slices() {
        let t = s.time();
        let u = s.values();
        let far = (0..g.len())
            .into_par_iter()
            .filter(|&i| {
                let inside = u[i] >= 0.0;
                if (mt.values[i] <= t + 1e-12) == inside {
                    return false;
                }
                let mut near_front = false;
                for axis in 0..g.dim() {
                    let (b, f) = g.neighbors(i, axis);
                    for j in [b, f].into_iter().flatten() {
                        near_front |= (u[j] >= 0.0) != inside;
                    }
                }
                !near_front
            })
            .count();
        report.push(ReportRow::upper(t, far as f64, 0.0, 0.0));
    }
    Ok(report)
}

/// A speed with a spatial gradient, as needed by the extremal system.
pub trait SmoothSpeed: Sync {
    fn value(&self, x: [f64; 2], t: f64) -> f64;
    fn gradient(&self, x: [f64; 2], t: f64) -> [f64; 2];
}

/// Closed-form speed and gradient.
pub struct AnalyticSpeed<F, G> {
    pub value: F,
    pub gradient: G,
}

impl<F, G> SmoothSpeed for AnalyticSpeed<F, G>
where
    F: Fn([f64; 2], f64) -> f64 + Sync,
    G: Fn([f64; 2], f64) -> [f64; 2] + Sync,
{
    fn value(&self, x: [f64; 2], t: f64) -> f64 {
        (self.value)(x, t)
    }

    fn gradient(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        (self.gradient)(x, t)
    }
}

/// Recorded velocities smoothed by a Gaussian of width `2h`, bilinear in
/// space and linear in time.
pub struct MollifiedSpeed {
    times: Vec<f64>,
    fields: Vec<ScalarField>,
    grads: Vec<[ScalarField; 2]>,
}

fn smooth_axis(f: &ScalarField, axis: usize, weights: &[f64]) -> ScalarField {
    let g = *f.grid();
    let r = (weights.len() / 2) as isize;
    let (nx, ny) = (g.nx() as isize, g.ny() as isize);
    let v = f.values();
    let values = (0..g.len())
        .into_par_iter()
        .map(|i| {
            let (ix, iy) = g.coords(i);
            let mut s = 0.0;
            for (k, w) in weights.iter().enumerate() {
                let d = k as isize - r;
                // clamp at the edge: the velocity is extended constantly
                let (jx, jy) = if axis == 0 {
                    ((ix as isize + d).clamp(0, nx - 1), iy as isize)
                } else {
                    (ix as isize, (iy as isize + d).clamp(0, ny - 1))
                };
                s += w * v[(jy * nx + jx) as usize];
            }
            s
        })
        .collect();
    ScalarField::from_raw(g, values, f.time())
}

fn central_derivative(f: &ScalarField, axis: usize) -> ScalarField {
    let g = *f.grid();
    let h = g.spacing();
    let v = f.values();
    let values = (0..g.len())
        .into_par_iter()
        .map(|i| {
            if axis >= g.dim() {
                return 0.0;
            }
            match g.neighbors(i, axis) {
                (Some(b), Some(n)) => (v[n] - v[b]) / (2.0 * h),
                (None, Some(n)) => (v[n] - v[i]) / h,
                (Some(b), None) => (v[i] - v[b]) / h,
                (None, None) => 0.0,
            }
        })
        .collect();
    ScalarField::from_raw(g, values, f.time())
}

impl MollifiedSpeed {
    pub fn new(velocities: &[ScalarField]) -> Result<Self> {
        let Some(first) = velocities.first() else {
            return Err(Error::InvalidArgument("no velocity fields".into()));
        };
        let g = *first.grid();
        let sigma = 2.0 * g.spacing();
        let r = 4 * 2;
        let mut w: Vec<f64> = (-r..=r)
            .map(|k| {
                let x = k as f64 * g.spacing() / sigma;
                (-0.5 * x * x).exp()
            })
            .collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        let mut fields = Vec::with_capacity(velocities.len());
        let mut grads = Vec::with_capacity(velocities.len());
        for c in velocities {
            g.check_same(c.grid())?;
            let mut s = smooth_axis(c, 0, &w);
            if g.dim() == 2 {
                s = smooth_axis(&s, 1, &w);
            }
            grads.push([central_derivative(&s, 0), central_derivative(&s, 1)]);
            fields.push(s);
        }
        Ok(MollifiedSpeed { times: velocities.iter().map(|c| c.time()).collect(), fields, grads })
    }

    fn bracket(&self, t: f64) -> (usize, usize, f64) {
        let n = self.times.len();
        if n == 1 || t <= self.times[0] {
            return (0, 0, 0.0);
        }
        if t >= self.times[n - 1] {
            return (n - 1, n - 1, 0.0);
        }
        let j = self.times.partition_point(|&s| s <= t);
        (j - 1, j, (t - self.times[j - 1]) / (self.times[j] - self.times[j - 1]))
    }

    /// Largest gradient norm of the smoothed speed.
    pub fn gradient_bound(&self) -> f64 {
        self.grads
            .iter()
            .map(|[gx, gy]| gx.values().iter().zip(gy.values()).map(|(a, b)| a.hypot(*b)).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }
}

impl SmoothSpeed for MollifiedSpeed {
    fn value(&self, x: [f64; 2], t: f64) -> f64 {
        let (i, j, w) = self.bracket(t);
        (1.0 - w) * self.fields[i].interpolate(x) + w * self.fields[j].interpolate(x)
    }

    fn gradient(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        let (i, j, w) = self.bracket(t);
        let at = |k: usize, a: usize| self.grads[k][a].interpolate(x);
        [(1.0 - w) * at(i, 0) + w * at(j, 0), (1.0 - w) * at(i, 1) + w * at(j, 1)]
    }
}

/// Samples of an extremal, in increasing time.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtremalTrajectory {
    pub times: Vec<f64>,
    pub x: Vec<[f64; 2]>,
    pub p: Vec<[f64; 2]>,
    /// `x'(t) = c(x, t) p / |p|`.
    pub xdot: Vec<[f64; 2]>,
    /// Integrator step.
    pub dt: f64,
}

impl ExtremalTrajectory {
    /// `t, x, y, p_x, p_y` rows with header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,y,p_x,p_y\n");
        for k in 0..self.times.len() {
            let (x, p) = (self.x[k], self.p[k]);
            let _ = writeln!(out, "{},{},{},{},{}", self.times[k], x[0], x[1], p[0], p[1]);
        }
        out
    }
}

type State = [f64; 4];

fn rhs(c: &dyn SmoothSpeed, s: State, t: f64) -> Result<State> {
    let np = s[2].hypot(s[3]);
    if !(np >= 1e-12) {
        return Err(Error::StepFailure { t, norm: np });
    }
    let x = [s[0], s[1]];
    let v = c.value(x, t);
    let d = c.gradient(x, t);
    Ok([v * s[2] / np, v * s[3] / np, -d[0] * np, -d[1] * np])
}

fn axpy(a: &State, k: f64, b: &State) -> State {
    [a[0] + k * b[0], a[1] + k * b[1], a[2] + k * b[2], a[3] + k * b[3]]
}

/// Backward RK4 for `x' = c p / |p|`, `-p' = Dc |p|` from `(x_end, p_end)`
/// at `t_end` down to `0` in `steps` steps. The direction of `p` is not
/// renormalised.
pub fn pontryagin_integrate(
    x_end: [f64; 2],
    p_end: [f64; 2],
    c: &dyn SmoothSpeed,
    t_end: f64,
    steps: usize,
) -> Result<ExtremalTrajectory> {
    if steps == 0 || !(t_end > 0.0) {
        return Err(Error::InvalidArgument("need t_end > 0 and at least one step".into()));
    }
    let dt = t_end / steps as f64;
    let mut s: State = [x_end[0], x_end[1], p_end[0], p_end[1]];
    let mut rev = Vec::with_capacity(steps + 1);
    for k in (0..=steps).rev() {
        let t = k as f64 * dt;
        let f = rhs(c, s, t)?;
        rev.push((t, s, f));
        if k == 0 {
            break;
        }
        let h = -dt;
        let k1 = f;
        let k2 = rhs(c, axpy(&s, 0.5 * h, &k1), t + 0.5 * h)?;
        let k3 = rhs(c, axpy(&s, 0.5 * h, &k2), t + 0.5 * h)?;
        let k4 = rhs(c, axpy(&s, h, &k3), t + h)?;
        for i in 0..4 {
            s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    rev.reverse();
    Ok(ExtremalTrajectory {
        times: rev.iter().map(|r| r.0).collect(),
        x: rev.iter().map(|r| [r.1[0], r.1[1]]).collect(),
        p: rev.iter().map(|r| [r.1[2], r.1[3]]).collect(),
        xdot: rev.iter().map(|r| [r.2[0], r.2[1]]).collect(),
        dt,
    })
}

/// `|x(tb) - x(t) - x'(tb)(tb - t)| <= M/2 (tb - t)^2 + omega(tb - t)(tb - t)`
/// over all sample pairs, with slack `10 dt`. One row per later time `tb`
/// holding its worst pair.
pub fn taylor_deviation_check(
    traj: &ExtremalTrajectory,
    m: f64,
    omega: impl Fn(f64) -> f64 + Sync,
) -> Result<EstimateReport> {
    let n = traj.times.len();
    if n < 3 {
        return Err(Error::InvalidArgument("need at least three samples".into()));
    }
    let slack = 10.0 * traj.dt;
    let rows: Vec<ReportRow> = (1..n)
        .into_par_iter()
        .map(|j| {
            let tb = traj.times[j];
            let (xb, vb) = (traj.x[j], traj.xdot[j]);
            let mut worst: Option<ReportRow> = None;
            for k in 0..j {
                let d = tb - traj.times[k];
                let x = traj.x[k];
                let lhs = (xb[0] - x[0] - vb[0] * d).hypot(xb[1] - x[1] - vb[1] * d);
                let rhs = 0.5 * m * d * d + omega(d) * d;
                let row = ReportRow::upper(tb, lhs, rhs, rhs + slack);
                if worst.as_ref().is_none_or(|w| row.slack < w.slack) {
                    worst = Some(row);
                }
            }
            worst.expect("j >= 1 has a predecessor")
        })
        .collect();
    let mut report = EstimateReport::new("taylor_deviation");
    let ratio = rows.iter().filter(|r| r.rhs > 0.0).map(|r| r.lhs / r.rhs).fold(0.0, f64::max);
    report.metric("max_ratio", ratio);
    report.metric("m", m);
    rows.into_iter().for_each(|r| {
        report.push(r);
    });
    Ok(report)
}

/// `-Du / |Du|` at the node nearest `x`.
pub fn outward_normal(u: &ScalarField, x: [f64; 2]) -> Result<[f64; 2]> {
    let g = u.grid();
    let l = g.locate(x);
    let ix = (l[0].round().max(0.0) as usize).min(g.nx() - 1);
    let iy = (l[1].round().max(0.0) as usize).min(g.ny() - 1);
    let d = u.gradient_at(g.index(ix, iy));
    let n = d[0].hypot(d[1]);
    if !(n > 0.0) {
        return Err(Error::InvalidArgument(format!("flat datum at {x:?}")));
    }
    Ok([-d[0] / n, -d[1] / n])
}

/// Per step, `c_lo dt <= |dx| <= c_hi dt` up to `1e-9 dt` and a chord
/// shortfall of `1e-3 c_lo dt`.
pub fn speed_bracket_check(traj: &ExtremalTrajectory, c_lo: f64, c_hi: f64) -> EstimateReport {
    let mut report = EstimateReport::new("extremal_speed");
    for k in 1..traj.times.len() {
        let dt = traj.times[k] - traj.times[k - 1];
        let (a, b) = (traj.x[k - 1], traj.x[k]);
        let dx = (b[0] - a[0]).hypot(b[1] - a[1]);
        report.push(ReportRow::upper(traj.times[k], dx, c_hi * dt, c_hi * dt * (1.0 + 1e-9)));
        report.push(ReportRow::lower(traj.times[k], dx, c_lo * dt, c_lo * dt * (1.0 - 1e-3)));
    }
    report
}

/// `|p(t)| <= |p(t_end)| e^{C (t_end - t)}` at every sample.
pub fn adjoint_growth_check(traj: &ExtremalTrajectory, c: f64) -> EstimateReport {
    let mut report = EstimateReport::new("adjoint_growth");
    let t_end = *traj.times.last().expect("nonempty trajectory");
    let p_end = traj.p.last().map(|p| p[0].hypot(p[1])).unwrap_or(0.0);
    for (t, p) in traj.times.iter().zip(&traj.p) {
        let rhs = p_end * (c * (t_end - t)).exp();
        report.push(ReportRow::upper(*t, p[0].hypot(p[1]), rhs, rhs * (1.0 + 1e-9)));
    }
    report
}

/// Distance of `x(t)` to the zero level of `u(., t)`, estimated as
/// `|u(x(t), t)| / |Du(., t)|` at the nearest node, against `3h`. Checked
/// at the recorded slice times of `front`.
pub fn front_tracking_check(traj: &ExtremalTrajectory, front: &Trajectory) -> Result<EstimateReport> {
    let h = front.grid().spacing();
    let mut report = EstimateReport::new("extremal_on_front");
    for s in front.slices() {
        let t = s.time();
        let k = traj.times.partition_point(|&q| q < t - 1e-12).min(traj.times.len() - 1);
        let x = if k > 0 && traj.times[k] > t {
            let w = (t - traj.times[k - 1]) / (traj.times[k] - traj.times[k - 1]);
            let (a, b) = (traj.x[k - 1], traj.x[k]);
            [a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])]
        } else {
            traj.x[k]
        };
        let g = s.grid();
        let l = g.locate(x);
        let i = g.index((l[0].round().max(0.0) as usize).min(g.nx() - 1), (l[1].round().max(0.0) as usize).min(g.ny() - 1));
        let d = s.gradient_at(i);
        let dist = s.interpolate(x).abs() / d[0].hypot(d[1]).max(1e-12);
        report.push(ReportRow::upper(t, dist, 3.0 * h, 3.0 * h));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_speed_extremal_is_a_segment() {
        let c = AnalyticSpeed { value: |_: [f64; 2], _: f64| 2.0, gradient: |_: [f64; 2], _: f64| [0.0, 0.0] };
        let tr = pontryagin_integrate([1.0, 0.5], [0.6, 0.8], &c, 0.5, 50).unwrap();
        for (t, x) in tr.times.iter().zip(&tr.x) {
            let back = 2.0 * (0.5 - t);
            assert!((x[0] - (1.0 - back * 0.6)).abs() < 1e-13);
            assert!((x[1] - (0.5 - back * 0.8)).abs() < 1e-13);
        }
        assert!(tr.p.iter().all(|p| *p == [0.6, 0.8]));
        let r = taylor_deviation_check(&tr, 0.0, |_| 0.0).unwrap();
        assert!(r.rows.iter().all(|row| row.lhs < 1e-12));
    }

    #[test]
    fn vanishing_covector_fails() {
        let c = AnalyticSpeed { value: |_: [f64; 2], _: f64| 1.0, gradient: |_: [f64; 2], _: f64| [0.0, 0.0] };
        assert!(matches!(pontryagin_integrate([0.0, 0.0], [0.0, 0.0], &c, 1.0, 4), Err(Error::StepFailure { .. })));
    }
}
