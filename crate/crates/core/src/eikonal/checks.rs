//! Numerical instances of the a priori estimates satisfied by eikonal solutions.

use super::Trajectory;
use crate::error::{Error, Result};
use crate::grid::{trapezoid, Grid, ScalarField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use crate::measure::sup_norm_difference;
use crate::report::{EstimateReport, ReportRow};
use rayon::prelude::*;

/// Gradient bound `|Du(., t)| <= e^{CT} |Du0|_inf`, one row per slice.
pub fn check_lipschitz_bound(traj: &Trajectory, c: f64, du0_inf: f64) -> EstimateReport {
    let h = traj.grid().spacing();
    let horizon = *traj.times().last().unwrap_or(&0.0);
    let rhs = (c * horizon).exp() * du0_inf;
    let mut report = EstimateReport::new("lipschitz_bound");
    for s in traj.slices() {
        report.push(ReportRow::upper(s.time(), s.lipschitz_estimate(), rhs, rhs * (1.0 + 5.0 * h)));
    }
    report
}

/// Measured gradient lower bound near the front.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientBand {
    pub eta: f64,
    /// Smallest `|Du|` over `{|u| < eta / 2}` across all slices.
    pub eta_bar: f64,
    /// Fitted exponent: smallest `gamma >= 0` making
    /// `-|u| - e^{gamma t} |Du|^2 / 4 + eta <= 0` hold at every cell.
    pub gamma_hat: f64,
}

/// Exponents larger than this are treated as a failed fit.
const GAMMA_MAX: f64 = 50.0;

struct BandSample {
    abs_u: f64,
    grad2: f64,
    t: f64,
}

fn band_samples(traj: &Trajectory, cutoff: f64) -> Vec<BandSample> {
    traj.slices()
        .par_iter()
        .flat_map_iter(|s| {
            let t = s.time();
            (0..s.grid().len()).filter_map(move |i| {
                let abs_u = s.values()[i].abs();
                (abs_u < cutoff).then(|| {
                    let g = s.gradient_at(i);
                    BandSample { abs_u, grad2: g[0] * g[0] + g[1] * g[1], t }
                })
            })
        })
        .collect()
}

/// `Some(gamma_hat)` if the band inequality can be fitted at this `eta`.
fn fit_gamma(samples: &[BandSample], eta: f64) -> Option<f64> {
    let mut gamma: f64 = 0.0;
    for s in samples.iter().filter(|s| s.abs_u < eta) {
        let need = 4.0 * (eta - s.abs_u);
        if s.grad2 <= 0.0 {
            return None;
        }
        if s.t <= 0.0 {
            if need > s.grad2 {
                return None;
            }
        } else {
            gamma = gamma.max((need / s.grad2).ln() / s.t);
        }
    }
    (gamma <= GAMMA_MAX).then_some(gamma)
}

fn band_minimum(samples: &[BandSample], eta: f64) -> f64 {
    samples
        .iter()
        .filter(|s| s.abs_u < eta / 2.0)
        .map(|s| s.grad2.sqrt())
        .fold(f64::INFINITY, f64::min)
}

/// Largest `eta` (by bisection) for which a finite `gamma_hat` makes the
/// band inequality hold on every slice; `eta_bar` is then the smallest
/// gradient over `{|u| < eta / 2}`, which by construction is at least
/// `sqrt(2 eta) e^{-gamma_hat T / 2}`.
pub fn gradient_band(traj: &Trajectory) -> Result<GradientBand> {
    let hi = traj.slices().iter().map(|s| s.max_abs()).fold(0.0, f64::max);
    let samples = band_samples(traj, hi);
    let horizon = *traj.times().last().unwrap_or(&0.0);
    let passes = |eta: f64| match fit_gamma(&samples, eta) {
        Some(g) => {
            let m = band_minimum(&samples, eta);
            m.is_finite() && m >= (2.0 * eta).sqrt() * (-g * horizon / 2.0).exp()
        }
        None => false,
    };
    let (mut lo, mut up) = (0.0, hi);
    if passes(up) {
        lo = up;
    } else {
        for _ in 0..60 {
            let mid = 0.5 * (lo + up);
            if passes(mid) {
                lo = mid;
            } else {
                up = mid;
            }
        }
    }
    if lo <= 1e-9 {
        return Err(Error::NoBand);
    }
    let gamma_hat = fit_gamma(&samples, lo).ok_or(Error::NoBand)?;
    Ok(GradientBand { eta: lo, eta_bar: band_minimum(&samples, lo), gamma_hat })
}

/// Difference bound between two solutions from the same datum driven by
/// different velocities:
/// `|u1 - u2|_inf(t) <= |Du0|_inf e^{Ct} int_0^t |c1 - c2|_inf`, with the
/// time integral taken by the trapezoid rule over the recorded velocities.
pub fn difference_bound_check(
    traj1: &Trajectory,
    traj2: &Trajectory,
    c: f64,
    du0_inf: f64,
) -> Result<EstimateReport> {
    traj1.grid().check_same(traj2.grid())?;
    if traj1.times().len() != traj2.times().len()
        || traj1.times().iter().zip(traj2.times()).any(|(a, b)| (a - b).abs() > 1e-12)
    {
        return Err(Error::InvalidArgument("trajectories recorded at different times".into()));
    }
    let h = traj1.grid().spacing();
    let gaps: Vec<f64> = traj1
        .velocities()
        .iter()
        .zip(traj2.velocities())
        .map(|(a, b)| sup_norm_difference(a, b))
        .collect::<Result<_>>()?;
    let mut report = EstimateReport::new("difference_bound");
    for k in 0..traj1.len() {
        let t = traj1.times()[k];
        let lhs = sup_norm_difference(&traj1.slices()[k], &traj2.slices()[k])?;
        let integral = trapezoid(&traj1.times()[..=k], &gaps[..=k]);
        let rhs = du0_inf * (c * t).exp() * integral;
        report.push(ReportRow::upper(t, lhs, rhs, rhs + 10.0 * h));
    }
    Ok(report)
}

/// Finite speed of propagation: `{u(., t) >= 0}` inside `B(0, R0 + c_bar t)`
/// up to two cells.
pub fn finite_speed_check(traj: &Trajectory, r0: f64, c_bar: f64) -> EstimateReport {
    let g = traj.grid();
    let h = g.spacing();
    let mut report = EstimateReport::new("finite_speed");
    for s in traj.slices() {
        let reach = s
            .values()
            .par_iter()
            .enumerate()
            .filter(|(_, &v)| v >= 0.0)
            .map(|(i, _)| {
                let p = g.point(i);
                p[0].hypot(p[1])
            })
            .reduce(|| 0.0, f64::max);
        let rhs = r0 + c_bar * s.time();
        report.push(ReportRow::upper(s.time(), reach, rhs, rhs + 2.0 * h));
    }
    report
}

/// Increase principle: near the zero level, `u` grows by at least `delta`
/// within distance `2 delta / eta0`. One row with the worst cell.
pub fn increase_principle_check(u: &ScalarField, eta0: f64, delta: f64) -> Result<EstimateReport> {
    if !(delta < eta0 / 2.0) {
        return Err(Error::BadDelta { delta, half_eta0: eta0 / 2.0 });
    }
    if !(delta > 0.0) {
        return Err(Error::NonpositiveInput("delta"));
    }
    let g = *u.grid();
    let h = g.spacing();
    let radius = 2.0 * delta / eta0;
    let reach = (radius / h).floor() as isize;
    let vals = u.values();
    let offsets: Vec<(isize, isize)> = if g.dim() == 1 {
        (-reach..=reach).map(|dx| (dx, 0)).collect()
    } else {
        let mut o = Vec::new();
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                if ((dx * dx + dy * dy) as f64).sqrt() * h <= radius + 1e-12 {
                    o.push((dx, dy));
                }
            }
        }
        o
    };
    let (nx, ny) = (g.nx() as isize, g.ny() as isize);
    let worst = (0..g.len())
        .into_par_iter()
        .filter(|&i| vals[i].abs() <= delta)
        .map(|i| {
            let (ix, iy) = g.coords(i);
            let mut m = f64::NEG_INFINITY;
            for &(dx, dy) in &offsets {
                let (jx, jy) = (ix as isize + dx, iy as isize + dy);
                if jx >= 0 && jy >= 0 && jx < nx && jy < ny {
                    m = m.max(vals[g.index(jx as usize, jy as usize)]);
                }
            }
            m - vals[i]
        })
        .reduce(|| f64::INFINITY, f64::min);
    let allowed = delta - 2.0 * h * u.lipschitz_estimate();
    let mut report = EstimateReport::new("increase_principle");
    report.metric("radius", radius);
    if worst.is_finite() {
        report.push(ReportRow::lower(u.time(), worst, delta, allowed));
    }
    Ok(report)
}

/// Advances each ordered pair `a <= b` through `steps` explicit steps under
/// the shared velocity `velocity(t)`. One row per step counting the cells,
/// over all pairs, where the order is broken.
pub fn comparison_check(
    pairs: &[(ScalarField, ScalarField)],
    velocity: impl Fn(f64) -> ScalarField,
    dt: f64,
    steps: usize,
) -> Result<EstimateReport> {
    let mut state: Vec<(ScalarField, ScalarField)> = pairs.to_vec();
    let mut report = EstimateReport::new("comparison");
    for k in 0..steps {
        let t = k as f64 * dt;
        let c = velocity(t);
        let mut broken = 0usize;
        for (a, b) in state.iter_mut() {
            *a = super::step(a, &c, dt)?;
            *b = super::step(b, &c, dt)?;
            broken += a.values().iter().zip(b.values()).filter(|(x, y)| x > y).count();
        }
        report.push(ReportRow::upper(t + dt, broken as f64, 0.0, 0.0));
    }
    Ok(report)
}

/// A wobbly disk profile `a` and `b = a + bump` with random nonnegative
/// bumps on about 30% of the cells, both clamped to `[-1, 1]`.
pub fn random_ordered_pair(seed: u64, grid: Grid) -> Result<(ScalarField, ScalarField)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (cx, cy, r) = (rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3), rng.gen_range(0.4..0.9));
    let wobble: f64 = rng.gen_range(0.0..0.2);
    let k = rng.gen_range(2..6) as f64;
    let a = ScalarField::from_fn(grid, 0.0, |p| {
        let (x, y) = (p[0] - cx, p[1] - cy);
        (r + wobble * (k * y.atan2(x)).sin() - x.hypot(y)).clamp(-1.0, 1.0)
    })?;
    let b = a
        .values()
        .iter()
        .map(|v| if rng.gen_bool(0.3) { (v + rng.gen_range(0.0..0.3)).min(1.0) } else { *v })
        .collect();
    Ok((a, ScalarField::new(grid, b, 0.0)?))
}
