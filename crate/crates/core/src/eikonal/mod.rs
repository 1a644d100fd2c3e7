//! Explicit monotone upwind solver for `u_t = c(x, t) |Du|` with `c >= 0`.
//!
//! One step is a discrete sup-convolution: per axis the slope is
//! `max(u[i-1] - u[i], u[i+1] - u[i], 0) / h` and the update is
//! `u + dt * c * |slope|`. Under `dt <= h / (sqrt(dim) * max c)` the update
//! is nondecreasing in every input value, so discrete comparison holds exactly.

mod checks;

pub use checks::{
    check_lipschitz_bound, comparison_check, difference_bound_check, finite_speed_check, gradient_band,
    increase_principle_check, random_ordered_pair, GradientBand,
};

use crate::datum::InitialDatum;
use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use rayon::prelude::*;

/// Largest stable time step for speeds bounded by `c_bar`, times `safety`.
pub fn cfl_dt(grid: &Grid, c_bar: f64, safety: f64) -> f64 {
    safety * grid.spacing() / ((grid.dim() as f64).sqrt() * c_bar)
}

/// Uniform step count and step size covering `[0, horizon]` without
/// exceeding the CFL step.
pub fn time_grid(grid: &Grid, c_bar: f64, horizon: f64, safety: f64) -> (usize, f64) {
    if horizon <= 0.0 {
        return (0, 0.0);
    }
    let limit = cfl_dt(grid, c_bar, safety);
    let n = (horizon / limit).ceil().max(1.0) as usize;
    (n, horizon / n as f64)
}

/// The times at which a solve over `[0, horizon]` starts its steps, plus the
/// horizon itself.
pub fn step_times(grid: &Grid, c_bar: f64, horizon: f64, safety: f64) -> Vec<f64> {
    let (n, dt) = time_grid(grid, c_bar, horizon, safety);
    let mut t: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
    t.push(horizon);
    t
}

/// Upwind gradient magnitude at one cell.
#[inline]
pub(crate) fn upwind_norm(grid: &Grid, u: &[f64], idx: usize) -> f64 {
    let c = u[idx];
    let mut s = 0.0;
    for axis in 0..grid.dim() {
        let (b, f) = grid.neighbors(idx, axis);
        let mut m: f64 = 0.0;
        if let Some(j) = b {
            m = m.max(u[j] - c);
        }
        if let Some(j) = f {
            m = m.max(u[j] - c);
        }
        s += m * m;
    }
    s.sqrt() / grid.spacing()
}

/// One explicit Euler step.
pub fn step(u: &ScalarField, c: &ScalarField, dt: f64) -> Result<ScalarField> {
    u.check_grid(c)?;
    let grid = *u.grid();
    if let Some((cell, &value)) = c.values().iter().enumerate().find(|(_, &v)| v < 0.0) {
        return Err(Error::NegativeVelocity { cell, value });
    }
    let c_max = c.max();
    if c_max > 0.0 {
        let limit = cfl_dt(&grid, c_max, 1.0);
        if dt > limit * (1.0 + 1e-12) {
            return Err(Error::CflViolation { dt, limit });
        }
    }
    let uv = u.values();
    let cv = c.values();
    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| uv[i] + dt * cv[i] * upwind_norm(&grid, uv, i))
        .collect();
    ScalarField::new(grid, values, u.time() + dt)
}

/// A velocity field sampled as the solve advances. Calls come with
/// nondecreasing `t`, and `u` is the solution at `t`.
pub trait Velocity {
    fn velocity(&mut self, t: f64, u: &ScalarField) -> Result<ScalarField>;

    /// Upper speed bound used for the step size and the domain precheck.
    fn c_bar(&self) -> f64;
}

/// `c(x, t) = value` everywhere.
#[derive(Debug, Clone, Copy)]
pub struct ConstantSpeed(pub f64);

impl Velocity for ConstantSpeed {
    fn velocity(&mut self, t: f64, u: &ScalarField) -> Result<ScalarField> {
        Ok(ScalarField::constant(*u.grid(), self.0, t))
    }

    fn c_bar(&self) -> f64 {
        self.0
    }
}

/// A closed-form speed `c(x, t)` with a declared upper bound.
pub struct SpaceTimeSpeed<F> {
    pub f: F,
    pub c_bar: f64,
}

impl<F: Fn([f64; 2], f64) -> f64 + Sync> Velocity for SpaceTimeSpeed<F> {
    fn velocity(&mut self, t: f64, u: &ScalarField) -> Result<ScalarField> {
        ScalarField::from_fn(*u.grid(), t, |p| (self.f)(p, t))
    }

    fn c_bar(&self) -> f64 {
        self.c_bar
    }
}

/// The eikonal problem on `[0, horizon]`.
#[derive(Debug, Clone)]
pub struct EikonalProblem {
    pub datum: InitialDatum,
    pub horizon: f64,
    pub cfl_safety: f64,
}

impl EikonalProblem {
    pub fn new(datum: InitialDatum, horizon: f64) -> Self {
        EikonalProblem { datum, horizon, cfl_safety: 0.9 }
    }
}

/// Recorded solution slices and the velocity in force at each of them.
#[derive(Debug, Clone)]
pub struct Trajectory {
    grid: Grid,
    times: Vec<f64>,
    slices: Vec<ScalarField>,
    velocities: Vec<ScalarField>,
    dt: f64,
}

impl Trajectory {
    /// Assembles a trajectory from parts, checking times and grids.
    pub fn new(slices: Vec<ScalarField>, velocities: Vec<ScalarField>, dt: f64) -> Result<Self> {
        let Some(first) = slices.first() else {
            return Err(Error::InvalidArgument("trajectory needs at least one slice".into()));
        };
        let grid = *first.grid();
        if velocities.len() != slices.len() {
            return Err(Error::InvalidArgument("one velocity per slice required".into()));
        }
        for f in slices.iter().chain(&velocities) {
            grid.check_same(f.grid())?;
        }
        let times: Vec<f64> = slices.iter().map(|s| s.time()).collect();
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::UnorderedFrames);
        }
        Ok(Trajectory { grid, times, slices, velocities, dt })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn slices(&self) -> &[ScalarField] {
        &self.slices
    }

    pub fn velocities(&self) -> &[ScalarField] {
        &self.velocities
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    pub fn first(&self) -> &ScalarField {
        &self.slices[0]
    }

    pub fn last(&self) -> &ScalarField {
        &self.slices[self.slices.len() - 1]
    }

    /// Solver step size (0 when nothing was stepped).
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Applies `f` to every slice value.
    pub fn map_values(&self, f: impl Fn(f64) -> f64 + Sync) -> Trajectory {
        let mut out = self.clone();
        for s in &mut out.slices {
            *s = s.map(&f);
        }
        out
    }
}

fn normalized_record_times(record_times: &[f64], horizon: f64) -> Result<Vec<f64>> {
    let mut rec: Vec<f64> = if record_times.is_empty() {
        vec![0.0, horizon]
    } else {
        record_times.to_vec()
    };
    if let Some(&bad) = rec.iter().find(|&&t| !(0.0..=horizon + 1e-12).contains(&t)) {
        return Err(Error::InvalidArgument(format!(
            "record time {bad} outside [0, {horizon}]"
        )));
    }
    rec.sort_by(f64::total_cmp);
    rec.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
    Ok(rec)
}

/// Integrates the problem, recording slices at `record_times` (linear
/// interpolation in time between steps). An empty list records `0` and `T`.
pub fn solve(
    problem: &EikonalProblem,
    velocity: &mut dyn Velocity,
    record_times: &[f64],
) -> Result<Trajectory> {
    let u0 = problem.datum.field();
    let grid = *u0.grid();
    let horizon = problem.horizon;
    let c_bar = velocity.c_bar();
    if !(c_bar > 0.0) {
        return Err(Error::NonpositiveInput("c_bar"));
    }
    let needed = problem.datum.r0() + c_bar * horizon;
    let available = grid.inscribed_radius(2);
    if needed > available {
        return Err(Error::DomainTooSmall { needed, available });
    }
    let rec = normalized_record_times(record_times, horizon)?;
    let (n, dt) = time_grid(&grid, c_bar, horizon, problem.cfl_safety);

    let mut slices = Vec::with_capacity(rec.len());
    let mut velocities = Vec::with_capacity(rec.len());
    let mut next = 0;
    let mut u = u0.clone().with_time(0.0);
    for k in 0..n {
        let t = k as f64 * dt;
        let t_next = (k + 1) as f64 * dt;
        let c = velocity.velocity(t, &u)?;
        let un = step(&u, &c, dt)?.with_time(t_next);
        while next < rec.len() && rec[next] < t_next - 1e-9 * dt {
            let tau = rec[next];
            let w = ((tau - t) / dt).clamp(0.0, 1.0);
            let slice = if w == 0.0 {
                u.clone()
            } else {
                let vals = u.values().iter().zip(un.values()).map(|(a, b)| a + w * (b - a)).collect();
                ScalarField::new(grid, vals, tau)?
            };
            slices.push(slice.with_time(tau));
            velocities.push(c.clone().with_time(tau));
            next += 1;
        }
        u = un;
    }
    if next < rec.len() {
        let u_end = u.with_time(horizon);
        let c_end = velocity.velocity(horizon, &u_end)?;
        for &tau in &rec[next..] {
            slices.push(u_end.clone().with_time(tau));
            velocities.push(c_end.clone().with_time(tau));
        }
    }
    Trajectory::new(slices, velocities, dt)
}
