//! FitzHugh-Nagumo coupling: `v_t - Lap v = g+(v) chi + g-(v) (1 - chi)`
//! and velocity `alpha(v)`.

use super::scalar_fn::ScalarFn;
use super::PhaseSource;
use crate::datum::InitialDatum;
use crate::eikonal::Velocity;
use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::report::{EstimateReport, ReportRow};
use rayon::prelude::*;
use rustdct::{DctPlanner, TransformType2And3};
use std::f64::consts::FRAC_2_SQRT_PI;
use std::sync::Arc;

/// Frozen regularity constant `k_N` for `N = 1, 2`: the `L1` norm bounds of
/// the heat kernel gradient and of `|y| G(y, s)` in each dimension. The
/// half-plane calibration in [`calibrate_k_n`] stays below these values.
pub const K_N: [f64; 2] = [FRAC_2_SQRT_PI, 2.0 / FRAC_2_SQRT_PI];

pub fn k_n(dim: usize) -> f64 {
    K_N[dim - 1]
}

/// Relative residual tolerance of the implicit solve.
const SOLVE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct HeatState {
    pub v: ScalarField,
    pub time: f64,
}

impl HeatState {
    pub fn new(v: ScalarField) -> Self {
        let time = v.time();
        HeatState { v, time }
    }
}

/// `e^{-|x|^2 / (4 s0)} / (4 pi s0)^{N/2}`, the heat kernel at time `s0`.
pub fn gaussian(grid: Grid, s0: f64) -> Result<ScalarField> {
    if !(s0 > 0.0) {
        return Err(Error::NonpositiveInput("s0"));
    }
    let norm = (4.0 * std::f64::consts::PI * s0).powf(grid.dim() as f64 / 2.0);
    ScalarField::from_fn(grid, 0.0, |p| (-(p[0] * p[0] + p[1] * p[1]) / (4.0 * s0)).exp() / norm)
}

/// Neumann Laplacian (mirror ghost cells) diagonalised by the DCT-II.
pub struct HeatSolver {
    grid: Grid,
    eig: [Vec<f64>; 2],
    plans: [Arc<dyn TransformType2And3<f64>>; 2],
}

impl std::fmt::Debug for HeatSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HeatSolver").field("grid", &self.grid).finish()
    }
}

impl HeatSolver {
    pub fn new(grid: Grid) -> Self {
        let h = grid.spacing();
        let mut planner = DctPlanner::new();
        let eig = |n: usize| -> Vec<f64> {
            (0..n)
                .map(|k| {
                    let s = (std::f64::consts::PI * k as f64 / (2.0 * n as f64)).sin();
                    -4.0 / (h * h) * s * s
                })
                .collect()
        };
        let eig = [eig(grid.nx()), if grid.dim() == 2 { eig(grid.ny()) } else { vec![0.0] }];
        let plans = [planner.plan_dct2(grid.nx()), planner.plan_dct2(grid.ny())];
        HeatSolver { grid, eig, plans }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Five-point (three-point in 1D) Laplacian with mirror boundary.
    pub fn laplacian(&self, v: &[f64]) -> Vec<f64> {
        let g = self.grid;
        let h2 = g.spacing() * g.spacing();
        (0..g.len())
            .into_par_iter()
            .map(|i| {
                let mut s = 0.0;
                for axis in 0..g.dim() {
                    let (b, f) = g.neighbors(i, axis);
                    s += v[b.unwrap_or(i)] + v[f.unwrap_or(i)] - 2.0 * v[i];
                }
                s / h2
            })
            .collect()
    }

    fn transform(&self, data: &mut [f64], inverse: bool) {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let run = |plan: &Arc<dyn TransformType2And3<f64>>, x: &mut [f64]| {
            if inverse {
                plan.process_dct3(x)
            } else {
                plan.process_dct2(x)
            }
        };
        data.par_chunks_mut(nx).for_each(|row| run(&self.plans[0], row));
        if ny > 1 {
            let mut cols = vec![0.0; nx * ny];
            cols.par_chunks_mut(ny).enumerate().for_each(|(ix, col)| {
                for (iy, c) in col.iter_mut().enumerate() {
                    *c = data[iy * nx + ix];
                }
                run(&self.plans[1], col);
            });
            data.par_chunks_mut(nx).enumerate().for_each(|(iy, row)| {
                for (ix, r) in row.iter_mut().enumerate() {
                    *r = cols[ix * ny + iy];
                }
            });
        }
    }

    /// Solves `(I - a Lap) x = rhs` exactly in the cosine basis.
    pub fn solve_shifted(&self, a: f64, rhs: &[f64]) -> Vec<f64> {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let mut x = rhs.to_vec();
        self.transform(&mut x, false);
        let scale = if ny > 1 { 4.0 / (nx * ny) as f64 } else { 2.0 / nx as f64 };
        let [ex, ey] = &self.eig;
        x.par_chunks_mut(nx).enumerate().for_each(|(iy, row)| {
            let ly = if ny > 1 { ey[iy] } else { 0.0 };
            for (ix, r) in row.iter_mut().enumerate() {
                *r *= scale / (1.0 - a * (ex[ix] + ly));
            }
        });
        self.transform(&mut x, true);
        x
    }
}

/// FitzHugh-Nagumo velocity law with its heat coupling.
#[derive(Debug)]
pub struct FnModel {
    pub alpha: ScalarFn,
    pub gplus: ScalarFn,
    pub gminus: ScalarFn,
    v0: ScalarField,
    solver: HeatSolver,
    /// `max(|g_lo|, |g_hi|)`.
    pub gamma: f64,
    pub g_lo: f64,
    pub g_hi: f64,
    /// Common Lipschitz constant of `g+` and `g-`.
    pub m: f64,
    pub dv0: f64,
}

impl FnModel {
    /// Validates the declared constants: `alpha` positive and bounded, the
    /// nonlinearities ordered `g_lo <= g- <= g+ <= g_hi`. Everything is
    /// spot-checked on `[-range, range]`.
    pub fn new(alpha: ScalarFn, gplus: ScalarFn, gminus: ScalarFn, v0: ScalarField, range: f64) -> Result<Self> {
        for f in [&alpha, &gplus, &gminus] {
            f.spot_check(range)?;
        }
        if !(alpha.lower() > 0.0) {
            return Err(Error::BadScalarFn(format!("alpha lower bound {} must be positive", alpha.lower())));
        }
        let n = super::scalar_fn::SPOT_CHECK_POINTS;
        for k in 0..n {
            let r = -range + 2.0 * range * k as f64 / (n - 1) as f64;
            if gminus.eval(r) > gplus.eval(r) {
                return Err(Error::BadScalarFn(format!("g- > g+ at {r}")));
            }
        }
        let g_lo = gminus.lower();
        let g_hi = gplus.upper();
        let dv0 = v0.lipschitz_estimate();
        let solver = HeatSolver::new(*v0.grid());
        Ok(FnModel {
            m: gplus.lipschitz().max(gminus.lipschitz()),
            gamma: g_lo.abs().max(g_hi.abs()),
            g_lo,
            g_hi,
            alpha,
            gplus,
            gminus,
            v0,
            solver,
            dv0,
        })
    }

    pub fn v0(&self) -> &ScalarField {
        &self.v0
    }

    pub fn grid(&self) -> &Grid {
        self.v0.grid()
    }

    pub fn solver(&self) -> &HeatSolver {
        &self.solver
    }

    pub fn c_lo(&self) -> f64 {
        self.alpha.lower()
    }

    pub fn c_hi(&self) -> f64 {
        self.alpha.upper()
    }

    pub fn initial_state(&self) -> HeatState {
        HeatState::new(self.v0.clone().with_time(0.0))
    }

    /// The heat grid must reach `4 sqrt(T)` beyond `B(0, R0 + c_hi T)`.
    pub fn check_padding(&self, datum: &InitialDatum, horizon: f64) -> Result<()> {
        self.grid().check_same(datum.grid())?;
        let needed = datum.r0() + self.c_hi() * horizon + 4.0 * horizon.sqrt();
        let available = self.grid().inscribed_radius(0);
        if needed > available {
            return Err(Error::PaddingTooSmall(format!(
                "heat domain radius {available:.4} below R0 + c T + 4 sqrt(T) = {needed:.4}"
            )));
        }
        Ok(())
    }
}

/// One Crank-Nicolson step with explicit source.
pub fn heat_step(state: &HeatState, chi: &[f64], model: &FnModel, dt: f64) -> Result<HeatState> {
    if !(dt > 0.0) {
        return Err(Error::NonpositiveInput("dt"));
    }
    model.grid().check_same(state.v.grid())?;
    if chi.len() != model.grid().len() {
        return Err(Error::GridMismatch);
    }
    let v = state.v.values();
    let lap = model.solver.laplacian(v);
    let rhs: Vec<f64> = (0..v.len())
        .into_par_iter()
        .map(|i| {
            let src = model.gplus.eval(v[i]) * chi[i] + model.gminus.eval(v[i]) * (1.0 - chi[i]);
            v[i] + 0.5 * dt * lap[i] + dt * src
        })
        .collect();
    let next = model.solver.solve_shifted(0.5 * dt, &rhs);
    let lap_next = model.solver.laplacian(&next);
    let (res, size) = next
        .par_iter()
        .zip(&lap_next)
        .zip(&rhs)
        .map(|((x, l), r)| ((x - 0.5 * dt * l - r).abs(), r.abs()))
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    let residual = res / size.max(1.0);
    if !(residual <= SOLVE_TOL) {
        return Err(Error::SolverDivergence { residual });
    }
    let time = state.time + dt;
    Ok(HeatState { v: ScalarField::new(*model.grid(), next, time)?, time })
}

/// `alpha(v)`, checked against the declared range of `alpha`.
pub fn fn_velocity(state: &HeatState, model: &FnModel) -> Result<ScalarField> {
    let (lo, hi) = (model.c_lo(), model.c_hi());
    let c = state.v.map(|r| model.alpha.eval(r));
    if let Some(&value) = c.values().iter().find(|&&a| !(lo..=hi).contains(&a)) {
        return Err(Error::AlphaRangeViolation { value, lo, hi });
    }
    Ok(c.with_time(state.time))
}

/// Velocity provider coupling the eikonal solve to the heat equation. The
/// heat state advances between successive calls with the indicator taken at
/// the start of each interval.
pub struct FnVelocity<'a> {
    model: &'a FnModel,
    pub phase: PhaseSource,
    state: HeatState,
    chi: Option<Vec<f64>>,
    record_times: Vec<f64>,
    recorded: Vec<HeatState>,
}

impl<'a> FnVelocity<'a> {
    pub fn new(model: &'a FnModel, phase: PhaseSource) -> Self {
        FnVelocity {
            model,
            phase,
            state: model.initial_state(),
            chi: None,
            record_times: Vec::new(),
            recorded: Vec::new(),
        }
    }

    /// Keeps the heat state of the first call at or after each time.
    pub fn recording(mut self, mut times: Vec<f64>) -> Self {
        times.sort_by(f64::total_cmp);
        self.record_times = times;
        self
    }

    pub fn state(&self) -> &HeatState {
        &self.state
    }

    pub fn into_recorded(self) -> Vec<HeatState> {
        self.recorded
    }
}

impl Velocity for FnVelocity<'_> {
    fn velocity(&mut self, t: f64, u: &ScalarField) -> Result<ScalarField> {
        if let Some(chi) = &self.chi {
            let dt = t - self.state.time;
            if dt > 0.0 {
                self.state = heat_step(&self.state, chi, self.model, dt)?;
            }
        }
        self.state.time = t;
        self.state.v.set_time(t);
        self.chi = Some(self.phase.frame(t, u).into_owned());
        while self.recorded.len() < self.record_times.len() && t >= self.record_times[self.recorded.len()] - 1e-12 {
            self.recorded.push(self.state.clone());
        }
        fn_velocity(&self.state, self.model)
    }

    fn c_bar(&self) -> f64 {
        self.model.c_hi()
    }
}

/// Measured spatial Lipschitz constants and temporal moduli of the heat
/// states against the regularity bounds with the frozen `k_N`. Temporal rows
/// compare consecutive states and allow `h |Dv0|` for the sampling of `v0`.
pub fn regularity_report(states: &[HeatState], model: &FnModel) -> Result<EstimateReport> {
    if states.len() < 2 {
        return Err(Error::InvalidArgument("regularity report needs two states".into()));
    }
    let k = k_n(model.grid().dim());
    let (dv0, gamma) = (model.dv0, model.gamma);
    let v0_sup = model.v0.max_abs();
    let mut report = EstimateReport::new("heat_regularity");
    report.metric("k_n", k);
    report.metric("gamma", gamma);
    report.metric("dv0", dv0);
    let tol = 1e-8;
    let mut worst_ratio: f64 = 0.0;
    for s in states {
        let t = s.time;
        let lip = s.v.lipschitz_estimate();
        let rhs = dv0 + gamma * k * t.sqrt();
        report.push(ReportRow::upper(t, lip, rhs, rhs + tol));
        if gamma > 0.0 && t > 0.0 {
            worst_ratio = worst_ratio.max((lip - dv0) / (gamma * t.sqrt()));
        }
        let bound = v0_sup + gamma * t;
        report.push(ReportRow::upper(t, s.v.max_abs(), bound, bound + tol));
    }
    // a sampled Lipschitz datum is resolved to one cell: kinks smear over `h`
    let kink_slack = model.grid().spacing() * dv0;
    for w in states.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let (s, t) = (a.time, b.time);
        let gap = crate::measure::sup_norm_difference(&a.v, &b.v)?;
        let rhs = k * (dv0 + gamma * k * s.sqrt()) * (t - s).sqrt() + gamma * (t - s);
        report.push(ReportRow::upper(t, gap, rhs, rhs + kink_slack + tol));
    }
    report.metric("fitted_k", worst_ratio);
    Ok(report)
}

/// Runs the half-plane calibration (`chi = 1_{x1 >= 0}`, `g+ = 1`,
/// `g- = 0`, `v0 = 0`) and returns the fitted `(Lip v(t) - |Dv0|) / (gamma sqrt t)`.
pub fn calibrate_k_n(dim: usize, h: f64, horizon: f64) -> Result<f64> {
    let half = (horizon.sqrt() * 8.0).max(1.0);
    let grid = Grid::centered(dim, half, h)?;
    let model = FnModel::new(
        ScalarFn::Constant(1.0),
        ScalarFn::Constant(1.0),
        ScalarFn::Constant(0.0),
        ScalarField::constant(grid, 0.0, 0.0),
        10.0,
    )?;
    let chi: Vec<f64> = (0..grid.len()).map(|i| if grid.point(i)[0] >= 0.0 { 1.0 } else { 0.0 }).collect();
    let steps = ((horizon / (h * h)).ceil() as usize).clamp(20, 400);
    let dt = horizon / steps as f64;
    let mut state = model.initial_state();
    for _ in 0..steps {
        state = heat_step(&state, &chi, &model, dt)?;
    }
    Ok(state.v.lipschitz_estimate() / horizon.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_solve_inverts_the_shifted_operator() {
        let g = Grid::centered(2, 1.0, 0.05).unwrap();
        let s = HeatSolver::new(g);
        let rhs: Vec<f64> = (0..g.len()).map(|i| ((i * 7919) % 101) as f64 / 101.0).collect();
        let x = s.solve_shifted(0.3, &rhs);
        let lap = s.laplacian(&x);
        let err = x.iter().zip(&lap).zip(&rhs).map(|((x, l), r)| (x - 0.3 * l - r).abs()).fold(0.0, f64::max);
        assert!(err < 1e-11, "{err}");
    }

    #[test]
    fn one_dimensional_solve() {
        let g = Grid::centered(1, 1.0, 0.05).unwrap();
        let s = HeatSolver::new(g);
        let rhs: Vec<f64> = (0..g.len()).map(|i| (i as f64).sin()).collect();
        let x = s.solve_shifted(0.01, &rhs);
        let lap = s.laplacian(&x);
        let err = x.iter().zip(&lap).zip(&rhs).map(|((x, l), r)| (x - 0.01 * l - r).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn padding_rule() {
        let g = Grid::centered(2, 4.0, 0.1).unwrap();
        let model = FnModel::new(
            ScalarFn::Constant(1.0),
            ScalarFn::Constant(1.0),
            ScalarFn::Constant(0.0),
            ScalarField::constant(g, 0.0, 0.0),
            5.0,
        )
        .unwrap();
        let datum = InitialDatum::from_fn(g, -1.0, |p| 1.0 - p[0].hypot(p[1])).unwrap();
        // R0 = 2.1; 2.1 + 0.5 + 4 sqrt(0.5) = 5.43 > 4
        assert!(matches!(model.check_padding(&datum, 0.5), Err(Error::PaddingTooSmall(_))));
        model.check_padding(&datum, 0.05).unwrap();
    }
}
