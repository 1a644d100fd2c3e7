//! Weak solutions `(u, chi)` by Picard iteration on the phase indicator,
//! with classicality and uniqueness diagnostics.

use crate::datum::InitialDatum;
use crate::eikonal::{solve, ConstantSpeed, EikonalProblem, Trajectory};
use crate::error::{Error, Result};
use crate::geometry::{extract_front, hausdorff_distance, perimeter};
use crate::grid::{superlevel_indicator, PhaseIndicator, ScalarField};
use crate::measure::{band_cell_count, band_measure, sup_norm_difference};
use crate::report::{EstimateReport, ReportRow};
use crate::velocity::{DislocationModel, DislocationVelocity, FnModel, FnVelocity, HeatState, PhaseSource};

/// Band half-width in cells for the classicality check.
pub const CLASSICAL_EPS: f64 = 2.0;
/// Largest admitted ratio of the band volume to `2 eps h` times the front
/// perimeter.
pub const CLASSICAL_RATIO: f64 = 2.0;

#[derive(Debug, Clone, Copy)]
pub enum SpeedModel<'a> {
    Constant(f64),
    Dislocation(&'a DislocationModel),
    Fn(&'a FnModel),
}

impl SpeedModel<'_> {
    /// Whether the velocity ignores the phase indicator.
    pub fn decoupled(&self) -> bool {
        match self {
            SpeedModel::Constant(_) => true,
            SpeedModel::Dislocation(m) => {
                m.kernels().fields().iter().all(|k| k.values().iter().all(|&v| v == 0.0))
            }
            SpeedModel::Fn(_) => false,
        }
    }

    pub fn c_lo(&self) -> f64 {
        match self {
            SpeedModel::Constant(c) => *c,
            SpeedModel::Dislocation(m) => m.constants().c_lo,
            SpeedModel::Fn(m) => m.c_lo(),
        }
    }

    pub fn c_hi(&self) -> f64 {
        match self {
            SpeedModel::Constant(c) => *c,
            SpeedModel::Dislocation(m) => m.constants().c_hi,
            SpeedModel::Fn(m) => m.c_hi(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct WeakSolveConfig<'a> {
    pub datum: InitialDatum,
    pub model: SpeedModel<'a>,
    pub horizon: f64,
    /// Stop when the space-time L1 distance of successive indicators drops
    /// below this.
    pub tol_chi: f64,
    pub max_iter: usize,
    /// `chi <- (1 - w) chi + w 1_{u >= 0}` when set.
    pub damping: Option<f64>,
    /// Number of frame intervals on `[0, T]` for the indicator.
    pub frames: usize,
}

impl<'a> WeakSolveConfig<'a> {
    pub fn new(datum: InitialDatum, model: SpeedModel<'a>, horizon: f64) -> Self {
        WeakSolveConfig { datum, model, horizon, tol_chi: 1e-3, max_iter: 20, damping: None, frames: 50 }
    }

    pub fn frame_times(&self) -> Vec<f64> {
        let n = self.frames.max(1);
        (0..=n).map(|k| self.horizon * k as f64 / n as f64).collect()
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol_chi > 0.0) {
            return Err(Error::NonpositiveInput("tol_chi"));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::NonpositiveInput("horizon"));
        }
        if let Some(w) = self.damping {
            if !(w > 0.0 && w <= 1.0) {
                return Err(Error::InvalidArgument(format!("damping {w} outside (0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct WeakSolution {
    pub traj: Trajectory,
    /// Indicator after the last update, on the trajectory's frame times.
    pub chi: PhaseIndicator,
    /// Number of eikonal solves.
    pub iterations: usize,
    pub residual: f64,
    pub history: Vec<f64>,
    pub converged: bool,
    /// Heat states at the frame times (FitzHugh-Nagumo only).
    pub heat: Vec<HeatState>,
}

impl WeakSolution {
    /// `Err(NoConvergence)` unless the iteration met its tolerance.
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NoConvergence { history: self.history })
        }
    }
}

fn sweep(config: &WeakSolveConfig, chi: &PhaseIndicator, times: &[f64]) -> Result<(Trajectory, Vec<HeatState>)> {
    let problem = EikonalProblem::new(config.datum.clone(), config.horizon);
    match config.model {
        SpeedModel::Constant(c) => Ok((solve(&problem, &mut ConstantSpeed(c), times)?, Vec::new())),
        SpeedModel::Dislocation(m) => {
            let mut v = DislocationVelocity { model: m, phase: PhaseSource::Given(chi.clone()) };
            Ok((solve(&problem, &mut v, times)?, Vec::new()))
        }
        SpeedModel::Fn(m) => {
            m.check_padding(&config.datum, config.horizon)?;
            let mut v = FnVelocity::new(m, PhaseSource::Given(chi.clone())).recording(times.to_vec());
            let traj = solve(&problem, &mut v, times)?;
            Ok((traj, v.into_recorded()))
        }
    }
}

/// Iterates `chi^k -> u^{k+1} -> chi^{k+1} = 1_{u^{k+1} >= 0}` over the whole
/// horizon. A velocity that ignores `chi` is solved once, with residual 0.
/// Running out of iterations is reported through `converged`, not an error.
pub fn picard_solve(config: &WeakSolveConfig, chi_init: &PhaseIndicator) -> Result<WeakSolution> {
    config.validate()?;
    config.datum.grid().check_same(chi_init.grid())?;
    let times = config.frame_times();
    let seed = resample(chi_init, &times)?;
    if config.model.decoupled() {
        let (traj, heat) = sweep(config, &seed, &times)?;
        let chi = PhaseIndicator::from_trajectory(&traj);
        return Ok(WeakSolution { traj, chi, iterations: 1, residual: 0.0, history: vec![0.0], converged: true, heat });
    }
    let mut chi = seed;
    let mut history = Vec::new();
    loop {
        let (traj, heat) = sweep(config, &chi, &times)?;
        let fresh = PhaseIndicator::from_trajectory(&traj);
        let next = match config.damping {
            Some(w) if w < 1.0 => {
                let frames = chi
                    .frames()
                    .iter()
                    .zip(fresh.frames())
                    .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (1.0 - w) * x + w * y).collect())
                    .collect();
                PhaseIndicator::new(*chi.grid(), times.clone(), frames)?
            }
            _ => fresh,
        };
        let residual = next.l1_distance(&chi)?;
        history.push(residual);
        let converged = residual < config.tol_chi;
        if converged || history.len() >= config.max_iter {
            return Ok(WeakSolution {
                traj,
                chi: next,
                iterations: history.len(),
                residual,
                history,
                converged,
                heat,
            });
        }
        chi = next;
    }
}

/// The indicator sampled at `times` (last frame at or before each time).
fn resample(chi: &PhaseIndicator, times: &[f64]) -> Result<PhaseIndicator> {
    if chi.times().len() == times.len() && chi.times().iter().zip(times).all(|(a, b)| (a - b).abs() <= 1e-12) {
        return Ok(chi.clone());
    }
    let frames = times.iter().map(|&t| chi.frame_at(t).to_vec()).collect();
    PhaseIndicator::new(*chi.grid(), times.to_vec(), frames)
}

/// Cells per frame where `chi` contradicts `1_{u > s} <= chi <= 1_{u >= -s}`
/// with `s = h |Du|_inf`.
pub fn sandwich_check(sol: &WeakSolution) -> Result<EstimateReport> {
    let mut report = EstimateReport::new("sandwich");
    for u in sol.traj.slices() {
        let s = u.grid().spacing() * u.lipschitz_estimate();
        let chi = sol.chi.frame_at(u.time());
        let bad = u
            .values()
            .iter()
            .zip(chi)
            .filter(|(&v, &c)| (v > s && c < 1.0) || (v < -s && c > 0.0))
            .count();
        report.push(ReportRow::upper(u.time(), bad as f64, 0.0, 0.0));
    }
    Ok(report)
}

fn band_volume(u: &ScalarField) -> f64 {
    let e = CLASSICAL_EPS * u.grid().spacing();
    band_cell_count(u, -e, e)
}

/// Volume of `{|u| <= eps h}` against `2 eps h` times the perimeter of the
/// zero level, one row per slice. Passes when the band is thin:
/// ratio at most [`CLASSICAL_RATIO`].
pub fn classicality_check(traj: &Trajectory) -> Result<EstimateReport> {
    let mut report = EstimateReport::new("classicality");
    let mut worst: f64 = 0.0;
    for u in traj.slices() {
        let p = perimeter(&extract_front(u, 0.0)?);
        let thin = 2.0 * CLASSICAL_EPS * u.grid().spacing() * p;
        let band = band_volume(u);
        worst = worst.max(band / thin);
        report.push(ReportRow::upper(u.time(), band, thin, CLASSICAL_RATIO * thin));
    }
    report.metric("max_ratio", worst);
    Ok(report)
}

/// Band volumes of a refinement pair at shared times: the fine band should
/// be half the coarse one within 20%.
pub fn classicality_refinement(coarse: &Trajectory, fine: &Trajectory) -> Result<EstimateReport> {
    let mut report = EstimateReport::new("classicality_refinement");
    for c in coarse.slices() {
        let Some(f) = fine.slices().iter().find(|f| (f.time() - c.time()).abs() <= 1e-9) else {
            continue;
        };
        let q = band_volume(f) / band_volume(c);
        report.push(ReportRow::upper(c.time(), (q - 0.5).abs(), 0.0, 0.1));
    }
    if report.rows.is_empty() {
        return Err(Error::InvalidArgument("no shared slice times".into()));
    }
    Ok(report)
}

/// Final fronts from two solutions: Hausdorff distance within `3h` and
/// sup-norm distance within `5h |Du0|_inf`.
pub fn agreement_check(a: &WeakSolution, b: &WeakSolution, du0_inf: f64) -> Result<EstimateReport> {
    let (ua, ub) = (a.traj.last(), b.traj.last());
    let h = ua.grid().spacing();
    let t = ua.time();
    let d_h = hausdorff_distance(&extract_front(ua, 0.0)?, &extract_front(ub, 0.0)?);
    let d_sup = sup_norm_difference(ua, ub)?;
    let mut report = EstimateReport::new("seed_independence");
    report.metric("hausdorff", d_h).metric("sup_norm", d_sup);
    report.push(ReportRow::upper(t, d_h, 3.0 * h, 3.0 * h));
    report.push(ReportRow::upper(t, d_sup, 5.0 * h * du0_inf, 5.0 * h * du0_inf));
    Ok(report)
}

/// Picard from two seeds (concurrently), then [`agreement_check`].
pub fn uniqueness_experiment(
    config: &WeakSolveConfig,
    chi_a: &PhaseIndicator,
    chi_b: &PhaseIndicator,
) -> Result<(WeakSolution, WeakSolution, EstimateReport)> {
    let (a, b) = rayon::join(|| picard_solve(config, chi_a), || picard_solve(config, chi_b));
    let (a, b) = (a?.require_converged()?, b?.require_converged()?);
    let report = agreement_check(&a, &b, config.datum.lipschitz())?;
    Ok((a, b, report))
}

/// Constants entering the contraction factor
/// `L = 2 c_hi / (eta_bar c_lo) |Du0|_inf e^{C T}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionConstants {
    pub c_lo: f64,
    pub c_hi: f64,
    pub lipschitz: f64,
    pub eta_bar: f64,
    pub du0_inf: f64,
    pub horizon: f64,
}

impl ContractionConstants {
    pub fn l(&self) -> f64 {
        2.0 * self.c_hi / (self.eta_bar * self.c_lo) * self.du0_inf * (self.lipschitz * self.horizon).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionDiag {
    pub tau: f64,
    pub delta_tau: f64,
    /// `L^N({u0 >= -delta - c_hi |Du0| tau}) - L^N({u0 >= 0})`.
    pub psi_tau: f64,
    /// The same volume by plain cell counting.
    pub psi_counted: f64,
    pub l_hat: f64,
}

impl ContractionDiag {
    pub fn product(&self) -> f64 {
        self.l_hat * self.psi_tau
    }

    pub fn contracted(&self) -> bool {
        self.product() < 1.0
    }
}

/// `psi_tau` for a given `delta`.
pub fn psi(u0: &ScalarField, delta: f64, tau: f64, k: &ContractionConstants) -> Result<(f64, f64)> {
    let s = delta + k.c_hi * k.du0_inf * tau;
    if s <= 0.0 {
        return Ok((0.0, 0.0));
    }
    let below = -f64::MIN_POSITIVE;
    Ok((band_measure(u0, -s, below)?, band_cell_count(u0, -s, below)))
}

/// `delta_tau = sup |u_a - u_b|` over recorded slices in `[0, tau]`, with
/// `psi_tau` from the datum. Identical solutions give `DivisionDegenerate`
/// (trivially contracted).
pub fn contraction_diagnostics(
    a: &Trajectory,
    b: &Trajectory,
    tau: f64,
    k: &ContractionConstants,
) -> Result<ContractionDiag> {
    let mut delta: f64 = 0.0;
    for (sa, sb) in a.slices().iter().zip(b.slices()) {
        if sa.time() > tau + 1e-12 {
            break;
        }
        delta = delta.max(sup_norm_difference(sa, sb)?);
    }
    if delta == 0.0 {
        return Err(Error::DivisionDegenerate);
    }
    let (psi_tau, psi_counted) = psi(a.first(), delta, tau, k)?;
    Ok(ContractionDiag { tau, delta_tau: delta, psi_tau, psi_counted, l_hat: k.l() })
}

/// Largest `tau` on a bisection grid with `L psi_tau < 1` at `delta = 0`.
pub fn contraction_horizon(u0: &ScalarField, k: &ContractionConstants) -> Result<f64> {
    let l = k.l();
    let f = |tau: f64| -> Result<f64> { Ok(l * psi(u0, 0.0, tau, k)?.0) };
    let (mut lo, mut hi) = (0.0, k.horizon);
    if f(hi)? < 1.0 {
        return Ok(hi);
    }
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// `1_{u0 >= 0}` held constant at every frame time.
pub fn static_seed(u0: &ScalarField, times: &[f64]) -> Result<PhaseIndicator> {
    PhaseIndicator::constant(*u0.grid(), times, &superlevel_indicator(u0))
}

/// The space-time constant indicator `value`.
pub fn constant_seed(u0: &ScalarField, times: &[f64], value: f64) -> Result<PhaseIndicator> {
    PhaseIndicator::constant(*u0.grid(), times, &vec![value; u0.grid().len()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn decoupled_is_one_solve() {
        let g = Grid::centered(2, 2.0, 0.05).unwrap();
        let datum = InitialDatum::from_fn(g, -0.3, |p| 0.5 - p[0].hypot(p[1])).unwrap();
        let cfg = WeakSolveConfig::new(datum.clone(), SpeedModel::Constant(1.0), 0.5);
        let seed = constant_seed(datum.field(), &cfg.frame_times(), 0.0).unwrap();
        let sol = picard_solve(&cfg, &seed).unwrap();
        assert_eq!((sol.iterations, sol.residual), (1, 0.0));
        let direct = solve(&EikonalProblem::new(datum, 0.5), &mut ConstantSpeed(1.0), &cfg.frame_times()).unwrap();
        assert_eq!(direct.last().values(), sol.traj.last().values());
    }
}
