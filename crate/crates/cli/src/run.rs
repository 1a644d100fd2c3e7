//! Building, solving and checking one scenario.

use crate::scenario::{self, CheckSpec, DatumSpec, FnSpec, ModelSpec, Scenario, SeedSpec};
use frontprop::eikonal::{
    check_lipschitz_bound, comparison_check, finite_speed_check, gradient_band, random_ordered_pair, solve,
    ConstantSpeed, EikonalProblem, Trajectory,
};
use frontprop::geometry::{
    band_estimate_check, cone_certificate, extract_front, front_to_csv, perimeter_bound_check, ConeParams,
    VelocityConstants,
};
use frontprop::green::{lipschitz_in_r_check, GreenPotential};
use frontprop::reach::{duality_check, lipschitz_check, minimal_time};
use frontprop::velocity::{
    disk_kernel, regularity_report, validate_h3, DislocationModel, DislocationVelocity, FnModel, FnVelocity,
    HeatState, PhaseSource, ScalarFn, TimeSeries,
};
use frontprop::weak::{
    agreement_check, classicality_check, constant_seed, picard_solve, sandwich_check, static_seed, SpeedModel,
    WeakSolution, WeakSolveConfig,
};
use frontprop::{build_truncated_sdf, fpf1, EstimateReport, Grid, InitialDatum, PhaseIndicator, ReportRow, ScalarField};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Why a scenario stopped before its checks could be judged.
#[derive(Debug)]
pub enum Failure {
    Parse(String),
    Validation(String),
    Solver(String),
    Io(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Parse(_) => 2,
            Failure::Validation(_) => 3,
            Failure::Solver(_) => 5,
            Failure::Io(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Parse(m) | Failure::Validation(m) | Failure::Solver(m) | Failure::Io(m) => m,
        }
    }
}

fn kind(e: &frontprop::Error) -> String {
    format!("{e:?}").chars().take_while(|c| c.is_alphanumeric()).collect()
}

fn validation(e: frontprop::Error) -> Failure {
    Failure::Validation(format!("{}: {e}", kind(&e)))
}

/// Input problems found only once the solver starts still count as validation.
fn solver(e: frontprop::Error) -> Failure {
    use frontprop::Error as E;
    match e {
        E::DomainTooSmall { .. } | E::PaddingTooSmall(_) | E::InvalidGrid(_) | E::NoEta { .. } | E::H3Violation(_) => {
            validation(e)
        }
        _ => Failure::Solver(format!("{}: {e}", kind(&e))),
    }
}

fn io(e: impl std::fmt::Display) -> Failure {
    Failure::Io(e.to_string())
}

#[derive(Debug)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub reports: Vec<EstimateReport>,
    /// Set when the check could not be evaluated.
    pub error: Option<String>,
}

impl CheckOutcome {
    pub fn pass(&self) -> bool {
        self.error.is_none() && !self.reports.is_empty() && self.reports.iter().all(|r| r.pass())
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub name: String,
    pub dir: PathBuf,
    pub checks: Vec<CheckOutcome>,
}

impl RunOutcome {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass())
    }

    /// Rows `scenario,check_name,time,lhs,rhs,slack,pass`.
    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            for r in &c.reports {
                for line in r.to_csv_rows().lines() {
                    let _ = writeln!(out, "{},{line}", self.name);
                }
            }
            if let Some(e) = &c.error {
                let _ = writeln!(out, "{},{},nan,nan,nan,nan,false # {}", self.name, c.name, e.replace(',', ";"));
            }
        }
        out
    }
}

enum Model {
    Constant(f64),
    Dislocation(DislocationModel),
    Fn(FnModel),
}

impl Model {
    fn speed(&self) -> SpeedModel<'_> {
        match self {
            Model::Constant(c) => SpeedModel::Constant(*c),
            Model::Dislocation(m) => SpeedModel::Dislocation(m),
            Model::Fn(m) => SpeedModel::Fn(m),
        }
    }
}

fn scalar_fn(spec: &FnSpec) -> ScalarFn {
    match *spec {
        FnSpec::Constant { value } => ScalarFn::Constant(value),
        FnSpec::AffineClamped { a, b, lo, hi } => ScalarFn::AffineClamped { a, b, lo, hi },
    }
}

fn build_datum(sc: &Scenario) -> Result<InitialDatum, Failure> {
    let g = &sc.grid;
    let grid = Grid::centered(g.dim, g.half_width, g.spacing).map_err(validation)?;
    let datum = match sc.datum {
        DatumSpec::Disk { radius, center, floor } => {
            InitialDatum::from_fn(grid, floor, |p| radius - (p[0] - center[0]).hypot(p[1] - center[1]))
        }
        DatumSpec::Ellipse { semi_axes, floor } => {
            InitialDatum::from_fn(grid, floor, |p| 1.0 - (p[0] / semi_axes[0]).hypot(p[1] / semi_axes[1]))
        }
        DatumSpec::Square { half_side, floor } => {
            let shape: Vec<f64> = (0..grid.len())
                .map(|i| {
                    let p = grid.point(i);
                    if p[0].abs().max(p[1].abs()) <= half_side {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            build_truncated_sdf(&grid, &shape, floor)
        }
    };
    datum.map_err(validation)
}

fn build_model(sc: &Scenario, datum: &InitialDatum) -> Result<Model, Failure> {
    let grid = *datum.grid();
    match &sc.model {
        ModelSpec::Constant { speed } => {
            if !(*speed > 0.0) {
                return Err(Failure::Validation(format!("speed {speed} must be positive")));
            }
            Ok(Model::Constant(*speed))
        }
        ModelSpec::Dislocation { kernel_radius, kernel_scale, c1 } => {
            let kernel = disk_kernel(grid.dim(), grid.spacing(), *kernel_radius, *kernel_scale).map_err(validation)?;
            let model = DislocationModel::stationary(grid, kernel, ScalarField::constant(grid, *c1, 0.0))
                .map_err(validation)?;
            validate_h3(&model).map_err(validation)?;
            Ok(Model::Dislocation(model))
        }
        ModelSpec::Fn { alpha, gplus, gminus, v0, range } => {
            let model = FnModel::new(
                scalar_fn(alpha),
                scalar_fn(gplus),
                scalar_fn(gminus),
                ScalarField::constant(grid, *v0, 0.0),
                *range,
            )
            .map_err(validation)?;
            model.check_padding(datum, sc.horizon).map_err(validation)?;
            Ok(Model::Fn(model))
        }
    }
}

fn record_times(sc: &Scenario) -> Vec<f64> {
    let n = (sc.horizon / sc.record_step).round().max(1.0) as usize;
    (0..=n).map(|k| sc.horizon * k as f64 / n as f64).collect()
}

fn seed_indicator(seed: SeedSpec, u0: &ScalarField, times: &[f64]) -> frontprop::Result<PhaseIndicator> {
    match seed {
        SeedSpec::Zero => constant_seed(u0, times, 0.0),
        SeedSpec::One => constant_seed(u0, times, 1.0),
        SeedSpec::Static => static_seed(u0, times),
    }
}

fn weak_config<'a>(sc: &Scenario, datum: &InitialDatum, model: &'a Model) -> WeakSolveConfig<'a> {
    let mut cfg = WeakSolveConfig::new(datum.clone(), model.speed(), sc.horizon);
    cfg.tol_chi = sc.solver.tol_chi;
    cfg.max_iter = sc.solver.max_iter;
    cfg.frames = sc.solver.frames;
    cfg.damping = sc.solver.damping;
    cfg
}

struct Solved {
    traj: Trajectory,
    weak: Option<WeakSolution>,
    heat: Vec<HeatState>,
}

fn solve_scenario(sc: &Scenario, datum: &InitialDatum, model: &Model) -> Result<Solved, Failure> {
    if sc.solver.picard {
        let cfg = weak_config(sc, datum, model);
        let seed = seed_indicator(sc.solver.seed, datum.field(), &cfg.frame_times()).map_err(validation)?;
        let sol = picard_solve(&cfg, &seed).and_then(|s| s.require_converged()).map_err(solver)?;
        let heat = sol.heat.clone();
        return Ok(Solved { traj: sol.traj.clone(), weak: Some(sol), heat });
    }
    let problem = EikonalProblem::new(datum.clone(), sc.horizon);
    let times = record_times(sc);
    let (traj, heat) = match model {
        Model::Constant(c) => (solve(&problem, &mut ConstantSpeed(*c), &times).map_err(solver)?, Vec::new()),
        Model::Dislocation(m) => {
            let mut v = DislocationVelocity { model: m, phase: PhaseSource::Own };
            (solve(&problem, &mut v, &times).map_err(solver)?, Vec::new())
        }
        Model::Fn(m) => {
            let mut v = FnVelocity::new(m, PhaseSource::Own).recording(times.clone());
            let traj = solve(&problem, &mut v, &times).map_err(solver)?;
            (traj, v.into_recorded())
        }
    };
    Ok(Solved { traj, weak: None, heat })
}

struct Ctx<'a> {
    sc: &'a Scenario,
    datum: &'a InitialDatum,
    model: &'a Model,
    solved: &'a Solved,
    seed: u64,
    dir: &'a Path,
}

impl Ctx<'_> {
    fn c_lo(&self) -> f64 {
        self.model.speed().c_lo()
    }

    fn c_hi(&self) -> f64 {
        self.model.speed().c_hi()
    }

    fn reach_radius(&self) -> f64 {
        self.datum.r0() + self.c_hi() * self.sc.horizon
    }

    fn measured(&self) -> VelocityConstants {
        VelocityConstants::measure(&self.solved.traj, self.reach_radius())
    }

    fn cone_params(&self, ball_radius: f64) -> frontprop::Result<ConeParams> {
        let h = self.datum.grid().spacing();
        let raw = self.measured().cone_parameters(ball_radius)?;
        raw.with_grid_slack(h).ok_or_else(|| {
            frontprop::Error::InvalidArgument(format!("cone height {} is below 4h = {}", raw.theta, 4.0 * h))
        })
    }

    fn cone_reports(&self, ball_radius: f64, axes: usize) -> frontprop::Result<EstimateReport> {
        let params = self.cone_params(ball_radius)?;
        let mut report = EstimateReport::new("cone_certificate");
        report.metric("rho", params.rho).metric("theta", params.theta);
        for u in self.solved.traj.slices() {
            let front = extract_front(u, 0.0)?;
            let cert = cone_certificate(u, &front, &params, axes)?;
            report.push(ReportRow::lower(u.time(), cert.coverage, 1.0, 1.0));
        }
        Ok(report)
    }
}

fn ray_points(u: &ScalarField, count: usize, r_max: f64) -> Vec<[f64; 2]> {
    (0..count)
        .map(|k| {
            let a = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / count as f64;
            let (c, s) = (a.cos(), a.sin());
            let (mut lo, mut hi) = (0.0, r_max);
            for _ in 0..60 {
                let m = 0.5 * (lo + hi);
                if u.interpolate([m * c, m * s]) >= 0.0 {
                    lo = m;
                } else {
                    hi = m;
                }
            }
            [lo * c, lo * s]
        })
        .collect()
}

fn run_check(ctx: &Ctx, spec: &CheckSpec) -> frontprop::Result<Vec<EstimateReport>> {
    let traj = &ctx.solved.traj;
    let du0 = ctx.datum.lipschitz();
    let need = |what: &str| frontprop::Error::InvalidArgument(format!("check needs {what}"));
    Ok(match spec {
        CheckSpec::FiniteSpeed => vec![finite_speed_check(traj, ctx.datum.r0(), ctx.c_hi())],
        CheckSpec::LipschitzBound => {
            let c = match ctx.model {
                Model::Constant(_) => 0.0,
                Model::Dislocation(m) => m.constants().lipschitz,
                Model::Fn(_) => ctx.measured().lipschitz,
            };
            vec![check_lipschitz_bound(traj, c, du0)]
        }
        CheckSpec::GradientBand => {
            let gb = gradient_band(traj)?;
            let mut r = EstimateReport::new("gradient_band");
            r.metric("eta", gb.eta).metric("gamma_hat", gb.gamma_hat);
            r.push(ReportRow::lower(ctx.sc.horizon, gb.eta_bar, 0.0, f64::MIN_POSITIVE));
            vec![r]
        }
        CheckSpec::BandEstimate { a, b } => {
            let gb = gradient_band(traj)?;
            vec![band_estimate_check(traj, *a, *b, gb.eta, gb.eta_bar, ctx.c_lo(), ctx.c_hi(), du0, ctx.sc.horizon)?]
        }
        CheckSpec::ConeCertificate { ball_radius, axes } => vec![ctx.cone_reports(*ball_radius, *axes)?],
        CheckSpec::PerimeterBound { ball_radius, lambda_hat } => {
            let params = ctx.cone_params(*ball_radius)?;
            let u = traj.last();
            let front = extract_front(u, 0.0)?;
            let cert = cone_certificate(u, &front, &params, 16)?;
            vec![perimeter_bound_check(&front, &cert, ctx.reach_radius(), *lambda_hat)?]
        }
        CheckSpec::Classicality => vec![classicality_check(traj)?],
        CheckSpec::MinimalTime => {
            let mt = minimal_time(traj)?;
            fpf1::write_field(ctx.dir, "arrival", &mt.to_field())?;
            vec![lipschitz_check(&mt, ctx.c_lo())?, duality_check(&mt, traj)?]
        }
        CheckSpec::Comparison { pairs } => {
            let series = TimeSeries::new(traj.times().to_vec(), traj.velocities().to_vec())?;
            let grid = *traj.grid();
            let data = (0..*pairs as u64)
                .map(|k| random_ordered_pair(ctx.seed.wrapping_add(k), grid))
                .collect::<frontprop::Result<Vec<_>>>()?;
            let steps = (ctx.sc.horizon / traj.dt()).round() as usize;
            vec![comparison_check(&data, |t| series.at(t), traj.dt(), steps)?]
        }
        CheckSpec::Sandwich => vec![sandwich_check(ctx.solved.weak.as_ref().ok_or_else(|| need("picard"))?)?],
        CheckSpec::SeedIndependence => {
            let first = ctx.solved.weak.as_ref().ok_or_else(|| need("picard"))?;
            let cfg = weak_config(ctx.sc, ctx.datum, ctx.model);
            let other = if ctx.sc.solver.seed == SeedSpec::Zero { SeedSpec::One } else { SeedSpec::Zero };
            let seed = seed_indicator(other, ctx.datum.field(), &cfg.frame_times())?;
            let second = picard_solve(&cfg, &seed)?.require_converged()?;
            vec![agreement_check(first, &second, du0)?]
        }
        CheckSpec::FnRegularity => {
            let Model::Fn(m) = ctx.model else { return Err(need("a FitzHugh-Nagumo model")) };
            vec![regularity_report(&ctx.solved.heat, m)?]
        }
        CheckSpec::GreenLipschitz { radii, lambda0, ball_radius } => {
            let k = PhaseIndicator::from_trajectory(traj);
            let mut rs = vec![0.0];
            rs.extend(radii.iter().copied().filter(|r| *r > 0.0));
            let pot = GreenPotential::new(&k, &rs)?;
            let coverage = ctx
                .cone_reports(*ball_radius, 16)?
                .rows
                .iter()
                .map(|r| r.lhs)
                .fold(f64::INFINITY, f64::min);
            // recorded slices nearest to a quarter, half and all of min(T, 1/2)
            let horizon = ctx.sc.horizon.min(0.5);
            let slices: Vec<&ScalarField> = [0.25, 0.5, 1.0]
                .iter()
                .map(|f| {
                    let target = f * horizon;
                    traj.slices()
                        .iter()
                        .min_by(|a, b| (a.time() - target).abs().total_cmp(&(b.time() - target).abs()))
                        .expect("trajectory has slices")
                })
                .collect();
            let ts: Vec<f64> = slices.iter().map(|s| s.time()).collect();
            let fronts: Vec<Vec<[f64; 2]>> = slices.iter().map(|s| ray_points(s, 8, ctx.reach_radius())).collect();
            let xs: Vec<[f64; 2]> = fronts.concat();
            let report = lipschitz_in_r_check(&pot, coverage, &xs, &ts, &rs, *lambda0)?;
            let mut stability = EstimateReport::new("green_quotient_stability");
            for (&t, front) in ts.iter().zip(&fronts) {
                for &x in front {
                    let base = pot.phi(x, t, 0.0)?;
                    let q: Vec<f64> =
                        rs[1..].iter().map(|&r| Ok((pot.phi(x, t, r)? - base) / r)).collect::<frontprop::Result<_>>()?;
                    let (lo, hi) = q.iter().fold((f64::INFINITY, 0.0_f64), |(a, b), &v| (a.min(v), b.max(v)));
                    stability.push(ReportRow::upper(t, hi / lo - 1.0, 0.2, 0.2));
                }
            }
            vec![report, stability]
        }
    })
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| io(format!("{}: {e}", path.display())))
}

/// Output directory: `out`, else the scenario's own `output` (relative to
/// the scenario file), else `frontprop-out`; the scenario name is appended.
pub fn output_dir(sc: &Scenario, scenario_path: &Path, out: Option<&Path>) -> PathBuf {
    let base = match (out, &sc.output) {
        (Some(o), _) => o.to_path_buf(),
        (None, Some(o)) => scenario_path.parent().unwrap_or(Path::new(".")).join(o),
        (None, None) => PathBuf::from("frontprop-out"),
    };
    base.join(&sc.name)
}

pub fn run_scenario(path: &Path, out: Option<&Path>, seed: u64) -> Result<RunOutcome, Failure> {
    let sc: Scenario = scenario::load(path).map_err(Failure::Parse)?;
    if !(sc.horizon > 0.0) || !(sc.record_step > 0.0) {
        return Err(Failure::Validation("horizon and record_step must be positive".into()));
    }
    let datum = build_datum(&sc)?;
    let model = build_model(&sc, &datum)?;
    let dir = output_dir(&sc, path, out);
    std::fs::create_dir_all(&dir).map_err(io)?;
    let solved = solve_scenario(&sc, &datum, &model)?;

    let ctx = Ctx { sc: &sc, datum: &datum, model: &model, solved: &solved, seed, dir: &dir };
    let checks: Vec<CheckOutcome> = sc
        .checks
        .iter()
        .map(|spec| match run_check(&ctx, spec) {
            Ok(reports) => CheckOutcome { name: spec.label(), reports, error: None },
            Err(e) => CheckOutcome { name: spec.label(), reports: Vec::new(), error: Some(e.to_string()) },
        })
        .collect();

    fpf1::write_field(&dir, "u_initial", solved.traj.first()).map_err(io)?;
    fpf1::write_field(&dir, "u_final", solved.traj.last()).map_err(io)?;
    if let Ok(front) = extract_front(solved.traj.last(), 0.0) {
        write(&dir.join("front_final.csv"), &front_to_csv(&front))?;
    }
    if let Some(w) = &solved.weak {
        let mut csv = String::from("iteration,residual\n");
        for (k, r) in w.history.iter().enumerate() {
            let _ = writeln!(csv, "{},{r:.12e}", k + 1);
        }
        write(&dir.join("picard.csv"), &csv)?;
    }
    let mut report = format!("{}\n", EstimateReport::CSV_HEADER);
    let mut summary = String::from("check,rows,worst_slack,pass,error\n");
    for c in &checks {
        let rows: usize = c.reports.iter().map(|r| r.rows.len()).sum();
        let worst = c.reports.iter().map(|r| r.worst_slack()).fold(f64::INFINITY, f64::min);
        for r in &c.reports {
            report.push_str(&r.to_csv_rows());
        }
        let err = c.error.as_deref().unwrap_or("").replace(',', ";");
        let _ = writeln!(summary, "{},{rows},{worst:.6e},{},{err}", c.name, c.pass());
    }
    write(&dir.join("report.csv"), &report)?;
    write(&dir.join("summary.csv"), &summary)?;
    Ok(RunOutcome { name: sc.name, dir, checks })
}
