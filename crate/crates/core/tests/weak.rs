mod common;

use common::ray_radius;
use frontprop::eikonal::{solve, ConstantSpeed, EikonalProblem};
use frontprop::presets::{disk_datum, s2, s3, S2_HORIZON, S3_HORIZON};
use frontprop::velocity::DislocationModel;
use frontprop::weak::*;
use frontprop::{Error, PhaseIndicator, ScalarField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn min_max_radius(u: &ScalarField) -> (f64, f64) {
    (0..32).map(|k| ray_radius(u, 2.0 * PI * k as f64 / 32.0, 2.5)).fold((f64::INFINITY, 0.0), |(a, b), r| (a.min(r), b.max(r)))
}

#[test]
fn zero_kernel_is_decoupled() {
    let datum = disk_datum(2.0, 0.04, 0.8, -0.3).unwrap();
    let g = *datum.grid();
    let zero = frontprop::velocity::disk_kernel(2, 0.04, 0.5, 0.0).unwrap();
    let model = DislocationModel::stationary(g, zero, ScalarField::constant(g, 1.0, 0.0)).unwrap();
    let cfg = WeakSolveConfig::new(datum.clone(), SpeedModel::Dislocation(&model), 0.5);
    let seed = constant_seed(datum.field(), &cfg.frame_times(), 1.0).unwrap();
    let sol = picard_solve(&cfg, &seed).unwrap();
    assert_eq!(sol.iterations, 1);
    assert_eq!(sol.residual, 0.0);
    let direct = solve(&EikonalProblem::new(datum, 0.5), &mut ConstantSpeed(1.0), &cfg.frame_times()).unwrap();
    for (a, b) in sol.traj.slices().iter().zip(direct.slices()) {
        assert_eq!(a.values(), b.values());
    }
}

#[test]
fn dislocation_fixed_point_lies_between_bounding_runs() {
    let (datum, model) = s2(0.04).unwrap();
    let k = model.constants();
    let cfg = WeakSolveConfig::new(datum.clone(), SpeedModel::Dislocation(&model), S2_HORIZON);
    let sol = picard_solve(&cfg, &static_seed(datum.field(), &cfg.frame_times()).unwrap()).unwrap();
    assert!(sol.converged && sol.iterations <= 20, "{:?}", sol.history);
    assert!(sol.residual < cfg.tol_chi);
    // bounding constant-speed runs on the same grid
    let problem = EikonalProblem::new(datum, S2_HORIZON);
    let slow = solve(&problem, &mut ConstantSpeed(k.c_lo), &[]).unwrap();
    let fast = solve(&problem, &mut ConstantSpeed(k.c_hi), &[]).unwrap();
    let (lo, hi) = min_max_radius(sol.traj.last());
    assert!(lo > min_max_radius(slow.last()).1, "{lo}");
    assert!(hi < min_max_radius(fast.last()).0, "{hi}");
    assert!(sandwich_check(&sol).unwrap().pass());
}

#[test]
fn fn_fixed_point_between_alpha_bounds() {
    let (datum, model) = s3(0.04).unwrap();
    let cfg = WeakSolveConfig::new(datum.clone(), SpeedModel::Fn(&model), S3_HORIZON);
    let sol = picard_solve(&cfg, &constant_seed(datum.field(), &cfg.frame_times(), 0.0).unwrap()).unwrap();
    assert!(sol.converged, "{:?}", sol.history);
    let (lo, hi) = min_max_radius(sol.traj.last());
    assert!(lo > 1.0 + 0.5 * S3_HORIZON && hi < 1.0 + 1.5 * S3_HORIZON, "{lo} {hi}");
    assert_eq!(sol.heat.len(), cfg.frame_times().len());
}

#[test]
fn one_iteration_budget_reports_no_convergence() {
    let (datum, model) = s2(0.04).unwrap();
    let mut cfg = WeakSolveConfig::new(datum.clone(), SpeedModel::Dislocation(&model), S2_HORIZON);
    cfg.max_iter = 1;
    let sol = picard_solve(&cfg, &constant_seed(datum.field(), &cfg.frame_times(), 0.0).unwrap()).unwrap();
    assert!(!sol.converged);
    assert!(matches!(sol.require_converged(), Err(Error::NoConvergence { history }) if history.len() == 1));
}

#[test]
fn damped_iteration_reaches_the_same_front() {
    let (datum, model) = s2(0.04).unwrap();
    let mut cfg = WeakSolveConfig::new(datum.clone(), SpeedModel::Dislocation(&model), S2_HORIZON);
    let seed = static_seed(datum.field(), &cfg.frame_times()).unwrap();
    let plain = picard_solve(&cfg, &seed).unwrap();
    cfg.damping = Some(0.7);
    cfg.max_iter = 40;
    let damped = picard_solve(&cfg, &seed).unwrap().require_converged().unwrap();
    let report = agreement_check(&plain, &damped, datum.lipschitz()).unwrap();
    assert!(report.pass(), "{:?}", report.metrics);
}

#[test]
fn invalid_configs_are_rejected() {
    let datum = disk_datum(2.0, 0.04, 0.8, -0.3).unwrap();
    let mut cfg = WeakSolveConfig::new(datum.clone(), SpeedModel::Constant(1.0), 0.5);
    let seed = constant_seed(datum.field(), &cfg.frame_times(), 0.0).unwrap();
    cfg.tol_chi = 0.0;
    assert!(picard_solve(&cfg, &seed).is_err());
    cfg.tol_chi = 1e-3;
    cfg.max_iter = 0;
    assert!(picard_solve(&cfg, &seed).is_err());
}

#[test]
fn extreme_seeds_agree_and_identical_seeds_are_bitwise_equal() {
    let (datum, model) = s2(0.04).unwrap();
    let cfg = WeakSolveConfig::new(datum.clone(), SpeedModel::Dislocation(&model), S2_HORIZON);
    let times = cfg.frame_times();
    let zero = constant_seed(datum.field(), &times, 0.0).unwrap();
    let one = constant_seed(datum.field(), &times, 1.0).unwrap();
    let (_, _, report) = uniqueness_experiment(&cfg, &zero, &one).unwrap();
    assert!(report.pass(), "{:?}", report.metrics);
    let (a, b, same) = uniqueness_experiment(&cfg, &zero, &zero).unwrap();
    assert_eq!(a.traj.last().values(), b.traj.last().values());
    assert_eq!(same.metrics["sup_norm"], 0.0);
}

fn disk_traj(h: f64) -> frontprop::eikonal::Trajectory {
    let datum = disk_datum(2.2, h, 0.5, -0.5).unwrap();
    solve(&EikonalProblem::new(datum, 1.0), &mut ConstantSpeed(1.0), &[0.0, 0.5, 1.0]).unwrap()
}

#[test]
fn constant_speed_band_is_an_annulus() {
    let h = 0.02;
    let traj = disk_traj(h);
    let report = classicality_check(&traj).unwrap();
    assert!(report.pass());
    for (row, s) in report.rows.iter().zip(traj.slices()) {
        let r = 0.5 + s.time();
        let annulus = 2.0 * CLASSICAL_EPS * h * 2.0 * PI * r;
        assert!((row.lhs / annulus - 1.0).abs() < 0.1, "{} vs {annulus}", row.lhs);
    }
}

#[test]
fn fattened_level_set_is_not_classical() {
    let traj = disk_traj(0.02);
    let fat = traj.map_values(|v| if (-0.2..=0.0).contains(&v) { 0.0 } else { v });
    assert!(!classicality_check(&fat).unwrap().pass());
}

#[test]
fn refinement_halves_the_band() {
    let report = classicality_refinement(&disk_traj(0.04), &disk_traj(0.02)).unwrap();
    assert_eq!(report.rows.len(), 3);
    assert!(report.pass(), "{:?}", report.rows);
}

#[test]
fn contraction_diagnostics_on_s2() {
    let (datum, model) = s2(0.04).unwrap();
    let cfg = WeakSolveConfig::new(datum.clone(), SpeedModel::Dislocation(&model), S2_HORIZON);
    let times = cfg.frame_times();
    let u0 = datum.field();
    let k = model.constants();
    let consts = ContractionConstants {
        c_lo: k.c_lo,
        c_hi: k.c_hi,
        lipschitz: k.lipschitz,
        eta_bar: 1.0,
        du0_inf: datum.lipschitz(),
        horizon: S2_HORIZON,
    };
    let base = static_seed(u0, &times).unwrap();
    let a = picard_solve(&cfg, &base).unwrap();
    assert!(matches!(contraction_diagnostics(&a.traj, &a.traj, 0.05, &consts), Err(Error::DivisionDegenerate)));

    // psi shrinks to the zero band as tau decreases, and both volumes agree
    let mut last = f64::INFINITY;
    for tau in [0.2, 0.1, 0.05, 0.02, 0.01, 0.0] {
        let (p, counted) = psi(u0, 0.0, tau, &consts).unwrap();
        assert!(p <= last + 1e-12);
        let perimeter = 2.0 * PI;
        assert!((p - counted).abs() <= perimeter * 0.04, "{p} {counted}");
        last = p;
    }
    assert!(last < 1e-12);

    // second solution from a seed flipped on 1% of the cells
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let frame: Vec<f64> = base.frame(0).iter().map(|&v| if rng.gen::<f64>() < 0.01 { 1.0 - v } else { v }).collect();
    let flipped = PhaseIndicator::constant(*u0.grid(), &times, &frame).unwrap();
    let mut one_step = cfg.clone();
    one_step.max_iter = 1;
    let b = picard_solve(&one_step, &flipped).unwrap();
    let d = contraction_diagnostics(&a.traj, &b.traj, 0.05, &consts).unwrap();
    assert!(d.delta_tau > 0.0 && d.psi_tau > 0.0);
    assert!(d.delta_tau <= d.product() * d.delta_tau + 10.0 * 0.04);
}
