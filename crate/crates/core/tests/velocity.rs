mod common;

use common::disk_indicator;
use frontprop::velocity::*;
use frontprop::{Error, Grid, ScalarField};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn s2_model(h: f64, half: f64) -> DislocationModel {
    let grid = Grid::centered(2, half, h).unwrap();
    let kernel = disk_kernel(2, h, 1.0, 0.25).unwrap();
    DislocationModel::stationary(grid, kernel, ScalarField::constant(grid, 1.0, 0.0)).unwrap()
}

fn random_binary(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| if rng.gen_bool(0.5) { 1.0 } else { 0.0 }).collect()
}

#[test]
fn spectral_matches_direct_summation() {
    let h = 1.0 / 16.0;
    // 64 x 64 nodes
    let grid = Grid::new(2, [-2.0, -2.0], h, [64, 64]).unwrap();
    let kernel = disk_kernel(2, h, 0.5, 0.7).unwrap();
    let conv = Convolver::new(&grid, kernel.grid(), kernel.values()).unwrap();
    let chi = random_binary(grid.len(), 7);
    let fast = conv.apply(&chi).unwrap();
    let slow = direct_convolution(&grid, kernel.grid(), kernel.values(), &chi);
    let diff = fast.iter().zip(&slow).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(diff <= 1e-10, "{diff}");
}

#[test]
fn full_overlap_at_origin() {
    let h = 0.02;
    let model = s2_model(h, 3.0);
    let chi = disk_indicator(model.grid(), 1.0);
    let c = dislocation_velocity(&model, &chi, 0.0).unwrap();
    let origin = model.grid().index(150, 150);
    assert_eq!(model.grid().point(origin), [0.0, 0.0]);
    // sampled disk area differs from pi by O(h^{3/2})
    assert!((c.values()[origin] - (1.0 + PI / 4.0)).abs() < 2e-3, "{}", c.values()[origin]);
    let empty = vec![0.0; model.grid().len()];
    let c = dislocation_velocity(&model, &empty, 0.0).unwrap();
    assert!(c.values().iter().all(|&v| v == 1.0));
}

#[test]
fn convolution_is_additive_on_disjoint_supports() {
    let model = s2_model(0.05, 3.0);
    let g = *model.grid();
    let left: Vec<f64> = (0..g.len()).map(|i| if g.point(i)[0] < -0.3 && g.point(i)[0].abs() < 2.0 { 1.0 } else { 0.0 }).collect();
    let right: Vec<f64> = (0..g.len()).map(|i| if g.point(i)[0] > 0.3 && g.point(i)[1] < 1.0 { 1.0 } else { 0.0 }).collect();
    let both: Vec<f64> = left.iter().zip(&right).map(|(a, b)| a + b).collect();
    let f = |chi: &[f64]| dislocation_velocity(&model, chi, 0.0).unwrap().map(|v| v - 1.0);
    let (a, b, ab) = (f(&left), f(&right), f(&both));
    let err = (0..g.len()).map(|i| (ab.values()[i] - a.values()[i] - b.values()[i]).abs()).fold(0.0, f64::max);
    assert!(err <= 1e-10, "{err}");
}

#[test]
fn kernel_touching_its_grid_edge_is_rejected() {
    let h = 0.1;
    let grid = Grid::centered(2, 2.0, h).unwrap();
    let kg = Grid::centered(2, 1.0, h).unwrap();
    let kernel = ScalarField::constant(kg, 1.0, 0.0);
    assert!(matches!(
        Convolver::new(&grid, &kg, kernel.values()),
        Err(Error::PaddingTooSmall(_))
    ));
    let even = Grid::new(2, [-1.0, -1.0], h, [20, 21]).unwrap();
    assert!(Convolver::new(&grid, &even, &vec![0.0; even.len()]).is_err());
}

#[test]
fn time_dependent_kernel_interpolates_linearly() {
    let h = 0.05;
    let grid = Grid::centered(2, 2.5, h).unwrap();
    let k0 = disk_kernel(2, h, 1.0, 0.0).unwrap();
    let k1 = disk_kernel(2, h, 1.0, 0.2).unwrap().with_time(1.0);
    let kernels = TimeSeries::new(vec![0.0, 1.0], vec![k0, k1]).unwrap();
    let model = DislocationModel::new(grid, kernels, TimeSeries::constant(ScalarField::constant(grid, 1.0, 0.0))).unwrap();
    let chi = disk_indicator(&grid, 1.0);
    let at = |t: f64| dislocation_velocity(&model, &chi, t).unwrap().values()[grid.index(50, 50)];
    let full = at(1.0) - 1.0;
    assert!((at(0.25) - 1.0 - 0.25 * full).abs() < 1e-12);
    assert!((at(3.0) - at(1.0)).abs() < 1e-15);
    let (k, _) = validate_h3(&model).unwrap();
    assert!((k.c_lo - (1.0 - 0.2 * k.kernel_l1 / 0.2)).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn velocity_bounds_are_uniform_in_chi(seed in 0u64..1_000_000, r in 0.3f64..1.6) {
        let model = s2_model(0.05, 3.0);
        let g = *model.grid();
        let k = model.constants();
        let noise = random_binary(g.len(), seed);
        let chi: Vec<f64> = (0..g.len()).map(|i| {
            let p = g.point(i);
            if p[0].hypot(p[1]) <= r { noise[i] } else { 0.0 }
        }).collect();
        let c = dislocation_velocity(&model, &chi, 0.0).unwrap();
        prop_assert!(c.min() >= k.c_lo - 1e-12);
        prop_assert!(c.max() <= k.c_hi + 1e-12);
        prop_assert!(c.lipschitz_estimate() <= k.lipschitz + 1e-9, "{} > {}", c.lipschitz_estimate(), k.lipschitz);
    }
}

fn fn_model(_grid: Grid, alpha: ScalarFn, gplus: ScalarFn, gminus: ScalarFn, v0: ScalarField) -> FnModel {
    FnModel::new(alpha, gplus, gminus, v0, 20.0).unwrap()
}

#[test]
fn uniform_source_gives_linear_growth() {
    let grid = Grid::centered(2, 2.0, 0.05).unwrap();
    let model = fn_model(
        grid,
        ScalarFn::AffineClamped { a: 1.0, b: 0.5, lo: 0.5, hi: 2.0 },
        ScalarFn::Constant(1.0),
        ScalarFn::Constant(0.0),
        ScalarField::constant(grid, 0.0, 0.0),
    );
    let chi = vec![1.0; grid.len()];
    let mut s = model.initial_state();
    assert!(fn_velocity(&s, &model).unwrap().values().iter().all(|&c| c == 1.0));
    for _ in 0..10 {
        s = heat_step(&s, &chi, &model, 0.03).unwrap();
    }
    assert!((s.time - 0.3).abs() < 1e-14);
    assert!(s.v.values().iter().all(|&v| (v - 0.3).abs() < 1e-12));
    let c = fn_velocity(&s, &model).unwrap();
    assert!(c.values().iter().all(|&v| (v - 1.15).abs() < 1e-12));
}

#[test]
fn gaussian_follows_the_heat_kernel() {
    let h = 0.05;
    let grid = Grid::centered(2, 4.0, h).unwrap();
    let s0 = 0.1;
    let model = fn_model(
        grid,
        ScalarFn::Constant(1.0),
        ScalarFn::Constant(0.0),
        ScalarFn::Constant(0.0),
        gaussian(grid, s0).unwrap(),
    );
    let chi = vec![0.0; grid.len()];
    let mut s = model.initial_state();
    for _ in 0..40 {
        s = heat_step(&s, &chi, &model, 0.005).unwrap();
    }
    let exact = gaussian(grid, s0 + 0.2).unwrap();
    let err = s.v.values().iter().zip(exact.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    // second order in h and dt against a peak of 0.265
    assert!(err < 2e-3 * exact.max(), "{err}");
    assert!((s.v.integral() - 1.0).abs() < 1e-6);
}

#[test]
fn heat_bound_and_maximum_principle_along_an_s3_run() {
    let h = 0.04;
    let grid = Grid::centered(2, 4.0, h).unwrap();
    let model = fn_model(
        grid,
        ScalarFn::AffineClamped { a: 0.5, b: 1.0, lo: 0.5, hi: 1.5 },
        ScalarFn::Constant(1.0),
        ScalarFn::Constant(0.1),
        ScalarField::constant(grid, 0.0, 0.0),
    );
    let chi = disk_indicator(&grid, 1.0);
    let dt = 0.01;
    let mut s = model.initial_state();
    for _ in 0..50 {
        let next = heat_step(&s, &chi, &model, dt).unwrap();
        assert!(next.v.max() <= s.v.max() + model.g_hi * dt + 1e-12);
        assert!(next.v.min() >= s.v.min() + model.g_lo * dt - 1e-12);
        assert!(next.v.max_abs() <= model.v0().max_abs() + model.gamma * next.time + 1e-8);
        s = next;
    }
}

#[test]
fn alpha_outside_its_declared_range_is_reported() {
    let grid = Grid::centered(2, 1.0, 0.1).unwrap();
    let liar = ScalarFn::custom(|r| 1.0 + r, 0.5, 1.5, 1.0);
    let model = FnModel::new(
        liar.clone(),
        ScalarFn::Constant(1.0),
        ScalarFn::Constant(0.0),
        ScalarField::constant(grid, 0.0, 0.0),
        0.2,
    )
    .unwrap();
    let state = HeatState::new(ScalarField::constant(grid, -0.8, 0.0));
    assert!(matches!(fn_velocity(&state, &model), Err(Error::AlphaRangeViolation { .. })));
    assert!(FnModel::new(liar, ScalarFn::Constant(1.0), ScalarFn::Constant(0.0), ScalarField::constant(grid, 0.0, 0.0), 5.0).is_err());
}

#[test]
fn unordered_nonlinearities_are_rejected() {
    let grid = Grid::centered(2, 1.0, 0.1).unwrap();
    let r = FnModel::new(
        ScalarFn::Constant(1.0),
        ScalarFn::Constant(0.0),
        ScalarFn::Constant(0.5),
        ScalarField::constant(grid, 0.0, 0.0),
        1.0,
    );
    assert!(matches!(r, Err(Error::BadScalarFn(_))));
}

/// `v(0, t)` slope for the half-plane source: `int_0^t (4 pi s)^{-1/2} ds`.
fn half_plane_slope(t: f64) -> f64 {
    (t / PI).sqrt()
}

#[test]
fn half_plane_regularity_against_duhamel_oracle() {
    let h = 0.02;
    let grid = Grid::centered(2, 3.0, h).unwrap();
    let model = fn_model(
        grid,
        ScalarFn::Constant(1.0),
        ScalarFn::Constant(1.0),
        ScalarFn::Constant(0.0),
        ScalarField::constant(grid, 0.0, 0.0),
    );
    let chi: Vec<f64> = (0..grid.len()).map(|i| if grid.point(i)[0] >= 0.0 { 1.0 } else { 0.0 }).collect();
    let mut states = vec![model.initial_state()];
    let mut s = model.initial_state();
    for _ in 0..100 {
        s = heat_step(&s, &chi, &model, 0.0025).unwrap();
        states.push(s.clone());
    }
    let lip = s.v.lipschitz_estimate();
    let oracle = half_plane_slope(0.25);
    assert!((lip - oracle).abs() < 0.01 * oracle, "{lip} vs {oracle}");
    assert!(lip <= model.gamma * k_n(2) * 0.5);
    let report = regularity_report(&states, &model).unwrap();
    assert!(report.pass(), "{:?}", report.worst());
    // Crank-Nicolson rings for a few steps after the source switches on
    // (0.68 at the first step, settling to 0.564 by t = 0.05)
    assert!(report.metrics["fitted_k"] <= 0.7);
    let late: Vec<HeatState> = states.into_iter().filter(|s| s.time >= 0.05).collect();
    let settled = regularity_report(&late, &model).unwrap();
    assert!((settled.metrics["fitted_k"] - 1.0 / PI.sqrt()).abs() < 0.005);
}

#[test]
fn calibration_stays_below_the_frozen_constant() {
    let k = calibrate_k_n(2, 0.02, 0.25).unwrap();
    assert!((k - 1.0 / PI.sqrt()).abs() < 0.01, "{k}");
    assert!(k <= K_N[1]);
    let k1 = calibrate_k_n(1, 0.01, 0.25).unwrap();
    assert!(k1 <= K_N[0]);
}

#[test]
fn temporal_modulus_from_a_sloped_datum() {
    let h = 0.04;
    let grid = Grid::centered(2, 4.0, h).unwrap();
    let v0 = ScalarField::from_fn(grid, 0.0, |p| 1.0 - p[0].hypot(p[1]).min(2.0)).unwrap();
    let model = fn_model(
        grid,
        ScalarFn::Constant(1.0),
        ScalarFn::Constant(1.0),
        ScalarFn::Constant(-1.0),
        v0,
    );
    let chi = disk_indicator(&grid, 1.0);
    let mut states = vec![model.initial_state()];
    let mut s = model.initial_state();
    // dt = h^2: pointwise bounds on kinked data need resolved time steps
    for _ in 0..25 {
        s = heat_step(&s, &chi, &model, h * h).unwrap();
        states.push(s.clone());
    }
    let report = regularity_report(&states, &model).unwrap();
    assert!(report.pass(), "{:?}", report.worst());
    let only_ends = [states[0].clone(), states[25].clone()];
    assert!(regularity_report(&only_ends, &model).unwrap().pass());
}
