//! The three reference scenarios: a constant-speed disk, a dislocation disk
//! and a FitzHugh-Nagumo disk.

use crate::datum::InitialDatum;
use crate::error::Result;
use crate::grid::{Grid, ScalarField};
use crate::velocity::{disk_kernel, DislocationModel, FnModel, ScalarFn};

pub const S1_HORIZON: f64 = 1.0;
pub const S2_HORIZON: f64 = 0.5;
pub const S3_HORIZON: f64 = 0.5;

/// `clamp(radius - |x|, floor, -floor)` on `[-half_width, half_width]^2`.
pub fn disk_datum(half_width: f64, h: f64, radius: f64, floor: f64) -> Result<InitialDatum> {
    let g = Grid::centered(2, half_width, h)?;
    InitialDatum::from_fn(g, floor, |p| radius - p[0].hypot(p[1]))
}

/// Unit disk for `c = 1` on `[0, 1]`.
pub fn s1(h: f64) -> Result<InitialDatum> {
    disk_datum(2.8, h, 1.0, -0.5)
}

/// Unit disk under `c = (1/4) 1_{B(0,1)} * chi + 1` on `[0, 1/2]`.
pub fn s2(h: f64) -> Result<(InitialDatum, DislocationModel)> {
    let datum = disk_datum(2.6, h, 1.0, -0.5)?;
    let g = *datum.grid();
    let model = DislocationModel::stationary(g, disk_kernel(2, h, 1.0, 0.25)?, ScalarField::constant(g, 1.0, 0.0))?;
    Ok((datum, model))
}

/// `alpha(v) = clamp(0.5 + v, 0.5, 1.5)`, `g+ = 1`, `g- = 0.1`, `v0 = 0`,
/// unit disk on `[0, 1/2]`. The grid leaves room for the heat padding.
pub fn s3(h: f64) -> Result<(InitialDatum, FnModel)> {
    let datum = disk_datum(5.0, h, 1.0, -0.25)?;
    let g = *datum.grid();
    let model = FnModel::new(
        ScalarFn::AffineClamped { a: 0.5, b: 1.0, lo: 0.5, hi: 1.5 },
        ScalarFn::Constant(1.0),
        ScalarFn::Constant(0.1),
        ScalarField::constant(g, 0.0, 0.0),
        10.0,
    )?;
    model.check_padding(&datum, S3_HORIZON)?;
    Ok((datum, model))
}
