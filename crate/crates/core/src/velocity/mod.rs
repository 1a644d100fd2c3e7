//! Nonlocal velocity laws: dislocation convolution and FitzHugh-Nagumo
//! heat coupling.

pub mod conv;
pub mod dislocation;
pub mod heat;
pub mod scalar_fn;

pub use conv::{direct_convolution, Convolver};
pub use dislocation::{
    disk_kernel, dislocation_velocity, kernel_lipschitz, validate_h3, DislocationModel, DislocationVelocity,
    H3Constants,
};
pub use heat::{
    calibrate_k_n, fn_velocity, gaussian, heat_step, k_n, regularity_report, FnModel, FnVelocity, HeatSolver,
    HeatState, K_N,
};
pub use scalar_fn::ScalarFn;

use crate::error::{Error, Result};
use crate::grid::{superlevel_indicator, PhaseIndicator, ScalarField};
use std::borrow::Cow;

/// Fields sampled at increasing times, linearly interpolated in between and
/// held constant outside the sampled range.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    times: Vec<f64>,
    fields: Vec<ScalarField>,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, fields: Vec<ScalarField>) -> Result<Self> {
        if times.is_empty() || times.len() != fields.len() {
            return Err(Error::InvalidArgument("one field per time required".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::UnorderedFrames);
        }
        let g = *fields[0].grid();
        for f in &fields[1..] {
            g.check_same(f.grid())?;
        }
        Ok(TimeSeries { times, fields })
    }

    pub fn constant(field: ScalarField) -> Self {
        TimeSeries { times: vec![field.time()], fields: vec![field] }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn fields(&self) -> &[ScalarField] {
        &self.fields
    }

    /// `(i, j, w)` with the value at `t` equal to `(1 - w) f_i + w f_j`.
    pub fn bracket(&self, t: f64) -> (usize, usize, f64) {
        let n = self.times.len();
        if n == 1 || t <= self.times[0] {
            return (0, 0, 0.0);
        }
        if t >= self.times[n - 1] {
            return (n - 1, n - 1, 0.0);
        }
        let j = self.times.partition_point(|&s| s <= t);
        let i = j - 1;
        (i, j, (t - self.times[i]) / (self.times[j] - self.times[i]))
    }

    pub fn at(&self, t: f64) -> ScalarField {
        let (i, j, w) = self.bracket(t);
        if w == 0.0 {
            return self.fields[i].clone().with_time(t);
        }
        let (a, b) = (self.fields[i].values(), self.fields[j].values());
        let v = a.iter().zip(b).map(|(x, y)| x + w * (y - x)).collect();
        ScalarField::from_raw(*self.fields[i].grid(), v, t)
    }
}

/// Where a velocity provider takes its phase indicator from.
#[derive(Debug, Clone)]
pub enum PhaseSource {
    /// `1_{u >= 0}` of the solution being advanced (the coupled problem).
    Own,
    /// A prescribed space-time indicator (one Picard sweep).
    Given(PhaseIndicator),
}

impl PhaseSource {
    pub fn frame<'a>(&'a self, t: f64, u: &ScalarField) -> Cow<'a, [f64]> {
        match self {
            PhaseSource::Own => Cow::Owned(superlevel_indicator(u)),
            PhaseSource::Given(chi) => Cow::Borrowed(chi.frame_at(t)),
        }
    }
}
