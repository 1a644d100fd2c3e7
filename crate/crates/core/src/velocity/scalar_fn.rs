//! Scalar nonlinearities `R -> R` with declared bounds and Lipschitz constant.

use crate::error::{Error, Result};
use std::fmt;
use std::sync::Arc;

/// Number of points used to spot-check declared constants.
pub const SPOT_CHECK_POINTS: usize = 10_000;

#[derive(Clone)]
pub enum ScalarFn {
    Constant(f64),
    /// `clamp(a + b r, lo, hi)`.
    AffineClamped { a: f64, b: f64, lo: f64, hi: f64 },
    /// User callback with declared constants (trusted, spot-checked).
    Custom { f: Arc<dyn Fn(f64) -> f64 + Send + Sync>, lower: f64, upper: f64, lipschitz: f64 },
}

impl fmt::Debug for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarFn::Constant(c) => write!(f, "constant({c})"),
            ScalarFn::AffineClamped { a, b, lo, hi } => write!(f, "affine_clamped({a}, {b}, {lo}, {hi})"),
            ScalarFn::Custom { lower, upper, lipschitz, .. } => {
                write!(f, "custom(range [{lower}, {upper}], lipschitz {lipschitz})")
            }
        }
    }
}

impl ScalarFn {
    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static, lower: f64, upper: f64, lipschitz: f64) -> Self {
        ScalarFn::Custom { f: Arc::new(f), lower, upper, lipschitz }
    }

    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            ScalarFn::Constant(c) => *c,
            ScalarFn::AffineClamped { a, b, lo, hi } => (a + b * r).clamp(*lo, *hi),
            ScalarFn::Custom { f, .. } => f(r),
        }
    }

    /// Declared (for built-ins: exact) lower bound over all of `R`.
    pub fn lower(&self) -> f64 {
        match self {
            ScalarFn::Constant(c) => *c,
            ScalarFn::AffineClamped { b, lo, hi, a } => if *b == 0.0 { a.clamp(*lo, *hi) } else { *lo },
            ScalarFn::Custom { lower, .. } => *lower,
        }
    }

    pub fn upper(&self) -> f64 {
        match self {
            ScalarFn::Constant(c) => *c,
            ScalarFn::AffineClamped { b, lo, hi, a } => if *b == 0.0 { a.clamp(*lo, *hi) } else { *hi },
            ScalarFn::Custom { upper, .. } => *upper,
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match self {
            ScalarFn::Constant(_) => 0.0,
            ScalarFn::AffineClamped { b, .. } => b.abs(),
            ScalarFn::Custom { lipschitz, .. } => *lipschitz,
        }
    }

    /// Checks the declared constants on an even lattice of
    /// [`SPOT_CHECK_POINTS`] points covering `[-range, range]`.
    pub fn spot_check(&self, range: f64) -> Result<()> {
        if let ScalarFn::AffineClamped { lo, hi, .. } = self {
            if lo > hi {
                return Err(Error::BadScalarFn(format!("{self:?}: lo > hi")));
            }
        }
        let n = SPOT_CHECK_POINTS;
        let step = 2.0 * range / (n - 1) as f64;
        let (lo, hi, lip) = (self.lower(), self.upper(), self.lipschitz());
        let tol = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
        let mut prev: Option<(f64, f64)> = None;
        for k in 0..n {
            let r = -range + k as f64 * step;
            let v = self.eval(r);
            if !v.is_finite() || v < lo - tol || v > hi + tol {
                return Err(Error::BadScalarFn(format!("{self:?}: value {v} at {r} outside [{lo}, {hi}]")));
            }
            if let Some((pr, pv)) = prev {
                let slope = (v - pv).abs() / (r - pr);
                if slope > lip * (1.0 + 1e-9) + 1e-9 {
                    return Err(Error::BadScalarFn(format!(
                        "{self:?}: slope {slope} near {r} exceeds declared {lip}"
                    )));
                }
            }
            prev = Some((r, v));
        }
        Ok(())
    }
}
