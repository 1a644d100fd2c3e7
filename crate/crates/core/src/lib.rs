//! Level-set simulation of nonlocal front propagation, with numerical checks
//! of the a priori estimates such evolutions satisfy.
//!
//! Fronts are zero level sets of `u(., t)` solving `u_t = c |Du|` on a uniform
//! grid in one or two dimensions. The velocity `c` may depend on the occupied
//! region `{u >= 0}` through a convolution kernel (dislocation dynamics) or
//! through a heat equation whose source switches across the front.

pub mod datum;
pub mod distance;
pub mod eikonal;
pub mod error;
pub mod fpf1;
pub mod geometry;
pub mod green;
pub mod grid;
pub mod measure;
pub mod presets;
pub mod reach;
pub mod report;
pub mod velocity;
pub mod weak;

pub use datum::{build_truncated_sdf, InitialDatum};
pub use error::{Error, Result};
pub use grid::{Grid, PhaseIndicator, ScalarField};
pub use report::{EstimateReport, ReportRow};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/grids.md")]
    mod grids {}
    #[doc = include_str!("../../../book/src/eikonal.md")]
    mod eikonal {}
    #[doc = include_str!("../../../book/src/velocity.md")]
    mod velocity {}
    #[doc = include_str!("../../../book/src/weak.md")]
    mod weak {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/reachability.md")]
    mod reachability {}
    #[doc = include_str!("../../../book/src/green.md")]
    mod green {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
