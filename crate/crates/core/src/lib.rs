//! Correlated collapse-induced random walks of two free particles.
//!
//! Two equal-mass particles released from adjacent traps and left in free
//! fall share the collapse noise when their separation is well below the
//! localization length. The noise then inflates the spread of their centre
//! of mass but not of their separation. This crate provides:
//!
//! * [`analytic`]: the closed-form density-matrix propagator and the
//!   resulting two-peak distribution of measured positions;
//! * [`oracle`]: independent numerical checks of those closed forms;
//! * [`montecarlo`]: a simulated drop-and-measure experiment with
//!   deterministic parallel sampling;
//! * [`feasibility`]: environmental bounds and parameter-space scans.
//!
//! All quantities are SI internally; [`units`] converts at the boundary.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod error;
pub mod feasibility;
pub mod montecarlo;
pub mod oracle;
pub mod paramfile;
pub mod params;
pub mod quadrature;
pub mod units;

pub use error::{Error, Result};
pub use params::{
    lambda_alpha_product, make_csl_params, CslParams, ExperimentSetup, LocalizationRegime,
};
