//! Independent numerical checks of the closed-form results.
//!
//! * [`pde`]: finite-difference residual of the master equation applied to
//!   the closed-form propagator.
//! * [`propagate`]: the initial double-trap state pushed through the
//!   propagator by four-dimensional Gauss–Hermite quadrature.
//! * [`moments`]: second-moment equations integrated with RK4.

pub mod moments;
pub mod pde;
pub mod propagate;
pub mod report;

pub use moments::{moment_ode_evolve, MomentState};
pub use pde::{
    closed_form, pde_residual, pde_residual_with, residual_at, GridSpec, ResidualReport,
    REFERENCE_COORDS,
};
pub use propagate::{
    points_near_peaks, quadrature_propagate, quadrature_propagate_many, quadrature_propagate_with,
    InitialState, QuadratureEstimate, QuadratureOptions,
};
pub use report::OracleRecord;
