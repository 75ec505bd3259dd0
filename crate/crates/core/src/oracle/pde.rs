//! Finite-difference residual of the large-localization-length master
//! equation
//!
//! ```text
//! d rho/dt = (i hbar / 2m) (d2/dx1^2 - d2/dy1^2 + d2/dx2^2 - d2/dy2^2) rho
//!            - (D / hbar^2) [ sum_{i,j} (x_i - y_j)^2 - (x1 - x2)^2 - (y1 - y2)^2 ] rho
//! ```
//!
//! applied to a candidate solution `rho(x1, y1, x2, y2, t)` with the primed
//! coordinates held fixed. Time and space derivatives are central
//! differences; the collapse term is applied exactly.

use num_complex::Complex64;
use serde::Serialize;

use crate::analytic::{Kernel, PropagatorPoint};
use crate::error::{Error, Result};
use crate::params::CslParams;
use crate::units::HBAR;

/// Residuals below this are at the round-off floor and not expected to shrink.
pub const ROUNDOFF_FLOOR: f64 = 1e-10;

/// Halving ratio above which the differences are not in their asymptotic
/// regime (second order gives 0.25).
pub const MAX_HALVING_RATIO: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    /// Extent of the sampling grid around its centre, per coordinate (m).
    pub half_width: f64,
    /// Samples per grid axis; odd so the centre is on the grid.
    pub points_per_axis: usize,
    /// Finite-difference step in space (m).
    pub fd_step: f64,
    /// Finite-difference step in time (s).
    pub dt: f64,
}

impl GridSpec {
    pub fn new(half_width: f64, points_per_axis: usize, fd_step: f64, dt: f64) -> Result<Self> {
        if points_per_axis % 2 == 0 {
            return Err(Error::domain(
                "points_per_axis",
                points_per_axis as f64,
                "must be odd",
            ));
        }
        if !(half_width > 0.0) {
            return Err(Error::domain("half_width", half_width, "must be > 0"));
        }
        if !(fd_step > 0.0 && fd_step < half_width / 10.0) {
            return Err(Error::domain(
                "fd_step",
                fd_step,
                "must be in (0, half_width/10)",
            ));
        }
        if !(dt > 0.0) {
            return Err(Error::domain("dt", dt, "must be > 0"));
        }
        Ok(Self {
            half_width,
            points_per_axis,
            fd_step,
            dt,
        })
    }

    /// Both steps halved.
    pub fn refined(&self) -> Self {
        Self {
            fd_step: self.fd_step / 2.0,
            dt: self.dt / 2.0,
            ..*self
        }
    }

    /// Square grid over the `(x1, y1)` offsets around `center`; the other
    /// coordinates are taken from `center`.
    pub fn points_around(&self, center: &PropagatorPoint) -> Vec<PropagatorPoint> {
        let n = self.points_per_axis;
        let offset = |k: usize| {
            if n == 1 {
                0.0
            } else {
                -self.half_width + 2.0 * self.half_width * k as f64 / (n - 1) as f64
            }
        };
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut pt = *center;
                pt.x1 += offset(i);
                pt.y1 += offset(j);
                out.push(pt);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualReport {
    /// Largest relative residual at `(fd_step, dt)`.
    pub residual_coarse: f64,
    /// Largest relative residual at `(fd_step/2, dt/2)`.
    pub residual_fine: f64,
    /// `residual_fine / residual_coarse`; 0.25 for a second-order scheme.
    pub ratio: f64,
    /// Observed convergence order, `log2(coarse / fine)`.
    pub order: f64,
    pub points: usize,
}

/// Relative residual of one candidate solution at one point.
///
/// `eps` floors the normalising time derivative.
pub fn residual_at<F>(
    rho: &F,
    p: &CslParams,
    pt: &PropagatorPoint,
    fd_step: f64,
    dt: f64,
    eps: f64,
) -> Result<f64>
where
    F: Fn(&[f64; 8], f64) -> Result<Complex64>,
{
    let c = pt.coords();
    let t = pt.t;
    let center = rho(&c, t)?;
    let ddt = (rho(&c, t + dt)? - rho(&c, t - dt)?) / (2.0 * dt);

    let mut kinetic = Complex64::new(0.0, 0.0);
    // x1, y1, x2, y2 with signs +, -, +, -
    for (axis, sign) in [(0usize, 1.0), (1, -1.0), (2, 1.0), (3, -1.0)] {
        let mut up = c;
        let mut down = c;
        up[axis] += fd_step;
        down[axis] -= fd_step;
        let second = (rho(&up, t)? - center * 2.0 + rho(&down, t)?) / (fd_step * fd_step);
        kinetic += second * sign;
    }
    let kinetic = kinetic * Complex64::new(0.0, HBAR / (2.0 * p.mass()));

    let [x1, y1, x2, y2, ..] = c;
    let form = (x1 - y1).powi(2) + (x1 - y2).powi(2) + (x2 - y1).powi(2) + (x2 - y2).powi(2)
        - (x1 - x2).powi(2)
        - (y1 - y2).powi(2);
    let collapse = center * (-p.diffusion() / (HBAR * HBAR) * form);

    let residual = ddt - kinetic - collapse;
    Ok(residual.norm() / ddt.norm().max(eps))
}

/// Residual of `rho` over `points` at the grid's steps and at half the steps.
///
/// The normalisation floor is `1e-12 * median|rho| / t`.
pub fn pde_residual_with<F>(
    rho: F,
    p: &CslParams,
    points: &[PropagatorPoint],
    g: &GridSpec,
) -> Result<ResidualReport>
where
    F: Fn(&[f64; 8], f64) -> Result<Complex64>,
{
    if points.is_empty() {
        return Err(Error::InsufficientData("no residual sample points".into()));
    }
    for pt in points {
        if pt.t < 10.0 * g.dt {
            return Err(Error::domain(
                "t",
                pt.t,
                "must be >= 10 dt for the residual check",
            ));
        }
    }
    let mut mags = points
        .iter()
        .map(|pt| Ok(rho(&pt.coords(), pt.t)?.norm() / pt.t))
        .collect::<Result<Vec<f64>>>()?;
    mags.sort_by(f64::total_cmp);
    let eps = 1e-12 * mags[mags.len() / 2];

    let fine = g.refined();
    let mut coarse_max = 0.0f64;
    let mut fine_max = 0.0f64;
    for pt in points {
        coarse_max = coarse_max.max(residual_at(&rho, p, pt, g.fd_step, g.dt, eps)?);
        fine_max = fine_max.max(residual_at(&rho, p, pt, fine.fd_step, fine.dt, eps)?);
    }
    if fine_max > MAX_HALVING_RATIO * coarse_max && fine_max > ROUNDOFF_FLOOR {
        return Err(Error::OracleDivergence {
            check: "pde_residual",
            detail: format!(
                "halving the steps did not reduce the residual enough ({coarse_max:.3e} -> {fine_max:.3e}); grid too coarse"
            ),
        });
    }
    let ratio = fine_max / coarse_max;
    Ok(ResidualReport {
        residual_coarse: coarse_max,
        residual_fine: fine_max,
        ratio,
        order: -ratio.log2(),
        points: points.len(),
    })
}

/// Coordinates `(x1, y1, x2, y2, x1', y1', x2', y2')` of the default check
/// point: off-diagonal with a large collapse argument, so the collapse term
/// carries weight in the residual.
pub const REFERENCE_COORDS: [f64; 8] = [
    0.9e-7, -0.6e-7, 0.4e-7, -0.8e-7, 0.3e-7, -0.2e-7, -0.5e-7, 0.7e-7,
];

/// The closed-form propagator as a candidate solution, with its collapse
/// strength scaled by `diffusion_scale` (1 for the true kernel).
pub fn closed_form(
    p: &CslParams,
    diffusion_scale: f64,
) -> impl Fn(&[f64; 8], f64) -> Result<Complex64> {
    let mass = p.mass();
    let diffusion = p.diffusion() * diffusion_scale;
    move |c: &[f64; 8], t: f64| Ok(Kernel::from_raw(mass, diffusion, t)?.value(c))
}

/// Residual of the closed-form propagator at a single point.
pub fn pde_residual(p: &CslParams, pt: &PropagatorPoint, g: &GridSpec) -> Result<ResidualReport> {
    pde_residual_with(closed_form(p, 1.0), p, std::slice::from_ref(pt), g)
}
