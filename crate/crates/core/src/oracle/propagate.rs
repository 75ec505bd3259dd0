//! Diagonal of the propagated density matrix by 4-D Gauss–Hermite quadrature.
//!
//! The initial state is the symmetrised double-trap product of Gaussians. Its
//! density matrix `psi(x1', x2') psi(y1', y2')` splits into four Gaussian
//! terms, one per (ket peak, bra peak) pair, and each term is integrated
//! against the closed-form propagator on its own node set.
//!
//! Nodes are placed on a deformed contour. Per particle write
//! `x' = r + q/2`, `y' = r - q/2`; on the diagonal the free phase is
//! `2 i a q (r - x)` with `a = m / (2 hbar t)`. Shifting `r` by `2 i a sigma^2 q`
//! and `q` by its complex stationary point turns the free-flight and
//! initial-state factors into a unit Gaussian in the node variables, so the
//! rule only has to resolve the collapse damping and the inter-particle
//! coupling. The integrand is entire and decays on every intermediate
//! contour, so the deformation leaves the integral unchanged.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{cm_rel_inverse, Kernel};
use crate::error::{Error, Result};
use crate::params::{CslParams, ExperimentSetup};
use crate::quadrature::GaussHermite;

/// The symmetrised two-trap initial wavefunction
/// `psi = g(x1 - mu) g(x2 + mu) + g(x1 + mu) g(x2 - mu)`, normalised with
/// `1/sqrt(4 pi sigma^2)` per product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InitialState {
    pub sigma: f64,
    pub mu: f64,
}

impl InitialState {
    pub fn from_setup(setup: &ExperimentSetup) -> Self {
        Self {
            sigma: setup.sigma,
            mu: setup.mu,
        }
    }

    /// Trap centres `(particle 1, particle 2)` of the two product terms.
    pub fn centers(&self) -> [(f64, f64); 2] {
        [(self.mu, -self.mu), (-self.mu, self.mu)]
    }

    /// `ln` of one product term, analytically continued.
    pub fn log_component(&self, centers: (f64, f64), x1: Complex64, x2: Complex64) -> Complex64 {
        let s2 = self.sigma * self.sigma;
        let d1 = x1 - centers.0;
        let d2 = x2 - centers.1;
        -(d1 * d1 + d2 * d2) / (4.0 * s2) - 0.5 * (4.0 * PI * s2).ln()
    }

    pub fn psi(&self, x1: f64, x2: f64) -> f64 {
        let z1 = Complex64::new(x1, 0.0);
        let z2 = Complex64::new(x2, 0.0);
        self.centers()
            .iter()
            .map(|&c| self.log_component(c, z1, z2).re.exp())
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureOptions {
    /// Nodes per axis.
    pub order: usize,
    /// Refinement never goes beyond this many nodes per axis.
    pub max_order: usize,
    /// Largest relative change accepted between successive orders.
    pub tolerance: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            order: 40,
            max_order: 80,
            tolerance: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureEstimate {
    /// Diagonal density at `(X, xi)` in m⁻².
    pub density: f64,
    /// Imaginary part left by the quadrature; zero for an exact rule.
    pub imaginary: f64,
    /// Order of the accepted rule.
    pub order: usize,
    /// Relative change against the previous order.
    pub change: f64,
}

/// Per-particle node: primed coordinates and the log weight contributed.
#[derive(Clone, Copy)]
struct ParticleNode {
    ket: Complex64,
    bra: Complex64,
    log_weight: f64,
    weight: f64,
}

fn particle_nodes(
    rule: &GaussHermite,
    sigma: f64,
    a: f64,
    beta: f64,
    ket_center: f64,
    bra_center: f64,
    x: f64,
) -> Vec<ParticleNode> {
    let mid = 0.5 * (ket_center + bra_center);
    let gap = ket_center - bra_center;
    let q0 = Complex64::new(gap / (8.0 * sigma * sigma), a * (mid - x)) / beta;
    let q_scale = 1.0 / beta.sqrt();
    let mut out = Vec::with_capacity(rule.order() * rule.order());
    for (u, wu) in rule.iter() {
        for (w, ww) in rule.iter() {
            let q = q0 + w * q_scale;
            let r = Complex64::new(mid, 0.0)
                + Complex64::new(0.0, 2.0 * a * sigma * sigma) * q
                + SQRT_2 * sigma * u;
            out.push(ParticleNode {
                ket: r + q / 2.0,
                bra: r - q / 2.0,
                log_weight: u * u + w * w,
                weight: wu * ww,
            });
        }
    }
    out
}

fn integrate(
    kernel: &Kernel,
    state: &InitialState,
    x1: f64,
    x2: f64,
    order: usize,
) -> Result<Complex64> {
    let rule = GaussHermite::cached(order)?;
    let sigma = state.sigma;
    let a = kernel.phase_coeff();
    let beta = 2.0 * a * a * sigma * sigma + 1.0 / (8.0 * sigma * sigma);
    let jacobian = (SQRT_2 * sigma / beta.sqrt()).powi(2);
    let xr1 = Complex64::new(x1, 0.0);
    let xr2 = Complex64::new(x2, 0.0);

    let term = |ket: (f64, f64), bra: (f64, f64)| {
        let p1 = particle_nodes(&rule, sigma, a, beta, ket.0, bra.0, x1);
        let p2 = particle_nodes(&rule, sigma, a, beta, ket.1, bra.1, x2);
        let mut sum = Complex64::new(0.0, 0.0);
        for n1 in &p1 {
            let mut row = Complex64::new(0.0, 0.0);
            for n2 in &p2 {
                let coords = [xr1, xr1, xr2, xr2, n1.ket, n1.bra, n2.ket, n2.bra];
                let log = kernel.log_value_complex(&coords)
                    + state.log_component(ket, n1.ket, n2.ket)
                    + state.log_component(bra, n1.bra, n2.bra)
                    + (n1.log_weight + n2.log_weight);
                row += log.exp() * n2.weight;
            }
            sum += row * n1.weight;
        }
        sum
    };
    // Swapping ket and bra peaks conjugates a term on the diagonal, so the
    // two cross terms add up to twice the real part of one.
    let [c_plus, c_minus] = state.centers();
    let cross = term(c_plus, c_minus);
    let total = term(c_plus, c_plus) + term(c_minus, c_minus) + 2.0 * cross.re;
    Ok(total * jacobian)
}

/// Quadrature estimate of the joint density at `(X, xi)` with explicit options.
pub fn quadrature_propagate_with(
    setup: &ExperimentSetup,
    p: &CslParams,
    x: f64,
    xi: f64,
    opts: &QuadratureOptions,
) -> Result<QuadratureEstimate> {
    let setup = setup.validated()?;
    if opts.order < 2 || opts.order > opts.max_order {
        return Err(Error::domain(
            "order",
            opts.order as f64,
            "must be in 2..=max_order",
        ));
    }
    let kernel = Kernel::new(p, setup.t_flight)?;
    let state = InitialState::from_setup(&setup);
    let (x1, x2) = cm_rel_inverse(x, xi);
    // Absolute floor so that points deep in the tails do not demand relative
    // accuracy on a vanishing density.
    let floor = 1e-12 / (4.0 * PI * setup.sigma * setup.sigma);

    let change = |a: Complex64, b: Complex64| (a.re - b.re).abs() / a.re.abs().max(floor);

    let mut order = opts.order;
    let mut current = integrate(&kernel, &state, x1, x2, order)?;
    let mut delta = change(current, integrate(&kernel, &state, x1, x2, order / 2)?);
    while delta > opts.tolerance {
        if 2 * order > opts.max_order {
            return Err(Error::OracleDivergence {
                check: "quadrature_propagate",
                detail: format!(
                    "relative change {delta:.3e} at {order} nodes per axis exceeds {:.1e}",
                    opts.tolerance
                ),
            });
        }
        let refined = integrate(&kernel, &state, x1, x2, 2 * order)?;
        delta = change(refined, current);
        current = refined;
        order *= 2;
    }
    Ok(QuadratureEstimate {
        density: current.re,
        imaginary: current.im,
        order,
        change: delta,
    })
}

/// Quadrature estimate of the joint density at `(X, xi)`, 40 nodes per axis.
pub fn quadrature_propagate(
    setup: &ExperimentSetup,
    p: &CslParams,
    x: f64,
    xi: f64,
) -> Result<f64> {
    Ok(quadrature_propagate_with(setup, p, x, xi, &QuadratureOptions::default())?.density)
}

/// Evaluates many points in parallel; results are in input order.
pub fn quadrature_propagate_many(
    setup: &ExperimentSetup,
    p: &CslParams,
    points: &[(f64, f64)],
    opts: &QuadratureOptions,
) -> Result<Vec<QuadratureEstimate>> {
    points
        .par_iter()
        .map(|&(x, xi)| quadrature_propagate_with(setup, p, x, xi, opts))
        .collect()
}

/// Deterministic sample points within three spreads of each peak, as
/// `(X, xi)` pairs. Uses a 2-3 Halton pattern mapped to `[-3, 3]^2`.
pub fn points_near_peaks(
    mu: f64,
    sigma_x: f64,
    sigma_rel: f64,
    per_peak: usize,
) -> Vec<(f64, f64)> {
    fn halton(mut i: usize, base: usize) -> f64 {
        let mut f = 1.0;
        let mut r = 0.0;
        while i > 0 {
            f /= base as f64;
            r += f * (i % base) as f64;
            i /= base;
        }
        r
    }
    let mut out = Vec::with_capacity(2 * per_peak);
    for center in [mu, -mu] {
        for k in 0..per_peak {
            let sx = 6.0 * halton(k + 1, 2) - 3.0;
            let sr = 6.0 * halton(k + 1, 3) - 3.0;
            out.push((sx * sigma_x, 2.0 * (center + sr * sigma_rel)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{joint_distribution, pdf};
    use crate::units::{AMU, NM};

    fn desk(la: f64) -> (ExperimentSetup, CslParams) {
        let setup = ExperimentSetup::new(10.0 * NM, 100.0 * NM, 0.25, 10.0 * NM, 100).unwrap();
        (
            setup,
            CslParams::from_lambda_alpha(la, 1e4, 1e9 * AMU).unwrap(),
        )
    }

    #[test]
    fn initial_state_is_normalized() {
        let s = InitialState {
            sigma: 1.0,
            mu: 7.0,
        };
        // Trapezoid on a wide square; psi is real so |psi|^2 = psi^2.
        let h = 0.05;
        let mut total = 0.0;
        for i in -400..=400 {
            for j in -400..=400 {
                let v = s.psi(i as f64 * h, j as f64 * h);
                total += v * v;
            }
        }
        assert!((total * h * h - 1.0).abs() < 1e-9, "{}", total * h * h);
    }

    #[test]
    fn free_flight_matches_closed_form() {
        let (setup, p) = desk(0.0);
        let jd = joint_distribution(&setup, &p).unwrap();
        let opts = QuadratureOptions {
            order: 16,
            ..Default::default()
        };
        for (x, xi) in points_near_peaks(jd.mu(), jd.sigma_x(), jd.sigma_rel(), 3) {
            let q = quadrature_propagate_with(&setup, &p, x, xi, &opts).unwrap();
            let a = pdf(&jd, x, xi);
            assert!((q.density / a - 1.0).abs() < 1e-6, "{q:?} vs {a}");
        }
    }

    #[test]
    fn collapse_run_matches_closed_form() {
        let (setup, p) = desk(1.0);
        let jd = joint_distribution(&setup, &p).unwrap();
        let opts = QuadratureOptions {
            order: 16,
            ..Default::default()
        };
        for (x, xi) in points_near_peaks(jd.mu(), jd.sigma_x(), jd.sigma_rel(), 3) {
            let q = quadrature_propagate_with(&setup, &p, x, xi, &opts).unwrap();
            let a = pdf(&jd, x, xi);
            assert!((q.density / a - 1.0).abs() < 1e-5, "{q:?} vs {a}");
        }
    }

    #[test]
    fn density_between_distant_peaks_vanishes() {
        let setup = ExperimentSetup::new(10.0 * NM, 200.0 * NM, 0.25, 0.0, 10).unwrap();
        let p = CslParams::from_lambda_alpha(1.0, 1e4, 1e9 * AMU).unwrap();
        let jd = joint_distribution(&setup, &p).unwrap();
        let opts = QuadratureOptions {
            order: 16,
            ..Default::default()
        };
        let q = quadrature_propagate_with(&setup, &p, 0.0, 0.0, &opts).unwrap();
        assert!(q.density.abs() < 1e-12 * jd.peak_height(), "{q:?}");
    }

    #[test]
    fn unresolvable_damping_reports_divergence() {
        // Collapse damping far narrower than the node spacing.
        let (setup, _) = desk(0.0);
        let p = CslParams::from_lambda_alpha(1e6, 1e4, 1e9 * AMU).unwrap();
        let opts = QuadratureOptions {
            order: 8,
            max_order: 16,
            tolerance: 1e-4,
        };
        let err = quadrature_propagate_with(&setup, &p, 0.0, 2.0 * setup.mu, &opts).unwrap_err();
        assert_eq!(err.category(), "oracle-divergence");
    }
}
