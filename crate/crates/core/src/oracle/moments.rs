//! Second-moment equations of the two-particle Gaussian state.
//!
//! In `X = (x1 + x2)/2` and `eta = (x1 - x2)/2` with conjugate momenta
//! `P_X = p1 + p2` and `P_eta = p1 - p2` the free Hamiltonian is
//! `(P_X^2 + P_eta^2) / 4m`, so both sectors move with mass `2m`. The collapse
//! term depends on `x1 + x2 - y1 - y2` only; it diffuses `P_X` at rate `8D`
//! and leaves `P_eta` untouched. Each sector then obeys
//!
//! ```text
//! d var_q / dt = cov / m
//! d cov   / dt = var_p / 2m
//! d var_p / dt = rate
//! ```
//!
//! with `cov` the symmetrised position-momentum moment.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{CslParams, ExperimentSetup};
use crate::units::HBAR;

/// Largest relative change tolerated between a run and its half-step rerun.
pub const STEP_HALVING_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentState {
    /// Variance of `X` (m²).
    pub var_x: f64,
    /// Variance of `xi/2` (m²).
    pub var_rel: f64,
    /// Symmetrised `<X P_X>` (m·kg·m/s).
    pub cov_x_p: f64,
    /// Symmetrised `<(xi/2) P_eta>`.
    pub cov_rel_p: f64,
    /// Variance of `P_X` ((kg·m/s)²).
    pub var_p_x: f64,
    /// Variance of `P_eta`.
    pub var_p_rel: f64,
}

impl MomentState {
    /// Moments of the trapped ground states: each particle has position
    /// variance `sigma^2` and momentum variance `hbar^2 / 4 sigma^2`.
    pub fn initial(sigma: f64) -> Self {
        let var_q = sigma * sigma / 2.0;
        let var_p = HBAR * HBAR / (2.0 * sigma * sigma);
        Self {
            var_x: var_q,
            var_rel: var_q,
            cov_x_p: 0.0,
            cov_rel_p: 0.0,
            var_p_x: var_p,
            var_p_rel: var_p,
        }
    }

    /// Both 2x2 sector covariance matrices are positive semidefinite.
    pub fn is_physical(&self) -> bool {
        let psd = |v: f64, c: f64, p: f64| v >= 0.0 && p >= 0.0 && v * p - c * c >= -1e-12 * v * p;
        psd(self.var_x, self.cov_x_p, self.var_p_x)
            && psd(self.var_rel, self.cov_rel_p, self.var_p_rel)
    }

    fn to_array(self) -> [f64; 6] {
        [
            self.var_x,
            self.cov_x_p,
            self.var_p_x,
            self.var_rel,
            self.cov_rel_p,
            self.var_p_rel,
        ]
    }

    fn from_array(a: [f64; 6]) -> Self {
        Self {
            var_x: a[0],
            cov_x_p: a[1],
            var_p_x: a[2],
            var_rel: a[3],
            cov_rel_p: a[4],
            var_p_rel: a[5],
        }
    }
}

fn derivative(y: &[f64; 6], mass: f64, diffusion: f64) -> [f64; 6] {
    let m2 = 2.0 * mass;
    [
        2.0 * y[1] / m2,
        y[2] / m2,
        8.0 * diffusion,
        2.0 * y[4] / m2,
        y[5] / m2,
        0.0,
    ]
}

fn rk4(mut y: [f64; 6], mass: f64, diffusion: f64, t_final: f64, steps: u64) -> [f64; 6] {
    let h = t_final / steps as f64;
    let axpy =
        |y: &[f64; 6], k: &[f64; 6], s: f64| std::array::from_fn::<f64, 6, _>(|i| y[i] + s * k[i]);
    for _ in 0..steps {
        let k1 = derivative(&y, mass, diffusion);
        let k2 = derivative(&axpy(&y, &k1, h / 2.0), mass, diffusion);
        let k3 = derivative(&axpy(&y, &k2, h / 2.0), mass, diffusion);
        let k4 = derivative(&axpy(&y, &k3, h), mass, diffusion);
        for i in 0..6 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y
}

/// Integrates the moment equations from the initial state to `t_final` with
/// classical RK4 at step `dt`, then repeats at `dt/2` as a tolerance check.
pub fn moment_ode_evolve(
    setup: &ExperimentSetup,
    p: &CslParams,
    t_final: f64,
    dt: f64,
) -> Result<MomentState> {
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::domain(
            "t_final",
            t_final,
            "must be finite and non-negative",
        ));
    }
    if !(setup.sigma > 0.0) {
        return Err(Error::domain("sigma", setup.sigma, "must be positive"));
    }
    let start = MomentState::initial(setup.sigma);
    if t_final == 0.0 {
        return Ok(start);
    }
    if !(dt > 0.0 && dt <= t_final / 1000.0) {
        return Err(Error::domain(
            "dt",
            dt,
            "must be positive and at most t_final/1000",
        ));
    }
    let steps = (t_final / dt).ceil() as u64;
    let coarse = rk4(start.to_array(), p.mass(), p.diffusion(), t_final, steps);
    let fine = rk4(
        start.to_array(),
        p.mass(),
        p.diffusion(),
        t_final,
        2 * steps,
    );
    for (i, (a, b)) in coarse.iter().zip(&fine).enumerate() {
        let scale = b.abs().max(f64::MIN_POSITIVE);
        let change = (a - b).abs() / scale;
        // Covariances start at zero; measure them against their sector's scale.
        let change = if i == 1 || i == 4 {
            (a - b).abs() / (fine[i - 1] * fine[i + 1]).sqrt().max(scale)
        } else {
            change
        };
        if change > STEP_HALVING_TOLERANCE {
            return Err(Error::OracleDivergence {
                check: "moment_ode_evolve",
                detail: format!("step halving changed moment {i} by {change:.3e}"),
            });
        }
    }
    let out = MomentState::from_array(fine);
    if !out.is_physical() {
        return Err(Error::OracleDivergence {
            check: "moment_ode_evolve",
            detail: "moment matrix lost positive semidefiniteness".into(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::variance_terms;
    use crate::units::{AMU, NM};
    use proptest::prelude::*;

    fn desk(la: f64) -> (ExperimentSetup, CslParams) {
        (
            ExperimentSetup::default(),
            CslParams::from_lambda_alpha(la, 1e4, 1e9 * AMU).unwrap(),
        )
    }

    #[test]
    fn reproduces_closed_form_spreads() {
        let (setup, p) = desk(1.0);
        let m = moment_ode_evolve(&setup, &p, 0.25, 0.25 / 1000.0).unwrap();
        let v = variance_terms(&setup, &p);
        assert!(
            (m.var_x / v.var_x() - 1.0).abs() < 1e-8,
            "{} {}",
            m.var_x,
            v.var_x()
        );
        assert!((m.var_rel / v.var_rel() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn relative_sector_ignores_collapse() {
        let (setup, p) = desk(1.0);
        let a = moment_ode_evolve(&setup, &p, 0.25, 1e-4).unwrap();
        let b = moment_ode_evolve(&setup, &p.without_collapse(), 0.25, 1e-4).unwrap();
        assert!((a.var_rel / b.var_rel - 1.0).abs() < 1e-12);
        assert!(a.var_x > b.var_x);
    }

    #[test]
    fn zero_time_is_initial_state() {
        let (setup, p) = desk(1.0);
        let m = moment_ode_evolve(&setup, &p, 0.0, 0.0).unwrap();
        let s2 = setup.sigma * setup.sigma / 2.0;
        assert_eq!(m.var_x, s2);
        assert_eq!(m.var_rel, s2);
    }

    #[test]
    fn coarse_step_rejected() {
        let (setup, p) = desk(1.0);
        let err = moment_ode_evolve(&setup, &p, 0.25, 0.25 / 999.0).unwrap_err();
        assert_eq!(err.category(), "parameter-domain");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn matches_closed_form_across_setups(
            sigma_nm in 1.0f64..100.0,
            t in 0.01f64..1.0,
            log_la in -2.0f64..4.0,
            log_m in 6.0f64..11.0,
        ) {
            let setup = ExperimentSetup { sigma: sigma_nm * NM, t_flight: t, ..ExperimentSetup::default() };
            let p = CslParams::from_lambda_alpha(10f64.powf(log_la), 1e4, 10f64.powf(log_m) * AMU).unwrap();
            let m = moment_ode_evolve(&setup, &p, t, t / 1000.0).unwrap();
            let v = variance_terms(&setup, &p);
            prop_assert!((m.var_x / v.var_x() - 1.0).abs() < 1e-8);
            prop_assert!((m.var_rel / v.var_rel() - 1.0).abs() < 1e-8);
            prop_assert!(m.is_physical());
        }
    }
}
