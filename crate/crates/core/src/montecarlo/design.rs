//! Sample-size requirements and detection power.

use serde::Serialize;

use super::estimate::run_experiments;
use crate::analytic::{sigma2_csl, variance_terms};
use crate::error::{Error, Result};
use crate::params::{CslParams, ExperimentSetup};

/// Default detection threshold in null estimator standard deviations.
pub const DEFAULT_THRESHOLD_SIGMAS: f64 = 5.0;

/// Keystream offset separating null runs from collapse runs.
const NULL_STREAM_BASE: u64 = 1 << 32;

/// `2 (sigma_X^2 + sigma_err^2/2)^2 / (n - 1)`: variance of the unbiased
/// estimator `s2_X` for Gaussian samples.
pub fn var_of_s2x(setup: &ExperimentSetup, p: &CslParams) -> Result<f64> {
    let setup = setup.validated()?;
    let v = variance_terms(&setup, p).var_x() + setup.sigma_err * setup.sigma_err / 2.0;
    Ok(2.0 * v * v / (setup.n_samples - 1) as f64)
}

/// Rounding error budget of the sample-count formulas, in ulps.
const NEAR_INTEGER_ULPS: f64 = 16.0;

fn ceil_near_integer(x: f64) -> u64 {
    let r = x.round();
    if (x - r).abs() <= NEAR_INTEGER_ULPS * f64::EPSILON * x.abs() {
        r as u64
    } else {
        x.ceil() as u64
    }
}

/// `ceil(2 (100/(lambda alpha) + 10)^2 + 1)`, valid for the design setup only.
///
/// Values within a few ulps of an integer are rounded rather than ceiled so
/// that products like `1e-16 * 1e14` land on the intended integer.
pub fn required_samples(lambda_alpha: f64) -> Result<u64> {
    if !(lambda_alpha > 0.0 && lambda_alpha.is_finite()) {
        return Err(Error::domain(
            "lambda_alpha",
            lambda_alpha,
            "must be finite and > 0",
        ));
    }
    let a = 100.0 / lambda_alpha + 10.0;
    Ok(ceil_near_integer(2.0 * a * a + 1.0))
}

/// Smallest `n` with `sqrt(Var[s2_X]) <= sigma2_CSL / 10` for the given setup.
pub fn required_samples_exact(setup: &ExperimentSetup, p: &CslParams) -> Result<u64> {
    let signal = sigma2_csl(setup, p);
    if !(signal > 0.0) {
        return Err(Error::domain(
            "lambda",
            p.lambda(),
            "collapse signal vanishes; no finite n",
        ));
    }
    let v = variance_terms(setup, p).var_x() + setup.sigma_err * setup.sigma_err / 2.0;
    let r = v / signal;
    Ok(ceil_near_integer(1.0 + 200.0 * r * r))
}

/// Detection threshold on `s2_diff`: `k` standard deviations of the
/// difference under the no-collapse null, where both estimators carry
/// independent variance `2 (sigma_rel^2 + sigma_err^2/2)^2 / (n - 1)`.
pub fn detection_threshold(setup: &ExperimentSetup, p: &CslParams, sigmas: f64) -> Result<f64> {
    let null_var = var_of_s2x(setup, &p.without_collapse())?;
    Ok(sigmas * (2.0 * null_var).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectionPower {
    /// Fraction of collapse runs exceeding the threshold.
    pub power: f64,
    /// Fraction of no-collapse runs exceeding the threshold.
    pub false_positive_rate: f64,
    /// Threshold on `s2_diff` (m²).
    pub threshold: f64,
    pub repetitions: usize,
    pub n: u64,
}

/// Simulates `repetitions` experiments with and without collapse at
/// `setup.n_samples` trials and reports the exceedance fractions.
pub fn detection_power(
    setup: &ExperimentSetup,
    p: &CslParams,
    repetitions: usize,
    seed: u64,
    sigmas: f64,
) -> Result<DetectionPower> {
    if repetitions < 1 {
        return Err(Error::InsufficientData(
            "at least one repetition is required".into(),
        ));
    }
    if !(sigmas >= 0.0 && sigmas.is_finite()) {
        return Err(Error::domain(
            "threshold_sigmas",
            sigmas,
            "must be finite and >= 0",
        ));
    }
    let setup = setup.validated()?;
    let threshold = detection_threshold(&setup, p, sigmas)?;
    let fraction = |runs: Vec<super::VarianceEstimate>| {
        runs.iter().filter(|e| e.s2_diff > threshold).count() as f64 / runs.len() as f64
    };
    let power = fraction(run_experiments(&setup, p, seed, 0, repetitions)?);
    let false_positive_rate = fraction(run_experiments(
        &setup,
        &p.without_collapse(),
        seed,
        NULL_STREAM_BASE,
        repetitions,
    )?);
    Ok(DetectionPower {
        power,
        false_positive_rate,
        threshold,
        repetitions,
        n: setup.n_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::AMU;
    use proptest::prelude::*;

    fn desk(la: f64) -> CslParams {
        CslParams::from_lambda_alpha(la, 1e4, 1e9 * AMU).unwrap()
    }

    // 40-digit evaluation with the pinned constants at the design point.
    const VAR_S2X_DESK: f64 = 1.014_934_025_9e-36;

    #[test]
    fn estimator_variance_at_design_point() {
        let v = var_of_s2x(&ExperimentSetup::default(), &desk(1.0)).unwrap();
        assert!((v / VAR_S2X_DESK - 1.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn estimator_variance_reductions() {
        let setup = ExperimentSetup {
            sigma_err: 0.0,
            t_flight: 1e-9,
            ..ExperimentSetup::default()
        };
        let v = var_of_s2x(&setup, &desk(0.0)).unwrap();
        let s2 = setup.sigma * setup.sigma / 2.0;
        let expected = 2.0 * s2 * s2 / (setup.n_samples - 1) as f64;
        assert!((v / expected - 1.0).abs() < 1e-12);
        let big = var_of_s2x(&setup.with_samples(u64::MAX).unwrap(), &desk(1.0)).unwrap();
        assert!(big < 1e-50);
    }

    #[test]
    fn formula_sample_counts() {
        assert_eq!(required_samples(1.0).unwrap(), 24_201);
        assert_eq!(required_samples(1e-2).unwrap(), 200_400_201);
        assert_eq!(required_samples(1e-16 * 1e14).unwrap(), 200_400_201);
        assert_eq!(required_samples(1e300).unwrap(), 201);
        for bad in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert_eq!(
                required_samples(bad).unwrap_err().category(),
                "parameter-domain"
            );
        }
    }

    #[test]
    fn exact_sample_count_at_design_point() {
        // 1 + 200 ((sigma_X^2 + sigma_err^2/2) / sigma2_CSL)^2 = 22265.21...
        assert_eq!(
            required_samples_exact(&ExperimentSetup::default(), &desk(1.0)).unwrap(),
            22_266
        );
        assert!(required_samples_exact(&ExperimentSetup::default(), &desk(0.0)).is_err());
    }

    #[test]
    fn design_point_resolves_collapse() {
        let setup = ExperimentSetup::default();
        let p = desk(1.0);
        let sd = var_of_s2x(&setup, &p).unwrap().sqrt();
        // The formula count is the paper's rounded design point; within 5%.
        assert!((sd / (sigma2_csl(&setup, &p) / 10.0) - 1.0).abs() < 0.05);
    }

    #[test]
    fn too_few_samples_have_no_power() {
        let setup = ExperimentSetup::default().with_samples(100).unwrap();
        let d = detection_power(&setup, &desk(1.0), 200, 42, DEFAULT_THRESHOLD_SIGMAS).unwrap();
        assert!(d.power < 0.5, "{d:?}");
    }

    proptest! {
        #[test]
        fn formula_count_strictly_decreasing(log_la in -2.0f64..2.0, step in 0.01f64..0.5) {
            let a = 10f64.powf(log_la);
            let b = 10f64.powf(log_la + step);
            prop_assert!(required_samples(b).unwrap() < required_samples(a).unwrap());
        }

        #[test]
        fn exact_count_within_rounding_of_formula(log_la in -2.0f64..2.0) {
            let la = 10f64.powf(log_la);
            let exact = required_samples_exact(&ExperimentSetup::default(), &desk(la)).unwrap();
            prop_assert!(exact as f64 <= 1.15 * required_samples(la).unwrap() as f64);
        }
    }
}
