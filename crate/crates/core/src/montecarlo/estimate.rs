//! Variance estimators with a fixed summation order.

use rayon::prelude::*;
use serde::Serialize;

use super::sampling::{sample_stream, TrialRecord};
use crate::error::{Error, Result};
use crate::params::{CslParams, ExperimentSetup};

/// Below this length a block is summed left to right.
const PAIRWISE_BLOCK: usize = 128;

/// Pairwise sum split at `len / 2`. The split points depend only on the
/// length, so the result is the same for any thread count.
pub fn pairwise_sum<F>(len: usize, f: &F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    fn go<F: Fn(usize) -> f64 + Sync>(lo: usize, hi: usize, f: &F) -> f64 {
        if hi - lo <= PAIRWISE_BLOCK {
            return (lo..hi).map(f).sum();
        }
        let mid = lo + (hi - lo) / 2;
        let (a, b) = rayon::join(|| go(lo, mid, f), || go(mid, hi, f));
        a + b
    }
    go(0, len, f)
}

/// Unbiased sample variance, two-pass.
pub fn unbiased_variance<F>(len: usize, f: &F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let mean = pairwise_sum(len, f) / len as f64;
    pairwise_sum(len, &|k| {
        let d = f(k) - mean;
        d * d
    }) / (len - 1) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceEstimate {
    /// Unbiased sample variance of `X_meas` (m²).
    pub s2_x: f64,
    /// Unbiased sample variance of `xi_meas/2` about the realised peak (m²).
    pub s2_rel: f64,
    pub n: usize,
    /// `s2_x - s2_rel` (m²).
    pub s2_diff: f64,
}

/// Estimates both spreads. `mu` is the peak half-separation used to centre
/// `xi_meas/2` on the realised component.
pub fn estimate_variances(trials: &[TrialRecord], mu: f64) -> Result<VarianceEstimate> {
    let n = trials.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "variance estimate needs at least 2 trials, got {n}"
        )));
    }
    let s2_x = unbiased_variance(n, &|k| trials[k].x_meas);
    let s2_rel = unbiased_variance(n, &|k| {
        trials[k].xi_meas / 2.0 - trials[k].component.center(mu)
    });
    Ok(VarianceEstimate {
        s2_x,
        s2_rel,
        n,
        s2_diff: s2_x - s2_rel,
    })
}

/// Runs `repetitions` independent experiments of `setup.n_samples` trials.
/// Experiment `r` uses keystream `stream_base + r`.
pub fn run_experiments(
    setup: &ExperimentSetup,
    p: &CslParams,
    seed: u64,
    stream_base: u64,
    repetitions: usize,
) -> Result<Vec<VarianceEstimate>> {
    let setup = setup.validated()?;
    let n = usize::try_from(setup.n_samples)
        .map_err(|_| Error::domain("n_samples", setup.n_samples as f64, "too large"))?;
    (0..repetitions)
        .into_par_iter()
        .map(|r| {
            let trials = sample_stream(&setup, p, seed, stream_base + r as u64, n)?;
            estimate_variances(&trials, setup.mu)
        })
        .collect()
}

/// Mean and unbiased variance of a sequence of values.
pub fn mean_and_variance(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mean = pairwise_sum(n, &|k| values[k]) / n as f64;
    let var = if n > 1 {
        unbiased_variance(n, &|k| values[k])
    } else {
        0.0
    };
    (mean, var)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::sigma2_csl;
    use crate::montecarlo::design::var_of_s2x;
    use crate::montecarlo::sampling::Component;
    use crate::units::AMU;

    #[test]
    fn pairwise_sum_is_exact_on_integers() {
        assert_eq!(pairwise_sum(10_001, &|k| k as f64), 50_005_000.0);
        assert_eq!(pairwise_sum(0, &|_| 1.0), 0.0);
    }

    #[test]
    fn identical_trials_have_zero_spread() {
        let t = TrialRecord::from_measured(Component::Minus, -3e-4, 3e-4);
        let est = estimate_variances(&[t; 50], 3e-4).unwrap();
        assert_eq!(est.s2_x, 0.0);
        assert_eq!(est.s2_rel, 0.0);
        assert_eq!(est.s2_diff, 0.0);
    }

    #[test]
    fn single_trial_is_insufficient() {
        let t = TrialRecord::from_measured(Component::Plus, 1.0, -1.0);
        assert_eq!(
            estimate_variances(&[t], 1.0).unwrap_err().category(),
            "insufficient-data"
        );
    }

    #[test]
    fn difference_is_unbiased_for_collapse_signal() {
        let setup = ExperimentSetup::default().with_samples(10_000).unwrap();
        let p = CslParams::from_lambda_alpha(1.0, 1e4, 1e9 * AMU).unwrap();
        let runs = run_experiments(&setup, &p, 42, 0, 200).unwrap();
        let diffs: Vec<f64> = runs.iter().map(|e| e.s2_diff).collect();
        let (mean, var) = mean_and_variance(&diffs);
        let se = (var / diffs.len() as f64).sqrt();
        let target = sigma2_csl(&setup, &p);
        assert!(
            (mean - target).abs() < 3.0 * se,
            "{mean} vs {target} ± {se}"
        );
    }

    #[test]
    fn estimator_variance_matches_formula() {
        let p = CslParams::from_lambda_alpha(1.0, 1e4, 1e9 * AMU).unwrap();
        for n in [10u64, 100, 10_000] {
            let setup = ExperimentSetup::default().with_samples(n).unwrap();
            let runs = run_experiments(&setup, &p, 42, 0, 1000).unwrap();
            let s2: Vec<f64> = runs.iter().map(|e| e.s2_x).collect();
            let (_, var) = mean_and_variance(&s2);
            let expected = var_of_s2x(&setup, &p).unwrap();
            assert!(
                (var / expected - 1.0).abs() < 0.15,
                "n={n}: {var} vs {expected}"
            );
        }
    }

    #[test]
    fn repetitions_do_not_depend_on_thread_count() {
        let setup = ExperimentSetup::default().with_samples(5000).unwrap();
        let p = CslParams::from_lambda_alpha(1.0, 1e4, 1e9 * AMU).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_experiments(&setup, &p, 7, 0, 6).unwrap())
        };
        assert_eq!(run(1), run(3));
    }
}
