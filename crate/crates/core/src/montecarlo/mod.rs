//! Virtual drop-and-measure experiment.
//!
//! Trials are drawn from the two-peak joint distribution, perturbed by
//! Gaussian readout noise and reduced to the two variance estimators whose
//! difference is the collapse signal.

pub mod design;
pub mod estimate;
pub mod normal;
pub mod rng;
pub mod sampling;

pub use design::{
    detection_power, detection_threshold, required_samples, required_samples_exact, var_of_s2x,
    DetectionPower, DEFAULT_THRESHOLD_SIGMAS,
};
pub use estimate::{estimate_variances, mean_and_variance, run_experiments, VarianceEstimate};
pub use sampling::{sample_trials, write_trials_csv, Component, TrialRecord, CSV_HEADER};
