//! Simulated drop trials drawn from the post-flight joint distribution.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::normal::inverse_cdf;
use super::rng::{join_words, open_unit, TrialStream};
use crate::analytic::joint_distribution;
use crate::error::{Error, Result};
use crate::params::{CslParams, ExperimentSetup};

/// Trials generated per parallel task. Results do not depend on it.
const CHUNK: usize = 4096;

/// Which trap-ordering peak a trial realised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Component {
    /// Particle 1 near `+mu`, particle 2 near `-mu`.
    Plus,
    /// Particle 1 near `-mu`, particle 2 near `+mu`.
    Minus,
}

impl Component {
    /// `+1` or `-1`.
    pub fn sign(self) -> f64 {
        match self {
            Component::Plus => 1.0,
            Component::Minus => -1.0,
        }
    }

    /// Centre of `xi/2` for this peak.
    pub fn center(self, mu: f64) -> f64 {
        self.sign() * mu
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Component::Plus => "+1",
            Component::Minus => "-1",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialRecord {
    pub component: Component,
    pub x1_meas: f64,
    pub x2_meas: f64,
    pub x_meas: f64,
    pub xi_meas: f64,
}

impl TrialRecord {
    /// Builds a record from measured positions; the derived coordinates are
    /// computed here and nowhere else.
    pub fn from_measured(component: Component, x1_meas: f64, x2_meas: f64) -> Self {
        Self {
            component,
            x1_meas,
            x2_meas,
            x_meas: (x1_meas + x2_meas) / 2.0,
            xi_meas: x1_meas - x2_meas,
        }
    }
}

/// Per-trial sampling law: spreads and centres of the two peaks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SamplingLaw {
    mu: f64,
    sigma_x: f64,
    sigma_rel: f64,
    sigma_err: f64,
}

impl SamplingLaw {
    pub(crate) fn new(setup: &ExperimentSetup, p: &CslParams) -> Result<Self> {
        let jd = joint_distribution(setup, p)?;
        Ok(Self {
            mu: setup.mu,
            sigma_x: jd.sigma_x(),
            sigma_rel: jd.sigma_rel(),
            sigma_err: setup.sigma_err,
        })
    }

    fn draw(&self, words: &[u32; 16]) -> TrialRecord {
        let component = if words[0] & 1 == 0 {
            Component::Plus
        } else {
            Component::Minus
        };
        let z = |k: usize| inverse_cdf(open_unit(join_words(words[1 + 2 * k], words[2 + 2 * k])));
        let x = self.sigma_x * z(0);
        let half_xi = component.center(self.mu) + self.sigma_rel * z(1);
        let x1 = x + half_xi + self.sigma_err * z(2);
        let x2 = x - half_xi + self.sigma_err * z(3);
        TrialRecord::from_measured(component, x1, x2)
    }

    /// Fills `out` with trials `0..out.len()` of `stream`.
    pub(crate) fn fill(&self, seed: u64, stream: u64, out: &mut [TrialRecord]) {
        out.par_chunks_mut(CHUNK)
            .enumerate()
            .for_each(|(c, chunk)| {
                let mut rng = TrialStream::new(seed, stream, (c * CHUNK) as u64);
                for slot in chunk {
                    *slot = self.draw(&rng.next_block());
                }
            });
    }
}

const PLACEHOLDER: TrialRecord = TrialRecord {
    component: Component::Plus,
    x1_meas: 0.0,
    x2_meas: 0.0,
    x_meas: 0.0,
    xi_meas: 0.0,
};

pub(crate) fn sample_stream(
    setup: &ExperimentSetup,
    p: &CslParams,
    seed: u64,
    stream: u64,
    n: usize,
) -> Result<Vec<TrialRecord>> {
    let law = SamplingLaw::new(setup, p)?;
    let mut out = vec![PLACEHOLDER; n];
    law.fill(seed, stream, &mut out);
    Ok(out)
}

/// Draws `n` noisy trials. The sequence depends only on `seed`, never on
/// the thread count.
pub fn sample_trials(
    setup: &ExperimentSetup,
    p: &CslParams,
    seed: u64,
    n: usize,
) -> Result<Vec<TrialRecord>> {
    if n < 1 {
        return Err(Error::InsufficientData(
            "at least one trial is required".into(),
        ));
    }
    sample_stream(setup, p, seed, 0, n)
}

pub const CSV_HEADER: &str = "trial,component,x1_m,x2_m,X_m,xi_m";

/// Writes trials as CSV with shortest round-trip floats.
pub fn write_trials_csv<W: Write>(mut w: W, trials: &[TrialRecord]) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for (k, t) in trials.iter().enumerate() {
        writeln!(
            w,
            "{k},{},{:e},{:e},{:e},{:e}",
            t.component, t.x1_meas, t.x2_meas, t.x_meas, t.xi_meas
        )?;
    }
    Ok(())
}
