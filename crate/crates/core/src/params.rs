//! Validated parameter containers.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::units::{AMU, HBAR, NM};

fn finite(field: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::domain(field, v, "must be finite"))
    }
}

fn positive(field: &'static str, v: f64) -> Result<f64> {
    if finite(field, v)? > 0.0 {
        Ok(v)
    } else {
        Err(Error::domain(field, v, "must be > 0"))
    }
}

fn non_negative(field: &'static str, v: f64) -> Result<f64> {
    if finite(field, v)? >= 0.0 {
        Ok(v)
    } else {
        Err(Error::domain(field, v, "must be >= 0"))
    }
}

/// Collapse-model parameters together with the particle mass.
///
/// The diffusion constant `D = hbar^2 lambda alpha (m/m0)^2 / 4` is derived on
/// construction and there is no way to set it independently.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CslParams {
    lambda: f64,
    alpha: f64,
    mass: f64,
    diffusion: f64,
}

impl CslParams {
    /// `lambda` in s⁻¹, `alpha` in m⁻², `mass` in kg.
    pub fn new(lambda: f64, alpha: f64, mass: f64) -> Result<Self> {
        non_negative("lambda", lambda)?;
        positive("alpha", alpha)?;
        positive("mass", mass)?;
        let ratio = mass / AMU;
        let diffusion = HBAR * HBAR * lambda * alpha / 4.0 * ratio * ratio;
        Ok(Self {
            lambda,
            alpha,
            mass,
            diffusion,
        })
    }

    /// Builds parameters from the product `lambda * alpha` at a chosen `alpha`.
    pub fn from_lambda_alpha(lambda_alpha: f64, alpha: f64, mass: f64) -> Result<Self> {
        non_negative("lambda_alpha", lambda_alpha)?;
        positive("alpha", alpha)?;
        Self::new(lambda_alpha / alpha, alpha, mass)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Particle mass in kg.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Momentum diffusion constant `D` (SI).
    pub fn diffusion(&self) -> f64 {
        self.diffusion
    }

    /// Localization length `1/sqrt(alpha)` in metres.
    pub fn localization_length(&self) -> f64 {
        1.0 / self.alpha.sqrt()
    }

    pub fn lambda_alpha(&self) -> f64 {
        lambda_alpha_product(self)
    }

    /// Same collapse parameters with `lambda = 0` (standard quantum mechanics).
    pub fn without_collapse(&self) -> Self {
        Self {
            lambda: 0.0,
            diffusion: 0.0,
            ..*self
        }
    }

    pub fn with_mass(&self, mass: f64) -> Result<Self> {
        Self::new(self.lambda, self.alpha, mass)
    }
}

/// `lambda` in s⁻¹, `alpha` in m⁻², mass in atomic mass units.
pub fn make_csl_params(lambda: f64, alpha: f64, mass_amu: f64) -> Result<CslParams> {
    finite("lambda", lambda)?;
    finite("alpha", alpha)?;
    positive("mass_amu", mass_amu)?;
    CslParams::new(lambda, alpha, mass_amu * AMU)
}

pub fn lambda_alpha_product(p: &CslParams) -> f64 {
    p.lambda * p.alpha
}

/// How well the large-localization-length approximation holds for a setup.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LocalizationRegime {
    /// `1/sqrt(alpha) >= 10 * 2mu`.
    Valid,
    /// `2mu <= 1/sqrt(alpha) < 10 * 2mu`: usable but not comfortably.
    Marginal,
    /// `1/sqrt(alpha) < 2mu`.
    Invalid,
}

/// One drop-and-measure configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExperimentSetup {
    /// Trap width (m).
    pub sigma: f64,
    /// Trap half-separation (m).
    pub mu: f64,
    /// Free-flight time (s).
    pub t_flight: f64,
    /// Position measurement error std (m).
    pub sigma_err: f64,
    pub n_samples: u64,
    /// External temperature (K).
    pub temperature_ext: f64,
    /// Ambient pressure (Torr).
    pub pressure: f64,
}

impl Default for ExperimentSetup {
    /// The design point: 10 nm traps 1 mm apart, 0.25 s drop, 10 nm readout.
    fn default() -> Self {
        Self {
            sigma: 10.0 * NM,
            mu: 0.5e-3,
            t_flight: 0.25,
            sigma_err: 10.0 * NM,
            n_samples: 24_201,
            temperature_ext: crate::units::T0,
            pressure: 3.3e-17,
        }
    }
}

impl ExperimentSetup {
    pub fn new(sigma: f64, mu: f64, t_flight: f64, sigma_err: f64, n_samples: u64) -> Result<Self> {
        Self {
            sigma,
            mu,
            t_flight,
            sigma_err,
            n_samples,
            ..Self::default()
        }
        .validated()
    }

    /// Checks every field invariant and returns the setup unchanged.
    pub fn validated(self) -> Result<Self> {
        positive("sigma", self.sigma)?;
        positive("mu", self.mu)?;
        positive("t_flight", self.t_flight)?;
        non_negative("sigma_err", self.sigma_err)?;
        non_negative("temperature_ext", self.temperature_ext)?;
        non_negative("pressure", self.pressure)?;
        if self.n_samples < 2 {
            return Err(Error::InsufficientData(format!(
                "n_samples must be >= 2, got {}",
                self.n_samples
            )));
        }
        Ok(self)
    }

    pub fn with_time(self, t_flight: f64) -> Result<Self> {
        Self { t_flight, ..self }.validated()
    }

    pub fn with_samples(self, n_samples: u64) -> Result<Self> {
        Self { n_samples, ..self }.validated()
    }

    pub fn localization_regime(&self, p: &CslParams) -> LocalizationRegime {
        let length = p.localization_length();
        let separation = 2.0 * self.mu;
        if length < separation {
            LocalizationRegime::Invalid
        } else if length < 10.0 * separation {
            LocalizationRegime::Marginal
        } else {
            LocalizationRegime::Valid
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    // Frozen from a 40-digit evaluation of hbar^2 * lambda * alpha / 4 * (m/m0)^2
    // with the pinned constants.
    const D_GRW_1E9_AMU: f64 = 2.780_304_293_026_704e-53;
    const D_GRW_1_AMU: f64 = 2.780_304_293_026_703_7e-71;

    #[test]
    fn diffusion_constant_matches_hand_oracle() {
        let p = make_csl_params(1e-16, 1e14, 1e9).unwrap();
        assert!(
            rel(p.diffusion(), D_GRW_1E9_AMU) < 1e-14,
            "{}",
            p.diffusion()
        );
        let p = make_csl_params(1e-16, 1e14, 1.0).unwrap();
        assert!(rel(p.diffusion(), D_GRW_1_AMU) < 1e-14, "{}", p.diffusion());
        let p = make_csl_params(0.0, 1e14, 1e9).unwrap();
        assert_eq!(p.diffusion(), 0.0);
    }

    #[test]
    fn product() {
        assert!(
            rel(
                make_csl_params(1e-16, 1e14, 1.0).unwrap().lambda_alpha(),
                1e-2
            ) < 1e-15
        );
        assert_eq!(
            make_csl_params(0.0, 3.7e9, 1.0).unwrap().lambda_alpha(),
            0.0
        );
        assert_eq!(make_csl_params(1e-4, 1e4, 1.0).unwrap().lambda_alpha(), 1.0);
    }

    #[test]
    fn bad_inputs_name_the_field() {
        let cases = [
            (make_csl_params(-1.0, 1.0, 1.0), "lambda"),
            (make_csl_params(1.0, 0.0, 1.0), "alpha"),
            (make_csl_params(1.0, 1.0, -3.0), "mass_amu"),
            (make_csl_params(f64::NAN, 1.0, 1.0), "lambda"),
            (make_csl_params(1.0, f64::INFINITY, 1.0), "alpha"),
        ];
        for (res, name) in cases {
            match res {
                Err(Error::ParameterDomain { field, .. }) => assert_eq!(field, name),
                other => panic!("expected domain error for {name}, got {other:?}"),
            }
        }
    }

    #[test]
    fn setup_validation() {
        assert!(ExperimentSetup::default().validated().is_ok());
        assert!(ExperimentSetup::new(0.0, 1e-7, 0.25, 1e-8, 10).is_err());
        assert!(ExperimentSetup::new(1e-8, 1e-7, -1.0, 1e-8, 10).is_err());
        assert_eq!(
            ExperimentSetup::new(1e-8, 1e-7, 0.25, 1e-8, 1)
                .unwrap_err()
                .category(),
            "insufficient-data"
        );
    }

    #[test]
    fn regime_thresholds() {
        let setup = ExperimentSetup::new(1e-8, 1e-7, 0.25, 0.0, 10).unwrap();
        // 1/sqrt(alpha) = 1e-7 < 2e-7
        let p = CslParams::new(1.0, 1e14, AMU).unwrap();
        assert_eq!(setup.localization_regime(&p), LocalizationRegime::Invalid);
        // 1/sqrt(alpha) = 1e-6, between 2e-7 and 2e-6
        let p = CslParams::new(1.0, 1e12, AMU).unwrap();
        assert_eq!(setup.localization_regime(&p), LocalizationRegime::Marginal);
        let p = CslParams::new(1.0, 1e4, AMU).unwrap();
        assert_eq!(setup.localization_regime(&p), LocalizationRegime::Valid);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn quadratic_in_mass(l in 1e-20f64..1e3, a in 1e-4f64..1e16, m in 1e-3f64..1e12) {
                let d1 = make_csl_params(l, a, m).unwrap().diffusion();
                let d2 = make_csl_params(l, a, 2.0 * m).unwrap().diffusion();
                prop_assert!(rel(d2, 4.0 * d1) < 1e-14);
            }

            #[test]
            fn linear_in_lambda(l in 1e-20f64..1e3, a in 1e-4f64..1e16, m in 1e-3f64..1e12, c in 1e-3f64..1e3) {
                let d1 = make_csl_params(l, a, m).unwrap().diffusion();
                let dc = make_csl_params(c * l, a, m).unwrap().diffusion();
                prop_assert!(rel(dc, c * d1) < 1e-14);
            }
        }
    }
}
