//! Flat parameter files and the merged parameter set they feed.
//!
//! Grammar, one entry per line:
//!
//! ```text
//! key = value [unit]   # comment
//! ```
//!
//! Keys are the snake_case field names of the parameter containers. A value
//! without a unit is in the field's SI unit (Torr for pressures). Unknown keys,
//! repeated keys and units of the wrong dimension are errors.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::feasibility::SphereParams;
use crate::params::{CslParams, ExperimentSetup};
use crate::units::{AMU, CM, NM, PICOTORR_PER_TORR};

/// Defaults for fields the parameter containers do not carry.
pub const DEFAULT_LAMBDA_ALPHA: f64 = 1.0;
pub const DEFAULT_ALPHA: f64 = 1e4;
pub const DEFAULT_MASS_AMU: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dimension {
    Length,
    Time,
    Mass,
    Temperature,
    Pressure,
    /// Rates, inverse areas, counts: no unit accepted.
    Bare,
}

const KEYS: [(&str, Dimension); 14] = [
    ("lambda", Dimension::Bare),
    ("alpha", Dimension::Bare),
    ("lambda_alpha", Dimension::Bare),
    ("mass", Dimension::Mass),
    ("sigma", Dimension::Length),
    ("mu", Dimension::Length),
    ("t_flight", Dimension::Time),
    ("sigma_err", Dimension::Length),
    ("n_samples", Dimension::Bare),
    ("temperature_ext", Dimension::Temperature),
    ("pressure", Dimension::Pressure),
    ("radius", Dimension::Length),
    ("density", Dimension::Bare),
    ("internal_temperature", Dimension::Temperature),
];

fn unit_factor(dim: Dimension, unit: &str) -> Option<f64> {
    match (dim, unit) {
        (Dimension::Length, "m") => Some(1.0),
        (Dimension::Length, "nm") => Some(NM),
        (Dimension::Length, "cm") => Some(CM),
        (Dimension::Time, "s") => Some(1.0),
        (Dimension::Mass, "amu") => Some(AMU),
        (Dimension::Temperature, "K") => Some(1.0),
        (Dimension::Pressure, "Torr") => Some(1.0),
        (Dimension::Pressure, "pTorr") => Some(1.0 / PICOTORR_PER_TORR),
        _ => None,
    }
}

/// Every settable field, in SI, unset fields `None`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ParamSet {
    pub lambda: Option<f64>,
    pub alpha: Option<f64>,
    pub lambda_alpha: Option<f64>,
    /// kg
    pub mass: Option<f64>,
    pub sigma: Option<f64>,
    pub mu: Option<f64>,
    pub t_flight: Option<f64>,
    pub sigma_err: Option<f64>,
    pub n_samples: Option<u64>,
    pub temperature_ext: Option<f64>,
    /// Torr
    pub pressure: Option<f64>,
    pub radius: Option<f64>,
    pub density: Option<f64>,
    pub internal_temperature: Option<f64>,
}

/// The parameter containers built from a [`ParamSet`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Resolved {
    pub csl: CslParams,
    pub setup: ExperimentSetup,
    pub sphere: SphereParams,
}

impl ParamSet {
    fn slot(&mut self, key: &str) -> Option<&mut Option<f64>> {
        Some(match key {
            "lambda" => &mut self.lambda,
            "alpha" => &mut self.alpha,
            "lambda_alpha" => &mut self.lambda_alpha,
            "mass" => &mut self.mass,
            "sigma" => &mut self.sigma,
            "mu" => &mut self.mu,
            "t_flight" => &mut self.t_flight,
            "sigma_err" => &mut self.sigma_err,
            "temperature_ext" => &mut self.temperature_ext,
            "pressure" => &mut self.pressure,
            "radius" => &mut self.radius,
            "density" => &mut self.density,
            "internal_temperature" => &mut self.internal_temperature,
            _ => return None,
        })
    }

    /// Parses a parameter file.
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = Self::default();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |why: String| Error::Parse(format!("line {}: {why}", k + 1));
            let (key, rhs) = line
                .split_once('=')
                .ok_or_else(|| err("expected `key = value [unit]`".into()))?;
            let key = key.trim();
            let dim = KEYS
                .iter()
                .find(|(name, _)| *name == key)
                .map(|&(_, d)| d)
                .ok_or_else(|| err(format!("unknown key `{key}`")))?;
            let mut tokens = rhs.split_whitespace();
            let value_text = tokens
                .next()
                .ok_or_else(|| err(format!("missing value for `{key}`")))?;
            let unit = tokens.next();
            if tokens.next().is_some() {
                return Err(err("trailing tokens after unit".into()));
            }
            let factor = match unit {
                None => 1.0,
                Some(u) => unit_factor(dim, u).ok_or_else(|| {
                    Error::Unit(format!(
                        "line {}: unit `{u}` does not apply to `{key}`",
                        k + 1
                    ))
                })?,
            };
            if key == "n_samples" {
                if out.n_samples.is_some() {
                    return Err(err(format!("`{key}` set twice")));
                }
                let n = value_text
                    .parse::<u64>()
                    .map_err(|_| err(format!("`{value_text}` is not a non-negative integer")))?;
                out.n_samples = Some(n);
                continue;
            }
            let value: f64 = value_text
                .parse()
                .map_err(|_| err(format!("`{value_text}` is not a number")))?;
            let slot = out.slot(key).expect("key table and slots agree");
            if slot.is_some() {
                return Err(err(format!("`{key}` set twice")));
            }
            *slot = Some(value * factor);
        }
        Ok(out)
    }

    /// Fields set in `over` replace those in `self`.
    pub fn overlay(self, over: &ParamSet) -> ParamSet {
        ParamSet {
            lambda: over.lambda.or(self.lambda),
            alpha: over.alpha.or(self.alpha),
            lambda_alpha: over.lambda_alpha.or(self.lambda_alpha),
            mass: over.mass.or(self.mass),
            sigma: over.sigma.or(self.sigma),
            mu: over.mu.or(self.mu),
            t_flight: over.t_flight.or(self.t_flight),
            sigma_err: over.sigma_err.or(self.sigma_err),
            n_samples: over.n_samples.or(self.n_samples),
            temperature_ext: over.temperature_ext.or(self.temperature_ext),
            pressure: over.pressure.or(self.pressure),
            radius: over.radius.or(self.radius),
            density: over.density.or(self.density),
            internal_temperature: over.internal_temperature.or(self.internal_temperature),
        }
    }

    /// Applies defaults and validates. `lambda_alpha` and `lambda` are
    /// mutually exclusive; with neither, `lambda_alpha` defaults to 1.
    pub fn resolve(&self) -> Result<Resolved> {
        let alpha = self.alpha.unwrap_or(DEFAULT_ALPHA);
        let mass = self.mass.unwrap_or(DEFAULT_MASS_AMU * AMU);
        let csl = match (self.lambda, self.lambda_alpha) {
            (Some(_), Some(_)) => {
                return Err(Error::Parse(
                    "set either `lambda` or `lambda_alpha`, not both".into(),
                ));
            }
            (Some(lambda), None) => CslParams::new(lambda, alpha, mass)?,
            (None, la) => {
                CslParams::from_lambda_alpha(la.unwrap_or(DEFAULT_LAMBDA_ALPHA), alpha, mass)?
            }
        };
        let d = ExperimentSetup::default();
        let setup = ExperimentSetup {
            sigma: self.sigma.unwrap_or(d.sigma),
            mu: self.mu.unwrap_or(d.mu),
            t_flight: self.t_flight.unwrap_or(d.t_flight),
            sigma_err: self.sigma_err.unwrap_or(d.sigma_err),
            n_samples: self.n_samples.unwrap_or(d.n_samples),
            temperature_ext: self.temperature_ext.unwrap_or(d.temperature_ext),
            pressure: self.pressure.unwrap_or(d.pressure),
        }
        .validated()?;
        let s = SphereParams::default();
        let sphere = SphereParams::new(
            self.radius.unwrap_or(s.radius),
            self.density.unwrap_or(s.density),
            self.internal_temperature.unwrap_or(s.internal_temperature),
        )?;
        Ok(Resolved { csl, setup, sphere })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_units_and_comments() {
        let text = "# design point\nsigma = 10 nm\nmu = 0.05 cm  # half of 1 mm\nmass = 1e9 amu\n\
                    t_flight = 0.25 s\npressure = 33 pTorr\nlambda_alpha = 1\nn_samples = 24201\n";
        let p = ParamSet::parse(text).unwrap();
        assert_eq!(p.sigma, Some(10.0 * NM));
        assert!((p.mu.unwrap() - 5e-4).abs() < 1e-18);
        assert_eq!(p.mass, Some(1e9 * AMU));
        assert_eq!(p.pressure, Some(33.0 / PICOTORR_PER_TORR));
        assert_eq!(p.n_samples, Some(24_201));
        let r = p.resolve().unwrap();
        assert_eq!(r.csl.lambda_alpha(), 1.0);
        assert_eq!(r.setup.t_flight, 0.25);
    }

    #[test]
    fn rejects_bad_input() {
        let cases = [
            ("sigmaa = 1", "parse"),
            ("sigma = 1 s", "unit"),
            ("sigma = 1 furlong", "unit"),
            ("lambda = 1 s", "unit"),
            ("sigma 1", "parse"),
            ("sigma = x", "parse"),
            ("sigma = 1\nsigma = 2", "parse"),
            ("n_samples = 2.5", "parse"),
            ("sigma = 1 nm extra", "parse"),
        ];
        for (text, category) in cases {
            assert_eq!(
                ParamSet::parse(text).unwrap_err().category(),
                category,
                "{text}"
            );
        }
    }

    #[test]
    fn overlay_prefers_later_values() {
        let base = ParamSet::parse("sigma = 10 nm\nmu = 1 cm").unwrap();
        let over = ParamSet {
            sigma: Some(5e-9),
            ..ParamSet::default()
        };
        let m = base.overlay(&over);
        assert_eq!(m.sigma, Some(5e-9));
        assert_eq!(m.mu, Some(CM));
    }

    #[test]
    fn resolve_defaults_and_conflicts() {
        let r = ParamSet::default().resolve().unwrap();
        assert_eq!(r.setup, ExperimentSetup::default());
        assert_eq!(r.csl.lambda_alpha(), 1.0);
        let both = ParamSet {
            lambda: Some(1.0),
            lambda_alpha: Some(1.0),
            ..ParamSet::default()
        };
        assert_eq!(both.resolve().unwrap_err().category(), "parse");
        let bad = ParamSet {
            n_samples: Some(0),
            ..ParamSet::default()
        };
        assert_eq!(bad.resolve().unwrap_err().category(), "insufficient-data");
    }
}
