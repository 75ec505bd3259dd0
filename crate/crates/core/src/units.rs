//! Physical constants and unit conversions.
//!
//! Everything inside the crate is SI except pressure, which is carried in
//! Torr because every pressure figure of interest is quoted in Torr or
//! picoTorr. Conversions happen once, at the boundary.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Reduced Planck constant (J·s), CODATA 2018.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Atomic mass unit (kg). Also used as the collapse mass scale `m0`.
pub const AMU: f64 = 1.660_539_07e-27;

/// Room temperature reference (K) for the collision-time formula.
pub const T0: f64 = 300.0;

/// picoTorr per Torr.
pub const PICOTORR_PER_TORR: f64 = 1e12;

/// Pascal per Torr, as pinned for this crate.
pub const PA_PER_TORR: f64 = 133.322;

pub const NM: f64 = 1e-9;
pub const CM: f64 = 1e-2;

/// The constant table as a value, for reporting.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub amu: f64,
    pub t0: f64,
    pub torr_per_picotorr: f64,
}

impl PhysicalConstants {
    pub const PINNED: PhysicalConstants = PhysicalConstants {
        hbar: HBAR,
        amu: AMU,
        t0: T0,
        torr_per_picotorr: 1.0 / PICOTORR_PER_TORR,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PressureUnit {
    Torr,
    PicoTorr,
    Pascal,
}

impl PressureUnit {
    fn per_torr(self) -> f64 {
        match self {
            PressureUnit::Torr => 1.0,
            PressureUnit::PicoTorr => PICOTORR_PER_TORR,
            PressureUnit::Pascal => PA_PER_TORR,
        }
    }
}

impl FromStr for PressureUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Torr" | "torr" => Ok(PressureUnit::Torr),
            "pTorr" | "picoTorr" | "ptorr" | "picotorr" => Ok(PressureUnit::PicoTorr),
            "Pa" | "pa" => Ok(PressureUnit::Pascal),
            other => Err(Error::Unit(format!("unknown pressure unit `{other}`"))),
        }
    }
}

impl fmt::Display for PressureUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PressureUnit::Torr => "Torr",
            PressureUnit::PicoTorr => "pTorr",
            PressureUnit::Pascal => "Pa",
        })
    }
}

/// Converts a pressure between units.
pub fn convert_pressure(value: f64, from: PressureUnit, to: PressureUnit) -> f64 {
    if from == to {
        return value;
    }
    // Route through Torr; multiply before divide keeps Torr<->pTorr exact
    // whenever the decimal value allows it.
    let torr = value / from.per_torr();
    torr * to.per_torr()
}

/// String-token variant used by the CLI and parameter files.
pub fn convert_pressure_str(value: f64, from: &str, to: &str) -> Result<f64> {
    Ok(convert_pressure(value, from.parse()?, to.parse()?))
}
