//! Environmental bounds on the experiment and scans over `lambda * alpha`.
//!
//! Every bound exists in two forms: the rounded closed-form coefficients
//! (`73`, `100`, `0.8`) that reproduce the published curves, and an exact
//! form recomputed from the pinned constants and the stated inputs.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::montecarlo::{required_samples, required_samples_exact};
use crate::params::{CslParams, ExperimentSetup};
use crate::units::{convert_pressure, PressureUnit, AMU, HBAR};

/// Coefficient of the emission-recoil variance, SI units.
pub const RADIATION_COEFF: f64 = 4.0e-43;
/// Rounded temperature coefficient (K).
pub const TEMPERATURE_COEFF: f64 = 73.0;
/// Rounded pressure coefficient (pTorr).
pub const PRESSURE_COEFF_PTORR: f64 = 0.8;
/// Collapse signal must exceed a noise source by this factor.
pub const SIGNAL_MARGIN: f64 = 10.0;
/// The collision time must exceed the total run time by this factor.
pub const COLLISION_MARGIN: f64 = 10.0;
/// Default bound on alpha from a 1 cm localization length (m⁻²).
pub const DEFAULT_ALPHA_MAX: f64 = 1e4;
/// Default lower end of the testable `lambda * alpha` (m⁻² s⁻¹).
pub const DEFAULT_LAMBDA_ALPHA_MIN: f64 = 1.0;

fn check_lambda_alpha(lambda_alpha: f64) -> Result<()> {
    if lambda_alpha > 0.0 && lambda_alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(
            "lambda_alpha",
            lambda_alpha,
            "must be finite and > 0",
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SphereParams {
    /// m
    pub radius: f64,
    /// kg m⁻³
    pub density: f64,
    /// K
    pub internal_temperature: f64,
}

impl Default for SphereParams {
    fn default() -> Self {
        Self {
            radius: 1e-7,
            density: 1e3,
            internal_temperature: TEMPERATURE_COEFF,
        }
    }
}

impl SphereParams {
    pub fn new(radius: f64, density: f64, internal_temperature: f64) -> Result<Self> {
        Self {
            radius,
            density,
            internal_temperature,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::domain(
                "radius",
                self.radius,
                "must be finite and > 0",
            ));
        }
        if !(self.density > 0.0 && self.density.is_finite()) {
            return Err(Error::domain(
                "density",
                self.density,
                "must be finite and > 0",
            ));
        }
        if !(self.internal_temperature >= 0.0 && self.internal_temperature.is_finite()) {
            return Err(Error::domain(
                "internal_temperature",
                self.internal_temperature,
                "must be finite and >= 0",
            ));
        }
        Ok(self)
    }

    pub fn with_temperature(self, internal_temperature: f64) -> Result<Self> {
        Self {
            internal_temperature,
            ..self
        }
        .validated()
    }

    /// `4/3 pi R^3 density` (kg).
    pub fn mass(&self) -> f64 {
        4.0 / 3.0 * std::f64::consts::PI * self.radius.powi(3) * self.density
    }
}

/// Positional variance from thermal photon emission,
/// `4.0e-43 density^-2 R^-3 T_i^6 t^3` (m²).
pub fn sigma2_rad(s: &SphereParams, t: f64) -> Result<f64> {
    let s = s.validated()?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::domain("t", t, "must be finite and > 0"));
    }
    Ok(RADIATION_COEFF * s.internal_temperature.powi(6) * t.powi(3)
        / (s.density * s.density * s.radius.powi(3)))
}

/// Collapse excess `hbar^2 lambda alpha t^3 / (6 m0^2)`; the particle mass
/// cancels between `D` and the free-flight `1/m^2`.
pub fn collapse_variance(lambda_alpha: f64, t: f64) -> f64 {
    HBAR * HBAR * lambda_alpha * t.powi(3) / (6.0 * AMU * AMU)
}

/// `73 (lambda alpha)^(1/6)` K.
pub fn max_internal_temperature(lambda_alpha: f64) -> Result<f64> {
    check_lambda_alpha(lambda_alpha)?;
    Ok(TEMPERATURE_COEFF * lambda_alpha.powf(1.0 / 6.0))
}

/// Temperature at which `sigma2_rad = collapse_variance / 10`. Flight time
/// cancels.
pub fn max_internal_temperature_exact(lambda_alpha: f64, s: &SphereParams) -> Result<f64> {
    check_lambda_alpha(lambda_alpha)?;
    let s = s.validated()?;
    let t6 = collapse_variance(lambda_alpha, 1.0) / SIGNAL_MARGIN
        * s.density
        * s.density
        * s.radius.powi(3)
        / RADIATION_COEFF;
    Ok(t6.powf(1.0 / 6.0))
}

/// Mean time between gas collisions, `2 sqrt(T_e/T0) / P` s with `P` in pTorr.
pub fn collision_time(pressure_ptorr: f64, t_ext_ratio: f64) -> Result<f64> {
    if !(pressure_ptorr > 0.0 && pressure_ptorr.is_finite()) {
        return Err(Error::domain(
            "pressure",
            pressure_ptorr,
            "must be finite and > 0",
        ));
    }
    if !(t_ext_ratio > 0.0 && t_ext_ratio.is_finite()) {
        return Err(Error::domain(
            "t_ext_ratio",
            t_ext_ratio,
            "must be finite and > 0",
        ));
    }
    Ok(2.0 * t_ext_ratio.sqrt() / pressure_ptorr)
}

/// `0.8 / (2 (100/(lambda alpha) + 10)^2 + 1)` pTorr, returned in Torr.
pub fn max_pressure(lambda_alpha: f64) -> Result<f64> {
    check_lambda_alpha(lambda_alpha)?;
    let a = 100.0 / lambda_alpha + 10.0;
    let ptorr = PRESSURE_COEFF_PTORR / (2.0 * a * a + 1.0);
    Ok(convert_pressure(
        ptorr,
        PressureUnit::PicoTorr,
        PressureUnit::Torr,
    ))
}

/// Steps from the run length to the pressure ceiling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PressureChain {
    /// Number of drops.
    pub n: f64,
    /// Flight time per drop (s).
    pub t_flight: f64,
    pub t_ext_ratio: f64,
    /// `10 n t` (s).
    pub min_collision_time: f64,
    /// Pressure at which the collision time equals the minimum (pTorr).
    pub p_max_ptorr: f64,
    pub p_max_torr: f64,
}

/// Solves `collision_time(P) = 10 n t` for `P`.
pub fn pressure_chain(n: f64, t_flight: f64, t_ext_ratio: f64) -> Result<PressureChain> {
    if !(n >= 1.0 && n.is_finite()) {
        return Err(Error::domain("n", n, "must be finite and >= 1"));
    }
    if !(t_flight > 0.0 && t_flight.is_finite()) {
        return Err(Error::domain(
            "t_flight",
            t_flight,
            "must be finite and > 0",
        ));
    }
    if !(t_ext_ratio > 0.0 && t_ext_ratio.is_finite()) {
        return Err(Error::domain(
            "t_ext_ratio",
            t_ext_ratio,
            "must be finite and > 0",
        ));
    }
    let min_collision_time = COLLISION_MARGIN * n * t_flight;
    let p_max_ptorr = 2.0 * t_ext_ratio.sqrt() / min_collision_time;
    Ok(PressureChain {
        n,
        t_flight,
        t_ext_ratio,
        min_collision_time,
        p_max_ptorr,
        p_max_torr: convert_pressure(p_max_ptorr, PressureUnit::PicoTorr, PressureUnit::Torr),
    })
}

/// Pressure ceiling from the exact sample count of `setup` at
/// `lambda * alpha`, with `T_e / T0` taken from the setup.
pub fn max_pressure_exact(
    lambda_alpha: f64,
    alpha: f64,
    mass: f64,
    setup: &ExperimentSetup,
) -> Result<PressureChain> {
    check_lambda_alpha(lambda_alpha)?;
    let p = CslParams::from_lambda_alpha(lambda_alpha, alpha, mass)?;
    let n = required_samples_exact(setup, &p)?;
    pressure_chain(
        n as f64,
        setup.t_flight,
        setup.temperature_ext / crate::units::T0,
    )
}

/// Which set of coefficients a bound uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum Variant {
    /// The rounded closed forms.
    #[default]
    Rounded,
    /// Recomputed from the pinned constants and stated inputs.
    Exact,
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rounded" => Ok(Variant::Rounded),
            "exact" => Ok(Variant::Exact),
            other => Err(Error::Parse(format!(
                "unknown variant `{other}`; expected rounded or exact"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeasibilityEnvelope {
    /// m⁻² s⁻¹
    pub lambda_alpha: f64,
    pub n_min: u64,
    /// K
    pub t_i_max: f64,
    /// Torr
    pub p_max: f64,
}

/// Inputs of the exact envelope: the experiment, the particle, the sphere
/// and the alpha used to split `lambda * alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactInputs {
    pub setup: ExperimentSetup,
    pub mass: f64,
    pub alpha: f64,
    pub sphere: SphereParams,
}

impl Default for ExactInputs {
    fn default() -> Self {
        Self {
            setup: ExperimentSetup::default(),
            mass: 1e9 * AMU,
            alpha: DEFAULT_ALPHA_MAX,
            sphere: SphereParams::default(),
        }
    }
}

pub fn envelope(
    lambda_alpha: f64,
    variant: Variant,
    inputs: &ExactInputs,
) -> Result<FeasibilityEnvelope> {
    check_lambda_alpha(lambda_alpha)?;
    Ok(match variant {
        Variant::Rounded => FeasibilityEnvelope {
            lambda_alpha,
            n_min: required_samples(lambda_alpha)?,
            t_i_max: max_internal_temperature(lambda_alpha)?,
            p_max: max_pressure(lambda_alpha)?,
        },
        Variant::Exact => {
            let p = CslParams::from_lambda_alpha(lambda_alpha, inputs.alpha, inputs.mass)?;
            let n_min = required_samples_exact(&inputs.setup, &p)?;
            FeasibilityEnvelope {
                lambda_alpha,
                n_min,
                t_i_max: max_internal_temperature_exact(lambda_alpha, &inputs.sphere)?,
                p_max: max_pressure_exact(lambda_alpha, inputs.alpha, inputs.mass, &inputs.setup)?
                    .p_max_torr,
            }
        }
    })
}

/// Envelopes along a positive, increasing grid.
pub fn scan(
    grid: &[f64],
    variant: Variant,
    inputs: &ExactInputs,
) -> Result<Vec<FeasibilityEnvelope>> {
    for w in grid.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::domain(
                "grid",
                w[1],
                "grid must be strictly increasing",
            ));
        }
    }
    grid.par_iter()
        .map(|&la| envelope(la, variant, inputs))
        .collect()
}

pub const SCAN_CSV_HEADER: &str = "lambda_alpha,n_min,t_i_max_K,p_max_torr";

pub fn write_scan_csv<W: Write>(mut w: W, rows: &[FeasibilityEnvelope]) -> std::io::Result<()> {
    writeln!(w, "{SCAN_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{:e},{},{:e},{:e}",
            r.lambda_alpha, r.n_min, r.t_i_max, r.p_max
        )?;
    }
    Ok(())
}

/// Grid spacing of a [`Grid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Spacing {
    Log,
    Lin,
}

/// `start:stop:count[log|lin]`, log spacing by default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let last = (self.count - 1) as f64;
        let mut out: Vec<f64> = (0..self.count)
            .map(|k| {
                let f = k as f64 / last;
                match self.spacing {
                    Spacing::Lin => self.start + f * (self.stop - self.start),
                    Spacing::Log => 10f64
                        .powf(self.start.log10() + f * (self.stop.log10() - self.start.log10())),
                }
            })
            .collect();
        // Pin the end points exactly.
        out[0] = self.start;
        out[self.count - 1] = self.stop;
        out
    }
}

impl FromStr for Grid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| {
            Error::Parse(format!(
                "grid `{s}`: {why}; expected start:stop:count[log|lin]"
            ))
        };
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("need three fields"));
        }
        let start: f64 = parts[0].trim().parse().map_err(|_| bad("bad start"))?;
        let stop: f64 = parts[1].trim().parse().map_err(|_| bad("bad stop"))?;
        let tail = parts[2].trim();
        let (count, spacing) = if let Some(c) = tail.strip_suffix("log") {
            (c, Spacing::Log)
        } else if let Some(c) = tail.strip_suffix("lin") {
            (c, Spacing::Lin)
        } else {
            (tail, Spacing::Log)
        };
        let count: usize = count.parse().map_err(|_| bad("bad count"))?;
        if count == 0 {
            return Err(bad("count must be >= 1"));
        }
        if !(start.is_finite() && stop.is_finite()) || (count > 1 && !(stop > start)) {
            return Err(bad("need finite start < stop"));
        }
        if spacing == Spacing::Log && !(start > 0.0) {
            return Err(bad("log spacing needs start > 0"));
        }
        Ok(Self {
            start,
            stop,
            count,
            spacing,
        })
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sp = match self.spacing {
            Spacing::Log => "log",
            Spacing::Lin => "lin",
        };
        write!(f, "{:e}:{:e}:{}{sp}", self.start, self.stop, self.count)
    }
}

/// Region of `(lambda, alpha)` where the correlated walk is testable:
/// `lambda alpha >= lambda_alpha_min` and `alpha <= alpha_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccessibleRegion {
    pub alpha_max: f64,
    pub lambda_alpha_min: f64,
    /// Optional excluded polygon in `(log10 lambda, log10 alpha)`.
    pub exclusion: Option<Vec<(f64, f64)>>,
}

/// Slack for comparisons of products that should land on a bound exactly.
const BOUND_SLACK: f64 = 1e-12;

impl Default for AccessibleRegion {
    fn default() -> Self {
        Self {
            alpha_max: DEFAULT_ALPHA_MAX,
            lambda_alpha_min: DEFAULT_LAMBDA_ALPHA_MIN,
            exclusion: None,
        }
    }
}

/// Plotting window in log10 coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Window {
    pub log10_lambda: (f64, f64),
    pub log10_alpha: (f64, f64),
}

impl Default for Window {
    fn default() -> Self {
        Self {
            log10_lambda: (-20.0, 4.0),
            log10_alpha: (-2.0, 16.0),
        }
    }
}

pub fn accessible_region(alpha_max: f64, lambda_alpha_min: f64) -> Result<AccessibleRegion> {
    if !(alpha_max > 0.0 && alpha_max.is_finite()) {
        return Err(Error::domain(
            "alpha_max",
            alpha_max,
            "must be finite and > 0",
        ));
    }
    check_lambda_alpha(lambda_alpha_min)?;
    Ok(AccessibleRegion {
        alpha_max,
        lambda_alpha_min,
        exclusion: None,
    })
}

impl AccessibleRegion {
    pub fn with_exclusion(mut self, polygon: Vec<(f64, f64)>) -> Result<Self> {
        if polygon.len() < 3 {
            return Err(Error::InsufficientData(format!(
                "exclusion polygon needs at least 3 vertices, got {}",
                polygon.len()
            )));
        }
        self.exclusion = Some(polygon);
        Ok(self)
    }

    pub fn contains(&self, lambda: f64, alpha: f64) -> bool {
        if !(lambda > 0.0 && alpha > 0.0) {
            return false;
        }
        let inside = lambda * alpha >= self.lambda_alpha_min * (1.0 - BOUND_SLACK)
            && alpha <= self.alpha_max * (1.0 + BOUND_SLACK);
        inside
            && !self
                .exclusion
                .as_deref()
                .is_some_and(|poly| point_in_polygon(poly, (lambda.log10(), alpha.log10())))
    }

    /// Boundary of the region clipped to `w`, in `(log10 lambda, log10 alpha)`:
    /// the product line up to `alpha_max`, then the horizontal `alpha_max`
    /// edge to the right of the window.
    pub fn boundary(&self, w: &Window) -> Vec<(f64, f64)> {
        let lm = self.lambda_alpha_min.log10();
        let am = self.alpha_max.log10().min(w.log10_alpha.1);
        let a_lo = w.log10_alpha.0.max(lm - w.log10_lambda.1);
        if a_lo > am {
            return Vec::new();
        }
        let mut out = vec![(lm - a_lo, a_lo), (lm - am, am)];
        if w.log10_lambda.1 > lm - am {
            out.push((w.log10_lambda.1, am));
        }
        out
    }

    /// Raster of the predicate over `w`, row-major in alpha then lambda.
    pub fn raster(&self, w: &Window, per_axis: usize) -> Vec<(f64, f64, bool)> {
        let step = |(lo, hi): (f64, f64), k: usize| {
            if per_axis == 1 {
                lo
            } else {
                lo + (hi - lo) * k as f64 / (per_axis - 1) as f64
            }
        };
        let mut out = Vec::with_capacity(per_axis * per_axis);
        for i in 0..per_axis {
            let la = step(w.log10_alpha, i);
            for j in 0..per_axis {
                let ll = step(w.log10_lambda, j);
                out.push((ll, la, self.contains(10f64.powf(ll), 10f64.powf(la))));
            }
        }
        out
    }
}

/// Even-odd rule; points on an edge may fall either way.
fn point_in_polygon(poly: &[(f64, f64)], (x, y): (f64, f64)) -> bool {
    let mut inside = false;
    let mut j = poly.len() - 1;
    for i in 0..poly.len() {
        let (xi, yi) = poly[i];
        let (xj, yj) = poly[j];
        if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

pub const REGION_CSV_HEADER: &str = "log10_lambda,log10_alpha,inside";

pub fn write_region_csv<W: Write>(mut w: W, rows: &[(f64, f64, bool)]) -> std::io::Result<()> {
    writeln!(w, "{REGION_CSV_HEADER}")?;
    for (ll, la, inside) in rows {
        writeln!(w, "{ll},{la},{inside}")?;
    }
    Ok(())
}

/// Reads an exclusion polygon from CSV lines `log10_lambda,log10_alpha`.
/// A non-numeric first line is taken as a header; `#` starts a comment.
pub fn parse_polygon_csv(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed = match fields.as_slice() {
            [a, b] => a.parse::<f64>().ok().zip(b.parse::<f64>().ok()),
            _ => None,
        };
        match parsed {
            Some(v) if v.0.is_finite() && v.1.is_finite() => out.push(v),
            None if out.is_empty() && k == 0 => continue,
            _ => return Err(Error::Parse(format!("polygon line {}: `{raw}`", k + 1))),
        }
    }
    Ok(out)
}
