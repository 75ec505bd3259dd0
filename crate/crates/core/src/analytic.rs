//! Closed-form two-particle results: the density-matrix propagator, the
//! post-flight joint position distribution and its variance split.
//!
//! Dynamics are one-dimensional. Coordinates are ordered
//! `(x1, y1, x2, y2 | x1', y1', x2', y2')`: `x` labels the ket side and `y`
//! the bra side of `rho(x1, y1, x2, y2)`, primes are the initial coordinates.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{CslParams, ExperimentSetup, LocalizationRegime};
use crate::units::HBAR;

/// Below this real exponent the kernel is reported as exactly zero.
pub const UNDERFLOW_EXPONENT: f64 = -700.0;

/// Peaks closer than this many relative spreads are flagged as overlapping.
pub const PEAK_SEPARATION_SIGMAS: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PropagatorPoint {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
    pub x1p: f64,
    pub y1p: f64,
    pub x2p: f64,
    pub y2p: f64,
    pub t: f64,
}

impl PropagatorPoint {
    pub fn from_coords(c: [f64; 8], t: f64) -> Self {
        let [x1, y1, x2, y2, x1p, y1p, x2p, y2p] = c;
        Self {
            x1,
            y1,
            x2,
            y2,
            x1p,
            y1p,
            x2p,
            y2p,
            t,
        }
    }

    pub fn coords(&self) -> [f64; 8] {
        [
            self.x1, self.y1, self.x2, self.y2, self.x1p, self.y1p, self.x2p, self.y2p,
        ]
    }

    /// Every coordinate moved by `delta`.
    pub fn translated(&self, delta: f64) -> Self {
        Self::from_coords(self.coords().map(|c| c + delta), self.t)
    }

    /// Bra and ket exchanged: `x_i <-> y_i`, `x_i' <-> y_i'`.
    pub fn bra_ket_swapped(&self) -> Self {
        let [x1, y1, x2, y2, x1p, y1p, x2p, y2p] = self.coords();
        Self::from_coords([y1, x1, y2, x2, y1p, x1p, y2p, x2p], self.t)
    }

    /// Particle labels exchanged on both sides.
    pub fn particles_swapped(&self) -> Self {
        let [x1, y1, x2, y2, x1p, y1p, x2p, y2p] = self.coords();
        Self::from_coords([x2, y2, x1, y1, x2p, y2p, x1p, y1p], self.t)
    }
}

/// Free-phase and collapse quadratic forms of the kernel exponent.
///
/// Returns `(phase, damping)` with
/// `phase = sum_i (x_i - x_i')^2 - (y_i - y_i')^2` and
/// `damping = sum_{i,j} q(x_i - y_j, x_i' - y_j') - q(x1 - x2, x1' - x2') - q(y1 - y2, y1' - y2')`
/// where `q(u, v) = u^2 + u v + v^2`. Only differences enter, so the result is
/// translation invariant for any field.
fn quadratic_forms<T>(c: &[T; 8]) -> (T, T)
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<Output = T>,
{
    let [x1, y1, x2, y2, x1p, y1p, x2p, y2p] = *c;
    let q = |u: T, v: T| u * u + u * v + v * v;
    let sq = |u: T| u * u;

    let phase = sq(x1 - x1p) - sq(y1 - y1p) + sq(x2 - x2p) - sq(y2 - y2p);

    let cross = q(x1 - y1, x1p - y1p)
        + q(x1 - y2, x1p - y2p)
        + q(x2 - y1, x2p - y1p)
        + q(x2 - y2, x2p - y2p);
    let damping = cross - q(x1 - x2, x1p - x2p) - q(y1 - y2, y1p - y2p);
    (phase, damping)
}

/// The closed-form propagator at a fixed elapsed time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    mass: f64,
    diffusion: f64,
    t: f64,
    log_prefactor: f64,
    phase_coeff: f64,
    damping_coeff: f64,
}

impl Kernel {
    pub fn new(p: &CslParams, t: f64) -> Result<Self> {
        Self::from_raw(p.mass(), p.diffusion(), t)
    }

    /// Kernel for an arbitrary `(mass, D)` pair. The oracles use this to build
    /// deliberately mis-parameterised kernels.
    pub fn from_raw(mass: f64, diffusion: f64, t: f64) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::domain("t", t, "propagator needs t > 0"));
        }
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::domain("mass", mass, "must be finite and > 0"));
        }
        if !(diffusion >= 0.0) || !diffusion.is_finite() {
            return Err(Error::domain(
                "diffusion",
                diffusion,
                "must be finite and >= 0",
            ));
        }
        let pref = mass / (2.0 * PI * HBAR * t);
        Ok(Self {
            mass,
            diffusion,
            t,
            log_prefactor: 2.0 * pref.ln(),
            phase_coeff: mass / (2.0 * HBAR * t),
            damping_coeff: diffusion * t / (3.0 * HBAR * HBAR),
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn diffusion(&self) -> f64 {
        self.diffusion
    }

    /// `m / (2 hbar t)`: coefficient of the free-particle phase.
    pub fn phase_coeff(&self) -> f64 {
        self.phase_coeff
    }

    /// `D t / (3 hbar^2)`.
    pub fn damping_coeff(&self) -> f64 {
        self.damping_coeff
    }

    /// `ln J` at real coordinates, as (real, imaginary) parts.
    pub fn log_value(&self, c: &[f64; 8]) -> (f64, f64) {
        let (phase, damping) = quadratic_forms(c);
        (
            self.log_prefactor - self.damping_coeff * damping,
            self.phase_coeff * phase,
        )
    }

    pub fn value(&self, c: &[f64; 8]) -> Complex64 {
        let (re, im) = self.log_value(c);
        if re < UNDERFLOW_EXPONENT {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::from_polar(re.exp(), im)
    }

    /// `ln J` analytically continued to complex coordinates.
    pub fn log_value_complex(&self, c: &[Complex64; 8]) -> Complex64 {
        let (phase, damping) = quadratic_forms(c);
        Complex64::new(self.log_prefactor, 0.0) - damping * self.damping_coeff
            + Complex64::new(0.0, self.phase_coeff) * phase
    }
}

/// Evaluates the two-particle density-matrix propagator `J`.
pub fn evaluate_propagator(pt: &PropagatorPoint, p: &CslParams) -> Result<Complex64> {
    Ok(Kernel::new(p, pt.t)?.value(&pt.coords()))
}

/// The three bracket contributions to the peak spreads, each already
/// multiplied by `sigma^2 / 2` so they are variances in m².
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceTerms {
    /// `2 D t^3 / (3 m^2)`: collapse-induced, centre of mass only.
    pub collapse: f64,
    /// `(sigma^2/2) hbar^2 t^2 / (4 m^2 sigma^4)`: free quantum spreading.
    pub dispersion: f64,
    /// `sigma^2 / 2`: initial width.
    pub initial: f64,
    /// The bare ratio `hbar^2 t^2 / (4 m^2 sigma^4)`.
    pub dispersion_ratio: f64,
}

impl VarianceTerms {
    pub fn var_x(&self) -> f64 {
        self.initial * (self.collapse / self.initial + self.dispersion_ratio + 1.0)
    }

    pub fn var_rel(&self) -> f64 {
        self.initial * (self.dispersion_ratio + 1.0)
    }
}

pub fn variance_terms(setup: &ExperimentSetup, p: &CslParams) -> VarianceTerms {
    let m = p.mass();
    let t = setup.t_flight;
    let s2 = setup.sigma * setup.sigma;
    let initial = s2 / 2.0;
    let dispersion_ratio = HBAR * HBAR * t * t / (4.0 * m * m * s2 * s2);
    VarianceTerms {
        collapse: sigma2_csl(setup, p),
        dispersion: initial * dispersion_ratio,
        initial,
        dispersion_ratio,
    }
}

/// Collapse-induced excess of the centre-of-mass variance, `2 D t^3 / (3 m^2)`.
pub fn sigma2_csl(setup: &ExperimentSetup, p: &CslParams) -> f64 {
    let m = p.mass();
    let t = setup.t_flight;
    2.0 * p.diffusion() * t * t * t / (3.0 * m * m)
}

/// Two-peak joint distribution of the measured positions in `(X, xi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JointDistribution {
    mu: f64,
    var_x: f64,
    var_rel: f64,
    sigma_x: f64,
    sigma_rel: f64,
    validity_flag: bool,
    terms: VarianceTerms,
}

impl JointDistribution {
    /// Builds a distribution directly from its spreads (m²).
    pub fn from_variances(mu: f64, var_x: f64, var_rel: f64) -> Self {
        let sigma_rel = var_rel.sqrt();
        Self {
            mu,
            var_x,
            var_rel,
            sigma_x: var_x.sqrt(),
            sigma_rel,
            validity_flag: mu >= PEAK_SEPARATION_SIGMAS * sigma_rel,
            terms: VarianceTerms {
                collapse: var_x - var_rel,
                dispersion: f64::NAN,
                initial: f64::NAN,
                dispersion_ratio: f64::NAN,
            },
        }
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma_x(&self) -> f64 {
        self.sigma_x
    }

    /// Spread of `xi/2` about each peak.
    pub fn sigma_rel(&self) -> f64 {
        self.sigma_rel
    }

    pub fn var_x(&self) -> f64 {
        self.var_x
    }

    pub fn var_rel(&self) -> f64 {
        self.var_rel
    }

    /// True when the peaks sit at least five relative spreads from the origin,
    /// so that dropping the interference term between them is justified.
    pub fn validity_flag(&self) -> bool {
        self.validity_flag
    }

    pub fn terms(&self) -> &VarianceTerms {
        &self.terms
    }

    /// Height of one peak, `1 / (8 pi sigma_X sigma_rel)`.
    pub fn peak_height(&self) -> f64 {
        1.0 / (8.0 * PI * self.sigma_x * self.sigma_rel)
    }
}

pub fn joint_distribution(setup: &ExperimentSetup, p: &CslParams) -> Result<JointDistribution> {
    let setup = setup.validated()?;
    if setup.localization_regime(p) == LocalizationRegime::Invalid {
        return Err(Error::ModelDomain(format!(
            "localization length {:.3e} m is shorter than the trap separation {:.3e} m",
            p.localization_length(),
            2.0 * setup.mu
        )));
    }
    let terms = variance_terms(&setup, p);
    let var_x = terms.var_x();
    let var_rel = terms.var_rel();
    let sigma_rel = var_rel.sqrt();
    Ok(JointDistribution {
        mu: setup.mu,
        var_x,
        var_rel,
        sigma_x: var_x.sqrt(),
        sigma_rel,
        validity_flag: setup.mu >= PEAK_SEPARATION_SIGMAS * sigma_rel,
        terms,
    })
}

/// Joint density of `(X, xi)` in m⁻², interference term omitted.
pub fn pdf(jd: &JointDistribution, x: f64, xi: f64) -> f64 {
    let h = xi / 2.0;
    let gx = (-x * x / (2.0 * jd.var_x)).exp();
    let up = (-(h - jd.mu) * (h - jd.mu) / (2.0 * jd.var_rel)).exp();
    let down = (-(h + jd.mu) * (h + jd.mu) / (2.0 * jd.var_rel)).exp();
    jd.peak_height() * gx * (up + down)
}

/// `(x1, x2) -> (X, xi)` with `X = (x1 + x2)/2`, `xi = x1 - x2`.
pub fn cm_rel_transform(x1: f64, x2: f64) -> (f64, f64) {
    ((x1 + x2) / 2.0, x1 - x2)
}

/// Inverse of [`cm_rel_transform`].
pub fn cm_rel_inverse(x: f64, xi: f64) -> (f64, f64) {
    (x + xi / 2.0, x - xi / 2.0)
}
