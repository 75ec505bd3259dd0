//! C ABI over the `cslwalk` library.
//!
//! Conventions:
//! * every fallible call returns a [`CslwalkStatus`] and writes results
//!   through out-pointers, which are left untouched on failure;
//! * objects are opaque handles created by `*_new` and released by `*_free`;
//!   `*_free` accepts null;
//! * the message of the last failure on the calling thread is available from
//!   [`cslwalk_last_error_message`];
//! * panics never cross the boundary; they surface as
//!   `CSLWALK_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use cslwalk::analytic::{joint_distribution, pdf, sigma2_csl, Kernel};
use cslwalk::feasibility::{self, AccessibleRegion, SphereParams};
use cslwalk::montecarlo::{self, TrialRecord};
use cslwalk::units::{AMU, NM};
use cslwalk::{CslParams, Error, ExperimentSetup};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CslwalkStatus {
    Ok = 0,
    NullPointer = 1,
    ParameterDomain = 2,
    Unit = 3,
    ModelDomain = 4,
    InsufficientData = 5,
    OracleDivergence = 6,
    Parse = 7,
    Io = 8,
    Panic = 9,
}

impl From<&Error> for CslwalkStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::ParameterDomain { .. } => CslwalkStatus::ParameterDomain,
            Error::Unit(_) => CslwalkStatus::Unit,
            Error::ModelDomain(_) => CslwalkStatus::ModelDomain,
            Error::InsufficientData(_) => CslwalkStatus::InsufficientData,
            Error::OracleDivergence { .. } => CslwalkStatus::OracleDivergence,
            Error::Parse(_) => CslwalkStatus::Parse,
            Error::Io(_) => CslwalkStatus::Io,
        }
    }
}

/// Collapse parameters. Opaque.
pub struct CslwalkParams(CslParams);

/// Experiment configuration. Opaque.
pub struct CslwalkSetup(ExperimentSetup);

/// A set of simulated trials. Opaque.
pub struct CslwalkTrials(Vec<TrialRecord>);

/// One simulated trial; positions in metres.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CslwalkTrial {
    /// +1 or -1: sign of the realised `xi/2` peak.
    pub component: i32,
    pub x1_meas: f64,
    pub x2_meas: f64,
    pub x_meas: f64,
    pub xi_meas: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CslwalkVarianceEstimate {
    pub s2_x: f64,
    pub s2_rel: f64,
    pub s2_diff: f64,
    pub n: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CslwalkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CslwalkStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            CslwalkStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(format!("{}: {e}", e.category()));
            CslwalkStatus::from(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            CslwalkStatus::Panic
        }
    }
}

/// # Safety
/// `p` is null or valid for reads of `T`.
unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

/// # Safety
/// `p` is null or valid for writes of `T`.
unsafe fn put<T>(p: *mut T, v: T, what: &'static str) -> Result<(), Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    p.write(v);
    Ok(())
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len - 1` bytes) and returns its full length in bytes.
/// With `buf` null or `len` 0 only the length is returned.
///
/// # Safety
/// `buf` is null or valid for `len` bytes of writes.
#[no_mangle]
pub unsafe extern "C" fn cslwalk_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            buf.add(n).write(0);
        }
        msg.len()
    })
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn cslwalk_status_name(status: CslwalkStatus) -> *const c_char {
    let s: &'static CStr = match status {
        CslwalkStatus::Ok => c"ok",
        CslwalkStatus::NullPointer => c"null-pointer",
        CslwalkStatus::ParameterDomain => c"parameter-domain",
        CslwalkStatus::Unit => c"unit",
        CslwalkStatus::ModelDomain => c"model-domain",
        CslwalkStatus::InsufficientData => c"insufficient-data",
        CslwalkStatus::OracleDivergence => c"oracle-divergence",
        CslwalkStatus::Parse => c"parse",
        CslwalkStatus::Io => c"io",
        CslwalkStatus::Panic => c"panic",
    };
    s.as_ptr()
}

/// Collapse parameters from rate (s⁻¹), alpha (m⁻²) and mass (amu).
///
/// # Safety
/// `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cslwalk_params_new(
    lambda: f64,
    alpha: f64,
    mass_amu: f64,
    out: *mut *mut CslwalkParams,
) -> CslwalkStatus {
    guard(|| {
        let p = cslwalk::make_csl_params(lambda, alpha, mass_amu)?;
        put(out, Box::into_raw(Box::new(CslwalkParams(p))), "out")
    })
}

/// Collapse parameters from `lambda * alpha` (m⁻² s⁻¹), alpha and mass (amu).
///
/// # Safety
/// `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cslwalk_params_from_lambda_alpha(
    lambda_alpha: f64,
    alpha: f64,
    mass_amu: f64,
    out: *mut *mut CslwalkParams,
) -> CslwalkStatus {
    guard(|| {
        let p = CslParams::from_lambda_alpha(lambda_alpha, alpha, mass_amu * AMU)?;
        put(out, Box::into_raw(Box::new(CslwalkParams(p))), "out")
    })
}

/// # Safety
/// `p` is null or a handle from `cslwalk_params_*` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cslwalk_params_free(p: *mut CslwalkParams) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Diffusion constant `D` (SI).
///
/// # Safety
/// Pointers valid or null.
#[no_mangle]
pub unsafe extern "C" fn cslwalk_params_diffusion(
    p: *const CslwalkParams,
    out: *mut f64,
) -> CslwalkStatus {
    guard(|| put(out, deref(p, "params")?.0.diffusion(), "out"))
}

/// `lambda * alpha` (m⁻² s⁻¹).
///
/// # Safety
/// Pointers valid or null.
#[no_mangle]
pub unsafe extern "C" fn cslwalk_params_lambda_alpha(
    p: *const CslwalkParams,
    out: *mut f64,
) -> CslwalkStatus {
    guard(|| put(out, deref(p, "params")?.0.lambda_alpha(), "out"))
}

/// Experiment setup; lengths in nm, time in s.
///
/// # Safety
/// `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cslwalk_setup_new(
    sigma_nm: f64,
    mu_nm: f64,
    t_flight_s: f64,
    sigma_err_nm: f64,
    n_samples: u64,
    out: *mut *mut CslwalkSetup,
) -> CslwalkStatus {
    guard(|| {
        let s = ExperimentSetup::new(
            sigma_nm * NM,
            mu_nm * NM,
            t_flight_s,
            sigma_err_nm * NM,
            n_samples,
        )?;
        put(out, Box::into_raw(Box::new(CslwalkSetup(s))), "out")
    })
}

/// The design setup: 10 nm traps 1 mm apart, 0.25 s, 10 nm readout, 24201 drops.
///
/// # Safety
/// `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cslwalk_setup_default(out: *mut *mut CslwalkSetup) -> CslwalkStatus {
    guard(|| {
        put(
            out,
            Box::into_raw(Box::new(CslwalkSetup(ExperimentSetup::default()))),
            "out",
        )
    })
}

/// # Safety
/// `s` is null or a handle from `cslwalk_setup_*` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cslwalk_setup_free(s: *mut CslwalkSetup) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Peak spreads `sigma_X^2` and `sigma_rel^2` (m²).
///
/// # Safety
/// Pointers valid or null.
#[no_mangle]
pub unsafe extern "C" fn cslwalk_variances(
    setup: *const CslwalkSetup,
    params: *const CslwalkParams,
    var_x: *mut f64,
    var_rel: *mut f64,
) -> CslwalkStatus {
    guard(|| {
        if var_x.is_null() || var_rel.is_null() {
            return Err(Fail::Null("out"));
        }
        let jd = joint_distribution(&deref(setup, "setup")?.0, &deref(params, "params")?.0)?;
        put(var_x, jd.var_x(), "var_x")?;
        put(var_rel, jd.var_rel(), "var_rel")
    })
}

/// Collapse excess `sigma_X^2 - sigma_rel^2` (m²).
///
/// # Safety
/// Pointers valid or null.
#[no_mangle]
pub unsafe extern "C" fn cslwalk_sigma2_csl(
    setup: *const CslwalkSetup,
    params: *const CslwalkParams,
    out: *mut f64,
) -> CslwalkStatus {
    guard(|| {
        put(
            out,
            sigma2_csl(&deref(setup, "setup")?.0, &deref(params, "params")?.0),
            "out",
        )
    })
}

/// Joint density of `(X, xi)` (m⁻²).
///
/// # Safety
/// Pointers valid or null.
#[no_mangle]
pub unsafe extern "C" fn cslwalk_pdf(
    setup: *const CslwalkSetup,
    params: *const CslwalkParams,
    x: f64,
    xi: f64,
    out: *mut f64,
) -> CslwalkStatus {
    guard(|| {
        let jd = joint_distribution(&deref(setup, "setup")?.0, &deref(params, "params")?.0)?;
        put(out, pdf(&jd, x, xi), "out")
    })
}

/// Propagator `J` at `coords = (x1, y1, x2, y2, x1', y1', x2', y2')` (m) and
/// time `t` (s), as real and imaginary parts.
///
/// # Safety
/// `coords` points at 8 doubles; other pointers valid or null.
#[no_mangle]
pub unsafe extern "C" fn cslwalk_propagator(
    params: *const CslwalkParams,
    coords: *const f64,
    t: f64,
    re: *mut f64,
    im: *mut f64,
) -> CslwalkStatus {
    guard(|| {
        if coords.is_null() {
            return Err(Fail::Null("coords"));
        }
        if re.is_null() || im.is_null() {
            return Err(Fail::Null("out"));
        }
        let c: [f64; 8] = std::ptr::read(coords.cast::<[f64; 8]>());
        let j = Kernel::new(&deref(params, "params")?.0, t)?.value(&c);
        put(re, j.re, "re")?;
        put(im, j.im, "im")
    })
}

/// Variance of the estimator `s_X^2` (m⁴).
///
/// # Safety
/// Pointers valid or null.
#[no_mangle]
pub unsafe extern "C" fn cslwalk_var_of_s2x(
    setup: *const CslwalkSetup,
    params: *const CslwalkParams,
    out: *mut f64,
) -> CslwalkStatus {
    guard(|| {
        put(
            out,
            montecarlo::var_of_s2x(&deref(setup, "setup")?.0, &deref(params, "params")?.0)?,
            "out",
        )
    })
}

/// Drops needed at `lambda * alpha` by the rounded design formula.
///
/// # Safety
/// `out` valid or null.
#[no_mangle]
pub unsafe extern "C" fn cslwalk_required_samples(
    lambda_alpha: f64,
    out: *mut u64,
) -> CslwalkStatus {
    guard(|| put(out, montecarlo::required_samples(lambda_alpha)?, "out"))
}

/// Drops needed for the setup and parameters from first principles.
///
/// # Safety
/// Pointers valid or null.
#[no_mangle]
pub unsafe extern "C" fn cslwalk_required_samples_exact(
    setup: *const CslwalkSetup,
    params: *const CslwalkParams,
    out: *mut u64,
) -> CslwalkStatus {
    guard(|| {
        put(
            out,
            montecarlo::required_samples_exact(
                &deref(setup, "setup")?.0,
                &deref(params, "params")?.0,
            )?,
            "out",
        )
    })
}

/// Rounded internal-temperature ceiling (K).
///
/// # Safety
/// `out` valid or null.
#[no_mangle]
pub unsafe extern "C" fn cslwalk_max_internal_temperature(
    lambda_alpha: f64,
    out: *mut f64,
) -> CslwalkStatus {
    guard(|| {
        put(
            out,
            feasibility::max_internal_temperature(lambda_alpha)?,
            "out",
        )
    })
}

/// Exact internal-temperature ceiling (K) for a sphere of `radius_m` and
/// `density` (kg m⁻³).
///
/// # Safety
/// `out` valid or null.
#[no_mangle]
pub unsafe extern "C" fn cslwalk_max_internal_temperature_exact(
    lambda_alpha: f64,
    radius_m: f64,
    density: f64,
    out: *mut f64,
) -> CslwalkStatus {
    guard(|| {
        let s = SphereParams::new(radius_m, density, 0.0)?;
        put(
            out,
            feasibility::max_internal_temperature_exact(lambda_alpha, &s)?,
            "out",
        )
    })
}

/// Rounded pressure ceiling (Torr).
///
/// # Safety
/// `out` valid or null.
#[no_mangle]
pub unsafe extern "C" fn cslwalk_max_pressure_torr(
    lambda_alpha: f64,
    out: *mut f64,
) -> CslwalkStatus {
    guard(|| put(out, feasibility::max_pressure(lambda_alpha)?, "out"))
}

/// Mean time between gas collisions (s), pressure in pTorr.
///
/// # Safety
/// `out` valid or null.
#[no_mangle]
pub unsafe extern "C" fn cslwalk_collision_time(
    pressure_ptorr: f64,
    t_ext_ratio: f64,
    out: *mut f64,
) -> CslwalkStatus {
    guard(|| {
        put(
            out,
            feasibility::collision_time(pressure_ptorr, t_ext_ratio)?,
            "out",
        )
    })
}

/// Emission-recoil variance (m²).
///
/// # Safety
/// `out` valid or null.
#[no_mangle]
pub unsafe extern "C" fn cslwalk_sigma2_rad(
    radius_m: f64,
    density: f64,
    internal_temperature: f64,
    t: f64,
    out: *mut f64,
) -> CslwalkStatus {
    guard(|| {
        let s = SphereParams::new(radius_m, density, internal_temperature)?;
        put(out, feasibility::sigma2_rad(&s, t)?, "out")
    })
}

/// Whether `(lambda, alpha)` lies in the accessible region.
///
/// # Safety
/// `out` valid or null.
#[no_mangle]
pub unsafe extern "C" fn cslwalk_region_contains(
    lambda: f64,
    alpha: f64,
    alpha_max: f64,
    lambda_alpha_min: f64,
    out: *mut bool,
) -> CslwalkStatus {
    guard(|| {
        let r: AccessibleRegion = feasibility::accessible_region(alpha_max, lambda_alpha_min)?;
        put(out, r.contains(lambda, alpha), "out")
    })
}

/// Draws `n` trials with the given seed.
///
/// # Safety
/// Pointers valid or null.
#[no_mangle]
pub unsafe extern "C" fn cslwalk_sample_trials(
    setup: *const CslwalkSetup,
    params: *const CslwalkParams,
    seed: u64,
    n: usize,
    out: *mut *mut CslwalkTrials,
) -> CslwalkStatus {
    guard(|| {
        let t = montecarlo::sample_trials(
            &deref(setup, "setup")?.0,
            &deref(params, "params")?.0,
            seed,
            n,
        )?;
        put(out, Box::into_raw(Box::new(CslwalkTrials(t))), "out")
    })
}

/// Number of trials; 0 for null.
///
/// # Safety
/// `t` valid or null.
#[no_mangle]
pub unsafe extern "C" fn cslwalk_trials_len(t: *const CslwalkTrials) -> usize {
    t.as_ref().map_or(0, |t| t.0.len())
}

/// Copies trial `index` into `out`.
///
/// # Safety
/// Pointers valid or null.
#[no_mangle]
pub unsafe extern "C" fn cslwalk_trials_get(
    t: *const CslwalkTrials,
    index: usize,
    out: *mut CslwalkTrial,
) -> CslwalkStatus {
    guard(|| {
        let trials = &deref(t, "trials")?.0;
        let r = trials.get(index).ok_or(Error::ParameterDomain {
            field: "index",
            value: index as f64,
            reason: "past the end of the trial set",
        })?;
        put(
            out,
            CslwalkTrial {
                component: r.component.sign() as i32,
                x1_meas: r.x1_meas,
                x2_meas: r.x2_meas,
                x_meas: r.x_meas,
                xi_meas: r.xi_meas,
            },
            "out",
        )
    })
}

/// Variance estimators over a trial set, centring `xi/2` on `+-mu_nm`.
///
/// # Safety
/// Pointers valid or null.
#[no_mangle]
pub unsafe extern "C" fn cslwalk_trials_estimate(
    t: *const CslwalkTrials,
    mu_nm: f64,
    out: *mut CslwalkVarianceEstimate,
) -> CslwalkStatus {
    guard(|| {
        let e = montecarlo::estimate_variances(&deref(t, "trials")?.0, mu_nm * NM)?;
        put(
            out,
            CslwalkVarianceEstimate {
                s2_x: e.s2_x,
                s2_rel: e.s2_rel,
                s2_diff: e.s2_diff,
                n: e.n as u64,
            },
            "out",
        )
    })
}

/// # Safety
/// `t` is null or a handle from `cslwalk_sample_trials` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cslwalk_trials_free(t: *mut CslwalkTrials) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}
