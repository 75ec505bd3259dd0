use std::path::Path;

use cslwalk::analytic::{joint_distribution, pdf};
use cslwalk::feasibility::{
    self, accessible_region, collapse_variance, envelope, max_internal_temperature,
    max_internal_temperature_exact, max_pressure, max_pressure_exact, parse_polygon_csv,
    pressure_chain, scan, sigma2_rad, ExactInputs, Grid, Variant, Window,
};
use cslwalk::montecarlo::{
    detection_power, estimate_variances, required_samples, required_samples_exact, sample_trials,
    var_of_s2x, CSV_HEADER,
};
use cslwalk::oracle::{
    closed_form, moment_ode_evolve, pde_residual_with, points_near_peaks,
    quadrature_propagate_many, residual_at, GridSpec, QuadratureOptions, REFERENCE_COORDS,
};
use cslwalk::paramfile::Resolved;
use cslwalk::units::{AMU, T0};
use cslwalk::{analytic::PropagatorPoint, Error, Result};
use serde_json::{json, Value};

use crate::args::Command;
use crate::report::{quantity_rows, Quantity, Report, QUANTITY_HEADER};

const F_DIFFUSION: &str = "D = hbar^2 lambda alpha (m/m0)^2 / 4, m0 = 1 amu";
const F_VAR_X: &str =
    "sigma_X^2 = (sigma^2/2)(4 D t^3/(3 m^2 sigma^2) + hbar^2 t^2/(4 m^2 sigma^4) + 1)";
const F_VAR_REL: &str = "sigma_rel^2 = (sigma^2/2)(hbar^2 t^2/(4 m^2 sigma^4) + 1)";
const F_CSL: &str = "sigma_CSL^2 = 2 D t^3/(3 m^2) = sigma_X^2 - sigma_rel^2";
const F_RATIO: &str = "hbar^2 t^2/(4 m^2 sigma^4)";
const F_VAR_S2X: &str = "Var[s_X^2] = 2 (sigma_X^2 + sigma_err^2/2)^2/(n - 1)";
const F_N_MIN: &str = "n > 2 (100/(lambda alpha) + 10)^2 + 1";
const F_N_EXACT: &str = "smallest n with sqrt(Var[s_X^2]) <= sigma_CSL^2/10";
const F_T_MAX: &str = "T_i < 73 (lambda alpha)^(1/6) K";
const F_T_EXACT: &str = "T_i solving 4.0e-43 D^-2 R^-3 T_i^6 t^3 = sigma_CSL^2/10";
const F_P_MAX: &str = "P < 0.8 / (2 (100/(lambda alpha) + 10)^2 + 1) pTorr";
const F_P_EXACT: &str = "P solving 2 sqrt(T_e/T0)/P = 10 n t with the exact n";
const F_RAD: &str = "sigma_RAD^2 = 4.0e-43 D^-2 R^-3 T_i^6 t^3";
const F_TAU: &str = "tau_c = 2 sqrt(T_e/T0) / P, P in pTorr";
const F_PDF: &str = "N(X; 0, sigma_X^2) [N(xi/2; mu, sigma_rel^2) + N(xi/2; -mu, sigma_rel^2)] / 4";
const F_QUAD: &str =
    "Gauss-Hermite quadrature of the propagator against the two-trap initial state";
const F_RESID: &str = "|d rho/dt - rhs| / max(|d rho/dt|, eps), central differences";
const F_TRIALS: &str = "X ~ N(0, sigma_X^2), xi/2 ~ N(+-mu, sigma_rel^2), x_i += N(0, sigma_err^2)";
const F_S2: &str = "unbiased sample variances of X_meas and xi_meas/2 - c_k";
const F_POWER: &str = "fraction of runs with s_X^2 - s_rel^2 > k sqrt(2 Var0[s_X^2])";
const F_REGION: &str = "lambda alpha >= lambda_alpha_min and alpha <= alpha_max";

fn params_json(r: &Resolved, seed: u64) -> Value {
    json!({
        "lambda": r.csl.lambda(),
        "alpha": r.csl.alpha(),
        "lambda_alpha": r.csl.lambda_alpha(),
        "mass_kg": r.csl.mass(),
        "mass_amu": r.csl.mass() / AMU,
        "diffusion": r.csl.diffusion(),
        "sigma_m": r.setup.sigma,
        "mu_m": r.setup.mu,
        "t_flight_s": r.setup.t_flight,
        "sigma_err_m": r.setup.sigma_err,
        "n_samples": r.setup.n_samples,
        "temperature_ext_K": r.setup.temperature_ext,
        "pressure_torr": r.setup.pressure,
        "radius_m": r.sphere.radius,
        "density_kg_m3": r.sphere.density,
        "internal_temperature_K": r.sphere.internal_temperature,
        "seed": seed,
    })
}

fn quantities(
    command: &'static str,
    params: Value,
    q: Vec<Quantity>,
    formulas: Vec<(&'static str, &'static str)>,
    summary: String,
) -> Report {
    let (rows, results) = quantity_rows(&q);
    Report {
        command,
        params,
        header: QUANTITY_HEADER,
        rows,
        results,
        formulas,
        summary,
    }
}

fn parse_window(text: &str, what: &'static str) -> Result<(f64, f64)> {
    let bad = || {
        Error::Parse(format!(
            "{what} window `{text}`: expected lo:hi with lo < hi"
        ))
    };
    let (a, b) = text.split_once(':').ok_or_else(bad)?;
    let lo: f64 = a.trim().parse().map_err(|_| bad())?;
    let hi: f64 = b.trim().parse().map_err(|_| bad())?;
    if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) || !lo.is_finite() || !hi.is_finite() {
        return Err(bad());
    }
    Ok((lo, hi))
}

pub fn run(command: &Command, r: &Resolved, seed: u64) -> Result<Report> {
    let params = params_json(r, seed);
    let name = command.name();
    match command {
        Command::Variances => {
            let jd = joint_distribution(&r.setup, &r.csl)?;
            let t = jd.terms();
            let q = vec![
                Quantity {
                    quantity: "diffusion",
                    value: r.csl.diffusion(),
                    unit: "J^2 s m^-2",
                },
                Quantity {
                    quantity: "sigma2_x",
                    value: jd.var_x(),
                    unit: "m^2",
                },
                Quantity {
                    quantity: "sigma2_rel",
                    value: jd.var_rel(),
                    unit: "m^2",
                },
                Quantity {
                    quantity: "sigma2_csl",
                    value: t.collapse,
                    unit: "m^2",
                },
                Quantity {
                    quantity: "dispersion_ratio",
                    value: t.dispersion_ratio,
                    unit: "1",
                },
                Quantity {
                    quantity: "var_s2x",
                    value: var_of_s2x(&r.setup, &r.csl)?,
                    unit: "m^4",
                },
                Quantity {
                    quantity: "peaks_resolved",
                    value: f64::from(u8::from(jd.validity_flag())),
                    unit: "bool",
                },
            ];
            let summary = format!(
                "sigma_X^2 = {:.4e} m^2, sigma_rel^2 = {:.4e} m^2",
                jd.var_x(),
                jd.var_rel()
            );
            Ok(quantities(
                name,
                params,
                q,
                vec![
                    ("diffusion", F_DIFFUSION),
                    ("sigma2_x", F_VAR_X),
                    ("sigma2_rel", F_VAR_REL),
                    ("sigma2_csl", F_CSL),
                    ("dispersion_ratio", F_RATIO),
                    ("var_s2x", F_VAR_S2X),
                    ("peaks_resolved", "mu >= 5 sigma_rel"),
                ],
                summary,
            ))
        }

        Command::PropagateCheck {
            points_per_peak,
            order,
            max_order,
            tolerance,
        } => {
            let jd = joint_distribution(&r.setup, &r.csl)?;
            let opts = QuadratureOptions {
                order: *order,
                max_order: *max_order,
                tolerance: *tolerance,
            };
            let points = points_near_peaks(jd.mu(), jd.sigma_x(), jd.sigma_rel(), *points_per_peak);
            let est = quadrature_propagate_many(&r.setup, &r.csl, &points, &opts)?;
            let t = r.setup.t_flight;
            let moments = moment_ode_evolve(&r.setup, &r.csl, t, t / 1000.0)?;
            let mut worst = 0.0f64;
            let mut rows = Vec::with_capacity(points.len());
            let mut results = Vec::with_capacity(points.len() + 1);
            for (&(x, xi), e) in points.iter().zip(&est) {
                let a = pdf(&jd, x, xi);
                let rel = (e.density - a).abs() / a;
                worst = worst.max(rel);
                rows.push(vec![
                    format!("{x:e}"),
                    format!("{xi:e}"),
                    format!("{:e}", e.density),
                    format!("{a:e}"),
                    format!("{rel:e}"),
                    e.order.to_string(),
                ]);
                results.push(json!({
                    "X_m": x, "xi_m": xi, "quadrature_m2": e.density, "analytic_m2": a,
                    "rel_error": rel, "order": e.order,
                }));
            }
            let ode_x = (moments.var_x / jd.var_x() - 1.0).abs();
            let ode_rel = (moments.var_rel / jd.var_rel() - 1.0).abs();
            results.push(json!({
                "moment_ode": {
                    "var_x": moments.var_x, "var_rel": moments.var_rel,
                    "rel_error_x": ode_x, "rel_error_rel": ode_rel,
                }
            }));
            Ok(Report {
                command: name,
                params,
                header: "X_m,xi_m,quadrature_m2,analytic_m2,rel_error,order",
                rows,
                results,
                formulas: vec![("quadrature_m2", F_QUAD), ("analytic_m2", F_PDF), ("moment_ode", "RK4 on the second-moment equations")],
                summary: format!(
                    "quadrature max rel error {worst:.3e} over {} points; moment ODE rel error {:.3e} (X), {:.3e} (xi/2)",
                    points.len(),
                    ode_x,
                    ode_rel
                ),
            })
        }

        Command::ResidualCheck {
            at_time_s,
            fd_step_m,
            dt_s,
            half_width_m,
            points_per_axis,
        } => {
            let g = GridSpec::new(*half_width_m, *points_per_axis, *fd_step_m, *dt_s)?;
            let center = PropagatorPoint::from_coords(REFERENCE_COORDS, *at_time_s);
            let points = g.points_around(&center);
            let clean = pde_residual_with(closed_form(&r.csl, 1.0), &r.csl, &points, &g)?;
            let fine = g.refined();
            let corrupted = residual_at(
                &closed_form(&r.csl, 1.01),
                &r.csl,
                &center,
                fine.fd_step,
                fine.dt,
                0.0,
            )?;
            let rows = vec![
                vec![
                    format!("{:e}", g.fd_step),
                    format!("{:e}", g.dt),
                    format!("{:e}", clean.residual_coarse),
                ],
                vec![
                    format!("{:e}", fine.fd_step),
                    format!("{:e}", fine.dt),
                    format!("{:e}", clean.residual_fine),
                ],
            ];
            let results = vec![json!({
                "residual_coarse": clean.residual_coarse,
                "residual_fine": clean.residual_fine,
                "ratio": clean.ratio,
                "order": clean.order,
                "points": clean.points,
                "corrupted_residual_fine": corrupted,
            })];
            Ok(Report {
                command: name,
                params,
                header: "fd_step_m,dt_s,residual",
                rows,
                results,
                formulas: vec![
                    ("residual", F_RESID),
                    ("order", "log2(residual(h) / residual(h/2))"),
                ],
                summary: format!(
                    "residual {:.3e} -> {:.3e}, order {:.3}; D x 1.01 kernel gives {:.3e}",
                    clean.residual_coarse, clean.residual_fine, clean.order, corrupted
                ),
            })
        }

        Command::Simulate => {
            let n = usize::try_from(r.setup.n_samples).map_err(|_| Error::ParameterDomain {
                field: "n",
                value: r.setup.n_samples as f64,
                reason: "too large",
            })?;
            let trials = sample_trials(&r.setup, &r.csl, seed, n)?;
            let est = estimate_variances(&trials, r.setup.mu)?;
            let rows = trials
                .iter()
                .enumerate()
                .map(|(k, t)| {
                    vec![
                        k.to_string(),
                        t.component.to_string(),
                        format!("{:e}", t.x1_meas),
                        format!("{:e}", t.x2_meas),
                        format!("{:e}", t.x_meas),
                        format!("{:e}", t.xi_meas),
                    ]
                })
                .collect();
            let results = trials
                .iter()
                .enumerate()
                .map(|(k, t)| {
                    json!({
                        "trial": k, "component": t.component.sign() as i8,
                        "x1_m": t.x1_meas, "x2_m": t.x2_meas, "X_m": t.x_meas, "xi_m": t.xi_meas,
                    })
                })
                .collect();
            Ok(Report {
                command: name,
                params,
                header: CSV_HEADER,
                rows,
                results,
                formulas: vec![("trials", F_TRIALS), ("summary", F_S2)],
                summary: format!(
                    "{} trials: s_X^2 = {:.4e} m^2, s_rel^2 = {:.4e} m^2, difference {:.4e} m^2",
                    est.n, est.s2_x, est.s2_rel, est.s2_diff
                ),
            })
        }

        Command::Power {
            repetitions,
            threshold_sigmas,
        } => {
            let d = detection_power(&r.setup, &r.csl, *repetitions, seed, *threshold_sigmas)?;
            let q = vec![
                Quantity {
                    quantity: "power",
                    value: d.power,
                    unit: "1",
                },
                Quantity {
                    quantity: "false_positive_rate",
                    value: d.false_positive_rate,
                    unit: "1",
                },
                Quantity {
                    quantity: "threshold",
                    value: d.threshold,
                    unit: "m^2",
                },
                Quantity {
                    quantity: "repetitions",
                    value: d.repetitions as f64,
                    unit: "1",
                },
                Quantity {
                    quantity: "n",
                    value: d.n as f64,
                    unit: "1",
                },
            ];
            let summary = format!(
                "power {:.4}, false-positive rate {:.4} over {} runs of n = {}",
                d.power, d.false_positive_rate, d.repetitions, d.n
            );
            Ok(quantities(
                name,
                params,
                q,
                vec![
                    ("power", F_POWER),
                    ("false_positive_rate", F_POWER),
                    ("threshold", "k sqrt(2 Var0[s_X^2])"),
                ],
                summary,
            ))
        }

        Command::Feasibility => {
            let la = r.csl.lambda_alpha();
            let t_round = max_internal_temperature(la)?;
            let t_exact = max_internal_temperature_exact(la, &r.sphere)?;
            let p_round = max_pressure(la)?;
            let chain = max_pressure_exact(la, r.csl.alpha(), r.csl.mass(), &r.setup)?;
            let n_round = required_samples(la)?;
            let n_exact = required_samples_exact(&r.setup, &r.csl)?;
            let t = r.setup.t_flight;
            let signal = collapse_variance(la, t);
            let rad_round = sigma2_rad(&r.sphere.with_temperature(t_round)?, t)?;
            let rad_exact = sigma2_rad(&r.sphere.with_temperature(t_exact)?, t)?;
            let tau = feasibility::collision_time(p_round * 1e12, r.setup.temperature_ext / T0)?;
            let rounded_chain = pressure_chain(n_round as f64, t, 1.0)?;
            let q = vec![
                Quantity {
                    quantity: "n_min",
                    value: n_round as f64,
                    unit: "1",
                },
                Quantity {
                    quantity: "n_min_exact",
                    value: n_exact as f64,
                    unit: "1",
                },
                Quantity {
                    quantity: "t_i_max",
                    value: t_round,
                    unit: "K",
                },
                Quantity {
                    quantity: "t_i_max_exact",
                    value: t_exact,
                    unit: "K",
                },
                Quantity {
                    quantity: "p_max",
                    value: p_round,
                    unit: "Torr",
                },
                Quantity {
                    quantity: "p_max_exact",
                    value: chain.p_max_torr,
                    unit: "Torr",
                },
                Quantity {
                    quantity: "sigma2_rad_at_t_i_max",
                    value: rad_round,
                    unit: "m^2",
                },
                Quantity {
                    quantity: "sigma2_rad_over_margin",
                    value: rad_round / (signal / 10.0),
                    unit: "1",
                },
                Quantity {
                    quantity: "sigma2_rad_over_margin_exact",
                    value: rad_exact / (signal / 10.0),
                    unit: "1",
                },
                Quantity {
                    quantity: "collision_time_at_p_max",
                    value: tau,
                    unit: "s",
                },
                Quantity {
                    quantity: "required_run_margin",
                    value: rounded_chain.min_collision_time,
                    unit: "s",
                },
            ];
            let summary = format!(
                "lambda*alpha = {la:e}: n = {n_round} (exact {n_exact}), T_i < {t_round:.4} K (exact {t_exact:.4} K), P < {p_round:.4e} Torr"
            );
            Ok(quantities(
                name,
                params,
                q,
                vec![
                    ("n_min", F_N_MIN),
                    ("n_min_exact", F_N_EXACT),
                    ("t_i_max", F_T_MAX),
                    ("t_i_max_exact", F_T_EXACT),
                    ("p_max", F_P_MAX),
                    ("p_max_exact", F_P_EXACT),
                    ("sigma2_rad_at_t_i_max", F_RAD),
                    (
                        "sigma2_rad_over_margin",
                        "sigma_RAD^2(T_i max) / (sigma_CSL^2/10)",
                    ),
                    (
                        "sigma2_rad_over_margin_exact",
                        "sigma_RAD^2(T_i exact) / (sigma_CSL^2/10)",
                    ),
                    ("collision_time_at_p_max", F_TAU),
                    ("required_run_margin", "10 n t"),
                ],
                summary,
            ))
        }

        Command::Scan { grid, variant } => scan_report(name, params, grid, *variant, r),

        Command::Region {
            alpha_max,
            lambda_alpha_min,
            per_axis,
            log10_lambda,
            log10_alpha,
            exclusion,
        } => {
            let mut region = accessible_region(*alpha_max, *lambda_alpha_min)?;
            if let Some(path) = exclusion {
                region = region.with_exclusion(parse_polygon_csv(&read(path)?)?)?;
            }
            if *per_axis < 2 {
                return Err(Error::ParameterDomain {
                    field: "per_axis",
                    value: *per_axis as f64,
                    reason: "must be >= 2",
                });
            }
            let window = Window {
                log10_lambda: parse_window(log10_lambda, "log10_lambda")?,
                log10_alpha: parse_window(log10_alpha, "log10_alpha")?,
            };
            let raster = region.raster(&window, *per_axis);
            let inside = raster.iter().filter(|c| c.2).count();
            let here = region.contains(r.csl.lambda(), r.csl.alpha());
            let rows = raster
                .iter()
                .map(|(ll, la, i)| vec![format!("{ll}"), format!("{la}"), i.to_string()])
                .collect();
            let results = vec![json!({
                "raster": raster.iter().map(|(ll, la, i)| json!({"log10_lambda": ll, "log10_alpha": la, "inside": i})).collect::<Vec<_>>(),
                "boundary": region.boundary(&window).iter().map(|(ll, la)| json!([ll, la])).collect::<Vec<_>>(),
                "point": {"lambda": r.csl.lambda(), "alpha": r.csl.alpha(), "inside": here},
            })];
            Ok(Report {
                command: name,
                params,
                header: feasibility::REGION_CSV_HEADER,
                rows,
                results,
                formulas: vec![("inside", F_REGION)],
                summary: format!(
                    "{inside} of {} raster points accessible; (lambda = {:e}, alpha = {:e}) is {}",
                    raster.len(),
                    r.csl.lambda(),
                    r.csl.alpha(),
                    if here { "inside" } else { "outside" }
                ),
            })
        }
    }
}

fn scan_report(
    name: &'static str,
    params: Value,
    grid: &Grid,
    variant: Variant,
    r: &Resolved,
) -> Result<Report> {
    let inputs = ExactInputs {
        setup: r.setup,
        mass: r.csl.mass(),
        alpha: r.csl.alpha(),
        sphere: r.sphere,
    };
    let values = grid.values();
    let rows_env = scan(&values, variant, &inputs)?;
    let rows = rows_env
        .iter()
        .map(|e| {
            vec![
                format!("{:e}", e.lambda_alpha),
                e.n_min.to_string(),
                format!("{:e}", e.t_i_max),
                format!("{:e}", e.p_max),
            ]
        })
        .collect();
    let results = rows_env
        .iter()
        .map(|e| serde_json::to_value(e).expect("plain struct"))
        .collect();
    let (n_f, t_f, p_f) = match variant {
        Variant::Rounded => (F_N_MIN, F_T_MAX, F_P_MAX),
        Variant::Exact => (F_N_EXACT, F_T_EXACT, F_P_EXACT),
    };
    let head = envelope(values[0], variant, &inputs)?;
    Ok(Report {
        command: name,
        params,
        header: feasibility::SCAN_CSV_HEADER,
        rows,
        results,
        formulas: vec![("n_min", n_f), ("t_i_max_K", t_f), ("p_max_torr", p_f)],
        summary: format!(
            "{} grid points over {grid}; first: n = {}, T_i < {:.4} K, P < {:.4e} Torr",
            values.len(),
            head.n_min,
            head.t_i_max,
            head.p_max
        ),
    })
}

pub fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
