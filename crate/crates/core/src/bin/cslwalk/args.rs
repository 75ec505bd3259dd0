use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cslwalk::feasibility::{Grid, Variant};
use cslwalk::paramfile::ParamSet;
use cslwalk::units::{AMU, NM, PICOTORR_PER_TORR};

#[derive(Debug, Parser)]
#[command(
    name = "cslwalk",
    version,
    about = "Correlated collapse-induced random walks: spreads, oracles, simulation and feasibility bounds"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,

    #[command(flatten)]
    pub physics: PhysicsOpts,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Parameter file (`key = value [unit]` per line); flags override it.
    #[arg(long, global = true, env = "CSLWALK_PARAMS")]
    pub params: Option<PathBuf>,

    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "CSLWALK_THREADS")]
    pub threads: Option<usize>,

    /// Output file, written atomically; stdout when absent.
    #[arg(long, global = true, env = "CSLWALK_OUTPUT")]
    pub output: Option<PathBuf>,

    #[arg(
        long,
        global = true,
        value_enum,
        default_value = "csv",
        env = "CSLWALK_FORMAT"
    )]
    pub format: Format,

    /// Print the formula behind each output column to stderr.
    #[arg(long, global = true, env = "CSLWALK_EXPLAIN")]
    pub explain: bool,

    #[arg(long, global = true, default_value_t = 42, env = "CSLWALK_SEED")]
    pub seed: u64,
}

/// Physical parameters with the unit in the flag name.
#[derive(Debug, Args, Default)]
pub struct PhysicsOpts {
    /// lambda * alpha (m^-2 s^-1); excludes --lambda.
    #[arg(
        long,
        global = true,
        env = "CSLWALK_LAMBDA_ALPHA",
        conflicts_with = "lambda"
    )]
    pub lambda_alpha: Option<f64>,

    /// Collapse rate (s^-1).
    #[arg(long, global = true, env = "CSLWALK_LAMBDA")]
    pub lambda: Option<f64>,

    /// Inverse squared localization length (m^-2).
    #[arg(long, global = true, env = "CSLWALK_ALPHA")]
    pub alpha: Option<f64>,

    #[arg(long, global = true, env = "CSLWALK_MASS_AMU")]
    pub mass_amu: Option<f64>,

    /// Trap width (nm).
    #[arg(long, global = true, env = "CSLWALK_SIGMA_NM")]
    pub sigma_nm: Option<f64>,

    /// Trap half-separation (nm).
    #[arg(long, global = true, env = "CSLWALK_MU_NM")]
    pub mu_nm: Option<f64>,

    /// Free-flight time (s).
    #[arg(long, global = true, env = "CSLWALK_TIME_S")]
    pub time_s: Option<f64>,

    /// Position readout error (nm).
    #[arg(long, global = true, env = "CSLWALK_SIGMA_ERR_NM")]
    pub sigma_err_nm: Option<f64>,

    /// Trials per experiment.
    #[arg(long, global = true, env = "CSLWALK_N")]
    pub n: Option<u64>,

    #[arg(long, global = true, env = "CSLWALK_TEMPERATURE_EXT_K")]
    pub temperature_ext_k: Option<f64>,

    #[arg(long, global = true, env = "CSLWALK_PRESSURE_PTORR")]
    pub pressure_ptorr: Option<f64>,

    /// Sphere radius (nm).
    #[arg(long, global = true, env = "CSLWALK_RADIUS_NM")]
    pub radius_nm: Option<f64>,

    /// Sphere density (kg m^-3).
    #[arg(long, global = true, env = "CSLWALK_DENSITY_KG_M3")]
    pub density_kg_m3: Option<f64>,

    #[arg(long, global = true, env = "CSLWALK_INTERNAL_TEMPERATURE_K")]
    pub internal_temperature_k: Option<f64>,
}

impl PhysicsOpts {
    pub fn to_param_set(&self) -> ParamSet {
        ParamSet {
            lambda: self.lambda,
            alpha: self.alpha,
            lambda_alpha: self.lambda_alpha,
            mass: self.mass_amu.map(|m| m * AMU),
            sigma: self.sigma_nm.map(|v| v * NM),
            mu: self.mu_nm.map(|v| v * NM),
            t_flight: self.time_s,
            sigma_err: self.sigma_err_nm.map(|v| v * NM),
            n_samples: self.n,
            temperature_ext: self.temperature_ext_k,
            pressure: self.pressure_ptorr.map(|p| p / PICOTORR_PER_TORR),
            radius: self.radius_nm.map(|v| v * NM),
            density: self.density_kg_m3,
            internal_temperature: self.internal_temperature_k,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Peak spreads of the post-flight distribution.
    Variances,

    /// Quadrature and moment-equation checks of the closed-form spreads.
    PropagateCheck {
        /// Sample points around each peak.
        #[arg(long, default_value_t = 20)]
        points_per_peak: usize,
        /// Gauss-Hermite nodes per axis.
        #[arg(long, default_value_t = 40)]
        order: usize,
        /// Refinement cap, nodes per axis.
        #[arg(long, default_value_t = 80)]
        max_order: usize,
        /// Acceptable relative change under node doubling.
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
    },

    /// Finite-difference residual of the master equation on the propagator.
    /// Defaults to 1e3 amu and lambda*alpha = 1e8 unless overridden.
    ResidualCheck {
        /// Propagator time (s).
        #[arg(long, default_value_t = 0.1)]
        at_time_s: f64,
        #[arg(long, default_value_t = 1e-9)]
        fd_step_m: f64,
        #[arg(long, default_value_t = 1e-5)]
        dt_s: f64,
        #[arg(long, default_value_t = 1e-7)]
        half_width_m: f64,
        #[arg(long, default_value_t = 3)]
        points_per_axis: usize,
    },

    /// Draw one experiment's trials.
    Simulate,

    /// Detection power and false-positive rate over repeated experiments.
    Power {
        #[arg(long, default_value_t = 500)]
        repetitions: usize,
        /// Threshold in null estimator standard deviations.
        #[arg(long, default_value_t = cslwalk::montecarlo::DEFAULT_THRESHOLD_SIGMAS)]
        threshold_sigmas: f64,
    },

    /// Environmental bounds at one lambda*alpha.
    Feasibility,

    /// Bounds along a lambda*alpha grid.
    Scan {
        /// start:stop:count[log|lin]
        #[arg(long, default_value = "1e-2:1e2:25log")]
        grid: Grid,
        #[arg(long, default_value = "rounded")]
        variant: Variant,
    },

    /// Accessible (lambda, alpha) region on a log-log raster.
    Region {
        /// Largest alpha with localization length above the separation (m^-2).
        #[arg(long, default_value_t = cslwalk::feasibility::DEFAULT_ALPHA_MAX)]
        alpha_max: f64,
        /// Smallest testable lambda*alpha (m^-2 s^-1).
        #[arg(long, default_value_t = cslwalk::feasibility::DEFAULT_LAMBDA_ALPHA_MIN)]
        lambda_alpha_min: f64,
        /// Raster points per axis.
        #[arg(long, default_value_t = 97)]
        per_axis: usize,
        /// log10 lambda window as lo:hi.
        #[arg(long, default_value = "-20:4", allow_hyphen_values = true)]
        log10_lambda: String,
        /// log10 alpha window as lo:hi.
        #[arg(long, default_value = "-2:16", allow_hyphen_values = true)]
        log10_alpha: String,
        /// CSV polygon `log10_lambda,log10_alpha` excluded from the region.
        #[arg(long)]
        exclusion: Option<PathBuf>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Variances => "variances",
            Command::PropagateCheck { .. } => "propagate-check",
            Command::ResidualCheck { .. } => "residual-check",
            Command::Simulate => "simulate",
            Command::Power { .. } => "power",
            Command::Feasibility => "feasibility",
            Command::Scan { .. } => "scan",
            Command::Region { .. } => "region",
        }
    }
}
