//! Run configuration: a versioned JSON schema that feeds every subcommand.
//! Unknown keys are rejected and numeric preconditions are checked with the
//! offending field path before any solve starts.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::carleman::{normalized_s, CarlemanParams};
use crate::mesh::{build_grid, Grid, Interval, SpaceSlice};
use crate::profile::DiffusionProfile;
use crate::solver::{ControlProblem, Potential};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("config parse error in {path}: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
    #[error("config field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "T")]
    pub t_final: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarlemanConfig {
    pub s_list: Vec<f64>,
    pub lambda_list: Vec<f64>,
    pub sample_count: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HumConfig {
    pub eps_list: Vec<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

/// Observability study parameters. When `s` is absent the weight-
/// normalized value is used, for which the observation weight peaks at 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservabilityConfig {
    #[serde(default)]
    pub s: Option<f64>,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_obs_samples")]
    pub sample_count: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_lambda() -> f64 {
    1.0
}

fn default_obs_samples() -> usize {
    20
}

impl Default for ObservabilityConfig {
    fn default() -> Self {
        ObservabilityConfig {
            s: None,
            lambda: default_lambda(),
            sample_count: default_obs_samples(),
            seed: None,
        }
    }
}

/// Grids and weight parameters for the transformed-equation identity check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentityConfig {
    #[serde(default = "default_identity_s")]
    pub s: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_identity_levels")]
    pub levels: Vec<[usize; 2]>,
}

fn default_identity_s() -> f64 {
    2.0
}

fn default_identity_levels() -> Vec<[usize; 2]> {
    vec![[32, 64], [64, 256], [128, 1024]]
}

impl Default for IdentityConfig {
    fn default() -> Self {
        IdentityConfig {
            s: default_identity_s(),
            lambda: default_lambda(),
            levels: default_identity_levels(),
        }
    }
}

/// Initial datum for the control runs: the default sine arch or a slice file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialDatum {
    #[default]
    SinePi,
    Csv {
        path: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub profile: DiffusionProfile,
    pub omega: [f64; 2],
    pub delta: f64,
    pub potential: Potential,
    pub grid: GridConfig,
    pub carleman: CarlemanConfig,
    pub hum: HumConfig,
    #[serde(default)]
    pub observability: ObservabilityConfig,
    #[serde(default)]
    pub identity: IdentityConfig,
    #[serde(default)]
    pub u0: InitialDatum,
    pub output_dir: String,
}

impl RunConfig {
    /// The configuration shipped as `configs/default.json`: the super-strong
    /// power profile on the desk-scale grid.
    pub fn default_run() -> Self {
        RunConfig {
            version: CONFIG_VERSION,
            profile: DiffusionProfile::PowerLaw {
                a: 0.4,
                b: 0.6,
                alpha: 2.0,
                beta: 2.0,
            },
            omega: [0.3, 0.7],
            delta: 0.15,
            potential: Potential::Zero,
            grid: GridConfig {
                n: 199,
                m: 400,
                t_final: 0.5,
            },
            carleman: CarlemanConfig {
                s_list: vec![4.0, 8.0, 16.0],
                lambda_list: vec![2.0, 4.0],
                sample_count: 20,
                seed: 7,
            },
            hum: HumConfig {
                eps_list: vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5],
                tol: 1e-8,
                max_iter: 500,
            },
            observability: ObservabilityConfig::default(),
            identity: IdentityConfig::default(),
            u0: InitialDatum::default(),
            output_dir: "out".to_string(),
        }
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.display().to_string(),
            source: e,
        })?;
        let config: RunConfig = serde_json::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.display().to_string(),
            source: e,
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Checks every numeric precondition of the modules this config feeds.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.version != CONFIG_VERSION {
            return Err(invalid(
                "version",
                format!("expected {CONFIG_VERSION}, got {}", self.version),
            ));
        }
        match &self.profile {
            DiffusionProfile::PowerLaw { a, b, alpha, beta } => {
                if !(*a > 0.0 && *b < 1.0 && a <= b) {
                    return Err(invalid("profile", "need 0 < A <= B < 1"));
                }
                if *alpha < 0.0 || *beta < 0.0 {
                    return Err(invalid("profile", "exponents must be nonnegative"));
                }
            }
            DiffusionProfile::Constant { value } => {
                if !(*value > 0.0) {
                    return Err(invalid("profile.value", "must be positive"));
                }
            }
            DiffusionProfile::Tabulated { x, values, .. } => {
                if x.len() < 2 || x.len() != values.len() {
                    return Err(invalid("profile", "table needs matching node/value lists"));
                }
            }
        }
        let [lo, hi] = self.omega;
        if !(lo >= 0.0 && hi <= 1.0 && lo < hi) {
            return Err(invalid("omega", "need 0 <= lo < hi <= 1"));
        }
        if !(self.delta > 0.0) {
            return Err(invalid("delta", "must be positive"));
        }
        if self.grid.n < 3 || self.grid.m < 3 {
            return Err(invalid("grid", "need n >= 3 and m >= 3"));
        }
        if !(self.grid.t_final > 0.0) {
            return Err(invalid("grid.T", "horizon must be positive"));
        }
        if self.carleman.s_list.is_empty() || self.carleman.s_list.iter().any(|s| !(*s > 0.0)) {
            return Err(invalid("carleman.s_list", "needs positive entries"));
        }
        if self.carleman.lambda_list.is_empty()
            || self.carleman.lambda_list.iter().any(|l| !(*l > 0.0))
        {
            return Err(invalid("carleman.lambda_list", "needs positive entries"));
        }
        if self.carleman.sample_count == 0 {
            return Err(invalid("carleman.sample_count", "must be at least 1"));
        }
        if self.hum.eps_list.is_empty()
            || self.hum.eps_list.iter().any(|e| !(*e > 0.0))
            || self.hum.eps_list.windows(2).any(|w| w[1] >= w[0])
        {
            return Err(invalid(
                "hum.eps_list",
                "must be strictly decreasing and positive",
            ));
        }
        if !(self.hum.tol > 0.0) {
            return Err(invalid("hum.tol", "must be positive"));
        }
        if self.hum.max_iter == 0 {
            return Err(invalid("hum.max_iter", "must be at least 1"));
        }
        if let Some(s) = self.observability.s {
            if !(s > 0.0) {
                return Err(invalid("observability.s", "must be positive"));
            }
        }
        if !(self.observability.lambda > 0.0) {
            return Err(invalid("observability.lambda", "must be positive"));
        }
        if self.identity.levels.is_empty()
            || self.identity.levels.iter().any(|[n, m]| *n < 3 || *m < 3)
        {
            return Err(invalid("identity.levels", "need grids with n, m >= 3"));
        }
        if self.output_dir.is_empty() {
            return Err(invalid("output_dir", "must not be empty"));
        }
        Ok(())
    }

    pub fn build_grid(&self) -> Result<Grid, ConfigError> {
        build_grid(self.grid.n, self.grid.m, self.grid.t_final)
            .map_err(|e| invalid("grid", e.to_string()))
    }

    pub fn omega_interval(&self) -> Interval {
        Interval::new(self.omega[0], self.omega[1])
    }

    /// Assembles the control problem, resolving the initial datum (files are
    /// read relative to the process working directory).
    pub fn build_problem(&self, grid: &Grid) -> Result<ControlProblem, ConfigError> {
        let u0 = match &self.u0 {
            InitialDatum::SinePi => SpaceSlice::from_fn(grid, |x| (std::f64::consts::PI * x).sin()),
            InitialDatum::Csv { path } => crate::io::read_slice_csv(Path::new(path), grid)
                .map_err(|e| invalid("u0.path", e.to_string()))?,
        };
        Ok(ControlProblem::new(
            self.profile.clone(),
            self.potential,
            self.omega_interval(),
            self.grid.t_final,
            u0,
        ))
    }

    /// Carleman parameters for a given `(s, λ)`, centred at the profile's
    /// degeneracy midpoint.
    pub fn carleman_params(&self, s: f64, lambda: f64) -> Result<CarlemanParams, ConfigError> {
        let x0 = match self.profile.degeneracy() {
            Some((a, b)) => 0.5 * (a + b),
            None => 0.5,
        };
        CarlemanParams::new(s, lambda, self.grid.t_final, x0, self.delta)
            .map_err(|e| invalid("carleman", e.to_string()))
    }

    /// Observability parameters: explicit `s` or the weight-normalized one.
    pub fn observability_params(&self) -> Result<CarlemanParams, ConfigError> {
        let x0 = match self.profile.degeneracy() {
            Some((a, b)) => 0.5 * (a + b),
            None => 0.5,
        };
        let lambda = self.observability.lambda;
        let s = self
            .observability
            .s
            .unwrap_or_else(|| normalized_s(lambda, self.grid.t_final, x0));
        CarlemanParams::new(s, lambda, self.grid.t_final, x0, self.delta)
            .map_err(|e| invalid("observability", e.to_string()))
    }
}
