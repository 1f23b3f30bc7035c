//! Optional TOML configuration. Every key mirrors a command-line flag;
//! flags given on the command line take precedence over the file.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use jpm_core::sweep::{Axis, Objective};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriveArg {
    Continuous,
    Exp,
    Gaussian,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Rk45,
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Detector rates in GHz and the transition frequency ω_0/2π in GHz.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorFile {
    pub gamma_tl: Option<f64>,
    pub gamma_1: Option<f64>,
    pub gamma_0: Option<f64>,
    pub gamma_rel: Option<f64>,
    pub gamma_res: Option<f64>,
    pub omega0_ghz: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveFile {
    pub kind: Option<DriveArg>,
    pub alpha_sq: Option<f64>,
    pub kappa: Option<f64>,
    pub sigma: Option<f64>,
    pub t0: Option<f64>,
    pub table: Option<PathBuf>,
    pub paper_literal: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorFile {
    pub method: Option<MethodArg>,
    pub rk4_step: Option<f64>,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub max_step: Option<f64>,
    pub t_end: Option<f64>,
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputFile {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub detector: DetectorFile,
    #[serde(default)]
    pub drive: DriveFile,
    #[serde(default)]
    pub integrator: IntegratorFile,
    #[serde(default)]
    pub output: OutputFile,
}

/// Declarative sweep description.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub axis1: Axis,
    pub axis2: Option<Axis>,
    pub objective: Objective,
    #[serde(default)]
    pub detector: DetectorFile,
    #[serde(default)]
    pub drive: DriveFile,
    #[serde(default)]
    pub integrator: IntegratorFile,
}

pub fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}
