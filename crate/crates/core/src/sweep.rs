//! Parameter sweeps over one or two axes, coupling optimisation and
//! saturation curves.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::meanfield::{self, IntegratorConfig, MeanFieldError};
use crate::optimize::{maximize_log, Maximum};
use crate::params::{DetectorParams, DriveKind, DriveSpec};
use crate::rate::{self, RateError};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep: {0}")]
    Spec(String),

    #[error("parameter `{param}` does not apply to a {drive} drive")]
    Incompatible { param: ParamName, drive: &'static str },

    #[error(transparent)]
    MeanField(#[from] MeanFieldError),

    #[error(transparent)]
    Rate(#[from] RateError),
}

/// Parameters that may be swept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamName {
    GammaTl,
    #[serde(rename = "gamma_1")]
    Gamma1,
    #[serde(rename = "gamma_0")]
    Gamma0,
    GammaRel,
    GammaRes,
    AlphaSq,
    Kappa,
    Sigma,
    #[serde(rename = "t_m")]
    TM,
}

impl ParamName {
    pub const ALL: [ParamName; 9] = [
        ParamName::GammaTl,
        ParamName::Gamma1,
        ParamName::Gamma0,
        ParamName::GammaRel,
        ParamName::GammaRes,
        ParamName::AlphaSq,
        ParamName::Kappa,
        ParamName::Sigma,
        ParamName::TM,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ParamName::GammaTl => "gamma_tl",
            ParamName::Gamma1 => "gamma_1",
            ParamName::Gamma0 => "gamma_0",
            ParamName::GammaRel => "gamma_rel",
            ParamName::GammaRes => "gamma_res",
            ParamName::AlphaSq => "alpha_sq",
            ParamName::Kappa => "kappa",
            ParamName::Sigma => "sigma",
            ParamName::TM => "t_m",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.as_str() == name)
    }
}

impl fmt::Display for ParamName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Linear,
    #[default]
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub param: ParamName,
    #[serde(default)]
    pub scale: Scale,
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Axis {
    pub fn new(param: ParamName, scale: Scale, min: f64, max: f64, points: usize) -> Self {
        Self {
            param,
            scale,
            min,
            max,
            points,
        }
    }

    /// A single-point axis at `value`.
    pub fn single(param: ParamName, value: f64) -> Self {
        Self::new(param, Scale::Linear, value, value, 1)
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        let bad = |m: String| Err(SweepError::Spec(m));
        if !(self.min.is_finite() && self.max.is_finite()) {
            return bad(format!("axis {} bounds must be finite", self.param));
        }
        match self.points {
            0 => return bad(format!("axis {} needs at least one point", self.param)),
            1 if self.min != self.max => {
                return bad(format!("single-point axis {} needs min == max", self.param))
            }
            1 => {}
            _ if self.min >= self.max => {
                return bad(format!("axis {} needs min < max", self.param))
            }
            _ => {}
        }
        if self.scale == Scale::Log && self.min <= 0.0 {
            return bad(format!("log axis {} needs positive bounds", self.param));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        let n = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                let u = i as f64 / n;
                match self.scale {
                    Scale::Linear => self.min + u * (self.max - self.min),
                    Scale::Log => (self.min.ln() + u * (self.max.ln() - self.min.ln())).exp(),
                }
            })
            .collect()
    }
}

/// Quantity evaluated at every grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Objective {
    /// Mean-field `pm` at the measurement time `t_m` (ns).
    PmAtTm { t_m: f64 },
    /// Low-excitation efficiency of the rate model.
    Eta,
    /// Bright count rate over photon flux at rate-model drive `n_in`.
    EtaFiniteN { n_in: f64 },
    /// Mean-field `pm` once the drive is over (end of the default horizon).
    SteadyPm,
}

impl Objective {
    pub fn label(&self) -> &'static str {
        match self {
            Objective::PmAtTm { .. } => "pm_at_tm",
            Objective::Eta => "eta",
            Objective::EtaFiniteN { .. } => "eta_finite_n",
            Objective::SteadyPm => "steady_pm",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis1: Axis,
    #[serde(default)]
    pub axis2: Option<Axis>,
    pub objective: Objective,
    pub params: DetectorParams,
    pub drive: DriveSpec,
    #[serde(default)]
    pub integrator: IntegratorConfig,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), SweepError> {
        self.axis1.validate()?;
        if let Some(a2) = &self.axis2 {
            a2.validate()?;
            if a2.param == self.axis1.param {
                return Err(SweepError::Spec("both axes sweep the same parameter".into()));
            }
        }
        for axis in std::iter::once(&self.axis1).chain(self.axis2.as_ref()) {
            let drive_ok = match axis.param {
                ParamName::Kappa => matches!(self.drive.kind, DriveKind::Exponential { .. }),
                ParamName::Sigma => matches!(self.drive.kind, DriveKind::Gaussian { .. }),
                ParamName::TM => matches!(self.objective, Objective::PmAtTm { .. }),
                _ => true,
            };
            if !drive_ok {
                return Err(SweepError::Incompatible {
                    param: axis.param,
                    drive: self.drive.kind.label(),
                });
            }
        }
        self.integrator.validate()?;
        Ok(())
    }
}

/// Parameters for one grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub params: DetectorParams,
    pub drive: DriveSpec,
    pub objective: Objective,
}

impl Cell {
    pub fn from_spec(spec: &SweepSpec) -> Self {
        Self {
            params: spec.params,
            drive: spec.drive.clone(),
            objective: spec.objective.clone(),
        }
    }

    /// Sets `param` to `value` in this cell.
    pub fn set(&mut self, param: ParamName, value: f64) -> Result<(), SweepError> {
        let p = &mut self.params;
        match param {
            ParamName::GammaTl => p.gamma_tl = value,
            ParamName::Gamma1 => p.gamma_1 = value,
            ParamName::Gamma0 => p.gamma_0 = value,
            ParamName::GammaRel => p.gamma_rel = value,
            ParamName::GammaRes => p.gamma_res = value,
            ParamName::AlphaSq => self.drive.alpha_sq = value,
            ParamName::Kappa | ParamName::Sigma => match (&mut self.drive.kind, param) {
                (DriveKind::Exponential { kappa }, ParamName::Kappa) => *kappa = value,
                (DriveKind::Gaussian { sigma, .. }, ParamName::Sigma) => *sigma = value,
                (kind, _) => {
                    return Err(SweepError::Incompatible {
                        param,
                        drive: kind.label(),
                    })
                }
            },
            ParamName::TM => match &mut self.objective {
                Objective::PmAtTm { t_m } => *t_m = value,
                _ => {
                    return Err(SweepError::Spec(
                        "t_m can only be swept with the pm_at_tm objective".into(),
                    ))
                }
            },
        }
        Ok(())
    }

    pub fn evaluate(&self, cfg: &IntegratorConfig) -> Result<f64, SweepError> {
        match &self.objective {
            Objective::PmAtTm { t_m } => Ok(meanfield::pm_at(&self.params, &self.drive, *t_m, cfg)?),
            Objective::Eta => Ok(rate::efficiency(&self.params)?),
            Objective::EtaFiniteN { n_in } => Ok(rate::efficiency_finite_n(&self.params, *n_in)?),
            Objective::SteadyPm => {
                let t_end = meanfield::default_t_end(&self.params, &self.drive)?;
                Ok(meanfield::pm_at(&self.params, &self.drive, t_end, cfg)?)
            }
        }
    }
}

/// Sweep output. `values[i][j]` belongs to `axis1[i]`, `axis2[j]`; a 1-D
/// sweep has a single column.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub axis1: ParamName,
    pub axis2: Option<ParamName>,
    pub axis1_values: Vec<f64>,
    pub axis2_values: Vec<f64>,
    pub objective: &'static str,
    pub values: Vec<Vec<Result<f64, String>>>,
}

impl SweepGrid {
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values.get(i)?.get(j)?.as_ref().ok().copied()
    }

    pub fn failures(&self) -> usize {
        self.values.iter().flatten().filter(|v| v.is_err()).count()
    }

    /// Indices of the largest successful cell.
    pub fn argmax(&self) -> Option<(usize, usize)> {
        let mut best: Option<((usize, usize), f64)> = None;
        for (i, row) in self.values.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if let Ok(v) = v {
                    if best.map_or(true, |(_, b)| *v > b) {
                        best = Some(((i, j), *v));
                    }
                }
            }
        }
        best.map(|(ij, _)| ij)
    }

    /// Long-format CSV `axis1,axis2,objective,error`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["axis1", "axis2", "objective", "error"])?;
        for (i, row) in self.values.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let a2 = if self.axis2.is_some() {
                    format!("{:e}", self.axis2_values[j])
                } else {
                    String::new()
                };
                let (val, err) = match v {
                    Ok(x) => (format!("{x:e}"), String::new()),
                    Err(e) => (String::new(), e.clone()),
                };
                w.write_record([format!("{:e}", self.axis1_values[i]), a2, val, err])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Nested JSON: axes, the value matrix (null for failed cells) and the
    /// list of failures.
    pub fn to_json(&self) -> serde_json::Value {
        let values: Vec<Vec<Option<f64>>> = self
            .values
            .iter()
            .map(|row| row.iter().map(|v| v.as_ref().ok().copied()).collect())
            .collect();
        let errors: Vec<serde_json::Value> = self
            .values
            .iter()
            .enumerate()
            .flat_map(|(i, row)| {
                row.iter().enumerate().filter_map(move |(j, v)| {
                    v.as_ref()
                        .err()
                        .map(|e| serde_json::json!({"i": i, "j": j, "message": e}))
                })
            })
            .collect();
        serde_json::json!({
            "objective": self.objective,
            "axis1": {"param": self.axis1.as_str(), "values": self.axis1_values},
            "axis2": self.axis2.map(|p| serde_json::json!({
                "param": p.as_str(),
                "values": self.axis2_values,
            })),
            "values": values,
            "errors": errors,
        })
    }
}

fn grid_cells(spec: &SweepSpec) -> (Vec<f64>, Vec<f64>, Vec<(usize, usize)>) {
    let a1 = spec.axis1.values();
    let a2 = spec.axis2.as_ref().map_or(vec![f64::NAN], Axis::values);
    let idx = (0..a1.len())
        .flat_map(|i| (0..a2.len()).map(move |j| (i, j)))
        .collect();
    (a1, a2, idx)
}

fn eval_cell(spec: &SweepSpec, a1: f64, a2: f64) -> Result<f64, String> {
    let mut cell = Cell::from_spec(spec);
    let mut run = || {
        cell.set(spec.axis1.param, a1)?;
        if let Some(ax) = &spec.axis2 {
            cell.set(ax.param, a2)?;
        }
        cell.evaluate(&spec.integrator)
    };
    run().map_err(|e| e.to_string())
}

fn assemble(
    spec: &SweepSpec,
    a1: Vec<f64>,
    a2: Vec<f64>,
    flat: Vec<Result<f64, String>>,
) -> SweepGrid {
    let cols = a2.len();
    let mut values = Vec::with_capacity(a1.len());
    let mut it = flat.into_iter();
    for _ in 0..a1.len() {
        values.push(it.by_ref().take(cols).collect());
    }
    SweepGrid {
        axis1: spec.axis1.param,
        axis2: spec.axis2.as_ref().map(|a| a.param),
        axis1_values: a1,
        axis2_values: if spec.axis2.is_some() { a2 } else { Vec::new() },
        objective: spec.objective.label(),
        values,
    }
}

/// Evaluates every grid cell in parallel. Cell failures are recorded in the
/// grid and do not stop the sweep.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepGrid, SweepError> {
    spec.validate()?;
    let (a1, a2, idx) = grid_cells(spec);
    let flat: Vec<Result<f64, String>> = idx
        .par_iter()
        .map(|&(i, j)| eval_cell(spec, a1[i], a2[j]))
        .collect();
    Ok(assemble(spec, a1, a2, flat))
}

/// Single-threaded [`run_sweep`].
pub fn run_sweep_serial(spec: &SweepSpec) -> Result<SweepGrid, SweepError> {
    spec.validate()?;
    let (a1, a2, idx) = grid_cells(spec);
    let flat = idx
        .iter()
        .map(|&(i, j)| eval_cell(spec, a1[i], a2[j]))
        .collect();
    Ok(assemble(spec, a1, a2, flat))
}

/// Search settings for [`optimize_gamma_tl`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeOptions {
    /// Search range as multiples of γ_1.
    pub lo_ratio: f64,
    pub hi_ratio: f64,
    pub grid_points: usize,
    pub rel_tol: f64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            lo_ratio: 1e-2,
            hi_ratio: 1e2,
            grid_points: 400,
            rel_tol: 1e-3,
        }
    }
}

/// Coupling rate maximising mean-field `pm(t_m)` for the given drive.
pub fn optimize_gamma_tl(
    params: &DetectorParams,
    drive: &DriveSpec,
    t_m: f64,
    cfg: &IntegratorConfig,
    opts: &OptimizeOptions,
) -> Result<Maximum, SweepError> {
    let g1 = params.gamma_1;
    if !(g1 > 0.0) {
        return Err(SweepError::Spec("gamma_1 must be positive to scale the search".into()));
    }
    maximize_log(
        |g: f64| -> Result<f64, SweepError> {
            Ok(meanfield::pm_at(&params.with_gamma_tl(g), drive, t_m, cfg)?)
        },
        opts.lo_ratio * g1,
        opts.hi_ratio * g1,
        opts.grid_points,
        opts.rel_tol,
    )
}

/// How γ_TL is chosen along a saturation curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coupling {
    /// Keep the γ_TL of the parameter set.
    Fixed,
    /// Re-optimise γ_TL at every point.
    Optimized(OptimizeOptions),
}

/// Mean-field `pm(t_m)` of a continuous drive for each `alpha_sq` in
/// `alpha_grid`.
pub fn saturation_curve(
    params: &DetectorParams,
    t_m: f64,
    alpha_grid: &[f64],
    coupling: Coupling,
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>, SweepError> {
    alpha_grid
        .par_iter()
        .map(|&a| {
            let drive = DriveSpec::continuous(a, params.omega_0);
            match coupling {
                Coupling::Fixed => Ok(meanfield::pm_at(params, &drive, t_m, cfg)?),
                Coupling::Optimized(opts) => {
                    if a == 0.0 {
                        return Ok(0.0);
                    }
                    Ok(optimize_gamma_tl(params, &drive, t_m, cfg, &opts)?.value)
                }
            }
        })
        .collect()
}
