//! Mean-field dynamics of a detector driven by a coherent field.
//!
//! The reduced state is `(v, p0, p1, pm)` and obeys
//!
//! ```text
//! dv/dt  = −(γ̃/2) v + ω_R(t) (p0 − p1)
//! dp0/dt = (γ_TL + γ_rel) p1 − ω_R(t) v / 2
//! dp1/dt = −γ̃ p1 + ω_R(t) v / 2
//! dpm/dt = γ_1 p1
//! ```
//!
//! with `ω_R = √(2|α|²γ_TL ω_0/π)` for a continuous drive and
//! `ω_R(t) = f(t) √(2|α|²γ_TL/π)` for a pulse of envelope `f`. Dark counts
//! and reset are outside this model; nonzero `gamma_0` or `gamma_res` is
//! rejected.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ode::{self, AdaptiveOptions, OdeError};
use crate::params::{DetectorParams, DriveKind, DriveSpec, MeanFieldState, ParamError};
use crate::pulses::{Envelope, PulseError};

/// Tolerance on probability conservation and simplex bounds checked after
/// every accepted step.
pub const INVARIANT_EPS: f64 = 1e-6;

/// Tail integrated past the pulse support, in units of 1/γ_1.
pub const PULSE_TAIL_DECAYS: f64 = 10.0;

/// Continuous runs without an explicit end time last this many slowest
/// time constants.
pub const CONTINUOUS_SPAN: f64 = 50.0;

#[derive(Debug, Error)]
pub enum MeanFieldError {
    #[error(transparent)]
    Param(#[from] ParamError),

    #[error(transparent)]
    Pulse(#[from] PulseError),

    #[error("integration failed: {0}")]
    Ode(#[from] OdeError),

    #[error("{name} = {value} is not supported by the mean-field model (must be 0)")]
    UnsupportedRate { name: &'static str, value: f64 },

    #[error("invariant breach at t = {t}: {detail}")]
    InvariantBreach { t: f64, detail: String },

    #[error("invalid integrator configuration: {0}")]
    Config(String),
}

impl MeanFieldError {
    /// Time at which the integration failed, when known.
    pub fn failure_time(&self) -> Option<f64> {
        match self {
            MeanFieldError::Ode(OdeError::StepUnderflow { t, .. })
            | MeanFieldError::Ode(OdeError::TooManySteps { t, .. })
            | MeanFieldError::Ode(OdeError::NonFinite { t })
            | MeanFieldError::InvariantBreach { t, .. } => Some(*t),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    Rk45,
    Rk4 { step: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleGrid {
    /// `n` equally spaced points on `[0, t_end]`, both ends included.
    Uniform(usize),
    /// Explicit strictly increasing sample times; the last one is `t_end`.
    Times(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub method: Method,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Upper bound on the adaptive step; `None` picks one from the pulse
    /// width (pulses) or leaves the step unbounded (continuous drive).
    pub max_step: Option<f64>,
    /// `None` selects the pulse support plus a 10/γ_1 tail, or 50 slowest
    /// time constants for a continuous drive.
    pub t_end: Option<f64>,
    pub samples: SampleGrid,
    /// Starting state; the ground state when `None`.
    pub initial: Option<MeanFieldState>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::Rk45,
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_step: None,
            t_end: None,
            samples: SampleGrid::Uniform(1001),
            initial: None,
        }
    }
}

impl IntegratorConfig {
    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = Some(t_end);
        self
    }

    pub fn with_samples(mut self, n: usize) -> Self {
        self.samples = SampleGrid::Uniform(n);
        self
    }

    pub fn validate(&self) -> Result<(), MeanFieldError> {
        let bad = |msg: &str| Err(MeanFieldError::Config(msg.to_string()));
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if let Some(t) = self.t_end {
            if !(t.is_finite() && t > 0.0) {
                return bad("t_end must be finite and positive");
            }
        }
        if let Some(h) = self.max_step {
            if !(h > 0.0) {
                return bad("max_step must be positive");
            }
        }
        if let Method::Rk4 { step } = self.method {
            if !(step.is_finite() && step > 0.0) {
                return bad("RK4 step must be finite and positive");
            }
        }
        match &self.samples {
            SampleGrid::Uniform(n) if *n < 2 => bad("need at least two samples"),
            SampleGrid::Times(ts) => {
                let increasing = ts.windows(2).all(|w| w[1] > w[0]);
                if ts.is_empty() || !increasing || ts[0] < 0.0 {
                    bad("sample times must be non-negative and strictly increasing")
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// Time-resolved mean-field solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<MeanFieldState>,
    pub drive: DriveSpec,
    pub params: DetectorParams,
}

/// Constant Rabi frequency of a continuous drive, or the pulse prefactor
/// `√(2|α|²γ_TL/π)` that multiplies `f(t)`.
pub fn rabi_frequency(params: &DetectorParams, drive: &DriveSpec) -> f64 {
    let base = 2.0 * drive.alpha_sq * params.gamma_tl / PI;
    match drive.kind {
        DriveKind::Continuous => (base * params.omega_0).sqrt(),
        _ => base.sqrt(),
    }
}

/// Instantaneous Rabi frequency at time `t`.
pub fn rabi_frequency_t(
    params: &DetectorParams,
    drive: &DriveSpec,
    t: f64,
) -> Result<f64, MeanFieldError> {
    let omega = rabi_frequency(params, drive);
    Ok(match Envelope::from_kind(&drive.kind)? {
        None => omega,
        Some(env) => omega * env.evaluate(t),
    })
}

/// Right-hand side of the reduced equations for a given instantaneous Rabi
/// frequency.
#[inline]
pub fn rhs(params: &DetectorParams, omega_r: f64, y: &[f64; 4]) -> [f64; 4] {
    let gt = params.gamma_tilde();
    let [v, p0, p1, _] = *y;
    [
        -0.5 * gt * v + omega_r * (p0 - p1),
        (params.gamma_tl + params.gamma_rel) * p1 - 0.5 * omega_r * v,
        -gt * p1 + 0.5 * omega_r * v,
        params.gamma_1 * p1,
    ]
}

/// R = −1 + (2γ_TL/γ̃)(p0 − p1).
pub fn reflection(params: &DetectorParams, state: &MeanFieldState) -> f64 {
    -1.0 + 2.0 * params.gamma_tl / params.gamma_tilde() * (state.p0 - state.p1)
}

fn check_model(params: &DetectorParams, drive: &DriveSpec) -> Result<(), MeanFieldError> {
    params.validate()?;
    drive.validate()?;
    drive.ensure_resonant(params)?;
    if params.gamma_0 != 0.0 {
        return Err(MeanFieldError::UnsupportedRate {
            name: "gamma_0",
            value: params.gamma_0,
        });
    }
    if params.gamma_res != 0.0 {
        return Err(MeanFieldError::UnsupportedRate {
            name: "gamma_res",
            value: params.gamma_res,
        });
    }
    Ok(())
}

/// End time used when the configuration leaves it open.
pub fn default_t_end(params: &DetectorParams, drive: &DriveSpec) -> Result<f64, MeanFieldError> {
    match Envelope::from_kind(&drive.kind)? {
        Some(env) => Ok(env.support().1 + PULSE_TAIL_DECAYS / params.gamma_1),
        None => {
            let omega = rabi_frequency(params, drive);
            let mut slowest = params.gamma_tl.min(params.gamma_1);
            if omega > 0.0 {
                slowest = slowest.min(omega);
            }
            if !(slowest > 0.0) {
                return Err(MeanFieldError::Config(
                    "cannot pick t_end with a vanishing rate; set it explicitly".into(),
                ));
            }
            Ok(CONTINUOUS_SPAN / slowest)
        }
    }
}

fn sample_times(cfg: &IntegratorConfig, t_end: f64) -> Vec<f64> {
    match &cfg.samples {
        SampleGrid::Uniform(n) => {
            let n = *n;
            (0..n)
                .map(|i| t_end * i as f64 / (n - 1) as f64)
                .collect()
        }
        SampleGrid::Times(ts) => ts.clone(),
    }
}

/// Integrates the mean-field equations on the configured sample grid.
pub fn integrate(
    params: &DetectorParams,
    drive: &DriveSpec,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, MeanFieldError> {
    check_model(params, drive)?;
    cfg.validate()?;
    let envelope = Envelope::from_kind(&drive.kind)?;
    let t_end = match (&cfg.samples, cfg.t_end) {
        (SampleGrid::Times(ts), _) => *ts.last().expect("validated non-empty"),
        (_, Some(t)) => t,
        (_, None) => default_t_end(params, drive)?,
    };
    let times = sample_times(cfg, t_end);
    let y0 = cfg.initial.unwrap_or(MeanFieldState::GROUND).to_array();
    let omega = rabi_frequency(params, drive);
    let p = *params;

    let raw = match &envelope {
        None => solve(cfg, |_t, y| rhs(&p, omega, y), y0, &times, &[], None)?,
        Some(env) => {
            let (start, end) = env.support();
            let mut breaks = env.breakpoints().to_vec();
            breaks.extend([start, env.peak_time(), end]);
            let width_step = (end - start) / 50.0;
            solve(
                cfg,
                |t, y| rhs(&p, omega * env.evaluate(t), y),
                y0,
                &times,
                &breaks,
                Some(width_step),
            )?
        }
    };
    Ok(Trajectory {
        times,
        states: raw.into_iter().map(MeanFieldState::from_array).collect(),
        drive: drive.clone(),
        params: *params,
    })
}

fn solve<F>(
    cfg: &IntegratorConfig,
    f: F,
    y0: [f64; 4],
    times: &[f64],
    breakpoints: &[f64],
    auto_max_step: Option<f64>,
) -> Result<Vec<[f64; 4]>, MeanFieldError>
where
    F: Fn(f64, &[f64; 4]) -> [f64; 4],
{
    let total0 = y0[1] + y0[2] + y0[3];
    let check = |t: f64, y: &[f64; 4]| -> Result<(), MeanFieldError> {
        let s = MeanFieldState::from_array(*y);
        if (s.total_probability() - total0).abs() > INVARIANT_EPS {
            return Err(MeanFieldError::InvariantBreach {
                t,
                detail: format!("total probability drifted to {}", s.total_probability()),
            });
        }
        if !s.within_simplex(INVARIANT_EPS) {
            return Err(MeanFieldError::InvariantBreach {
                t,
                detail: format!("occupation left [0, 1]: {s:?}"),
            });
        }
        Ok(())
    };
    match cfg.method {
        Method::Rk45 => {
            let opts = AdaptiveOptions {
                rel_tol: cfg.rel_tol,
                abs_tol: cfg.abs_tol,
                max_step: cfg.max_step.or(auto_max_step).unwrap_or(f64::INFINITY),
                ..AdaptiveOptions::default()
            };
            Ok(ode::dopri5(f, 0.0, y0, times, breakpoints, &opts, check)?.samples)
        }
        Method::Rk4 { step } => {
            let out = ode::rk4(f, 0.0, y0, times, step)?;
            for (t, y) in times.iter().zip(&out) {
                check(*t, y)?;
            }
            Ok(out)
        }
    }
}

/// Measurement probability at `t_m`, starting from the ground state.
pub fn pm_at(
    params: &DetectorParams,
    drive: &DriveSpec,
    t_m: f64,
    cfg: &IntegratorConfig,
) -> Result<f64, MeanFieldError> {
    let cfg = IntegratorConfig {
        samples: SampleGrid::Times(vec![t_m]),
        t_end: Some(t_m),
        ..cfg.clone()
    };
    let traj = integrate(params, drive, &cfg)?;
    Ok(traj.states.last().map_or(0.0, |s| s.pm))
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> Option<&MeanFieldState> {
        self.states.last()
    }

    pub fn reflection_series(&self) -> Vec<f64> {
        self.states
            .iter()
            .map(|s| reflection(&self.params, s))
            .collect()
    }

    /// Photons delivered up to each sample time.
    pub fn photons_delivered(&self) -> Result<Vec<f64>, PulseError> {
        let env = Envelope::from_kind(&self.drive.kind)?;
        Ok(self
            .times
            .iter()
            .map(|&t| match &env {
                None => crate::params::continuous_photon_number(
                    self.drive.alpha_sq,
                    self.drive.omega_s,
                    t,
                ),
                Some(e) => self.drive.alpha_sq * e.delivered_fraction(t),
            })
            .collect())
    }

    /// Writes `t,v,p0,p1,pm,R` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "v", "p0", "p1", "pm", "R"])?;
        for (t, s) in self.times.iter().zip(&self.states) {
            let r = reflection(&self.params, s);
            w.write_record(
                [*t, s.v, s.p0, s.p1, s.pm, r]
                    .iter()
                    .map(|x| format!("{x:e}")),
            )?;
        }
        w.flush()?;
        Ok(())
    }
}
