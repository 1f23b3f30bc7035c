//! Detector rates, drive description, mean-field state and the flux/photon
//! number conventions shared by every model in the crate.
//!
//! Units: every rate is in 1/ns and every angular frequency in rad/ns. A rate
//! quoted as "1 GHz" is therefore `1.0`, and a transition frequency
//! `ω_0/2π = 5 GHz` is `omega_0 = 2π·5`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance used to decide that a drive is resonant with the
/// detector transition.
pub const RESONANCE_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("rate `{name}` must be finite and non-negative, got {value}")]
    NegativeRate { name: &'static str, value: f64 },

    #[error("omega_0 must be finite and positive, got {0}")]
    NonPositiveFrequency(f64),

    #[error("alpha_sq must be finite and non-negative, got {0}")]
    NegativeAmplitude(f64),

    #[error("pulse parameter `{name}` must be finite and positive, got {value}")]
    NonPositiveShape { name: &'static str, value: f64 },

    #[error("drive frequency {omega_s} rad/ns is detuned from omega_0 = {omega_0} rad/ns; only resonant drives are modelled")]
    Detuned { omega_s: f64, omega_0: f64 },

    #[error("tabulated drive needs matching, non-empty time and value columns")]
    BadTable,
}

/// Incoherent and coupling rates of the detector plus its transition
/// frequency.
///
/// `gamma_tilde` is derived on demand and never stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    /// Coupling to the transmission line.
    pub gamma_tl: f64,
    /// Ground-state tunneling (dark counts).
    pub gamma_0: f64,
    /// Excited-state tunneling into the measurement state.
    pub gamma_1: f64,
    /// Intrinsic relaxation |1⟩ → |0⟩.
    pub gamma_rel: f64,
    /// Reset |m⟩ → |0⟩.
    pub gamma_res: f64,
    /// Transition angular frequency.
    pub omega_0: f64,
}

impl DetectorParams {
    pub fn new(
        gamma_tl: f64,
        gamma_0: f64,
        gamma_1: f64,
        gamma_rel: f64,
        gamma_res: f64,
        omega_0: f64,
    ) -> Result<Self, ParamError> {
        let params = Self {
            gamma_tl,
            gamma_0,
            gamma_1,
            gamma_rel,
            gamma_res,
            omega_0,
        };
        params.validate()?;
        Ok(params)
    }

    /// Lossless single-shot detector: only `gamma_tl` and `gamma_1` nonzero.
    pub fn ideal(gamma_tl: f64, gamma_1: f64, omega_0: f64) -> Result<Self, ParamError> {
        Self::new(gamma_tl, 0.0, gamma_1, 0.0, 0.0, omega_0)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        for (name, value) in [
            ("gamma_tl", self.gamma_tl),
            ("gamma_0", self.gamma_0),
            ("gamma_1", self.gamma_1),
            ("gamma_rel", self.gamma_rel),
            ("gamma_res", self.gamma_res),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(ParamError::NegativeRate { name, value });
            }
        }
        if !(self.omega_0.is_finite() && self.omega_0 > 0.0) {
            return Err(ParamError::NonPositiveFrequency(self.omega_0));
        }
        Ok(())
    }

    /// γ̃ = γ_TL + γ_0 + γ_1 + γ_rel.
    pub fn gamma_tilde(&self) -> f64 {
        gamma_tilde(self)
    }

    pub fn with_gamma_tl(mut self, gamma_tl: f64) -> Self {
        self.gamma_tl = gamma_tl;
        self
    }

    pub fn with_gamma_1(mut self, gamma_1: f64) -> Self {
        self.gamma_1 = gamma_1;
        self
    }

    pub fn with_gamma_res(mut self, gamma_res: f64) -> Self {
        self.gamma_res = gamma_res;
        self
    }
}

/// Total decay rate of the detector coherence.
pub fn gamma_tilde(params: &DetectorParams) -> f64 {
    params.gamma_tl + params.gamma_0 + params.gamma_1 + params.gamma_rel
}

/// Samples of a user-supplied envelope `f(t)`, linearly interpolated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// Temporal shape of the incoming field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DriveKind {
    Continuous,
    /// f(t) = √κ exp(−κt/2).
    Exponential { kappa: f64 },
    /// f(t) ∝ exp(−σ²(t−t0)²). `literal_prefactor` keeps the unnormalised
    /// (8πσ²)^{1/4} prefactor instead of renormalising to unit norm.
    Gaussian {
        sigma: f64,
        t0: f64,
        #[serde(default)]
        literal_prefactor: bool,
    },
    Tabulated(Table),
}

impl DriveKind {
    pub fn is_continuous(&self) -> bool {
        matches!(self, DriveKind::Continuous)
    }

    pub fn label(&self) -> &'static str {
        match self {
            DriveKind::Continuous => "continuous",
            DriveKind::Exponential { .. } => "exponential",
            DriveKind::Gaussian { .. } => "gaussian",
            DriveKind::Tabulated(_) => "tabulated",
        }
    }
}

/// A coherent drive: shape, flux amplitude |α|² and carrier frequency.
///
/// For the continuous drive `alpha_sq` is a flux amplitude; for pulses it is
/// the mean photon number carried by the (unit-norm) pulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveSpec {
    pub kind: DriveKind,
    pub alpha_sq: f64,
    pub omega_s: f64,
}

impl DriveSpec {
    pub fn continuous(alpha_sq: f64, omega_s: f64) -> Self {
        Self {
            kind: DriveKind::Continuous,
            alpha_sq,
            omega_s,
        }
    }

    pub fn exponential(alpha_sq: f64, kappa: f64, omega_s: f64) -> Self {
        Self {
            kind: DriveKind::Exponential { kappa },
            alpha_sq,
            omega_s,
        }
    }

    /// Gaussian pulse centred at `t0`; `None` selects `6/(σ√2)`.
    pub fn gaussian(alpha_sq: f64, sigma: f64, t0: Option<f64>, omega_s: f64) -> Self {
        Self {
            kind: DriveKind::Gaussian {
                sigma,
                t0: t0.unwrap_or_else(|| crate::pulses::default_gaussian_t0(sigma)),
                literal_prefactor: false,
            },
            alpha_sq,
            omega_s,
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.alpha_sq.is_finite() && self.alpha_sq >= 0.0) {
            return Err(ParamError::NegativeAmplitude(self.alpha_sq));
        }
        if !(self.omega_s.is_finite() && self.omega_s > 0.0) {
            return Err(ParamError::NonPositiveFrequency(self.omega_s));
        }
        let positive = |name: &'static str, value: f64| {
            if value.is_finite() && value > 0.0 {
                Ok(())
            } else {
                Err(ParamError::NonPositiveShape { name, value })
            }
        };
        match &self.kind {
            DriveKind::Continuous => Ok(()),
            DriveKind::Exponential { kappa } => positive("kappa", *kappa),
            DriveKind::Gaussian { sigma, t0, .. } => {
                positive("sigma", *sigma)?;
                positive("t0", *t0)
            }
            DriveKind::Tabulated(table) => {
                if table.times.is_empty() || table.times.len() != table.values.len() {
                    Err(ParamError::BadTable)
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn is_resonant_with(&self, params: &DetectorParams) -> bool {
        (self.omega_s - params.omega_0).abs() <= RESONANCE_RTOL * params.omega_0.abs()
    }

    pub fn ensure_resonant(&self, params: &DetectorParams) -> Result<(), ParamError> {
        if self.is_resonant_with(params) {
            Ok(())
        } else {
            Err(ParamError::Detuned {
                omega_s: self.omega_s,
                omega_0: params.omega_0,
            })
        }
    }
}

/// Real-reduced mean-field state.
///
/// `v = i(⟨σ⁻⟩ − ⟨σ⁺⟩)`; the real part of ⟨σ⁻⟩ decouples and stays zero
/// from the ground state, so it is not carried.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldState {
    pub v: f64,
    pub p0: f64,
    pub p1: f64,
    pub pm: f64,
}

impl MeanFieldState {
    pub const GROUND: Self = Self {
        v: 0.0,
        p0: 1.0,
        p1: 0.0,
        pm: 0.0,
    };

    pub fn to_array(self) -> [f64; 4] {
        [self.v, self.p0, self.p1, self.pm]
    }

    pub fn from_array(y: [f64; 4]) -> Self {
        Self {
            v: y[0],
            p0: y[1],
            p1: y[2],
            pm: y[3],
        }
    }

    pub fn total_probability(&self) -> f64 {
        self.p0 + self.p1 + self.pm
    }

    /// True when every occupation lies in `[-eps, 1 + eps]`.
    pub fn within_simplex(&self, eps: f64) -> bool {
        [self.p0, self.p1, self.pm]
            .iter()
            .all(|p| *p >= -eps && *p <= 1.0 + eps)
    }
}

impl Default for MeanFieldState {
    fn default() -> Self {
        Self::GROUND
    }
}

/// Photon flux ⟨a_in† a_in⟩ = |α|²ω_0/2π of a continuous drive, in photons/ns.
pub fn flux(alpha_sq: f64, omega_0: f64) -> f64 {
    alpha_sq * omega_0 / (2.0 * PI)
}

/// Photons delivered by a continuous drive during `t_m`.
pub fn continuous_photon_number(alpha_sq: f64, omega_0: f64, t_m: f64) -> f64 {
    flux(alpha_sq, omega_0) * t_m
}

/// Inverse of [`continuous_photon_number`]: the |α|² that delivers
/// `photons` during `t_m`.
pub fn alpha_sq_for_photons(photons: f64, omega_0: f64, t_m: f64) -> f64 {
    photons * 2.0 * PI / (omega_0 * t_m)
}

/// Mean photon number seen by the detector up to `t_m`.
///
/// Continuous drives deliver `flux·t_m`; pulses carry `alpha_sq` photons
/// regardless of `t_m`.
pub fn photon_number(drive: &DriveSpec, t_m: f64) -> f64 {
    match drive.kind {
        DriveKind::Continuous => continuous_photon_number(drive.alpha_sq, drive.omega_s, t_m),
        _ => drive.alpha_sq,
    }
}
