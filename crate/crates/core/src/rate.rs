//! Incoherent rate model of the detector under a continuous drive.
//!
//! Occupations `(p0, p1, pm)` evolve under
//!
//! ```text
//! dp0/dt = −(βN + γ_0) p0 + (βN + γ_TL + γ_rel) p1 + γ_res pm
//! dp1/dt = βN p0 − (βN + γ_TL + γ_1 + γ_rel) p1
//! dpm/dt = γ_0 p0 + γ_1 p1 − γ_res pm
//! ```
//!
//! with `β = (2/π) γ_TL/γ̃`. The drive strength `N` passed to these functions
//! is `n_in = |α|²ω_0`, which is 2π times the photon flux in photons/ns (see
//! [`rate_n_in`]). Efficiencies divide count rates by the photon flux
//! `n_in/2π`.

use std::f64::consts::PI;

use serde::ser::{Serialize, SerializeStruct, Serializer};
use thiserror::Error;

use crate::ode::{self, AdaptiveOptions, OdeError};
use crate::params::{DetectorParams, ParamError};

/// Reduced Planck constant in J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// `gamma_res / gamma_1` above which the high-reset formulas are considered
/// applicable.
pub const HIGH_RESET_RATIO: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RateError {
    #[error(transparent)]
    Param(#[from] ParamError),

    #[error("the stationary solution needs gamma_res > 0; use the closed-form transient for gamma_res = 0")]
    NoReset,

    #[error("{name} = {value} must be 0 for the closed-form transient")]
    Unsupported { name: &'static str, value: f64 },

    #[error("gamma_tilde vanishes; all rates are zero")]
    ZeroGammaTilde,

    #[error("n_in must be finite and non-negative, got {0}")]
    BadDrive(f64),

    #[error("efficiency is {eta}; the NEP is unbounded")]
    UnboundedNep { eta: f64 },

    #[error(transparent)]
    Ode(#[from] OdeError),
}

/// β = (2/π) γ_TL / γ̃.
pub fn beta(params: &DetectorParams) -> f64 {
    2.0 / PI * params.gamma_tl / params.gamma_tilde()
}

/// Drive strength `|α|²ω_0` entering the rate equations for a continuous
/// drive of amplitude `alpha_sq`.
pub fn rate_n_in(alpha_sq: f64, omega_0: f64) -> f64 {
    alpha_sq * omega_0
}

/// Photon flux (photons/ns) corresponding to a rate-equation drive `n_in`.
pub fn photon_flux(n_in: f64) -> f64 {
    n_in / (2.0 * PI)
}

/// Time derivative of `(p0, p1, pm)`.
pub fn rate_rhs(params: &DetectorParams, n_in: f64, p: &[f64; 3]) -> [f64; 3] {
    let b = beta(params) * n_in;
    let [p0, p1, pm] = *p;
    let DetectorParams {
        gamma_tl,
        gamma_0,
        gamma_1,
        gamma_rel,
        gamma_res,
        ..
    } = *params;
    [
        -(b + gamma_0) * p0 + (b + gamma_tl + gamma_rel) * p1 + gamma_res * pm,
        b * p0 - (b + gamma_tl + gamma_1 + gamma_rel) * p1,
        gamma_0 * p0 + gamma_1 * p1 - gamma_res * pm,
    ]
}

/// Numerical solution of the rate equations from `initial`, sampled at
/// `times`.
pub fn integrate(
    params: &DetectorParams,
    n_in: f64,
    initial: [f64; 3],
    times: &[f64],
    opts: &AdaptiveOptions,
) -> Result<Vec<[f64; 3]>, RateError> {
    params.validate()?;
    check_n_in(n_in)?;
    let p = *params;
    let sol = ode::dopri5::<3, _, _, RateError>(
        |_t, y| rate_rhs(&p, n_in, y),
        0.0,
        initial,
        times,
        &[],
        opts,
        |_, _| Ok(()),
    )?;
    Ok(sol.samples)
}

fn check_n_in(n_in: f64) -> Result<(), RateError> {
    if n_in.is_finite() && n_in >= 0.0 {
        Ok(())
    } else {
        Err(RateError::BadDrive(n_in))
    }
}

/// Transient solution from the ground state without reset, dark counts or
/// relaxation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedForm {
    pub gamma: f64,
    pub beta: f64,
    pub k: f64,
    pub gamma_1: f64,
}

impl ClosedForm {
    /// Builds the solution for a continuous drive of amplitude `alpha_sq`.
    pub fn new(params: &DetectorParams, alpha_sq: f64) -> Result<Self, RateError> {
        params.validate()?;
        for (name, value) in [
            ("gamma_0", params.gamma_0),
            ("gamma_rel", params.gamma_rel),
            ("gamma_res", params.gamma_res),
        ] {
            if value != 0.0 {
                return Err(RateError::Unsupported { name, value });
            }
        }
        if !(alpha_sq.is_finite() && alpha_sq >= 0.0) {
            return Err(RateError::Param(ParamError::NegativeAmplitude(alpha_sq)));
        }
        let gt = params.gamma_tilde();
        if gt <= 0.0 {
            return Err(RateError::ZeroGammaTilde);
        }
        let w = alpha_sq * params.omega_0 / (2.0 * PI);
        let gtl = params.gamma_tl;
        let gamma = (16.0 * gtl * gtl * w * gt + 64.0 * gtl * gtl * w * w + gt.powi(4)).sqrt()
            / (2.0 * gt);
        let beta = (gt * gt + 8.0 * gtl * w) / (2.0 * gt);
        let k = 4.0 * gtl * w / (gt * gamma);
        Ok(Self {
            gamma,
            beta,
            k,
            gamma_1: params.gamma_1,
        })
    }

    /// `(p1, pm)` at time `t ≥ 0`.
    pub fn evaluate(&self, t: f64) -> (f64, f64) {
        let Self {
            gamma: g,
            beta: b,
            k,
            gamma_1,
        } = *self;
        // e^{−βt}cosh(Γt) and e^{−βt}sinh(Γt) without overflow.
        let slow = ((g - b) * t).exp();
        let fast = (-(g + b) * t).exp();
        let ch = 0.5 * (slow + fast);
        let sh = 0.5 * (slow - fast);
        let p1 = k * sh;
        let pm = gamma_1 * k / (b * b - g * g) * (g - g * ch - b * sh);
        (p1, pm)
    }

    /// Limit of `pm` for t → ∞.
    pub fn pm_limit(&self) -> f64 {
        self.gamma_1 * self.k * self.gamma / (self.beta * self.beta - self.gamma * self.gamma)
    }
}

/// Closed-form `(p1, pm)` at `t` for a continuous drive of amplitude
/// `alpha_sq`, starting from the ground state.
pub fn closed_form_p1_pm(
    params: &DetectorParams,
    alpha_sq: f64,
    t: f64,
) -> Result<(f64, f64), RateError> {
    Ok(ClosedForm::new(params, alpha_sq)?.evaluate(t))
}

/// Exact stationary occupations `(p0, p1, pm)`.
pub fn steady_state(params: &DetectorParams, n_in: f64) -> Result<[f64; 3], RateError> {
    params.validate()?;
    check_n_in(n_in)?;
    if params.gamma_res <= 0.0 {
        return Err(RateError::NoReset);
    }
    let b = beta(params) * n_in;
    let c = b + params.gamma_tl + params.gamma_1 + params.gamma_rel;
    let d = c * (params.gamma_0 + params.gamma_res) + b * (params.gamma_1 + params.gamma_res);
    let p0 = params.gamma_res * c / d;
    let p1 = params.gamma_res * b / d;
    Ok([p0, p1, 1.0 - p0 - p1])
}

/// Stationary `(p0, p1, pm)` from the approximate closed-form expressions.
/// These are not exact fixed points of [`rate_rhs`]; see [`steady_state`].
pub fn steady_state_printed(params: &DetectorParams, n_in: f64) -> Result<[f64; 3], RateError> {
    params.validate()?;
    check_n_in(n_in)?;
    if params.gamma_res <= 0.0 {
        return Err(RateError::NoReset);
    }
    let gt = params.gamma_tilde();
    let b = beta(params) * n_in;
    let r = 1.0 + params.gamma_0 / params.gamma_res;
    let denom = gt
        * (b * (params.gamma_res + params.gamma_1) / (params.gamma_res + params.gamma_0)
            + params.gamma_tl
            + params.gamma_1
            + params.gamma_rel);
    let p0 = 1.0 / r - b * gt / (denom * r * r);
    let p1 = b * gt / (denom * r);
    Ok([p0, p1, 1.0 - p0 - p1])
}

/// Low-excitation detection efficiency.
pub fn efficiency(params: &DetectorParams) -> Result<f64, RateError> {
    params.validate()?;
    let DetectorParams {
        gamma_tl,
        gamma_0,
        gamma_1,
        gamma_rel,
        gamma_res,
        ..
    } = *params;
    if gamma_res <= 0.0 {
        return Err(RateError::NoReset);
    }
    let num = 4.0 * gamma_tl * gamma_res * (gamma_1 * (gamma_0 + gamma_res) + gamma_0 * (gamma_1 + gamma_res));
    let den = (gamma_tl + gamma_1 + gamma_rel)
        * (gamma_tl + gamma_1 + gamma_0 + gamma_rel)
        * (gamma_0 + gamma_res).powi(2);
    if den == 0.0 {
        return Err(RateError::ZeroGammaTilde);
    }
    Ok(num / den)
}

/// Bright count rate over incident photon flux at finite drive `n_in`.
pub fn efficiency_finite_n(params: &DetectorParams, n_in: f64) -> Result<f64, RateError> {
    if n_in <= 0.0 {
        return Err(RateError::BadDrive(n_in));
    }
    let rates = count_rates(params, n_in)?;
    Ok(rates.bright / photon_flux(n_in))
}

/// Coupling rate that maximises [`efficiency`].
pub fn matching_gamma_tl(params: &DetectorParams) -> f64 {
    let a = params.gamma_1 + params.gamma_rel;
    (a * (a + params.gamma_0)).sqrt()
}

/// Efficiency at the matching point in the high-reset limit.
pub fn eta_max(params: &DetectorParams) -> f64 {
    let s = matching_gamma_tl(params);
    4.0 * (params.gamma_0 + params.gamma_1)
        / (params.gamma_0 + 2.0 * (params.gamma_1 + params.gamma_rel + s))
}

/// Coupling loss `η/η_max`, so that `η = η_loss·η_max` holds by
/// construction.
pub fn eta_loss(params: &DetectorParams) -> Result<f64, RateError> {
    Ok(efficiency(params)? / eta_max(params))
}

/// Coupling loss in the limit γ_res → ∞.
pub fn eta_loss_high_reset(params: &DetectorParams) -> f64 {
    let DetectorParams {
        gamma_tl,
        gamma_0,
        gamma_1,
        gamma_rel,
        ..
    } = *params;
    let s = matching_gamma_tl(params);
    gamma_tl * (gamma_0 + 2.0 * (gamma_1 + gamma_rel) + 2.0 * s)
        / ((gamma_tl + gamma_1 + gamma_rel) * (gamma_tl + gamma_0 + gamma_1 + gamma_rel))
}

/// Stationary count rates in 1/ns.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CountRates {
    pub count: f64,
    pub dark: f64,
    pub bright: f64,
}

/// Total, dark and bright count rates at drive `n_in`.
pub fn count_rates(params: &DetectorParams, n_in: f64) -> Result<CountRates, RateError> {
    let [p0, p1, _] = steady_state(params, n_in)?;
    let count = params.gamma_1 * p1 + params.gamma_0 * p0;
    let dark = params.gamma_0 / (1.0 + params.gamma_0 / params.gamma_res);
    Ok(CountRates {
        count,
        dark,
        bright: count - dark,
    })
}

/// Noise-equivalent power in W/√Hz, using [`efficiency`].
pub fn nep(params: &DetectorParams) -> Result<f64, RateError> {
    let eta = efficiency(params)?;
    nep_with_efficiency(params, eta)
}

/// `(ħω_0/η)√(2γ_0)` in SI units.
pub fn nep_with_efficiency(params: &DetectorParams, eta: f64) -> Result<f64, RateError> {
    if params.gamma_0 == 0.0 {
        return Ok(0.0);
    }
    if !(eta > 0.0) {
        return Err(RateError::UnboundedNep { eta });
    }
    let omega_si = params.omega_0 * 1e9;
    let gamma_0_si = params.gamma_0 * 1e9;
    Ok(HBAR * omega_si / eta * (2.0 * gamma_0_si).sqrt())
}

/// Summary of the efficiency analysis for one parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyReport {
    pub eta: f64,
    pub eta_loss: f64,
    pub eta_det: f64,
    pub gamma_tl_max: f64,
    pub gamma_dark: f64,
    pub gamma_bright: f64,
    /// `None` when the NEP is unbounded (η = 0 with dark counts).
    pub nep: Option<f64>,
    /// Drive used for `gamma_bright`.
    pub n_in: f64,
    pub eta_exceeds_one: bool,
    /// γ_res ≥ 10 γ_1, where `eta_det` is a meaningful ceiling.
    pub high_reset: bool,
}

impl EfficiencyReport {
    pub fn evaluate(params: &DetectorParams, n_in: f64) -> Result<Self, RateError> {
        let eta = efficiency(params)?;
        let eta_det = eta_max(params);
        let rates = count_rates(params, n_in)?;
        let nep = match nep_with_efficiency(params, eta) {
            Ok(v) => Some(v),
            Err(RateError::UnboundedNep { .. }) => None,
            Err(e) => return Err(e),
        };
        Ok(Self {
            eta,
            eta_loss: eta / eta_det,
            eta_det,
            gamma_tl_max: matching_gamma_tl(params),
            gamma_dark: rates.dark,
            gamma_bright: rates.bright,
            nep,
            n_in,
            eta_exceeds_one: eta > 1.0,
            high_reset: params.gamma_res >= HIGH_RESET_RATIO * params.gamma_1,
        })
    }
}

#[derive(serde::Serialize)]
struct Quantity {
    value: Option<f64>,
    unit: &'static str,
}

fn q(value: f64, unit: &'static str) -> Quantity {
    Quantity {
        value: Some(value),
        unit,
    }
}

impl Serialize for EfficiencyReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("EfficiencyReport", 10)?;
        s.serialize_field("eta", &q(self.eta, "1"))?;
        s.serialize_field("eta_loss", &q(self.eta_loss, "1"))?;
        s.serialize_field("eta_det", &q(self.eta_det, "1"))?;
        s.serialize_field("gamma_tl_max", &q(self.gamma_tl_max, "1/ns"))?;
        s.serialize_field("gamma_dark", &q(self.gamma_dark, "1/ns"))?;
        s.serialize_field("gamma_bright", &q(self.gamma_bright, "1/ns"))?;
        s.serialize_field(
            "nep",
            &Quantity {
                value: self.nep,
                unit: "W/sqrt(Hz)",
            },
        )?;
        s.serialize_field("photon_flux", &q(photon_flux(self.n_in), "1/ns"))?;
        s.serialize_field("eta_exceeds_one", &self.eta_exceeds_one)?;
        s.serialize_field("high_reset", &self.high_reset)?;
        s.end()
    }
}
