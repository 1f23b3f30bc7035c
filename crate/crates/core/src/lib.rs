//! Models of a Josephson photomultiplier used as a microwave photon counter.
//!
//! Rates are in 1/ns, angular frequencies in rad/ns and times in ns. The
//! crate covers the coherent mean-field dynamics ([`meanfield`]), the
//! incoherent rate model with its efficiency and noise figures ([`rate`]),
//! Laplace-domain reference solutions ([`analytic`]) and parameter sweeps
//! ([`sweep`]).

pub mod analytic;
pub mod compare;
pub mod meanfield;
pub mod ode;
pub mod optimize;
pub mod params;
pub mod pulses;
pub mod rate;
pub mod sweep;

pub use analytic::{AnalyticError, PoleSet, SeriesResult};
pub use compare::{compare, Comparison, CompareError};
pub use meanfield::{
    integrate, rabi_frequency, IntegratorConfig, MeanFieldError, Method, SampleGrid, Trajectory,
};
pub use optimize::Maximum;
pub use params::{
    alpha_sq_for_photons, continuous_photon_number, flux, photon_number, DetectorParams,
    DriveKind, DriveSpec, MeanFieldState, ParamError, Table,
};
pub use pulses::{Envelope, PulseError};
pub use rate::{ClosedForm, CountRates, EfficiencyReport, RateError};
pub use sweep::{Axis, Objective, ParamName, Scale, SweepError, SweepGrid, SweepSpec};
