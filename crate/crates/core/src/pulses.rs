//! Drive envelopes f(t) with unit norm ∫₀^∞ |f(t)|² dt = 1.
//!
//! Two analytic shapes are built in (exponentially damped and Gaussian); any
//! other real envelope can be supplied as a table and is linearly
//! interpolated and renormalised on load.

use std::f64::consts::{PI, SQRT_2};
use std::io::Read;

use thiserror::Error;

use crate::params::{DriveKind, Table};

/// Exponential pulses are truncated at `EXP_SUPPORT_DECAYS / κ`.
pub const EXP_SUPPORT_DECAYS: f64 = 40.0;
/// Gaussian pulses are truncated at `t0 ± GAUSS_SUPPORT_WIDTHS / (σ√2)`.
pub const GAUSS_SUPPORT_WIDTHS: f64 = 6.0;

#[derive(Debug, Error)]
pub enum PulseError {
    #[error("pulse parameter `{name}` must be finite and positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("Gaussian centre t0 = {t0} ns does not contain the pulse support; need t0 >= {min} ns")]
    CentreTooEarly { t0: f64, min: f64 },

    #[error("tabulated envelope: {0}")]
    Table(String),

    #[error("reading tabulated envelope: {0}")]
    Csv(#[from] csv::Error),
}

/// Default Gaussian centre: the envelope at t = 0 is e^{-18} of its peak.
pub fn default_gaussian_t0(sigma: f64) -> f64 {
    GAUSS_SUPPORT_WIDTHS / (sigma * SQRT_2)
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Exponential { kappa: f64 },
    Gaussian { sigma: f64, t0: f64 },
    Tabulated { times: Vec<f64>, values: Vec<f64> },
}

/// A real pulse envelope `scale · f_raw(t)` with a finite effective support.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    shape: Shape,
    scale: f64,
    support: (f64, f64),
}

/// f(t) = √κ e^{−κt/2}; already unit norm.
pub fn exponential_envelope(kappa: f64) -> Result<Envelope, PulseError> {
    positive("kappa", kappa)?;
    Ok(Envelope {
        shape: Shape::Exponential { kappa },
        scale: 1.0,
        support: (0.0, EXP_SUPPORT_DECAYS / kappa),
    })
}

/// Unit-norm Gaussian `c·(8πσ²)^{1/4} exp(−σ²(t−t0)²)` with `c = 1/√(2π)`.
pub fn gaussian_envelope(sigma: f64, t0: f64) -> Result<Envelope, PulseError> {
    let mut env = gaussian_envelope_literal(sigma, t0)?;
    env.scale = 1.0 / (2.0 * PI).sqrt();
    Ok(env)
}

/// Gaussian with the bare `(8πσ²)^{1/4}` prefactor, whose squared norm is
/// 2π rather than 1. Only useful for side-by-side comparisons.
pub fn gaussian_envelope_literal(sigma: f64, t0: f64) -> Result<Envelope, PulseError> {
    positive("sigma", sigma)?;
    let half_width = GAUSS_SUPPORT_WIDTHS / (sigma * SQRT_2);
    if !(t0.is_finite() && t0 >= half_width * (1.0 - 1e-12)) {
        return Err(PulseError::CentreTooEarly {
            t0,
            min: half_width,
        });
    }
    Ok(Envelope {
        shape: Shape::Gaussian { sigma, t0 },
        scale: 1.0,
        support: (t0 - half_width, t0 + half_width),
    })
}

/// Linearly interpolated envelope, renormalised so that ∫|f|² = 1.
pub fn tabulated_envelope(table: &Table) -> Result<Envelope, PulseError> {
    let Table { times, values } = table;
    if times.len() < 2 || times.len() != values.len() {
        return Err(PulseError::Table(
            "need at least two (t, f) rows with matching lengths".into(),
        ));
    }
    if times[0] < 0.0 || times.iter().chain(values).any(|x| !x.is_finite()) {
        return Err(PulseError::Table(
            "times must be non-negative and all samples finite".into(),
        ));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(PulseError::Table("times must be strictly increasing".into()));
    }
    let norm_sq = piecewise_energy(times, values, f64::INFINITY);
    if norm_sq <= 0.0 {
        return Err(PulseError::Table("envelope has zero norm".into()));
    }
    Ok(Envelope {
        support: (times[0], *times.last().unwrap()),
        shape: Shape::Tabulated {
            times: times.clone(),
            values: values.clone(),
        },
        scale: 1.0 / norm_sq.sqrt(),
    })
}

/// Reads a two-column `t,f` CSV. A non-numeric first row is treated as a
/// header.
pub fn read_table_csv<R: Read>(reader: R) -> Result<Table, PulseError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut table = Table {
        times: Vec::new(),
        values: Vec::new(),
    };
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != 2 {
            return Err(PulseError::Table(format!(
                "row {} has {} columns, expected 2",
                row + 1,
                record.len()
            )));
        }
        let parsed = (record[0].parse::<f64>(), record[1].parse::<f64>());
        match parsed {
            (Ok(t), Ok(f)) => {
                table.times.push(t);
                table.values.push(f);
            }
            _ if row == 0 => continue,
            _ => {
                return Err(PulseError::Table(format!(
                    "row {} is not numeric",
                    row + 1
                )))
            }
        }
    }
    Ok(table)
}

impl Envelope {
    /// Builds the envelope for a pulsed drive kind; `None` for a continuous
    /// drive.
    pub fn from_kind(kind: &DriveKind) -> Result<Option<Self>, PulseError> {
        Ok(match kind {
            DriveKind::Continuous => None,
            DriveKind::Exponential { kappa } => Some(exponential_envelope(*kappa)?),
            DriveKind::Gaussian {
                sigma,
                t0,
                literal_prefactor: false,
            } => Some(gaussian_envelope(*sigma, *t0)?),
            DriveKind::Gaussian {
                sigma,
                t0,
                literal_prefactor: true,
            } => Some(gaussian_envelope_literal(*sigma, *t0)?),
            DriveKind::Tabulated(table) => Some(tabulated_envelope(table)?),
        })
    }

    /// Amplitude in 1/√ns.
    pub fn evaluate(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let raw = match &self.shape {
            Shape::Exponential { kappa } => kappa.sqrt() * (-0.5 * kappa * t).exp(),
            Shape::Gaussian { sigma, t0 } => {
                let d = t - t0;
                (8.0 * PI * sigma * sigma).powf(0.25) * (-sigma * sigma * d * d).exp()
            }
            Shape::Tabulated { times, values } => interpolate(times, values, t),
        };
        self.scale * raw
    }

    /// `[t_start, t_end]` outside of which the neglected mass is below 1e-8.
    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    /// Multiplier applied to the raw shape.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// ∫₀^t |f|² dt, i.e. the fraction of the pulse delivered by time `t`.
    pub fn delivered_fraction(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let s2 = self.scale * self.scale;
        match &self.shape {
            Shape::Exponential { kappa } => s2 * -(-kappa * t).exp_m1(),
            Shape::Gaussian { sigma, t0 } => {
                let k = SQRT_2 * sigma;
                s2 * PI * (libm::erf(k * (t - t0)) + libm::erf(k * t0))
            }
            Shape::Tabulated { times, values } => s2 * piecewise_energy(times, values, t),
        }
    }

    /// ∫₀^∞ |f|² dt (1 except for the literal Gaussian).
    pub fn norm_sq(&self) -> f64 {
        self.delivered_fraction(f64::INFINITY)
    }

    /// Time of the envelope maximum.
    pub fn peak_time(&self) -> f64 {
        match &self.shape {
            Shape::Exponential { .. } => 0.0,
            Shape::Gaussian { t0, .. } => *t0,
            Shape::Tabulated { times, values } => {
                let i = values
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                    .map(|(i, _)| i)
                    .unwrap_or(0);
                times[i]
            }
        }
    }

    /// Points where the envelope has kinks (table nodes); the integrator
    /// steps onto these to keep its error estimate honest.
    pub fn breakpoints(&self) -> &[f64] {
        match &self.shape {
            Shape::Tabulated { times, .. } => times,
            _ => &[],
        }
    }
}

fn positive(name: &'static str, value: f64) -> Result<(), PulseError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(PulseError::NonPositive { name, value })
    }
}

fn interpolate(times: &[f64], values: &[f64], t: f64) -> f64 {
    let last = times.len() - 1;
    if t < times[0] || t > times[last] {
        return 0.0;
    }
    let i = times.partition_point(|x| *x <= t);
    if i == 0 {
        return values[0];
    }
    if i > last {
        return values[last];
    }
    let (t0, t1) = (times[i - 1], times[i]);
    let w = (t - t0) / (t1 - t0);
    values[i - 1] + w * (values[i] - values[i - 1])
}

/// Exact ∫ of the squared linear interpolant up to `t`.
fn piecewise_energy(times: &[f64], values: &[f64], t: f64) -> f64 {
    let mut acc = 0.0;
    for i in 1..times.len() {
        let (ta, tb) = (times[i - 1], times[i]);
        if t <= ta {
            break;
        }
        let (a, b) = (values[i - 1], values[i]);
        if t >= tb {
            acc += (tb - ta) * (a * a + a * b + b * b) / 3.0;
        } else {
            let fb = interpolate(times, values, t);
            acc += (t - ta) * (a * a + a * fb + fb * fb) / 3.0;
            break;
        }
    }
    acc
}
