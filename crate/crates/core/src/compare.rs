//! Side-by-side comparison of the coherent mean-field `pm(t)` and the
//! incoherent closed-form `pm(t)` for the same continuous drive.

use serde::Serialize;

use crate::meanfield::{self, IntegratorConfig, MeanFieldError, SampleGrid};
use crate::params::{DetectorParams, DriveSpec};
use crate::rate::{ClosedForm, RateError};

#[derive(Debug, thiserror::Error)]
pub enum CompareError {
    #[error(transparent)]
    MeanField(#[from] MeanFieldError),
    #[error(transparent)]
    Rate(#[from] RateError),
}

/// Differences below this are treated as touching, not crossing.
pub const CROSSING_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub times: Vec<f64>,
    pub mean_field: Vec<f64>,
    pub rate: Vec<f64>,
    pub max_gap: f64,
    pub mean_gap: f64,
    /// Sign changes of `mean_field − rate` after t = 0.
    pub crossings: usize,
}

/// Evaluates both models on a uniform grid of `samples` points over
/// `[0, t_end]`.
pub fn compare(
    params: &DetectorParams,
    alpha_sq: f64,
    t_end: f64,
    samples: usize,
    cfg: &IntegratorConfig,
) -> Result<Comparison, CompareError> {
    let closed = ClosedForm::new(params, alpha_sq)?;
    let cfg = IntegratorConfig {
        samples: SampleGrid::Uniform(samples),
        t_end: Some(t_end),
        ..cfg.clone()
    };
    let traj = meanfield::integrate(params, &DriveSpec::continuous(alpha_sq, params.omega_0), &cfg)?;
    let mean_field: Vec<f64> = traj.states.iter().map(|s| s.pm).collect();
    let rate: Vec<f64> = traj.times.iter().map(|t| closed.evaluate(*t).1).collect();
    let gaps: Vec<f64> = mean_field
        .iter()
        .zip(&rate)
        .map(|(a, b)| (a - b).abs())
        .collect();
    let max_gap = gaps.iter().fold(0.0f64, |m, g| m.max(*g));
    let mean_gap = gaps.iter().sum::<f64>() / gaps.len() as f64;
    Ok(Comparison {
        crossings: count_crossings(&mean_field, &rate),
        times: traj.times,
        mean_field,
        rate,
        max_gap,
        mean_gap,
    })
}

/// Number of sign changes of `a − b`, ignoring points where the curves
/// are within [`CROSSING_EPS`].
pub fn count_crossings(a: &[f64], b: &[f64]) -> usize {
    let mut last = 0i8;
    let mut n = 0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        if d.abs() <= CROSSING_EPS {
            continue;
        }
        let sign = if d > 0.0 { 1 } else { -1 };
        if last != 0 && sign != last {
            n += 1;
        }
        last = sign;
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn crossings_counted() {
        assert_eq!(count_crossings(&[0.0, 1.0, -1.0, 1.0], &[0.0; 4]), 2);
        assert_eq!(count_crossings(&[0.0, 1.0, 0.0, 1.0], &[0.0; 4]), 0);
    }

    #[test]
    fn both_start_at_zero() {
        let p = DetectorParams::ideal(1.0, 1.0, 2.0 * PI * 5.0).unwrap();
        let c = compare(&p, 0.1, 10.0, 101, &IntegratorConfig::default()).unwrap();
        assert_eq!(c.mean_field[0], 0.0);
        assert_eq!(c.rate[0], 0.0);
        assert!(c.max_gap >= c.mean_gap);
    }
}
