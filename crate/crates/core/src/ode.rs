//! Explicit Runge–Kutta integrators for small fixed-size systems.
//!
//! [`dopri5`] is the Dormand–Prince 5(4) pair with the usual mixed
//! absolute/relative error norm; it lands exactly on every requested sample
//! time and on caller-supplied breakpoints (kinks in the right-hand side).
//! [`rk4`] is the classical fixed-step scheme, kept as a reference for
//! convergence-order checks.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("exceeded {max_steps} steps before t = {t}")]
    TooManySteps { t: f64, max_steps: usize },

    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },

    #[error("sample times must be finite, non-decreasing and not before t0")]
    BadSamples,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub initial_step: Option<f64>,
    pub max_steps: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_step: f64::INFINITY,
            initial_step: None,
            max_steps: 5_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution<const N: usize> {
    /// State at each requested sample time, in order.
    pub samples: Vec<[f64; N]>,
    pub accepted: usize,
    pub rejected: usize,
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[inline]
fn axpy<const N: usize>(y: &[f64; N], terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += c * k[i];
        }
    }
    out
}

fn scaled_norm<const N: usize>(
    err: &[f64; N],
    y0: &[f64; N],
    y1: &[f64; N],
    opts: &AdaptiveOptions,
) -> f64 {
    let mut acc = 0.0;
    for i in 0..N {
        let sc = opts.abs_tol + opts.rel_tol * y0[i].abs().max(y1[i].abs());
        acc += (err[i] / sc).powi(2);
    }
    (acc / N as f64).sqrt()
}

fn initial_step<const N: usize, F>(
    f: &F,
    t0: f64,
    y0: &[f64; N],
    f0: &[f64; N],
    opts: &AdaptiveOptions,
) -> f64
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let zero = [0.0; N];
    let d0 = scaled_norm(y0, &zero, y0, opts);
    let d1 = scaled_norm(f0, &zero, y0, opts);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let y1 = axpy(y0, &[(h0, f0)]);
    let f1 = f(t0 + h0, &y1);
    let mut diff = [0.0; N];
    for i in 0..N {
        diff[i] = f1[i] - f0[i];
    }
    let d2 = scaled_norm(&diff, &zero, y0, opts) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1)
}

/// Adaptive Dormand–Prince integration from `(t0, y0)`.
///
/// `samples` must be non-decreasing and `>= t0`; the integration ends at
/// the last sample. `breakpoints` (any order) are additional times the
/// integrator must step onto. `observe` sees every accepted step and may
/// abort the run by returning an error.
pub fn dopri5<const N: usize, F, O, E>(
    f: F,
    t0: f64,
    y0: [f64; N],
    samples: &[f64],
    breakpoints: &[f64],
    opts: &AdaptiveOptions,
    mut observe: O,
) -> Result<Solution<N>, E>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    O: FnMut(f64, &[f64; N]) -> Result<(), E>,
    E: From<OdeError>,
{
    check_samples(t0, samples)?;
    let mut out = Vec::with_capacity(samples.len());
    let mut sol = Solution {
        samples: Vec::new(),
        accepted: 0,
        rejected: 0,
    };
    let Some(&t_end) = samples.last() else {
        return Ok(sol);
    };

    let mut stops: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|b| *b > t0 && *b < t_end)
        .collect();
    stops.sort_by(f64::total_cmp);
    let mut stop_idx = 0;
    let mut sample_idx = 0;

    let mut t = t0;
    let mut y = y0;
    while sample_idx < samples.len() && samples[sample_idx] <= t {
        out.push(y);
        sample_idx += 1;
    }

    let mut k1 = f(t, &y);
    let mut h = opts
        .initial_step
        .unwrap_or_else(|| initial_step(&f, t, &y, &k1, opts))
        .min(opts.max_step);
    let mut steps = 0usize;
    let mut last_rejected = false;

    while sample_idx < samples.len() {
        while stop_idx < stops.len() && stops[stop_idx] <= t {
            stop_idx += 1;
        }
        let next_sample = samples[sample_idx];
        let target = match stops.get(stop_idx) {
            Some(&b) if b < next_sample => b,
            _ => next_sample,
        };
        let remaining = target - t;
        let mut lands = false;
        let mut h_try = h.min(opts.max_step);
        if h_try >= remaining * (1.0 - 1e-12) {
            h_try = remaining;
            lands = true;
        }
        if h_try <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(OdeError::StepUnderflow { t, h: h_try }.into());
        }
        steps += 1;
        if steps > opts.max_steps {
            return Err(OdeError::TooManySteps {
                t,
                max_steps: opts.max_steps,
            }
            .into());
        }

        let k2 = f(t + C2 * h_try, &axpy(&y, &[(h_try * A21, &k1)]));
        let k3 = f(
            t + C3 * h_try,
            &axpy(&y, &[(h_try * A31, &k1), (h_try * A32, &k2)]),
        );
        let k4 = f(
            t + C4 * h_try,
            &axpy(
                &y,
                &[(h_try * A41, &k1), (h_try * A42, &k2), (h_try * A43, &k3)],
            ),
        );
        let k5 = f(
            t + C5 * h_try,
            &axpy(
                &y,
                &[
                    (h_try * A51, &k1),
                    (h_try * A52, &k2),
                    (h_try * A53, &k3),
                    (h_try * A54, &k4),
                ],
            ),
        );
        let t_new = if lands { target } else { t + h_try };
        let k6 = f(
            t + h_try,
            &axpy(
                &y,
                &[
                    (h_try * A61, &k1),
                    (h_try * A62, &k2),
                    (h_try * A63, &k3),
                    (h_try * A64, &k4),
                    (h_try * A65, &k5),
                ],
            ),
        );
        let y_new = axpy(
            &y,
            &[
                (h_try * B1, &k1),
                (h_try * B3, &k3),
                (h_try * B4, &k4),
                (h_try * B5, &k5),
                (h_try * B6, &k6),
            ],
        );
        let k7 = f(t_new, &y_new);
        let mut err = [0.0; N];
        for i in 0..N {
            err[i] = h_try
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let err_norm = scaled_norm(&err, &y, &y_new, opts);
        if !err_norm.is_finite() {
            if y_new.iter().all(|x| x.is_finite()) {
                h = h_try * 0.1;
                sol.rejected += 1;
                last_rejected = true;
                continue;
            }
            return Err(OdeError::NonFinite { t }.into());
        }

        if err_norm <= 1.0 {
            t = t_new;
            y = y_new;
            k1 = k7;
            sol.accepted += 1;
            observe(t, &y)?;
            while sample_idx < samples.len() && samples[sample_idx] <= t {
                out.push(y);
                sample_idx += 1;
            }
            let mut factor = if err_norm == 0.0 {
                5.0
            } else {
                (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
            };
            if last_rejected {
                factor = factor.min(1.0);
            }
            // A step shortened to land on a target says nothing about the
            // admissible step size.
            h = if lands { h.max(h_try * factor) } else { h_try * factor };
            last_rejected = false;
        } else {
            h = h_try * (0.9 * err_norm.powf(-0.2)).max(0.1);
            sol.rejected += 1;
            last_rejected = true;
        }
    }
    sol.samples = out;
    Ok(sol)
}

/// Classical fixed-step RK4. Each interval between consecutive samples is
/// split into `ceil(Δt / step)` equal sub-steps, so samples are hit exactly.
pub fn rk4<const N: usize, F>(
    f: F,
    t0: f64,
    y0: [f64; N],
    samples: &[f64],
    step: f64,
) -> Result<Vec<[f64; N]>, OdeError>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    check_samples(t0, samples)?;
    if !(step.is_finite() && step > 0.0) {
        return Err(OdeError::StepUnderflow { t: t0, h: step });
    }
    let mut out = Vec::with_capacity(samples.len());
    let mut t = t0;
    let mut y = y0;
    for &ts in samples {
        let span = ts - t;
        if span > 0.0 {
            let n = (span / step * (1.0 - 1e-12)).ceil().max(1.0) as usize;
            let h = span / n as f64;
            for i in 0..n {
                let ti = t + i as f64 * h;
                let k1 = f(ti, &y);
                let k2 = f(ti + 0.5 * h, &axpy(&y, &[(0.5 * h, &k1)]));
                let k3 = f(ti + 0.5 * h, &axpy(&y, &[(0.5 * h, &k2)]));
                let k4 = f(ti + h, &axpy(&y, &[(h, &k3)]));
                y = axpy(
                    &y,
                    &[
                        (h / 6.0, &k1),
                        (h / 3.0, &k2),
                        (h / 3.0, &k3),
                        (h / 6.0, &k4),
                    ],
                );
            }
            if y.iter().any(|x| !x.is_finite()) {
                return Err(OdeError::NonFinite { t: ts });
            }
            t = ts;
        }
        out.push(y);
    }
    Ok(out)
}

fn check_samples(t0: f64, samples: &[f64]) -> Result<(), OdeError> {
    let ordered = samples.windows(2).all(|w| w[1] >= w[0]);
    let finite = samples.iter().all(|s| s.is_finite());
    if !ordered || !finite || samples.first().is_some_and(|s| *s < t0) {
        return Err(OdeError::BadSamples);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oscillator(_t: f64, y: &[f64; 2]) -> [f64; 2] {
        [y[1], -y[0]]
    }

    fn grid(n: usize, t_end: f64) -> Vec<f64> {
        (0..=n).map(|i| t_end * i as f64 / n as f64).collect()
    }

    #[test]
    fn dopri5_harmonic_oscillator() {
        let ts = grid(50, 20.0);
        let opts = AdaptiveOptions {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            ..Default::default()
        };
        let sol =
            dopri5::<2, _, _, OdeError>(oscillator, 0.0, [1.0, 0.0], &ts, &[], &opts, |_, _| Ok(()))
                .unwrap();
        assert_eq!(sol.samples.len(), ts.len());
        for (t, y) in ts.iter().zip(&sol.samples) {
            assert!((y[0] - t.cos()).abs() < 1e-8, "t={t}");
            assert!((y[1] + t.sin()).abs() < 1e-8);
        }
        assert!(sol.accepted > 0);
    }

    #[test]
    fn dopri5_lands_on_breakpoints() {
        // dy/dt = 1 − t up to t = 1, 0 afterwards.
        let f = |t: f64, _y: &[f64; 1]| [(1.0 - t).max(0.0)];
        let mut seen = Vec::new();
        let sol = dopri5::<1, _, _, OdeError>(
            f,
            0.0,
            [0.0],
            &[3.0],
            &[1.0],
            &AdaptiveOptions::default(),
            |t, _| {
                seen.push(t);
                Ok(())
            },
        )
        .unwrap();
        assert!(seen.contains(&1.0));
        assert!((sol.samples[0][0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn observer_can_abort() {
        #[derive(Debug)]
        enum Stop {
            Ode,
            At(f64),
        }
        impl From<OdeError> for Stop {
            fn from(_: OdeError) -> Self {
                Stop::Ode
            }
        }
        let res = dopri5(
            |_t, y: &[f64; 1]| [y[0]],
            0.0,
            [1.0],
            &[5.0],
            &[],
            &AdaptiveOptions::default(),
            |t, y: &[f64; 1]| if y[0] > 10.0 { Err(Stop::At(t)) } else { Ok(()) },
        );
        match res {
            Err(Stop::At(t)) => assert!(t > 2.3 && t < 5.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn step_underflow_is_reported() {
        // Finite-time blow-up at t = 1.
        let res = dopri5::<1, _, _, OdeError>(
            |_t, y| [y[0] * y[0]],
            0.0,
            [1.0],
            &[2.0],
            &[],
            &AdaptiveOptions::default(),
            |_, _| Ok(()),
        );
        match res {
            Err(OdeError::StepUnderflow { t, .. }) | Err(OdeError::NonFinite { t }) => {
                assert!((t - 1.0).abs() < 1e-2, "t={t}")
            }
            Err(OdeError::TooManySteps { t, .. }) => assert!((t - 1.0).abs() < 1e-2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_unordered_samples() {
        let r = rk4(oscillator, 0.0, [1.0, 0.0], &[1.0, 0.5], 0.1);
        assert_eq!(r, Err(OdeError::BadSamples));
    }

    #[test]
    fn rk4_is_fourth_order() {
        let ts = [4.0];
        let exact = 4.0f64.cos();
        let e1 = (rk4(oscillator, 0.0, [1.0, 0.0], &ts, 0.1).unwrap()[0][0] - exact).abs();
        let e2 = (rk4(oscillator, 0.0, [1.0, 0.0], &ts, 0.05).unwrap()[0][0] - exact).abs();
        let ratio = e1 / e2;
        assert!(ratio > 14.0 && ratio < 18.0, "ratio {ratio}");
    }
}
