//! Laplace-domain results for the mean-field model.
//!
//! For a continuous drive the Laplace transform of `pm` is a rational
//! function with a pole at zero and three poles from the cubic
//!
//! ```text
//! s³ + (3γ̃/2) s² + (γ̃²/2 + ω_R²) s + ω_R² γ_1/2 = 0
//! ```
//!
//! and its inverse is a finite sum of exponentials. For an exponentially
//! decaying pulse the stationary `pm` is approximated by a series in the
//! Taylor coefficients of `pm(t)` at `t = 0`.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::meanfield::rabi_frequency;
use crate::params::{DetectorParams, DriveSpec, ParamError};

/// Relative separation below which two poles are considered coincident.
/// A double root of a cubic in floating point splits by roughly √ε, so the
/// threshold sits just above that.
pub const DEGENERACY_RTOL: f64 = 1e-7;

pub const DEFAULT_SERIES_ORDER: usize = 5;
pub const MAX_SERIES_ORDER: usize = 12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticError {
    #[error(transparent)]
    Param(#[from] ParamError),

    #[error("{name} = {value} must be 0 for the Laplace-domain results")]
    Unsupported { name: &'static str, value: f64 },

    #[error("poles {a} and {b} coincide; the simple-pole residue formula does not apply")]
    Degenerate { a: Complex64, b: Complex64 },

    #[error("series order must lie in 1..={MAX_SERIES_ORDER}, got {0}")]
    BadOrder(usize),

    #[error("series diverges at order {order} (partial sum {partial}); reduce |α|²/κ")]
    SeriesDiverged { order: usize, partial: f64 },
}

/// Poles of the Laplace-transformed `pm` and their residues.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleSet {
    pub poles: Vec<Complex64>,
    pub residues: Vec<Complex64>,
}

impl PoleSet {
    /// Σ residue·e^{pole·t}.
    pub fn evaluate(&self, t: f64) -> Complex64 {
        self.poles
            .iter()
            .zip(&self.residues)
            .map(|(p, r)| r * (p * t).exp())
            .sum()
    }

    /// Real part of [`PoleSet::evaluate`].
    pub fn pm(&self, t: f64) -> f64 {
        self.evaluate(t).re
    }

    /// Residue at `s = 0`, i.e. `lim_{s→0} s·P_m(s)`.
    pub fn stationary_limit(&self) -> f64 {
        self.poles
            .iter()
            .zip(&self.residues)
            .filter(|(p, _)| p.norm() == 0.0)
            .map(|(_, r)| r.re)
            .sum()
    }
}

fn require_closed_system(params: &DetectorParams) -> Result<(), AnalyticError> {
    params.validate()?;
    for (name, value) in [
        ("gamma_0", params.gamma_0),
        ("gamma_rel", params.gamma_rel),
        ("gamma_res", params.gamma_res),
    ] {
        if value != 0.0 {
            return Err(AnalyticError::Unsupported { name, value });
        }
    }
    Ok(())
}

/// Coefficients `[c2, c1, c0]` of the monic cubic whose roots are the
/// non-zero poles.
pub fn pole_cubic(gamma_tilde: f64, gamma_1: f64, omega_r: f64) -> [f64; 3] {
    let w2 = omega_r * omega_r;
    [
        1.5 * gamma_tilde,
        0.5 * gamma_tilde * gamma_tilde + w2,
        0.5 * w2 * gamma_1,
    ]
}

fn eval_cubic(c: &[f64; 3], s: Complex64) -> Complex64 {
    ((s + c[0]) * s + c[1]) * s + c[2]
}

fn eval_cubic_prime(c: &[f64; 3], s: Complex64) -> Complex64 {
    (3.0 * s + 2.0 * c[0]) * s + c[1]
}

/// Roots of `s³ + c2 s² + c1 s + c0` with real coefficients.
///
/// A real root is bracketed and refined first; the remaining quadratic
/// factor is solved in closed form, and all three roots get a final Newton
/// polish on the full cubic. Complex roots come back as an exact conjugate
/// pair.
pub fn cubic_roots(c: [f64; 3]) -> [Complex64; 3] {
    let f = |x: f64| ((x + c[0]) * x + c[1]) * x + c[2];
    let df = |x: f64| (3.0 * x + 2.0 * c[0]) * x + c[1];
    let bound = 1.0 + c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (mut lo, mut hi) = (-bound, bound);
    // f(lo) < 0 < f(hi) for a monic cubic on the Cauchy bound.
    let mut x = 0.0;
    for _ in 0..200 {
        let fx = f(x);
        if fx == 0.0 {
            break;
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = df(x);
        let newton = x - fx / d;
        x = if d != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (hi - lo).abs() <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    let r = x;
    // s³ + c2 s² + c1 s + c0 = (s − r)(s² + p s + q).
    let p = c[0] + r;
    let q = if r.abs() > 1.0 { -c[2] / r } else { c[1] + r * p };
    let disc = p * p - 4.0 * q;
    let (a, b) = if disc >= 0.0 {
        let sq = disc.sqrt();
        let t = -0.5 * (p + p.signum() * sq);
        let t = if t == 0.0 { -0.5 * sq } else { t };
        let other = if t != 0.0 { q / t } else { 0.0 };
        (Complex64::new(t, 0.0), Complex64::new(other, 0.0))
    } else {
        let im = 0.5 * (-disc).sqrt();
        (Complex64::new(-0.5 * p, im), Complex64::new(-0.5 * p, -im))
    };
    let mut roots = [Complex64::new(r, 0.0), a, b];
    for z in roots.iter_mut() {
        for _ in 0..3 {
            let d = eval_cubic_prime(&c, *z);
            if d.norm() == 0.0 {
                break;
            }
            let step = eval_cubic(&c, *z) / d;
            if !step.is_finite() {
                break;
            }
            *z -= step;
        }
    }
    if disc < 0.0 {
        roots[2] = roots[1].conj();
    }
    roots
}

/// Laplace transform of `pm` for a continuous drive, evaluated at `s`.
pub fn pm_laplace(params: &DetectorParams, alpha_sq: f64, s: Complex64) -> Complex64 {
    let drive = DriveSpec::continuous(alpha_sq, params.omega_0);
    let w2 = rabi_frequency(params, &drive).powi(2);
    let gt = params.gamma_tilde();
    let g1 = params.gamma_1;
    let h = s + 0.5 * gt;
    let bracket = s * s / g1 + gt * s / g1 + 0.5 * w2 / h * (2.0 * s / g1 + 1.0);
    0.5 * w2 / (s * h * bracket)
}

/// Poles and residues of the continuous-drive `pm` transform.
///
/// Without drive (or without tunneling) `pm` vanishes identically and the
/// returned set is empty.
pub fn continuous_pm_poles(
    params: &DetectorParams,
    alpha_sq: f64,
) -> Result<PoleSet, AnalyticError> {
    require_closed_system(params)?;
    let drive = DriveSpec::continuous(alpha_sq, params.omega_0);
    drive.validate()?;
    let omega = rabi_frequency(params, &drive);
    let numerator = 0.5 * omega * omega * params.gamma_1;
    if numerator == 0.0 {
        return Ok(PoleSet {
            poles: Vec::new(),
            residues: Vec::new(),
        });
    }
    let c = pole_cubic(params.gamma_tilde(), params.gamma_1, omega);
    poles_from_cubic(c, numerator)
}

/// Pole set of `numerator / (s·cubic(s))` for a monic cubic with
/// `cubic(0) ≠ 0`.
fn poles_from_cubic(c: [f64; 3], numerator: f64) -> Result<PoleSet, AnalyticError> {
    let roots = cubic_roots(c);
    let mut poles = vec![Complex64::new(0.0, 0.0)];
    poles.extend(roots);
    for i in 0..poles.len() {
        for j in i + 1..poles.len() {
            let scale = poles[i].norm().max(poles[j].norm());
            if (poles[i] - poles[j]).norm() <= DEGENERACY_RTOL * scale {
                return Err(AnalyticError::Degenerate {
                    a: poles[i],
                    b: poles[j],
                });
            }
        }
    }
    let mut residues = vec![Complex64::new(numerator / c[2], 0.0)];
    residues.extend(
        roots
            .iter()
            .map(|r| numerator / (r * eval_cubic_prime(&c, *r))),
    );
    Ok(PoleSet { poles, residues })
}

/// Outcome of the exponential-pulse series.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesResult {
    pub value: f64,
    /// Leading term ω̃²/[4κ(κ+γ̃/2)(1+γ_TL/γ_1)].
    pub leading: f64,
    /// Correction terms for l = 0..=order (subtracted from `leading`).
    pub terms: Vec<f64>,
    pub order: usize,
}

/// Taylor coefficients of `(v, p0, p1, pm)` at t = 0 under the pulse
/// `ω_R(t) = ω̃ e^{−κt/2}`, from the ground state, up to `t^order`.
pub fn exp_pulse_taylor(
    params: &DetectorParams,
    omega_tilde: f64,
    kappa: f64,
    order: usize,
) -> [Vec<f64>; 4] {
    let gt = params.gamma_tilde();
    let gtl = params.gamma_tl + params.gamma_rel;
    let g1 = params.gamma_1;
    let mut w = Vec::with_capacity(order + 1);
    let mut term = omega_tilde;
    for k in 0..=order {
        w.push(term);
        term *= -0.5 * kappa / (k + 1) as f64;
    }
    let mut v = vec![0.0];
    let mut p0 = vec![1.0];
    let mut p1 = vec![0.0];
    let mut pm = vec![0.0];
    for k in 0..order {
        let mut wv = 0.0;
        let mut wd = 0.0;
        for i in 0..=k {
            wv += w[i] * v[k - i];
            wd += w[i] * (p0[k - i] - p1[k - i]);
        }
        let n = (k + 1) as f64;
        v.push((-0.5 * gt * v[k] + wd) / n);
        p0.push((gtl * p1[k] - 0.5 * wv) / n);
        p1.push((-gt * p1[k] + 0.5 * wv) / n);
        pm.push(g1 * p1[k] / n);
    }
    [v, p0, p1, pm]
}

/// ω̃ = √(2|α|²κγ_TL/π), the Rabi frequency at the start of the pulse.
pub fn exp_pulse_omega_tilde(params: &DetectorParams, alpha_sq: f64, kappa: f64) -> f64 {
    (2.0 * alpha_sq * kappa * params.gamma_tl / PI).sqrt()
}

fn series_leading(params: &DetectorParams, w: f64, kappa: f64) -> f64 {
    let gt = params.gamma_tilde();
    w * w / (4.0 * kappa * (kappa + 0.5 * gt) * (1.0 + params.gamma_tl / params.gamma_1))
}

/// Stationary `pm` after an exponential pulse of `alpha_sq` photons, from
/// the series truncated at `order`.
pub fn exp_pulse_steady_state(
    params: &DetectorParams,
    alpha_sq: f64,
    kappa: f64,
    order: usize,
) -> Result<SeriesResult, AnalyticError> {
    require_closed_system(params)?;
    DriveSpec::exponential(alpha_sq, kappa, params.omega_0).validate()?;
    if !(1..=MAX_SERIES_ORDER).contains(&order) {
        return Err(AnalyticError::BadOrder(order));
    }
    let w = exp_pulse_omega_tilde(params, alpha_sq, kappa);
    let gt = params.gamma_tilde();
    let g1 = params.gamma_1;
    let leading = series_leading(params, w, kappa);
    let alpha_1 = 0.5 * w * w * (1.0 + 4.0 * kappa / g1)
        / ((kappa + 0.5 * gt) * (1.0 + params.gamma_tl / g1));
    let [_, _, _, pm] = exp_pulse_taylor(params, w, kappa, order);

    let mut terms = Vec::with_capacity(order + 1);
    let mut factorial = 1.0;
    for (l, c) in pm.iter().enumerate() {
        if l > 0 {
            factorial *= l as f64;
        }
        terms.push(alpha_1 * factorial * c * (2.0 * kappa).powi(-(l as i32 + 1)));
    }
    let value = leading - terms.iter().sum::<f64>();

    let mags: Vec<f64> = terms
        .iter()
        .map(|t| t.abs())
        .filter(|m| *m > 0.0)
        .collect();
    if mags.len() >= 3 {
        let tail = &mags[mags.len() - 3..];
        if tail[0] < tail[1] && tail[1] < tail[2] {
            return Err(AnalyticError::SeriesDiverged {
                order,
                partial: value,
            });
        }
    }
    Ok(SeriesResult {
        value,
        leading,
        terms,
        order,
    })
}

/// Closed fifth-order approximation `leading·(1 − ω̃²/16κ²)`.
pub fn exp_pulse_fifth_order_printed(
    params: &DetectorParams,
    alpha_sq: f64,
    kappa: f64,
) -> Result<f64, AnalyticError> {
    require_closed_system(params)?;
    DriveSpec::exponential(alpha_sq, kappa, params.omega_0).validate()?;
    let w = exp_pulse_omega_tilde(params, alpha_sq, kappa);
    Ok(series_leading(params, w, kappa) * (1.0 - w * w / (16.0 * kappa * kappa)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meanfield::{integrate, IntegratorConfig};
    use nalgebra::Matrix3;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    const W0: f64 = 2.0 * PI * 5.0;

    fn ideal(gtl: f64, g1: f64) -> DetectorParams {
        DetectorParams::ideal(gtl, g1, W0).unwrap()
    }

    fn companion_eigenvalues(c: [f64; 3]) -> Vec<Complex64> {
        let m = Matrix3::new(-c[0], -c[1], -c[2], 1.0, 0.0, 0.0, 0.0, 1.0, 0.0);
        m.complex_eigenvalues().iter().copied().collect()
    }

    fn matched(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
        a.iter()
            .all(|x| b.iter().any(|y| (x - y).norm() <= tol * (1.0 + x.norm())))
    }

    #[test]
    fn cubic_roots_against_companion_matrix() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..500 {
            let c = [
                rng.random_range(-10.0..10.0),
                rng.random_range(-10.0..10.0),
                rng.random_range(-10.0..10.0),
            ];
            let ours = cubic_roots(c);
            let reference = companion_eigenvalues(c);
            assert!(matched(&ours, &reference, 1e-6), "{c:?}: {ours:?} vs {reference:?}");
            for z in ours {
                assert!(eval_cubic(&c, z).norm() < 1e-8 * (1.0 + z.norm().powi(3)));
            }
        }
    }

    #[test]
    fn cubic_roots_known() {
        // (s + 1)(s + 2)(s + 3)
        let mut r: Vec<f64> = cubic_roots([6.0, 11.0, 6.0]).iter().map(|z| z.re).collect();
        r.sort_by(f64::total_cmp);
        assert!((r[0] + 3.0).abs() < 1e-12 && (r[1] + 2.0).abs() < 1e-12 && (r[2] + 1.0).abs() < 1e-12);
        // (s + 1)(s² + 1)
        let r = cubic_roots([1.0, 1.0, 1.0]);
        assert!(r.iter().any(|z| (z - Complex64::new(0.0, 1.0)).norm() < 1e-12));
        assert!(r.iter().any(|z| (z + 1.0).norm() < 1e-12));
    }

    #[test]
    fn zero_pole_and_unit_limit() {
        let p = ideal(0.7, 1.3);
        let set = continuous_pm_poles(&p, 0.05).unwrap();
        assert_eq!(set.poles[0], Complex64::new(0.0, 0.0));
        assert!((set.stationary_limit() - 1.0).abs() < 1e-12);
        let s = Complex64::new(1e-10, 0.0);
        assert!(((s * pm_laplace(&p, 0.05, s)).re - 1.0).abs() < 1e-9);
    }

    #[test]
    fn residues_match_laplace_transform() {
        let p = ideal(0.7, 1.3);
        let set = continuous_pm_poles(&p, 0.2).unwrap();
        let s = Complex64::new(0.3, 0.9);
        let partial: Complex64 = set
            .poles
            .iter()
            .zip(&set.residues)
            .map(|(pole, r)| r / (s - pole))
            .sum();
        assert!((partial - pm_laplace(&p, 0.2, s)).norm() < 1e-12);
    }

    #[test]
    fn reconstruction_matches_meanfield() {
        for (gtl, g1, alpha_sq) in [(1.0, 1.0, 0.1), (0.5, 2.0, 0.02), (2.0, 0.5, 1.0)] {
            let p = ideal(gtl, g1);
            let set = continuous_pm_poles(&p, alpha_sq).unwrap();
            let t_end = 20.0 / p.gamma_tilde();
            let traj = integrate(
                &p,
                &DriveSpec::continuous(alpha_sq, W0),
                &IntegratorConfig::default().with_t_end(t_end).with_samples(401),
            )
            .unwrap();
            for (t, s) in traj.times.iter().zip(&traj.states) {
                let z = set.evaluate(*t);
                assert!((z.re - s.pm).abs() < 1e-6, "t={t}: {} vs {}", z.re, s.pm);
                assert!(z.im.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn no_drive_gives_no_poles() {
        let set = continuous_pm_poles(&ideal(1.0, 1.0), 0.0).unwrap();
        assert!(set.poles.is_empty());
        assert_eq!(set.pm(3.0), 0.0);
    }

    #[test]
    fn rejects_open_system() {
        let p = DetectorParams::new(1.0, 0.1, 1.0, 0.0, 0.0, W0).unwrap();
        assert!(matches!(
            continuous_pm_poles(&p, 1.0),
            Err(AnalyticError::Unsupported { name: "gamma_0", .. })
        ));
    }

    #[test]
    fn degenerate_poles_are_reported() {
        // (s + 1)²(s + 2)
        assert!(matches!(
            poles_from_cubic([4.0, 5.0, 2.0], 1.0),
            Err(AnalyticError::Degenerate { .. })
        ));
        assert!(poles_from_cubic([6.0, 11.0, 6.0], 1.0).is_ok());
    }

    #[test]
    fn series_trivial_and_printed_identity() {
        let p = ideal(1.0, 1.0);
        assert_eq!(exp_pulse_steady_state(&p, 0.0, 5.0, 5).unwrap().value, 0.0);
        let (a, k) = (0.01, 5.0);
        let w = exp_pulse_omega_tilde(&p, a, k);
        let lead = w * w / (4.0 * k * (k + 1.0) * 2.0);
        let printed = exp_pulse_fifth_order_printed(&p, a, k).unwrap();
        assert!((printed - lead * (1.0 - w * w / (16.0 * k * k))).abs() < 1e-18);
        let s = exp_pulse_steady_state(&p, a, k, 5).unwrap();
        assert!((s.leading - lead).abs() < 1e-18);
    }

    #[test]
    fn series_order_bounds() {
        let p = ideal(1.0, 1.0);
        assert_eq!(
            exp_pulse_steady_state(&p, 0.1, 5.0, 0),
            Err(AnalyticError::BadOrder(0))
        );
        assert_eq!(
            exp_pulse_steady_state(&p, 0.1, 5.0, 13),
            Err(AnalyticError::BadOrder(13))
        );
    }

    #[test]
    fn taylor_coefficients_match_ode() {
        let p = ideal(0.3, 0.7);
        let (a, k) = (0.5, 2.0);
        let w = exp_pulse_omega_tilde(&p, a, k);
        let [_, _, _, pm] = exp_pulse_taylor(&p, w, k, 8);
        let t: f64 = 0.05;
        let poly: f64 = pm.iter().enumerate().map(|(i, c)| c * t.powi(i as i32)).sum();
        let traj = integrate(
            &p,
            &DriveSpec::exponential(a, k, W0),
            &IntegratorConfig {
                rel_tol: 1e-12,
                abs_tol: 1e-16,
                samples: crate::meanfield::SampleGrid::Times(vec![t]),
                ..Default::default()
            },
        )
        .unwrap();
        let pm_ode = traj.states[0].pm;
        assert!((poly - pm_ode).abs() < 1e-12 * pm_ode.abs().max(1e-12) + 1e-16, "{poly} vs {pm_ode}");
    }

    #[test]
    fn series_diverges_for_strong_slow_pulses() {
        let p = ideal(1.0, 1.0);
        let r = exp_pulse_steady_state(&p, 5.0, 0.2, 8);
        assert!(matches!(r, Err(AnalyticError::SeriesDiverged { .. })), "{r:?}");
    }

    #[test]
    fn series_plateau_in_validity_region() {
        let p = ideal(1.0, 1.0);
        let k = 5.0;
        for ratio in [0.05, 0.1, 0.19] {
            let w = ratio * k;
            let a = w * w * PI / (2.0 * k * p.gamma_tl);
            let vals: Vec<f64> = (3..=8)
                .map(|o| exp_pulse_steady_state(&p, a, k, o).unwrap().value)
                .collect();
            let spread = vals.iter().fold(f64::MIN, |m, v| m.max(*v))
                - vals.iter().fold(f64::MAX, |m, v| m.min(*v));
            assert!(spread < 1e-4, "ratio {ratio}: {vals:?}");
        }
    }

    proptest! {
        #[test]
        fn poles_are_stable_and_conjugate(
            gtl in 0.05f64..5.0, g1 in 0.05f64..5.0, a in 1e-3f64..2.0,
        ) {
            let p = ideal(gtl, g1);
            let set = continuous_pm_poles(&p, a).unwrap();
            prop_assert_eq!(set.poles.len(), 4);
            for z in &set.poles[1..] {
                prop_assert!(z.re < 0.0);
                if z.im != 0.0 {
                    prop_assert!(set.poles.iter().any(|y| *y == z.conj()));
                }
            }
            prop_assert!((set.stationary_limit() - 1.0).abs() < 1e-9);
            prop_assert!(set.evaluate(0.0).norm() < 1e-8);
            for t in [0.1, 1.0, 10.0] {
                prop_assert!(set.evaluate(t).im.abs() < 1e-10);
            }
        }
    }
}
