//! One-dimensional maximisation: a coarse grid scan followed by golden-
//! section refinement inside the bracketing cells.

use rayon::prelude::*;

/// Golden-section search for the maximum of `f` on `[a, b]`, stopping when
/// the bracket is narrower than `tol`.
pub fn golden_section_max<F, E>(f: F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64), E>
where
    F: Fn(f64) -> Result<f64, E>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Maximum {
    /// Location of the refined maximum.
    pub x: f64,
    pub value: f64,
    /// Best point of the grid scan.
    pub grid_x: f64,
    pub grid_value: f64,
    /// Spacing of the scan grid at `grid_x` (in `x` units).
    pub grid_spacing: f64,
    /// The scan peaked on the first or last grid point, so the true maximum
    /// may lie outside `[lo, hi]`; `x` is that boundary point.
    pub at_boundary: bool,
}

/// Maximises `f(x)` for `x` in `[lo, hi]` on a logarithmic axis.
///
/// `points` grid values are scanned in parallel, then the maximum is refined
/// by golden section on `ln x` until the bracket is below
/// `ln(1 + rel_tol)`.
pub fn maximize_log<F, E>(
    f: F,
    lo: f64,
    hi: f64,
    points: usize,
    rel_tol: f64,
) -> Result<Maximum, E>
where
    F: Fn(f64) -> Result<f64, E> + Sync,
    E: Send,
{
    assert!(lo > 0.0 && hi > lo && points >= 3, "invalid search range");
    let (a, b) = (lo.ln(), hi.ln());
    let step = (b - a) / (points - 1) as f64;
    let xs: Vec<f64> = (0..points).map(|i| a + step * i as f64).collect();
    let values: Vec<f64> = xs
        .par_iter()
        .map(|u| f(u.exp()))
        .collect::<Result<_, E>>()?;
    let best = values
        .iter()
        .enumerate()
        .fold(0, |best, (i, v)| if *v > values[best] { i } else { best });
    let grid_x = xs[best].exp();
    let grid_value = values[best];
    let grid_spacing = grid_x * (step.exp() - 1.0);
    if best == 0 || best == points - 1 {
        return Ok(Maximum {
            x: grid_x,
            value: grid_value,
            grid_x,
            grid_value,
            grid_spacing,
            at_boundary: true,
        });
    }
    let (u, value) = golden_section_max(
        |u: f64| f(u.exp()),
        xs[best - 1],
        xs[best + 1],
        rel_tol.ln_1p(),
    )?;
    let (x, value) = if value >= grid_value {
        (u.exp(), value)
    } else {
        (grid_x, grid_value)
    };
    Ok(Maximum {
        x,
        value,
        grid_x,
        grid_value,
        grid_spacing,
        at_boundary: false,
    })
}
