//! One-dimensional maximization: coarse grid scan plus golden-section refinement.

use crate::{Error, Result};

pub const GRID_POINTS: usize = 33;
pub const DEFAULT_TOL: f64 = 1e-4;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`,
/// stopping once the bracket is narrower than `tol`.
pub fn golden_section_max<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    check_bracket(lo, hi)?;
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tolerance must be > 0, got {tol}")));
    }
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}

/// Scan `points` equally spaced values on `[lo, hi]`, then refine with
/// golden-section search inside the cells adjacent to the best grid point.
/// Returns whichever of the grid best and the refined point is larger.
pub fn grid_then_golden<F>(mut f: F, lo: f64, hi: f64, points: usize, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    check_bracket(lo, hi)?;
    if points < 3 {
        return Err(Error::Config(format!("grid needs at least 3 points, got {points}")));
    }
    let step = (hi - lo) / (points - 1) as f64;
    let xs: Vec<f64> = (0..points).map(|i| lo + step * i as f64).collect();
    let mut best = 0;
    let mut values = Vec::with_capacity(points);
    for (i, &x) in xs.iter().enumerate() {
        let v = f(x)?;
        if values.is_empty() || v > values[best] {
            best = i;
        }
        values.push(v);
    }
    let a = xs[best.saturating_sub(1)];
    let b = xs[(best + 1).min(points - 1)];
    let (x, v) = golden_section_max(&mut f, a, b, tol)?;
    Ok(if v > values[best] { (x, v) } else { (xs[best], values[best]) })
}

fn check_bracket(lo: f64, hi: f64) -> Result<()> {
    if lo.is_finite() && hi.is_finite() && lo < hi {
        Ok(())
    } else {
        Err(Error::Config(format!("bracket must satisfy lo < hi, got [{lo}, {hi}]")))
    }
}
