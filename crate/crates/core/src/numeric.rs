//! One-dimensional search primitives shared by the solvers.

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section minimization of `f` on `[a, b]`.
///
/// Infinite values are allowed and are treated as "worse than anything
/// finite", which lets callers encode infeasible regions at the edge of
/// the bracket. Stops when the bracket is below `tol` or after 300 steps.
pub fn golden_min<F>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    if a > b {
        std::mem::swap(&mut a, &mut b);
    }
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..300 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Golden-section maximization; see [`golden_min`].
pub fn golden_max<F>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let (x, fx) = golden_min(|x| -f(x), a, b, tol);
    (x, -fx)
}

/// Bisection for a root of `f` on `[a, b]`.
///
/// Requires `f(a)` and `f(b)` to have opposite signs (a zero at either end
/// is returned directly). Iterates until the midpoint no longer moves, so
/// the result is as tight as f64 allows.
pub fn bisect<F>(mut f: F, mut a: f64, mut b: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.is_nan() || fb.is_nan() || fa.signum() == fb.signum() {
        return Err(Error::Solver(format!(
            "no sign change on [{a}, {b}] (f = {fa}, {fb})"
        )));
    }
    for _ in 0..2_000 {
        let m = 0.5 * (a + b);
        if m <= a.min(b) || m >= a.max(b) {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
                .collect()
        }
    }
}

/// Grid scan followed by golden refinement around the best cell.
///
/// Returns the minimizer and its value; `None` if every grid point is
/// non-finite.
pub fn grid_then_golden<F>(mut f: F, lo: f64, hi: f64, points: usize, tol: f64) -> Option<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    let grid = linspace(lo, hi, points);
    let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let (best, &best_val) = values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| a.1.total_cmp(b.1))?;
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(grid.len() - 1)];
    let (x, fx) = golden_min(&mut f, a, b, tol);
    if fx.is_finite() && fx <= best_val {
        Some((x, fx))
    } else {
        Some((grid[best], best_val))
    }
}
