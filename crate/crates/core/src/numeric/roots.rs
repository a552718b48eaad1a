//! Bracketed scalar root finding.

use crate::error::{Error, Result};

/// Safeguarded Newton iteration on a sign-changing bracket `[lo, hi]`.
///
/// `f` returns `(value, derivative)`. Newton steps that leave the current
/// bracket, or fail to halve it, are replaced by bisection. Terminates when
/// the bracket (or the step) is below `x_tol`, or `|f| == 0`.
pub fn newton_bisect<F>(mut f: F, mut lo: f64, mut hi: f64, x_tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    let (mut flo, _) = f(lo)?;
    let (fhi, _) = f(hi)?;
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::NoConvergence(format!(
            "no sign change on [{lo}, {hi}] ({flo:e}, {fhi:e})"
        )));
    }
    let mut x = 0.5 * (lo + hi);
    let mut last_width = (hi - lo).abs();
    for _ in 0..200 {
        let (fx, dfx) = f(x)?;
        if !fx.is_finite() {
            return Err(Error::NonFinite(format!("root function at {x}")));
        }
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
        } else {
            hi = x;
        }
        let width = (hi - lo).abs();
        if width <= x_tol {
            return Ok(0.5 * (lo + hi));
        }
        let newton = x - fx / dfx;
        let inside = newton.is_finite() && (newton - lo) * (newton - hi) < 0.0;
        let shrinking = width < 0.5 * last_width + x_tol;
        let small_step = dfx != 0.0 && (fx / dfx).abs() < 0.25 * width;
        let next = if inside && (shrinking || small_step) {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= x_tol {
            return Ok(next);
        }
        last_width = width;
        x = next;
    }
    Err(Error::NoConvergence(format!(
        "newton/bisection did not reach tolerance {x_tol:e}"
    )))
}

/// Plain bisection for functions without a cheap derivative.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, x_tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut flo = f(lo)?;
    let fhi = f(hi)?;
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::NoConvergence(format!("no sign change on [{lo}, {hi}]")));
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= x_tol || mid == lo || mid == hi {
            return Ok(mid);
        }
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
