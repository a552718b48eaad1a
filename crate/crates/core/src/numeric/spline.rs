//! Not-a-knot cubic splines in Hermite (slope) form.

use crate::error::{Error, Result};

/// Solves a tridiagonal system with partial pivoting (LAPACK `gtsv` scheme).
/// `sub[i]` couples row `i+1` to column `i`, `sup[i]` row `i` to column `i+1`.
pub fn solve_tridiagonal(
    mut sub: Vec<f64>,
    mut diag: Vec<f64>,
    mut sup: Vec<f64>,
    mut rhs: Vec<f64>,
) -> Result<Vec<f64>> {
    let n = diag.len();
    if n == 0 {
        return Ok(rhs);
    }
    if sub.len() + 1 != n || sup.len() + 1 != n || rhs.len() != n {
        return Err(Error::InvalidInput("tridiagonal shape mismatch".into()));
    }
    let singular = || Error::InvalidInput("singular tridiagonal system".into());
    // second superdiagonal created by row interchanges lives in `sub`
    for i in 0..n - 1 {
        if diag[i].abs() >= sub[i].abs() {
            if diag[i] == 0.0 {
                return Err(singular());
            }
            let fact = sub[i] / diag[i];
            diag[i + 1] -= fact * sup[i];
            rhs[i + 1] -= fact * rhs[i];
            sub[i] = 0.0;
        } else {
            let fact = diag[i] / sub[i];
            diag[i] = sub[i];
            let tmp = diag[i + 1];
            diag[i + 1] = sup[i] - fact * tmp;
            if i + 2 < n {
                sub[i] = sup[i + 1];
                sup[i + 1] = -fact * sub[i];
            } else {
                sub[i] = 0.0;
            }
            sup[i] = tmp;
            let b = rhs[i];
            rhs[i] = rhs[i + 1];
            rhs[i + 1] = b - fact * rhs[i + 1];
        }
    }
    if diag[n - 1] == 0.0 {
        return Err(singular());
    }
    rhs[n - 1] /= diag[n - 1];
    if n > 1 {
        rhs[n - 2] = (rhs[n - 2] - sup[n - 2] * rhs[n - 1]) / diag[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        rhs[i] = (rhs[i] - sup[i] * rhs[i + 1] - sub[i] * rhs[i + 2]) / diag[i];
    }
    Ok(rhs)
}

/// Node slopes of the not-a-knot cubic spline through `(x[i], y[i])`.
///
/// Two nodes give the secant, three the interpolating parabola.
pub fn not_a_knot_slopes(x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    if n != y.len() || n < 2 {
        return Err(Error::InvalidInput("spline needs >= 2 matching nodes".into()));
    }
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    if h.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidInput("spline knots must increase".into()));
    }
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    if n == 2 {
        return Ok(vec![delta[0]; 2]);
    }
    if n == 3 {
        // parabola: slope at the ends from second divided difference
        let c = (delta[1] - delta[0]) / (h[0] + h[1]);
        return Ok(vec![
            delta[0] - c * h[0],
            delta[0] + c * h[0],
            delta[1] + c * h[1],
        ]);
    }
    let mut sub = vec![0.0; n - 1];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n - 1];
    let mut rhs = vec![0.0; n];

    let d0 = h[0] + h[1];
    diag[0] = h[1];
    sup[0] = d0;
    rhs[0] = ((h[0] + 2.0 * d0) * h[1] * delta[0] + h[0] * h[0] * delta[1]) / d0;

    for i in 1..n - 1 {
        sub[i - 1] = h[i];
        diag[i] = 2.0 * (h[i - 1] + h[i]);
        sup[i] = h[i - 1];
        rhs[i] = 3.0 * (h[i] * delta[i - 1] + h[i - 1] * delta[i]);
    }

    let hl = h[n - 2];
    let hp = h[n - 3];
    let dn = hl + hp;
    sub[n - 2] = dn;
    diag[n - 1] = hp;
    rhs[n - 1] = (hl * hl * delta[n - 3] + (2.0 * dn + hl) * hp * delta[n - 2]) / dn;

    solve_tridiagonal(sub, diag, sup, rhs)
}

/// Cubic Hermite basis on `[0, 1]` at `s`, as `[value, d/ds, d²/ds²]` for
/// `[H0, H1, K0, K1]`: `H0/H1` weight the end values, `K0/K1` the end slopes
/// (slopes must be pre-multiplied by the cell width).
pub fn hermite_basis(s: f64) -> [[f64; 3]; 4] {
    let s2 = s * s;
    let s3 = s2 * s;
    [
        [2.0 * s3 - 3.0 * s2 + 1.0, 6.0 * s2 - 6.0 * s, 12.0 * s - 6.0],
        [-2.0 * s3 + 3.0 * s2, -6.0 * s2 + 6.0 * s, -12.0 * s + 6.0],
        [s3 - 2.0 * s2 + s, 3.0 * s2 - 4.0 * s + 1.0, 6.0 * s - 4.0],
        [s3 - s2, 3.0 * s2 - 2.0 * s, 6.0 * s - 2.0],
    ]
}

/// Index `i` with `knots[i] <= t <= knots[i+1]`, clamped to valid cells.
pub fn locate(knots: &[f64], t: f64) -> usize {
    let n = knots.len();
    match knots.binary_search_by(|k| k.total_cmp(&t)) {
        Ok(i) => i.min(n - 2),
        Err(i) => i.saturating_sub(1).min(n - 2),
    }
}
