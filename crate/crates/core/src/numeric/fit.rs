//! Least-squares line fits used to characterise growth in probe sequences.

use serde::{Deserialize, Serialize};

/// Result of fitting `v ≈ intercept + coefficient * g(s)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub intercept: f64,
    pub coefficient: f64,
    pub r2: f64,
}

/// Ordinary least squares of `y` on `x`. `r2` is 0 when either series is
/// constant.
pub fn fit_line(x: &[f64], y: &[f64]) -> LineFit {
    let n = x.len().min(y.len()) as f64;
    if n < 2.0 {
        return LineFit {
            intercept: y.first().copied().unwrap_or(0.0),
            coefficient: 0.0,
            r2: 0.0,
        };
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 {
        return LineFit {
            intercept: my,
            coefficient: 0.0,
            r2: 0.0,
        };
    }
    let coefficient = sxy / sxx;
    let intercept = my - coefficient * mx;
    let r2 = if syy == 0.0 { 0.0 } else { (sxy * sxy) / (sxx * syy) };
    LineFit {
        intercept,
        coefficient,
        r2,
    }
}
