//! Dormand–Prince 5(4) step with first-same-as-last stages.

use crate::error::Result;

/// Augmented state `(x_1..x_d, W)`; unused tail entries stay zero.
pub type State = [f64; 4];

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
// difference between the 5th and embedded 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

pub struct StepOutput {
    pub y: State,
    /// Right-hand side at `y` (the next step's first stage).
    pub f: State,
    /// Local error estimate per component.
    pub err: State,
}

fn combine(y: &State, h: f64, terms: &[(f64, &State)], n: usize) -> State {
    let mut out = *y;
    for i in 0..n {
        let mut s = 0.0;
        for (a, k) in terms {
            s += a * k[i];
        }
        out[i] += h * s;
    }
    out
}

/// One step of size `h` (may be negative) from `(y, f0 = rhs(y))`.
pub fn step<F>(rhs: &mut F, y: &State, f0: &State, h: f64, n: usize) -> Result<StepOutput>
where
    F: FnMut(&State) -> Result<State>,
{
    let k1 = *f0;
    let k2 = rhs(&combine(y, h, &[(A21, &k1)], n))?;
    let k3 = rhs(&combine(y, h, &[(A31, &k1), (A32, &k2)], n))?;
    let k4 = rhs(&combine(y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)], n))?;
    let k5 = rhs(&combine(y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], n))?;
    let k6 = rhs(&combine(
        y,
        h,
        &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        n,
    ))?;
    let y_new = combine(
        y,
        h,
        &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
        n,
    );
    let k7 = rhs(&y_new)?;
    let mut err = [0.0; 4];
    for i in 0..n {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    Ok(StepOutput { y: y_new, f: k7, err })
}

/// Cubic Hermite interpolation of the step `(y0, f0) -> (y1, f1)` of size
/// `h` at fraction `theta ∈ [0, 1]`.
pub fn hermite(y0: &State, f0: &State, y1: &State, f1: &State, h: f64, theta: f64, n: usize) -> State {
    let t2 = theta * theta;
    let t3 = t2 * theta;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + theta;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    let mut out = [0.0; 4];
    for i in 0..n {
        out[i] = h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i];
    }
    out
}
