//! Even profile `f` built from an implicitly defined increasing map `F`.
//!
//! `F : (0, 1] -> (-inf, beta]` solves `x = exp(F + ln²|F|)` with
//! `F(1) = beta`, and `f(x) = ∫_0^x dt / F'(t)` for `x >= 0`, extended evenly.
//! Then `f'(x) = x (1 + 2 ln|F|/F)` and `f''(0) = 1`, but `f` is only `C²`:
//! `F - ln x = -ln²|F|` is unbounded near 0.
//!
//! Writing `m(s) = s + ln²|s|`, the substitution `t = exp(m(s))` turns the
//! defining integral into `f(x) = ∫_{-inf}^{F(x)} (d/ds e^{m(s)})² ds`, which
//! needs no root solve inside the integrand.

use crate::error::{Error, Result};
use crate::numeric::{quad, roots};

/// `m(s) = s + ln²|s|` on `s < 0`, and its first two derivatives.
fn exponent(s: f64) -> (f64, f64, f64) {
    let l = (-s).ln();
    (s + l * l, 1.0 + 2.0 * l / s, 2.0 * (1.0 - l) / (s * s))
}

#[derive(Clone, Debug)]
pub struct ImplicitProfile {
    beta: f64,
}

impl ImplicitProfile {
    pub fn new() -> Result<Self> {
        // m(beta) = 0 with m increasing on (-1, -0.1)
        let beta = roots::newton_bisect(
            |s| {
                let (m, dm, _) = exponent(s);
                Ok((m, dm))
            },
            -1.0,
            -0.1,
            1e-16,
        )?;
        Ok(Self { beta })
    }

    /// `F(1)`.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `F(x)` for `x ∈ (0, 1]`.
    pub fn big_f(&self, x: f64) -> Result<f64> {
        if !(x > 0.0 && x <= 1.0) {
            return Err(Error::OutOfDomain {
                potential: "counterexample-iii (F requires x in (0,1])".into(),
                point: vec![x],
            });
        }
        if x == 1.0 {
            return Ok(self.beta);
        }
        let target = x.ln();
        // m(s) >= s on s <= -1, so lower brackets are found by stepping down
        let mut lo = (target - 1.0).min(self.beta - 1.0);
        while exponent(lo).0 > target {
            lo = 2.0 * lo - 1.0;
            if !lo.is_finite() {
                return Err(Error::NoConvergence(format!("F({x}): no lower bracket")));
            }
        }
        roots::newton_bisect(
            |s| {
                let (m, dm, _) = exponent(s);
                Ok((m - target, dm))
            },
            lo,
            self.beta,
            1e-15 * target.abs().max(1.0),
        )
        .map_err(|e| Error::NoConvergence(format!("F({x}): {e}")))
    }

    /// Residual `x - exp(F + ln²|F|)` of the implicit equation.
    pub fn residual(&self, x: f64) -> Result<f64> {
        let f = self.big_f(x)?;
        Ok(x - exponent(f).0.exp())
    }

    fn check(&self, x: f64) -> Result<f64> {
        let a = x.abs();
        if !(a <= 1.0) {
            return Err(Error::OutOfDomain {
                potential: "counterexample-iii".into(),
                point: vec![x],
            });
        }
        Ok(a)
    }

    /// `(f'(x), f''(x))`.
    pub fn d1_d2(&self, x: f64) -> Result<(f64, f64)> {
        let a = self.check(x)?;
        if a == 0.0 {
            return Ok((0.0, 1.0));
        }
        let big = self.big_f(a)?;
        let (_, dm, ddm) = exponent(big);
        let d1 = a * dm;
        let d2 = dm + ddm / dm;
        Ok((d1.copysign(x), d2))
    }

    /// `f(x)` via the substituted integral (even in `x`).
    pub fn value(&self, x: f64) -> Result<f64> {
        let a = self.check(x)?;
        if a == 0.0 {
            return Ok(0.0);
        }
        let big = self.big_f(a)?;
        let m0 = exponent(big).0;
        // f(a) = a² ∫_0^inf exp(2(m(F-r) - m(F))) m'(F-r)² dr ; m' >= 0.26
        let integrand = |r: f64| {
            let (m, dm, _) = exponent(big - r);
            Ok((2.0 * (m - m0)).exp() * dm * dm)
        };
        let mut total = 0.0;
        for w in [0.0, 1.0, 4.0, 16.0, 48.0, 160.0].windows(2) {
            total += quad::integrate(integrand, w[0], w[1], 1e-17, 1e-14)?;
        }
        Ok(a * a * total)
    }
}
