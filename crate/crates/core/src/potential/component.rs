//! One-dimensional profiles `f(t)` used as separable components.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::implicit::ImplicitProfile;
use crate::error::{Error, Result};
use crate::numeric::roots;

/// Declared regularity of a potential or component.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Smoothness {
    /// Continuous only (piecewise-linear interpolation).
    C0,
    C2,
    C3,
    Smooth,
}

/// A building block of a [`Component1D`].
#[derive(Clone)]
pub enum Term {
    /// `Σ c[k] t^k`
    Poly(Vec<f64>),
    /// `amp cos(omega t + phase)`
    Cos { amp: f64, omega: f64, phase: f64 },
    /// `amp sin(omega t + phase)`
    Sin { amp: f64, omega: f64, phase: f64 },
    /// The even `C²` profile defined through an implicit map.
    Implicit(Arc<ImplicitProfile>),
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Poly(c) => write!(f, "poly{c:?}"),
            Term::Cos { amp, omega, phase } => write!(f, "{amp}*cos({omega}t+{phase})"),
            Term::Sin { amp, omega, phase } => write!(f, "{amp}*sin({omega}t+{phase})"),
            Term::Implicit(_) => write!(f, "implicit"),
        }
    }
}

impl Term {
    fn eval(&self, t: f64) -> Result<[f64; 3]> {
        Ok(match self {
            Term::Poly(c) => {
                let (mut v, mut d1, mut d2) = (0.0, 0.0, 0.0);
                for &ck in c.iter().rev() {
                    d2 = d2 * t + 2.0 * d1;
                    d1 = d1 * t + v;
                    v = v * t + ck;
                }
                [v, d1, d2]
            }
            Term::Cos { amp, omega, phase } => {
                let (s, c) = (omega * t + phase).sin_cos();
                [amp * c, -amp * omega * s, -amp * omega * omega * c]
            }
            Term::Sin { amp, omega, phase } => {
                let (s, c) = (omega * t + phase).sin_cos();
                [amp * s, amp * omega * c, -amp * omega * omega * s]
            }
            Term::Implicit(p) => {
                let (d1, d2) = p.d1_d2(t)?;
                [p.value(t)?, d1, d2]
            }
        })
    }

    fn eval_derivatives(&self, t: f64) -> Result<(f64, f64)> {
        match self {
            Term::Implicit(p) => p.d1_d2(t),
            _ => {
                let [_, d1, d2] = self.eval(t)?;
                Ok((d1, d2))
            }
        }
    }

    fn smoothness(&self) -> Smoothness {
        match self {
            Term::Implicit(_) => Smoothness::C2,
            _ => Smoothness::Smooth,
        }
    }
}

/// Scalar profile `f(t)` with analytic first and second derivatives.
///
/// `period`, when set, is the period of `f'` (the profile itself may carry a
/// linear drift, e.g. `f(t) = t`). `derivative_zeros` optionally lists the
/// zeros of `f'` in `[0, period)`.
#[derive(Clone, Debug)]
pub struct Component1D {
    terms: Vec<Term>,
    period: Option<f64>,
    derivative_zeros: Option<Vec<f64>>,
    domain: (f64, f64),
}

impl Component1D {
    pub fn new(terms: Vec<Term>) -> Self {
        Self {
            terms,
            period: None,
            derivative_zeros: None,
            domain: (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn poly(coeffs: &[f64]) -> Self {
        Self::new(vec![Term::Poly(coeffs.to_vec())])
    }

    pub fn cos(amp: f64, omega: f64, phase: f64) -> Self {
        Self::new(vec![Term::Cos { amp, omega, phase }])
    }

    pub fn sin(amp: f64, omega: f64, phase: f64) -> Self {
        Self::new(vec![Term::Sin { amp, omega, phase }])
    }

    pub fn implicit(profile: Arc<ImplicitProfile>) -> Self {
        Self::new(vec![Term::Implicit(profile)]).on_domain(-1.0, 1.0)
    }

    /// Sum of two profiles; keeps `self`'s period/zeros metadata.
    pub fn plus(mut self, other: Component1D) -> Self {
        self.terms.extend(other.terms);
        self.domain = (self.domain.0.max(other.domain.0), self.domain.1.min(other.domain.1));
        self
    }

    pub fn with_period(mut self, period: f64) -> Self {
        self.period = Some(period);
        self
    }

    pub fn with_derivative_zeros(mut self, zeros: Vec<f64>) -> Self {
        self.derivative_zeros = Some(zeros);
        self
    }

    pub fn on_domain(mut self, lo: f64, hi: f64) -> Self {
        self.domain = (lo, hi);
        self
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn period(&self) -> Option<f64> {
        self.period
    }

    pub fn declared_zeros(&self) -> Option<&[f64]> {
        self.derivative_zeros.as_deref()
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn smoothness(&self) -> Smoothness {
        self.terms
            .iter()
            .map(Term::smoothness)
            .min()
            .unwrap_or(Smoothness::Smooth)
    }

    /// `[f, f', f'']` at `t`.
    pub fn eval(&self, t: f64) -> Result<[f64; 3]> {
        let mut out = [0.0; 3];
        for term in &self.terms {
            let v = term.eval(t)?;
            for k in 0..3 {
                out[k] += v[k];
            }
        }
        Ok(out)
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        Ok(self.eval(t)?[0])
    }

    /// `(f', f'')` without evaluating `f` (cheaper for quadrature-defined terms).
    pub fn d1_d2(&self, t: f64) -> Result<(f64, f64)> {
        let mut out = (0.0, 0.0);
        for term in &self.terms {
            let (a, b) = term.eval_derivatives(t)?;
            out.0 += a;
            out.1 += b;
        }
        Ok(out)
    }

    pub fn d1(&self, t: f64) -> Result<f64> {
        Ok(self.d1_d2(t)?.0)
    }

    /// Zeros of `f'` in `[0, period)`: the declared list if present, else
    /// located by sampling sign changes and near-touching minima of `|f'|`
    /// and refining each candidate.
    pub fn derivative_zeros_in_period(&self) -> Result<Vec<f64>> {
        let period = self
            .period
            .ok_or_else(|| Error::NotPeriodic(format!("{:?}", self.terms)))?;
        if let Some(z) = &self.derivative_zeros {
            return Ok(z.clone());
        }
        const SAMPLES: usize = 2048;
        let h = period / SAMPLES as f64;
        let ts: Vec<f64> = (0..=SAMPLES).map(|k| k as f64 * h).collect();
        let vals = ts
            .iter()
            .map(|&t| self.d1(t))
            .collect::<Result<Vec<_>>>()?;
        let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        let x_tol = 1e-15 * period.max(1.0);
        let mut zeros = Vec::new();
        for k in 0..SAMPLES {
            let (a, b) = (vals[k], vals[k + 1]);
            if a == 0.0 {
                zeros.push(ts[k]);
            } else if a.signum() != b.signum() && b != 0.0 {
                zeros.push(roots::newton_bisect(
                    |t| self.d1_d2(t),
                    ts[k],
                    ts[k + 1],
                    x_tol,
                )?);
            } else if k > 0 && a.abs() <= vals[k - 1].abs() && a.abs() <= b.abs() {
                // tangential zero: refine the local minimum of |f'| via f'' = 0
                let (_, dl) = self.d1_d2(ts[k - 1])?;
                let (_, dr) = self.d1_d2(ts[k + 1])?;
                if dl.signum() != dr.signum() {
                    let t = roots::bisect(|t| Ok(self.d1_d2(t)?.1), ts[k - 1], ts[k + 1], x_tol)?;
                    if self.d1(t)?.abs() <= 1e-10 * scale {
                        zeros.push(t);
                    }
                }
            }
        }
        zeros.iter_mut().for_each(|z| *z = z.rem_euclid(period));
        zeros.sort_by(f64::total_cmp);
        let mut out: Vec<f64> = Vec::new();
        for z in zeros {
            let dup = out
                .iter()
                .any(|&w| ((z - w).abs()).min(period - (z - w).abs()) < 1e-9 * period);
            if !dup {
                out.push(z);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn poly_derivatives() {
        let c = Component1D::poly(&[1.0, -2.0, 0.0, 4.0]);
        let [v, d1, d2] = c.eval(0.5).unwrap();
        assert!((v - (1.0 - 1.0 + 0.5)).abs() < 1e-15);
        assert!((d1 - (-2.0 + 3.0)).abs() < 1e-15);
        assert!((d2 - 12.0).abs() < 1e-15);
    }

    #[test]
    fn derivative_matches_centered_difference() {
        let c = Component1D::poly(&[0.0, 0.3, -1.0]).plus(Component1D::cos(0.7, 2.0, 0.1));
        for &t in &[-1.3, 0.0, 0.4, 2.2] {
            let h = 1e-5;
            let fd = (c.value(t + h).unwrap() - c.value(t - h).unwrap()) / (2.0 * h);
            assert!((fd - c.d1(t).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn zeros_of_sine_derivative() {
        // u2(t) = -cos(2πt): u2' = 2π sin(2πt)
        let c = Component1D::cos(-1.0, 2.0 * PI, 0.0).with_period(1.0);
        let z = c.derivative_zeros_in_period().unwrap();
        assert_eq!(z.len(), 2);
        assert!(z[0].abs() < 1e-12);
        assert!((z[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn tangential_zeros_are_found() {
        // f' = 1 + cos(2πt) touches zero at t = 1/2
        let c = Component1D::poly(&[0.0, 1.0])
            .plus(Component1D::sin(1.0 / (2.0 * PI), 2.0 * PI, 0.0))
            .with_period(1.0);
        let z = c.derivative_zeros_in_period().unwrap();
        assert_eq!(z.len(), 1);
        assert!((z[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn non_vanishing_derivative_has_no_zeros() {
        let c = Component1D::poly(&[0.0, 2.0])
            .plus(Component1D::sin(1.0 / (2.0 * PI), 2.0 * PI, 0.0))
            .with_period(1.0);
        assert!(c.derivative_zeros_in_period().unwrap().is_empty());
    }

    #[test]
    fn aperiodic_component_rejected() {
        let c = Component1D::poly(&[0.0, 1.0]);
        assert!(matches!(
            c.derivative_zeros_in_period(),
            Err(Error::NotPeriodic(_))
        ));
    }
}
