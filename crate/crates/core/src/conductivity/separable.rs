//! Closed-form `w` for separable potentials `u = f(x) + g(y)`.
//!
//! Along the flow each axis moves on its own: the time to go from `x` to `a`
//! is `∫ₓᵃ dt / f′(t)`, and `w = ln|f′(a) g′(b) / (f′(x) g′(y))|` where
//! `(a, b)` is the hitting point. The time integrals are taken in the
//! variable `s = ln|t|`, which keeps the integrand bounded near the
//! critical point at 0.

use serde::{Deserialize, Serialize};

use super::probe::{DecisionRule, GrowthModel, ProbeKind, ProbeReport};
use crate::error::{Error, Result};
use crate::numeric::quad::integrate;
use crate::numeric::roots::newton_bisect;
use crate::potential::Component1D;

const S_MIN: f64 = -700.0;
const QUAD_ABS: f64 = 1e-15;
const QUAD_REL: f64 = 1e-13;

/// One component on one side of 0, parametrized by `s = ln|t|`.
struct HalfAxis<'a> {
    comp: &'a Component1D,
    side: f64,
    /// Upper bound on `s`: the domain edge or the next zero of the derivative.
    s_max: f64,
}

impl<'a> HalfAxis<'a> {
    fn new(comp: &'a Component1D, t: f64) -> Result<Self> {
        if t == 0.0 || !t.is_finite() {
            return Err(Error::InvalidInput(format!("point on an axis (coordinate {t})")));
        }
        let side = t.signum();
        let start = t.abs();
        let (lo, hi) = comp.domain();
        let edge = if side > 0.0 { hi } else { -lo };
        let slope0 = comp.d1(t)?;
        if slope0 == 0.0 {
            return Err(Error::InvalidInput(format!("derivative vanishes at {t}")));
        }
        // scan for the next sign change of the derivative beyond |t|
        let reach = edge.min(1e3);
        let mut limit = edge;
        if reach > start {
            let n = 4000;
            let mut prev = start;
            for k in 1..=n {
                let r = start + (reach - start) * k as f64 / n as f64;
                let v = comp.d1(side * r)?;
                if v == 0.0 || v.signum() != slope0.signum() {
                    let z = crate::numeric::roots::bisect(
                        |r| Ok(comp.d1(side * r)?.signum() * slope0.signum()),
                        prev,
                        r,
                        1e-15 * r,
                    )?;
                    limit = z;
                    break;
                }
                prev = r;
            }
        }
        Ok(Self {
            comp,
            side,
            s_max: limit.ln(),
        })
    }

    fn point(&self, s: f64) -> f64 {
        self.side * s.exp()
    }

    /// `dt / f′(t)` in the `s` variable.
    fn phi(&self, s: f64) -> Result<f64> {
        let t = self.point(s);
        Ok(t / self.comp.d1(t)?)
    }

    fn time(&self, s0: f64, s1: f64) -> Result<f64> {
        integrate(|s| self.phi(s), s0, s1, QUAD_ABS, QUAD_REL)
    }

    /// `s` reached after flowing for `tau` from `s0`; `None` if the flow
    /// leaves the half axis first.
    fn endpoint(&self, s0: f64, tau: f64) -> Result<Option<f64>> {
        if tau == 0.0 {
            return Ok(Some(s0));
        }
        let dir = tau.signum() * self.phi(s0)?.signum();
        let edge = if dir > 0.0 { self.s_max } else { S_MIN };
        let (mut near, mut t_near) = (s0, 0.0);
        let mut step = 0.5;
        loop {
            // halve the gap to the edge rather than land on it: the integrand
            // blows up at a zero of the derivative
            let far = if dir > 0.0 { (near + step).min(0.5 * (near + edge)) } else { (near - step).max(edge) };
            if dir > 0.0 && edge - far < 1e-13 * (1.0 + edge.abs()) {
                return Ok(None);
            }
            let t_far = t_near + self.time(near, far)?;
            if t_far.abs() >= tau.abs() {
                let base = (near, t_near);
                let s = newton_bisect(
                    |s| Ok((base.1 + self.time(base.0, s)? - tau, self.phi(s)?)),
                    near,
                    far,
                    1e-15 * (1.0 + far.abs()),
                )?;
                return Ok(Some(s));
            }
            if far == edge {
                return Ok(None);
            }
            near = far;
            t_near = t_far;
            step *= 2.0;
        }
    }
}

/// `∫_α^x dt / f′(t)`; `α` and `x` must lie on the same side of 0 with no
/// zero of `f′` between them.
pub fn time_integral(comp: &Component1D, alpha: f64, x: f64) -> Result<f64> {
    if alpha * x <= 0.0 {
        return Err(Error::InvalidInput("α and x must share a sign".into()));
    }
    let axis = HalfAxis::new(comp, alpha)?;
    axis.time(alpha.abs().ln(), x.abs().ln())
}

/// Hitting point and conductivity exponent for `u = f(x) + g(y)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparableHit {
    pub tau: f64,
    pub a: f64,
    pub b: f64,
    pub w: f64,
}

/// `w(x, y)` for `u = f(x) + g(y)` and the level `c`, from the hitting point
/// `(a, b)` with `f(a) + g(b) = c`.
pub fn separable_w_oracle(f: &Component1D, g: &Component1D, x: f64, y: f64, level: f64) -> Result<SeparableHit> {
    let ax = HalfAxis::new(f, x)?;
    let ay = HalfAxis::new(g, y)?;
    let (sx, sy) = (x.abs().ln(), y.abs().ln());
    let u0 = f.value(x)? + g.value(y)? - level;
    let hit = |a: f64, b: f64| SeparableHit {
        tau: 0.0,
        a,
        b,
        w: 0.0,
    };
    if u0 == 0.0 {
        return Ok(hit(x, y));
    }
    let dir = if u0 < 0.0 { 1.0 } else { -1.0 };
    // residual u(X(τ)) − c and its τ-derivative |∇u|²
    let eval = |tau: f64| -> Result<Option<(f64, f64, f64, f64)>> {
        let (Some(s1), Some(s2)) = (ax.endpoint(sx, tau)?, ay.endpoint(sy, tau)?) else {
            return Ok(None);
        };
        let (a, b) = (ax.point(s1), ay.point(s2));
        let (fa, ga) = (f.eval(a)?, g.eval(b)?);
        Ok(Some((fa[0] + ga[0] - level, fa[1] * fa[1] + ga[1] * ga[1], a, b)))
    };
    let mut hi = dir * 0.25;
    loop {
        match eval(hi)? {
            Some((r, ..)) if r * dir >= 0.0 => break,
            Some(_) => {}
            None => {
                return Err(Error::NoConvergence(format!(
                    "level {level} not reached from ({x}, {y}) within the component domains"
                )))
            }
        }
        hi *= 2.0;
        if hi.abs() > 1e6 {
            return Err(Error::NoConvergence(format!("level {level} not reached from ({x}, {y})")));
        }
    }
    let tau = newton_bisect(
        |t| {
            let (r, dr, ..) = eval(t)?.ok_or_else(|| Error::NoConvergence("hit point left the domain".into()))?;
            Ok((r, dr))
        },
        0.0,
        hi,
        1e-15 * (1.0 + hi.abs()),
    )?;
    let (_, _, a, b) = eval(tau)?.ok_or_else(|| Error::NoConvergence("hit point left the domain".into()))?;
    let w = (f.d1(a)? * g.d1(b)? / (f.d1(x)? * g.d1(y)?)).abs().ln();
    Ok(SeparableHit { tau, a, b, w })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BouFgOptions {
    /// Points `x = 2^{-k}` for `k` in `first..=last`.
    pub first: u32,
    pub last: u32,
    /// Lower limit `α` of the time integral; clipped into the half axis.
    pub alpha: f64,
    pub rule: DecisionRule,
}

impl Default for BouFgOptions {
    fn default() -> Self {
        Self {
            first: 4,
            last: 40,
            alpha: 1.0,
            rule: DecisionRule::default(),
        }
    }
}

/// `|F(x) − ln x / f″(0)|` on `x = 2^{-k}` with `F(x) = ∫_α^x dt / f′(t)`,
/// judged by the probe decision rule.
pub fn check_bou_fg(comp: &Component1D, opts: &BouFgOptions) -> Result<ProbeReport> {
    let (_, f2) = comp.d1_d2(0.0)?;
    if f2.abs() < 1e-12 {
        return Err(Error::InvalidInput("second derivative vanishes at 0".into()));
    }
    let x_first = (-(opts.first as f64)).exp2();
    let axis = HalfAxis::new(comp, x_first)?;
    let alpha = opts.alpha.min(0.5 * axis.s_max.exp());
    let integrand = |s: f64| -> Result<f64> { Ok(axis.phi(s)? - 1.0 / f2) };
    let mut s_prev = alpha.ln();
    // F(α) − ln α / f″(0)
    let mut acc = -alpha.ln() / f2;
    let mut schedule = Vec::new();
    let mut values = Vec::new();
    for k in opts.first..=opts.last {
        let x = (-(k as f64)).exp2();
        let s = x.ln();
        acc += integrate(integrand, s_prev, s, QUAD_ABS, QUAD_REL)?;
        s_prev = s;
        schedule.push(x);
        values.push(acc.abs());
    }
    let n = schedule.len();
    ProbeReport::decide(
        ProbeKind::BouFG,
        schedule,
        values,
        vec![1; n],
        &[GrowthModel::LogInverse, GrowthModel::LogLogInverse],
        &opts.rule,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conductivity::probe::Verdict;
    use crate::potential::{catalog_counterexample_iii, Component1D};

    fn closed_cos(x: f64, y: f64) -> f64 {
        let (a, b) = ((x / 2.0).tan(), (y / 2.0).tan());
        ((1.0 + a * a) * (1.0 + b * b) / (1.0 + a.abs() * b.abs()).powi(2)).ln()
    }

    #[test]
    fn cos_pair_matches_closed_form() {
        // 1 − cos x and cos y − 1
        let f = Component1D::poly(&[1.0]).plus(Component1D::cos(-1.0, 1.0, 0.0)).on_domain(-3.2, 3.2);
        let g = Component1D::poly(&[-1.0]).plus(Component1D::cos(1.0, 1.0, 0.0)).on_domain(-3.2, 3.2);
        for (x, y) in [(0.3, 1.1), (-2.0, 0.4), (1.5, -2.9), (-0.01, -0.7), (2.5, 2.4)] {
            let h = separable_w_oracle(&f, &g, x, y, 0.0).unwrap();
            assert!((h.w - closed_cos(x, y)).abs() < 1e-8, "({x},{y}): {} vs {}", h.w, closed_cos(x, y));
            let tau = 0.5 * ((y / 2.0).tan() / (x / 2.0).tan()).abs().ln();
            assert!((h.tau - tau).abs() < 1e-9 * (1.0 + tau.abs()));
        }
    }

    #[test]
    fn harmonic_quadratic_has_zero_w() {
        let f = Component1D::poly(&[0.0, 0.0, 0.5]);
        let g = Component1D::poly(&[0.0, 0.0, -0.5]);
        for (x, y) in [(0.2, 0.9), (-1.5, 0.1), (3.0, -2.0)] {
            let h = separable_w_oracle(&f, &g, x, y, 0.0).unwrap();
            assert!(h.w.abs() < 1e-12);
            assert!((h.a * h.a - h.b * h.b).abs() < 1e-12);
        }
    }

    #[test]
    fn axis_rejected() {
        let f = Component1D::poly(&[0.0, 0.0, 0.5]);
        assert!(separable_w_oracle(&f, &f, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn time_integral_of_linear_slope() {
        // f′(t) = −t gives G(y) = −ln y
        let g = Component1D::poly(&[0.0, 0.0, -0.5]);
        for y in [0.5, 1e-6, 3.0] {
            assert!((time_integral(&g, 1.0, y).unwrap() + y.ln()).abs() < 1e-13);
        }
    }

    #[test]
    fn bou_fg_verdicts() {
        let one_minus_cos = Component1D::poly(&[1.0]).plus(Component1D::cos(-1.0, 1.0, 0.0));
        let r = check_bou_fg(&one_minus_cos, &BouFgOptions::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Bounded, "{r:?}");
        let g = Component1D::poly(&[0.0, 0.0, -0.5]);
        let r = check_bou_fg(&g, &BouFgOptions::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Bounded);
        assert!(r.values.iter().all(|v| *v < 1e-12));
        let p = catalog_counterexample_iii().unwrap();
        let f = &p.components().unwrap()[0];
        let r = check_bou_fg(f, &BouFgOptions::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Diverging, "{r:?}");
        let flat = Component1D::poly(&[0.0, 0.0, 0.0, 1.0]);
        assert!(check_bou_fg(&flat, &BouFgOptions::default()).is_err());
    }
}
