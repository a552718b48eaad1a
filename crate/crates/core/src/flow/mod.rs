//! Gradient flow `X' = ∇u(X)` augmented with `W' = Δu(X)`.
//!
//! Integration uses an adaptive Dormand–Prince 5(4) pair in signed time:
//! backward trajectories solve `X' = -∇u` internally and report negative
//! times, so `W(t) = ∫₀ᵗ Δu(X(s)) ds` keeps one meaning in both directions.
//! Level crossings are located by bisection on the cubic Hermite dense
//! output and then polished with exact steps so that `|u - c|` meets the
//! level tolerance.

pub mod rk;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{norm, BoxDomain, Face, Vector, MAX_DIM};
use crate::potential::Potential;
use rk::State;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }

    pub fn reversed(self) -> Self {
        match self {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        }
    }
}

/// Tolerances and stopping rules.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Absolute tolerance on the accumulated Laplacian integral.
    pub atol_w: f64,
    /// Largest `|t|` integrated to.
    pub max_time: f64,
    /// Stop with `CriticalConvergence` once `|∇u| < grad_floor`.
    pub grad_floor: f64,
    /// Hits satisfy `|u - c| <= level_tol (1 + |c|)`.
    pub level_tol: f64,
    pub max_step: Option<f64>,
    /// Disables error control and takes steps of exactly this size.
    pub fixed_step: Option<f64>,
    /// Stop box; intersected with the potential's domain.
    pub domain: Option<BoxDomain>,
    /// Keep every accepted step (otherwise only the endpoints).
    pub record: bool,
    /// `|t|` values the integrator must land on exactly (always recorded).
    pub checkpoints: Vec<f64>,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-14,
            atol_w: 1e-14,
            max_time: 1e6,
            grad_floor: 1e-9,
            level_tol: 1e-10,
            max_step: None,
            fixed_step: None,
            domain: None,
            record: true,
            checkpoints: Vec::new(),
        }
    }
}

impl FlowOptions {
    pub fn with_domain(mut self, domain: BoxDomain) -> Self {
        self.domain = Some(domain);
        self
    }

    pub fn with_max_time(mut self, t: f64) -> Self {
        self.max_time = t;
        self
    }

    pub fn endpoints_only(mut self) -> Self {
        self.record = false;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub x: Vector,
    /// `∫₀ᵗ Δu(X(s)) ds`
    pub w: f64,
    pub u: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Termination {
    HitLevel { level: f64, tau: f64, point: Vector },
    CriticalConvergence { limit: Vector },
    DomainExit { face: Face },
    MaxTime,
    StepUnderflow,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory {
    pub dim: usize,
    pub direction: Direction,
    pub samples: Vec<Sample>,
    pub termination: Termination,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectories hold at least the initial sample")
    }

    /// The recorded sample at exactly time `t`, if any (checkpoints).
    pub fn sample_at(&self, t: f64) -> Option<&Sample> {
        self.samples.iter().find(|s| s.t == t)
    }

    /// CSV with header `t,x,y[,z],u,W`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t"];
        header.extend(&["x", "y", "z"][..self.dim]);
        header.extend(["u", "W"]);
        w.write_record(&header)?;
        for s in &self.samples {
            let mut row = vec![fmt(s.t)];
            row.extend(s.x[..self.dim].iter().map(|&v| fmt(v)));
            row.push(fmt(s.u));
            row.push(fmt(s.w));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shortest round-trip representation; keeps exported files deterministic.
pub(crate) fn fmt(v: f64) -> String {
    format!("{v:?}")
}

/// Why a hitting-time query did or did not reach the level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HitStatus {
    Hit,
    CriticalConvergence,
    DomainExit,
    MaxTime,
    StepUnderflow,
    /// Crossing bracketed but the polished point misses the level tolerance.
    Unresolved,
}

/// Result of [`hitting_time`]. On a miss, `tau`, `w` and `point` describe
/// where the trajectory stopped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HittingResult {
    pub status: HitStatus,
    pub tau: f64,
    pub w: f64,
    pub point: Vector,
    /// `u(point) - c`
    pub residual: f64,
}

impl HittingResult {
    pub fn is_hit(&self) -> bool {
        self.status == HitStatus::Hit
    }
}

struct Integrator<'a> {
    potential: &'a Potential,
    opts: &'a FlowOptions,
    d: usize,
    n: usize,
    sign: f64,
    bounds: BoxDomain,
    level: Option<f64>,
}

impl Integrator<'_> {
    fn rhs(&self, y: &State) -> Result<State> {
        let (g, lap) = self.potential.flow_field(&y[..self.d])?;
        let mut f = [0.0; 4];
        for i in 0..self.d {
            f[i] = self.sign * g[i];
        }
        f[self.d] = self.sign * lap;
        Ok(f)
    }

    fn value(&self, y: &State) -> Result<f64> {
        self.potential.value(&y[..self.d])
    }

    fn error_norm(&self, err: &State, y0: &State, y1: &State) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            let atol = if i < self.d { self.opts.atol } else { self.opts.atol_w };
            let sc = atol + self.opts.rtol * y0[i].abs().max(y1[i].abs());
            s += (err[i] / sc).powi(2);
        }
        (s / self.n as f64).sqrt()
    }

    fn step(&self, y: &State, f: &State, h: f64) -> Result<rk::StepOutput> {
        let mut rhs = |s: &State| self.rhs(s);
        rk::step(&mut rhs, y, f, h, self.n)
    }

    fn initial_step(&self, y0: &State, f0: &State) -> f64 {
        let sc = |i: usize| {
            let atol = if i < self.d { self.opts.atol } else { self.opts.atol_w };
            atol + self.opts.rtol * y0[i].abs()
        };
        let rms = |v: &State| {
            ((0..self.n).map(|i| (v[i] / sc(i)).powi(2)).sum::<f64>() / self.n as f64).sqrt()
        };
        let (d0, d1) = (rms(y0), rms(f0));
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let mut y1 = *y0;
        for i in 0..self.n {
            y1[i] += h0 * f0[i];
        }
        let Ok(f1) = self.rhs(&y1) else { return h0 };
        let mut diff = [0.0; 4];
        for i in 0..self.n {
            diff[i] = f1[i] - f0[i];
        }
        let d2 = rms(&diff) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1)
    }

    fn sample(&self, tau: f64, y: &State, u: f64) -> Sample {
        let mut x = [0.0; MAX_DIM];
        x[..self.d].copy_from_slice(&y[..self.d]);
        Sample {
            t: self.sign * tau,
            x,
            w: y[self.d],
            u,
        }
    }

    fn tol(&self, c: f64) -> f64 {
        self.opts.level_tol * (1.0 + c.abs())
    }

    /// First `θ ∈ (0, 1]` where the level is crossed on the dense output.
    fn locate_level(&self, c: f64, step: &StepData) -> f64 {
        let h = step.h;
        let g = |theta: f64| -> Result<f64> { Ok(self.value(&step.dense(theta, self.n))? - c) };
        let tol = 1e-12 / h.abs().max(1e-300);
        match crate::numeric::roots::bisect(g, 0.0, 1.0, tol) {
            Ok(theta) => theta,
            // dense output left the domain: secant estimate, polished below
            Err(_) => (step.g0 / (step.g0 - step.g1)).clamp(0.0, 1.0),
        }
    }

    /// Exact steps from the start of the bracketing step onto `{u = c}`.
    fn polish(&self, c: f64, step: &StepData, theta: f64) -> Result<(f64, State, f64)> {
        let dt = theta * step.h;
        let (mut tau, mut y, mut f) = if dt == 0.0 {
            (step.tau0, step.y0, step.f0)
        } else {
            let s = self.step(&step.y0, &step.f0, dt)?;
            (step.tau0 + dt, s.y, s.f)
        };
        let mut u = self.value(&y)?;
        for _ in 0..12 {
            let r = c - u;
            if r.abs() <= 0.01 * self.tol(c) {
                break;
            }
            let g2: f64 = (0..self.d).map(|i| f[i] * f[i]).sum();
            if g2 == 0.0 {
                break;
            }
            let dtau = self.sign * r / g2;
            match self.step(&y, &f, dtau) {
                Ok(s) => {
                    let u_new = self.value(&s.y)?;
                    if (c - u_new).abs() >= r.abs() {
                        break;
                    }
                    tau += dtau;
                    y = s.y;
                    f = s.f;
                    u = u_new;
                }
                Err(e) if e.is_out_of_domain() => break,
                Err(e) => return Err(e),
            }
        }
        Ok((tau, y, u))
    }

    /// First `θ` at which the dense output leaves the stop box.
    fn locate_exit(&self, step: &StepData) -> (f64, Face) {
        let inside = |theta: f64| self.bounds.contains(&step.dense(theta, self.n)[..self.d]);
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if inside(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let out = step.dense(hi, self.n);
        let face = self
            .bounds
            .violated_face(&out[..self.d])
            .unwrap_or_else(|| self.nearest_face(&out));
        (lo, face)
    }

    fn nearest_face(&self, y: &State) -> Face {
        let mut best = (f64::INFINITY, Face { axis: 0, upper: false });
        for axis in 0..self.d {
            for upper in [false, true] {
                let face = Face { axis, upper };
                let dist = (y[axis] - self.bounds.bound(face)).abs();
                if dist < best.0 {
                    best = (dist, face);
                }
            }
        }
        best.1
    }

    fn run(&self, x0: &[f64]) -> Result<Trajectory> {
        let (d, n) = (self.d, self.n);
        if x0.len() < d {
            return Err(Error::DimensionMismatch { expected: d, found: x0.len() });
        }
        if !self.bounds.contains(&x0[..d]) {
            return Err(Error::OutOfDomain {
                potential: self.potential.id().to_string(),
                point: x0[..d].to_vec(),
            });
        }
        let mut y: State = [0.0; 4];
        y[..d].copy_from_slice(&x0[..d]);
        let mut f = self.rhs(&y)?;
        let mut u = self.value(&y)?;
        let mut tau = 0.0;
        let mut samples = vec![self.sample(0.0, &y, u)];
        let (mut accepted, mut rejected) = (0, 0);
        let mut checkpoints: Vec<f64> = self
            .opts
            .checkpoints
            .iter()
            .map(|t| t.abs())
            .filter(|&t| t > 0.0 && t < self.opts.max_time)
            .collect();
        checkpoints.sort_by(f64::total_cmp);
        checkpoints.dedup();
        checkpoints.reverse();

        let finish = |samples: Vec<Sample>, termination, accepted, rejected| Trajectory {
            dim: d,
            direction: if self.sign > 0.0 { Direction::Forward } else { Direction::Backward },
            samples,
            termination,
            accepted_steps: accepted,
            rejected_steps: rejected,
        };

        if let Some(c) = self.level {
            if (u - c).abs() <= self.tol(c) {
                let point = samples[0].x;
                return Ok(finish(samples, Termination::HitLevel { level: c, tau: 0.0, point }, 0, 0));
            }
        }
        if norm(&f[..d]) < self.opts.grad_floor {
            let limit = samples[0].x;
            return Ok(finish(samples, Termination::CriticalConvergence { limit }, 0, 0));
        }
        if self.opts.max_time <= 0.0 {
            return Ok(finish(samples, Termination::MaxTime, 0, 0));
        }

        let max_step = self.opts.max_step.unwrap_or(f64::INFINITY);
        let mut h = self
            .opts
            .fixed_step
            .unwrap_or_else(|| self.initial_step(&y, &f))
            .min(max_step);
        let mut blocked = false;
        // u - c on the starting side; landing on exactly c is not a crossing
        // (rounding does that while converging to a critical point at level c)
        let side = self.level.map_or(0.0, |c| (u - c).signum());

        loop {
            let target = checkpoints.last().copied().unwrap_or(self.opts.max_time);
            let remaining = target - tau;
            let landing = h >= remaining * (1.0 - 1e-14);
            let h_try = if landing { remaining } else { h };
            let floor = 1e-14 * tau.max(1.0);
            if h_try < floor && !landing {
                let termination = if blocked {
                    Termination::DomainExit { face: self.nearest_face(&y) }
                } else {
                    Termination::StepUnderflow
                };
                if !self.opts.record {
                    samples.push(self.sample(tau, &y, u));
                }
                return Ok(finish(samples, termination, accepted, rejected));
            }
            let out = match self.step(&y, &f, h_try) {
                Ok(out) => out,
                Err(e) if e.is_out_of_domain() => {
                    blocked = true;
                    rejected += 1;
                    h = 0.25 * h_try;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let err = self.error_norm(&out.err, &y, &out.y);
            if self.opts.fixed_step.is_none() && !(err <= 1.0) {
                rejected += 1;
                let fac = if err.is_finite() { (0.9 * err.powf(-0.2)).max(0.2) } else { 0.2 };
                h = h_try * fac.min(1.0);
                continue;
            }
            accepted += 1;
            blocked = false;
            let tau_new = if landing { target } else { tau + h_try };
            let u_new = self.value(&out.y)?;
            let step = StepData {
                tau0: tau,
                h: tau_new - tau,
                y0: y,
                f0: f,
                y1: out.y,
                f1: out.f,
                g0: self.level.map_or(0.0, |c| u - c),
                g1: self.level.map_or(0.0, |c| u_new - c),
            };

            let level_theta = self.level.and_then(|c| {
                (step.g1 * side < 0.0).then(|| self.locate_level(c, &step))
            });
            let exit = (!self.bounds.contains(&out.y[..d])).then(|| self.locate_exit(&step));

            if let (Some(theta), Some(c)) = (level_theta, self.level) {
                if exit.is_none_or(|(te, _)| theta <= te) {
                    let (t_hit, y_hit, u_hit) = self.polish(c, &step, theta)?;
                    let hit = self.sample(t_hit, &y_hit, u_hit);
                    let termination = Termination::HitLevel {
                        level: c,
                        tau: hit.t,
                        point: hit.x,
                    };
                    samples.push(hit);
                    return Ok(finish(samples, termination, accepted, rejected));
                }
            }
            if let Some((theta, face)) = exit {
                let y_exit = step.dense(theta, n);
                let u_exit = self.value(&y_exit).unwrap_or(f64::NAN);
                samples.push(self.sample(tau + theta * step.h, &y_exit, u_exit));
                return Ok(finish(samples, Termination::DomainExit { face }, accepted, rejected));
            }

            y = out.y;
            f = out.f;
            u = u_new;
            tau = tau_new;
            let at_checkpoint = landing && !checkpoints.is_empty();
            if self.opts.record || at_checkpoint {
                samples.push(self.sample(tau, &y, u));
            }
            if norm(&f[..d]) < self.opts.grad_floor {
                if !self.opts.record && !at_checkpoint {
                    samples.push(self.sample(tau, &y, u));
                }
                let limit = samples.last().unwrap().x;
                return Ok(finish(
                    samples,
                    Termination::CriticalConvergence { limit },
                    accepted,
                    rejected,
                ));
            }
            if landing && checkpoints.is_empty() {
                if !self.opts.record {
                    samples.push(self.sample(tau, &y, u));
                }
                return Ok(finish(samples, Termination::MaxTime, accepted, rejected));
            }
            if at_checkpoint {
                checkpoints.pop();
            }

            if let Some(fixed) = self.opts.fixed_step {
                h = fixed;
            } else {
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                let proposal = (h_try * fac).min(max_step);
                // a step shortened to land on a target says little about the scale
                h = if landing { proposal.max(h) } else { proposal };
            }
        }
    }
}

struct StepData {
    tau0: f64,
    h: f64,
    y0: State,
    f0: State,
    y1: State,
    f1: State,
    g0: f64,
    g1: f64,
}

impl StepData {
    fn dense(&self, theta: f64, n: usize) -> State {
        rk::hermite(&self.y0, &self.f0, &self.y1, &self.f1, self.h, theta, n)
    }
}

fn integrator<'a>(
    potential: &'a Potential,
    direction: Direction,
    level: Option<f64>,
    opts: &'a FlowOptions,
) -> Result<Integrator<'a>> {
    if !(opts.grad_floor > 0.0) {
        return Err(Error::InvalidInput("grad_floor must be positive".into()));
    }
    if !(opts.rtol > 0.0 && opts.atol > 0.0 && opts.atol_w > 0.0 && opts.level_tol > 0.0) {
        return Err(Error::InvalidInput("flow tolerances must be positive".into()));
    }
    if let Some(h) = opts.fixed_step {
        if !(h > 0.0) {
            return Err(Error::InvalidInput("fixed step must be positive".into()));
        }
    }
    let d = potential.dim();
    let bounds = match &opts.domain {
        Some(b) => {
            if b.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, found: b.dim() });
            }
            b.intersect(potential.domain())?
        }
        None => potential.domain().clone(),
    };
    Ok(Integrator {
        potential,
        opts,
        d,
        n: d + 1,
        sign: direction.sign(),
        bounds,
        level,
    })
}

/// Integrates the augmented system from `x0` until the first stop fires.
/// With `level = Some(c)`, a crossing of `{u = c}` ends the trajectory.
pub fn integrate(
    potential: &Potential,
    x0: &[f64],
    direction: Direction,
    level: Option<f64>,
    opts: &FlowOptions,
) -> Result<Trajectory> {
    integrator(potential, direction, level, opts)?.run(x0)
}

/// Time `τ` (negative when integrating backward) at which the trajectory
/// from `x0` meets `{u = c}`, and `w = ∫₀^τ Δu(X(s)) ds`.
pub fn hitting_time(potential: &Potential, x0: &[f64], level: f64, opts: &FlowOptions) -> Result<HittingResult> {
    let u0 = potential.value(x0)?;
    let direction = if u0 > level { Direction::Backward } else { Direction::Forward };
    let run = integrate(potential, x0, direction, Some(level), opts)?;
    let last = run.last();
    let residual = last.u - level;
    let status = match run.termination {
        Termination::HitLevel { .. } if residual.abs() <= opts.level_tol * (1.0 + level.abs()) => HitStatus::Hit,
        Termination::HitLevel { .. } => HitStatus::Unresolved,
        Termination::CriticalConvergence { .. } => HitStatus::CriticalConvergence,
        Termination::DomainExit { .. } => HitStatus::DomainExit,
        Termination::MaxTime => HitStatus::MaxTime,
        Termination::StepUnderflow => HitStatus::StepUnderflow,
    };
    Ok(HittingResult {
        status,
        tau: last.t,
        w: last.w,
        point: last.x,
        residual,
    })
}

/// `(X(t, x0), W(t))` for signed `t`; fails if a stop fires before `t`.
pub fn flow_map(potential: &Potential, x0: &[f64], t: f64, opts: &FlowOptions) -> Result<(Vector, f64)> {
    let direction = if t < 0.0 { Direction::Backward } else { Direction::Forward };
    let opts = FlowOptions {
        max_time: t.abs(),
        record: false,
        checkpoints: Vec::new(),
        ..opts.clone()
    };
    let run = integrate(potential, x0, direction, None, &opts)?;
    match run.termination {
        Termination::MaxTime => Ok((run.last().x, run.last().w)),
        other => Err(Error::NoConvergence(format!(
            "flow from {:?} stopped before t = {t}: {other:?}",
            &x0[..potential.dim()]
        ))),
    }
}

/// `∫₀ᵗ Δu(X(s, x0)) ds`.
pub fn laplacian_integral(potential: &Potential, x0: &[f64], t: f64, opts: &FlowOptions) -> Result<f64> {
    Ok(flow_map(potential, x0, t, opts)?.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{catalog_cos_saddle, catalog_cubic, from_id};
    use std::f64::consts::PI;

    fn cubic_exact(t: f64, x: f64, y: f64) -> (f64, f64, f64) {
        (
            x / (1.0 + t * x),
            y / (1.0 - t * y),
            -2.0 * ((1.0 + t * x) * (1.0 - t * y)).ln(),
        )
    }

    #[test]
    fn cubic_flow_matches_closed_form() {
        let p = catalog_cubic();
        let opts = FlowOptions::default();
        for t in [0.5, 1.0, 2.0] {
            let (x, w) = flow_map(&p, &[0.5, -0.5], t, &opts).unwrap();
            let (ex, ey, ew) = cubic_exact(t, 0.5, -0.5);
            assert!((x[0] - ex).abs() < 1e-12 && (x[1] - ey).abs() < 1e-12);
            assert!((w - ew).abs() < 1e-11, "t={t}: {w} vs {ew}");
        }
        let w2 = laplacian_integral(&p, &[0.5, -0.5], 2.0, &opts).unwrap();
        assert!((w2 + 4.0 * 2f64.ln()).abs() < 1e-11);
    }

    #[test]
    fn zero_time_is_identity() {
        let p = catalog_cos_saddle();
        let (x, w) = flow_map(&p, &[0.3, 0.2], 0.0, &FlowOptions::default()).unwrap();
        assert_eq!((x[0], x[1], w), (0.3, 0.2, 0.0));
    }

    #[test]
    fn backward_flow_reports_negative_time() {
        let p = catalog_cubic();
        // X(t) = (x/(1+tx), y/(1-ty)) also holds for t < 0
        let (x, w) = flow_map(&p, &[0.5, -0.5], -0.5, &FlowOptions::default()).unwrap();
        let (ex, ey, ew) = cubic_exact(-0.5, 0.5, -0.5);
        assert!((x[0] - ex).abs() < 1e-12 && (x[1] - ey).abs() < 1e-12);
        assert!((w - ew).abs() < 1e-11);
    }

    #[test]
    fn cos_saddle_hitting_time() {
        let p = catalog_cos_saddle();
        let r = hitting_time(&p, &[PI / 3.0, PI / 2.0], 0.0, &FlowOptions::default()).unwrap();
        assert!(r.is_hit());
        assert!((r.tau - 3f64.ln() / 4.0).abs() < 1e-10, "{}", r.tau);
        assert!(r.residual.abs() <= 1e-10);
        // consistency with the Laplacian integral up to τ
        let w = laplacian_integral(&p, &[PI / 3.0, PI / 2.0], r.tau, &FlowOptions::default()).unwrap();
        assert!((w - r.w).abs() < 1e-8);
        let r0 = hitting_time(&p, &[0.7, 0.7], 0.0, &FlowOptions::default()).unwrap();
        assert_eq!((r0.tau, r0.w), (0.0, 0.0));
    }

    #[test]
    fn backward_hitting_time_is_negative() {
        let p = catalog_cos_saddle();
        // swapping the coordinates flips the sign of u and of τ
        let r = hitting_time(&p, &[PI / 2.0, PI / 3.0], 0.0, &FlowOptions::default()).unwrap();
        assert!((r.tau + 3f64.ln() / 4.0).abs() < 1e-10);
    }

    #[test]
    fn cubic_quadrant_hitting_time() {
        let p = catalog_cubic();
        let r = hitting_time(&p, &[0.5, 0.25], 0.0, &FlowOptions::default()).unwrap();
        assert!((r.tau - 1.0).abs() < 1e-10);
    }

    #[test]
    fn harmonic_integrand_gives_zero() {
        let p = from_id("plane").unwrap();
        let w = laplacian_integral(&p, &[0.1, 0.2], 3.0, &FlowOptions::default()).unwrap();
        assert_eq!(w, 0.0);
    }

    #[test]
    fn trajectory_stops_near_critical_point() {
        let p = catalog_cos_saddle();
        // on the stable manifold {x = 0}
        let run = integrate(&p, &[0.0, 1.0], Direction::Forward, None, &FlowOptions::default()).unwrap();
        match run.termination {
            Termination::CriticalConvergence { limit } => assert!(norm(&limit) < 1e-8),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn domain_exit_is_detected() {
        let p = catalog_cubic();
        let opts = FlowOptions::default().with_domain(BoxDomain::cube(2, -0.8, 0.8));
        // backward: x/(1+tx) grows and leaves through x = 0.8
        let run = integrate(&p, &[0.5, -0.5], Direction::Backward, None, &opts).unwrap();
        match run.termination {
            Termination::DomainExit { face } => assert_eq!(face, Face { axis: 0, upper: true }),
            other => panic!("{other:?}"),
        }
        assert!((run.last().x[0] - 0.8).abs() < 1e-9);
        // leaving the potential's own domain is also an exit
        let run = integrate(&p, &[0.5, -0.5], Direction::Backward, None, &FlowOptions::default()).unwrap();
        assert!(matches!(run.termination, Termination::DomainExit { .. }));
    }

    #[test]
    fn times_are_monotone_and_u_increases() {
        let p = catalog_cos_saddle();
        let run = integrate(&p, &[0.4, 2.0], Direction::Forward, None, &FlowOptions::default().with_max_time(3.0))
            .unwrap();
        assert!(run.samples.windows(2).all(|w| w[1].t > w[0].t && w[1].u > w[0].u));
        let back = integrate(&p, &[0.4, 2.0], Direction::Backward, None, &FlowOptions::default().with_max_time(3.0))
            .unwrap();
        assert!(back.samples.windows(2).all(|w| w[1].t < w[0].t && w[1].u < w[0].u));
    }

    #[test]
    fn checkpoints_are_landed_on() {
        let p = catalog_cubic();
        let opts = FlowOptions {
            checkpoints: vec![0.5, 1.0, 2.0],
            record: false,
            ..FlowOptions::default().with_max_time(4.0)
        };
        let run = integrate(&p, &[0.5, -0.5], Direction::Forward, None, &opts).unwrap();
        for t in [0.5, 1.0, 2.0] {
            let s = run.sample_at(t).unwrap();
            assert!((s.x[0] - cubic_exact(t, 0.5, -0.5).0).abs() < 1e-12);
        }
        assert_eq!(run.samples.len(), 5);
    }

    #[test]
    fn fixed_steps_show_high_order() {
        let p = catalog_cubic();
        let err = |h: f64| {
            let opts = FlowOptions { fixed_step: Some(h), ..FlowOptions::default() };
            let (x, _) = flow_map(&p, &[0.5, -0.5], 2.0, &opts).unwrap();
            (x[0] - 0.25).abs().max((x[1] + 0.25).abs())
        };
        let order = (err(0.2) / err(0.1)).log2();
        assert!(order > 4.0, "{order}");
    }

    #[test]
    fn csv_export_has_header() {
        let p = catalog_cubic();
        let opts = FlowOptions::default().with_max_time(0.1);
        let run = integrate(&p, &[0.5, -0.5], Direction::Forward, None, &opts).unwrap();
        let mut buf = Vec::new();
        run.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,x,y,u,W\n0.0,0.5,-0.5,"));
    }

    #[test]
    fn invalid_inputs() {
        let p = catalog_cos_saddle();
        let bad = FlowOptions { grad_floor: 0.0, ..FlowOptions::default() };
        assert!(integrate(&p, &[0.1, 0.1], Direction::Forward, None, &bad).is_err());
        let r = integrate(&p, &[5.0, 0.1], Direction::Forward, None, &FlowOptions::default());
        assert!(r.unwrap_err().is_out_of_domain());
    }
}
