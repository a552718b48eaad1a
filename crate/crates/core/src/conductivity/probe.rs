//! Finite probes of the boundedness conditions on `w` and `∫₀ᵗ Δu`.
//!
//! A probe records one value per stage of a schedule (distances shrinking
//! to a manifold, or times growing to infinity) and applies [`DecisionRule`]
//! to call the sequence bounded or diverging.

use serde::{Deserialize, Serialize};

use crate::critical::{classify, Classification, CriticalPoint, Manifolds};
use crate::error::{Error, Result};
use crate::flow::{hitting_time, integrate, Direction, FlowOptions, Termination};
use crate::geometry::{norm, BoxDomain, Vector, MAX_DIM};
use crate::numeric::fit::{fit_line, LineFit};
use crate::potential::Potential;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProbeKind {
    /// `sup |w|` approaching the saddle's manifolds.
    #[serde(rename = "saddle-linf")]
    SaddleLInf,
    /// `sup |∫₀ᵗ Δu|` near a stable point.
    #[serde(rename = "stable-cstar")]
    StableCStar,
    /// `sup |∫₀ᵗ Δu|` over a unit cell of a periodic potential.
    #[serde(rename = "torus-c2rd")]
    TorusC2Rd,
    /// `|F(x) − ln|x| / f″(0)|` as `x → 0`.
    #[serde(rename = "bou-fg")]
    BouFG,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Bounded,
    Diverging,
}

/// Regressor the stage values are fitted against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GrowthModel {
    #[serde(rename = "ln(1/d)")]
    LogInverse,
    #[serde(rename = "ln(ln(1/d))")]
    LogLogInverse,
    #[serde(rename = "t")]
    Linear,
    #[serde(rename = "ln(t)")]
    Log,
}

impl GrowthModel {
    pub fn regressor(self, s: f64) -> f64 {
        match self {
            GrowthModel::LogInverse => (1.0 / s).ln(),
            GrowthModel::LogLogInverse => (1.0 / s).ln().ln(),
            GrowthModel::Linear => s,
            GrowthModel::Log => s.ln(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub model: GrowthModel,
    pub coefficient: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Diverging iff all of:
/// - the last `stages` values increase strictly (by more than `noise · (1 + |v|)`);
/// - each of them exceeds `factor ·` the first value;
/// - the total increase exceeds `min_increase`;
/// - the best growth model has `R² >= min_r2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecisionRule {
    pub stages: usize,
    pub factor: f64,
    pub min_increase: f64,
    pub min_r2: f64,
    pub noise: f64,
}

impl Default for DecisionRule {
    fn default() -> Self {
        Self {
            stages: 3,
            factor: 3.0,
            min_increase: 0.5,
            min_r2: 0.9,
            noise: 1e-9,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProbeReport {
    pub kind: ProbeKind,
    /// Distances or times, one per stage.
    pub schedule: Vec<f64>,
    /// Observed supremum per stage; NaN when no sample was usable.
    pub values: Vec<f64>,
    /// Usable samples per stage.
    pub samples: Vec<usize>,
    pub verdict: Verdict,
    /// Best growth fit.
    pub fit: Option<GrowthFit>,
    pub fits: Vec<GrowthFit>,
    pub notes: Vec<String>,
}

impl ProbeReport {
    /// Applies `rule` to `values` (NaN stages are dropped).
    pub fn decide(
        kind: ProbeKind,
        schedule: Vec<f64>,
        values: Vec<f64>,
        samples: Vec<usize>,
        models: &[GrowthModel],
        rule: &DecisionRule,
    ) -> Result<Self> {
        let (s, v): (Vec<f64>, Vec<f64>) = schedule
            .iter()
            .zip(&values)
            .filter(|(_, v)| v.is_finite())
            .map(|(s, v)| (*s, *v))
            .unzip();
        if v.is_empty() {
            return Err(Error::Unusable("no stage produced a usable sample".into()));
        }
        let fits: Vec<GrowthFit> = models
            .iter()
            .map(|&m| {
                let x: Vec<f64> = s.iter().map(|&s| m.regressor(s)).collect();
                let LineFit { intercept, coefficient, r2 } = fit_line(&x, &v);
                GrowthFit { model: m, coefficient, intercept, r2 }
            })
            .collect();
        let fit = fits.iter().max_by(|a, b| a.r2.total_cmp(&b.r2)).cloned();
        let mut notes = Vec::new();
        let k = rule.stages.max(1);
        let diverging = if v.len() < k + 1 {
            notes.push(format!("only {} usable stages", v.len()));
            false
        } else {
            let tail = &v[v.len() - k..];
            let before = v[v.len() - k - 1];
            let increasing = std::iter::once(before)
                .chain(tail.iter().copied())
                .collect::<Vec<_>>()
                .windows(2)
                .all(|w| w[1] - w[0] > rule.noise * (1.0 + w[1].abs()));
            let exceeds = tail.iter().all(|&t| t > rule.factor * v[0]);
            let grown = v[v.len() - 1] - v[0] > rule.min_increase;
            let fits_well = fit.as_ref().is_some_and(|f| f.r2 >= rule.min_r2 && f.coefficient > 0.0);
            if !increasing {
                notes.push("tail not strictly increasing".into());
            }
            if !exceeds || !grown {
                notes.push("growth below threshold".into());
            }
            if !fits_well {
                notes.push("no growth model fits".into());
            }
            increasing && exceeds && grown && fits_well
        };
        Ok(Self {
            kind,
            schedule,
            values,
            samples,
            verdict: if diverging { Verdict::Diverging } else { Verdict::Bounded },
            fit,
            fits,
            notes,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SaddleProbeOptions {
    /// Distances `2^{-k}`, `k = 1..=stages`.
    pub stages: usize,
    /// Defaults to the potential's domain (or `[-1, 1]^d` if unbounded).
    pub q_box: Option<BoxDomain>,
    /// Defaults to `u(x*)`.
    pub level: Option<f64>,
    /// Branches used per manifold.
    pub branches: usize,
    pub flow: FlowOptions,
    pub rule: DecisionRule,
}

impl Default for SaddleProbeOptions {
    fn default() -> Self {
        Self {
            stages: 40,
            q_box: None,
            level: None,
            branches: 4,
            flow: FlowOptions {
                grad_floor: 1e-14,
                ..FlowOptions::default()
            },
            rule: DecisionRule::default(),
        }
    }
}

fn sub(a: &Vector, b: &Vector) -> Vector {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn unit(v: Vector) -> Option<Vector> {
    let n = norm(&v);
    (n > 0.0).then(|| [v[0] / n, v[1] / n, v[2] / n])
}

fn dot(a: &Vector, b: &Vector) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Point at arclength `s` along a polyline and the local unit tangent.
fn along(branch: &[Vector], s: f64) -> Option<(Vector, Vector)> {
    let mut left = s;
    for w in branch.windows(2) {
        let seg = sub(&w[1], &w[0]);
        let len = norm(&seg);
        if len == 0.0 {
            continue;
        }
        if left <= len {
            let t = left / len;
            let p = [w[0][0] + t * seg[0], w[0][1] + t * seg[1], w[0][2] + t * seg[2]];
            return Some((p, unit(seg)?));
        }
        left -= len;
    }
    None
}

fn length(branch: &[Vector]) -> f64 {
    branch.windows(2).map(|w| norm(&sub(&w[1], &w[0]))).sum()
}

/// Samples `|w|` at `p ± d n` for base points `p` halfway (capped at half the
/// box width) along each manifold branch and transversal directions `n`,
/// with `d = 2^{-k}`.
pub fn probe_saddle_boundedness(
    potential: &Potential,
    saddle: &CriticalPoint,
    manifolds: &Manifolds,
    opts: &SaddleProbeOptions,
) -> Result<ProbeReport> {
    if saddle.classification != Classification::Saddle {
        return Err(Error::NotSaddle(format!("{:?}", saddle.classification)));
    }
    let d = potential.dim();
    let x0 = saddle.point();
    let q = match &opts.q_box {
        Some(b) => b.clone(),
        None if potential.domain().is_bounded() => potential.domain().clone(),
        None => BoxDomain::cube(d, -1.0, 1.0),
    };
    let half = 0.5 * q.min_width();
    let level = match opts.level {
        Some(c) => c,
        None => potential.value(&x0)?,
    };
    // (base point, transversal directions)
    let mut bases: Vec<(Vector, Vec<Vector>)> = Vec::new();
    for (m, other) in [(&manifolds.stable, true), (&manifolds.unstable, false)] {
        let normals: Vec<Vector> = saddle
            .directions(other)
            .iter()
            .map(|v| {
                let mut n = [0.0; MAX_DIM];
                n[..d].copy_from_slice(&v[..d]);
                n
            })
            .collect();
        let count = m.branches.len();
        let pick = opts.branches.max(1).min(count);
        for j in 0..pick {
            let b = &m.branches[j * count / pick];
            let s = 0.5 * length(b).min(half);
            let Some((p, tangent)) = along(b, s) else { continue };
            let dirs: Vec<Vector> = if d == 2 {
                vec![[-tangent[1], tangent[0], 0.0]]
            } else {
                normals
                    .iter()
                    .filter_map(|n| {
                        let c = dot(n, &tangent);
                        unit([n[0] - c * tangent[0], n[1] - c * tangent[1], n[2] - c * tangent[2]])
                    })
                    .collect()
            };
            bases.push((p, dirs));
        }
    }
    if bases.is_empty() {
        return Err(Error::Unusable("manifold branches too short to place base points".into()));
    }
    let mut schedule = Vec::with_capacity(opts.stages);
    let mut values = Vec::with_capacity(opts.stages);
    let mut samples = Vec::with_capacity(opts.stages);
    for k in 1..=opts.stages {
        let dist = (-(k as f64)).exp2();
        let flow = FlowOptions {
            atol: opts.flow.atol.min(1e-12 * dist),
            record: false,
            ..opts.flow.clone()
        };
        let mut sup = f64::NAN;
        let mut used = 0;
        for (p, dirs) in &bases {
            for n in dirs {
                for sgn in [1.0, -1.0] {
                    let x = [p[0] + sgn * dist * n[0], p[1] + sgn * dist * n[1], p[2] + sgn * dist * n[2]];
                    if !q.contains(&x[..d]) {
                        continue;
                    }
                    let r = match hitting_time(potential, &x, level, &flow) {
                        Ok(r) => r,
                        Err(e) if e.is_out_of_domain() => continue,
                        Err(e) => return Err(e),
                    };
                    if r.is_hit() {
                        used += 1;
                        sup = if sup.is_nan() { r.w.abs() } else { sup.max(r.w.abs()) };
                    }
                }
            }
        }
        schedule.push(dist);
        values.push(sup);
        samples.push(used);
    }
    ProbeReport::decide(
        ProbeKind::SaddleLInf,
        schedule,
        values,
        samples,
        &[GrowthModel::LogInverse, GrowthModel::LogLogInverse],
        &opts.rule,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StableProbeOptions {
    /// Times `2^j`, `j = 0..stages`.
    pub stages: usize,
    /// Sample points per axis, at cell centres of `Q*`.
    pub per_axis: usize,
    /// Trajectories leaving this box make the point not stable. Defaults to
    /// the hull of `Q*` and the point, padded by 25%.
    pub k_box: Option<BoxDomain>,
    pub flow: FlowOptions,
    pub rule: DecisionRule,
}

impl Default for StableProbeOptions {
    fn default() -> Self {
        Self {
            stages: 17,
            per_axis: 5,
            k_box: None,
            flow: FlowOptions {
                grad_floor: f64::MIN_POSITIVE,
                ..FlowOptions::default()
            },
            rule: DecisionRule::default(),
        }
    }
}

/// Cell-centre sample points of `q`.
pub(crate) fn cell_centres(q: &BoxDomain, per_axis: usize) -> Vec<Vector> {
    let d = q.dim();
    let n = per_axis.max(1);
    let total = n.pow(d as u32);
    (0..total)
        .map(|mut i| {
            let mut x = [0.0; MAX_DIM];
            for a in (0..d).rev() {
                let k = i % n;
                i /= n;
                x[a] = q.lo[a] + (k as f64 + 0.5) / n as f64 * (q.hi[a] - q.lo[a]);
            }
            x
        })
        .collect()
}

/// `∫₀ᵗ Δu` at each `|t|` in `times` along the trajectory from `x`. A run that
/// converges to a critical point is continued linearly with the limit's
/// Laplacian. `Ok(None)` when the trajectory leaves the stop box.
pub(crate) fn laplacian_integrals(
    potential: &Potential,
    x: &Vector,
    direction: Direction,
    times: &[f64],
    flow: &FlowOptions,
) -> Result<Option<Vec<f64>>> {
    let t_max = times.iter().fold(0.0f64, |m, t| m.max(*t));
    let opts = FlowOptions {
        max_time: t_max,
        checkpoints: times.to_vec(),
        record: false,
        ..flow.clone()
    };
    let run = integrate(potential, x, direction, None, &opts)?;
    let sign = direction.sign();
    let last = run.last().clone();
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        if let Some(s) = run.sample_at(sign * t) {
            out.push(s.w);
            continue;
        }
        match &run.termination {
            Termination::CriticalConvergence { limit } if last.t.abs() <= t => {
                let lap = potential.laplacian(limit)?;
                out.push(last.w + lap * (sign * t - last.t));
            }
            Termination::DomainExit { .. } => return Ok(None),
            other => {
                return Err(Error::NoConvergence(format!(
                    "trajectory from {:?} stopped before t = {t}: {other:?}",
                    &x[..potential.dim()]
                )))
            }
        }
    }
    Ok(Some(out))
}

/// `sup_{x ∈ Q*} |∫₀ᵗ Δu(X(s, x)) ds|` for `t = 2^j`. Forward for sinks,
/// backward for sources; degenerate points use whichever direction keeps
/// every sample inside `K*`.
pub fn probe_stable_point(potential: &Potential, point: &[f64], q_box: &BoxDomain, opts: &StableProbeOptions) -> Result<ProbeReport> {
    let d = potential.dim();
    if q_box.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: q_box.dim() });
    }
    let cp = match classify(potential, point) {
        Ok(cp) => cp,
        Err(Error::NotCritical { residual }) => {
            return Err(Error::NotStable(format!("|∇u| = {residual:e} at {:?}: not a critical point", &point[..d])))
        }
        Err(e) => return Err(e),
    };
    let directions = match cp.classification {
        Classification::Sink => vec![Direction::Forward],
        Classification::Source => vec![Direction::Backward],
        Classification::Degenerate => vec![Direction::Forward, Direction::Backward],
        Classification::Saddle => return Err(Error::NotStable("saddle point".into())),
    };
    let k_box = match &opts.k_box {
        Some(k) => k.clone(),
        None => {
            let lo = (0..d).map(|a| q_box.lo[a].min(point[a])).collect();
            let hi = (0..d).map(|a| q_box.hi[a].max(point[a])).collect();
            BoxDomain::new(lo, hi)?.padded(0.25)
        }
    };
    let times: Vec<f64> = (0..opts.stages).map(|j| (j as f64).exp2()).collect();
    let xs = cell_centres(q_box, opts.per_axis);
    let flow = FlowOptions {
        domain: Some(k_box),
        ..opts.flow.clone()
    };
    'directions: for dir in directions {
        let mut sup = vec![0.0f64; times.len()];
        for x in &xs {
            match laplacian_integrals(potential, x, dir, &times, &flow)? {
                Some(w) => {
                    for (s, w) in sup.iter_mut().zip(w) {
                        *s = s.max(w.abs());
                    }
                }
                None => continue 'directions,
            }
        }
        let mut report = ProbeReport::decide(
            ProbeKind::StableCStar,
            times.clone(),
            sup,
            vec![xs.len(); times.len()],
            &[GrowthModel::Linear, GrowthModel::Log],
            &opts.rule,
        )?;
        report.notes.push(format!("{:?} point, {dir:?} flow", cp.classification).to_lowercase());
        if report.verdict == Verdict::Bounded && !potential_is_constant(potential, q_box)? {
            report
                .notes
                .push("bounded verdict for a non-constant potential: schedule too short to show growth".into());
        }
        return Ok(report);
    }
    Err(Error::NotStable("sampled trajectories leave K* in both time directions".into()))
}

fn potential_is_constant(potential: &Potential, q: &BoxDomain) -> Result<bool> {
    for x in cell_centres(q, 3) {
        if norm(&potential.gradient(&x)?[..potential.dim()]) > 0.0 {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::critical::{trace_manifolds, ManifoldOptions};
    use crate::potential::{catalog_cos_saddle, catalog_cubic, from_id};
    use std::f64::consts::PI;

    fn rule() -> DecisionRule {
        DecisionRule::default()
    }

    #[test]
    fn rule_on_synthetic_sequences() {
        let s: Vec<f64> = (1..=40).map(|k| (-(k as f64)).exp2()).collect();
        let models = [GrowthModel::LogInverse, GrowthModel::LogLogInverse];
        let log: Vec<f64> = s.iter().map(|d| (1.0 / d).ln()).collect();
        let r = ProbeReport::decide(ProbeKind::SaddleLInf, s.clone(), log, vec![1; 40], &models, &rule()).unwrap();
        assert_eq!(r.verdict, Verdict::Diverging);
        assert_eq!(r.fit.unwrap().model, GrowthModel::LogInverse);
        let saturating: Vec<f64> = s.iter().map(|d| 2.0 - d).collect();
        let r = ProbeReport::decide(ProbeKind::SaddleLInf, s.clone(), saturating, vec![1; 40], &models, &rule()).unwrap();
        assert_eq!(r.verdict, Verdict::Bounded);
        let tiny: Vec<f64> = (0..40).map(|k| 1e-12 * k as f64).collect();
        let r = ProbeReport::decide(ProbeKind::SaddleLInf, s, tiny, vec![1; 40], &models, &rule()).unwrap();
        assert_eq!(r.verdict, Verdict::Bounded);
    }

    #[test]
    fn empty_probe_is_unusable() {
        let r = ProbeReport::decide(ProbeKind::SaddleLInf, vec![0.5], vec![f64::NAN], vec![0], &[GrowthModel::Log], &rule());
        assert!(matches!(r, Err(Error::Unusable(_))));
    }

    fn saddle_report(id: &str) -> ProbeReport {
        let p = from_id(id).unwrap();
        let s = classify(&p, &[0.0, 0.0]).unwrap();
        let m = trace_manifolds(&p, &s, &ManifoldOptions::default()).unwrap();
        let opts = SaddleProbeOptions { stages: 20, ..Default::default() };
        probe_saddle_boundedness(&p, &s, &m, &opts).unwrap()
    }

    #[test]
    fn cos_saddle_is_bounded() {
        let p = catalog_cos_saddle();
        let s = classify(&p, &[0.0, 0.0]).unwrap();
        let m = trace_manifolds(&p, &s, &ManifoldOptions::default()).unwrap();
        let q = BoxDomain::cube(2, -PI + 0.1, PI - 0.1);
        let opts = SaddleProbeOptions { stages: 20, q_box: Some(q), ..Default::default() };
        let r = probe_saddle_boundedness(&p, &s, &m, &opts).unwrap();
        assert_eq!(r.verdict, Verdict::Bounded, "{r:?}");
        assert!(r.values.iter().all(|v| *v <= 4f64.ln()));
        assert!(r.samples.iter().all(|&n| n == 8));
    }

    #[test]
    fn harmonic_saddle_has_zero_w() {
        let r = saddle_report("separable:quad-saddle");
        assert_eq!(r.verdict, Verdict::Bounded);
        assert!(r.values.iter().all(|v| *v < 1e-9), "{:?}", r.values);
    }

    #[test]
    fn unbalanced_saddle_diverges() {
        let r = saddle_report("separable:quad-unbalanced");
        assert_eq!(r.verdict, Verdict::Diverging, "{r:?}");
        assert_eq!(r.fit.unwrap().model, GrowthModel::LogInverse);
    }

    #[test]
    fn cubic_quadrant_diverges_logarithmically() {
        let p = catalog_cubic();
        let q = BoxDomain::new(vec![0.0, -1.0], vec![1.0, 0.0]).unwrap();
        let r = probe_stable_point(&p, &[0.0, 0.0], &q, &StableProbeOptions::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Diverging, "{r:?}");
        let fit = r.fit.unwrap();
        assert_eq!(fit.model, GrowthModel::Log);
        assert!(fit.r2 >= 0.95);
        // sup over samples is attained at (0.9, -0.9)
        let t: f64 = 1024.0;
        let expect: f64 = 2.0 * ((1.0 + 0.9 * t) * (1.0 + 0.9 * t)).ln();
        assert!((r.values[10] - expect).abs() < 1e-8 * expect);
    }

    #[test]
    fn cap_sink_diverges_linearly() {
        let p = from_id("separable:cap").unwrap();
        let q = BoxDomain::cube(2, -0.5, 0.5);
        let r = probe_stable_point(&p, &[0.0, 0.0], &q, &StableProbeOptions::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Diverging);
        assert_eq!(r.fit.as_ref().unwrap().model, GrowthModel::Linear);
        for (t, v) in r.schedule.iter().zip(&r.values) {
            assert!((v - 2.0 * t).abs() < 1e-9 * (1.0 + v), "{t}: {v}");
        }
    }

    #[test]
    fn plane_is_not_stable() {
        let p = from_id("separable:linear-x").unwrap();
        let q = BoxDomain::cube(2, -0.5, 0.5);
        let r = probe_stable_point(&p, &[0.0, 0.0], &q, &StableProbeOptions::default());
        assert!(matches!(r, Err(Error::NotStable(_))));
    }

    #[test]
    fn cell_centres_cover_box() {
        let q = BoxDomain::new(vec![0.0, -1.0], vec![1.0, 0.0]).unwrap();
        let xs = cell_centres(&q, 5);
        assert_eq!(xs.len(), 25);
        assert_eq!(xs[0], [0.1, -0.9, 0.0]);
        assert!((xs[24][0] - 0.9).abs() < 1e-15 && (xs[24][1] + 0.1).abs() < 1e-15);
    }
}
