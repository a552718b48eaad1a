//! Stable and unstable manifolds of saddles, traced as flow polylines.

use serde::{Deserialize, Serialize};

use super::{Classification, CriticalPoint};
use crate::error::{Error, Result};
use crate::flow::{integrate, Direction, FlowOptions};
use crate::geometry::{segment_distance, BoxDomain, Vector, MAX_DIM};
use crate::potential::Potential;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ManifoldKind {
    Stable,
    Unstable,
}

/// Branch polylines starting at the saddle.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifold {
    pub kind: ManifoldKind,
    pub saddle: Vec<f64>,
    pub branches: Vec<Vec<Vector>>,
}

impl Manifold {
    /// Euclidean distance from `p` to the nearest branch segment.
    pub fn distance(&self, p: &[f64]) -> f64 {
        let d = self.saddle.len();
        let mut best = f64::INFINITY;
        for b in &self.branches {
            for w in b.windows(2) {
                best = best.min(segment_distance(&p[..d], &w[0][..d], &w[1][..d]));
            }
            if b.len() == 1 {
                best = best.min(crate::geometry::distance(&p[..d], &b[0][..d]));
            }
        }
        best
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifolds {
    pub stable: Manifold,
    pub unstable: Manifold,
}

impl Manifolds {
    pub fn distance(&self, p: &[f64]) -> f64 {
        self.stable.distance(p).min(self.unstable.distance(p))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ManifoldOptions {
    /// Offset from the saddle; defaults to `1e-6 ·` the box diameter.
    pub delta: Option<f64>,
    /// Trajectories per two-dimensional manifold (3-D saddles).
    pub fan: usize,
    /// Box the branches are truncated at.
    pub domain: Option<BoxDomain>,
    pub flow: FlowOptions,
}

impl Default for ManifoldOptions {
    fn default() -> Self {
        Self {
            delta: None,
            fan: 24,
            domain: None,
            flow: FlowOptions {
                rtol: 1e-11,
                atol: 1e-13,
                max_time: 100.0,
                ..FlowOptions::default()
            },
        }
    }
}

/// Traces `Γˢ` (backward from `x* ± δv`, `λ < 0`) and `Γᵘ` (forward,
/// `λ > 0`). Steps are capped at `10⁻³ ·` the box diameter so the stored
/// polylines follow the curve closely.
pub fn trace_manifolds(potential: &Potential, saddle: &CriticalPoint, opts: &ManifoldOptions) -> Result<Manifolds> {
    if saddle.classification != Classification::Saddle {
        return Err(Error::NotSaddle(format!("{:?}", saddle.classification)));
    }
    let d = potential.dim();
    let domain = opts.domain.clone().unwrap_or_else(|| potential.domain().clone());
    let diam = if domain.is_bounded() { domain.diameter() } else { 1.0 };
    let delta = opts.delta.unwrap_or(1e-6 * diam);
    let flow = FlowOptions {
        domain: Some(domain),
        record: true,
        max_step: Some(opts.flow.max_step.unwrap_or(1e-3 * diam)),
        ..opts.flow.clone()
    };
    let x0 = saddle.point();
    let trace = |dirs: Vec<Vec<f64>>, kind: ManifoldKind| -> Result<Manifold> {
        let direction = match kind {
            ManifoldKind::Stable => Direction::Backward,
            ManifoldKind::Unstable => Direction::Forward,
        };
        let starts: Vec<Vector> = match dirs.len() {
            1 => [1.0, -1.0]
                .iter()
                .map(|s| offset(&x0, &[(s * delta, &dirs[0])], d))
                .collect(),
            2 => (0..opts.fan.max(3))
                .map(|k| {
                    let a = 2.0 * std::f64::consts::PI * k as f64 / opts.fan.max(3) as f64;
                    offset(&x0, &[(delta * a.cos(), &dirs[0]), (delta * a.sin(), &dirs[1])], d)
                })
                .collect(),
            n => return Err(Error::InvalidInput(format!("{n}-dimensional manifold"))),
        };
        let mut branches = Vec::with_capacity(starts.len());
        for s in starts {
            let run = integrate(potential, &s, direction, None, &flow)?;
            let mut b = vec![x0];
            b.extend(run.samples.iter().map(|p| p.x));
            branches.push(b);
        }
        Ok(Manifold {
            kind,
            saddle: saddle.location.clone(),
            branches,
        })
    };
    Ok(Manifolds {
        stable: trace(saddle.directions(false), ManifoldKind::Stable)?,
        unstable: trace(saddle.directions(true), ManifoldKind::Unstable)?,
    })
}

fn offset(x: &Vector, terms: &[(f64, &Vec<f64>)], d: usize) -> Vector {
    let mut p = *x;
    for (c, v) in terms {
        for i in 0..d.min(MAX_DIM) {
            p[i] += c * v[i];
        }
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::critical::classify;
    use crate::flow::integrate;
    use crate::potential::{catalog_cos_saddle, catalog_cubic, from_id};

    #[test]
    fn cos_saddle_manifolds_are_the_axes() {
        let p = catalog_cos_saddle();
        let s = classify(&p, &[0.0, 0.0]).unwrap();
        let m = trace_manifolds(&p, &s, &ManifoldOptions::default()).unwrap();
        assert_eq!(m.stable.branches.len(), 2);
        for b in &m.stable.branches {
            assert!(b.iter().all(|x| x[0].abs() < 1e-6));
            // reaches towards y = ±π
            assert!(b.last().unwrap()[1].abs() > 3.0);
            // u < u(x*) = 0 off the saddle
            assert!(b[1..].iter().all(|x| p.value(x).unwrap() < 0.0));
        }
        for b in &m.unstable.branches {
            assert!(b.iter().all(|x| x[1].abs() < 1e-6));
            assert!(b[1..].iter().all(|x| p.value(x).unwrap() > 0.0));
        }
        assert!(m.distance(&[0.5, 0.0]) < 1e-6);
        assert!((m.distance(&[0.5, 0.4]) - 0.4).abs() < 1e-6);
    }

    #[test]
    fn quadratic_saddle_axes() {
        let p = from_id("separable:quad-saddle").unwrap();
        let s = classify(&p, &[0.0, 0.0]).unwrap();
        let opts = ManifoldOptions {
            domain: Some(BoxDomain::cube(2, -1.0, 1.0)),
            ..ManifoldOptions::default()
        };
        let m = trace_manifolds(&p, &s, &opts).unwrap();
        assert!(m.stable.branches.iter().flatten().all(|x| x[0].abs() < 1e-9));
        assert!(m.unstable.branches.iter().flatten().all(|x| x[1].abs() < 1e-9));
    }

    #[test]
    fn branch_is_a_trajectory() {
        let p = from_id("separable:quartic-saddle").unwrap();
        let s = classify(&p, &[0.0, 0.0]).unwrap();
        let opts = ManifoldOptions {
            domain: Some(BoxDomain::cube(2, -1.0, 1.0)),
            ..ManifoldOptions::default()
        };
        let m = trace_manifolds(&p, &s, &opts).unwrap();
        let b = &m.unstable.branches[0];
        let mid = b[b.len() / 2];
        let run = integrate(&p, &mid, Direction::Forward, None, &FlowOptions::default().with_domain(BoxDomain::cube(2, -1.0, 1.0)))
            .unwrap();
        let single = Manifold { kind: ManifoldKind::Unstable, saddle: vec![0.0, 0.0], branches: vec![b.clone()] };
        for x in &run.samples {
            assert!(single.distance(&x.x) < 1e-5);
        }
    }

    #[test]
    fn three_dimensional_fan() {
        let p = crate::potential::make_separable(vec![
            crate::Component1D::poly(&[0.0, 0.0, 0.5]),
            crate::Component1D::poly(&[0.0, 0.0, 0.5]),
            crate::Component1D::poly(&[0.0, 0.0, -1.0]),
        ])
        .unwrap();
        let s = classify(&p, &[0.0, 0.0, 0.0]).unwrap();
        let opts = ManifoldOptions {
            domain: Some(BoxDomain::cube(3, -1.0, 1.0)),
            fan: 8,
            ..ManifoldOptions::default()
        };
        let m = trace_manifolds(&p, &s, &opts).unwrap();
        assert_eq!(m.stable.branches.len(), 2);
        assert_eq!(m.unstable.branches.len(), 8);
        assert!(m.unstable.branches.iter().flatten().all(|x| x[2].abs() < 1e-9));
    }

    #[test]
    fn non_saddle_rejected() {
        let p = catalog_cubic();
        let c = classify(&p, &[0.0, 0.0]).unwrap();
        assert!(matches!(trace_manifolds(&p, &c, &ManifoldOptions::default()), Err(Error::NotSaddle(_))));
    }
}
