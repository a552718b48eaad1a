//! Conductivity fields `σ = e^w` sampled on grids.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::critical::Manifolds;
use crate::error::Result;
use crate::flow::{fmt, hitting_time, FlowOptions, HitStatus};
use crate::geometry::{GridSpec, Vector};
use crate::potential::Potential;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeStatus {
    Ok,
    NoHit,
    NearManifold,
    Outside,
}

impl NodeStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeStatus::Ok => "ok",
            NodeStatus::NoHit => "no-hit",
            NodeStatus::NearManifold => "near-manifold",
            NodeStatus::Outside => "outside",
        }
    }
}

/// How the `w` values were obtained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    /// Hitting times onto `{u = level}`.
    Synthesized,
    /// A closed-form conductivity.
    ClosedForm { formula: String },
}

/// Per-node `τ`, `w` and `σ = e^w`. Values at nodes that are not `Ok` are NaN.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConductivityField {
    pub grid: GridSpec,
    pub level: f64,
    pub potential_id: String,
    pub provenance: Provenance,
    pub tau: Vec<f64>,
    pub w: Vec<f64>,
    pub sigma: Vec<f64>,
    pub status: Vec<NodeStatus>,
    /// Description of the excluded near-manifold band, if any.
    pub band: Option<String>,
}

impl ConductivityField {
    /// Field from a closed-form `w(x)`; `None` marks a node `outside`.
    pub fn from_fn<F>(potential_id: &str, grid: GridSpec, formula: &str, w: F) -> Self
    where
        F: Fn(&Vector) -> Option<f64> + Sync,
    {
        let vals: Vec<Option<f64>> = (0..grid.len()).into_par_iter().map(|i| w(&grid.node(i))).collect();
        let n = grid.len();
        let mut field = Self {
            grid,
            level: 0.0,
            potential_id: potential_id.to_string(),
            provenance: Provenance::ClosedForm { formula: formula.to_string() },
            tau: vec![f64::NAN; n],
            w: vec![f64::NAN; n],
            sigma: vec![f64::NAN; n],
            status: vec![NodeStatus::Outside; n],
            band: None,
        };
        for (i, v) in vals.into_iter().enumerate() {
            if let Some(v) = v.filter(|v| v.is_finite()) {
                field.w[i] = v;
                field.sigma[i] = v.exp();
                field.status[i] = NodeStatus::Ok;
            }
        }
        field
    }

    pub fn ok_count(&self) -> usize {
        self.status.iter().filter(|s| **s == NodeStatus::Ok).count()
    }

    pub fn is_ok(&self, i: usize) -> bool {
        self.status[i] == NodeStatus::Ok
    }

    /// CSV with header `x,y[,z],tau,w,sigma,status`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let d = self.grid.dim();
        let mut wtr = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = ["x", "y", "z"][..d].to_vec();
        header.extend(["tau", "w", "sigma", "status"]);
        wtr.write_record(&header)?;
        for i in 0..self.grid.len() {
            let x = self.grid.node(i);
            let mut row: Vec<String> = x[..d].iter().map(|&v| fmt(v)).collect();
            row.extend([fmt(self.tau[i]), fmt(self.w[i]), fmt(self.sigma[i])]);
            row.push(self.status[i].as_str().to_string());
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Nodes closer than `width` to traced manifolds are skipped and tagged.
#[derive(Clone, Debug)]
pub struct NearManifoldBand<'a> {
    pub manifolds: &'a Manifolds,
    /// Defaults to twice the largest grid spacing.
    pub width: Option<f64>,
}

#[derive(Clone, Debug, Default)]
pub struct SynthesisOptions<'a> {
    pub flow: FlowOptions,
    pub band: Option<NearManifoldBand<'a>>,
}

/// `w(x) = ∫₀^τ(x) Δu(X(s,x)) ds` and `σ = e^w` at every grid node, with
/// `τ` the hitting time of `{u = level}`.
pub fn synthesize(potential: &Potential, grid: &GridSpec, level: f64, opts: &SynthesisOptions) -> Result<ConductivityField> {
    let hmax = grid.h.iter().fold(0.0f64, |m, h| m.max(*h));
    let band = opts.band.as_ref().map(|b| (b.manifolds, b.width.unwrap_or(2.0 * hmax)));
    let flow = FlowOptions {
        record: false,
        ..opts.flow.clone()
    };
    let stop_box = flow.domain.clone().unwrap_or_else(|| potential.domain().clone());
    let results: Vec<Result<(NodeStatus, f64, f64)>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = grid.node(i);
            let d = potential.dim();
            if !potential.domain().contains(&x[..d]) || !stop_box.contains(&x[..d]) {
                return Ok((NodeStatus::Outside, f64::NAN, f64::NAN));
            }
            if let Some((m, width)) = band {
                if m.distance(&x) < width {
                    return Ok((NodeStatus::NearManifold, f64::NAN, f64::NAN));
                }
            }
            let r = hitting_time(potential, &x, level, &flow)?;
            Ok(if r.status == HitStatus::Hit {
                (NodeStatus::Ok, r.tau, r.w)
            } else {
                (NodeStatus::NoHit, f64::NAN, f64::NAN)
            })
        })
        .collect();
    let n = grid.len();
    let mut field = ConductivityField {
        grid: grid.clone(),
        level,
        potential_id: potential.id().to_string(),
        provenance: Provenance::Synthesized,
        tau: vec![f64::NAN; n],
        w: vec![f64::NAN; n],
        sigma: vec![f64::NAN; n],
        status: vec![NodeStatus::Outside; n],
        band: band.map(|(_, width)| format!("distance to traced manifolds < {width}")),
    };
    for (i, r) in results.into_iter().enumerate() {
        let (status, tau, w) = r?;
        field.status[i] = status;
        if status == NodeStatus::Ok {
            field.tau[i] = tau;
            field.w[i] = w;
            field.sigma[i] = w.exp();
        }
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::critical::{classify, trace_manifolds, ManifoldOptions};
    use crate::geometry::BoxDomain;
    use crate::potential::{catalog_cos_saddle, catalog_cubic};
    use std::f64::consts::PI;

    fn closed_w(x: f64, y: f64) -> f64 {
        let (a, b) = ((x / 2.0).tan(), (y / 2.0).tan());
        ((1.0 + a * a) * (1.0 + b * b) / (1.0 + a.abs() * b.abs()).powi(2)).ln()
    }

    #[test]
    fn cos_saddle_nodes() {
        let p = catalog_cos_saddle();
        let g = GridSpec {
            lo: vec![PI / 2.0, PI / 3.0],
            h: vec![0.1, PI / 6.0],
            n: vec![1, 2],
        };
        let f = synthesize(&p, &g, 0.0, &SynthesisOptions::default()).unwrap();
        // nodes (π/2, π/3) and (π/2, π/2)
        let expected = ((2.0 * 4.0 / 3.0) / (1.0 + 1.0 / 3f64.sqrt()).powi(2)).ln();
        assert!((expected - 0.069347).abs() < 1e-4);
        assert!((expected - closed_w(PI / 2.0, PI / 3.0)).abs() < 1e-15);
        assert!((f.w[0] - expected).abs() < 1e-9, "{}", f.w[0]);
        assert_eq!(f.sigma[0], f.w[0].exp());
        assert!(f.w[1].abs() < 1e-10, "{}", f.w[1]);
        assert!((f.sigma[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn cubic_diagonal_has_unit_sigma() {
        let p = catalog_cubic();
        let g = GridSpec { lo: vec![0.5, 0.5], h: vec![1.0, 1.0], n: vec![1, 1] };
        let f = synthesize(&p, &g, 0.0, &SynthesisOptions::default()).unwrap();
        assert_eq!(f.sigma[0], 1.0);
    }

    #[test]
    fn band_and_no_hit_tags() {
        let p = catalog_cos_saddle();
        let s = classify(&p, &[0.0, 0.0]).unwrap();
        let m = trace_manifolds(&p, &s, &ManifoldOptions::default()).unwrap();
        let grid = GridSpec::linspace(&BoxDomain::cube(2, -1.0, 1.0), &[5, 5]).unwrap();
        let opts = SynthesisOptions {
            band: Some(NearManifoldBand { manifolds: &m, width: Some(0.1) }),
            ..Default::default()
        };
        let f = synthesize(&p, &grid, 0.0, &opts).unwrap();
        // the axes through the origin are inside the band
        assert_eq!(f.status[grid.flat(&[2, 1])], NodeStatus::NearManifold);
        assert_eq!(f.status[grid.flat(&[1, 1])], NodeStatus::Ok);
        // without the band, axis nodes converge to the saddle
        let plain = synthesize(&p, &grid, 0.0, &SynthesisOptions::default()).unwrap();
        assert_eq!(plain.status[grid.flat(&[2, 1])], NodeStatus::NoHit);
        assert!(plain.sigma.iter().zip(&plain.status).all(|(s, st)| *st != NodeStatus::Ok || *s > 0.0));
    }

    #[test]
    fn csv_layout() {
        let grid = GridSpec::linspace(&BoxDomain::cube(2, 0.0, 1.0), &[2, 2]).unwrap();
        let f = ConductivityField::from_fn("plane", grid, "1", |_| Some(0.0));
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,y,tau,w,sigma,status\n0.0,0.0,NaN,0.0,1.0,ok\n"));
    }
}
