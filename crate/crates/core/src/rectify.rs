//! Global rectification of planar gradient fields without critical points.
//!
//! With `τ` the hitting time of `{u = c}` and `v` a stream function of
//! `σ∇u` (`σ∇u = ∇⊥v`, `σ = e^w`), the map `Φ = (−τ, v)` satisfies
//! `∇Φ ∇u = e₁`. The paths below build both grids and measure how well the
//! identity holds after discretization.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::conductivity::{synthesize, ConductivityField, NodeStatus, SynthesisOptions};
use crate::error::{Error, Result};
use crate::flow::{flow_map, fmt, hitting_time, integrate, Direction, FlowOptions};
use crate::geometry::{norm, GridSpec, Vector};
use crate::potential::{GridInterpolant, InterpOrder, Potential};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RectifyOptions {
    pub level: f64,
    /// Smallest acceptable sampled `|∇u|`.
    pub floor: f64,
    /// The stop box for trajectories grows the grid box by this fraction per side.
    pub pad: f64,
    pub flow: FlowOptions,
    /// Random rectangles for the circulation check.
    pub loops: usize,
    /// Random `(t, x)` pairs for the cocycle check.
    pub cocycle_samples: usize,
    pub seed: u64,
}

impl Default for RectifyOptions {
    fn default() -> Self {
        Self {
            level: 0.0,
            floor: 1e-6,
            pad: 0.2,
            flow: FlowOptions::default(),
            loops: 20,
            cocycle_samples: 20,
            seed: 0,
        }
    }
}

fn require_planar(grid: &GridSpec) -> Result<()> {
    if grid.dim() != 2 {
        return Err(Error::InvalidInput(format!(
            "rectification is planar; got a {}-dimensional grid",
            grid.dim()
        )));
    }
    if grid.n.iter().any(|&n| n < 4) {
        return Err(Error::InvalidInput("rectification needs at least 4 nodes per axis".into()));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonvanishingCheck {
    pub min_grad: f64,
    pub at: Vec<f64>,
    pub floor: f64,
    pub pass: bool,
}

/// Smallest `|∇u|` over the grid nodes.
pub fn check_nonvanishing(potential: &Potential, grid: &GridSpec, floor: f64) -> Result<NonvanishingCheck> {
    require_planar(grid)?;
    let mut best = (f64::INFINITY, vec![]);
    for i in 0..grid.len() {
        let x = grid.node(i);
        let g = norm(&potential.gradient(&x)?[..2]);
        if g < best.0 {
            best = (g, x[..2].to_vec());
        }
    }
    Ok(NonvanishingCheck {
        min_grad: best.0,
        at: best.1,
        floor,
        pass: best.0 >= floor,
    })
}

/// Hitting times (with `w` and `σ`) on the grid, plus the largest cocycle
/// defect `|τ(X(t, x)) − (τ(x) − t)|` over random samples.
#[derive(Clone, Debug)]
pub struct TauField {
    pub field: ConductivityField,
    pub cocycle_max: f64,
    pub cocycle_checked: usize,
}

pub fn tau_field(potential: &Potential, grid: &GridSpec, opts: &RectifyOptions) -> Result<TauField> {
    require_planar(grid)?;
    let flow = FlowOptions {
        domain: Some(grid.bounds().padded(opts.pad)),
        ..opts.flow.clone()
    };
    let field = synthesize(
        potential,
        grid,
        opts.level,
        &SynthesisOptions {
            flow: flow.clone(),
            band: None,
        },
    )?;
    let bounds = grid.bounds();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (mut worst, mut checked) = (0.0f64, 0);
    for _ in 0..opts.cocycle_samples {
        let x: Vector = [
            rng.gen_range(bounds.lo[0]..bounds.hi[0]),
            rng.gen_range(bounds.lo[1]..bounds.hi[1]),
            0.0,
        ];
        let t = rng.gen_range(-0.5..0.5);
        let Ok((xt, _)) = flow_map(potential, &x, t, &flow) else { continue };
        let a = hitting_time(potential, &x, opts.level, &flow)?;
        let b = hitting_time(potential, &xt, opts.level, &flow)?;
        if a.is_hit() && b.is_hit() {
            worst = worst.max((b.tau - (a.tau - t)).abs());
            checked += 1;
        }
    }
    Ok(TauField {
        field,
        cocycle_max: worst,
        cocycle_checked: checked,
    })
}

/// `∫` of equally spaced samples from the first node to each node, with the
/// fourth-order rule `h/24 (−f₋₁ + 13f₀ + 13f₁ − f₂)` per interval and
/// one-sided variants at the ends. Needs at least 4 samples.
fn cumulative(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    for k in 0..n - 1 {
        let piece = if k == 0 {
            9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]
        } else if k == n - 2 {
            9.0 * f[n - 1] + 19.0 * f[n - 2] - 5.0 * f[n - 3] + f[n - 4]
        } else {
            -f[k - 1] + 13.0 * f[k] + 13.0 * f[k + 1] - f[k + 2]
        };
        out[k + 1] = out[k] + h / 24.0 * piece;
    }
    out
}

fn segment(f: &[f64], h: f64) -> f64 {
    *cumulative(f, h).last().unwrap_or(&0.0)
}

/// Stream function on the grid and the worst circulation over random loops.
#[derive(Clone, Debug)]
pub struct StreamFunction {
    pub v: Vec<f64>,
    pub circulation_max: f64,
}

/// `v` with `∂v/∂x = σ ∂u/∂y` and `∂v/∂y = −σ ∂u/∂x`, integrated along the
/// path lower-left corner → `(x, y₀)` → `(x, y)`; `v = 0` at the corner.
pub fn stream_v(potential: &Potential, field: &ConductivityField, opts: &RectifyOptions) -> Result<StreamFunction> {
    let grid = &field.grid;
    require_planar(grid)?;
    let missing = field.status.iter().filter(|s| **s != NodeStatus::Ok).count();
    if missing > 0 {
        return Err(Error::InvalidInput(format!(
            "stream function needs a hit at every node; {missing} nodes have none"
        )));
    }
    let (nx, ny) = (grid.n[0], grid.n[1]);
    let (hx, hy) = (grid.h[0], grid.h[1]);
    let mut p = vec![0.0; grid.len()];
    let mut q = vec![0.0; grid.len()];
    for i in 0..grid.len() {
        let g = potential.gradient(&grid.node(i))?;
        p[i] = field.sigma[i] * g[1];
        q[i] = -field.sigma[i] * g[0];
    }
    let row = |f: &[f64], j: usize, i0: usize, i1: usize| -> Vec<f64> { (i0..=i1).map(|i| f[i * ny + j]).collect() };
    let col = |f: &[f64], i: usize, j0: usize, j1: usize| -> Vec<f64> { f[i * ny + j0..=i * ny + j1].to_vec() };
    let bottom = cumulative(&row(&p, 0, 0, nx - 1), hx);
    let mut v = vec![0.0; grid.len()];
    for i in 0..nx {
        let up = cumulative(&col(&q, i, 0, ny - 1), hy);
        for j in 0..ny {
            v[i * ny + j] = bottom[i] + up[j];
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x9e37_79b9);
    let mut worst = 0.0f64;
    for _ in 0..opts.loops {
        let i0 = rng.gen_range(0..nx - 3);
        let i1 = rng.gen_range(i0 + 3..nx);
        let j0 = rng.gen_range(0..ny - 3);
        let j1 = rng.gen_range(j0 + 3..ny);
        let circ = segment(&row(&p, j0, i0, i1), hx) + segment(&col(&q, i1, j0, j1), hy)
            - segment(&row(&p, j1, i0, i1), hx)
            - segment(&col(&q, i0, j0, j1), hy);
        worst = worst.max(circ.abs());
    }
    Ok(StreamFunction {
        v,
        circulation_max: worst,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RectifyDiagnostics {
    pub h: f64,
    /// `max |∇Φ ∇u − e₁|` over interior nodes.
    pub max_dev_e1: f64,
    pub min_abs_det: f64,
    /// `max |∇τ·∇u + 1|`
    pub max_tau_defect: f64,
    /// `max |∇v·∇u|`
    pub max_v_defect: f64,
    pub min_grad_v: f64,
    pub circulation_max: Option<f64>,
    pub cocycle_max: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct RectificationMap {
    pub grid: GridSpec,
    pub tau: Vec<f64>,
    pub v: Vec<f64>,
    /// `∇Φ` by centred differences; NaN on the boundary.
    pub jacobian: Vec<[[f64; 2]; 2]>,
    pub diagnostics: RectifyDiagnostics,
}

/// Centred-difference `∇Φ` for `Φ = (−τ, v)` and the identity defects.
pub fn build_phi_and_verify(grid: &GridSpec, tau: &[f64], v: &[f64], potential: &Potential) -> Result<RectificationMap> {
    require_planar(grid)?;
    if tau.len() != grid.len() || v.len() != grid.len() {
        return Err(Error::InvalidInput(format!(
            "grid has {} nodes but τ has {} and v has {}",
            grid.len(),
            tau.len(),
            v.len()
        )));
    }
    let ny = grid.n[1];
    let (hx, hy) = (grid.h[0], grid.h[1]);
    let mut jacobian = vec![[[f64::NAN; 2]; 2]; grid.len()];
    let mut d = RectifyDiagnostics {
        h: hx.max(hy),
        max_dev_e1: 0.0,
        min_abs_det: f64::INFINITY,
        max_tau_defect: 0.0,
        max_v_defect: 0.0,
        min_grad_v: f64::INFINITY,
        circulation_max: None,
        cocycle_max: None,
    };
    for k in 0..grid.len() {
        if grid.is_boundary(k) {
            continue;
        }
        let dx = |f: &[f64]| (f[k + ny] - f[k - ny]) / (2.0 * hx);
        let dy = |f: &[f64]| (f[k + 1] - f[k - 1]) / (2.0 * hy);
        let j = [[-dx(tau), -dy(tau)], [dx(v), dy(v)]];
        let g = potential.gradient(&grid.node(k))?;
        let e = [j[0][0] * g[0] + j[0][1] * g[1], j[1][0] * g[0] + j[1][1] * g[1]];
        d.max_dev_e1 = d.max_dev_e1.max(((e[0] - 1.0).powi(2) + e[1] * e[1]).sqrt());
        d.max_tau_defect = d.max_tau_defect.max((e[0] - 1.0).abs());
        d.max_v_defect = d.max_v_defect.max(e[1].abs());
        d.min_abs_det = d.min_abs_det.min((j[0][0] * j[1][1] - j[0][1] * j[1][0]).abs());
        d.min_grad_v = d.min_grad_v.min(j[1][0].hypot(j[1][1]));
        jacobian[k] = j;
    }
    Ok(RectificationMap {
        grid: grid.clone(),
        tau: tau.to_vec(),
        v: v.to_vec(),
        jacobian,
        diagnostics: d,
    })
}

/// Full pipeline: nonvanishing check, `τ`/`σ`, `v`, `Φ` and diagnostics.
pub fn rectify(potential: &Potential, grid: &GridSpec, opts: &RectifyOptions) -> Result<RectificationMap> {
    let check = check_nonvanishing(potential, grid, opts.floor)?;
    if !check.pass {
        return Err(Error::InvalidInput(format!(
            "|∇u| = {:e} < {:e} at {:?}: the field has (near-)critical points",
            check.min_grad, check.floor, check.at
        )));
    }
    let tau = tau_field(potential, grid, opts)?;
    let stream = stream_v(potential, &tau.field, opts)?;
    let mut map = build_phi_and_verify(grid, &tau.field.tau, &stream.v, potential)?;
    map.diagnostics.circulation_max = Some(stream.circulation_max);
    map.diagnostics.cocycle_max = Some(tau.cocycle_max);
    Ok(map)
}

impl RectificationMap {
    /// CSV with header `x,y,tau,v`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y", "tau", "v"])?;
        for k in 0..self.grid.len() {
            let x = self.grid.node(k);
            w.write_record([fmt(x[0]), fmt(x[1]), fmt(self.tau[k]), fmt(self.v[k])])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Largest component error of `d/dt Φ(X(t, x)) − e₁` along `count`
    /// trajectories from random interior points, with `Φ` interpolated by
    /// cubic splines.
    pub fn flow_rectification_error(&self, potential: &Potential, count: usize, seed: u64) -> Result<f64> {
        let tau = GridInterpolant::new(self.grid.clone(), self.tau.clone(), InterpOrder::Cubic)?;
        let v = GridInterpolant::new(self.grid.clone(), self.v.clone(), InterpOrder::Cubic)?;
        let inner = self.grid.bounds().padded(-0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let opts = FlowOptions {
            domain: Some(inner.clone()),
            max_time: 1.0,
            ..FlowOptions::default()
        };
        let mut worst = 0.0f64;
        for _ in 0..count {
            let x = [
                rng.gen_range(inner.lo[0]..inner.hi[0]),
                rng.gen_range(inner.lo[1]..inner.hi[1]),
                0.0,
            ];
            let run = integrate(potential, &x, Direction::Forward, None, &opts)?;
            for s in &run.samples {
                if !inner.contains_interior(&s.x[..2], 0.0) {
                    continue;
                }
                let g = potential.gradient(&s.x)?;
                let (_, gt, _) = tau.eval(&s.x)?;
                let (_, gv, _) = v.eval(&s.x)?;
                let y1 = -(gt[0] * g[0] + gt[1] * g[1]);
                let y2 = gv[0] * g[0] + gv[1] * g[1];
                worst = worst.max((y1 - 1.0).abs()).max(y2.abs());
            }
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoxDomain;
    use crate::potential::{catalog_cos_saddle, from_id};

    fn grid(h: f64) -> GridSpec {
        GridSpec::with_spacing(&BoxDomain::cube(2, -2.0, 2.0), h).unwrap()
    }

    #[test]
    fn cumulative_rule_is_exact_for_cubics() {
        let h = 0.1;
        let f: Vec<f64> = (0..9).map(|k| (k as f64 * h).powi(3)).collect();
        let c = cumulative(&f, h);
        for (k, v) in c.iter().enumerate() {
            assert!((v - (k as f64 * h).powi(4) / 4.0).abs() < 1e-15);
        }
    }

    #[test]
    fn nonvanishing_examples() {
        let g = grid(0.1);
        let tilted = check_nonvanishing(&from_id("tilted-sine").unwrap(), &g, 1e-6).unwrap();
        assert!(tilted.pass && tilted.min_grad >= 0.7);
        let plane_x = check_nonvanishing(&from_id("separable:linear-x").unwrap(), &g, 1e-6).unwrap();
        assert_eq!(plane_x.min_grad, 1.0);
        let cos = GridSpec::linspace(&BoxDomain::cube(2, -1.0, 1.0), &[11, 11]).unwrap();
        assert!(!check_nonvanishing(&catalog_cos_saddle(), &cos, 1e-6).unwrap().pass);
    }

    #[test]
    fn linear_potential_maps_to_reflection() {
        let p = from_id("separable:linear-x").unwrap();
        let g = grid(0.25);
        let map = rectify(&p, &g, &RectifyOptions::default()).unwrap();
        for k in 0..g.len() {
            let x = g.node(k);
            assert!((map.tau[k] + x[0]).abs() < 1e-12);
            assert!((map.v[k] + (x[1] + 2.0)).abs() < 1e-12);
        }
        let d = &map.diagnostics;
        assert!(d.max_dev_e1 < 1e-10);
        assert!((d.min_abs_det - 1.0).abs() < 1e-10);
        assert!(d.cocycle_max.unwrap() < 1e-12);
        assert!(d.circulation_max.unwrap() < 1e-12);
    }

    #[test]
    fn tilted_sine_is_second_order() {
        let p = from_id("tilted-sine").unwrap();
        let coarse = rectify(&p, &grid(0.05), &RectifyOptions::default()).unwrap();
        let fine = rectify(&p, &grid(0.025), &RectifyOptions::default()).unwrap();
        let (a, b) = (coarse.diagnostics.max_dev_e1, fine.diagnostics.max_dev_e1);
        let order = (a / b).log2();
        assert!((order - 2.0).abs() < 0.3, "{a} {b}");
        assert!(fine.diagnostics.min_abs_det > 0.1);
        assert!(fine.diagnostics.circulation_max.unwrap() < 1e-6);
        // the origin is on {u = 0}
        let origin = fine.grid.flat(&[80, 80]);
        assert_eq!(fine.grid.node(origin), [0.0, 0.0, 0.0]);
        assert!(fine.tau[origin].abs() < 1e-12);
        assert!(fine.flow_rectification_error(&p, 10, 3).unwrap() < 1e-3);
    }

    #[test]
    fn rejects_critical_points_and_3d() {
        let cos = GridSpec::linspace(&BoxDomain::cube(2, -1.0, 1.0), &[11, 11]).unwrap();
        assert!(rectify(&catalog_cos_saddle(), &cos, &RectifyOptions::default()).is_err());
        let g3 = GridSpec::linspace(&BoxDomain::cube(3, -1.0, 1.0), &[5, 5, 5]).unwrap();
        assert!(matches!(
            check_nonvanishing(&from_id("plane").unwrap(), &g3, 1e-6),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn mismatched_grids_rejected() {
        let g = grid(0.5);
        let p = from_id("plane").unwrap();
        assert!(build_phi_and_verify(&g, &[0.0; 3], &[0.0; 3], &p).is_err());
    }
}
