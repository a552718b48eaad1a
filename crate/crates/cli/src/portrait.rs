//! SVG phase portraits: seed-ring trajectories, saddle manifolds, the dashed
//! equipotential `{u = c}` and behaviour labels around degenerate points.

use std::fmt::Write as _;

use anyhow::{bail, Result};

use isoreal::critical::{trace_manifolds, Classification, CriticalPoint, ManifoldOptions};
use isoreal::flow::{integrate, Direction, FlowOptions};
use isoreal::{BoxDomain, Potential, Vector};

const SIZE: f64 = 640.0;
const MARGIN: f64 = 24.0;

#[derive(Clone, Debug)]
pub struct PortraitOptions {
    pub ring_count: usize,
    /// Defaults to a quarter of the box's smallest width.
    pub ring_radius: Option<f64>,
    pub max_time: f64,
    /// Nodes per axis for the equipotential contour.
    pub contour_grid: usize,
}

#[derive(Debug)]
pub struct Portrait {
    pub svg: String,
    pub trajectories: usize,
    pub manifolds: usize,
    pub annotations: Vec<String>,
}

struct Frame {
    lo: [f64; 2],
    scale: f64,
    height: f64,
}

impl Frame {
    fn new(b: &BoxDomain) -> Self {
        let (w, h) = (b.hi[0] - b.lo[0], b.hi[1] - b.lo[1]);
        let scale = (SIZE - 2.0 * MARGIN) / w.max(h);
        Self {
            lo: [b.lo[0], b.lo[1]],
            scale,
            height: h * scale + 2.0 * MARGIN,
        }
    }

    fn width(&self, b: &BoxDomain) -> f64 {
        (b.hi[0] - b.lo[0]) * self.scale + 2.0 * MARGIN
    }

    fn px(&self, x: &[f64]) -> (f64, f64) {
        (
            MARGIN + (x[0] - self.lo[0]) * self.scale,
            self.height - MARGIN - (x[1] - self.lo[1]) * self.scale,
        )
    }

    fn points(&self, pts: &[Vector]) -> String {
        pts.iter()
            .map(|p| {
                let (a, b) = self.px(p);
                format!("{a:.2},{b:.2}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn trajectory(p: &Potential, x: &Vector, dir: Direction, flow: &FlowOptions) -> Result<Vec<Vector>> {
    let run = integrate(p, &x[..2], dir, None, flow)?;
    Ok(run.samples.iter().map(|s| s.x).collect())
}

/// Line segments of `{u = c}` by marching squares.
fn contour(p: &Potential, b: &BoxDomain, level: f64, n: usize) -> Vec<[[f64; 2]; 2]> {
    let n = n.max(2);
    let at = |i: usize, j: usize| {
        let x = b.lo[0] + (b.hi[0] - b.lo[0]) * i as f64 / (n - 1) as f64;
        let y = b.lo[1] + (b.hi[1] - b.lo[1]) * j as f64 / (n - 1) as f64;
        [x, y]
    };
    let u: Vec<f64> = (0..n * n)
        .map(|k| {
            let x = at(k / n, k % n);
            p.value(&x).map(|v| v - level).unwrap_or(f64::NAN)
        })
        .collect();
    let mut segs = Vec::new();
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let vals: Vec<f64> = corners.iter().map(|&(a, c)| u[a * n + c]).collect();
            if vals.iter().any(|v| v.is_nan()) {
                continue;
            }
            let mut cross = Vec::new();
            for e in 0..4 {
                let (a, c) = (e, (e + 1) % 4);
                if (vals[a] >= 0.0) != (vals[c] >= 0.0) {
                    let s = vals[a] / (vals[a] - vals[c]);
                    let (pa, pc) = (at(corners[a].0, corners[a].1), at(corners[c].0, corners[c].1));
                    cross.push([pa[0] + s * (pc[0] - pa[0]), pa[1] + s * (pc[1] - pa[1])]);
                }
            }
            for pair in cross.chunks_exact(2) {
                segs.push([pair[0], pair[1]]);
            }
        }
    }
    segs
}

/// Forward convergence to `x*` reads as sink behaviour, backward as source.
fn quadrant_behaviour(p: &Potential, cp: &CriticalPoint, r: f64, b: &BoxDomain, flow: &FlowOptions) -> Vec<(Vector, String)> {
    let c = cp.point();
    let flow = FlowOptions {
        max_time: 1e4,
        record: false,
        ..flow.clone()
    }
    .with_domain(b.clone());
    let mut out = Vec::new();
    for (sx, sy, name) in [(1.0, 1.0, "x>0,y>0"), (-1.0, 1.0, "x<0,y>0"), (-1.0, -1.0, "x<0,y<0"), (1.0, -1.0, "x>0,y<0")] {
        let d = 0.5 * r / std::f64::consts::SQRT_2;
        let seed = [c[0] + sx * d, c[1] + sy * d, 0.0];
        let start = (seed[0] - c[0]).hypot(seed[1] - c[1]);
        let converges = |dir| {
            integrate(p, &seed[..2], dir, None, &flow)
                .map(|run| {
                    let e = run.last().x;
                    (e[0] - c[0]).hypot(e[1] - c[1]) < 0.1 * start
                })
                .unwrap_or(false)
        };
        let label = match (converges(Direction::Forward), converges(Direction::Backward)) {
            (true, _) => "sink behavior",
            (false, true) => "source behavior",
            _ => "saddle behavior",
        };
        out.push((seed, format!("{label} in {{{name}}}")));
    }
    out
}

pub fn render(
    p: &Potential,
    b: &BoxDomain,
    level: f64,
    critical: &[CriticalPoint],
    opts: &PortraitOptions,
    flow: &FlowOptions,
) -> Result<Portrait> {
    if p.dim() != 2 || b.dim() != 2 {
        bail!("phase portraits are planar; `{}` is {}-dimensional", p.id(), p.dim());
    }
    let r = opts.ring_radius.unwrap_or(0.25 * b.min_width());
    if opts.ring_count == 0 || !(r > 0.0) {
        bail!("the seed ring is empty (count {}, radius {r})", opts.ring_count);
    }
    let centre = b.center();
    let ring_centre = critical
        .iter()
        .map(|c| c.point())
        .min_by(|a, c| {
            let da = (a[0] - centre[0]).hypot(a[1] - centre[1]);
            let dc = (c[0] - centre[0]).hypot(c[1] - centre[1]);
            da.total_cmp(&dc)
        })
        .unwrap_or([centre[0], centre[1], 0.0]);

    let frame = Frame::new(b);
    let flow = FlowOptions {
        max_time: opts.max_time,
        ..flow.clone()
    }
    .with_domain(b.clone());
    let mut svg = String::new();
    let (w, h) = (frame.width(b), frame.height);
    writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.2} {h:.2}">"#)?;
    writeln!(svg, r#"<title>{} phase portrait</title>"#, p.id())?;
    let (x0, y1) = frame.px(&b.lo);
    let (x1, y0) = frame.px(&b.hi);
    writeln!(
        svg,
        r##"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#888"/>"##,
        x1 - x0,
        y1 - y0
    )?;

    let mut d = String::new();
    for s in contour(p, b, level, opts.contour_grid) {
        let (a, c) = (frame.px(&s[0]), frame.px(&s[1]));
        write!(d, "M{:.2} {:.2}L{:.2} {:.2}", a.0, a.1, c.0, c.1)?;
    }
    writeln!(
        svg,
        r##"<path class="equipotential" data-level="{level:?}" d="{d}" fill="none" stroke="#333" stroke-width="1.2" stroke-dasharray="6 4"/>"##
    )?;

    let mut trajectories = 0;
    for k in 0..opts.ring_count {
        let a = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / opts.ring_count as f64;
        let seed = [ring_centre[0] + r * a.cos(), ring_centre[1] + r * a.sin(), 0.0];
        if !b.contains(&seed[..2]) {
            continue;
        }
        let mut pts = trajectory(p, &seed, Direction::Backward, &flow)?;
        pts.reverse();
        pts.extend(trajectory(p, &seed, Direction::Forward, &flow)?.into_iter().skip(1));
        writeln!(
            svg,
            r##"<polyline class="trajectory" points="{}" fill="none" stroke="#4a7ab5" stroke-width="0.8"/>"##,
            frame.points(&pts)
        )?;
        trajectories += 1;
    }

    let mut manifolds = 0;
    let mut annotations = Vec::new();
    for cp in critical {
        match cp.classification {
            Classification::Saddle => {
                let mopts = ManifoldOptions {
                    domain: Some(b.clone()),
                    ..ManifoldOptions::default()
                };
                let m = trace_manifolds(p, cp, &mopts)?;
                for (man, colour) in [(&m.stable, "#c0392b"), (&m.unstable, "#27ae60")] {
                    let mut pts: Vec<Vector> = Vec::new();
                    if let Some((first, rest)) = man.branches.split_first() {
                        pts.extend(first.iter().rev());
                        for br in rest {
                            pts.extend(br.iter().skip(1));
                        }
                    }
                    let kind = serde_json::to_value(man.kind)?;
                    writeln!(
                        svg,
                        r#"<polyline class="manifold {}" points="{}" fill="none" stroke="{colour}" stroke-width="2.5"/>"#,
                        kind.as_str().unwrap_or_default(),
                        frame.points(&pts)
                    )?;
                    manifolds += 1;
                }
            }
            Classification::Degenerate => {
                for (at, label) in quadrant_behaviour(p, cp, r, b, &flow) {
                    let (a, c) = frame.px(&at);
                    writeln!(
                        svg,
                        r#"<text class="annotation" x="{a:.2}" y="{c:.2}" font-size="12" text-anchor="middle">{}</text>"#,
                        label.replace('<', "&lt;").replace('>', "&gt;")
                    )?;
                    annotations.push(label);
                }
            }
            _ => {}
        }
        let (a, c) = frame.px(&cp.location);
        let kind = serde_json::to_value(cp.classification)?;
        writeln!(
            svg,
            r#"<circle class="critical {}" cx="{a:.2}" cy="{c:.2}" r="4" fill="black"/>"#,
            kind.as_str().unwrap_or_default()
        )?;
    }
    svg.push_str("</svg>\n");
    Ok(Portrait {
        svg,
        trajectories,
        manifolds,
        annotations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use isoreal::critical::{find_critical_points, CriticalOptions};
    use isoreal::potential::{catalog_cos_saddle, catalog_cubic};

    fn opts() -> PortraitOptions {
        PortraitOptions {
            ring_count: 16,
            ring_radius: None,
            max_time: 20.0,
            contour_grid: 64,
        }
    }

    #[test]
    fn cos_saddle_portrait() {
        let p = catalog_cos_saddle();
        let b = p.domain().clone();
        let cps = find_critical_points(&p, &b, 8, &CriticalOptions::default()).unwrap();
        let out = render(&p, &b, 0.0, &cps, &opts(), &FlowOptions::default()).unwrap();
        assert_eq!(out.manifolds, 2);
        assert_eq!(out.svg.matches("class=\"manifold ").count(), 2);
        assert!(out.svg.matches("class=\"trajectory\"").count() >= 16);
        assert!(out.svg.contains("stroke-dasharray"));
    }

    #[test]
    fn cubic_quadrants_are_annotated() {
        let p = catalog_cubic();
        let b = p.domain().clone();
        let cps = find_critical_points(&p, &b, 8, &CriticalOptions::default()).unwrap();
        let out = render(&p, &b, 0.0, &cps, &opts(), &FlowOptions::default()).unwrap();
        assert!(out.annotations.contains(&"sink behavior in {x>0,y<0}".to_string()), "{:?}", out.annotations);
        assert!(out.annotations.contains(&"source behavior in {x<0,y>0}".to_string()));
    }

    #[test]
    fn refuses_empty_ring() {
        let p = catalog_cos_saddle();
        let o = PortraitOptions { ring_count: 0, ..opts() };
        assert!(render(&p, p.domain(), 0.0, &[], &o, &FlowOptions::default()).is_err());
    }
}
