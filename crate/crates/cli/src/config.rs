//! Run configuration: JSON on disk, every field overridable by a flag.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use isoreal::conductivity::DecisionRule;
use isoreal::critical::CriticalOptions;
use isoreal::flow::FlowOptions;
use isoreal::BoxDomain;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Catalog id, `separable:<spec>` or `grid:<csv>`.
    pub potential: String,
    /// Analysis box; defaults to the potential's domain, or `[-1, 1]^d` when unbounded.
    pub domain: Option<BoxDomain>,
    /// Nodes per axis for grids and critical-point seeding.
    pub grid: usize,
    /// Level `c`; defaults to `u(x*)` at the analysed critical point, else 0.
    pub level: Option<f64>,
    pub out_dir: PathBuf,
    pub seed: u64,
    /// Worker threads; all available cores when absent.
    pub workers: Option<usize>,
    pub tolerances: Tolerances,
    pub schedules: Schedules,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            potential: "cos-saddle".into(),
            domain: None,
            grid: 64,
            level: None,
            out_dir: PathBuf::from("isoreal-out"),
            seed: 0,
            workers: None,
            tolerances: Tolerances::default(),
            schedules: Schedules::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub atol_w: f64,
    /// Hits satisfy `|u - c| <= level (1 + |c|)`.
    pub level: f64,
    pub grad_floor: f64,
    /// Newton residual for critical points.
    pub newton: f64,
    /// Relative Hessian eigenvalue size treated as zero.
    pub degeneracy: f64,
    /// Divergence threshold of the probe decision rule: growth factor over the first stage.
    pub divergence_factor: f64,
    pub divergence_min_increase: f64,
    pub min_r2: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let flow = FlowOptions::default();
        let crit = CriticalOptions::default();
        let rule = DecisionRule::default();
        Self {
            rtol: flow.rtol,
            atol: flow.atol,
            atol_w: flow.atol_w,
            level: flow.level_tol,
            grad_floor: flow.grad_floor,
            newton: crit.residual_tol,
            degeneracy: crit.degeneracy,
            divergence_factor: rule.factor,
            divergence_min_increase: rule.min_increase,
            min_r2: rule.min_r2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Schedules {
    /// Saddle probe distances `2^-k`, `k = 1..=saddle`.
    pub saddle: usize,
    /// Stable probe times `2^j`, `j < stable`.
    pub stable: usize,
    /// Torus probe times `2^j`, `j < torus`.
    pub torus: usize,
    /// Last `k` of the `x = 2^-k` schedule for the one-dimensional probe.
    pub bou_fg: u32,
}

impl Default for Schedules {
    fn default() -> Self {
        Self {
            saddle: 40,
            stable: 17,
            torus: 11,
            bou_fg: 40,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid < 8 {
            bail!("grid resolution must be at least 8 per axis (got {})", self.grid);
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("rtol", t.rtol),
            ("atol", t.atol),
            ("atol_w", t.atol_w),
            ("level", t.level),
            ("grad_floor", t.grad_floor),
            ("newton", t.newton),
            ("degeneracy", t.degeneracy),
            ("divergence_factor", t.divergence_factor),
            ("divergence_min_increase", t.divergence_min_increase),
            ("min_r2", t.min_r2),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                bail!("tolerance `{name}` must be positive and finite (got {v})");
            }
        }
        let s = &self.schedules;
        if s.saddle < 3 || s.stable < 3 || s.torus < 3 || s.bou_fg < 7 {
            bail!("probe schedules need at least 3 stages");
        }
        if let Some(d) = &self.domain {
            if d.lo.len() != d.hi.len() || d.lo.iter().chain(&d.hi).any(|v| !v.is_finite()) {
                bail!("domain box must be finite");
            }
            if d.lo.iter().zip(&d.hi).any(|(a, b)| a >= b) {
                bail!("domain box needs lo < hi on every axis");
            }
        }
        if self.workers == Some(0) {
            bail!("--workers must be at least 1");
        }
        Ok(())
    }

    pub fn flow(&self) -> FlowOptions {
        let t = &self.tolerances;
        FlowOptions {
            rtol: t.rtol,
            atol: t.atol,
            atol_w: t.atol_w,
            level_tol: t.level,
            grad_floor: t.grad_floor,
            ..FlowOptions::default()
        }
    }

    pub fn critical(&self) -> CriticalOptions {
        CriticalOptions {
            residual_tol: self.tolerances.newton,
            degeneracy: self.tolerances.degeneracy,
            ..CriticalOptions::default()
        }
    }

    pub fn rule(&self) -> DecisionRule {
        DecisionRule {
            factor: self.tolerances.divergence_factor,
            min_increase: self.tolerances.divergence_min_increase,
            min_r2: self.tolerances.min_r2,
            ..DecisionRule::default()
        }
    }
}

/// `x0,x1,y0,y1[,z0,z1]`.
pub fn parse_box(s: &str) -> Result<BoxDomain> {
    let v = parse_point(s)?;
    if v.len() % 2 != 0 || v.is_empty() || v.len() > 6 {
        bail!("box needs lo,hi pairs per axis (got `{s}`)");
    }
    let lo = v.iter().step_by(2).copied().collect();
    let hi = v.iter().skip(1).step_by(2).copied().collect();
    Ok(BoxDomain::new(lo, hi)?)
}

/// Comma-separated coordinates; `pi` suffixes are accepted.
pub fn parse_point(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            let (num, scale) = match t.strip_suffix("pi") {
                Some(rest) => (rest, std::f64::consts::PI),
                None => (t, 1.0),
            };
            let v = match num {
                "" | "+" => 1.0,
                "-" => -1.0,
                n => n.parse::<f64>().with_context(|| format!("bad number `{t}`"))?,
            };
            Ok(v * scale)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_lossless() {
        let mut c = RunConfig::default();
        c.domain = Some(BoxDomain::cube(2, -0.1, 1.0 / 3.0));
        c.level = Some(0.1 + 0.2);
        c.tolerances.rtol = 1e-11;
        let back: RunConfig = serde_json::from_str(&c.to_json()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn validation() {
        let mut c = RunConfig::default();
        c.grid = 7;
        assert!(c.validate().is_err());
        c.grid = 8;
        c.tolerances.atol = 0.0;
        assert!(c.validate().is_err());
        assert!(RunConfig::default().validate().is_ok());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"gird": 10}"#).is_err());
    }

    #[test]
    fn parses_boxes_and_points() {
        let b = parse_box("-pi,pi,0,1").unwrap();
        assert_eq!(b.lo, vec![-std::f64::consts::PI, 0.0]);
        assert_eq!(parse_point("0.5,-0.25").unwrap(), vec![0.5, -0.25]);
        assert!(parse_box("0,1,2").is_err());
    }
}
