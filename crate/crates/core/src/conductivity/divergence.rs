//! Discrete `div(σ∇u)` in flux form and its convergence order.

use serde::{Deserialize, Serialize};

use super::field::ConductivityField;
use crate::error::{Error, Result};
use crate::geometry::GridSpec;
use crate::potential::Potential;

/// Reports with fewer evaluated nodes than this share of the interior are unusable.
pub const MIN_USABLE_FRACTION: f64 = 0.1;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub grid: GridSpec,
    /// Largest spacing.
    pub h: f64,
    /// Residual per node; NaN where the stencil is incomplete.
    #[serde(skip)]
    pub residual: Vec<f64>,
    pub max: f64,
    /// Discrete `L²`: `sqrt(Σ r² · ∏h)`.
    pub l2: f64,
    /// Root mean square over evaluated nodes.
    pub rms: f64,
    pub evaluated: usize,
    pub interior: usize,
    pub excluded_band: Option<String>,
    pub usable: bool,
}

/// `r = Σᵢ ([σ ∂ᵢu](x + hᵢ/2 eᵢ) − [σ ∂ᵢu](x − hᵢ/2 eᵢ)) / hᵢ` with face values
/// `½(σ_left + σ_right) · ∂ᵢu(face midpoint)`. Only nodes whose node and
/// `2d` neighbours are `ok` are evaluated.
pub fn divergence_residual(potential: &Potential, field: &ConductivityField) -> Result<DivergenceReport> {
    let grid = &field.grid;
    let d = grid.dim();
    if d != potential.dim() {
        return Err(Error::DimensionMismatch {
            expected: potential.dim(),
            found: d,
        });
    }
    let mut residual = vec![f64::NAN; grid.len()];
    let mut interior = 0;
    let mut evaluated = 0;
    let (mut max, mut sum2) = (0.0f64, 0.0);
    'nodes: for i in 0..grid.len() {
        if grid.is_boundary(i) {
            continue;
        }
        interior += 1;
        if !field.is_ok(i) {
            continue;
        }
        let x = grid.node(i);
        let mut r = 0.0;
        for axis in 0..d {
            let h = grid.h[axis];
            let mut flux = [0.0; 2];
            for (k, step) in [-1isize, 1].into_iter().enumerate() {
                let j = grid.neighbor(i, axis, step).expect("interior node");
                if !field.is_ok(j) {
                    continue 'nodes;
                }
                let mut mid = x;
                mid[axis] += 0.5 * h * step as f64;
                let g = match potential.gradient(&mid) {
                    Ok(g) => g,
                    Err(e) if e.is_out_of_domain() => continue 'nodes,
                    Err(e) => return Err(e),
                };
                flux[k] = 0.5 * (field.sigma[i] + field.sigma[j]) * g[axis];
            }
            r += (flux[1] - flux[0]) / h;
        }
        residual[i] = r;
        evaluated += 1;
        max = max.max(r.abs());
        sum2 += r * r;
    }
    let cell: f64 = grid.h.iter().product();
    let usable = interior > 0 && evaluated as f64 >= MIN_USABLE_FRACTION * interior as f64;
    Ok(DivergenceReport {
        grid: grid.clone(),
        h: grid.h.iter().fold(0.0, |m, h| f64::max(m, *h)),
        residual,
        max,
        l2: (sum2 * cell).sqrt(),
        rms: if evaluated > 0 { (sum2 / evaluated as f64).sqrt() } else { f64::NAN },
        evaluated,
        interior,
        excluded_band: field.band.clone(),
        usable,
    })
}

/// Residual pair on `h` and `h/2`. The order is measured on the coarse nodes
/// where both residuals exist, so both norms cover the same points.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrderEstimate {
    pub coarse: DivergenceReport,
    pub fine: DivergenceReport,
    pub common_nodes: usize,
    /// `log₂` of the RMS ratio over common nodes.
    pub order: f64,
    /// `log₂` of the max ratio over common nodes.
    pub order_max: f64,
    pub usable: bool,
}

pub fn divergence_order(potential: &Potential, coarse: &ConductivityField, fine: &ConductivityField) -> Result<OrderEstimate> {
    if fine.grid != coarse.grid.refined() {
        return Err(Error::InvalidInput("fine grid must be the refinement of the coarse grid".into()));
    }
    let rc = divergence_residual(potential, coarse)?;
    let rf = divergence_residual(potential, fine)?;
    let g = &coarse.grid;
    let (mut n, mut sc, mut sf, mut mc, mut mf) = (0usize, 0.0, 0.0, 0.0f64, 0.0f64);
    for i in 0..g.len() {
        let idx = g.multi(i);
        let fine_idx: Vec<usize> = (0..g.dim()).map(|a| 2 * idx[a]).collect();
        let j = fine.grid.flat(&fine_idx);
        let (a, b) = (rc.residual[i], rf.residual[j]);
        if a.is_nan() || b.is_nan() {
            continue;
        }
        n += 1;
        sc += a * a;
        sf += b * b;
        mc = mc.max(a.abs());
        mf = mf.max(b.abs());
    }
    let usable = rc.usable && rf.usable && n > 0;
    Ok(OrderEstimate {
        order: 0.5 * (sc / sf).log2(),
        order_max: (mc / mf).log2(),
        common_nodes: n,
        usable,
        coarse: rc,
        fine: rf,
    })
}
