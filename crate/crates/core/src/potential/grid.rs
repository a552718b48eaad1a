//! Tensor-product interpolation of sampled potentials.
//!
//! The cubic interpolant is the tensor product of not-a-knot splines, stored
//! cell-wise in Hermite form: for every node we keep the mixed derivatives
//! `∂^m u` with `m ∈ {0,1}^d`, obtained by applying the 1-D spline slope
//! operator along each differentiated axis in turn. The result is `C²` and
//! reproduces polynomials of degree <= 3 per axis exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{GridSpec, Matrix, Vector, MAX_DIM};
use crate::numeric::spline;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterpOrder {
    Linear,
    Cubic,
}

impl InterpOrder {
    pub fn from_degree(order: u32) -> Result<Self> {
        match order {
            1 => Ok(Self::Linear),
            3 => Ok(Self::Cubic),
            other => Err(Error::InvalidInput(format!(
                "interpolation order must be 1 or 3, got {other}"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GridInterpolant {
    grid: GridSpec,
    order: InterpOrder,
    // data[m]: samples of the mixed derivative selected by bit mask m
    data: Vec<Vec<f64>>,
}

impl GridInterpolant {
    pub fn new(grid: GridSpec, samples: Vec<f64>, order: InterpOrder) -> Result<Self> {
        let d = grid.dim();
        if !(2..=MAX_DIM).contains(&d) {
            return Err(Error::InvalidInput(format!("grid dimension {d} not in 2..=3")));
        }
        if samples.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "{} samples for a grid of {} nodes",
                samples.len(),
                grid.len()
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("grid sample {i} is {}", samples[i])));
        }
        if grid.n.iter().any(|&n| n < 2) || grid.h.iter().any(|&h| !(h > 0.0)) {
            return Err(Error::InvalidInput("grid needs >= 2 nodes and positive spacing".into()));
        }
        let data = match order {
            InterpOrder::Linear => vec![samples],
            InterpOrder::Cubic => {
                let mut data = vec![Vec::new(); 1 << d];
                data[0] = samples;
                for mask in 1..(1usize << d) {
                    // differentiate along the highest set axis of a lower mask
                    let axis = (0..d).rev().find(|a| mask & (1 << a) != 0).unwrap();
                    let base = &data[mask & !(1 << axis)];
                    data[mask] = slopes_along(&grid, base, axis)?;
                }
                data
            }
        };
        Ok(Self { grid, order, data })
    }

    /// Reads `x,y[,z],u` rows, sorted lexicographically (last axis fastest),
    /// on a uniform rectilinear grid.
    pub fn from_csv(path: &Path, order: InterpOrder) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
        let d = headers.len().saturating_sub(1);
        let expected: Vec<&str> = ["x", "y", "z"][..d.min(3)].iter().copied().chain(["u"]).collect();
        if !(2..=3).contains(&d) || headers != expected {
            return Err(Error::InvalidInput(format!(
                "grid CSV header must be `x,y,u` or `x,y,z,u`, got `{}`",
                headers.join(",")
            )));
        }
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record?;
            let row = record
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::InvalidInput(format!("row {}: {e}", line + 2)))?;
            if row.len() != d + 1 {
                return Err(Error::InvalidInput(format!("row {}: expected {} fields", line + 2, d + 1)));
            }
            rows.push(row);
        }
        let mut axes: Vec<Vec<f64>> = Vec::with_capacity(d);
        for a in 0..d {
            let mut c: Vec<f64> = rows.iter().map(|r| r[a]).collect();
            c.sort_by(f64::total_cmp);
            c.dedup();
            axes.push(c);
        }
        let n: Vec<usize> = axes.iter().map(Vec::len).collect();
        if n.iter().product::<usize>() != rows.len() {
            return Err(Error::InvalidInput("grid CSV is not a full rectilinear grid".into()));
        }
        let mut h = Vec::with_capacity(d);
        for (a, c) in axes.iter().enumerate() {
            if c.len() < 2 {
                return Err(Error::InvalidInput(format!("axis {a} has a single coordinate")));
            }
            let step = (c[c.len() - 1] - c[0]) / (c.len() - 1) as f64;
            let uniform = c
                .iter()
                .enumerate()
                .all(|(k, &v)| (v - (c[0] + step * k as f64)).abs() <= 1e-9 * step);
            if !uniform {
                return Err(Error::InvalidInput(format!("axis {a} is not uniformly spaced")));
            }
            h.push(step);
        }
        let grid = GridSpec {
            lo: axes.iter().map(|c| c[0]).collect(),
            h,
            n,
        };
        for (flat, row) in rows.iter().enumerate() {
            let idx = grid.multi(flat);
            if (0..d).any(|a| row[a] != axes[a][idx[a]]) {
                return Err(Error::InvalidInput(format!(
                    "grid CSV rows are not sorted (row {})",
                    flat + 2
                )));
            }
        }
        let samples = rows.iter().map(|r| r[d]).collect();
        Self::new(grid, samples, order)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn order(&self) -> InterpOrder {
        self.order
    }

    pub fn samples(&self) -> &[f64] {
        &self.data[0]
    }

    /// Value, gradient and Hessian of the interpolant at a point strictly
    /// inside the grid.
    pub fn eval(&self, x: &[f64]) -> Result<(f64, Vector, Matrix)> {
        let d = self.grid.dim();
        let mut cell = [0usize; MAX_DIM];
        // basis[a][corner][mask bit][derivative order]
        let mut basis = [[[[0.0; 3]; 2]; 2]; MAX_DIM];
        for a in 0..d {
            let (lo, h, n) = (self.grid.lo[a], self.grid.h[a], self.grid.n[a]);
            let hi = lo + h * (n - 1) as f64;
            if !(x[a] > lo && x[a] < hi) {
                return Err(Error::OutOfDomain {
                    potential: "grid interpolant (interior only)".into(),
                    point: x[..d].to_vec(),
                });
            }
            let k = (((x[a] - lo) / h).floor() as usize).min(n - 2);
            let s = (x[a] - lo) / h - k as f64;
            cell[a] = k;
            let scale = [1.0, 1.0 / h, 1.0 / (h * h)];
            match self.order {
                InterpOrder::Linear => {
                    basis[a][0][0] = [1.0 - s, -1.0, 0.0];
                    basis[a][1][0] = [s, 1.0, 0.0];
                }
                InterpOrder::Cubic => {
                    let b = spline::hermite_basis(s);
                    for k in 0..3 {
                        basis[a][0][0][k] = b[0][k];
                        basis[a][1][0][k] = b[1][k];
                        basis[a][0][1][k] = h * b[2][k];
                        basis[a][1][1][k] = h * b[3][k];
                    }
                }
            }
            for c in 0..2 {
                for m in 0..2 {
                    for k in 0..3 {
                        basis[a][c][m][k] *= scale[k];
                    }
                }
            }
        }

        let masks = self.data.len();
        let mut value = 0.0;
        let mut grad = [0.0; MAX_DIM];
        let mut hess = [[0.0; MAX_DIM]; MAX_DIM];
        let mut idx = [0usize; MAX_DIM];
        for corner in 0..(1usize << d) {
            for a in 0..d {
                idx[a] = cell[a] + ((corner >> a) & 1);
            }
            let node = self.grid.flat(&idx[..d]);
            for mask in 0..masks {
                let coef = self.data[mask][node];
                let b = |a: usize, k: usize| basis[a][(corner >> a) & 1][(mask >> a) & 1][k];
                // product of basis factors with derivative orders `ks`
                let term = |ks: [usize; MAX_DIM]| (0..d).map(|a| b(a, ks[a])).product::<f64>();
                value += coef * term([0; MAX_DIM]);
                for i in 0..d {
                    let mut ks = [0; MAX_DIM];
                    ks[i] = 1;
                    grad[i] += coef * term(ks);
                    for j in i..d {
                        let mut ks = [0; MAX_DIM];
                        ks[i] += 1;
                        ks[j] += 1;
                        hess[i][j] += coef * term(ks);
                    }
                }
            }
        }
        for i in 0..d {
            for j in 0..i {
                hess[i][j] = hess[j][i];
            }
        }
        Ok((value, grad, hess))
    }
}

/// Applies the spline slope operator to every grid line along `axis`.
fn slopes_along(grid: &GridSpec, values: &[f64], axis: usize) -> Result<Vec<f64>> {
    let n = grid.n[axis];
    let knots: Vec<f64> = (0..n).map(|k| grid.coord(axis, k)).collect();
    let stride: usize = grid.n[axis + 1..].iter().product();
    let mut out = vec![0.0; values.len()];
    let mut line = vec![0.0; n];
    for start in 0..values.len() {
        if grid.multi(start)[axis] != 0 {
            continue;
        }
        for k in 0..n {
            line[k] = values[start + k * stride];
        }
        let s = spline::not_a_knot_slopes(&knots, &line)?;
        for k in 0..n {
            out[start + k * stride] = s[k];
        }
    }
    Ok(out)
}
