//! Points, axis-aligned boxes and uniform grids.
//!
//! Points are stored in fixed `[f64; 3]` arrays; the owning potential's
//! dimension says how many leading components are meaningful. Unused
//! components are kept at zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 3;

pub type Vector = [f64; MAX_DIM];
pub type Matrix = [[f64; MAX_DIM]; MAX_DIM];

/// Copies a slice of length `d <= 3` into a zero-padded [`Vector`].
pub fn to_vector(x: &[f64]) -> Result<Vector> {
    if x.is_empty() || x.len() > MAX_DIM {
        return Err(Error::InvalidInput(format!(
            "point must have 1..={MAX_DIM} coordinates, got {}",
            x.len()
        )));
    }
    let mut v = [0.0; MAX_DIM];
    v[..x.len()].copy_from_slice(x);
    Ok(v)
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

/// Distance from `p` to the segment `[a, b]`.
pub fn segment_distance(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let mut ab2 = 0.0;
    let mut ap_ab = 0.0;
    for i in 0..p.len() {
        let ab = b[i] - a[i];
        ab2 += ab * ab;
        ap_ab += (p[i] - a[i]) * ab;
    }
    let s = if ab2 > 0.0 { (ap_ab / ab2).clamp(0.0, 1.0) } else { 0.0 };
    let mut d2 = 0.0;
    for i in 0..p.len() {
        let q = a[i] + s * (b[i] - a[i]);
        d2 += (p[i] - q) * (p[i] - q);
    }
    d2.sqrt()
}

/// Closed axis-aligned box. Infinite bounds are allowed (unbounded axes).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// A face of a [`BoxDomain`]: `axis` and whether it is the upper face.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Face {
    pub axis: usize,
    pub upper: bool,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                found: hi.len(),
            });
        }
        if lo.is_empty() || lo.len() > MAX_DIM {
            return Err(Error::InvalidInput(format!(
                "box dimension must be 1..={MAX_DIM}"
            )));
        }
        for (a, b) in lo.iter().zip(&hi) {
            if a.is_nan() || b.is_nan() || a >= b {
                return Err(Error::InvalidInput(format!("degenerate box axis [{a}, {b}]")));
            }
        }
        Ok(Self { lo, hi })
    }

    /// `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        Self {
            lo: vec![lo; dim],
            hi: vec![hi; dim],
        }
    }

    pub fn unbounded(dim: usize) -> Self {
        Self::cube(dim, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        (0..self.dim()).all(|i| x[i] >= self.lo[i] && x[i] <= self.hi[i])
    }

    /// Strict containment with a margin on every face.
    pub fn contains_interior(&self, x: &[f64], margin: f64) -> bool {
        (0..self.dim()).all(|i| x[i] > self.lo[i] + margin && x[i] < self.hi[i] - margin)
    }

    /// First face (lowest axis) that `x` violates, if any.
    pub fn violated_face(&self, x: &[f64]) -> Option<Face> {
        (0..self.dim()).find_map(|i| {
            if x[i] < self.lo[i] {
                Some(Face { axis: i, upper: false })
            } else if x[i] > self.hi[i] {
                Some(Face { axis: i, upper: true })
            } else {
                None
            }
        })
    }

    pub fn bound(&self, face: Face) -> f64 {
        if face.upper {
            self.hi[face.axis]
        } else {
            self.lo[face.axis]
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.iter().chain(&self.hi).all(|v| v.is_finite())
    }

    /// Euclidean length of the diagonal (infinite for unbounded boxes).
    pub fn diameter(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
    }

    pub fn min_width(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| b - a)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn center(&self) -> Vector {
        let mut c = [0.0; MAX_DIM];
        for i in 0..self.dim() {
            c[i] = if self.is_bounded() {
                0.5 * (self.lo[i] + self.hi[i])
            } else {
                0.0
            };
        }
        c
    }

    /// Box grown by `frac` of its width on every side.
    pub fn padded(&self, frac: f64) -> Self {
        let (lo, hi) = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| {
                let w = (b - a) * frac;
                (a - w, b + w)
            })
            .unzip();
        Self { lo, hi }
    }

    /// Intersection with another box of the same dimension.
    pub fn intersect(&self, other: &BoxDomain) -> Result<Self> {
        let lo = self.lo.iter().zip(&other.lo).map(|(a, b)| a.max(*b)).collect();
        let hi = self.hi.iter().zip(&other.hi).map(|(a, b)| a.min(*b)).collect();
        Self::new(lo, hi)
    }
}

/// Uniform rectilinear grid with `n[i]` nodes on axis `i`, spacing `h[i]`,
/// starting at `lo[i]`. Node order is lexicographic in the coordinates:
/// the last axis varies fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub h: Vec<f64>,
    pub n: Vec<usize>,
}

impl GridSpec {
    /// `n` nodes per axis spanning `[lo, hi]` inclusive.
    pub fn linspace(domain: &BoxDomain, n: &[usize]) -> Result<Self> {
        if n.len() != domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: domain.dim(),
                found: n.len(),
            });
        }
        if !domain.is_bounded() {
            return Err(Error::InvalidInput("grid over an unbounded box".into()));
        }
        if n.iter().any(|&k| k < 2) {
            return Err(Error::InvalidInput("grid needs at least 2 nodes per axis".into()));
        }
        let h = (0..n.len())
            .map(|i| (domain.hi[i] - domain.lo[i]) / (n[i] - 1) as f64)
            .collect();
        Ok(Self {
            lo: domain.lo.clone(),
            h,
            n: n.to_vec(),
        })
    }

    /// Nodes `lo + k h` for every `k` with `lo + k h <= hi` (up to rounding).
    pub fn with_spacing(domain: &BoxDomain, h: f64) -> Result<Self> {
        if !(h > 0.0) || !domain.is_bounded() {
            return Err(Error::InvalidInput(format!("invalid spacing {h}")));
        }
        let n: Vec<usize> = (0..domain.dim())
            .map(|i| ((domain.hi[i] - domain.lo[i]) / h * (1.0 + 1e-12)).floor() as usize + 1)
            .collect();
        if n.iter().any(|&k| k < 2) {
            return Err(Error::InvalidInput("spacing larger than the box".into()));
        }
        Ok(Self {
            lo: domain.lo.clone(),
            h: vec![h; domain.dim()],
            n,
        })
    }

    /// Same origin, half the spacing; every coarse node is a fine node.
    pub fn refined(&self) -> Self {
        Self {
            lo: self.lo.clone(),
            h: self.h.iter().map(|h| 0.5 * h).collect(),
            n: self.n.iter().map(|n| 2 * n - 1).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n.len()
    }

    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hi(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| self.lo[i] + self.h[i] * (self.n[i] - 1) as f64)
            .collect()
    }

    pub fn bounds(&self) -> BoxDomain {
        BoxDomain {
            lo: self.lo.clone(),
            hi: self.hi(),
        }
    }

    pub fn coord(&self, axis: usize, k: usize) -> f64 {
        self.lo[axis] + self.h[axis] * k as f64
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.n)
            .fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn multi(&self, mut flat: usize) -> [usize; MAX_DIM] {
        let mut idx = [0; MAX_DIM];
        for axis in (0..self.dim()).rev() {
            idx[axis] = flat % self.n[axis];
            flat /= self.n[axis];
        }
        idx
    }

    pub fn node(&self, flat: usize) -> Vector {
        let idx = self.multi(flat);
        let mut x = [0.0; MAX_DIM];
        for axis in 0..self.dim() {
            x[axis] = self.coord(axis, idx[axis]);
        }
        x
    }

    /// Flat index of the neighbour displaced by `step` along `axis`, if any.
    pub fn neighbor(&self, flat: usize, axis: usize, step: isize) -> Option<usize> {
        let idx = self.multi(flat);
        let k = idx[axis] as isize + step;
        if k < 0 || k >= self.n[axis] as isize {
            return None;
        }
        let mut stride = 1;
        for a in (axis + 1)..self.dim() {
            stride *= self.n[a];
        }
        Some((flat as isize + step * stride as isize) as usize)
    }

    pub fn is_boundary(&self, flat: usize) -> bool {
        let idx = self.multi(flat);
        (0..self.dim()).any(|a| idx[a] == 0 || idx[a] + 1 == self.n[a])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_and_multi_are_inverse() {
        let g = GridSpec::linspace(&BoxDomain::cube(3, 0.0, 1.0), &[3, 4, 5]).unwrap();
        for f in 0..g.len() {
            let m = g.multi(f);
            assert_eq!(g.flat(&m[..3]), f);
        }
        // last axis fastest
        assert_eq!(g.node(1)[2], 0.25);
    }

    #[test]
    fn refined_grid_contains_coarse_nodes() {
        let g = GridSpec::with_spacing(&BoxDomain::cube(2, -1.0, 1.0), 0.3).unwrap();
        let r = g.refined();
        assert_eq!(r.n[0], 2 * g.n[0] - 1);
        assert!((r.coord(0, 2) - g.coord(0, 1)).abs() < 1e-15);
    }

    #[test]
    fn neighbor_respects_edges() {
        let g = GridSpec::linspace(&BoxDomain::cube(2, 0.0, 1.0), &[3, 3]).unwrap();
        assert_eq!(g.neighbor(0, 0, -1), None);
        assert_eq!(g.neighbor(0, 0, 1), Some(3));
        assert_eq!(g.neighbor(4, 1, 1), Some(5));
    }

    #[test]
    fn degenerate_box_rejected() {
        assert!(BoxDomain::new(vec![0.0], vec![0.0]).is_err());
        assert!(BoxDomain::new(vec![0.0, 1.0], vec![1.0]).is_err());
    }
}
