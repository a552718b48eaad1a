//! Critical points of `u`: location, Hessian classification and the
//! invariant manifolds of saddles.

mod manifold;

pub use manifold::{trace_manifolds, Manifold, ManifoldKind, ManifoldOptions, Manifolds};

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{distance, norm, BoxDomain, Vector, MAX_DIM};
use crate::potential::Potential;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Saddle,
    Sink,
    Source,
    Degenerate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub location: Vec<f64>,
    /// `|∇u|` at `location`.
    pub residual: f64,
    /// Hessian eigenvalues in ascending order.
    pub eigenvalues: Vec<f64>,
    /// Unit eigenvectors matching `eigenvalues`.
    #[serde(skip)]
    pub eigenvectors: Vec<Vec<f64>>,
    #[serde(rename = "class")]
    pub classification: Classification,
    pub laplacian: f64,
    pub isolation_radius: Option<f64>,
}

impl CriticalPoint {
    pub fn point(&self) -> Vector {
        let mut x = [0.0; MAX_DIM];
        x[..self.location.len()].copy_from_slice(&self.location);
        x
    }

    /// Eigenvectors whose eigenvalue has the given sign.
    pub fn directions(&self, positive: bool) -> Vec<Vec<f64>> {
        self.eigenvalues
            .iter()
            .zip(&self.eigenvectors)
            .filter(|(l, _)| (**l > 0.0) == positive && **l != 0.0)
            .map(|(_, v)| v.clone())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CriticalOptions {
    /// Accept a Newton limit when `|∇u| <=` this.
    pub residual_tol: f64,
    /// `|λ| < degeneracy · max(1, ρ(H))` counts as zero.
    pub degeneracy: f64,
    /// Deduplication radius as a fraction of the box diameter.
    pub cluster_frac: f64,
    pub max_iter: usize,
}

impl Default for CriticalOptions {
    fn default() -> Self {
        Self {
            residual_tol: 1e-10,
            degeneracy: 1e-7,
            cluster_frac: 1e-6,
            max_iter: 200,
        }
    }
}

/// Symmetric eigen-decomposition of the leading `d×d` block, ascending.
pub fn eigen(h: &[[f64; MAX_DIM]; MAX_DIM], d: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let m = DMatrix::from_fn(d, d, |i, j| h[i][j]);
    let se = SymmetricEigen::new(m);
    let mut pairs: Vec<(f64, Vec<f64>)> = (0..d)
        .map(|k| {
            let v: Vec<f64> = se.eigenvectors.column(k).iter().copied().collect();
            (se.eigenvalues[k], v)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

fn classify_spectrum(eigenvalues: &[f64], degeneracy: f64) -> Classification {
    let rho = eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let thr = degeneracy * rho.max(1.0);
    if eigenvalues.iter().any(|l| l.abs() < thr) {
        Classification::Degenerate
    } else if eigenvalues.iter().all(|&l| l < 0.0) {
        Classification::Sink
    } else if eigenvalues.iter().all(|&l| l > 0.0) {
        Classification::Source
    } else {
        Classification::Saddle
    }
}

/// Classifies a critical point from its Hessian spectrum.
pub fn classify(potential: &Potential, x: &[f64]) -> Result<CriticalPoint> {
    classify_with(potential, x, &CriticalOptions::default())
}

pub fn classify_with(potential: &Potential, x: &[f64], opts: &CriticalOptions) -> Result<CriticalPoint> {
    let d = potential.dim();
    let (g, h) = potential.derivatives(x)?;
    let residual = norm(&g[..d]);
    if residual > 1e-8 {
        return Err(Error::NotCritical { residual });
    }
    let (eigenvalues, eigenvectors) = eigen(&h, d);
    Ok(CriticalPoint {
        location: x[..d].to_vec(),
        residual,
        classification: classify_spectrum(&eigenvalues, opts.degeneracy),
        laplacian: potential.laplacian(x)?,
        eigenvalues,
        eigenvectors,
        isolation_radius: None,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaplacianCheck {
    pub value: f64,
    pub tolerance: f64,
    /// Necessary (not sufficient) for realizability with a regular σ.
    pub passes: bool,
}

pub fn check_laplacian_vanishing(potential: &Potential, x: &[f64], tolerance: f64) -> Result<LaplacianCheck> {
    let value = potential.laplacian(x)?;
    Ok(LaplacianCheck {
        value,
        tolerance,
        passes: value.abs() <= tolerance,
    })
}

fn grad_norm(potential: &Potential, x: &Vector) -> Option<f64> {
    potential.gradient(x).ok().map(|g| norm(&g[..potential.dim()]))
}

/// Newton iteration on `∇u = 0` with an eigen-truncated pseudo-inverse and
/// a backtracking line search on `|∇u|`; falls back to descent on
/// `|∇u|²/2` (direction `-H∇u`) when the Newton direction stalls.
fn newton(potential: &Potential, seed: &Vector, opts: &CriticalOptions) -> Option<Vector> {
    let d = potential.dim();
    let mut x = *seed;
    let mut gn = grad_norm(potential, &x)?;
    for _ in 0..opts.max_iter {
        if gn == 0.0 {
            break;
        }
        let (g, h) = potential.derivatives(&x).ok()?;
        let (vals, vecs) = eigen(&h, d);
        let lmax = vals.iter().fold(0.0f64, |m, l| m.max(l.abs()));
        let mut newton_dir = [0.0; MAX_DIM];
        for (l, v) in vals.iter().zip(&vecs) {
            if l.abs() > 1e-12 * lmax && lmax > 0.0 {
                let c: f64 = (0..d).map(|i| v[i] * g[i]).sum::<f64>() / l;
                for i in 0..d {
                    newton_dir[i] -= c * v[i];
                }
            }
        }
        let mut descent = [0.0; MAX_DIM];
        for i in 0..d {
            descent[i] = -(0..d).map(|j| h[i][j] * g[j]).sum::<f64>();
        }
        // scale the descent direction to a Newton-like length
        let dn = norm(&descent[..d]);
        if dn > 0.0 && lmax > 0.0 {
            let s = gn / (lmax * dn);
            descent.iter_mut().for_each(|v| *v *= s);
        }

        let mut moved = None;
        for dir in [newton_dir, descent] {
            if norm(&dir[..d]) == 0.0 {
                continue;
            }
            let mut alpha = 1.0;
            for _ in 0..40 {
                let mut trial = x;
                for i in 0..d {
                    trial[i] += alpha * dir[i];
                }
                if let Some(tn) = grad_norm(potential, &trial) {
                    if tn < gn {
                        moved = Some((trial, tn, alpha * norm(&dir[..d])));
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if moved.is_some() {
                break;
            }
        }
        let Some((next, next_norm, step)) = moved else { break };
        x = next;
        gn = next_norm;
        if step <= 1e-15 * (1.0 + norm(&x[..d])) {
            break;
        }
    }
    (gn <= opts.residual_tol).then_some(x)
}

fn seeds(domain: &BoxDomain, n: usize) -> Vec<Vector> {
    let d = domain.dim();
    let total = n.pow(d as u32);
    (0..total)
        .map(|mut k| {
            let mut x = [0.0; MAX_DIM];
            for axis in (0..d).rev() {
                let i = k % n;
                k /= n;
                let w = domain.hi[axis] - domain.lo[axis];
                x[axis] = domain.lo[axis] + (i as f64 + 0.5) * w / n as f64;
            }
            x
        })
        .collect()
}

/// Multi-start Newton from the cell centres of an `n^d` seed grid.
/// Points are kept if they lie strictly inside `domain` (by more than the
/// cluster radius) and are deduplicated within that radius.
pub fn find_critical_points(
    potential: &Potential,
    domain: &BoxDomain,
    n: usize,
    opts: &CriticalOptions,
) -> Result<Vec<CriticalPoint>> {
    if n < 2 {
        return Err(Error::InvalidInput("seed grid needs n >= 2 per axis".into()));
    }
    if domain.dim() != potential.dim() || !domain.is_bounded() {
        return Err(Error::InvalidInput("search box must be bounded and match the potential".into()));
    }
    let radius = opts.cluster_frac * domain.diameter();
    let roots: Vec<Option<Vector>> = seeds(domain, n)
        .par_iter()
        .map(|s| newton(potential, s, opts))
        .collect();
    let mut found: Vec<Vector> = Vec::new();
    for x in roots.into_iter().flatten() {
        if !domain.contains_interior(&x[..domain.dim()], radius) {
            continue;
        }
        if found.iter().all(|f| distance(f, &x) > radius) {
            found.push(x);
        }
    }
    // Lexicographic on coordinates quantized to the cluster radius, so roundoff
    // of either sign around a shared coordinate does not reorder points.
    let key = |v: &Vector| -> Vec<i64> { v.iter().map(|c| (c / radius).round() as i64).collect() };
    found.sort_by_key(key);

    let mut out = Vec::with_capacity(found.len());
    for x in &found {
        let mut cp = classify_with(potential, x, opts)?;
        cp.isolation_radius = Some(isolation_radius(potential, domain, x, &found, radius, opts));
        out.push(cp);
    }
    Ok(out)
}

/// Largest radius around `x` with no other critical point, probed by
/// Newton runs seeded on rings at fractions of the current bound.
fn isolation_radius(
    potential: &Potential,
    domain: &BoxDomain,
    x: &Vector,
    others: &[Vector],
    cluster: f64,
    opts: &CriticalOptions,
) -> f64 {
    let d = domain.dim();
    let mut r = others
        .iter()
        .map(|o| distance(o, x))
        .filter(|&dist| dist > cluster)
        .fold(f64::INFINITY, f64::min);
    for a in 0..d {
        r = r.min(x[a] - domain.lo[a]).min(domain.hi[a] - x[a]);
    }
    let dirs = ring_directions(d);
    for frac in [0.75, 0.5, 0.25] {
        let rad = frac * r;
        let hits: Vec<f64> = dirs
            .par_iter()
            .filter_map(|dir| {
                let mut s = *x;
                for i in 0..d {
                    s[i] += rad * dir[i];
                }
                let root = newton(potential, &s, opts)?;
                let dist = distance(&root, x);
                (dist > cluster).then_some(dist)
            })
            .collect();
        r = hits.into_iter().fold(r, f64::min);
    }
    r
}

fn ring_directions(d: usize) -> Vec<Vector> {
    if d == 2 {
        (0..12)
            .map(|k| {
                let a = k as f64 * std::f64::consts::PI / 6.0;
                [a.cos(), a.sin(), 0.0]
            })
            .collect()
    } else {
        let mut v = Vec::new();
        for i in -1i32..=1 {
            for j in -1i32..=1 {
                for k in -1i32..=1 {
                    if (i, j, k) != (0, 0, 0) {
                        let p = [i as f64, j as f64, k as f64];
                        let n = norm(&p);
                        v.push([p[0] / n, p[1] / n, p[2] / n]);
                    }
                }
            }
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{catalog_cos_saddle, catalog_cubic, from_id};
    use std::f64::consts::PI;

    #[test]
    fn cos_saddle_has_one_interior_saddle() {
        let p = catalog_cos_saddle();
        let cps = find_critical_points(&p, &BoxDomain::cube(2, -PI, PI), 8, &CriticalOptions::default()).unwrap();
        assert_eq!(cps.len(), 1);
        let c = &cps[0];
        assert!(norm(&c.location) < 1e-10);
        assert_eq!(c.classification, Classification::Saddle);
        assert!((c.eigenvalues[0] + 1.0).abs() < 1e-12 && (c.eigenvalues[1] - 1.0).abs() < 1e-12);
        assert!(c.residual <= 1e-10);
        assert!(c.isolation_radius.unwrap() > 1.0);
    }

    #[test]
    fn cubic_has_one_degenerate_point() {
        let p = catalog_cubic();
        let cps = find_critical_points(&p, &BoxDomain::cube(2, -1.0, 1.0), 6, &CriticalOptions::default()).unwrap();
        assert_eq!(cps.len(), 1, "{cps:?}");
        assert_eq!(cps[0].classification, Classification::Degenerate);
        assert!(cps[0].residual <= 1e-10);
    }

    #[test]
    fn plane_has_none() {
        let p = from_id("plane").unwrap();
        let cps = find_critical_points(&p, &BoxDomain::cube(2, -3.0, 3.0), 5, &CriticalOptions::default()).unwrap();
        assert!(cps.is_empty());
    }

    #[test]
    fn finds_several_points_in_a_larger_box() {
        // -cos(2πx) - cos(2πy) on (-0.7, 0.7)^2: critical points at multiples of 1/2
        let p = from_id("separable:cos-cos").unwrap();
        let cps = find_critical_points(&p, &BoxDomain::cube(2, -0.7, 0.7), 12, &CriticalOptions::default()).unwrap();
        assert_eq!(cps.len(), 9);
        let sources = cps.iter().filter(|c| c.classification == Classification::Source).count();
        assert_eq!(sources, 1);
        for c in &cps {
            assert!(c.isolation_radius.unwrap() <= 0.5 + 1e-9);
        }
    }

    #[test]
    fn classification_of_quadratics() {
        let cap = from_id("separable:cap").unwrap();
        let c = classify(&cap, &[0.0, 0.0]).unwrap();
        assert_eq!(c.classification, Classification::Sink);
        assert_eq!(c.eigenvalues, vec![-1.0, -1.0]);
        let bowl = from_id("separable:bowl").unwrap();
        assert_eq!(classify(&bowl, &[0.0, 0.0]).unwrap().classification, Classification::Source);
        assert!(matches!(classify(&bowl, &[0.1, 0.0]), Err(Error::NotCritical { .. })));
    }

    #[test]
    fn laplacian_check() {
        let p = catalog_cos_saddle();
        let r = check_laplacian_vanishing(&p, &[0.0, 0.0], 1e-8).unwrap();
        assert!(r.passes && r.value == 0.0);
        let q = from_id("separable:quad-unbalanced").unwrap();
        let r = check_laplacian_vanishing(&q, &[0.0, 0.0], 1e-8).unwrap();
        assert_eq!(r.value, -1.0);
        assert!(!r.passes);
        assert!(check_laplacian_vanishing(&catalog_cubic(), &[0.0, 0.0], 1e-8).unwrap().passes);
    }

    #[test]
    fn json_fields() {
        let c = classify(&catalog_cos_saddle(), &[0.0, 0.0]).unwrap();
        let v = serde_json::to_value(&c).unwrap();
        for key in ["location", "residual", "eigenvalues", "class", "laplacian", "isolation_radius"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["class"], "saddle");
    }
}
