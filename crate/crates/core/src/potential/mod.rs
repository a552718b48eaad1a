//! Scalar potentials `u` with gradient, Hessian and Laplacian evaluators.

mod catalog;
mod component;
mod grid;
mod implicit;

use std::fmt;
use std::path::Path;
use std::sync::Arc;

pub use catalog::{
    catalog_counterexample_iii, catalog_cos_saddle, catalog_cubic, from_id, list as catalog_list,
    parse_separable, CatalogEntry,
};
pub use component::{Component1D, Smoothness, Term};
pub use grid::{GridInterpolant, InterpOrder};
pub use implicit::ImplicitProfile;

use crate::error::{Error, Result};
use crate::geometry::{BoxDomain, GridSpec, Matrix, Vector, MAX_DIM};

/// Closed-form catalog potentials that are not separable sums.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClosedForm {
    /// `cos y - cos x`
    CosSaddle,
    /// `(y³ - x³) / 3`
    Cubic,
}

#[derive(Clone, Debug)]
pub enum PotentialKind {
    Catalog(ClosedForm),
    Separable(Vec<Component1D>),
    Grid(Arc<GridInterpolant>),
}

/// An evaluatable potential on an axis-aligned natural domain.
///
/// Points are passed as slices of at least `dim` coordinates; evaluators
/// return zero-padded fixed-size arrays. `scale` multiplies every evaluator
/// and is used to build `λu` without copying the definition.
#[derive(Clone)]
pub struct Potential {
    id: String,
    dim: usize,
    kind: PotentialKind,
    domain: BoxDomain,
    periods: Vec<Option<f64>>,
    smoothness: Smoothness,
    scale: f64,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Potential")
            .field("id", &self.id)
            .field("dim", &self.dim)
            .field("domain", &self.domain)
            .field("scale", &self.scale)
            .finish()
    }
}

impl Potential {
    pub(crate) fn closed_form(id: &str, form: ClosedForm, domain: BoxDomain) -> Self {
        Self {
            id: id.to_string(),
            dim: domain.dim(),
            kind: PotentialKind::Catalog(form),
            domain,
            periods: vec![None; 2],
            smoothness: Smoothness::Smooth,
            scale: 1.0,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    /// Period per axis, if the potential's gradient is periodic along it.
    pub fn periods(&self) -> &[Option<f64>] {
        &self.periods
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    /// The potential `λu`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let mut p = self.clone();
        p.scale *= lambda;
        p.id = format!("{lambda}*{}", self.id);
        p
    }

    /// Separable components, when the potential is a sum of 1-D profiles.
    pub fn components(&self) -> Option<&[Component1D]> {
        match &self.kind {
            PotentialKind::Separable(c) => Some(c),
            _ => None,
        }
    }

    /// Validates `x` and returns it as a [`Vector`]. Points within rounding
    /// distance of the domain are snapped onto it, so grid nodes computed as
    /// `lo + k h` on a box equal to the domain stay evaluatable.
    fn check(&self, x: &[f64]) -> Result<Vector> {
        if x.len() < self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        let mut p = [0.0; MAX_DIM];
        for i in 0..self.dim {
            let (lo, hi, v) = (self.domain.lo[i], self.domain.hi[i], x[i]);
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("evaluation point {:?}", &x[..self.dim])));
            }
            let slack = 1e-13 * (1.0 + v.abs());
            if v < lo - slack || v > hi + slack {
                return Err(Error::OutOfDomain {
                    potential: self.id.clone(),
                    point: x[..self.dim].to_vec(),
                });
            }
            p[i] = v.clamp(lo, hi);
        }
        Ok(p)
    }

    fn finite<T>(&self, x: &[f64], out: T, vals: &[f64]) -> Result<T> {
        if vals.iter().all(|v| v.is_finite()) {
            Ok(out)
        } else {
            Err(Error::NonFinite(format!(
                "`{}` derivatives at {:?}",
                self.id,
                &x[..self.dim]
            )))
        }
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        let x = &self.check(x)?;
        let v = match &self.kind {
            PotentialKind::Catalog(ClosedForm::CosSaddle) => x[1].cos() - x[0].cos(),
            PotentialKind::Catalog(ClosedForm::Cubic) => (x[1].powi(3) - x[0].powi(3)) / 3.0,
            PotentialKind::Separable(c) => {
                let mut s = 0.0;
                for (i, comp) in c.iter().enumerate() {
                    s += comp.value(x[i])?;
                }
                s
            }
            PotentialKind::Grid(g) => g.eval(x)?.0,
        };
        let v = self.scale * v;
        self.finite(x, v, &[v])
    }

    /// Gradient and Hessian (without the value, which may be expensive).
    pub fn derivatives(&self, x: &[f64]) -> Result<(Vector, Matrix)> {
        let x = &self.check(x)?;
        let mut g = [0.0; MAX_DIM];
        let mut h = [[0.0; MAX_DIM]; MAX_DIM];
        match &self.kind {
            PotentialKind::Catalog(ClosedForm::CosSaddle) => {
                let (sx, cx) = x[0].sin_cos();
                let (sy, cy) = x[1].sin_cos();
                g[0] = sx;
                g[1] = -sy;
                h[0][0] = cx;
                h[1][1] = -cy;
            }
            PotentialKind::Catalog(ClosedForm::Cubic) => {
                g[0] = -x[0] * x[0];
                g[1] = x[1] * x[1];
                h[0][0] = -2.0 * x[0];
                h[1][1] = 2.0 * x[1];
            }
            PotentialKind::Separable(c) => {
                for (i, comp) in c.iter().enumerate() {
                    let (d1, d2) = comp.d1_d2(x[i])?;
                    g[i] = d1;
                    h[i][i] = d2;
                }
            }
            PotentialKind::Grid(grid) => {
                let (_, gg, hh) = grid.eval(x)?;
                g = gg;
                h = hh;
            }
        }
        for i in 0..MAX_DIM {
            g[i] *= self.scale;
            for j in 0..MAX_DIM {
                h[i][j] *= self.scale;
            }
        }
        if g.iter().chain(h.iter().flatten()).all(|v| v.is_finite()) {
            Ok((g, h))
        } else {
            self.finite(x, (g, h), &[f64::NAN])
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vector> {
        Ok(self.derivatives(x)?.0)
    }

    pub fn hessian(&self, x: &[f64]) -> Result<Matrix> {
        Ok(self.derivatives(x)?.1)
    }

    pub fn laplacian(&self, x: &[f64]) -> Result<f64> {
        Ok(self.flow_field(x)?.1)
    }

    /// Right-hand side of the augmented flow: `(∇u(x), Δu(x))`.
    pub fn flow_field(&self, x: &[f64]) -> Result<(Vector, f64)> {
        let (g, h) = self.derivatives(x)?;
        let lap = (0..self.dim).map(|i| h[i][i]).sum();
        Ok((g, lap))
    }
}

/// Sum `u(x) = Σ u_i(x_i)` of one component per axis.
pub fn make_separable(components: Vec<Component1D>) -> Result<Potential> {
    let d = components.len();
    if !(2..=MAX_DIM).contains(&d) {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: d,
        });
    }
    let (lo, hi) = components.iter().map(Component1D::domain).unzip();
    let domain = BoxDomain::new(lo, hi)?;
    let periods = components.iter().map(Component1D::period).collect();
    let smoothness = components
        .iter()
        .map(Component1D::smoothness)
        .min()
        .unwrap_or(Smoothness::Smooth);
    let id = format!(
        "separable:{}",
        components
            .iter()
            .map(|c| format!("{:?}", c.terms()))
            .collect::<Vec<_>>()
            .join("|")
    );
    Ok(Potential {
        id,
        dim: d,
        kind: PotentialKind::Separable(components),
        domain,
        periods,
        smoothness,
        scale: 1.0,
    })
}

/// Potential interpolating `samples` on `grid` (order 1 or 3).
pub fn make_grid_potential(grid: GridSpec, samples: Vec<f64>, order: u32) -> Result<Potential> {
    let interp = GridInterpolant::new(grid, samples, InterpOrder::from_degree(order)?)?;
    Ok(grid_potential("grid", interp))
}

/// Grid potential read from a `x,y[,z],u` CSV file.
pub fn load_grid_potential(path: &Path, order: u32) -> Result<Potential> {
    let interp = GridInterpolant::from_csv(path, InterpOrder::from_degree(order)?)?;
    Ok(grid_potential(&format!("grid:{}", path.display()), interp))
}

fn grid_potential(id: &str, interp: GridInterpolant) -> Potential {
    let domain = interp.grid().bounds();
    let smoothness = match interp.order() {
        InterpOrder::Cubic => Smoothness::C2,
        // unsuitable wherever Δu is needed
        InterpOrder::Linear => Smoothness::C0,
    };
    Potential {
        id: id.to_string(),
        dim: domain.dim(),
        periods: vec![None; domain.dim()],
        kind: PotentialKind::Grid(Arc::new(interp)),
        domain,
        smoothness,
        scale: 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn laplacian_is_hessian_trace() {
        for p in [catalog_cos_saddle(), catalog_cubic(), catalog_counterexample_iii().unwrap()] {
            let x = [0.3, -0.2, 0.0];
            let (_, h) = p.derivatives(&x).unwrap();
            assert_eq!(p.laplacian(&x).unwrap(), h[0][0] + h[1][1]);
        }
    }

    #[test]
    fn separable_hessian_is_diagonal() {
        let p = make_separable(vec![
            Component1D::poly(&[0.0, 0.0, 0.5]),
            Component1D::cos(1.0, 2.0, 0.3),
            Component1D::sin(0.2, 1.0, 0.0),
        ])
        .unwrap();
        let h = p.hessian(&[0.1, 0.2, 0.3]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_eq!(h[i][j], 0.0);
                }
            }
        }
    }

    #[test]
    fn scaling_multiplies_all_evaluators() {
        let p = catalog_cos_saddle();
        let q = p.scaled(2.0);
        let x = [0.4, 1.1, 0.0];
        assert_eq!(q.value(&x).unwrap(), 2.0 * p.value(&x).unwrap());
        assert_eq!(q.gradient(&x).unwrap()[1], 2.0 * p.gradient(&x).unwrap()[1]);
        assert_eq!(q.laplacian(&x).unwrap(), 2.0 * p.laplacian(&x).unwrap());
    }

    #[test]
    fn domain_is_enforced() {
        let p = catalog_cos_saddle();
        assert!(p.value(&[4.0, 0.0]).unwrap_err().is_out_of_domain());
        assert!(matches!(p.value(&[0.0]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(p.value(&[f64::NAN, 0.0]), Err(Error::NonFinite(_))));
    }

    #[test]
    fn grid_of_plane_has_exact_gradient() {
        let g = GridSpec::linspace(&BoxDomain::cube(2, -1.0, 1.0), &[41, 41]).unwrap();
        let samples = (0..g.len()).map(|i| g.node(i)[0] + g.node(i)[1]).collect();
        let p = make_grid_potential(g, samples, 3).unwrap();
        let gr = p.gradient(&[0.013, -0.27]).unwrap();
        assert!((gr[0] - 1.0).abs() < 1e-10 && (gr[1] - 1.0).abs() < 1e-10);
        assert!(p.value(&[-1.0, -1.0]).unwrap_err().is_out_of_domain());
        assert!(make_grid_potential(GridSpec::linspace(&BoxDomain::cube(2, 0.0, 1.0), &[2, 2]).unwrap(), vec![0.0; 4], 2).is_err());
    }

    #[test]
    fn grid_laplacian_converges_at_second_order() {
        let exact = catalog_cos_saddle();
        let dom = BoxDomain::cube(2, -PI, PI);
        let err = |n: usize| {
            let g = GridSpec::linspace(&dom, &[n, n]).unwrap();
            let s = (0..g.len()).map(|i| exact.value(&g.node(i)).unwrap()).collect();
            let p = make_grid_potential(g, s, 3).unwrap();
            let mut e: f64 = 0.0;
            // dense enough that every relative cell position is visited
            for i in 0..60 {
                for j in 0..60 {
                    let x = [-2.9 + 0.0971 * i as f64, -2.9 + 0.0967 * j as f64];
                    e = e.max((p.laplacian(&x).unwrap() - exact.laplacian(&x).unwrap()).abs());
                }
            }
            e
        };
        let (e1, e2) = (err(101), err(201));
        assert!(e1 < 1e-3);
        assert!((e1 / e2).log2() > 1.8, "{e1} {e2}");
    }
}
