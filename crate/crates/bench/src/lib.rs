//! Shared fixtures for the criterion benches.

use std::f64::consts::PI;

use isoreal::potential::{catalog_cos_saddle, catalog_cubic};
use isoreal::{BoxDomain, GridSpec, Potential};

/// First-quadrant start points of the cos saddle, away from the manifolds.
pub fn cos_starts(n: usize) -> Vec<[f64; 2]> {
    (0..n)
        .map(|k| {
            let a = 0.3 + 2.5 * (k as f64 + 0.5) / n as f64;
            [a, PI - a]
        })
        .collect()
}

pub fn cos_saddle() -> Potential {
    catalog_cos_saddle()
}

pub fn cubic() -> Potential {
    catalog_cubic()
}

/// `n × n` nodes on the cubic's open quadrant `(0.05, 0.95)²`.
pub fn cubic_grid(n: usize) -> GridSpec {
    GridSpec::linspace(&BoxDomain::cube(2, 0.05, 0.95), &[n, n]).expect("valid grid")
}

/// `n × n` nodes on `(0.2, 2.8)²` for the cos saddle.
pub fn cos_grid(n: usize) -> GridSpec {
    GridSpec::linspace(&BoxDomain::cube(2, 0.2, 2.8), &[n, n]).expect("valid grid")
}
