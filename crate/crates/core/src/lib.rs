//! Isotropic realizability of gradient fields.
//!
//! Given a potential `u`, the library integrates the gradient flow
//! `X' = ∇u(X)` together with `W' = Δu(X)`, builds conductivities
//! `σ = exp(∫₀^τ Δu(X(s,x)) ds)` from hitting times `τ` onto a level set,
//! checks `div(σ∇u) = 0` numerically, and probes the boundedness conditions
//! that decide whether such a `σ` exists near saddles, stable points and on
//! the torus.

pub mod conductivity;
pub mod critical;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod numeric;
pub mod potential;
pub mod rectify;

pub use error::{Error, Result};
pub use geometry::{BoxDomain, Face, GridSpec, Matrix, Vector, MAX_DIM};
pub use potential::{
    make_grid_potential, make_separable, Component1D, Potential, PotentialKind, Smoothness,
};
