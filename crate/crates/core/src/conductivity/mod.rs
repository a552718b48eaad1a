//! Conductivities `σ = e^w` built from hitting times, their divergence
//! check, and probes of the boundedness conditions.

mod divergence;
mod field;
mod probe;
mod separable;
mod torus;

pub use divergence::{divergence_order, divergence_residual, DivergenceReport, OrderEstimate, MIN_USABLE_FRACTION};
pub use field::{synthesize, ConductivityField, NearManifoldBand, NodeStatus, Provenance, SynthesisOptions};
pub use probe::{
    probe_saddle_boundedness, probe_stable_point, DecisionRule, GrowthFit, GrowthModel, ProbeKind, ProbeReport,
    SaddleProbeOptions, StableProbeOptions, Verdict,
};
pub use separable::{check_bou_fg, separable_w_oracle, time_integral, BouFgOptions, SeparableHit};
pub use torus::{analyze_separable_torus, TorusOptions, TorusVerdict};
