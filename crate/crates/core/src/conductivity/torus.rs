//! Realizability of periodic separable gradients `u = Σ uᵢ(xᵢ)` on the torus.

use serde::{Deserialize, Serialize};

use super::divergence::{divergence_order, OrderEstimate};
use super::field::ConductivityField;
use super::probe::{cell_centres, laplacian_integrals, DecisionRule, GrowthModel, ProbeKind, ProbeReport};
use crate::error::{Error, Result};
use crate::flow::{Direction, FlowOptions};
use crate::geometry::{BoxDomain, GridSpec};
use crate::potential::{make_separable, Component1D};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TorusOptions {
    /// Nodes per axis of the coarse `σ` grid over the unit cell.
    pub grid: usize,
    /// Run the `h, h/2` divergence check on `σ`.
    pub check_divergence: bool,
    /// Run the `∫₀ᵗ Δu` probe; times `2^j`, `j < stages`.
    pub probe: bool,
    pub stages: usize,
    pub per_axis: usize,
    pub flow: FlowOptions,
    pub rule: DecisionRule,
}

impl Default for TorusOptions {
    fn default() -> Self {
        Self {
            grid: 33,
            check_divergence: true,
            probe: true,
            stages: 11,
            per_axis: 5,
            flow: FlowOptions {
                rtol: 1e-10,
                atol: 1e-12,
                atol_w: 1e-12,
                grad_floor: f64::MIN_POSITIVE,
                ..FlowOptions::default()
            },
            rule: DecisionRule::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TorusVerdict {
    pub periods: Vec<f64>,
    /// Zeros of `uᵢ′` in one period, per axis.
    pub zeros: Vec<Vec<f64>>,
    pub trajectories_bounded: bool,
    pub product_nonvanishing: bool,
    pub realizable: bool,
    /// `σ = 1 / |∏ uᵢ′(xᵢ)|` on the unit cell when realizable.
    #[serde(skip)]
    pub sigma: Option<ConductivityField>,
    pub divergence: Option<OrderEstimate>,
    pub probe: Option<ProbeReport>,
}

/// Bounded trajectories iff every `uᵢ′` vanishes somewhere; realizable iff
/// none does, in which case `σ = 1 / |∏ uᵢ′|`.
pub fn analyze_separable_torus(components: &[Component1D], opts: &TorusOptions) -> Result<TorusVerdict> {
    let periods = components
        .iter()
        .map(|c| c.period().ok_or_else(|| Error::NotPeriodic(format!("{:?}", c.terms()))))
        .collect::<Result<Vec<f64>>>()?;
    let zeros = components
        .iter()
        .map(|c| c.derivative_zeros_in_period())
        .collect::<Result<Vec<_>>>()?;
    let trajectories_bounded = zeros.iter().all(|z| !z.is_empty());
    let product_nonvanishing = zeros.iter().all(|z| z.is_empty());
    let potential = make_separable(components.to_vec())?;
    let d = components.len();
    let cell = BoxDomain::new(vec![0.0; d], periods.clone())?;

    let (sigma, divergence) = if product_nonvanishing {
        let w = |x: &crate::Vector| -> Option<f64> {
            let mut prod = 1.0;
            for (i, c) in components.iter().enumerate() {
                prod *= c.d1(x[i]).ok()?;
            }
            Some(-prod.abs().ln())
        };
        let formula = "1/|prod u_i'(x_i)|";
        let grid = GridSpec::linspace(&cell, &vec![opts.grid.max(3); d])?;
        let coarse = ConductivityField::from_fn(potential.id(), grid.clone(), formula, w);
        let divergence = if opts.check_divergence {
            let fine = ConductivityField::from_fn(potential.id(), grid.refined(), formula, w);
            Some(divergence_order(&potential, &coarse, &fine)?)
        } else {
            None
        };
        (Some(coarse), divergence)
    } else {
        (None, None)
    };

    let probe = if opts.probe {
        let times: Vec<f64> = (0..opts.stages).map(|j| (j as f64).exp2()).collect();
        let mut sup = vec![0.0f64; times.len()];
        let xs = cell_centres(&cell, opts.per_axis);
        for x in &xs {
            let w = laplacian_integrals(&potential, x, Direction::Forward, &times, &opts.flow)?
                .ok_or_else(|| Error::NoConvergence("trajectory left the evaluation domain".into()))?;
            for (s, w) in sup.iter_mut().zip(w) {
                *s = s.max(w.abs());
            }
        }
        let n = xs.len();
        Some(ProbeReport::decide(
            ProbeKind::TorusC2Rd,
            times.clone(),
            sup,
            vec![n; times.len()],
            &[GrowthModel::Linear, GrowthModel::Log],
            &opts.rule,
        )?)
    } else {
        None
    };

    Ok(TorusVerdict {
        periods,
        zeros,
        trajectories_bounded,
        product_nonvanishing,
        realizable: product_nonvanishing,
        sigma,
        divergence,
        probe,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conductivity::probe::Verdict;
    use crate::potential::from_id;

    fn verdict(name: &str) -> TorusVerdict {
        let p = from_id(&format!("separable:{name}")).unwrap();
        analyze_separable_torus(p.components().unwrap(), &TorusOptions::default()).unwrap()
    }

    #[test]
    fn x1_minus_cos_is_not_realizable() {
        let v = verdict("x1-cos");
        assert!(!v.realizable && !v.trajectories_bounded);
        assert_eq!(v.zeros[1], vec![0.0, 0.5]);
        assert_eq!(v.probe.unwrap().verdict, Verdict::Diverging);
    }

    #[test]
    fn two_plus_cos_is_realizable() {
        let v = verdict("two-plus-cos");
        assert!(v.realizable && !v.trajectories_bounded);
        let div = v.divergence.unwrap();
        assert!((div.order - 2.0).abs() < 0.3, "{div:?}");
        assert_eq!(v.probe.unwrap().verdict, Verdict::Bounded);
        let s = v.sigma.unwrap();
        // σ(0, 0) = 1 / 9
        assert!((s.sigma[0] - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn cos_cos_bounded_but_not_realizable() {
        let v = verdict("cos-cos");
        assert!(v.trajectories_bounded && !v.realizable);
        assert_eq!(v.probe.unwrap().verdict, Verdict::Diverging);
    }

    #[test]
    fn solver_finds_zeros_without_declaration() {
        let c = Component1D::cos(-1.0, 2.0 * std::f64::consts::PI, 0.0).with_period(1.0);
        let v = analyze_separable_torus(
            &[c.clone(), c],
            &TorusOptions { probe: false, ..Default::default() },
        )
        .unwrap();
        assert!(v.trajectories_bounded);
        assert_eq!(v.zeros[0].len(), 2);
    }

    #[test]
    fn non_periodic_rejected() {
        let c = Component1D::poly(&[0.0, 1.0]);
        let r = analyze_separable_torus(&[c.clone(), c], &TorusOptions::default());
        assert!(matches!(r, Err(Error::NotPeriodic(_))));
    }
}
