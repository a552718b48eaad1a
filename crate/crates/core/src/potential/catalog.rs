//! Named potentials and the `separable:<spec>` grammar.
//!
//! A separable spec lists one component per axis, separated by `|`. Each
//! component is a `+`-joined sum of terms `poly(c0,c1,...)`,
//! `cos(amp,omega,phase)` or `sin(amp,omega,phase)`, optionally followed by
//! `@T` to declare that the component's derivative has period `T`. Numbers
//! accept a `pi` suffix (`2pi`, `-0.5pi`, `pi`). Named presets may be used
//! in place of a spec, e.g. `separable:x1-cos`.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use super::{load_grid_potential, make_separable, ClosedForm, Component1D, ImplicitProfile, Potential, Term};
use crate::error::{Error, Result};
use crate::geometry::BoxDomain;

#[derive(Clone, Debug, Serialize)]
pub struct CatalogEntry {
    pub id: &'static str,
    pub description: &'static str,
}

const ENTRIES: &[CatalogEntry] = &[
    CatalogEntry { id: "cos-saddle", description: "cos y - cos x on [-pi,pi]^2; hyperbolic saddle at 0 with zero Laplacian" },
    CatalogEntry { id: "cubic-degenerate", description: "(y^3 - x^3)/3 on [-1,1]^2; degenerate critical point at 0" },
    CatalogEntry { id: "counterexample-iii", description: "f(x) - y^2/2 with the implicit C^2 profile f; unbounded w near the stable manifold" },
    CatalogEntry { id: "tilted-sine", description: "x + 0.3 sin y; no critical points" },
    CatalogEntry { id: "plane", description: "x + y; harmonic, no critical points" },
    CatalogEntry { id: "separable:x1-cos", description: "x1 - cos(2 pi x2), periodic gradient" },
    CatalogEntry { id: "separable:two-plus-cos", description: "u_i' = 2 + cos(2 pi t) on both axes" },
    CatalogEntry { id: "separable:cos-cos", description: "-cos(2 pi x1) - cos(2 pi x2)" },
    CatalogEntry { id: "separable:cos-pair", description: "(1 - cos x) + (cos y - 1) on [-pi,pi]^2" },
    CatalogEntry { id: "separable:quad-saddle", description: "x^2/2 - y^2/2" },
    CatalogEntry { id: "separable:quad-unbalanced", description: "x^2 - 3y^2/2; nonzero Laplacian at the saddle" },
    CatalogEntry { id: "separable:quartic-saddle", description: "x^2/2 + x^4/4 - y^2/2 - y^4/12" },
    CatalogEntry { id: "separable:linear-x", description: "u = x" },
    CatalogEntry { id: "separable:cap", description: "-(x^2 + y^2)/2; sink at 0" },
    CatalogEntry { id: "separable:bowl", description: "(x^2 + y^2)/2; source at 0" },
];

pub fn list() -> &'static [CatalogEntry] {
    ENTRIES
}

/// `cos y - cos x` on `[-π, π]²`.
pub fn catalog_cos_saddle() -> Potential {
    Potential::closed_form("cos-saddle", ClosedForm::CosSaddle, BoxDomain::cube(2, -PI, PI))
}

/// `(y³ - x³) / 3` on `[-1, 1]²`.
pub fn catalog_cubic() -> Potential {
    Potential::closed_form("cubic-degenerate", ClosedForm::Cubic, BoxDomain::cube(2, -1.0, 1.0))
}

/// `f(x) - y²/2` on `[-1, 1]²` with the implicit profile `f`.
pub fn catalog_counterexample_iii() -> Result<Potential> {
    let f = Component1D::implicit(Arc::new(ImplicitProfile::new()?));
    let g = Component1D::poly(&[0.0, 0.0, -0.5]).on_domain(-1.0, 1.0);
    Ok(make_separable(vec![f, g])?.with_id("counterexample-iii"))
}

fn periodic(c: Component1D, zeros: Vec<f64>) -> Component1D {
    c.with_period(1.0).with_derivative_zeros(zeros)
}

fn preset(name: &str) -> Option<Vec<Component1D>> {
    let tau = 2.0 * PI;
    let poly = Component1D::poly;
    Some(match name {
        "x1-cos" => vec![
            periodic(poly(&[0.0, 1.0]), vec![]),
            periodic(Component1D::cos(-1.0, tau, 0.0), vec![0.0, 0.5]),
        ],
        "two-plus-cos" => {
            let c = || periodic(poly(&[0.0, 2.0]).plus(Component1D::sin(1.0 / tau, tau, 0.0)), vec![]);
            vec![c(), c()]
        }
        "cos-cos" => {
            let c = || periodic(Component1D::cos(-1.0, tau, 0.0), vec![0.0, 0.5]);
            vec![c(), c()]
        }
        "cos-pair" => vec![
            poly(&[1.0]).plus(Component1D::cos(-1.0, 1.0, 0.0)).on_domain(-PI, PI),
            poly(&[-1.0]).plus(Component1D::cos(1.0, 1.0, 0.0)).on_domain(-PI, PI),
        ],
        "quad-saddle" => vec![poly(&[0.0, 0.0, 0.5]), poly(&[0.0, 0.0, -0.5])],
        "quad-unbalanced" => vec![poly(&[0.0, 0.0, 1.0]), poly(&[0.0, 0.0, -1.5])],
        "quartic-saddle" => vec![
            poly(&[0.0, 0.0, 0.5, 0.0, 0.25]),
            poly(&[0.0, 0.0, -0.5, 0.0, -1.0 / 12.0]),
        ],
        "linear-x" => vec![poly(&[0.0, 1.0]), poly(&[0.0])],
        "cap" => vec![poly(&[0.0, 0.0, -0.5]), poly(&[0.0, 0.0, -0.5])],
        "bowl" => vec![poly(&[0.0, 0.0, 0.5]), poly(&[0.0, 0.0, 0.5])],
        _ => return None,
    })
}

fn number(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || Error::InvalidInput(format!("bad number `{s}` in separable spec"));
    if let Some(head) = s.strip_suffix("pi") {
        let k = match head.trim() {
            "" | "+" => 1.0,
            "-" => -1.0,
            h => h.trim_end_matches('*').parse::<f64>().map_err(|_| bad())?,
        };
        return Ok(k * PI);
    }
    s.parse::<f64>().map_err(|_| bad())
}

/// Splits on `sep` outside parentheses.
fn split_top(s: &str, sep: char) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

fn term(s: &str) -> Result<Term> {
    let s = s.trim();
    let bad = || Error::InvalidInput(format!("bad term `{s}` in separable spec"));
    let open = s.find('(').ok_or_else(bad)?;
    let inner = s[open + 1..].strip_suffix(')').ok_or_else(bad)?;
    let args = inner.split(',').map(number).collect::<Result<Vec<f64>>>()?;
    match (&s[..open], args.as_slice()) {
        ("poly", a) if !a.is_empty() => Ok(Term::Poly(a.to_vec())),
        ("cos", &[amp, omega, phase]) => Ok(Term::Cos { amp, omega, phase }),
        ("sin", &[amp, omega, phase]) => Ok(Term::Sin { amp, omega, phase }),
        _ => Err(bad()),
    }
}

fn component(s: &str) -> Result<Component1D> {
    let (body, period) = match s.rsplit_once('@') {
        Some((b, p)) => (b, Some(number(p)?)),
        None => (s, None),
    };
    let terms = split_top(body, '+')
        .into_iter()
        .filter(|t| !t.trim().is_empty())
        .map(term)
        .collect::<Result<Vec<_>>>()?;
    if terms.is_empty() {
        return Err(Error::InvalidInput(format!("empty component `{s}`")));
    }
    let c = Component1D::new(terms);
    Ok(match period {
        Some(p) if p > 0.0 => c.with_period(p),
        Some(p) => return Err(Error::InvalidInput(format!("period must be positive, got {p}"))),
        None => c,
    })
}

/// Parses the part after `separable:`.
pub fn parse_separable(spec: &str) -> Result<Potential> {
    let spec = spec.trim();
    let components = match preset(spec) {
        Some(c) => c,
        None => split_top(spec, '|')
            .into_iter()
            .map(component)
            .collect::<Result<Vec<_>>>()?,
    };
    Ok(make_separable(components)?.with_id(format!("separable:{spec}")))
}

/// Resolves a catalog id, `separable:<spec>` or `grid:<csv path>`.
pub fn from_id(id: &str) -> Result<Potential> {
    if let Some(spec) = id.strip_prefix("separable:") {
        return parse_separable(spec);
    }
    if let Some(path) = id.strip_prefix("grid:") {
        return load_grid_potential(Path::new(path), 3);
    }
    match id {
        "cos-saddle" => Ok(catalog_cos_saddle()),
        "cubic-degenerate" => Ok(catalog_cubic()),
        "counterexample-iii" => catalog_counterexample_iii(),
        "tilted-sine" => Ok(make_separable(vec![
            Component1D::poly(&[0.0, 1.0]),
            Component1D::sin(0.3, 1.0, 0.0),
        ])?
        .with_id("tilted-sine")),
        "plane" => Ok(make_separable(vec![Component1D::poly(&[0.0, 1.0]), Component1D::poly(&[0.0, 1.0])])?
            .with_id("plane")),
        other => Err(Error::InvalidInput(format!(
            "unknown potential `{other}` (see list-potentials)"
        ))),
    }
}
