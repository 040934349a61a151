//! Named example systems, built from a JSON-compatible description.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{PhaseVelocity, SetValuedField, VertexSample};
use crate::error::{ensure, Error, Result};
use crate::sets::DirectionGrid;

/// Axis-aligned box a run must stay inside.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Domain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        ensure(lo.len() == hi.len() && !lo.is_empty(), || {
            "domain bounds disagree".into()
        })?;
        ensure(lo.iter().zip(&hi).all(|(a, b)| a <= b), || {
            "domain box is empty".into()
        })?;
        Ok(Self { lo, hi })
    }

    pub fn unbounded(dim: usize) -> Self {
        Self {
            lo: vec![f64::NEG_INFINITY; dim],
            hi: vec![f64::INFINITY; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| *a <= *v && *v <= *b)
    }

    /// Largest `|x - c|` over the box.
    pub fn max_offset(&self, c: &[f64]) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .zip(c)
            .map(|((a, b), ci)| (a - ci).abs().max((b - ci).abs()).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaConfig {
    pub m: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
    #[serde(default)]
    pub lambda_omega: f64,
}

/// `{name, params, epsilon, M_X, lambda, omega: {m, M, lambda_omega}, domain}`.
/// Omitted `M_X` and `lambda` are derived from the parameters and domain;
/// omitted `omega` means `Ω ≡ 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default = "one")]
    pub epsilon: f64,
    #[serde(rename = "M_X", default, skip_serializing_if = "Option::is_none")]
    pub m_x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<OmegaConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Vec<[f64; 2]>>,
}

fn one() -> f64 {
    1.0
}

impl SystemConfig {
    pub fn named(name: &str) -> Self {
        Self {
            name: name.to_string(),
            params: BTreeMap::new(),
            epsilon: 1.0,
            m_x: None,
            lambda: None,
            omega: None,
            domain: None,
        }
    }

    pub fn param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }
}

/// A built system: field, phase velocity and domain.
#[derive(Clone, Debug)]
pub struct System {
    pub name: String,
    pub field: SetValuedField,
    pub omega: PhaseVelocity,
    pub domain: Domain,
}

impl System {
    pub fn dim(&self) -> usize {
        self.field.dim()
    }
}

struct Spec {
    name: &'static str,
    params: &'static [(&'static str, f64)],
    summary: &'static str,
}

const SYSTEMS: &[Spec] = &[
    Spec {
        name: "phase-oscillator",
        params: &[("a", 1.0), ("b", 1.0), ("r", 0.1), ("c", 0.0)],
        summary: "x' ∈ {-a(x - c) + b cos φ} + [-r, r]",
    },
    Spec {
        name: "linear-contracting",
        params: &[("a", 1.0), ("r", 0.0), ("c", 0.0), ("dim", 1.0)],
        summary: "x' ∈ {-a(x - c)} + r·(unit cross-polytope) in R^dim",
    },
    Spec {
        name: "expanding",
        params: &[("a", 1.0), ("dim", 1.0)],
        summary: "x' = a x",
    },
    Spec {
        name: "rotation",
        params: &[("rate", 1.0)],
        summary: "x' = rate (-x2, x1)",
    },
    Spec {
        name: "switching-pm",
        params: &[("a", 1.0)],
        summary: "x' ∈ {-a x, +a x} (not convex)",
    },
    Spec {
        name: "interval-velocity",
        params: &[("lo", -1.0), ("hi", 1.0)],
        summary: "x' ∈ [lo, hi]",
    },
    Spec {
        name: "pulsing-interval",
        params: &[("amp", 1.0)],
        summary: "x' ∈ [0, 1 + amp cos φ]",
    },
    Spec {
        name: "rotating-disc",
        params: &[("r", 0.3)],
        summary: "x' ∈ (cos φ, sin φ) + r B",
    },
    Spec {
        name: "pendulum-uncertain-length",
        params: &[
            ("g", 9.81),
            ("l_lo", 0.9),
            ("l_hi", 1.1),
            ("damping", 0.5),
            ("forcing", 0.5),
        ],
        summary: "θ' = ω, ω' ∈ {-(g/l) sin θ - damping ω + forcing cos φ : l ∈ {l_lo, l_hi}}",
    },
];

/// Names of the built-in systems with one-line descriptions.
pub fn available() -> Vec<(&'static str, &'static str)> {
    SYSTEMS.iter().map(|s| (s.name, s.summary)).collect()
}

pub fn build(cfg: &SystemConfig) -> Result<System> {
    let spec = SYSTEMS.iter().find(|s| s.name == cfg.name).ok_or_else(|| {
        let names: Vec<&str> = SYSTEMS.iter().map(|s| s.name).collect();
        Error::InvalidInput(format!(
            "unknown system {:?}; available: {}",
            cfg.name,
            names.join(", ")
        ))
    })?;
    for key in cfg.params.keys() {
        ensure(spec.params.iter().any(|(k, _)| k == key), || {
            let keys: Vec<&str> = spec.params.iter().map(|(k, _)| *k).collect();
            format!(
                "system {} has no parameter {key:?}; accepted: {}",
                spec.name,
                keys.join(", ")
            )
        })?;
    }
    let p = |key: &str| -> f64 {
        cfg.params.get(key).copied().unwrap_or_else(|| {
            spec.params
                .iter()
                .find(|(k, _)| *k == key)
                .map(|(_, v)| *v)
                .expect("declared default")
        })
    };
    let dim_param = |key: &str| -> Result<usize> {
        let d = p(key);
        ensure(d >= 1.0 && d.fract() == 0.0, || {
            format!("dim must be a positive integer, got {d}")
        })?;
        Ok(d as usize)
    };

    let dim = match spec.name {
        "linear-contracting" | "expanding" => dim_param("dim")?,
        "rotation" | "rotating-disc" | "pendulum-uncertain-length" => 2,
        _ => 1,
    };
    let domain = match &cfg.domain {
        Some(b) => {
            ensure(b.len() == dim, || {
                format!("domain has {} intervals, system has dim {dim}", b.len())
            })?;
            Domain::new(
                b.iter().map(|i| i[0]).collect(),
                b.iter().map(|i| i[1]).collect(),
            )?
        }
        None if spec.name == "pendulum-uncertain-length" => {
            Domain::new(vec![-PI, -10.0], vec![PI, 10.0])?
        }
        None => Domain::new(vec![-2.0; dim], vec![2.0; dim])?,
    };

    // (bound, lipschitz, eval)
    let (bound, lip, field): (
        f64,
        f64,
        Box<dyn Fn(f64, &[f64]) -> VertexSample + Send + Sync>,
    ) = match spec.name {
        "phase-oscillator" => {
            let (a, b, r, c) = (p("a"), p("b"), p("r"), p("c"));
            ensure(r >= 0.0, || "r must be nonnegative".into())?;
            let bound = a.abs() * domain.max_offset(&[c]) + b.abs() + r;
            (
                bound,
                a.abs(),
                Box::new(move |phi, x| {
                    let v = -a * (x[0] - c) + b * phi.cos();
                    VertexSample::ball_around(&[v], r)
                }),
            )
        }
        "linear-contracting" => {
            let (a, r, c) = (p("a"), p("r"), p("c"));
            ensure(r >= 0.0, || "r must be nonnegative".into())?;
            let bound = a.abs() * domain.max_offset(&vec![c; dim]) + r;
            (
                bound,
                a.abs(),
                Box::new(move |_, x| {
                    let v: Vec<f64> = x.iter().map(|xi| -a * (xi - c)).collect();
                    VertexSample::ball_around(&v, r)
                }),
            )
        }
        "expanding" => {
            let a = p("a");
            let bound = a.abs() * domain.max_offset(&vec![0.0; dim]);
            (
                bound,
                a.abs(),
                Box::new(move |_, x| VertexSample::singleton(x.iter().map(|xi| a * xi).collect())),
            )
        }
        "rotation" => {
            let w = p("rate");
            let bound = w.abs() * domain.max_offset(&[0.0, 0.0]);
            (
                bound,
                w.abs(),
                Box::new(move |_, x| VertexSample::singleton(vec![-w * x[1], w * x[0]])),
            )
        }
        "switching-pm" => {
            let a = p("a");
            let bound = a.abs() * domain.max_offset(&[0.0]);
            (
                bound,
                a.abs(),
                Box::new(move |_, x| {
                    VertexSample::new(1, vec![-a * x[0], a * x[0]], false).expect("finite")
                }),
            )
        }
        "interval-velocity" => {
            let (lo, hi) = (p("lo"), p("hi"));
            ensure(lo <= hi, || format!("interval [{lo}, {hi}] is empty"))?;
            (
                lo.abs().max(hi.abs()),
                0.0,
                Box::new(move |_, _| VertexSample::new(1, vec![lo, hi], true).expect("finite")),
            )
        }
        "pulsing-interval" => {
            let amp = p("amp");
            (
                1.0 + amp.abs(),
                0.0,
                Box::new(move |phi, _| {
                    VertexSample::new(1, vec![0.0, 1.0 + amp * phi.cos()], true).expect("finite")
                }),
            )
        }
        "rotating-disc" => {
            let r = p("r");
            ensure(r >= 0.0, || "r must be nonnegative".into())?;
            let grid = DirectionGrid::new(2)?;
            (
                1.0 + r,
                0.0,
                Box::new(move |phi, _| {
                    let (s, c) = phi.sin_cos();
                    let data = grid
                        .dirs()
                        .flat_map(|d| [c + r * d[0], s + r * d[1]])
                        .collect();
                    VertexSample::new(2, data, true).expect("finite")
                }),
            )
        }
        "pendulum-uncertain-length" => {
            let (g, l_lo, l_hi, damp, forcing) =
                (p("g"), p("l_lo"), p("l_hi"), p("damping"), p("forcing"));
            ensure(0.0 < l_lo && l_lo <= l_hi, || {
                "need 0 < l_lo <= l_hi".into()
            })?;
            let w_max = domain.lo[1].abs().max(domain.hi[1].abs());
            let bound = (w_max.powi(2) + (g / l_lo + damp * w_max + forcing.abs()).powi(2)).sqrt();
            let lip = 1.0 + g / l_lo + damp.abs();
            (
                bound,
                lip,
                Box::new(move |phi, x| {
                    let rows: Vec<f64> = [l_lo, l_hi]
                        .iter()
                        .flat_map(|l| {
                            [
                                x[1],
                                -(g / l) * x[0].sin() - damp * x[1] + forcing * phi.cos(),
                            ]
                        })
                        .collect();
                    VertexSample::new(2, rows, true).expect("finite")
                }),
            )
        }
        other => unreachable!("system {other} listed without a constructor"),
    };

    let bound = cfg.m_x.unwrap_or(bound);
    let lip = cfg.lambda.unwrap_or(lip);
    let field = SetValuedField::new(dim, bound.max(f64::MIN_POSITIVE), lip, field)?
        .with_epsilon(cfg.epsilon)?;
    let omega = match &cfg.omega {
        Some(o) => {
            ensure(o.lambda_omega >= 0.0, || {
                "lambda_omega must be nonnegative".into()
            })?;
            PhaseVelocity::new(o.m, o.big_m, o.lambda_omega, {
                let (lo, hi) = (o.m, o.big_m);
                move |_| (lo, hi)
            })?
        }
        None => PhaseVelocity::constant(1.0)?,
    };
    Ok(System {
        name: spec.name.to_string(),
        field,
        omega,
        domain,
    })
}
