use std::collections::VecDeque;
use std::io::Write;

use rand::Rng;
use serde::Serialize;

use super::{gradient, Controller, HybridSystem, FD_STEP};
use crate::error::{ensure, Error, Result};

/// More than this many jumps within one time unit aborts as Zeno.
const ZENO_JUMPS: usize = 100;
/// Guard residual accepted at an event, relative to the guard scale.
const EVENT_TOL: f64 = 1e-10;
/// Smallest `|∇s · ẋ|` accepted at an event.
const MIN_CROSSING_RATE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct SimOptions {
    pub t0: f64,
    pub horizon: f64,
    pub dt: f64,
    pub seed: u64,
    /// Stop right after this many jumps.
    pub max_jumps: Option<usize>,
}

impl SimOptions {
    pub fn new(horizon: f64, dt: f64, seed: u64) -> Self {
        Self {
            t0: 0.0,
            horizon,
            dt,
            seed,
            max_jumps: None,
        }
    }

    pub fn max_jumps(mut self, n: usize) -> Self {
        self.max_jumps = Some(n);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ArcSample {
    pub t: f64,
    pub phi: f64,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
}

/// Flow between two jumps. Only the last sample may lie on the guard.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Segment {
    pub j: usize,
    pub samples: Vec<ArcSample>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Event {
    pub t: f64,
    pub x_minus: Vec<f64>,
    pub x_plus: Vec<f64>,
}

/// Hybrid arc indexed by `(t, j)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HybridArc {
    pub segments: Vec<Segment>,
    pub events: Vec<Event>,
}

impl HybridArc {
    pub fn jumps(&self) -> usize {
        self.events.len()
    }

    /// Samples in `(j, t)` order together with their jump counter.
    pub fn samples(&self) -> impl Iterator<Item = (usize, &ArcSample)> {
        self.segments
            .iter()
            .flat_map(|s| s.samples.iter().map(move |p| (s.j, p)))
    }

    pub fn last(&self) -> &ArcSample {
        self.segments
            .last()
            .and_then(|s| s.samples.last())
            .expect("an arc holds at least its initial sample")
    }

    /// CSV with columns `j, t, phi, x1..xn, u1..um`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let first = &self.segments[0].samples[0];
        let (n, m) = (first.x.len(), first.u.len());
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["j".to_string(), "t".to_string(), "phi".to_string()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        header.extend((1..=m).map(|i| format!("u{i}")));
        out.write_record(&header)?;
        for (j, s) in self.samples() {
            let mut row = vec![j.to_string(), s.t.to_string(), s.phi.to_string()];
            row.extend(s.x.iter().chain(&s.u).map(|v| v.to_string()));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Explicit Euler integration of `ẋ = f_i(x) + G_j(x) u` with a seeded
/// vertex selection `(i, j)` per step and the input held over the step.
/// A sign change of the guard inside a step is located by bisection on the
/// step fraction until `|s| ≤ 1e-10 · scale` (with `scale = max(|s(x0)|, 1)`);
/// the state then jumps to a seeded vertex of `Δ(x⁻)`.
pub fn simulate_hybrid(
    sys: &HybridSystem,
    controller: &Controller,
    x0: &[f64],
    opts: &SimOptions,
) -> Result<HybridArc> {
    ensure(opts.dt > 0.0 && opts.horizon > 0.0, || {
        "need dt > 0 and horizon > 0".into()
    })?;
    ensure(x0.len() == sys.dim(), || {
        "initial state has the wrong dimension".into()
    })?;
    let s0 = sys.guard(x0);
    let scale = s0.abs().max(1.0);
    let tol = EVENT_TOL * scale;
    ensure(s0.abs() > tol, || "initial state lies on the guard".into())?;
    let mut rng = crate::rng::rng(opts.seed);
    let t_end = opts.t0 + opts.horizon;
    let (mut t, mut x) = (opts.t0, x0.to_vec());
    let mut segments = vec![Segment {
        j: 0,
        samples: Vec::new(),
    }];
    let mut events: Vec<Event> = Vec::new();
    let mut recent: VecDeque<f64> = VecDeque::new();
    let sample = |t: f64, x: &[f64], u: Vec<f64>| ArcSample {
        t,
        phi: sys.phase(t, x),
        x: x.to_vec(),
        u,
    };
    while t < t_end - 1e-12 {
        let h = opts.dt.min(t_end - t);
        let u = controller.input(sys, t, &x)?;
        let f = sys.drift(&x)?;
        let g = sys.input_matrices(&x)?;
        let (i, j) = (rng.gen_range(0..f.len()), rng.gen_range(0..g.len()));
        let v = super::velocity_of(f.vertex(i), &g[j], &u);
        let at =
            |tau: f64| -> Vec<f64> { x.iter().zip(&v).map(|(a, b)| a + tau * h * b).collect() };
        let x_new = at(1.0);
        if x_new.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite { param: t + h });
        }
        segments
            .last_mut()
            .unwrap()
            .samples
            .push(sample(t, &x, u.clone()));
        let (sa, sb) = (sys.guard(&x), sys.guard(&x_new));
        if sb != 0.0 && sa.signum() == sb.signum() {
            t += h;
            x = x_new;
            continue;
        }
        // Bisection: `lo` stays on the starting side, `hi` on or past the guard.
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut x_minus = x_new;
        for _ in 0..200 {
            if sys.guard(&x_minus).abs() <= tol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let xm = at(mid);
            if sys.guard(&xm).signum() == sa.signum() && sys.guard(&xm) != 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            x_minus = at(hi);
            if hi - lo <= f64::EPSILON {
                break;
            }
        }
        let t_event = t + hi * h;
        let rate = crate::sets::dot(&gradient(&|z: &[f64]| sys.guard(z), &x_minus, FD_STEP), &v);
        if rate.abs() < MIN_CROSSING_RATE {
            return Err(Error::Grazing {
                t: t_event,
                rate: rate.abs(),
            });
        }
        let image = sys.reset(&x_minus)?;
        let x_plus = image.vertex(rng.gen_range(0..image.len())).to_vec();
        let beating = events.last().is_some_and(|e| t_event - e.t < opts.dt)
            || sys.guard(&x_plus).abs() <= tol;
        if beating {
            return Err(Error::Beating {
                t: t_event,
                x_minus,
                x_plus,
            });
        }
        recent.push_back(t_event);
        while recent.front().is_some_and(|r| t_event - r > 1.0) {
            recent.pop_front();
        }
        if recent.len() > ZENO_JUMPS {
            return Err(Error::Zeno {
                t: t_event,
                jumps: recent.len(),
            });
        }
        segments
            .last_mut()
            .unwrap()
            .samples
            .push(sample(t_event, &x_minus, u));
        events.push(Event {
            t: t_event,
            x_minus,
            x_plus: x_plus.clone(),
        });
        segments.push(Segment {
            j: events.len(),
            samples: Vec::new(),
        });
        t = t_event;
        x = x_plus;
        if opts.max_jumps.is_some_and(|m| events.len() >= m) {
            break;
        }
    }
    let u = controller.input(sys, t, &x)?;
    segments.last_mut().unwrap().samples.push(sample(t, &x, u));
    Ok(HybridArc { segments, events })
}
