use std::f64::consts::TAU;

use rand::Rng;

use crate::error::{ensure, Error, Result};
use crate::inclusion::systems::Domain;
use crate::inclusion::{PhaseVelocity, SetValuedField};
use crate::sets::norm;

/// How a trajectory picks its velocity and phase rate on each step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Policy {
    /// Uniform vertex and uniform rate in `Ω(x)`, drawn from the seed.
    Random,
    /// The convex-hull element of least norm, slowest rate.
    MinNorm,
    /// The vertex of largest norm, fastest rate.
    MaxNorm,
    /// Random vertex, always the lowest rate.
    SlowestPhase,
    /// Random vertex, always the highest rate.
    FastestPhase,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub x: Vec<f64>,
    pub phi: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub selection_seed: u64,
}

/// One Euler solution of the inclusion using a per-step selection.
#[allow(clippy::too_many_arguments)]
pub fn sample_trajectory(
    field: &SetValuedField,
    omega: &PhaseVelocity,
    x0: &[f64],
    phi0: f64,
    t0: f64,
    t_end: f64,
    dt: f64,
    seed: u64,
    policy: Policy,
    domain: Option<&Domain>,
) -> Result<Trajectory> {
    ensure(dt > 0.0 && t_end > t0, || {
        "need dt > 0 and t_end > t0".into()
    })?;
    ensure(x0.len() == field.dim(), || {
        "initial state has the wrong dimension".into()
    })?;
    let n = ((t_end - t0) / dt - 1e-9).ceil().max(1.0) as usize;
    let dt = (t_end - t0) / n as f64;
    let mut rng = crate::rng::rng(seed);
    let mut x = x0.to_vec();
    let mut phi = phi0;
    let mut samples = vec![TrajectorySample {
        t: t0,
        x: x.clone(),
        phi,
    }];
    for k in 0..n {
        let vel = field.velocities(phi, &x);
        let (lo, hi) = omega.eval(&x)?;
        let (v, w): (Vec<f64>, f64) = match policy {
            Policy::Random | Policy::SlowestPhase | Policy::FastestPhase => {
                let v = vel.vertex(rng.gen_range(0..vel.len())).to_vec();
                let w = match policy {
                    Policy::SlowestPhase => lo,
                    Policy::FastestPhase => hi,
                    _ if lo < hi => rng.gen_range(lo..=hi),
                    _ => lo,
                };
                (v, w)
            }
            Policy::MinNorm => (min_norm_point(&vel), lo),
            Policy::MaxNorm => {
                let v = vel
                    .vertices()
                    .max_by(|a, b| norm(a).total_cmp(&norm(b)))
                    .expect("nonempty")
                    .to_vec();
                (v, hi)
            }
        };
        for (xi, vi) in x.iter_mut().zip(&v) {
            *xi += dt * vi;
        }
        phi += dt * w;
        let t = t0 + (k + 1) as f64 * dt;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { param: t });
        }
        if let Some(d) = domain {
            if !d.contains(&x) {
                return Err(Error::DomainExit { param: t, x });
            }
        }
        samples.push(TrajectorySample {
            t,
            x: x.clone(),
            phi,
        });
    }
    Ok(Trajectory {
        samples,
        selection_seed: seed,
    })
}

/// Least-norm point of the convex hull of the vertices (exact for
/// collinear and planar hulls, Frank-Wolfe otherwise).
fn min_norm_point(vel: &crate::inclusion::VertexSample) -> Vec<f64> {
    if !vel.is_convex() {
        return vel
            .vertices()
            .min_by(|a, b| norm(a).total_cmp(&norm(b)))
            .expect("nonempty")
            .to_vec();
    }
    crate::sets::ConvexHull::new(&vel.to_set()).nearest_point(&vec![0.0; vel.dim()])
}

/// Times at which the accumulated phase passes `φ0 + 2kπ`.
#[derive(Clone, Debug, PartialEq)]
pub struct RecurrentSequence {
    pub crossings: Vec<f64>,
    pub deltas: Vec<f64>,
}

/// Locates the recurrent times of `traj` by linear interpolation and checks
/// every return time against `[2π/M, 2π/m]` for the given rate bounds.
pub fn recurrent_times(
    traj: &Trajectory,
    phi0: f64,
    m: f64,
    big_m: f64,
) -> Result<RecurrentSequence> {
    let s = &traj.samples;
    ensure(s.len() >= 2, || "trajectory too short".into())?;
    ensure(s.windows(2).all(|w| w[1].phi > w[0].phi), || {
        "phase is not strictly increasing along the trajectory".into()
    })?;
    ensure(s.last().unwrap().phi - s[0].phi >= TAU, || {
        "trajectory covers less than one phase revolution".into()
    })?;
    let mut crossings = Vec::new();
    let mut k = ((s[0].phi - phi0) / TAU).ceil();
    for w in s.windows(2) {
        loop {
            let target = phi0 + k * TAU;
            if target < w[0].phi || target > w[1].phi {
                break;
            }
            let a = (target - w[0].phi) / (w[1].phi - w[0].phi);
            let t = w[0].t + a * (w[1].t - w[0].t);
            if crossings.last().map_or(true, |&c: &f64| t > c) {
                crossings.push(t);
            }
            k += 1.0;
        }
    }
    let deltas: Vec<f64> = crossings.windows(2).map(|w| w[1] - w[0]).collect();
    let tol = 1e-9 * TAU / m;
    for d in &deltas {
        ensure(*d >= TAU / big_m - tol && *d <= TAU / m + tol, || {
            format!(
                "return time {d} outside [2π/M, 2π/m] = [{}, {}]",
                TAU / big_m,
                TAU / m
            )
        })?;
    }
    Ok(RecurrentSequence { crossings, deltas })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inclusion::VertexSample;
    use crate::reach::{propagate_time, ReachOptions};
    use std::f64::consts::PI;

    fn interval_field() -> SetValuedField {
        SetValuedField::new(1, 1.0, 0.0, |_, _| {
            VertexSample::new(1, vec![-1.0, 1.0], true).unwrap()
        })
        .unwrap()
    }

    #[test]
    fn singleton_field_ignores_seed() {
        let f =
            SetValuedField::new(1, 1.0, 1.0, |_, x| VertexSample::singleton(vec![-x[0]])).unwrap();
        let w = PhaseVelocity::constant(1.0).unwrap();
        let a = sample_trajectory(&f, &w, &[1.0], 0.0, 0.0, 1.0, 0.01, 1, Policy::Random, None)
            .unwrap();
        let b = sample_trajectory(&f, &w, &[1.0], 0.0, 0.0, 1.0, 0.01, 2, Policy::Random, None)
            .unwrap();
        assert_eq!(a.samples, b.samples);
    }

    #[test]
    fn min_norm_policy_stays_put() {
        let w = PhaseVelocity::constant(1.0).unwrap();
        let tr = sample_trajectory(
            &interval_field(),
            &w,
            &[0.0],
            0.0,
            0.0,
            1.0,
            0.01,
            0,
            Policy::MinNorm,
            None,
        )
        .unwrap();
        assert!(tr.samples.iter().all(|s| s.x[0] == 0.0));
    }

    #[test]
    fn trajectories_stay_in_funnel() {
        let f = SetValuedField::new(1, 3.0, 1.0, |phi, x| {
            VertexSample::ball_around(&[-x[0] + phi.cos()], 0.2)
        })
        .unwrap();
        let w = PhaseVelocity::interval(1.0, 1.5).unwrap();
        let (dt, h) = (1e-2, 1e-2);
        let r0 = crate::sets::CompactSet::singleton(&[0.3]).unwrap();
        let sol = propagate_time(&f, &w, &r0, 0.0, 0.0, 3.0, &ReachOptions::new(dt, h)).unwrap();
        for seed in [1, 2] {
            let tr = sample_trajectory(
                &f,
                &w,
                &[0.3],
                0.0,
                0.0,
                3.0,
                dt,
                seed,
                Policy::Random,
                None,
            )
            .unwrap();
            for (s, sec) in tr.samples.iter().zip(&sol.slices) {
                assert!((s.t - sec.param).abs() < 1e-9);
                let hull = crate::sets::ConvexHull::new(&sec.set);
                assert!(hull.distance(&s.x) <= 2.0 * h, "t = {}", s.t);
                let (lo, hi) = sec.phase_window.unwrap();
                assert!(s.phi >= lo - 1e-9 && s.phi <= hi + 1e-9);
            }
        }
    }

    #[test]
    fn return_times() {
        let f =
            SetValuedField::new(1, 1.0, 0.0, |_, _| VertexSample::singleton(vec![0.0])).unwrap();
        for (w, expect) in [(1.0, 2.0 * PI), (2.0, PI)] {
            let om = PhaseVelocity::constant(w).unwrap();
            let tr = sample_trajectory(
                &f,
                &om,
                &[0.0],
                0.0,
                0.0,
                20.0,
                1e-3,
                0,
                Policy::Random,
                None,
            )
            .unwrap();
            let seq = recurrent_times(&tr, 0.0, w, w).unwrap();
            assert!(seq.deltas.len() >= 2);
            assert!(seq.deltas.iter().all(|d| (d - expect).abs() < 1e-9));
        }
        let om = PhaseVelocity::interval(1.0, 2.0).unwrap();
        let tr = sample_trajectory(
            &f,
            &om,
            &[0.0],
            0.0,
            0.0,
            30.0,
            1e-2,
            7,
            Policy::Random,
            None,
        )
        .unwrap();
        let seq = recurrent_times(&tr, 0.0, 1.0, 2.0).unwrap();
        assert!(seq
            .deltas
            .iter()
            .all(|d| *d >= PI - 1e-9 && *d <= 2.0 * PI + 1e-9));
    }

    #[test]
    fn non_monotone_phase_rejected() {
        let tr = Trajectory {
            samples: (0..10)
                .map(|k| TrajectorySample {
                    t: k as f64,
                    x: vec![0.0],
                    phi: if k == 5 { 0.0 } else { k as f64 },
                })
                .collect(),
            selection_seed: 0,
        };
        assert!(recurrent_times(&tr, 0.0, 1.0, 1.0).is_err());
    }
}
