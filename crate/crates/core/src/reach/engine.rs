//! Set-valued Euler marching.
//!
//! Each point of the current section fans out into one child per velocity
//! selection (vertex × phase-rate sample). A child keeps its selection index
//! for a short branching interval, long enough for siblings to separate by
//! about `2h`, and the children are then merged into a greedy `h`-net. The
//! points realizing the support function in every grid direction are never
//! pruned, so the hull of the section does not erode from one interval to
//! the next.

use rand::Rng;
use rayon::prelude::*;

use super::{CrossSection, ParamKind, RfSolution};
use crate::error::{ensure, Error, Result};
use crate::inclusion::systems::Domain;
use crate::inclusion::{PhaseVelocity, SetValuedField};
use crate::sets::{prune_retaining, CompactSet, DirectionGrid};

/// Above this many children the per-step update runs on the rayon pool.
const PAR_CHILDREN: usize = 1024;

/// How often selections are re-branched.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branching {
    /// Interval length `ceil(2h / (spread · dt))` steps, where `spread` is
    /// the widest velocity set seen at the interval start.
    Adaptive,
    /// Fan out and prune on every step (the literal one-step union).
    EveryStep,
}

#[derive(Clone, Debug)]
pub struct ReachOptions {
    /// Time step (time runs) or phase step (phase runs).
    pub step: f64,
    /// Net spacing for pruning.
    pub h: f64,
    pub seed: u64,
    pub branching: Branching,
    /// Record every `record_stride`-th step (the final step is always kept).
    pub record_stride: usize,
    pub domain: Option<Domain>,
}

impl ReachOptions {
    pub fn new(step: f64, h: f64) -> Self {
        Self {
            step,
            h,
            seed: 0,
            branching: Branching::Adaptive,
            record_stride: 1,
            domain: None,
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn branching(mut self, b: Branching) -> Self {
        self.branching = b;
        self
    }

    pub fn stride(mut self, stride: usize) -> Self {
        self.record_stride = stride.max(1);
        self
    }

    pub fn domain(mut self, d: Domain) -> Self {
        self.domain = Some(d);
        self
    }

    fn validate(&self) -> Result<()> {
        ensure(self.step > 0.0 && self.step.is_finite(), || {
            format!("step must be positive, got {}", self.step)
        })?;
        ensure(self.h > 0.0 && self.h.is_finite(), || {
            format!("resolution h must be positive, got {}", self.h)
        })
    }
}

/// Directions whose support points survive pruning: the default grid of the
/// first `x_dim` coordinates, plus `±e` for each extra coordinate.
fn retention_dirs(x_dim: usize, z_dim: usize) -> Result<Vec<Vec<f64>>> {
    let grid = DirectionGrid::new(x_dim)?;
    let mut dirs: Vec<Vec<f64>> = grid
        .dirs()
        .map(|d| {
            let mut v = d.to_vec();
            v.resize(z_dim, 0.0);
            v
        })
        .collect();
    for k in x_dim..z_dim {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; z_dim];
            e[k] = s;
            dirs.push(e);
        }
    }
    Ok(dirs)
}

fn support_indices(set: &CompactSet, dirs: &[Vec<f64>]) -> Vec<usize> {
    let mut idx: Vec<usize> = dirs.iter().map(|d| set.support_point(d).0).collect();
    idx.sort_unstable();
    idx.dedup();
    idx
}

pub(crate) fn net(set: &CompactSet, h: f64, dirs: &[Vec<f64>]) -> Result<CompactSet> {
    let keep = support_indices(set, dirs);
    prune_retaining(set, h, &keep)
}

struct Child {
    z: Vec<f64>,
    sel: usize,
}

struct March<'a, R> {
    rates: R,
    z_dim: usize,
    x_dim: usize,
    opts: &'a ReachOptions,
    /// Lower bound on the spread used to size branching intervals.
    spread_floor: f64,
    dirs: Vec<Vec<f64>>,
}

impl<'a, R> March<'a, R>
where
    R: Fn(f64, &[f64]) -> Result<Vec<f64>> + Sync,
{
    fn check(&self, param: f64, z: &[f64]) -> Result<()> {
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { param });
        }
        if let Some(d) = &self.opts.domain {
            if !d.contains(&z[..self.x_dim]) {
                return Err(Error::DomainExit {
                    param,
                    x: z[..self.x_dim].to_vec(),
                });
            }
        }
        Ok(())
    }

    fn advance(&self, children: &mut [Child], p: f64, dt: f64) -> Result<()> {
        let zd = self.z_dim;
        let step = |c: &mut Child| -> Result<()> {
            let r = (self.rates)(p, &c.z)?;
            let n = r.len() / zd;
            let s = c.sel.min(n - 1);
            for (zi, ri) in c.z.iter_mut().zip(&r[s * zd..(s + 1) * zd]) {
                *zi += dt * ri;
            }
            self.check(p + dt, &c.z)
        };
        if children.len() >= PAR_CHILDREN {
            children.par_iter_mut().try_for_each(step)
        } else {
            children.iter_mut().try_for_each(step)
        }
    }

    /// Marches `z0` from `p0` to `p_end`; `record` turns the current point
    /// cloud into a cross-section. Returns the sections, the terminal joint
    /// set and the step actually used.
    fn run(
        &self,
        z0: &CompactSet,
        p0: f64,
        p_end: f64,
        record: impl Fn(f64, &CompactSet) -> Result<CrossSection>,
    ) -> Result<(Vec<CrossSection>, CompactSet, f64)> {
        self.opts.validate()?;
        ensure(p_end > p0, || format!("end {p_end} must exceed start {p0}"))?;
        for z in z0.points() {
            self.check(p0, z)?;
        }
        let n = ((p_end - p0) / self.opts.step - 1e-9).ceil().max(1.0) as usize;
        let dt = (p_end - p0) / n as f64;
        let h = self.opts.h;
        let zd = self.z_dim;
        let mut rng = crate::rng::rng(self.opts.seed);

        let mut cur = net(z0, h, &self.dirs)?;
        let mut slices = vec![record(p0, &cur)?];
        let mut k = 0usize;
        let mut first = true;
        while k < n {
            let p = p0 + k as f64 * dt;
            let pts: Vec<&[f64]> = cur.points().collect();
            let rate_lists: Vec<Vec<f64>> = if pts.len() >= PAR_CHILDREN {
                pts.par_iter()
                    .map(|z| (self.rates)(p, z))
                    .collect::<Result<_>>()?
            } else {
                pts.iter()
                    .map(|z| (self.rates)(p, z))
                    .collect::<Result<_>>()?
            };
            let mut spread: f64 = 0.0;
            let mut children = Vec::new();
            for (z, r) in pts.iter().zip(&rate_lists) {
                let m = r.len() / zd;
                let mut lo = vec![f64::INFINITY; zd];
                let mut hi = vec![f64::NEG_INFINITY; zd];
                let mut seen: Vec<&[f64]> = Vec::with_capacity(m);
                for s in 0..m {
                    let v = &r[s * zd..(s + 1) * zd];
                    for k in 0..zd {
                        lo[k] = lo[k].min(v[k]);
                        hi[k] = hi[k].max(v[k]);
                    }
                    // Selections with identical rates would only duplicate points.
                    if !seen.contains(&v) {
                        seen.push(v);
                        children.push(Child {
                            z: z.to_vec(),
                            sel: s,
                        });
                    }
                }
                let diag = lo
                    .iter()
                    .zip(&hi)
                    .map(|(a, b)| (b - a).powi(2))
                    .sum::<f64>()
                    .sqrt();
                spread = spread.max(diag);
            }
            let remaining = n - k;
            let mut kb = match self.opts.branching {
                Branching::EveryStep => 1,
                Branching::Adaptive => {
                    let s = spread.max(self.spread_floor);
                    ((2.0 * h / (s * dt)).ceil() as usize).clamp(1, remaining)
                }
            };
            // The seed shifts where the first interval ends, so different
            // seeds realize different switching times.
            if first && self.opts.branching == Branching::Adaptive && kb > 1 {
                let u: f64 = rng.gen();
                kb = ((kb as f64 * (0.5 + 0.5 * u)).round() as usize).clamp(1, remaining);
            }
            first = false;

            for _ in 0..kb {
                let p = p0 + k as f64 * dt;
                self.advance(&mut children, p, dt)?;
                k += 1;
                if k % self.opts.record_stride == 0 || k == n {
                    let cloud = cloud_of(&children, zd)?;
                    slices.push(record(p0 + k as f64 * dt, &cloud)?);
                }
            }
            cur = net(&cloud_of(&children, zd)?, h, &self.dirs)?;
        }
        Ok((slices, cur, dt))
    }
}

fn cloud_of(children: &[Child], zd: usize) -> Result<CompactSet> {
    let data = children.iter().flat_map(|c| c.z.iter().copied()).collect();
    CompactSet::from_flat(zd, data, 0.0)
}

/// Reachable sections of `x' ∈ ε X(φ, x)`, `φ' ∈ Ω(x)` from `R0 × {φ0}` over
/// `[t0, t_end]`. Each section stores the state set and the interval hull of
/// the phases reached.
pub fn propagate_time(
    field: &SetValuedField,
    omega: &PhaseVelocity,
    r0: &CompactSet,
    phi0: f64,
    t0: f64,
    t_end: f64,
    opts: &ReachOptions,
) -> Result<RfSolution> {
    ensure(r0.dim() == field.dim(), || {
        format!(
            "initial set has dim {}, field has dim {}",
            r0.dim(),
            field.dim()
        )
    })?;
    let data = r0
        .points()
        .flat_map(|x| x.iter().copied().chain(std::iter::once(phi0)))
        .collect();
    let z0 = CompactSet::from_flat(field.dim() + 1, data, r0.resolution())?;
    propagate_time_joint(field, omega, &z0, t0, t_end, opts)
}

/// As [`propagate_time`], starting from a joint `(x, φ)` cloud (for example
/// the terminal set of an earlier run).
pub fn propagate_time_joint(
    field: &SetValuedField,
    omega: &PhaseVelocity,
    z0: &CompactSet,
    t0: f64,
    t_end: f64,
    opts: &ReachOptions,
) -> Result<RfSolution> {
    let n = field.dim();
    ensure(z0.dim() == n + 1, || "joint set must have dim n + 1".into())?;
    let rates = |_t: f64, z: &[f64]| -> Result<Vec<f64>> {
        let (x, phi) = (&z[..n], z[n]);
        let vel = field.velocities(phi, x);
        let ws = omega.samples(x)?;
        let mut out = Vec::with_capacity(vel.len() * ws.len() * (n + 1));
        for v in vel.vertices() {
            for &w in &ws {
                out.extend_from_slice(v);
                out.push(w);
            }
        }
        Ok(out)
    };
    let march = March {
        rates,
        z_dim: n + 1,
        x_dim: n,
        opts,
        spread_floor: 1e-2 * (field.epsilon() * field.bound()).max(omega.big_m() - omega.m()),
        dirs: retention_dirs(n, n + 1)?,
    };
    let x_dirs = retention_dirs(n, n)?;
    let h = opts.h;
    let record = |t: f64, cloud: &CompactSet| -> Result<CrossSection> {
        let coords: Vec<usize> = (0..n).collect();
        let set = net(&cloud.project(&coords)?, h, &x_dirs)?;
        let (lo, hi) = cloud
            .points()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), z| {
                (a.min(z[n]), b.max(z[n]))
            });
        Ok(CrossSection {
            param: t,
            set,
            phase_window: Some((lo, hi)),
        })
    };
    let (slices, terminal, dt) = march.run(z0, t0, t_end, record)?;
    Ok(RfSolution {
        kind: ParamKind::Time,
        slices,
        step: dt,
        resolution: h,
        seed: opts.seed,
        terminal: Some(terminal),
    })
}

/// Reachable sections of `dx/dφ ∈ X_Φ(φ, x)` over `[φ0, φ_end]`.
pub fn propagate_phase(
    field_phi: &SetValuedField,
    r0: &CompactSet,
    phi0: f64,
    phi_end: f64,
    opts: &ReachOptions,
) -> Result<RfSolution> {
    let n = field_phi.dim();
    ensure(r0.dim() == n, || {
        format!("initial set has dim {}, field has dim {n}", r0.dim())
    })?;
    let rates = |phi: f64, x: &[f64]| -> Result<Vec<f64>> {
        Ok(field_phi.velocities(phi, x).as_flat().to_vec())
    };
    let march = March {
        rates,
        z_dim: n,
        x_dim: n,
        opts,
        spread_floor: 1e-2 * field_phi.epsilon() * field_phi.bound(),
        dirs: retention_dirs(n, n)?,
    };
    let record = |phi: f64, cloud: &CompactSet| -> Result<CrossSection> {
        Ok(CrossSection {
            param: phi,
            set: net(cloud, opts.h, &march.dirs)?,
            phase_window: None,
        })
    };
    let (slices, terminal, dt) = march.run(r0, phi0, phi_end, record)?;
    Ok(RfSolution {
        kind: ParamKind::Phase,
        slices,
        step: dt,
        resolution: opts.h,
        seed: opts.seed,
        terminal: Some(terminal),
    })
}

/// `max_d |<d, z>|`-style helper used by tests: largest coordinate reach.
#[cfg(test)]
fn extent(set: &CompactSet, d: &[f64]) -> f64 {
    set.points()
        .map(|p| crate::sets::dot(p, d))
        .fold(f64::NEG_INFINITY, f64::max)
}
