//! Averaging-error experiments: propagate a system and its phase average
//! side by side for several `ε` and compare time sections.

use std::f64::consts::TAU;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{ensure, Error, Result};
use crate::inclusion::systems::{build, SystemConfig};
use crate::inclusion::{averaged_field, theorem1_constant, PhaseVelocity};
use crate::reach::{propagate_time, ReachOptions, RfSolution};
use crate::sets::{directed_hausdorff, hausdorff, CompactSet, DirectionGrid};

/// Substitute for a zero phase-velocity Lipschitz constant when evaluating
/// the closed-form bound, which needs every argument positive.
pub const LAMBDA_OMEGA_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct ScalingOptions {
    /// Base horizon: each run covers `[0, K·L/ε]`.
    pub l: f64,
    /// Horizon multiplier `K`.
    pub horizon_multiplier: f64,
    pub dt: f64,
    pub h: f64,
    pub seed: u64,
    /// Phase samples used to build the averaged field.
    pub n_phi: usize,
    pub phi0: f64,
    /// Upper bound on recorded sections per run.
    pub max_sections: usize,
}

impl ScalingOptions {
    pub fn new(l: f64, dt: f64, h: f64) -> Self {
        Self {
            l,
            horizon_multiplier: 1.0,
            dt,
            h,
            seed: 0,
            n_phi: 32,
            phi0: 0.0,
            max_sections: 4000,
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn horizon_multiplier(mut self, k: f64) -> Self {
        self.horizon_multiplier = k;
        self
    }

    pub fn n_phi(mut self, n: usize) -> Self {
        self.n_phi = n;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingRow {
    pub eps: f64,
    pub t: f64,
    pub d_h: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingReport {
    pub eps_values: Vec<f64>,
    /// Horizon `K·L/ε` actually covered for each `ε`.
    pub horizons: Vec<f64>,
    /// Largest section gap over the whole horizon.
    pub max_dh: Vec<f64>,
    /// Largest section gap over the base horizon `L/ε`.
    pub max_dh_base: Vec<f64>,
    /// `max_i max_dh[i] / eps[i]`.
    pub fitted_c: f64,
    /// Closed-form constant; `None` when it overflows.
    pub c_bound: Option<f64>,
    /// `max_dh[i + 1] / max_dh[i]`.
    pub ratios: Vec<f64>,
    /// Per-`ε` distance of the averaged funnel's final section to the
    /// declared target (critical point or invariant set), when one is given.
    pub target_distance: Option<Vec<f64>>,
    #[serde(skip)]
    pub rows: Vec<ScalingRow>,
}

impl ScalingReport {
    /// Long `eps,t,dH` table.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["eps", "t", "dH"])?;
        for r in &self.rows {
            out.write_record([
                format!("{:e}", r.eps),
                format!("{:e}", r.t),
                format!("{:e}", r.d_h),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// What the final averaged section is compared with.
enum Target<'a> {
    None,
    Point(&'a [f64]),
    Set(&'a CompactSet),
}

struct PairRun {
    horizon: f64,
    rows: Vec<ScalingRow>,
    max_dh: f64,
    max_dh_base: f64,
    target: Option<f64>,
}

fn run_pair(
    cfg: &SystemConfig,
    eps: f64,
    r0: &CompactSet,
    opts: &ScalingOptions,
    target: &Target,
) -> Result<PairRun> {
    let mut c = cfg.clone();
    c.epsilon = eps;
    let sys = build(&c)?;
    let base = opts.l / eps;
    let horizon = opts.horizon_multiplier * base;
    let steps = (horizon / opts.dt).ceil() as usize;
    let stride = steps.div_ceil(opts.max_sections.max(1)).max(1);
    let ropts = ReachOptions::new(opts.dt, opts.h)
        .seed(opts.seed)
        .stride(stride)
        .domain(sys.domain.clone());
    let original = propagate_time(&sys.field, &sys.omega, r0, opts.phi0, 0.0, horizon, &ropts)?;
    let grid = DirectionGrid::new(sys.dim())?;
    let avg = averaged_field(&sys.field, opts.n_phi, &grid, &r0.centroid())?;
    let averaged = propagate_time(
        &avg,
        &PhaseVelocity::constant(1.0)?,
        r0,
        opts.phi0,
        0.0,
        horizon,
        &ropts,
    )?;
    let rows = matched_gaps(&original, &averaged, eps)?;
    let tol = 1e-9 * horizon;
    let max_dh = rows.iter().map(|r| r.d_h).fold(0.0, f64::max);
    let max_dh_base = rows
        .iter()
        .filter(|r| r.t <= base + tol)
        .map(|r| r.d_h)
        .fold(0.0, f64::max);
    let last = &averaged.last().set;
    let target = match target {
        Target::None => None,
        Target::Point(p) => Some(hausdorff(last, &CompactSet::singleton(p)?)?),
        Target::Set(m) => {
            // Excess of the late sections over the invariant set.
            let late = averaged.slices.iter().filter(|s| s.param >= 0.5 * horizon);
            let mut worst: f64 = 0.0;
            for s in late {
                worst = worst.max(directed_hausdorff(&s.set, m)?);
            }
            Some(worst)
        }
    };
    Ok(PairRun {
        horizon,
        rows,
        max_dh,
        max_dh_base,
        target,
    })
}

/// Section gaps at equal times.
fn matched_gaps(a: &RfSolution, b: &RfSolution, eps: f64) -> Result<Vec<ScalingRow>> {
    ensure(a.slices.len() == b.slices.len(), || {
        "funnels recorded different section counts".into()
    })?;
    a.slices
        .iter()
        .zip(&b.slices)
        .map(|(sa, sb)| {
            Ok(ScalingRow {
                eps,
                t: sa.param,
                d_h: hausdorff(&sa.set, &sb.set)?,
            })
        })
        .collect()
}

fn check_inputs(cfg: &SystemConfig, eps_list: &[f64], opts: &ScalingOptions) -> Result<()> {
    ensure(eps_list.len() >= 2, || {
        "need at least two eps values".into()
    })?;
    ensure(eps_list.iter().all(|e| *e > 0.0), || {
        "eps values must be positive".into()
    })?;
    ensure(eps_list.windows(2).all(|w| w[1] < w[0]), || {
        "eps values must be strictly decreasing".into()
    })?;
    ensure(opts.l > 0.0, || "L must be positive".into())?;
    ensure(opts.dt > 0.0 && opts.h > 0.0, || {
        "dt and h must be positive".into()
    })?;
    let big_m = cfg.omega.as_ref().map_or(1.0, |o| o.big_m);
    let limit = TAU / (8.0 * big_m);
    ensure(opts.dt <= limit, || {
        format!(
            "dt = {} under-resolves the phase rotation; need dt <= 2π/(8M) = {limit}",
            opts.dt
        )
    })
}

fn assemble(
    cfg: &SystemConfig,
    eps_list: &[f64],
    opts: &ScalingOptions,
    runs: Vec<PairRun>,
) -> Result<ScalingReport> {
    let max_dh: Vec<f64> = runs.iter().map(|r| r.max_dh).collect();
    let ratios = max_dh.windows(2).map(|w| w[1] / w[0]).collect();
    let fitted_c = max_dh
        .iter()
        .zip(eps_list)
        .map(|(d, e)| d / e)
        .fold(0.0, f64::max);
    let sys = build(cfg)?;
    let (m, big_m, lw) = match &cfg.omega {
        Some(o) => (o.m, o.big_m, o.lambda_omega),
        None => (1.0, 1.0, 0.0),
    };
    let c_bound = match theorem1_constant(
        m,
        big_m,
        sys.field.bound(),
        sys.field.lipschitz().max(LAMBDA_OMEGA_FLOOR),
        lw.max(LAMBDA_OMEGA_FLOOR),
        opts.l,
    ) {
        Ok(c) => Some(c),
        Err(Error::Unbounded) => None,
        Err(e) => return Err(e),
    };
    let target_distance = if runs.iter().all(|r| r.target.is_some()) {
        Some(runs.iter().map(|r| r.target.unwrap()).collect())
    } else {
        None
    };
    Ok(ScalingReport {
        eps_values: eps_list.to_vec(),
        horizons: runs.iter().map(|r| r.horizon).collect(),
        max_dh,
        max_dh_base: runs.iter().map(|r| r.max_dh_base).collect(),
        fitted_c,
        c_bound,
        ratios,
        target_distance,
        rows: runs.into_iter().flat_map(|r| r.rows).collect(),
    })
}

fn run(
    cfg: &SystemConfig,
    eps_list: &[f64],
    r0: &CompactSet,
    opts: &ScalingOptions,
    target: Target,
) -> Result<ScalingReport> {
    check_inputs(cfg, eps_list, opts)?;
    let runs: Vec<PairRun> = eps_list
        .par_iter()
        .map(|&eps| run_pair(cfg, eps, r0, opts, &target))
        .collect::<Result<_>>()?;
    assemble(cfg, eps_list, opts, runs)
}

/// Section gap between the original and averaged funnels on `[0, L/ε]`
/// for each `ε`.
pub fn run_theorem1(
    cfg: &SystemConfig,
    eps_list: &[f64],
    r0: &CompactSet,
    opts: &ScalingOptions,
) -> Result<ScalingReport> {
    run(cfg, eps_list, r0, opts, Target::None)
}

/// As [`run_theorem1`] over `[0, K·L/ε]` with `K ≥ 4`, also reporting the
/// distance of the averaged funnel's final section to the critical point.
pub fn run_theorem2(
    cfg: &SystemConfig,
    eps_list: &[f64],
    r0: &CompactSet,
    critical_point: &[f64],
    opts: &ScalingOptions,
) -> Result<ScalingReport> {
    ensure(opts.horizon_multiplier >= 4.0, || {
        format!(
            "horizon multiplier must be at least 4, got {}",
            opts.horizon_multiplier
        )
    })?;
    ensure(critical_point.len() == r0.dim(), || {
        "critical point has the wrong dimension".into()
    })?;
    run(cfg, eps_list, r0, opts, Target::Point(critical_point))
}

/// As [`run_theorem2`] with an invariant set: the target distance is the
/// largest excess of the late averaged sections over `invariant`.
pub fn run_theorem3(
    cfg: &SystemConfig,
    eps_list: &[f64],
    r0: &CompactSet,
    invariant: &CompactSet,
    opts: &ScalingOptions,
) -> Result<ScalingReport> {
    ensure(opts.horizon_multiplier >= 4.0, || {
        format!(
            "horizon multiplier must be at least 4, got {}",
            opts.horizon_multiplier
        )
    })?;
    ensure(invariant.dim() == r0.dim(), || {
        "invariant set has the wrong dimension".into()
    })?;
    run(cfg, eps_list, r0, opts, Target::Set(invariant))
}
