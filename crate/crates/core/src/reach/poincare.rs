use std::f64::consts::TAU;

use super::{propagate_phase, ReachOptions, RfSolution};
use crate::error::{ensure, Error, Result};
use crate::inclusion::SetValuedField;
use crate::sets::{hausdorff, CompactSet};

/// Adjusts a phase step so that a whole number of steps spans one period.
fn period_options(opts: &ReachOptions) -> ReachOptions {
    let n = (TAU / opts.step - 1e-9).ceil().max(1.0);
    let mut o = opts.clone();
    o.step = TAU / n;
    o
}

/// The set reached after one full phase revolution from `set` at `phi0`.
pub fn poincare_map(
    field_phi: &SetValuedField,
    set: &CompactSet,
    phi0: f64,
    opts: &ReachOptions,
) -> Result<CompactSet> {
    let sol = propagate_phase(field_phi, set, phi0, phi0 + TAU, &period_options(opts))?;
    Ok(sol.last().set.clone())
}

#[derive(Clone, Debug)]
pub struct PeriodicFunnel {
    /// Section at `phi0` of the periodic funnel.
    pub section: CompactSet,
    /// One full revolution starting from `section`.
    pub funnel: RfSolution,
    /// `d_H(S_k, S_{k+1})` for each iterate.
    pub gaps: Vec<f64>,
}

/// Iterates the return map from `r0` until consecutive iterates are within
/// `tol`. `tol` below the pruning floor `2h` cannot be certified.
pub fn periodic_funnel(
    field_phi: &SetValuedField,
    r0: &CompactSet,
    phi0: f64,
    opts: &ReachOptions,
    tol: f64,
    max_iter: usize,
) -> Result<PeriodicFunnel> {
    ensure(tol >= 2.0 * opts.h, || {
        format!(
            "tolerance {tol} is below the pruning floor 2h = {}",
            2.0 * opts.h
        )
    })?;
    ensure(max_iter > 0, || "max_iter must be positive".into())?;
    let opts = period_options(opts);
    let mut cur = r0.clone();
    let mut gaps = Vec::new();
    for _ in 0..max_iter {
        let funnel = propagate_phase(field_phi, &cur, phi0, phi0 + TAU, &opts)?;
        let next = funnel.last().set.clone();
        let gap = hausdorff(&cur, &next)?;
        gaps.push(gap);
        if gap <= tol {
            let funnel = propagate_phase(field_phi, &next, phi0, phi0 + TAU, &opts)?;
            return Ok(PeriodicFunnel {
                section: next,
                funnel,
                gaps,
            });
        }
        cur = next;
    }
    Err(Error::NotConverged { gaps })
}
