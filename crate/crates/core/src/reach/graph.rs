use rayon::prelude::*;

use super::{CrossSection, RfSolution};
use crate::error::{ensure, Result};
use crate::sets::{hausdorff, CompactSet};

/// Candidate time shifts applied to the second funnel.
#[derive(Clone, Debug, PartialEq)]
pub enum TranslationSearch {
    None,
    /// Every shift `lo, lo + step, ..., ≤ hi`.
    ConstantGrid {
        lo: f64,
        hi: f64,
        step: f64,
    },
}

impl TranslationSearch {
    fn shifts(&self) -> Result<Vec<f64>> {
        match *self {
            Self::None => Ok(vec![0.0]),
            Self::ConstantGrid { lo, hi, step } => {
                ensure(step > 0.0 && hi >= lo, || {
                    "shift grid needs step > 0 and hi >= lo".into()
                })?;
                let n = ((hi - lo) / step + 1e-9).floor() as usize;
                Ok((0..=n).map(|k| lo + k as f64 * step).collect())
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraphDistance {
    pub distance: f64,
    /// Shift `T` of the second funnel realizing the distance.
    pub shift: f64,
}

/// Graph of the sections whose (shifted) parameter lies within `eps_g` of
/// `center`, as points `(param · scale, x)`. Falls back to the nearest
/// section when the window contains none.
fn window(
    slices: &[CrossSection],
    shift: f64,
    center: f64,
    eps_g: f64,
    scale: f64,
) -> Result<CompactSet> {
    let tol = 1e-9 * (1.0 + center.abs());
    let mut chosen: Vec<&CrossSection> = slices
        .iter()
        .filter(|s| (s.param - shift - center).abs() <= eps_g + tol)
        .collect();
    if chosen.is_empty() {
        let nearest = slices
            .iter()
            .min_by(|a, b| {
                (a.param - shift - center)
                    .abs()
                    .total_cmp(&(b.param - shift - center).abs())
            })
            .expect("nonempty");
        chosen.push(nearest);
    }
    let dim = chosen[0].set.dim() + 1;
    let mut data = Vec::new();
    for s in chosen {
        for x in s.set.points() {
            data.push((s.param - shift) * scale);
            data.extend_from_slice(x);
        }
    }
    CompactSet::from_flat(dim, data, 0.0)
}

/// Calls `visit` with the pair of windowed graphs for every valid center:
/// the parameters of `s1` whose window lies inside the range of `s1` and of
/// `s2` shifted by `shift`.
pub(crate) fn for_each_window(
    s1: &RfSolution,
    s2: &RfSolution,
    shift: f64,
    eps_g: f64,
    scale: f64,
    mut visit: impl FnMut(&CompactSet, &CompactSet) -> Result<()>,
) -> Result<()> {
    let (a0, a1) = (s1.first().param, s1.last().param);
    let (b0, b1) = (s2.first().param, s2.last().param);
    let lo = a0.max(b0 - shift) + eps_g;
    let hi = a1.min(b1 - shift) - eps_g;
    let tol = 1e-9 * (1.0 + lo.abs().max(hi.abs()));
    for c in s1
        .slices
        .iter()
        .map(|s| s.param)
        .filter(|&t| t >= lo - tol && t <= hi + tol)
    {
        let g1 = window(&s1.slices, 0.0, c, eps_g, scale)?;
        let g2 = window(&s2.slices, shift, c, eps_g, scale)?;
        visit(&g1, &g2)?;
    }
    Ok(())
}

/// Windowed graph distance between two funnels: for each shift `T`, the
/// supremum over window centers `t` of the Hausdorff distance between the
/// graphs of `S1` and of `S2(· + T)` over `[t - eps_g, t + eps_g]`, minimized
/// over the shifts. Centers are the parameters of `S1` whose window lies
/// inside both parameter ranges; with no valid center the distance is
/// infinite.
pub fn graph_distance(
    s1: &RfSolution,
    s2: &RfSolution,
    eps_g: f64,
    search: &TranslationSearch,
    scale: f64,
) -> Result<GraphDistance> {
    ensure(eps_g >= 0.0 && scale >= 0.0, || {
        "eps_g and scale must be nonnegative".into()
    })?;
    ensure(s1.first().set.dim() == s2.first().set.dim(), || {
        "funnels differ in dimension".into()
    })?;
    let per_shift = |shift: f64| -> Result<f64> {
        let mut worst = f64::NEG_INFINITY;
        for_each_window(s1, s2, shift, eps_g, scale, |g1, g2| {
            worst = worst.max(hausdorff(g1, g2)?);
            Ok(())
        })?;
        Ok(if worst == f64::NEG_INFINITY {
            f64::INFINITY
        } else {
            worst
        })
    };
    let shifts = search.shifts()?;
    let values: Vec<f64> = shifts
        .par_iter()
        .map(|&t| per_shift(t))
        .collect::<Result<_>>()?;
    let (i, d) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("at least one shift");
    Ok(GraphDistance {
        distance: *d,
        shift: shifts[i],
    })
}
