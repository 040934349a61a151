use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{finsler_hausdorff, FinslerStructure, PathOptions};
use crate::error::{ensure, Error, Result};
use crate::inclusion::SetValuedField;
use crate::reach::{for_each_window, RfSolution};
use crate::rng::split_seed;
use crate::sets::dist2;

/// Distances below this end the regression window.
const UNDERFLOW: f64 = 1e-12;

/// Euler solutions of `dx/dφ ∈ X_Φ(φ, x)` from `x1` and `x2` sharing one
/// selection sequence (the same vertex index at every step). Returns the
/// phases and pair distances.
pub fn simulate_pair(
    field_phi: &SetValuedField,
    x1: &[f64],
    x2: &[f64],
    phi0: f64,
    phi_span: f64,
    dphi: f64,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    ensure(dphi > 0.0 && phi_span > 0.0, || {
        "need dphi > 0 and phi_span > 0".into()
    })?;
    ensure(
        x1.len() == field_phi.dim() && x2.len() == field_phi.dim(),
        || "dimension mismatch".into(),
    )?;
    let n = (phi_span / dphi - 1e-9).ceil().max(1.0) as usize;
    let dphi = phi_span / n as f64;
    let mut rng = crate::rng::rng(seed);
    let (mut a, mut b) = (x1.to_vec(), x2.to_vec());
    let mut phis = vec![phi0];
    let mut dists = vec![dist2(&a, &b).sqrt()];
    for k in 0..n {
        let phi = phi0 + k as f64 * dphi;
        let (va, vb) = (field_phi.velocities(phi, &a), field_phi.velocities(phi, &b));
        let i = rng.gen_range(0..va.len().max(vb.len()));
        let (sa, sb) = (
            va.vertex(i.min(va.len() - 1)),
            vb.vertex(i.min(vb.len() - 1)),
        );
        for (x, v) in a.iter_mut().zip(sa) {
            *x += dphi * v;
        }
        for (x, v) in b.iter_mut().zip(sb) {
            *x += dphi * v;
        }
        if a.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { param: phi + dphi });
        }
        phis.push(phi0 + (k + 1) as f64 * dphi);
        dists.push(dist2(&a, &b).sqrt());
    }
    Ok((phis, dists))
}

/// Least-squares slope of `ln d` against `φ`, over the prefix where
/// `d ≥ 1e-12`. `None` with fewer than two usable points.
fn decay_exponent(phis: &[f64], dists: &[f64]) -> Option<f64> {
    let m = dists
        .iter()
        .position(|d| *d < UNDERFLOW)
        .unwrap_or(dists.len());
    if m < 2 {
        return None;
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = phis[..m]
        .iter()
        .zip(&dists[..m])
        .map(|(p, d)| (*p, d.ln()))
        .unzip();
    let n = m as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Some(-sxy / sxx)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayReport {
    /// Fitted exponent per usable pair.
    pub exponents: Vec<f64>,
    pub min_exponent: f64,
    pub mean_exponent: f64,
    /// Pairs starting at distance zero, or too short to fit.
    pub excluded_pairs: usize,
    /// Distance-decay rate implied by the certificate: `λ / p` for a linear
    /// rate `λ` on `V ~ F^p`.
    pub claimed_rate: f64,
    /// `min_exponent ≥ claimed_rate - 0.1`.
    pub consistent: bool,
}

/// Fits the exponential decay rate of matched trajectory pairs and compares
/// it with the rate a certificate with linear `α = λ` and power `p` claims.
#[allow(clippy::too_many_arguments)]
pub fn verify_incremental_decay(
    field_phi: &SetValuedField,
    pairs: &[(Vec<f64>, Vec<f64>)],
    phi0: f64,
    phi_span: f64,
    dphi: f64,
    seed: u64,
    lambda_claim: f64,
    p: f64,
) -> Result<DecayReport> {
    ensure(!pairs.is_empty(), || "no pairs given".into())?;
    ensure(p >= 1.0, || "p must be at least 1".into())?;
    let fits: Vec<Option<f64>> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, (a, b))| {
            if dist2(a, b) == 0.0 {
                return Ok(None);
            }
            let (phis, d) = simulate_pair(
                field_phi,
                a,
                b,
                phi0,
                phi_span,
                dphi,
                split_seed(seed, i as u64),
            )?;
            Ok(decay_exponent(&phis, &d))
        })
        .collect::<Result<_>>()?;
    let exponents: Vec<f64> = fits.iter().flatten().copied().collect();
    ensure(!exponents.is_empty(), || "every pair was excluded".into())?;
    let min_exponent = exponents.iter().copied().fold(f64::INFINITY, f64::min);
    let mean_exponent = exponents.iter().sum::<f64>() / exponents.len() as f64;
    let claimed_rate = lambda_claim / p;
    Ok(DecayReport {
        excluded_pairs: pairs.len() - exponents.len(),
        exponents,
        min_exponent,
        mean_exponent,
        claimed_rate,
        consistent: min_exponent >= claimed_rate - 0.1,
    })
}

/// Finsler-Hausdorff distance between the windowed graphs of two
/// phase-parameterized funnels, using `sqrt(δφ² + F(x, δx)²)` on graph
/// coordinates. The supremum is over window centers inside both ranges.
pub fn graph_incremental_distance(
    s1: &RfSolution,
    s2: &RfSolution,
    f: &FinslerStructure,
    eps_g: f64,
    path: &PathOptions,
) -> Result<f64> {
    ensure(eps_g >= 0.0, || "eps_g must be nonnegative".into())?;
    ensure(f.dim() == s1.first().set.dim(), || {
        "structure and funnels differ in dimension".into()
    })?;
    let base = f.clone();
    let graph_f = if f.is_flat() {
        FinslerStructure::flat(f.dim() + 1, move |dx| {
            (dx[0] * dx[0] + base.eval(&dx[1..], &dx[1..]).powi(2)).sqrt()
        })?
    } else {
        FinslerStructure::new(f.dim() + 1, move |x, dx| {
            (dx[0] * dx[0] + base.eval(&x[1..], &dx[1..]).powi(2)).sqrt()
        })?
    };
    let mut worst: Option<f64> = None;
    for_each_window(s1, s2, 0.0, eps_g, 1.0, |g1, g2| {
        let d = finsler_hausdorff(&graph_f, g1, g2, path)?;
        worst = Some(worst.map_or(d, |w: f64| w.max(d)));
        Ok(())
    })?;
    worst.ok_or_else(|| Error::InvalidInput("no window lies inside both phase ranges".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inclusion::VertexSample;
    use crate::reach::{graph_distance, propagate_phase, ReachOptions, TranslationSearch};
    use crate::sets::CompactSet;

    fn linear(a: f64, r: f64) -> SetValuedField {
        SetValuedField::new(1, 5.0, a.abs(), move |_, x| {
            VertexSample::ball_around(&[a * x[0]], r)
        })
        .unwrap()
    }

    fn pairs(n: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
        let mut rng = crate::rng::rng(5);
        (0..n)
            .map(|_| {
                (
                    vec![rng.gen_range(-2.0..2.0)],
                    vec![rng.gen_range(-2.0..2.0)],
                )
            })
            .collect()
    }

    #[test]
    fn contracting_pairs_decay_at_unit_rate() {
        let rep =
            verify_incremental_decay(&linear(-1.0, 0.1), &pairs(20), 0.0, 5.0, 1e-3, 1, 2.0, 2.0)
                .unwrap();
        assert!(rep.consistent);
        assert!((rep.min_exponent - 1.0).abs() < 0.01, "{rep:?}");
    }

    #[test]
    fn expanding_pairs_refute_claim() {
        let rep =
            verify_incremental_decay(&linear(1.0, 0.0), &pairs(5), 0.0, 2.0, 1e-3, 1, 2.0, 2.0)
                .unwrap();
        assert!(rep.min_exponent < 0.0 && !rep.consistent);
    }

    #[test]
    fn identical_pairs_excluded() {
        let mut ps = pairs(3);
        ps.push((vec![0.5], vec![0.5]));
        let rep =
            verify_incremental_decay(&linear(-1.0, 0.0), &ps, 0.0, 1.0, 1e-2, 1, 2.0, 2.0).unwrap();
        assert_eq!(rep.excluded_pairs, 1);
        assert_eq!(rep.exponents.len(), 3);
    }

    #[test]
    fn fit_stops_at_underflow() {
        let phis: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let mut d: Vec<f64> = phis.iter().map(|p| (-2.0 * p).exp()).collect();
        d[6] = 0.0;
        assert!((decay_exponent(&phis, &d).unwrap() - 2.0).abs() < 1e-9);
    }

    fn phase_funnel(x0: f64) -> RfSolution {
        let r0 = CompactSet::singleton(&[x0]).unwrap();
        propagate_phase(
            &linear(-1.0, 0.0),
            &r0,
            0.0,
            4.0,
            &ReachOptions::new(0.05, 1e-3),
        )
        .unwrap()
    }

    #[test]
    fn graph_distance_reductions() {
        let e = FinslerStructure::euclidean(1);
        let a = phase_funnel(0.0);
        let b = phase_funnel(1.0);
        let path = PathOptions::default();
        assert_eq!(
            graph_incremental_distance(&a, &a, &e, 0.1, &path).unwrap(),
            0.0
        );
        let d = graph_incremental_distance(&a, &b, &e, 0.1, &path).unwrap();
        let g = graph_distance(&a, &b, 0.1, &TranslationSearch::None, 1.0).unwrap();
        assert!((d - g.distance).abs() < 1e-12);
    }

    #[test]
    fn late_graphs_are_closer() {
        let e = FinslerStructure::euclidean(1);
        let path = PathOptions::default();
        let (a, b) = (phase_funnel(0.0), phase_funnel(1.0));
        let early = graph_incremental_distance(
            &a.restrict(0.0, 1.0).unwrap(),
            &b.restrict(0.0, 1.0).unwrap(),
            &e,
            0.1,
            &path,
        )
        .unwrap();
        let late = graph_incremental_distance(
            &a.restrict(3.0, 4.0).unwrap(),
            &b.restrict(3.0, 4.0).unwrap(),
            &e,
            0.1,
            &path,
        )
        .unwrap();
        assert!(late <= early * (-2.0f64).exp() + 2e-3, "{early} {late}");
    }

    #[test]
    fn non_flat_structure_runs() {
        let f = FinslerStructure::riemannian(1, |x| vec![1.0 + x[0] * x[0]]).unwrap();
        let (a, b) = (phase_funnel(0.0), phase_funnel(1.0));
        let path = PathOptions {
            n_seg: 4,
            n_opt_iters: 20,
            seed: 0,
        };
        let d = graph_incremental_distance(
            &a.restrict(0.0, 0.5).unwrap(),
            &b.restrict(0.0, 0.5).unwrap(),
            &f,
            0.1,
            &path,
        )
        .unwrap();
        assert!(d.is_finite() && d > 0.0);
        assert!(graph_incremental_distance(
            &a.restrict(0.0, 0.5).unwrap(),
            &b.restrict(3.0, 4.0).unwrap(),
            &f,
            0.1,
            &path
        )
        .is_err());
    }
}
