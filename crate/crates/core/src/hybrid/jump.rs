use rand::Rng;
use serde::Serialize;

use crate::error::{ensure, Error, Result};
use crate::inclusion::VertexSample;
use crate::sets::{CompactSet, ConvexHull, DirectionGrid};

/// Phase-indexed funnel `F_c(φ)` over `[φ_s, φ_e]` for a system with jumps,
/// with phase and state slack `ε_φ`, `ε_F` for the jump condition. Sections
/// must cover `[φ_s − ε_φ, φ_e + ε_φ]`; between sections the hull is the
/// Minkowski combination of the neighbouring hulls.
#[derive(Clone, Debug)]
pub struct Funnel {
    phis: Vec<f64>,
    sets: Vec<CompactSet>,
    hulls: Vec<ConvexHull>,
    pub phi_s: f64,
    pub phi_e: f64,
    pub eps_phi: f64,
    pub eps_f: f64,
}

/// Slack when comparing phases against the covered range.
const PHASE_TOL: f64 = 1e-9;

impl Funnel {
    pub fn new(
        slices: Vec<(f64, CompactSet)>,
        phi_s: f64,
        phi_e: f64,
        eps_phi: f64,
        eps_f: f64,
    ) -> Result<Self> {
        ensure(slices.len() >= 2, || {
            "a funnel needs at least two sections".into()
        })?;
        ensure(slices.windows(2).all(|w| w[1].0 > w[0].0), || {
            "section phases must increase".into()
        })?;
        ensure(phi_s < phi_e, || "need phi_s < phi_e".into())?;
        ensure(eps_phi >= 0.0 && eps_f >= 0.0, || {
            "eps_phi and eps_F must be nonnegative".into()
        })?;
        let dim = slices[0].1.dim();
        ensure(slices.iter().all(|s| s.1.dim() == dim), || {
            "sections differ in dimension".into()
        })?;
        let (lo, hi) = (slices[0].0, slices.last().unwrap().0);
        ensure(
            lo <= phi_s - eps_phi + PHASE_TOL && hi >= phi_e + eps_phi - PHASE_TOL,
            || {
                format!(
                    "sections cover [{lo}, {hi}], not [{}, {}]",
                    phi_s - eps_phi,
                    phi_e + eps_phi
                )
            },
        )?;
        let hulls = slices.iter().map(|s| ConvexHull::new(&s.1)).collect();
        let (phis, sets) = slices.into_iter().unzip();
        Ok(Self {
            phis,
            sets,
            hulls,
            phi_s,
            phi_e,
            eps_phi,
            eps_f,
        })
    }

    /// `F_c(φ) ≡ set` on the covered range.
    pub fn constant(
        set: CompactSet,
        phi_s: f64,
        phi_e: f64,
        eps_phi: f64,
        eps_f: f64,
    ) -> Result<Self> {
        Self::new(
            vec![(phi_s - eps_phi, set.clone()), (phi_e + eps_phi, set)],
            phi_s,
            phi_e,
            eps_phi,
            eps_f,
        )
    }

    pub fn dim(&self) -> usize {
        self.sets[0].dim()
    }

    /// Covered phase range.
    pub fn phase_range(&self) -> (f64, f64) {
        (self.phis[0], *self.phis.last().unwrap())
    }

    pub fn sections(&self) -> impl Iterator<Item = (f64, &CompactSet)> {
        self.phis.iter().copied().zip(&self.sets)
    }

    /// Largest section resolution.
    pub fn resolution(&self) -> f64 {
        self.sets.iter().map(|s| s.resolution()).fold(0.0, f64::max)
    }

    pub fn hull_at(&self, phi: f64) -> Result<ConvexHull> {
        let (lo, hi) = self.phase_range();
        if !(phi >= lo - PHASE_TOL && phi <= hi + PHASE_TOL) {
            return Err(Error::InvalidInput(format!(
                "phase {phi} lies outside the funnel range [{lo}, {hi}]"
            )));
        }
        let k = self
            .phis
            .partition_point(|q| *q <= phi)
            .saturating_sub(1)
            .min(self.phis.len() - 2);
        let (a, b) = (self.phis[k], self.phis[k + 1]);
        let s = ((phi - a) / (b - a)).clamp(0.0, 1.0);
        if s <= 1e-12 {
            return Ok(self.hulls[k].clone());
        }
        if s >= 1.0 - 1e-12 {
            return Ok(self.hulls[k + 1].clone());
        }
        // Hull of pairwise vertex combinations: (1 - s) A + s B.
        let (va, vb) = (self.hulls[k].vertices(), self.hulls[k + 1].vertices());
        let mut data = Vec::with_capacity(va.len() * vb.len() * self.dim());
        for p in va {
            for q in vb {
                data.extend(p.iter().zip(q).map(|(x, y)| (1.0 - s) * x + s * y));
            }
        }
        let res = self.sets[k].resolution().max(self.sets[k + 1].resolution());
        Ok(ConvexHull::new(&CompactSet::from_flat(
            self.dim(),
            data,
            res,
        )?))
    }

    /// Euclidean distance from `x` to `conv F_c(φ)`.
    pub fn distance(&self, phi: f64, x: &[f64]) -> Result<f64> {
        Ok(self.hull_at(phi)?.distance(x))
    }

    pub fn contains(&self, phi: f64, x: &[f64], tol: f64) -> Result<bool> {
        Ok(self.distance(phi, x)? <= tol)
    }
}

/// Sampling density for [`funnel_jump_consistency`].
#[derive(Clone, Debug, PartialEq)]
pub struct JumpGrid {
    /// Phases sampled in each of the pre-jump and landing windows.
    pub n_phi: usize,
    /// Seeded interior points per pre-jump phase, on top of the inflated
    /// hull vertices.
    pub n_interior: usize,
    pub seed: u64,
}

impl Default for JumpGrid {
    fn default() -> Self {
        Self {
            n_phi: 5,
            n_interior: 32,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JumpWitness {
    pub phi_pre: f64,
    pub phi_land: f64,
    pub x_pre: Vec<f64>,
    pub x_land: Vec<f64>,
    /// Depth of the landing point inside the target section (negative
    /// outside).
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JumpReport {
    pub consistent: bool,
    /// Smallest depth of a landing point inside its target section.
    pub margin: f64,
    pub checked: usize,
    pub worst: JumpWitness,
}

fn window(center: f64, eps: f64, n: usize) -> Vec<f64> {
    if n <= 1 || eps == 0.0 {
        return vec![center];
    }
    (0..n)
        .map(|i| center - eps + 2.0 * eps * i as f64 / (n - 1) as f64)
        .collect()
}

/// Checks `Δ(F_c(φ_e + ε_φ B) + ε_F B) ⊂ F_c(φ)` for `φ ∈ φ_s + ε_φ B` on
/// samples. The pre-jump set at each sampled phase is the section hull
/// inflated by `ε_φ + ε_F`, which covers the `ε_φ`-neighbourhood of the
/// funnel graph as well as the state slack. Every sample is pushed through
/// every reset vertex and must land in the hull of every sampled landing
/// section.
pub fn funnel_jump_consistency(
    funnel: &Funnel,
    reset: impl Fn(&[f64]) -> VertexSample,
    grid: &JumpGrid,
) -> Result<JumpReport> {
    ensure(grid.n_phi > 0, || "n_phi must be positive".into())?;
    let dim = funnel.dim();
    let dirs = DirectionGrid::new(dim)?;
    let r = funnel.eps_phi + funnel.eps_f;
    let landing: Vec<(f64, ConvexHull)> = window(funnel.phi_s, funnel.eps_phi, grid.n_phi)
        .into_iter()
        .map(|p| Ok((p, funnel.hull_at(p)?)))
        .collect::<Result<_>>()?;
    let mut rng = crate::rng::rng(grid.seed);
    let mut worst: Option<JumpWitness> = None;
    let mut checked = 0;
    for phi_pre in window(funnel.phi_e, funnel.eps_phi, grid.n_phi) {
        let hull = funnel.hull_at(phi_pre)?;
        let verts = hull.vertices();
        let mut points: Vec<Vec<f64>> = Vec::new();
        for v in verts {
            for d in dirs.dirs() {
                points.push(v.iter().zip(d).map(|(a, b)| a + r * b).collect());
            }
        }
        for _ in 0..grid.n_interior {
            let w: Vec<f64> = verts.iter().map(|_| rng.gen::<f64>()).collect();
            let total: f64 = w.iter().sum::<f64>().max(f64::MIN_POSITIVE);
            let d = dirs.dir(rng.gen_range(0..dirs.count()));
            let rad = r * rng.gen::<f64>();
            let p = (0..dim)
                .map(|k| {
                    verts
                        .iter()
                        .zip(&w)
                        .map(|(v, wi)| v[k] * wi / total)
                        .sum::<f64>()
                        + rad * d[k]
                })
                .collect();
            points.push(p);
        }
        for x in &points {
            let image = reset(x);
            ensure(image.dim() == dim, || "reset changed the dimension".into())?;
            for y in image.vertices() {
                for (phi_land, target) in &landing {
                    checked += 1;
                    let margin = -target.signed_distance(y);
                    if worst.as_ref().map_or(true, |w| margin < w.margin) {
                        worst = Some(JumpWitness {
                            phi_pre,
                            phi_land: *phi_land,
                            x_pre: x.clone(),
                            x_land: y.to_vec(),
                            margin,
                        });
                    }
                }
            }
        }
    }
    let worst = worst.expect("at least one sample is checked");
    Ok(JumpReport {
        consistent: worst.margin >= 0.0,
        margin: worst.margin,
        checked,
        worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn unit_interval() -> Funnel {
        Funnel::constant(
            CompactSet::new(1, &[vec![-1.0], vec![1.0]]).unwrap(),
            0.0,
            TAU,
            0.1,
            0.1,
        )
        .unwrap()
    }

    #[test]
    fn halving_reset_is_consistent() {
        let rep = funnel_jump_consistency(
            &unit_interval(),
            |x| VertexSample::singleton(vec![x[0] / 2.0]),
            &JumpGrid::default(),
        )
        .unwrap();
        assert!(rep.consistent);
        assert!((rep.margin - 0.4).abs() < 1e-12, "{rep:?}");
    }

    #[test]
    fn doubling_reset_is_not() {
        let rep = funnel_jump_consistency(
            &unit_interval(),
            |x| VertexSample::singleton(vec![2.0 * x[0]]),
            &JumpGrid::default(),
        )
        .unwrap();
        assert!(!rep.consistent && rep.margin < 0.0);
        assert!((rep.worst.x_land[0].abs() - 2.4).abs() < 1e-12);
    }

    #[test]
    fn set_valued_reset() {
        let rep = funnel_jump_consistency(
            &unit_interval(),
            |x| VertexSample::new(1, vec![x[0] / 2.0 - 0.05, x[0] / 2.0 + 0.05], true).unwrap(),
            &JumpGrid::default(),
        )
        .unwrap();
        assert!(rep.consistent);
        assert!((rep.margin - 0.35).abs() < 1e-12);
    }

    fn box_at(c: f64, w: f64) -> CompactSet {
        CompactSet::new(
            2,
            &[
                vec![c - w, -w],
                vec![c + w, -w],
                vec![c + w, w],
                vec![c - w, w],
            ],
        )
        .unwrap()
    }

    #[test]
    fn interpolates_between_sections() {
        let f = Funnel::new(
            vec![(0.0, box_at(0.0, 1.0)), (1.0, box_at(2.0, 0.5))],
            0.1,
            0.9,
            0.1,
            0.0,
        )
        .unwrap();
        let h = f.hull_at(0.5).unwrap();
        // Midway: center 1, half-width 0.75.
        assert!(h.contains(&[1.75, 0.75], 1e-12));
        assert!(!h.contains(&[1.8, 0.0], 1e-3));
        assert!(f.hull_at(1.5).is_err());
        assert!((f.distance(1.0, &[2.0, 1.0]).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_short_coverage() {
        let err = Funnel::new(
            vec![(0.0, box_at(0.0, 1.0)), (1.0, box_at(0.0, 1.0))],
            0.0,
            1.0,
            0.1,
            0.0,
        );
        assert!(err.is_err());
    }
}
