//! Integral funnels (reachable-set sections) in time and in phase,
//! single-selection trajectories, Poincaré maps and graph distances.

mod engine;
mod graph;
pub mod io;
mod poincare;
mod trajectory;

pub use engine::{propagate_phase, propagate_time, propagate_time_joint, Branching, ReachOptions};
pub use graph::{graph_distance, GraphDistance, TranslationSearch};
pub use poincare::{periodic_funnel, poincare_map, PeriodicFunnel};
pub use trajectory::{recurrent_times, sample_trajectory, Policy, RecurrentSequence, Trajectory};

pub(crate) use graph::for_each_window;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::sets::{hausdorff, CompactSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamKind {
    Time,
    Phase,
}

/// One section of a funnel. Time-parameterized sections also carry the
/// interval hull of the accumulated phases reached at that time.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossSection {
    pub param: f64,
    pub set: CompactSet,
    pub phase_window: Option<(f64, f64)>,
}

/// A computed funnel: sections at strictly increasing parameters.
#[derive(Clone, Debug)]
pub struct RfSolution {
    pub kind: ParamKind,
    pub slices: Vec<CrossSection>,
    pub step: f64,
    pub resolution: f64,
    pub seed: u64,
    /// Unpruned-to-projection state at the final parameter (joint `(x, φ)`
    /// for time runs), for continuing a run.
    pub terminal: Option<CompactSet>,
}

impl RfSolution {
    pub fn first(&self) -> &CrossSection {
        &self.slices[0]
    }

    pub fn last(&self) -> &CrossSection {
        self.slices
            .last()
            .expect("a funnel has at least one section")
    }

    pub fn params(&self) -> Vec<f64> {
        self.slices.iter().map(|s| s.param).collect()
    }

    /// Section whose parameter is nearest `p`.
    pub fn nearest(&self, p: f64) -> &CrossSection {
        let i = self.slices.partition_point(|s| s.param < p);
        match (i.checked_sub(1), self.slices.get(i)) {
            (Some(j), Some(s)) if (self.slices[j].param - p).abs() <= (s.param - p).abs() => {
                &self.slices[j]
            }
            (_, Some(s)) => s,
            (Some(j), None) => &self.slices[j],
            (None, None) => unreachable!("nonempty"),
        }
    }

    /// Sections with parameter in `[lo, hi]`.
    pub fn restrict(&self, lo: f64, hi: f64) -> Result<Self> {
        let slices: Vec<CrossSection> = self
            .slices
            .iter()
            .filter(|s| s.param >= lo && s.param <= hi)
            .cloned()
            .collect();
        crate::error::ensure(!slices.is_empty(), || {
            format!("no sections in [{lo}, {hi}]")
        })?;
        Ok(Self {
            slices,
            terminal: None,
            ..self.clone()
        })
    }

    /// Largest Hausdorff gap between consecutive recorded sections.
    pub fn max_consecutive_gap(&self) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for w in self.slices.windows(2) {
            worst = worst.max(hausdorff(&w[0].set, &w[1].set)?);
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inclusion::{PhaseVelocity, SetValuedField, VertexSample};
    use crate::sets::DirectionGrid;
    use proptest::prelude::*;

    fn linear(a: f64, r: f64) -> SetValuedField {
        SetValuedField::new(1, 3.0, a.abs(), move |_, x| {
            VertexSample::ball_around(&[-a * x[0]], r)
        })
        .unwrap()
    }

    #[test]
    fn nearest_section_lookup() {
        let f = linear(1.0, 0.0);
        let w = PhaseVelocity::constant(1.0).unwrap();
        let r0 = CompactSet::singleton(&[1.0]).unwrap();
        let sol =
            propagate_time(&f, &w, &r0, 0.0, 0.0, 1.0, &ReachOptions::new(0.1, 0.01)).unwrap();
        assert!((sol.nearest(0.31).param - 0.3).abs() < 1e-9);
        assert!((sol.nearest(-5.0).param).abs() < 1e-12);
        assert!((sol.nearest(5.0).param - 1.0).abs() < 1e-12);
    }

    #[test]
    fn consecutive_sections_are_close() {
        let eps = 0.5;
        let f = linear(1.0, 0.2).with_epsilon(eps).unwrap();
        let w = PhaseVelocity::constant(1.0).unwrap();
        let r0 = CompactSet::interval(-0.5, 0.5, 0.05).unwrap();
        let (dt, h) = (1e-2, 1e-2);
        let sol = propagate_time(&f, &w, &r0, 0.0, 0.0, 2.0, &ReachOptions::new(dt, h)).unwrap();
        let bound = (f.bound() * eps + 1.0) * dt + 2.0 * h;
        assert!(sol.max_consecutive_gap().unwrap() <= bound);
    }

    /// Halving (dt, h) should roughly halve the gap to the closed-form
    /// section `[e^{-t}x0 - r(1 - e^{-t}), e^{-t}x0 + r(1 - e^{-t})]`.
    #[test]
    fn refinement_halves_gap_to_closed_form() {
        let r = 0.3;
        let f = linear(1.0, r);
        let w = PhaseVelocity::constant(1.0).unwrap();
        let r0 = CompactSet::singleton(&[1.0]).unwrap();
        let gap = |dt: f64, h: f64| {
            let sol =
                propagate_time(&f, &w, &r0, 0.0, 0.0, 1.0, &ReachOptions::new(dt, h)).unwrap();
            let e = (-1f64).exp();
            let exact = CompactSet::interval(e - r * (1.0 - e), e + r * (1.0 - e), 1e-5).unwrap();
            hausdorff(&sol.last().set, &exact).unwrap()
        };
        let g1 = gap(4e-3, 2e-2);
        let g2 = gap(2e-3, 1e-2);
        assert!(g2 <= 0.6 * g1, "g1 = {g1}, g2 = {g2}");
    }

    #[test]
    fn monotone_in_initial_set() {
        let f = linear(1.0, 0.1);
        let w = PhaseVelocity::constant(1.0).unwrap();
        let small = CompactSet::interval(0.0, 0.3, 0.01).unwrap();
        let big = CompactSet::interval(-0.2, 0.6, 0.01).unwrap();
        let h = 5e-3;
        let opts = ReachOptions::new(1e-2, h).stride(10);
        let a = propagate_time(&f, &w, &small, 0.0, 0.0, 2.0, &opts).unwrap();
        let b = propagate_time(&f, &w, &big, 0.0, 0.0, 2.0, &opts).unwrap();
        for (sa, sb) in a.slices.iter().zip(&b.slices) {
            let excess = crate::sets::directed_hausdorff(&sa.set, &sb.set).unwrap();
            assert!(excess <= 2.0 * h, "t = {}: {excess}", sa.param);
        }
    }

    #[test]
    fn two_dimensional_disturbed_contraction() {
        let grid = DirectionGrid::new(2).unwrap();
        let f = SetValuedField::new(2, 3.0, 1.0, move |_, x| {
            let data = grid
                .dirs()
                .flat_map(|d| [-x[0] + 0.2 * d[0], -x[1] + 0.2 * d[1]])
                .collect();
            VertexSample::new(2, data, true).unwrap()
        })
        .unwrap();
        let w = PhaseVelocity::constant(1.0).unwrap();
        let r0 = CompactSet::singleton(&[1.0, 0.0]).unwrap();
        let h = 0.02;
        let sol = propagate_time(
            &f,
            &w,
            &r0,
            0.0,
            0.0,
            3.0,
            &ReachOptions::new(1e-2, h).stride(50),
        )
        .unwrap();
        // Exact section: disc of radius 0.2(1 - e^{-t}) around e^{-t}(1, 0).
        let t = 3.0f64;
        let c = (-t).exp();
        let rad = 0.2 * (1.0 - c);
        let exact = CompactSet::circle([c, 0.0], rad, 400).unwrap();
        let last = &sol.last().set;
        let hull = crate::sets::ConvexHull::new(last);
        let outward = exact.points().map(|p| hull.distance(p)).fold(0.0, f64::max);
        assert!(outward <= 2.0 * h + 0.02, "outward gap {outward}");
        assert!(last
            .points()
            .all(|p| ((p[0] - c).powi(2) + p[1] * p[1]).sqrt() <= rad + 2.0 * h));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn seeds_give_matching_funnels(seed_a in 0u64..1000, seed_b in 0u64..1000, r in 0.05f64..0.5) {
            let f = linear(1.0, r).with_epsilon(0.5).unwrap();
            let w = PhaseVelocity::constant(1.0).unwrap();
            let r0 = CompactSet::interval(-0.2, 0.2, 0.02).unwrap();
            let h = 5e-3;
            let a = propagate_time(&f, &w, &r0, 0.0, 0.0, 2.0, &ReachOptions::new(1e-2, h).seed(seed_a)).unwrap();
            let b = propagate_time(&f, &w, &r0, 0.0, 0.0, 2.0, &ReachOptions::new(1e-2, h).seed(seed_b)).unwrap();
            for (sa, sb) in a.slices.iter().zip(&b.slices) {
                prop_assert!(hausdorff(&sa.set, &sb.set).unwrap() <= 2.0 * h);
            }
        }
    }
}
