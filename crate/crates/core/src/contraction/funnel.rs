use std::f64::consts::TAU;

use serde::Serialize;

use super::{
    margin_samples, BoundaryWitness, CertStatus, CertificateReport, FinslerCandidate,
    InvarianceReport, LieOptions, TangentSampler,
};
use crate::error::{ensure, Result};
use crate::inclusion::SetValuedField;
use crate::reach::RfSolution;
use crate::sets::{hausdorff, minkowski_combination, CompactSet, ConvexHull};

#[derive(Clone, Debug)]
pub struct ConeOptions {
    /// Decreasing positive step lengths.
    pub h_list: Vec<f64>,
    pub tol: f64,
}

impl Default for ConeOptions {
    fn default() -> Self {
        Self {
            h_list: (0..8).map(|k| 1e-1 * 0.5f64.powi(k)).collect(),
            tol: 1e-2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConeTest {
    /// `v` lies in the contingent cone at `x`.
    pub tangent: bool,
    /// `x` is interior, where the cone is the whole space.
    pub interior: bool,
    /// `d(x + h v, S) / h` for each `h`.
    pub ratios: Vec<f64>,
}

fn validate_h(h_list: &[f64]) -> Result<()> {
    ensure(!h_list.is_empty(), || "h_list is empty".into())?;
    ensure(h_list.iter().all(|h| *h > 0.0), || {
        "h_list must be positive".into()
    })?;
    ensure(h_list.windows(2).all(|w| w[1] < w[0]), || {
        "h_list must be decreasing".into()
    })
}

/// The ratios trend to zero: the last is within `tol` and the second half
/// of the sequence either does not increase or stays within `tol`.
fn trends_to_zero(ratios: &[f64], tol: f64) -> bool {
    let tail = &ratios[ratios.len() / 2..];
    let last = *ratios.last().expect("nonempty");
    let nonincreasing = tail.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    last <= tol && (nonincreasing || tail.iter().all(|r| *r <= tol))
}

/// Contingent-cone membership of `v` at a boundary point `x` of `conv(S)`:
/// `d(x + h v, conv S) / h` over the decreasing `h_list`. Points outside
/// `conv S` by at most `2·resolution` are first projected onto it.
pub fn contingent_cone_test(
    s: &CompactSet,
    x: &[f64],
    v: &[f64],
    opts: &ConeOptions,
) -> Result<ConeTest> {
    validate_h(&opts.h_list)?;
    ensure(x.len() == s.dim() && v.len() == s.dim(), || {
        "dimension mismatch".into()
    })?;
    let hull = ConvexHull::new(s);
    let slack = (2.0 * s.resolution()).max(1e-9);
    let sd = hull.signed_distance(x);
    ensure(sd <= slack, || {
        format!("point is {sd} outside the set, beyond 2·resolution")
    })?;
    if sd < -slack {
        return Ok(ConeTest {
            tangent: true,
            interior: true,
            ratios: Vec::new(),
        });
    }
    let base = hull.nearest_point(x);
    let ratios: Vec<f64> = opts
        .h_list
        .iter()
        .map(|h| {
            let p: Vec<f64> = base.iter().zip(v).map(|(a, b)| a + h * b).collect();
            hull.distance(&p) / h
        })
        .collect();
    Ok(ConeTest {
        tangent: trends_to_zero(&ratios, opts.tol),
        interior: false,
        ratios,
    })
}

/// A phase-periodic funnel given by sections over one period, linearly
/// interpolated between sections (convex combinations of hulls).
#[derive(Clone, Debug)]
pub struct Funnel {
    phis: Vec<f64>,
    sets: Vec<CompactSet>,
    hulls: Vec<ConvexHull>,
}

impl Funnel {
    /// `slices` must cover `[φ0, φ0 + 2π]` in increasing order. When
    /// `check_periodicity` is set, the first and last sections must agree
    /// within `2h + 1e-9` (with `h` the larger resolution).
    pub fn new(slices: Vec<(f64, CompactSet)>, check_periodicity: bool) -> Result<Self> {
        ensure(slices.len() >= 2, || {
            "a funnel needs at least two sections".into()
        })?;
        ensure(slices.windows(2).all(|w| w[1].0 > w[0].0), || {
            "section phases must increase".into()
        })?;
        let span = slices.last().unwrap().0 - slices[0].0;
        ensure((span - TAU).abs() <= 1e-6, || {
            format!("sections span {span}, not one period 2π")
        })?;
        let dim = slices[0].1.dim();
        ensure(slices.iter().all(|s| s.1.dim() == dim), || {
            "sections differ in dimension".into()
        })?;
        if check_periodicity {
            let (a, b) = (&slices[0].1, &slices.last().unwrap().1);
            let gap = hausdorff(a, b)?;
            let tol = 2.0 * a.resolution().max(b.resolution()) + 1e-9;
            ensure(gap <= tol, || {
                format!("funnel is not periodic: first and last sections differ by {gap}")
            })?;
        }
        let hulls = slices.iter().map(|s| ConvexHull::new(&s.1)).collect();
        let (phis, sets) = slices.into_iter().unzip();
        Ok(Self { phis, sets, hulls })
    }

    /// One period of a phase-parameterized funnel.
    pub fn from_solution(sol: &RfSolution, check_periodicity: bool) -> Result<Self> {
        Self::new(
            sol.slices
                .iter()
                .map(|s| (s.param, s.set.clone()))
                .collect(),
            check_periodicity,
        )
    }

    /// A constant funnel `F_c(φ) ≡ set`.
    pub fn constant(set: CompactSet) -> Result<Self> {
        Self::new(vec![(0.0, set.clone()), (TAU, set)], false)
    }

    pub fn dim(&self) -> usize {
        self.sets[0].dim()
    }

    pub fn sections(&self) -> impl Iterator<Item = (f64, &CompactSet)> {
        self.phis.iter().copied().zip(&self.sets)
    }

    fn wrap(&self, phi: f64) -> f64 {
        let p0 = self.phis[0];
        p0 + (phi - p0).rem_euclid(TAU)
    }

    /// Hull of the interpolated section at `phi` (taken modulo `2π`).
    pub fn hull_at(&self, phi: f64) -> Result<ConvexHull> {
        let p = self.wrap(phi);
        let k = self
            .phis
            .partition_point(|q| *q <= p)
            .saturating_sub(1)
            .min(self.phis.len() - 2);
        let (a, b) = (self.phis[k], self.phis[k + 1]);
        let s = ((p - a) / (b - a)).clamp(0.0, 1.0);
        if s <= 1e-12 {
            return Ok(self.hulls[k].clone());
        }
        if s >= 1.0 - 1e-12 {
            return Ok(self.hulls[k + 1].clone());
        }
        let a_set = self.hulls[k].vertex_set(self.sets[k].resolution());
        let b_set = self.hulls[k + 1].vertex_set(self.sets[k + 1].resolution());
        Ok(ConvexHull::new(&minkowski_combination(&a_set, &b_set, s)?))
    }

    /// Whether `x` lies in the hull of the section at `phi`, within `tol`.
    pub fn contains(&self, phi: f64, x: &[f64], tol: f64) -> Result<bool> {
        Ok(self.hull_at(phi)?.distance(x) <= tol)
    }
}

#[derive(Clone, Debug)]
pub struct FunnelCertOptions {
    pub n_samples: usize,
    pub seed: u64,
    pub slack: f64,
    pub lie: LieOptions,
    pub cone: ConeOptions,
    /// Phases at which boundary points are tested.
    pub n_boundary_phi: usize,
}

impl FunnelCertOptions {
    pub fn new(n_samples: usize, seed: u64) -> Self {
        Self {
            n_samples,
            seed,
            slack: 1e-4,
            lie: LieOptions::new(1e-5),
            cone: ConeOptions::default(),
            n_boundary_phi: 32,
        }
    }
}

/// Contraction margin outside the funnel plus invariance of the funnel:
/// for boundary points `x` of `F_c(φ)` and velocity vertices `v`, the prism
/// direction `(1, v)` must be tangent to the graph of `F_c`, tested through
/// `d(x + h v, F_c(φ + h)) / h → 0`. Passes when the margin is within
/// `slack` and every boundary sample passes.
pub fn certify_funnel(
    cand: &FinslerCandidate,
    field_phi: &SetValuedField,
    funnel: &Funnel,
    sampler: &TangentSampler,
    opts: &FunnelCertOptions,
) -> Result<CertificateReport> {
    validate_h(&opts.cone.h_list)?;
    ensure(funnel.dim() == field_phi.dim(), || {
        "funnel and field differ in dimension".into()
    })?;
    let outside = |phi: f64, x: &[f64]| -> bool {
        funnel.contains(phi, x, 1e-9).map(|c| !c).unwrap_or(false)
    };
    let mut report = margin_samples(
        cand,
        field_phi,
        sampler,
        opts.n_samples,
        opts.seed,
        opts.slack,
        &opts.lie,
        &outside,
    )?;

    let p0 = funnel.phis[0];
    let mut checked = 0;
    let mut passed = 0;
    let mut failure = None;
    for k in 0..opts.n_boundary_phi.max(1) {
        let phi = p0 + TAU * k as f64 / opts.n_boundary_phi.max(1) as f64;
        let hull = funnel.hull_at(phi)?;
        let ahead: Vec<ConvexHull> = opts
            .cone
            .h_list
            .iter()
            .map(|h| funnel.hull_at(phi + h))
            .collect::<Result<_>>()?;
        for x in hull.vertices() {
            for v in field_phi.velocities(phi, x).vertices() {
                let ratios: Vec<f64> = opts
                    .cone
                    .h_list
                    .iter()
                    .zip(&ahead)
                    .map(|(h, next)| {
                        let p: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + h * b).collect();
                        next.distance(&p) / h
                    })
                    .collect();
                checked += 1;
                if trends_to_zero(&ratios, opts.cone.tol) {
                    passed += 1;
                } else if failure.is_none() {
                    failure = Some(BoundaryWitness {
                        phi,
                        x: x.clone(),
                        velocity: v.to_vec(),
                        ratios,
                    });
                }
            }
        }
    }
    let invariance = InvarianceReport {
        checked,
        passed,
        fraction: if checked > 0 {
            passed as f64 / checked as f64
        } else {
            1.0
        },
        failure,
    };
    if report.status == CertStatus::Passed && passed < checked {
        report.status = CertStatus::Failed;
        report.passed = false;
    }
    report.invariance = Some(invariance);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contraction::Alpha;
    use crate::inclusion::VertexSample;
    use crate::reach::{propagate_phase, ReachOptions};

    fn disc() -> CompactSet {
        CompactSet::circle([0.0, 0.0], 1.0, 1000).unwrap()
    }

    #[test]
    fn disc_cone() {
        let o = ConeOptions::default();
        assert!(
            contingent_cone_test(&disc(), &[1.0, 0.0], &[-1.0, 0.0], &o)
                .unwrap()
                .tangent
        );
        assert!(
            !contingent_cone_test(&disc(), &[1.0, 0.0], &[1.0, 0.0], &o)
                .unwrap()
                .tangent
        );
        let t = contingent_cone_test(&disc(), &[1.0, 0.0], &[0.0, 1.0], &o).unwrap();
        assert!(t.tangent, "{:?}", t.ratios);
        let inner = contingent_cone_test(&disc(), &[0.0, 0.0], &[5.0, 0.0], &o).unwrap();
        assert!(inner.tangent && inner.interior);
        assert!(contingent_cone_test(&disc(), &[2.0, 0.0], &[0.0, 1.0], &o).is_err());
    }

    /// Tangent ratio on the exact disc is `(sqrt(1 + h²) - 1) / h`.
    #[test]
    fn tangent_ratio_matches_closed_form() {
        let o = ConeOptions {
            h_list: vec![0.4, 0.2, 0.1],
            tol: 1e-2,
        };
        let t = contingent_cone_test(&disc(), &[1.0, 0.0], &[0.0, 1.0], &o).unwrap();
        for (r, h) in t.ratios.iter().zip(&o.h_list) {
            let exact = ((1.0 + h * h).sqrt() - 1.0) / h;
            assert!((r - exact).abs() < 5e-3, "{r} vs {exact}");
        }
    }

    fn interval() -> CompactSet {
        CompactSet::interval(-1.0, 1.0, 0.01).unwrap()
    }

    fn forced(a: f64, b: f64) -> SetValuedField {
        SetValuedField::new(1, 5.0, a.abs(), move |phi, x| {
            VertexSample::singleton(vec![a * x[0] + b * phi.cos()])
        })
        .unwrap()
    }

    #[test]
    fn invariant_interval_funnel() {
        let cand = FinslerCandidate::quadratic(1, Alpha::Linear(2.0)).unwrap();
        let f = Funnel::constant(interval()).unwrap();
        let s = TangentSampler::new((0.0, TAU), vec![-2.0], vec![2.0]).unwrap();
        let rep = certify_funnel(
            &cand,
            &forced(-1.0, 0.5),
            &f,
            &s,
            &FunnelCertOptions::new(500, 4),
        )
        .unwrap();
        let inv = rep.invariance.clone().unwrap();
        assert_eq!(inv.passed, inv.checked);
        assert!(rep.passed, "{rep:?}");
        // Base points are outside the funnel.
        assert!(rep.witness.unwrap().x[0].abs() > 1.0);

        let bad = certify_funnel(
            &cand,
            &forced(1.0, 0.0),
            &f,
            &s,
            &FunnelCertOptions::new(100, 4),
        )
        .unwrap();
        let inv = bad.invariance.unwrap();
        assert!(inv.passed < inv.checked && !bad.passed);
        assert!((inv.failure.unwrap().x[0].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_periodic_funnel_rejected() {
        let a = (0.0, interval());
        let b = (TAU, CompactSet::interval(-0.5, 0.5, 0.01).unwrap());
        assert!(Funnel::new(vec![a.clone(), b.clone()], true).is_err());
        assert!(Funnel::new(vec![a, b], false).is_ok());
    }

    #[test]
    fn interpolation_between_sections() {
        let f = Funnel::new(
            vec![
                (0.0, CompactSet::interval(-1.0, 1.0, 0.1).unwrap()),
                (TAU / 2.0, CompactSet::interval(0.0, 1.0, 0.1).unwrap()),
                (TAU, CompactSet::interval(-1.0, 1.0, 0.1).unwrap()),
            ],
            true,
        )
        .unwrap();
        let mid = f.hull_at(TAU / 4.0).unwrap();
        assert!(
            (mid.vertices()
                .iter()
                .map(|v| v[0])
                .fold(f64::INFINITY, f64::min)
                + 0.5)
                .abs()
                < 1e-12
        );
        assert!(f.contains(TAU / 4.0 + TAU, &[-0.4], 0.0).unwrap());
        assert!(!f.contains(TAU / 4.0, &[-0.6], 1e-9).unwrap());
    }

    /// A certified funnel keeps propagated sections inside it.
    #[test]
    fn propagated_sections_stay_inside() {
        let field = forced(-1.0, 0.5);
        let f = Funnel::constant(interval()).unwrap();
        let h = 5e-3;
        let r0 = CompactSet::interval(-1.0, 1.0, 0.05).unwrap();
        let sol = propagate_phase(&field, &r0, 0.0, TAU, &ReachOptions::new(1e-2, h)).unwrap();
        for s in &sol.slices {
            let hull = f.hull_at(s.param).unwrap();
            assert!(s.set.points().all(|p| hull.distance(p) <= 2.0 * h));
        }
    }
}
