//! Finsler structures and distances, Lie-derivative contraction
//! certificates, funnel invariance and incremental-stability checks for
//! phase fields `dx/dφ ∈ X_Φ(φ, x)`.

mod finsler;
mod funnel;
mod incremental;
mod lie;

pub use finsler::{
    directed_finsler_hausdorff, finsler_distance, finsler_hausdorff, FinslerStructure, PathOptions,
};
pub use funnel::{
    certify_funnel, contingent_cone_test, ConeOptions, ConeTest, Funnel, FunnelCertOptions,
};
pub use incremental::{
    graph_incremental_distance, simulate_pair, verify_incremental_decay, DecayReport,
};
pub use lie::{
    lie_derivative, lie_derivative_sup, Alpha, FinslerCandidate, LieMode, LieOptions, LieValue,
};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{ensure, Result};
use crate::inclusion::SetValuedField;
use crate::rng::split_seed;

/// Box of base points and phase range from which tangent samples are drawn.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentSampler {
    pub phi: (f64, f64),
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl TangentSampler {
    pub fn new(phi: (f64, f64), lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        ensure(lo.len() == hi.len() && !lo.is_empty(), || {
            "box bounds differ in length".into()
        })?;
        ensure(lo.iter().zip(&hi).all(|(a, b)| a <= b), || {
            "box bounds are inverted".into()
        })?;
        ensure(phi.0 <= phi.1, || "phase range is inverted".into())?;
        Ok(Self { phi, lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    fn base(&self, rng: &mut impl Rng) -> (f64, Vec<f64>) {
        let u = |rng: &mut dyn rand::RngCore, a: f64, b: f64| {
            if a < b {
                rng.gen_range(a..b)
            } else {
                a
            }
        };
        let phi = u(rng, self.phi.0, self.phi.1);
        let x = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| u(rng, *a, *b))
            .collect();
        (phi, x)
    }
}

/// Direction with `F(x, δx) = 1`, uniform in angle.
fn unit_tangent(f: &FinslerStructure, x: &[f64], rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let d: Vec<f64> = (0..x.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = crate::sets::norm(&d);
        if r > 0.1 && r <= 1.0 {
            let s = f.eval(x, &d);
            if s > 0.0 && s.is_finite() {
                return d.iter().map(|v| v / s).collect();
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertStatus {
    Passed,
    Failed,
    /// The sandwich bounds on `V` were violated: the candidate itself is
    /// invalid, whatever the Lie derivative says.
    InvalidCandidate,
}

impl CertStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            Self::Passed => 0,
            Self::Failed => 3,
            Self::InvalidCandidate => 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub phi: f64,
    pub x: Vec<f64>,
    pub dx: Vec<f64>,
    pub velocity: Vec<f64>,
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundaryWitness {
    pub phi: f64,
    pub x: Vec<f64>,
    pub velocity: Vec<f64>,
    pub ratios: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub checked: usize,
    pub passed: usize,
    pub fraction: f64,
    /// First failing boundary sample.
    pub failure: Option<BoundaryWitness>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateReport {
    pub passed: bool,
    pub status: CertStatus,
    /// Largest `L V + α(V)` over the samples.
    pub worst_margin: f64,
    pub witness: Option<Witness>,
    pub samples_used: usize,
    /// Samples dropped because vertex matching was ambiguous.
    pub excluded_samples: usize,
    pub sandwich_violations: usize,
    pub mode: LieMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub invariance: Option<InvarianceReport>,
}

impl CertificateReport {
    pub fn exit_code(&self) -> i32 {
        self.status.exit_code()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

enum Sample {
    Used(Witness),
    Excluded,
    Sandwich,
    Skipped,
}

/// Margin samples over base points accepted by `keep`.
#[allow(clippy::too_many_arguments)]
fn margin_samples(
    cand: &FinslerCandidate,
    field_phi: &SetValuedField,
    sampler: &TangentSampler,
    n_samples: usize,
    seed: u64,
    slack: f64,
    lie: &LieOptions,
    keep: &(dyn Fn(f64, &[f64]) -> bool + Sync),
) -> Result<CertificateReport> {
    ensure(n_samples > 0, || "need at least one sample".into())?;
    ensure(
        sampler.dim() == field_phi.dim() && cand.dim() == field_phi.dim(),
        || "sampler, candidate and field differ in dimension".into(),
    )?;
    let samples: Vec<Sample> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = crate::rng::rng(split_seed(seed, i as u64));
            let mut base = None;
            for _ in 0..200 {
                let (phi, x) = sampler.base(&mut rng);
                if keep(phi, &x) {
                    base = Some((phi, x));
                    break;
                }
            }
            let Some((phi, x)) = base else {
                return Ok(Sample::Skipped);
            };
            let dx = unit_tangent(&cand.finsler, &x, &mut rng);
            if !cand.sandwich_holds(&x, &dx) {
                return Ok(Sample::Sandwich);
            }
            Ok(match lie_derivative(cand, field_phi, phi, &x, &dx, lie)? {
                None => Sample::Excluded,
                Some(l) => {
                    let margin = l.value + cand.alpha.eval(cand.v(&x, &dx));
                    Sample::Used(Witness {
                        phi,
                        x,
                        dx,
                        velocity: l.velocity,
                        margin,
                    })
                }
            })
        })
        .collect::<Result<_>>()?;
    let mut worst: Option<Witness> = None;
    let (mut used, mut excluded, mut sandwich) = (0, 0, 0);
    // Sequential scan: ties resolve to the lowest sample index.
    for s in samples {
        match s {
            Sample::Used(w) => {
                used += 1;
                if worst.as_ref().map_or(true, |b| w.margin > b.margin) {
                    worst = Some(w);
                }
            }
            Sample::Excluded => excluded += 1,
            Sample::Sandwich => sandwich += 1,
            Sample::Skipped => {}
        }
    }
    let worst_margin = worst.as_ref().map_or(f64::NEG_INFINITY, |w| w.margin);
    let status = if sandwich > 0 {
        CertStatus::InvalidCandidate
    } else if worst_margin <= slack {
        CertStatus::Passed
    } else {
        CertStatus::Failed
    };
    Ok(CertificateReport {
        passed: status == CertStatus::Passed,
        status,
        worst_margin,
        witness: worst,
        samples_used: used,
        excluded_samples: excluded,
        sandwich_violations: sandwich,
        mode: lie.mode,
        invariance: None,
    })
}

/// Evaluates `L V + α(V)` at `n_samples` seeded tangent points with
/// `F(x, δx) = 1`; passes when every margin is at most `slack` and the
/// sandwich bounds hold at every sample.
pub fn certify_contraction(
    cand: &FinslerCandidate,
    field_phi: &SetValuedField,
    sampler: &TangentSampler,
    n_samples: usize,
    seed: u64,
    slack: f64,
    lie: &LieOptions,
) -> Result<CertificateReport> {
    margin_samples(
        cand,
        field_phi,
        sampler,
        n_samples,
        seed,
        slack,
        lie,
        &|_, _| true,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inclusion::VertexSample;

    fn linear(a: f64) -> SetValuedField {
        SetValuedField::new(1, 5.0, a.abs(), move |_, x| {
            VertexSample::singleton(vec![a * x[0]])
        })
        .unwrap()
    }

    fn sampler() -> TangentSampler {
        TangentSampler::new((0.0, std::f64::consts::TAU), vec![-2.0], vec![2.0]).unwrap()
    }

    #[test]
    fn contracting_field_passes() {
        let cand = FinslerCandidate::quadratic(1, Alpha::Linear(2.0)).unwrap();
        let rep = certify_contraction(
            &cand,
            &linear(-1.0),
            &sampler(),
            500,
            1,
            1e-4,
            &LieOptions::new(1e-5),
        )
        .unwrap();
        assert!(rep.passed, "{rep:?}");
        assert!(rep.worst_margin.abs() < 1e-4);
        assert_eq!(rep.samples_used, 500);
        assert_eq!(rep.exit_code(), 0);
    }

    #[test]
    fn expanding_field_fails_with_witness() {
        let cand = FinslerCandidate::quadratic(1, Alpha::Linear(2.0)).unwrap();
        let rep = certify_contraction(
            &cand,
            &linear(1.0),
            &sampler(),
            200,
            1,
            1e-4,
            &LieOptions::new(1e-5),
        )
        .unwrap();
        assert!(!rep.passed);
        assert_eq!(rep.exit_code(), 3);
        // Unit tangent: margin = 2δx² + 2δx² = 4.
        assert!((rep.worst_margin - 4.0).abs() < 1e-4);
    }

    #[test]
    fn invalid_candidate_is_distinct() {
        let cand = FinslerCandidate::new(
            FinslerStructure::euclidean(1),
            |_, dx| 3.0 * dx[0] * dx[0],
            2.0,
            1.0,
            2.0,
            Alpha::Zero,
        )
        .unwrap();
        let rep = certify_contraction(
            &cand,
            &linear(-1.0),
            &sampler(),
            50,
            1,
            0.0,
            &LieOptions::new(1e-5),
        )
        .unwrap();
        assert_eq!(rep.status, CertStatus::InvalidCandidate);
        assert_eq!(rep.exit_code(), 4);
    }

    #[test]
    fn weak_mode() {
        let both = SetValuedField::new(1, 5.0, 1.0, |_, x| {
            VertexSample::new(1, vec![-x[0], x[0]], false).unwrap()
        })
        .unwrap();
        let cand = FinslerCandidate::quadratic(1, Alpha::Linear(1.0)).unwrap();
        let s = TangentSampler::new((0.0, 1.0), vec![0.5], vec![2.0]).unwrap();
        let sup =
            certify_contraction(&cand, &both, &s, 100, 3, 1e-6, &LieOptions::new(1e-5)).unwrap();
        let inf = certify_contraction(
            &cand,
            &both,
            &s,
            100,
            3,
            1e-6,
            &LieOptions::new(1e-5).mode(LieMode::Inf),
        )
        .unwrap();
        assert!(!sup.passed && inf.passed);
    }

    #[test]
    fn deterministic_across_runs() {
        let cand = FinslerCandidate::quadratic(1, Alpha::Linear(1.0)).unwrap();
        let a = certify_contraction(
            &cand,
            &linear(0.5),
            &sampler(),
            300,
            9,
            0.0,
            &LieOptions::new(1e-5),
        )
        .unwrap();
        let b = certify_contraction(
            &cand,
            &linear(0.5),
            &sampler(),
            300,
            9,
            0.0,
            &LieOptions::new(1e-5),
        )
        .unwrap();
        assert_eq!(a, b);
    }
}
