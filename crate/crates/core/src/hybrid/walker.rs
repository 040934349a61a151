use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    funnel_jump_consistency, Controller, Funnel, HybridSystem, JumpGrid, JumpReport, PathIntegral,
};
use crate::contraction::{Alpha, FinslerCandidate};
use crate::error::{ensure, Result};
use crate::inclusion::VertexSample;
use crate::sets::CompactSet;

/// Shape of the shipped walker funnel. Sections are boxes: the leg angle
/// spans `θ_c(φ) ± w(φ)` with `w` linear from `width_start` to `width_end`
/// over one step, and the angular velocity spans
/// `[ω_ref − offset − lower·e^{−decay φ}, ω_ref + offset + upper·e^{−decay φ}]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WalkerFunnelConfig {
    pub eps_phi: f64,
    pub eps_f: f64,
    pub width_start: f64,
    pub width_end: f64,
    pub offset: f64,
    pub upper: f64,
    pub lower: f64,
    pub decay: f64,
    pub n_slices: usize,
    /// Section resolution `h`.
    pub resolution: f64,
}

impl Default for WalkerFunnelConfig {
    fn default() -> Self {
        Self {
            eps_phi: 0.02,
            eps_f: 0.01,
            width_start: 0.07,
            width_end: 0.02,
            offset: 0.012,
            upper: 0.05,
            lower: 0.2,
            decay: 0.3,
            n_slices: 65,
            resolution: 0.01,
        }
    }
}

/// Two-state walker: leg angle `θ` and angular velocity `ω` with
/// `θ̇ = ω`, `ω̇ ∈ g sin θ · [1 − δ, 1 + δ] + u`, guard `θ = θ_g`, reset
/// `(θ, ω) ↦ (−θ, r ω + [−n, n])` and phase `φ = π (θ + θ_g) / θ_g`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WalkerConfig {
    pub theta_g: f64,
    pub gravity: f64,
    pub uncertainty: f64,
    pub restitution: f64,
    pub reset_noise: f64,
    pub omega_ref: f64,
    /// Velocity-tracking gain of the base law `u*`.
    pub gain: f64,
    /// Linear rate `λ` of the quadratic candidate used by the differential
    /// controller.
    pub lambda: f64,
    pub kappa_alpha: f64,
    pub n_seg: usize,
    pub funnel: WalkerFunnelConfig,
}

impl Default for WalkerConfig {
    fn default() -> Self {
        Self {
            theta_g: 0.3,
            gravity: 1.0,
            uncertainty: 0.1,
            restitution: 0.9,
            reset_noise: 0.02,
            omega_ref: 1.0,
            gain: 5.0,
            lambda: 2.0,
            kappa_alpha: 1.0,
            n_seg: 4,
            funnel: WalkerFunnelConfig::default(),
        }
    }
}

impl WalkerConfig {
    fn validate(&self) -> Result<()> {
        let f = &self.funnel;
        ensure(self.theta_g > 0.0 && self.theta_g < PI / 2.0, || {
            "theta_g must lie in (0, pi/2)".into()
        })?;
        ensure(
            [self.gravity, self.omega_ref, self.gain, f.resolution]
                .iter()
                .all(|v| *v > 0.0),
            || "gravity, omega_ref, gain and resolution must be positive".into(),
        )?;
        ensure(
            [
                self.uncertainty,
                self.restitution,
                self.reset_noise,
                self.lambda,
                self.kappa_alpha,
                f.eps_phi,
                f.eps_f,
                f.offset,
                f.upper,
                f.lower,
                f.decay,
            ]
            .iter()
            .all(|v| *v >= 0.0),
            || "walker parameters must be nonnegative".into(),
        )?;
        ensure(f.width_start > 0.0 && f.width_end > 0.0, || {
            "funnel widths must be positive".into()
        })?;
        ensure(f.n_slices >= 2 && self.n_seg > 0, || {
            "need n_slices >= 2 and n_seg > 0".into()
        })?;
        ensure(self.omega_ref - f.offset - f.lower > 0.0, || {
            "the velocity band must stay positive so the phase advances".into()
        })
    }

    /// Reference leg angle at phase `φ`.
    pub fn theta_at(&self, phi: f64) -> f64 {
        self.theta_g * (phi / PI - 1.0)
    }

    pub fn phase_of(&self, x: &[f64]) -> f64 {
        PI * (x[0] + self.theta_g) / self.theta_g
    }

    /// Velocity band `[ω_lo, ω_hi]` of the funnel at `φ`.
    pub fn omega_band(&self, phi: f64) -> (f64, f64) {
        let f = &self.funnel;
        let e = (-f.decay * phi).exp();
        (
            self.omega_ref - f.offset - f.lower * e,
            self.omega_ref + f.offset + f.upper * e,
        )
    }

    fn width_at(&self, phi: f64) -> f64 {
        let f = &self.funnel;
        f.width_start + (f.width_end - f.width_start) * phi / TAU
    }

    fn section(&self, phi: f64) -> Result<CompactSet> {
        let (c, w) = (self.theta_at(phi), self.width_at(phi));
        let (lo, hi) = self.omega_band(phi);
        CompactSet::from_flat(
            2,
            vec![c - w, lo, c + w, lo, c + w, hi, c - w, hi],
            self.funnel.resolution,
        )
    }
}

/// The walker system, its funnel and its quadratic contraction candidate.
#[derive(Clone, Debug)]
pub struct Walker {
    pub config: WalkerConfig,
    pub system: HybridSystem,
    pub funnel: Funnel,
    pub candidate: FinslerCandidate,
}

pub fn toy_walker(config: &WalkerConfig) -> Result<Walker> {
    config.validate()?;
    let c = config.clone();
    let (g, delta, r, noise, theta_g) = (
        c.gravity,
        c.uncertainty,
        c.restitution,
        c.reset_noise,
        c.theta_g,
    );
    let system = HybridSystem::new(
        2,
        1,
        move |x| {
            let a = g * x[0].sin();
            VertexSample::new(
                2,
                vec![x[1], a * (1.0 - delta), x[1], a * (1.0 + delta)],
                true,
            )
            .expect("finite drift")
        },
        |_| VertexSample::singleton(vec![0.0, 1.0]),
        move |x| x[0] - theta_g,
        move |x| {
            VertexSample::new(
                2,
                vec![-x[0], r * x[1] - noise, -x[0], r * x[1] + noise],
                true,
            )
            .expect("finite reset")
        },
    )?
    .with_phase(move |x| PI * (x[0] + theta_g) / theta_g);
    let f = &c.funnel;
    let (lo, hi) = (-f.eps_phi, TAU + f.eps_phi);
    let slices = (0..f.n_slices)
        .map(|i| {
            let phi = lo + (hi - lo) * i as f64 / (f.n_slices - 1) as f64;
            Ok((phi, c.section(phi)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let funnel = Funnel::new(slices, 0.0, TAU, f.eps_phi, f.eps_f)?;
    let candidate = FinslerCandidate::quadratic(2, Alpha::Linear(c.lambda))?;
    Ok(Walker {
        config: c,
        system,
        funnel,
        candidate,
    })
}

impl Walker {
    /// Base law `u* = −g sin θ + k (ω_ref − ω)`: cancels the nominal
    /// (centroid) drift and pulls the velocity to its reference.
    pub fn base_law(&self) -> impl Fn(&[f64], f64) -> Vec<f64> + Send + Sync + 'static {
        let (g, k, w) = (self.config.gravity, self.config.gain, self.config.omega_ref);
        move |x, _| vec![-g * x[0].sin() + k * (w - x[1])]
    }

    /// Controller by name: `path-integral` or `open-loop`.
    pub fn controller(&self, name: &str) -> Result<Controller> {
        match name {
            "path-integral" => Ok(Controller::PathIntegral(PathIntegral::new(
                self.candidate.clone(),
                self.funnel.clone(),
                self.base_law(),
                self.config.kappa_alpha,
                self.config.n_seg,
            )?)),
            "open-loop" => Ok(Controller::OpenLoop),
            other => Err(crate::Error::InvalidInput(format!(
                "unknown walker controller {other:?} (expected path-integral or open-loop)"
            ))),
        }
    }

    /// Jump condition for the walker's own reset.
    pub fn jump_consistency(&self, grid: &JumpGrid) -> Result<JumpReport> {
        let sys = &self.system;
        funnel_jump_consistency(&self.funnel, |x| (sys.reset)(x), grid)
    }

    /// `n` seeded states inside the funnel: phase uniform in `[0, 2π)`,
    /// leg angle on its reference and velocity uniform in the band.
    pub fn initial_states(&self, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = crate::rng::rng(seed);
        (0..n)
            .map(|_| {
                let phi = rng.gen_range(0.0..TAU);
                let (lo, hi) = self.config.omega_band(phi);
                vec![self.config.theta_at(phi), rng.gen_range(lo..=hi)]
            })
            .collect()
    }
}
