use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{gradient, jacobian, Funnel, HybridSystem, FD_STEP};
use crate::contraction::FinslerCandidate;
use crate::error::{ensure, Error, Result};
use crate::sets::{dist2, dot, norm};

/// Largest condition number accepted for the decoupling matrix.
const MAX_COND: f64 = 1e8;
/// Smallest `|B|` for which the differential controller is defined.
const MIN_AUTHORITY: f64 = 1e-10;
/// Steps of the nested finite differences behind `L_f y` and `L_f² y`.
const INNER_STEP: f64 = 1e-5;
const OUTER_STEP: f64 = 1e-4;
/// States this close to their funnel projection count as inside.
const INSIDE_TOL: f64 = 1e-12;

type OutputFn = dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync;
type BaseLaw = dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync;

/// Output `y(x, α)` of relative degree two with gains `Kp`, `Kd` and time
/// scale `κ`.
#[derive(Clone)]
pub struct FeedbackLinearizing {
    output: Arc<OutputFn>,
    pub alpha: Vec<f64>,
    pub kp: f64,
    pub kd: f64,
    pub kappa: f64,
}

impl fmt::Debug for FeedbackLinearizing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FeedbackLinearizing")
            .field("alpha", &self.alpha)
            .field("kp", &self.kp)
            .field("kd", &self.kd)
            .field("kappa", &self.kappa)
            .finish_non_exhaustive()
    }
}

impl FeedbackLinearizing {
    pub fn new(
        output: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
        alpha: Vec<f64>,
        kp: f64,
        kd: f64,
        kappa: f64,
    ) -> Result<Self> {
        ensure(kp >= 0.0 && kd >= 0.0 && kappa > 0.0, || {
            format!("need Kp, Kd >= 0 and kappa > 0, got {kp}, {kd}, {kappa}")
        })?;
        Ok(Self {
            output: Arc::new(output),
            alpha,
            kp,
            kd,
            kappa,
        })
    }

    pub fn output(&self, x: &[f64]) -> Vec<f64> {
        (self.output)(x, &self.alpha)
    }
}

fn drift_centroid(sys: &HybridSystem, x: &[f64]) -> Vec<f64> {
    (sys.drift)(x).centroid()
}

fn input_centroid(sys: &HybridSystem, x: &[f64]) -> Result<DMatrix<f64>> {
    let g = sys.input_matrices(x)?;
    let n = g.len() as f64;
    Ok(g.iter()
        .fold(DMatrix::zeros(sys.dim(), sys.n_inputs()), |acc, m| {
            acc + m / n
        }))
}

/// `u = (L_G L_f y)⁻¹ (−L_f² y − μ)` with `μ = Kp y / κ² + Kd L_f y / κ`.
/// Lie derivatives are taken along the drift centroid (mean of vertices)
/// and the mean input matrix, by nested central differences.
pub fn feedback_linearizing_u(
    sys: &HybridSystem,
    fl: &FeedbackLinearizing,
    x: &[f64],
) -> Result<Vec<f64>> {
    ensure(x.len() == sys.dim(), || "state dimension mismatch".into())?;
    let y0 = fl.output(x);
    ensure(y0.len() == sys.n_inputs(), || {
        format!(
            "output has {} components but the system has {} inputs",
            y0.len(),
            sys.n_inputs()
        )
    })?;
    sys.drift(x)?;
    let y = |z: &[f64]| fl.output(z);
    let lfy = |z: &[f64]| -> Vec<f64> {
        let jy = jacobian(&y, z, INNER_STEP);
        (jy * DVector::from_vec(drift_centroid(sys, z)))
            .as_slice()
            .to_vec()
    };
    let lf = DVector::from_vec(lfy(x));
    let jl = jacobian(&lfy, x, OUTER_STEP);
    let l2f = &jl * DVector::from_vec(drift_centroid(sys, x));
    let decoupling = &jl * input_centroid(sys, x)?;
    let sv = decoupling.singular_values();
    let cond = sv.max() / sv.min();
    if !(cond <= MAX_COND) {
        return Err(Error::Singular {
            x: x.to_vec(),
            cond,
        });
    }
    let k2 = fl.kappa * fl.kappa;
    let mu = DVector::from_vec(y0) * (fl.kp / k2) + &lf * (fl.kd / fl.kappa);
    let rhs = -(l2f + mu);
    let u = decoupling.lu().solve(&rhs).ok_or_else(|| Error::Singular {
        x: x.to_vec(),
        cond,
    })?;
    Ok(u.as_slice().to_vec())
}

/// Min-norm element of `−(B Bᵀ)⁻¹ (A + κ_α α(V)) Bᵀ` with
/// `A = ∂V/∂x · (f + G u) + ∂V/∂δx · F_δ δx` and `B = ∂V/∂δx · G`, all
/// divided by the centroid of the phase-rate interval. `A` is the largest
/// value over drift and input vertices, so `dV/dφ ≤ −κ_α α(V)` holds for
/// every vertex selection.
pub fn differential_u(
    cand: &FinslerCandidate,
    sys: &HybridSystem,
    x: &[f64],
    dx: &[f64],
    u: &[f64],
    kappa_alpha: f64,
) -> Result<Vec<f64>> {
    let n = sys.dim();
    ensure(x.len() == n && dx.len() == n && cand.dim() == n, || {
        "state, tangent and candidate dimensions differ".into()
    })?;
    ensure(u.len() == sys.n_inputs(), || {
        "input dimension mismatch".into()
    })?;
    if dx.iter().all(|v| *v == 0.0) {
        return Ok(vec![0.0; u.len()]);
    }
    let (lo, hi) = sys.phase_rate(x, u)?;
    let d_phi = 0.5 * (lo + hi);
    ensure(d_phi > 0.0, || {
        format!("phase rate [{lo}, {hi}] is not positive at x = {x:?}")
    })?;
    let gx = gradient(&|z: &[f64]| cand.v(z, dx), x, FD_STEP);
    let gd = gradient(&|z: &[f64]| cand.v(x, z), dx, FD_STEP);
    let g_bar = input_centroid(sys, x)?;
    let b: Vec<f64> = (0..u.len())
        .map(|c| (0..n).map(|r| gd[r] * g_bar[(r, c)]).sum::<f64>() / d_phi)
        .collect();
    let bb = dot(&b, &b);
    if bb.sqrt() < MIN_AUTHORITY {
        return Err(Error::Uncontrollable { norm: bb.sqrt() });
    }
    let (nf, ng) = (sys.drift(x)?.len(), sys.input_matrices(x)?.len());
    let mut a = f64::NEG_INFINITY;
    for i in 0..nf {
        for j in 0..ng {
            let vel = |z: &[f64]| -> Vec<f64> {
                let f = (sys.drift)(z);
                let g = sys.input_matrices(z).expect("dimension checked at x");
                super::velocity_of(f.vertex(i), &g[j], u)
            };
            let f_delta = jacobian(&vel, x, FD_STEP);
            let fdx = &f_delta * DVector::from_column_slice(dx);
            let value = dot(&gx, &vel(x)) + dot(&gd, fdx.as_slice());
            a = a.max(value / d_phi);
        }
    }
    let decay = kappa_alpha * cand.alpha.eval(cand.v(x, dx));
    Ok(b.iter().map(|bc| -(a + decay) * bc / bb).collect())
}

/// Funnel-based path-integral controller: `u_b = u*(x*, φ) + ∫₀¹ δu dμ`
/// along the chord `c(μ) = x* + μ (x − x*)`.
#[derive(Clone)]
pub struct PathIntegral {
    pub candidate: FinslerCandidate,
    pub funnel: Funnel,
    u_star: Arc<BaseLaw>,
    pub kappa_alpha: f64,
    pub n_seg: usize,
}

impl fmt::Debug for PathIntegral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PathIntegral")
            .field("candidate", &self.candidate)
            .field("kappa_alpha", &self.kappa_alpha)
            .field("n_seg", &self.n_seg)
            .finish_non_exhaustive()
    }
}

impl PathIntegral {
    pub fn new(
        candidate: FinslerCandidate,
        funnel: Funnel,
        u_star: impl Fn(&[f64], f64) -> Vec<f64> + Send + Sync + 'static,
        kappa_alpha: f64,
        n_seg: usize,
    ) -> Result<Self> {
        ensure(kappa_alpha >= 0.0, || {
            "kappa_alpha must be nonnegative".into()
        })?;
        ensure(n_seg > 0, || "n_seg must be positive".into())?;
        ensure(candidate.dim() == funnel.dim(), || {
            "candidate and funnel differ in dimension".into()
        })?;
        Ok(Self {
            candidate,
            funnel,
            u_star: Arc::new(u_star),
            kappa_alpha,
            n_seg,
        })
    }

    pub fn base_law(&self, x: &[f64], phi: f64) -> Vec<f64> {
        (self.u_star)(x, phi)
    }
}

/// Path-integral input at `(x, φ)`. The anchor `x*` is the point of
/// `conv F_c(φ)` nearest `x`: a boundary point when `x` lies outside, `x`
/// itself inside (where `u_b = u*`). The chord integral is an explicit
/// Euler march in `μ` with `n_seg` steps, threading `u_b` through the
/// integrand.
pub fn path_integral_u(
    sys: &HybridSystem,
    pi: &PathIntegral,
    x: &[f64],
    phi: f64,
) -> Result<Vec<f64>> {
    let hull = pi.funnel.hull_at(phi)?;
    let anchor = hull.nearest_point(x);
    let mut u = pi.base_law(&anchor, phi);
    ensure(u.len() == sys.n_inputs(), || {
        "base law returned the wrong input dimension".into()
    })?;
    // Projection round-off on interior points is not a path.
    if dist2(&anchor, x).sqrt() <= INSIDE_TOL * (1.0 + norm(x)) {
        return Ok(pi.base_law(x, phi));
    }
    let dx: Vec<f64> = x.iter().zip(&anchor).map(|(a, b)| a - b).collect();
    let step = 1.0 / pi.n_seg as f64;
    for k in 0..pi.n_seg {
        let mu = k as f64 * step;
        let c: Vec<f64> = anchor.iter().zip(&dx).map(|(a, d)| a + mu * d).collect();
        let du = differential_u(&pi.candidate, sys, &c, &dx, &u, pi.kappa_alpha)?;
        for (ui, di) in u.iter_mut().zip(du) {
            *ui += step * di;
        }
    }
    Ok(u)
}

/// Input law used by [`super::simulate_hybrid`].
#[derive(Clone, Debug)]
pub enum Controller {
    OpenLoop,
    FeedbackLinearizing(FeedbackLinearizing),
    PathIntegral(PathIntegral),
}

impl Controller {
    pub fn input(&self, sys: &HybridSystem, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Self::OpenLoop => Ok(vec![0.0; sys.n_inputs()]),
            Self::FeedbackLinearizing(fl) => feedback_linearizing_u(sys, fl, x),
            Self::PathIntegral(pi) => path_integral_u(sys, pi, x, sys.phase(t, x)),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::OpenLoop => "open-loop",
            Self::FeedbackLinearizing(_) => "feedback-linearizing",
            Self::PathIntegral(_) => "path-integral",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contraction::Alpha;
    use crate::hybrid::{simulate_hybrid, SimOptions};
    use crate::inclusion::VertexSample;
    use crate::sets::CompactSet;

    /// `q̈ = u` with the clock `φ` as third state, tracking `q_d = sin φ`.
    fn double_integrator() -> HybridSystem {
        HybridSystem::new(
            3,
            1,
            |x| VertexSample::singleton(vec![x[1], 0.0, 1.0]),
            |_| VertexSample::singleton(vec![0.0, 1.0, 0.0]),
            |x| 100.0 - x[2],
            |x| VertexSample::singleton(x.to_vec()),
        )
        .unwrap()
        .with_phase(|x| x[2])
    }

    fn tracking(kp: f64, kd: f64, kappa: f64) -> FeedbackLinearizing {
        FeedbackLinearizing::new(|x, _| vec![x[0] - x[2].sin()], vec![], kp, kd, kappa).unwrap()
    }

    #[test]
    fn pure_feedforward_on_the_constraint() {
        // y = 0 and L_f y = 0: u = q_d'' = -sin φ.
        let phi: f64 = 0.7;
        let x = [phi.sin(), phi.cos(), phi];
        let u = feedback_linearizing_u(&double_integrator(), &tracking(1.0, 1.0, 1.0), &x).unwrap();
        assert!((u[0] + phi.sin()).abs() < 1e-6, "{u:?}");
    }

    #[test]
    fn kappa_scaling_of_the_proportional_term() {
        let sys = double_integrator();
        let x = [0.5, 1.0, 0.0];
        let ff = -0.0f64.sin();
        let u1 = feedback_linearizing_u(&sys, &tracking(3.0, 0.0, 1.0), &x).unwrap()[0] - ff;
        let u2 = feedback_linearizing_u(&sys, &tracking(3.0, 0.0, 0.5), &x).unwrap()[0] - ff;
        assert!((u1 + 1.5).abs() < 1e-6);
        assert!((u2 / u1 - 4.0).abs() < 1e-5);
    }

    #[test]
    fn closed_loop_error_follows_linear_oracle() {
        let sys = double_integrator();
        let ctl = Controller::FeedbackLinearizing(tracking(1.0, 1.0, 1.0));
        let arc =
            simulate_hybrid(&sys, &ctl, &[1.0, 0.0, 0.0], &SimOptions::new(8.0, 1e-3, 0)).unwrap();
        assert!(arc.events.is_empty());
        // y'' + y' + y = 0 with y(0) = 1, y'(0) = -1.
        let w = 3f64.sqrt() / 2.0;
        let oracle = |t: f64| (-0.5 * t).exp() * ((w * t).cos() - (0.5 / w) * (w * t).sin());
        for s in arc.segments[0].samples.iter().step_by(500) {
            let y = s.x[0] - s.x[2].sin();
            assert!(
                (y - oracle(s.t)).abs() < 5e-3,
                "t = {}: {y} vs {}",
                s.t,
                oracle(s.t)
            );
        }
        let last = arc.segments[0].samples.last().unwrap();
        assert!((last.x[0] - last.x[2].sin()).abs() < 0.05);
    }

    #[test]
    fn singular_decoupling_is_reported() {
        let sys = HybridSystem::new(
            3,
            1,
            |x| VertexSample::singleton(vec![x[1], 0.0, 1.0]),
            |_| VertexSample::singleton(vec![0.0, 0.0, 0.0]),
            |x| 100.0 - x[2],
            |x| VertexSample::singleton(x.to_vec()),
        )
        .unwrap();
        let err = feedback_linearizing_u(&sys, &tracking(1.0, 1.0, 1.0), &[0.0, 0.0, 0.0]);
        assert!(matches!(err, Err(Error::Singular { .. })));
    }

    /// `ẋ = a x + (1 + c x) u` with phase equal to time.
    fn scalar(a: f64, c: f64) -> HybridSystem {
        HybridSystem::new(
            1,
            1,
            move |x| VertexSample::singleton(vec![a * x[0]]),
            move |x| VertexSample::singleton(vec![1.0 + c * x[0]]),
            |_| 1.0,
            |x| VertexSample::singleton(x.to_vec()),
        )
        .unwrap()
    }

    fn quad(rate: f64) -> FinslerCandidate {
        FinslerCandidate::quadratic(1, Alpha::Linear(rate)).unwrap()
    }

    #[test]
    fn differential_scalar_example() {
        // V = δx², a = g = δx = 1, α(V) = 2V: A = 2, B = 2, δu = -2.
        let du =
            differential_u(&quad(2.0), &scalar(1.0, 0.0), &[0.3], &[1.0], &[0.0], 1.0).unwrap();
        assert!((du[0] + 2.0).abs() < 1e-6, "{du:?}");
        let zero =
            differential_u(&quad(2.0), &scalar(1.0, 0.0), &[0.3], &[0.0], &[0.0], 1.0).unwrap();
        assert_eq!(zero, vec![0.0]);
    }

    #[test]
    fn differential_alpha_term_is_linear() {
        let sys = scalar(0.0, 0.0);
        let d1 = differential_u(&quad(2.0), &sys, &[0.0], &[0.5], &[0.0], 1.0).unwrap()[0];
        let d2 = differential_u(&quad(2.0), &sys, &[0.0], &[0.5], &[0.0], 2.0).unwrap()[0];
        assert!((d2 / d1 - 2.0).abs() < 1e-6);
    }

    #[test]
    fn differential_worst_vertex_and_authority() {
        let sys = HybridSystem::new(
            1,
            1,
            |x| VertexSample::new(1, vec![-x[0], x[0]], true).unwrap(),
            |_| VertexSample::singleton(vec![1.0]),
            |_| 1.0,
            |x| VertexSample::singleton(x.to_vec()),
        )
        .unwrap();
        // Worst vertex has slope +1, as in the a = 1 example.
        let du = differential_u(&quad(2.0), &sys, &[0.2], &[1.0], &[0.0], 1.0).unwrap();
        assert!((du[0] + 2.0).abs() < 1e-6);
        let blind = HybridSystem::new(
            1,
            1,
            |x| VertexSample::singleton(vec![x[0]]),
            |_| VertexSample::singleton(vec![0.0]),
            |_| 1.0,
            |x| VertexSample::singleton(x.to_vec()),
        )
        .unwrap();
        assert!(matches!(
            differential_u(&quad(2.0), &blind, &[0.0], &[1.0], &[0.0], 1.0),
            Err(Error::Uncontrollable { .. })
        ));
    }

    #[test]
    fn phase_division_keeps_the_decay_in_phase() {
        // With φ = 2x the phase rate doubles; dV/dφ must still equal -α(V).
        let sys = scalar(1.0, 0.0).with_phase(|x| 2.0 * x[0]);
        let x = [0.5];
        let du = differential_u(&quad(2.0), &sys, &x, &[1.0], &[1.0], 1.0).unwrap()[0];
        // ẋ = x + u = 1.5, φ̇ = 3; A = 2 / 3, B = 2 / 3.
        assert!((du - (-(2.0 / 3.0 + 2.0) * (2.0 / 3.0) / (4.0 / 9.0))).abs() < 1e-5);
    }

    fn interval_funnel(lo: f64, hi: f64) -> Funnel {
        Funnel::constant(
            CompactSet::new(1, &[vec![lo], vec![hi]]).unwrap(),
            0.0,
            1.0,
            0.1,
            0.1,
        )
        .unwrap()
    }

    fn controller(kappa: f64, base: f64, n_seg: usize) -> PathIntegral {
        PathIntegral::new(
            quad(2.0),
            interval_funnel(-0.5, 0.0),
            move |_, _| vec![base],
            kappa,
            n_seg,
        )
        .unwrap()
    }

    #[test]
    fn path_integral_zero_length() {
        let sys = scalar(1.0, 1.0);
        let pi = controller(1.0, 0.25, 8);
        assert_eq!(
            path_integral_u(&sys, &pi, &[-0.2], 0.5).unwrap(),
            vec![0.25]
        );
        assert_eq!(path_integral_u(&sys, &pi, &[0.0], 0.5).unwrap(), vec![0.25]);
    }

    #[test]
    fn path_integral_matches_bilinear_oracle() {
        // δu = -δx (a + κ + u) / (1 + c): u(1) = (a + κ + u*)(1 + x*)/(1 + x) - a - κ.
        let sys = scalar(1.0, 1.0);
        let oracle = 2.0 * 1.0 / 2.0 - 2.0;
        let gap = |n| {
            (path_integral_u(&sys, &controller(1.0, 0.0, n), &[1.0], 0.5).unwrap()[0] - oracle)
                .abs()
        };
        let (g1, g2) = (gap(64), gap(128));
        assert!(g1 < 2e-2, "{g1}");
        assert!((g1 / g2 - 2.0).abs() < 0.1, "{g1} {g2}");
    }

    #[test]
    fn path_integral_reduces_to_state_feedback() {
        // κ_α = 0, u* = 0, G ≡ 1: u_b = -a (x - x*).
        let sys = scalar(0.7, 0.0);
        let u = path_integral_u(&sys, &controller(0.0, 0.0, 4), &[0.8], 0.5).unwrap()[0];
        assert!((u + 0.7 * 0.8).abs() < 1e-6, "{u}");
    }
}
