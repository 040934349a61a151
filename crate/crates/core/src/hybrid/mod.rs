//! Differential-inclusion hybrid systems `ẋ ∈ f(x) + G(x) u` with a guard
//! `s(x) = 0` and a set-valued reset, together with feedback-linearizing,
//! differential and path-integral controllers, event-located simulation and
//! funnel jump-consistency checks.

mod control;
mod jump;
mod simulate;
mod walker;

pub use control::{
    differential_u, feedback_linearizing_u, path_integral_u, Controller, FeedbackLinearizing,
    PathIntegral,
};
pub use jump::{funnel_jump_consistency, Funnel, JumpGrid, JumpReport, JumpWitness};
pub use simulate::{simulate_hybrid, ArcSample, Event, HybridArc, Segment, SimOptions};
pub use walker::{toy_walker, Walker, WalkerConfig, WalkerFunnelConfig};

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{ensure, Error, Result};
use crate::inclusion::VertexSample;

type VertexFn = dyn Fn(&[f64]) -> VertexSample + Send + Sync;
type ScalarFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// How the phase of a state is read.
#[derive(Clone)]
pub enum PhaseMap {
    /// `φ = t`, so `dφ/dt ≡ 1`.
    Time,
    /// `φ = φ_d(x)`, strictly monotone along flows.
    State(Arc<ScalarFn>),
}

/// Flow `ẋ ∈ f(x) + G(x) u` given by drift vertices and input-matrix
/// vertices (row-major `n × m`), guard `s`, reset `Δ` and phase map.
#[derive(Clone)]
pub struct HybridSystem {
    dim: usize,
    n_inputs: usize,
    drift: Arc<VertexFn>,
    input: Arc<VertexFn>,
    guard: Arc<ScalarFn>,
    reset: Arc<VertexFn>,
    phase: PhaseMap,
}

impl fmt::Debug for HybridSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HybridSystem")
            .field("dim", &self.dim)
            .field("n_inputs", &self.n_inputs)
            .field("time_phase", &matches!(self.phase, PhaseMap::Time))
            .finish_non_exhaustive()
    }
}

/// Central-difference step used for gradients of user callables.
pub(crate) const FD_STEP: f64 = 1e-6;

impl HybridSystem {
    /// A system whose phase is time. Use [`HybridSystem::with_phase`] to
    /// read the phase from the state instead.
    pub fn new(
        dim: usize,
        n_inputs: usize,
        drift: impl Fn(&[f64]) -> VertexSample + Send + Sync + 'static,
        input: impl Fn(&[f64]) -> VertexSample + Send + Sync + 'static,
        guard: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        reset: impl Fn(&[f64]) -> VertexSample + Send + Sync + 'static,
    ) -> Result<Self> {
        ensure(dim > 0 && n_inputs > 0, || {
            "state and input dimensions must be positive".into()
        })?;
        Ok(Self {
            dim,
            n_inputs,
            drift: Arc::new(drift),
            input: Arc::new(input),
            guard: Arc::new(guard),
            reset: Arc::new(reset),
            phase: PhaseMap::Time,
        })
    }

    pub fn with_phase(mut self, phase: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.phase = PhaseMap::State(Arc::new(phase));
        self
    }

    /// Same system with another reset map.
    pub fn with_reset(
        mut self,
        reset: impl Fn(&[f64]) -> VertexSample + Send + Sync + 'static,
    ) -> Self {
        self.reset = Arc::new(reset);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn phase_map(&self) -> &PhaseMap {
        &self.phase
    }

    pub fn drift(&self, x: &[f64]) -> Result<VertexSample> {
        let v = (self.drift)(x);
        check_dim(self.dim, v.dim())?;
        Ok(v)
    }

    /// Vertices of `G(x)` as `n × m` matrices.
    pub fn input_matrices(&self, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        let g = (self.input)(x);
        check_dim(self.dim * self.n_inputs, g.dim())?;
        Ok(g.vertices()
            .map(|v| DMatrix::from_row_slice(self.dim, self.n_inputs, v))
            .collect())
    }

    pub fn guard(&self, x: &[f64]) -> f64 {
        (self.guard)(x)
    }

    pub fn reset(&self, x: &[f64]) -> Result<VertexSample> {
        let r = (self.reset)(x);
        check_dim(self.dim, r.dim())?;
        Ok(r)
    }

    /// Phase at time `t` and state `x`.
    pub fn phase(&self, t: f64, x: &[f64]) -> f64 {
        match &self.phase {
            PhaseMap::Time => t,
            PhaseMap::State(f) => f(x),
        }
    }

    /// `f_i(x) + G_j(x) u`.
    pub fn velocity(&self, x: &[f64], u: &[f64], i: usize, j: usize) -> Result<Vec<f64>> {
        let f = self.drift(x)?;
        let g = self.input_matrices(x)?;
        Ok(velocity_of(f.vertex(i), &g[j], u))
    }

    /// All vertex velocities `f_i(x) + G_j(x) u`, drift index major.
    pub fn velocities(&self, x: &[f64], u: &[f64]) -> Result<Vec<Vec<f64>>> {
        check_dim(self.n_inputs, u.len())?;
        let f = self.drift(x)?;
        let g = self.input_matrices(x)?;
        Ok(f.vertices()
            .flat_map(|fi| g.iter().map(move |gj| velocity_of(fi, gj, u)))
            .collect())
    }

    /// Interval `[lo, hi]` of `dφ/dt = ∇φ_d(x) · ẋ` over the vertex
    /// velocities. `[1, 1]` when the phase is time.
    pub fn phase_rate(&self, x: &[f64], u: &[f64]) -> Result<(f64, f64)> {
        let PhaseMap::State(phi) = &self.phase else {
            return Ok((1.0, 1.0));
        };
        let grad = gradient(&**phi, x, FD_STEP);
        let rates: Vec<f64> = self
            .velocities(x, u)?
            .iter()
            .map(|v| crate::sets::dot(&grad, v))
            .collect();
        let lo = rates.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok((lo, hi))
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

fn velocity_of(f: &[f64], g: &DMatrix<f64>, u: &[f64]) -> Vec<f64> {
    f.iter()
        .enumerate()
        .map(|(r, fr)| fr + (0..g.ncols()).map(|c| g[(r, c)] * u[c]).sum::<f64>())
        .collect()
}

/// Central-difference gradient of a scalar function.
pub(crate) fn gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64], step: f64) -> Vec<f64> {
    let mut w = x.to_vec();
    (0..x.len())
        .map(|i| {
            let e = step * (1.0 + x[i].abs());
            w[i] = x[i] + e;
            let fp = f(&w);
            w[i] = x[i] - e;
            let fm = f(&w);
            w[i] = x[i];
            (fp - fm) / (2.0 * e)
        })
        .collect()
}

/// Central-difference Jacobian (`rows = f(x).len()`, `cols = x.len()`).
pub(crate) fn jacobian(f: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64], step: f64) -> DMatrix<f64> {
    let rows = f(x).len();
    let mut jac = DMatrix::zeros(rows, x.len());
    let mut w = x.to_vec();
    for i in 0..x.len() {
        let e = step * (1.0 + x[i].abs());
        w[i] = x[i] + e;
        let fp = f(&w);
        w[i] = x[i] - e;
        let fm = f(&w);
        w[i] = x[i];
        for r in 0..rows {
            jac[(r, i)] = (fp[r] - fm[r]) / (2.0 * e);
        }
    }
    jac
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar() -> HybridSystem {
        HybridSystem::new(
            1,
            1,
            |x| VertexSample::new(1, vec![x[0], 2.0 * x[0]], true).unwrap(),
            |_| VertexSample::singleton(vec![1.0]),
            |x| x[0],
            |_| VertexSample::singleton(vec![0.5]),
        )
        .unwrap()
    }

    #[test]
    fn vertex_velocities() {
        let s = scalar();
        assert_eq!(
            s.velocities(&[1.0], &[3.0]).unwrap(),
            vec![vec![4.0], vec![5.0]]
        );
        assert_eq!(s.phase_rate(&[1.0], &[0.0]).unwrap(), (1.0, 1.0));
        let s = s.with_phase(|x| 2.0 * x[0]);
        let (lo, hi) = s.phase_rate(&[1.0], &[0.0]).unwrap();
        assert!((lo - 2.0).abs() < 1e-8 && (hi - 4.0).abs() < 1e-8);
    }

    #[test]
    fn rejects_wrong_dimensions() {
        let s = HybridSystem::new(
            2,
            1,
            |_| VertexSample::singleton(vec![0.0]),
            |_| VertexSample::singleton(vec![0.0, 1.0]),
            |x| x[0],
            |x| VertexSample::singleton(x.to_vec()),
        )
        .unwrap();
        assert!(matches!(
            s.drift(&[0.0, 0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(s.velocities(&[0.0, 0.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn finite_differences() {
        let g = gradient(&|x: &[f64]| x[0] * x[0] + 3.0 * x[1], &[2.0, 1.0], 1e-6);
        assert!((g[0] - 4.0).abs() < 1e-6 && (g[1] - 3.0).abs() < 1e-6);
        let j = jacobian(&|x: &[f64]| vec![x[0] * x[1], x[1]], &[2.0, 3.0], 1e-6);
        assert!((j[(0, 0)] - 3.0).abs() < 1e-6 && (j[(0, 1)] - 2.0).abs() < 1e-6);
        assert!((j[(1, 1)] - 1.0).abs() < 1e-9 && j[(1, 0)].abs() < 1e-12);
    }
}
