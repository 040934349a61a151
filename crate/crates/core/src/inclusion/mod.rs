//! Set-valued vector fields `X(φ, x)`, interval phase velocities `Ω(x)` and
//! the phase-averaged field.

mod average;
mod bounds;
pub mod systems;

pub use average::{average, averaged_field};
pub use bounds::{check_bound, check_periodicity, estimate_lipschitz, theorem1_constant};

use std::fmt;
use std::sync::Arc;

use crate::error::{ensure, Error, Result};
use crate::sets::{dot, CompactSet};

/// Finite vertex encoding of one field value. When `convex` is set the value
/// is read as the convex hull of the vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexSample {
    dim: usize,
    data: Vec<f64>,
    convex: bool,
}

impl VertexSample {
    pub fn new(dim: usize, data: Vec<f64>, convex: bool) -> Result<Self> {
        ensure(dim > 0 && !data.is_empty() && data.len() % dim == 0, || {
            format!(
                "vertex buffer of {} values does not hold dim-{dim} vertices",
                data.len()
            )
        })?;
        ensure(data.iter().all(|v| v.is_finite()), || {
            "non-finite vertex".into()
        })?;
        Ok(Self { dim, data, convex })
    }

    pub fn from_rows(rows: &[Vec<f64>], convex: bool) -> Result<Self> {
        ensure(!rows.is_empty(), || "vertex sample must be nonempty".into())?;
        let dim = rows[0].len();
        ensure(rows.iter().all(|r| r.len() == dim), || {
            "ragged vertex rows".into()
        })?;
        Self::new(dim, rows.concat(), convex)
    }

    pub fn singleton(v: Vec<f64>) -> Self {
        let dim = v.len();
        Self {
            dim,
            data: v,
            convex: true,
        }
    }

    /// `c + [-r, r]^n` on the coordinate axes (cross-polytope vertices).
    pub fn ball_around(c: &[f64], r: f64) -> Self {
        if r == 0.0 {
            return Self::singleton(c.to_vec());
        }
        let n = c.len();
        let mut data = Vec::with_capacity(2 * n * n);
        for k in 0..n {
            for s in [-1.0, 1.0] {
                let mut v = c.to_vec();
                v[k] += s * r;
                data.extend(v);
            }
        }
        Self {
            dim: n,
            data,
            convex: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_convex(&self) -> bool {
        self.convex
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vertices(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn support(&self, d: &[f64]) -> f64 {
        self.vertices()
            .map(|v| dot(v, d))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the first vertex maximizing `<v, d>`.
    pub fn support_index(&self, d: &[f64]) -> usize {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, v) in self.vertices().enumerate() {
            let s = dot(v, d);
            if s > best.1 {
                best = (i, s);
            }
        }
        best.0
    }

    pub fn max_norm(&self) -> f64 {
        self.vertices().map(crate::sets::norm).fold(0.0, f64::max)
    }

    pub fn centroid(&self) -> Vec<f64> {
        let n = self.len() as f64;
        let mut c = vec![0.0; self.dim];
        for v in self.vertices() {
            for (ci, vi) in c.iter_mut().zip(v) {
                *ci += vi / n;
            }
        }
        c
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|v| v * k).collect(),
            convex: self.convex,
        }
    }

    pub fn to_set(&self) -> CompactSet {
        CompactSet::from_flat(self.dim, self.data.clone(), 0.0).expect("validated on construction")
    }
}

type FieldFn = dyn Fn(f64, &[f64]) -> VertexSample + Send + Sync;

/// `X(φ, x)` together with its declared bound, Lipschitz constant and the
/// slow-scale factor `ε`. Velocities handed to integrators are `ε v`.
#[derive(Clone)]
pub struct SetValuedField {
    dim: usize,
    eval: Arc<FieldFn>,
    bound: f64,
    lipschitz: f64,
    epsilon: f64,
}

impl fmt::Debug for SetValuedField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SetValuedField")
            .field("dim", &self.dim)
            .field("bound", &self.bound)
            .field("lipschitz", &self.lipschitz)
            .field("epsilon", &self.epsilon)
            .finish()
    }
}

impl SetValuedField {
    pub fn new(
        dim: usize,
        bound: f64,
        lipschitz: f64,
        eval: impl Fn(f64, &[f64]) -> VertexSample + Send + Sync + 'static,
    ) -> Result<Self> {
        ensure(dim > 0, || "field dimension must be positive".into())?;
        ensure(bound > 0.0 && bound.is_finite(), || {
            format!("bound M_X must be positive, got {bound}")
        })?;
        ensure(lipschitz >= 0.0 && lipschitz.is_finite(), || {
            format!("Lipschitz constant must be nonnegative, got {lipschitz}")
        })?;
        Ok(Self {
            dim,
            eval: Arc::new(eval),
            bound,
            lipschitz,
            epsilon: 1.0,
        })
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        ensure(epsilon > 0.0 && epsilon.is_finite(), || {
            format!("epsilon must be positive, got {epsilon}")
        })?;
        self.epsilon = epsilon;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `X(φ, x)` without the `ε` factor.
    pub fn eval(&self, phi: f64, x: &[f64]) -> VertexSample {
        (self.eval)(phi, x)
    }

    /// `ε X(φ, x)`.
    pub fn velocities(&self, phi: f64, x: &[f64]) -> VertexSample {
        let v = (self.eval)(phi, x);
        if self.epsilon == 1.0 {
            v
        } else {
            v.scaled(self.epsilon)
        }
    }
}

type OmegaFn = dyn Fn(&[f64]) -> (f64, f64) + Send + Sync;

/// Interval phase velocity `Ω(x) = [lo(x), hi(x)]` with `0 < m <= lo <= hi <= M`.
#[derive(Clone)]
pub struct PhaseVelocity {
    eval: Arc<OmegaFn>,
    m: f64,
    big_m: f64,
    lipschitz: f64,
}

impl fmt::Debug for PhaseVelocity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhaseVelocity")
            .field("m", &self.m)
            .field("M", &self.big_m)
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

impl PhaseVelocity {
    pub fn new(
        m: f64,
        big_m: f64,
        lipschitz: f64,
        eval: impl Fn(&[f64]) -> (f64, f64) + Send + Sync + 'static,
    ) -> Result<Self> {
        ensure(m > 0.0 && m <= big_m && big_m.is_finite(), || {
            format!("phase velocity bounds need 0 < m <= M, got m = {m}, M = {big_m}")
        })?;
        ensure(lipschitz >= 0.0, || {
            "phase velocity Lipschitz constant must be nonnegative".into()
        })?;
        Ok(Self {
            eval: Arc::new(eval),
            m,
            big_m,
            lipschitz,
        })
    }

    /// `Ω(x) = [lo, hi]` for every `x`.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(lo, hi, 0.0, move |_| (lo, hi))
    }

    pub fn constant(w: f64) -> Result<Self> {
        Self::interval(w, w)
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn big_m(&self) -> f64 {
        self.big_m
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// `Ω(x)`, checked against the declared bounds.
    pub fn eval(&self, x: &[f64]) -> Result<(f64, f64)> {
        let (lo, hi) = (self.eval)(x);
        let slack = 1e-12 * self.big_m;
        if !(lo <= hi && lo >= self.m - slack && hi <= self.big_m + slack) {
            return Err(Error::PhaseVelocityBounds {
                x: x.to_vec(),
                lo,
                hi,
                m: self.m,
                big_m: self.big_m,
            });
        }
        Ok((lo, hi))
    }

    /// `{lo, mid, hi}` with duplicates removed.
    pub fn samples(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (lo, hi) = self.eval(x)?;
        Ok(if lo == hi {
            vec![lo]
        } else {
            vec![lo, 0.5 * (lo + hi), hi]
        })
    }
}

/// Phase reparameterization `X_Φ(φ, x) = ∪_{1/k ∈ Ω(x)} k ε X(φ, x)`, sampled
/// at `k ∈ {1/ω_hi, 1/ω_mid, 1/ω_lo}`. The result is a field in the phase
/// variable with `ε = 1`.
pub fn phase_field(field: &SetValuedField, omega: &PhaseVelocity) -> Result<SetValuedField> {
    let f = field.clone();
    let w = omega.clone();
    let bound = field.bound() * field.epsilon() / omega.m();
    let lip = field.lipschitz() * field.epsilon() / omega.m()
        + field.bound() * field.epsilon() * omega.lipschitz() / (omega.m() * omega.m());
    SetValuedField::new(field.dim(), bound, lip, move |phi, x| {
        let v = f.velocities(phi, x);
        // Bounds violations surface in the engines, which check Ω first.
        let (lo, hi) = (w.eval)(x);
        if lo == hi {
            return v.scaled(1.0 / lo);
        }
        let ks = [1.0 / hi, 2.0 / (lo + hi), 1.0 / lo];
        let mut data = Vec::with_capacity(3 * v.as_flat().len());
        for k in ks {
            data.extend(v.as_flat().iter().map(|c| c * k));
        }
        VertexSample::new(v.dim(), data, false).expect("scaled vertices stay finite")
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertex_sample_basics() {
        let s = VertexSample::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]], true).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.support(&[0.0, 1.0]), 2.0);
        assert_eq!(s.support_index(&[1.0, 0.0]), 0);
        assert_eq!(s.centroid(), vec![0.5, 1.0]);
        assert!(VertexSample::new(2, vec![1.0], true).is_err());
        assert!(VertexSample::from_rows(&[], true).is_err());
        let b = VertexSample::ball_around(&[1.0], 0.5);
        assert_eq!(b.as_flat(), &[0.5, 1.5]);
    }

    #[test]
    fn phase_velocity_checks_bounds() {
        assert!(PhaseVelocity::interval(0.0, 1.0).is_err());
        assert!(PhaseVelocity::interval(2.0, 1.0).is_err());
        let w = PhaseVelocity::new(1.0, 2.0, 0.0, |x| (x[0], x[0])).unwrap();
        assert!(w.eval(&[1.5]).is_ok());
        assert!(matches!(
            w.eval(&[3.0]),
            Err(Error::PhaseVelocityBounds { .. })
        ));
        assert_eq!(
            PhaseVelocity::interval(1.0, 3.0)
                .unwrap()
                .samples(&[0.0])
                .unwrap(),
            vec![1.0, 2.0, 3.0]
        );
        assert_eq!(
            PhaseVelocity::constant(2.0)
                .unwrap()
                .samples(&[0.0])
                .unwrap(),
            vec![2.0]
        );
    }

    #[test]
    fn phase_field_scales_by_inverse_rate() {
        let f = SetValuedField::new(1, 1.0, 0.0, |_, _| VertexSample::singleton(vec![1.0]))
            .unwrap()
            .with_epsilon(0.5)
            .unwrap();
        let w = PhaseVelocity::interval(1.0, 2.0).unwrap();
        let p = phase_field(&f, &w).unwrap();
        let v = p.eval(0.0, &[0.0]);
        assert_eq!(v.as_flat(), &[0.25, 0.5 / 1.5, 0.5]);
        assert!(!v.is_convex());
        assert_eq!(p.epsilon(), 1.0);
        let c = phase_field(&f, &PhaseVelocity::constant(2.0).unwrap()).unwrap();
        assert_eq!(c.eval(0.0, &[0.0]).as_flat(), &[0.25]);
    }
}
